"""Command-line front end.

Every subcommand is a thin shell over the library: data goes to the output
stream (or file, written atomically), diagnostics go to stderr. Exit codes:
0 on success, 1 on domain errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import itertools
import os
import random
import sys
from pathlib import Path

from . import evaluation, models
from .attack import AttackConfig
from .corpus import ingest, read_corpus
from .errors import PerturbMineError
from .index import PerturbationIndex
from .models import LabeledDataset, NaiveBayesTextScorer, RemoteScorer, SoundInvariantScorer
from .normalize import NormalizerStack, load_dictionary

INDEX_ENV_VAR = "ANTHRO_INDEX"


def _atomic_write_text(path: str, text: str) -> None:
    target = Path(path)
    tmp = target.with_name(f"{target.name}.tmp.{os.getpid()}")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, target)


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        _atomic_write_text(out, text)


def _resolve_index_path(parser: argparse.ArgumentParser, args) -> str:
    path = args.index or os.environ.get(INDEX_ENV_VAR)
    if not path:
        parser.error(f"--index is required (or set {INDEX_ENV_VAR})")
    return path


def _load_scorer(parser: argparse.ArgumentParser, spec: str, labels: str | None):
    kind, sep, rest = spec.partition(":")
    if not sep or not rest:
        parser.error("--scorer must look like local:MODEL.json or remote:URL")
    if kind == "local":
        return models.load_scorer(rest)
    if kind == "remote":
        names = [item for item in (labels or "").split(",") if item]
        if not names:
            parser.error("remote scorers need --labels (comma-separated label names)")
        return RemoteScorer(rest, label_names=names)
    parser.error(f"unknown scorer kind {kind!r}; expected local: or remote:")


def _cmd_mine(parser, args) -> int:
    rows = itertools.chain.from_iterable(read_corpus(path, tsv=args.tsv) for path in args.input)
    counts = ingest(rows)
    built = PerturbationIndex(
        max_level=args.max_level,
        min_frequency=args.min_freq,
        min_sources=args.min_sources,
    ).fit(counts)
    built.save(args.output)
    print(f"tokens\t{built.n_tokens_}")
    for level, n_buckets in enumerate(built.bucket_counts()):
        print(f"buckets[{level}]\t{n_buckets}")
    return 0


def _cmd_query(parser, args) -> int:
    built = PerturbationIndex.load(_resolve_index_path(parser, args))
    found = built.retrieve(args.word, k=args.k, d=args.d)
    for token in sorted(found, key=lambda t: (-built.frequency(t), t)):
        print(f"{token}\t{built.frequency(token)}")
    return 0


def _cmd_train(parser, args) -> int:
    dataset = LabeledDataset.from_tsv(args.inputs)
    if args.phonetic_level is not None:
        scorer = SoundInvariantScorer(level=args.phonetic_level, smoothing=args.smoothing)
    else:
        scorer = NaiveBayesTextScorer(case_sensitive=args.case_sensitive, smoothing=args.smoothing)
    scorer.fit(dataset.texts, dataset.labels)
    scorer.save(args.output)
    print(f"examples\t{len(dataset)}", file=sys.stderr)
    print(f"labels\t{','.join(scorer.label_names)}", file=sys.stderr)
    return 0


def _cmd_attack(parser, args) -> int:
    built = PerturbationIndex.load(_resolve_index_path(parser, args))
    scorer = _load_scorer(parser, args.scorer, args.labels)
    config = AttackConfig(
        mode=args.mode,
        k=args.k,
        d=args.d,
        max_candidates_per_word=args.max_candidates,
        max_words_perturbed=args.max_words,
    )
    dataset = LabeledDataset.from_tsv(args.inputs)
    examples = dataset.examples
    if args.max_examples is not None and args.max_examples < len(examples):
        examples = random.Random(args.seed).sample(examples, args.max_examples)
    result = evaluation.run_campaign(scorer, examples, config, built)
    lines = "".join(outcome.to_json_line() + "\n" for outcome in result.outcomes)
    _emit(lines, args.out)
    rate = result.n_flipped / result.n_correct_pre if result.n_correct_pre else float("nan")
    print(
        f"attacked={result.n_correct_pre} flipped={result.n_flipped} "
        f"excluded={result.n_excluded} atk_rate={rate:.4f} "
        f"mean_queries={result.mean_queries:.2f}",
        file=sys.stderr,
    )
    return 0


def _parse_stages(parser, text: str, dictionary_path: str | None, p_distance: int = 2):
    name = text.replace(",", "").strip()
    if name in ("", "none"):
        return None
    for stage in name:
        if stage not in ("a", "h", "p"):
            parser.error(f"unknown normalizer stage {stage!r} in {text!r}")
    dictionary = None
    if "p" in name:
        if not dictionary_path:
            parser.error("stage 'p' requires --dict")
        dictionary = load_dictionary(dictionary_path)
    return NormalizerStack(stages=name, dictionary=dictionary, p_max_distance=p_distance)


def _cmd_normalize(parser, args) -> int:
    stack = _parse_stages(parser, args.stages, args.dict, args.p_distance)
    if args.input:
        lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    else:
        lines = (line.rstrip("\n") for line in sys.stdin)
    out_lines = []
    for line in lines:
        out_lines.append((stack.normalize_text(line) if stack else line) + "\n")
    _emit("".join(out_lines), args.output)
    return 0


def _cmd_eval_grid(parser, args) -> int:
    built = PerturbationIndex.load(_resolve_index_path(parser, args))
    scorer = _load_scorer(parser, args.scorer, args.labels)
    dataset = LabeledDataset.from_tsv(args.inputs)
    attacks = [
        AttackConfig(mode=mode, k=args.k, d=args.d)
        for mode in args.modes.split(",")
        if mode
    ]
    defenses = []
    for name in args.defenses.split(","):
        stack = _parse_stages(parser, name, args.dict)
        defenses.append((name or "none", scorer, stack))
    cells = evaluation.defense_grid(attacks, defenses, dataset.examples, built)
    _emit(evaluation.grid_to_tsv(cells), args.out)
    return 0


def _cmd_eval_coverage(parser, args) -> int:
    perturbations = [
        line.strip()
        for line in Path(args.perturbations).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    counts = ingest(read_corpus(args.reference, tsv=args.tsv))
    fraction, matched, total = evaluation.wild_coverage(
        perturbations, counts.records(), min_sources=args.min_sources
    )
    _emit(f"fraction\tmatched\ttotal\n{fraction:.4f}\t{matched}\t{total}\n", args.out)
    return 0


def _cmd_eval_precision(parser, args) -> int:
    built = PerturbationIndex.load(_resolve_index_path(parser, args))
    scorer = _load_scorer(parser, args.scorer, args.labels)
    positives = [
        line
        for line in Path(args.positives).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    fractions = tuple(float(f) for f in args.fractions.split(",") if f)
    curve = evaluation.precision_under_perturbation(
        scorer,
        positives,
        built,
        args.positive_label,
        fractions=fractions,
        seed=args.seed,
        k=args.k,
        d=args.d,
    )
    rows = "".join(f"{fraction:g}\t{precision:.4f}\n" for fraction, precision in curve.items())
    _emit("fraction\tprecision\n" + rows, args.out)
    return 0


def _cmd_serve_stub(parser, args) -> int:
    scorer = models.load_scorer(args.model)
    server = models.serve_scorer(scorer, host=args.host, port=args.port)
    host, port = server.server_address[:2]
    print(f"listening on {host}:{port}", file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perturbmine",
        description="Mine, retrieve and weaponize human-written text perturbations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_index_flag(p):
        p.add_argument("--index", help=f"index file (default: ${INDEX_ENV_VAR})")

    def add_scorer_flags(p):
        p.add_argument("--scorer", required=True, help="local:MODEL.json or remote:URL")
        p.add_argument("--labels", help="label names for remote scorers, comma-separated")

    p = sub.add_parser("mine", help="build an index from corpus files")
    p.add_argument("--input", action="append", required=True, help="corpus file (.gz ok); repeatable")
    p.add_argument("--output", required=True, help="index file to write")
    p.add_argument("--max-level", type=int, default=2)
    p.add_argument("--min-freq", type=int, default=1)
    p.add_argument("--min-sources", type=int, default=1)
    p.add_argument("--tsv", action="store_true", help="inputs are text<TAB>source-id")
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("query", help="retrieve sound/spelling neighbors of a word")
    add_index_flag(p)
    p.add_argument("--word", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("train", help="train a local scorer from label<TAB>text data")
    p.add_argument("--inputs", required=True)
    p.add_argument("--output", required=True, help="model file to write")
    p.add_argument("--case-sensitive", action="store_true")
    p.add_argument("--phonetic-level", type=int, default=None, help="train on sound codes at this level")
    p.add_argument("--smoothing", type=float, default=1.0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("attack", help="attack a scorer over labeled inputs")
    add_index_flag(p)
    add_scorer_flags(p)
    p.add_argument("--inputs", required=True, help="label<TAB>text file")
    p.add_argument("--out", default="-", help="JSON-lines report ('-' for stdout)")
    p.add_argument("--mode", choices=("anthro", "bugs", "beta"), default="anthro")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--max-candidates", type=int, default=50)
    p.add_argument("--max-words", type=int, default=None)
    p.add_argument("--max-examples", type=int, default=None, help="attack a seeded sample this big")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("normalize", help="normalize a text stream")
    p.add_argument("--stages", required=True, help="e.g. a,h,p (commas optional)")
    p.add_argument("--dict", help="word<TAB>frequency dictionary for stage p")
    p.add_argument("--d", dest="p_distance", type=int, default=2, help="max edit distance for stage p")
    p.add_argument("--input", help="input file (default: stdin)")
    p.add_argument("--output", default="-")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("eval", help="metrics and experiment grids")
    eval_sub = p.add_subparsers(dest="eval_command", required=True)

    p_grid = eval_sub.add_parser("grid", help="attack modes x defenses TSV")
    add_index_flag(p_grid)
    add_scorer_flags(p_grid)
    p_grid.add_argument("--inputs", required=True, help="label<TAB>text file")
    p_grid.add_argument("--modes", default="anthro,bugs,beta")
    p_grid.add_argument("--defenses", default="none,ah", help="comma list of stage strings or 'none'")
    p_grid.add_argument("--dict", help="dictionary for defenses containing stage p")
    p_grid.add_argument("--k", type=int, default=1)
    p_grid.add_argument("--d", type=int, default=1)
    p_grid.add_argument("--out", default="-")
    p_grid.set_defaults(func=_cmd_eval_grid)

    p_cov = eval_sub.add_parser("coverage", help="share of perturbations found in a corpus")
    p_cov.add_argument("--perturbations", required=True, help="one token per line")
    p_cov.add_argument("--reference", required=True, help="corpus file")
    p_cov.add_argument("--tsv", action="store_true")
    p_cov.add_argument("--min-sources", type=int, default=1)
    p_cov.add_argument("--out", default="-")
    p_cov.set_defaults(func=_cmd_eval_coverage)

    p_prec = eval_sub.add_parser("precision", help="precision under random perturbation")
    add_index_flag(p_prec)
    add_scorer_flags(p_prec)
    p_prec.add_argument("--positives", required=True, help="one text per line")
    p_prec.add_argument("--positive-label", required=True)
    p_prec.add_argument("--fractions", default="0,0.25,0.5")
    p_prec.add_argument("--seed", type=int, default=0)
    p_prec.add_argument("--k", type=int, default=1)
    p_prec.add_argument("--d", type=int, default=1)
    p_prec.add_argument("--out", default="-")
    p_prec.set_defaults(func=_cmd_eval_precision)

    p = sub.add_parser("serve-stub", help="serve a local model over the wire protocol")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=_cmd_serve_stub)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except PerturbMineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
