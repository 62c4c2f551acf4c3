"""End-to-end acceptance checks.

Each test prints exactly one line, ``ACCEPTANCE <n> <name>: PASS|FAIL``,
so a log scrape shows the full scorecard. Stated tolerances are asserted
as written; time budgets are wall-clock on commodity hardware.

Run with output visible: pytest tests/test_acceptance.py -v -s
"""

import json
import random
import string
import subprocess
import sys
import time
from contextlib import contextmanager

import pytest

import perturbmine as pm
from perturbmine import (
    AttackConfig,
    NaiveBayesTextScorer,
    NormalizerStack,
    NormalizingScorer,
    PerturbationIndex,
    RemoteScorer,
    SoundInvariantScorer,
    atk_rate,
    attack,
    augment_adversarial,
    candidates,
    encode,
    ingest,
    levenshtein_ci,
    precision_under_perturbation,
    run_campaign,
)

from conftest import CAPTION_SENTENCES, make_paired_texts


@contextmanager
def criterion(number: int, name: str):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} {name}: FAIL")
        raise
    else:
        elapsed = time.perf_counter() - started
        print(f"ACCEPTANCE {number} {name}: PASS ({elapsed:.2f}s)")


def test_criterion_1_golden_encoder_suite():
    goldens = [
        ("porn", 0, "P650"),
        ("porn", 1, "PO650"),
        ("p0rn", 0, "P650"),
        ("p0rn", 1, "PO650"),
        ("the", 1, "TH000"),
        ("democrats", 1, "DE5263"),
        ("demokRATs", 1, "DE5263"),
        ("are", 1, "AR000"),
        ("arre", 1, "AR000"),
        ("dirty", 1, "DI630"),
        ("dirrrty", 1, "DI630"),
        ("not", 1, "NO300"),
    ]
    with criterion(1, "golden-encoder-suite"):
        started = time.perf_counter()
        for word, k, expected in goldens:
            assert encode(word, k).code == expected, (word, k)
        assert time.perf_counter() - started < 1.0


def test_criterion_2_two_sentence_end_to_end():
    with criterion(2, "two-sentence-index"):
        index = PerturbationIndex(max_level=1).fit(ingest(CAPTION_SENTENCES))
        assert index.tables_[1] == {
            "AR000": ["are", "arre"],
            "DE5263": ["democrats", "demokRATs"],
            "DI630": ["dirrrty", "dirty"],
            "NO300": ["not"],
            "TH000": ["the"],
        }
        assert index.retrieve("democrats", k=1, d=1) == {"democrats", "demokRATs"}
        assert index.retrieve("dirty", k=1, d=2) == {"dirty", "dirrrty"}


def _synthetic_corpus(rng, n_tokens):
    alphabet = string.ascii_lowercase[:12]
    vocab = []
    for _ in range(600):
        word = "".join(rng.choice(alphabet) for _ in range(rng.randint(2, 10)))
        if rng.random() < 0.2:
            word = word.capitalize()
        if rng.random() < 0.1:
            word = word.replace("o", "0", 1)
        vocab.append(word)
    lines, emitted = [], 0
    while emitted < n_tokens:
        take = min(rng.randint(4, 12), n_tokens - emitted)
        lines.append(" ".join(rng.choices(vocab, k=take)))
        emitted += take
    return lines


def test_criterion_3_retrieval_oracle_equivalence():
    with criterion(3, "retrieval-oracle-equivalence"):
        started = time.perf_counter()
        rng = random.Random(0xACCE55)
        for trial in range(20):
            counts = ingest(_synthetic_corpus(rng, rng.randint(2000, 10000)))
            index = PerturbationIndex(max_level=2).fit(counts)
            tokens = [r.token for r in counts.records()]
            codes = {k: {t: encode(t, k).code for t in tokens} for k in range(3)}
            for _ in range(100):
                query = rng.choice(tokens)
                k, d = rng.randint(0, 2), rng.randint(0, 2)
                query_code = encode(query, k).code
                expected = {
                    t for t in tokens
                    if codes[k][t] == query_code and levenshtein_ci(query, t, limit=d) <= d
                }
                got = index.retrieve(query, k=k, d=d)
                assert got == expected, (trial, query, k, d)
        assert time.perf_counter() - started < 60.0


def test_criterion_4_property_suites(rigged, tmp_path):
    rng = random.Random(0x1A4)
    letters = string.ascii_lowercase
    consonants = "bcdfgjklmnpqrstvxz"
    confusable_for = {"o": "0", "l": "1", "e": "3", "s": "5", "t": "7", "a": "@", "i": "!"}

    with criterion(4, "property-suites"):
        # encoder case invariance, 1000 cases
        for _ in range(1000):
            word = "".join(rng.choice(letters) for _ in range(rng.randint(2, 12)))
            k = rng.randint(0, 3)
            cased = "".join(c.upper() if rng.random() < 0.5 else c for c in word)
            assert encode(word, k) == encode(cased, k)

        # encoder confusable invariance, 1000 cases
        for _ in range(1000):
            word = "".join(rng.choice(letters) for _ in range(rng.randint(2, 12)))
            k = rng.randint(0, 3)
            swapped = "".join(
                confusable_for.get(c, c) if rng.random() < 0.4 else c for c in word
            )
            assert encode(word, k) == encode(swapped, k)

        # encoder repeat invariance (duplication at positions past the prefix), 1000 cases
        checked = 0
        while checked < 1000:
            word = "".join(rng.choice(letters) for _ in range(rng.randint(3, 12)))
            k = rng.randint(0, 2)
            spots = [i for i in range(k, len(word)) if word[i] in consonants]
            if not spots:
                continue
            i = rng.choice(spots)
            doubled = word[:i] + word[i] * rng.randint(2, 4) + word[i + 1:]
            assert encode(word, k) == encode(doubled, k)
            checked += 1

        # retrieval monotone in d, antitone in k
        counts = ingest(_synthetic_corpus(rng, 4000))
        index = PerturbationIndex(max_level=2).fit(counts)
        tokens = [r.token for r in counts.records()]
        for _ in range(200):
            query = rng.choice(tokens)
            for k in range(3):
                sizes = [len(index.retrieve(query, k=k, d=d)) for d in range(3)]
                assert sizes == sorted(sizes)
            for d in range(3):
                by_level = [index.retrieve(query, k=k, d=d) for k in range(3)]
                assert by_level[2] <= by_level[1] <= by_level[0]

        # index round-trip byte identity
        first, second = tmp_path / "first.idx", tmp_path / "second.idx"
        index.save(first)
        PerturbationIndex.load(first).save(second)
        assert first.read_bytes() == second.read_bytes()

        # attack query budget and monotone probability on the rigged world
        class Counting:
            def __init__(self, inner):
                self.inner, self.queries = inner, 0

            @property
            def label_names(self):
                return self.inner.label_names

            def score(self, texts):
                self.queries += len(texts)
                return self.inner.score(texts)

        toxic_idx = rigged.scorer.label_names.index("toxic")
        config = AttackConfig(mode="beta", k=1, d=1)
        for text, label in rigged.held[:25]:
            counting = Counting(rigged.scorer)
            outcome = attack(counting, text, label, config, rigged.index)
            assert outcome.queries_used == counting.queries
            view = pm.WordView(text)
            words = [view.core(i) for i in range(len(view)) if pm.contains_letter(view.core(i))]
            budget = 1 + len(words) + sum(
                len(candidates(w, config, rigged.index)) for w in words
            )
            assert outcome.queries_used <= budget
            probs = [outcome.original_probability]
            for edit in outcome.edits:
                view.replace_core(edit.position, edit.replacement)
                probs.append(rigged.scorer.score([view.text()])[0][toxic_idx])
            assert all(b < a for a, b in zip(probs, probs[1:]))

        # normalizer idempotence
        pool = "abels01!$@éрі ABC.,"
        dictionary = {"ables": 4, "stupid": 9}
        for _ in range(300):
            text = "".join(rng.choice(pool) for _ in range(rng.randint(0, 24)))
            once_a = pm.normalize_accents(text)
            assert pm.normalize_accents(once_a) == once_a
            once_h = pm.normalize_homoglyphs(text)
            assert pm.normalize_homoglyphs(once_h) == once_h
            once_p = pm.correct_spelling(text, dictionary)
            assert pm.correct_spelling(once_p, dictionary) == once_p

        # probability simplex on every scorer output
        scorers = [
            rigged.scorer,
            SoundInvariantScorer(level=1).fit(rigged.texts, rigged.labels),
            NaiveBayesTextScorer(case_sensitive=True).fit(rigged.texts, rigged.labels),
        ]
        queries = [text for text, _ in rigged.held[:100]] + ["", "zz unseen !!"]
        for scorer in scorers:
            for row in scorer.score(queries):
                assert all(p >= 0.0 for p in row)
                assert abs(sum(row) - 1.0) <= 1e-9


def test_criterion_5_attack_efficacy(rigged):
    with criterion(5, "attack-efficacy"):
        started = time.perf_counter()
        rates = {}
        for mode in ("anthro", "bugs", "beta"):
            result = run_campaign(rigged.scorer, rigged.held, AttackConfig(mode=mode, k=1, d=1), rigged.index)
            assert len(rigged.held) == 200
            rates[mode] = atk_rate(result)
        assert rates["anthro"] >= 0.9
        assert rates["beta"] >= rates["anthro"]
        assert rates["beta"] >= rates["bugs"]
        assert time.perf_counter() - started < 30.0


def test_criterion_6_defenses(rigged):
    with criterion(6, "defense-properties"):
        started = time.perf_counter()

        # (a) homoglyph folding shuts down confusable-substitution bugs
        sub_only = AttackConfig(mode="bugs", bug_kinds=("substitute",))
        defended = NormalizingScorer(rigged.scorer, NormalizerStack(stages="h"))
        h_result = run_campaign(defended, rigged.held, sub_only, rigged.index)
        assert atk_rate(h_result) <= 0.05

        # (b) sound-invariant scorer at the attack's k
        sound = SoundInvariantScorer(level=1).fit(rigged.texts, rigged.labels)
        anthro_result = run_campaign(sound, rigged.held, AttackConfig(mode="anthro", k=1, d=1), rigged.index)
        assert atk_rate(anthro_result) <= 0.05
        beta_result = run_campaign(sound, rigged.held, AttackConfig(mode="beta", k=1, d=1), rigged.index)
        assert atk_rate(beta_result) >= 0.5

        # (c) adversarial training at ratio 1:1
        config = AttackConfig(mode="anthro", k=1, d=1)
        pre = atk_rate(run_campaign(rigged.scorer, rigged.held, config, rigged.index))
        augmented = augment_adversarial(rigged.train, rigged.index, rigged.scorer, config, ratio=1.0)
        retrained = NaiveBayesTextScorer().fit(augmented.texts, augmented.labels)
        post = atk_rate(run_campaign(retrained, rigged.held, config, rigged.index))
        assert (pre - post) / pre >= 0.30

        assert time.perf_counter() - started < 120.0


def test_criterion_7_precision_curve_shape(rigged):
    with criterion(7, "precision-curve-shape"):
        fractions = (0.0, 0.25, 0.5)
        surface = NaiveBayesTextScorer(case_sensitive=True).fit(rigged.texts, rigged.labels)
        curve = precision_under_perturbation(
            surface, rigged.held_texts, rigged.index, "toxic",
            fractions=fractions, seed=13, k=1, d=1,
        )
        values = [curve[f] for f in fractions]
        assert values == sorted(values, reverse=True)
        assert values[0] > values[-1]  # it actually deteriorates

        sound = SoundInvariantScorer(level=1).fit(rigged.texts, rigged.labels)
        flat = precision_under_perturbation(
            sound, rigged.held_texts, rigged.index, "toxic",
            fractions=fractions, seed=13, k=1, d=1,
        )
        assert flat[0.0] == flat[0.25] == flat[0.5]


def _million_token_corpus():
    rng = random.Random(0xB16)
    alphabet = string.ascii_lowercase
    seen = set()
    vocab = []
    while len(vocab) < 100_000:
        word = "".join(rng.choice(alphabet) for _ in range(rng.randint(4, 11)))
        if word not in seen:
            seen.add(word)
            vocab.append(word)
    lines = []
    # every vocab word appears at least once, then random filler to 1M tokens
    for start in range(0, len(vocab), 10):
        lines.append(" ".join(vocab[start:start + 10]))
    emitted = len(vocab)
    while emitted < 1_000_000:
        take = min(10, 1_000_000 - emitted)
        lines.append(" ".join(rng.choices(vocab, k=take)))
        emitted += take
    return vocab, lines


def test_criterion_8_performance():
    with criterion(8, "mining-and-retrieval-speed"):
        vocab, lines = _million_token_corpus()

        started = time.perf_counter()
        index = PerturbationIndex(max_level=2).fit(ingest(lines))
        mining_elapsed = time.perf_counter() - started
        assert mining_elapsed < 30.0
        assert index.n_tokens_ >= 100_000

        rng = random.Random(0xFA57)
        queries = [rng.choice(vocab) for _ in range(10_000)]
        started = time.perf_counter()
        for query in queries:
            index.retrieve(query, k=1, d=1)
        per_query = (time.perf_counter() - started) / len(queries)
        assert per_query < 1e-3


def test_criterion_9_wire_protocol(rigged, tmp_path):
    with criterion(9, "wire-protocol-round-trip"):
        model_path = tmp_path / "model.json"
        rigged.scorer.save(model_path)
        texts = [text for text, _ in rigged.held] * 5  # 1000 texts
        assert len(texts) == 1000

        proc = subprocess.Popen(
            [sys.executable, "-m", "perturbmine", "serve-stub",
             "--model", str(model_path), "--port", "0"],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
        )
        try:
            banner = proc.stderr.readline()
            assert banner.startswith("listening on ")
            port = int(banner.strip().rsplit(":", 1)[1])
            remote = RemoteScorer(f"http://127.0.0.1:{port}", label_names=rigged.scorer.label_names)
            got = remote.score(texts)
            expected = rigged.scorer.score(texts)
            assert len(got) == len(expected)
            for remote_row, local_row in zip(got, expected):
                for a, b in zip(remote_row, local_row):
                    assert abs(a - b) <= 1e-9
        finally:
            proc.terminate()
            proc.wait(timeout=10)
