"""Campaign metrics and experiment drivers for attacks and defenses."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .attack import AttackConfig, AttackOutcome, attack
from .corpus import WordView, contains_letter
from .errors import EmptyInput, EncodingFailure, NotCorrectlyPredicted, NoValidExamples
from .normalize import NormalizingScorer


@dataclass
class AttackCampaignResult:
    outcomes: list[AttackOutcome]
    n_correct_pre: int
    n_flipped: int
    n_excluded: int
    mean_queries: float


def run_campaign(scorer, inputs, config: AttackConfig, index=None) -> AttackCampaignResult:
    """Attack every (text, label) pair; mispredicted inputs are excluded."""
    outcomes: list[AttackOutcome] = []
    excluded = 0
    for text, label in inputs:
        try:
            outcomes.append(attack(scorer, text, label, config, index))
        except NotCorrectlyPredicted:
            excluded += 1
    queries = sum(outcome.queries_used for outcome in outcomes)
    return AttackCampaignResult(
        outcomes=outcomes,
        n_correct_pre=len(outcomes),
        n_flipped=sum(1 for outcome in outcomes if outcome.success),
        n_excluded=excluded,
        mean_queries=queries / len(outcomes) if outcomes else 0.0,
    )


def atk_rate(result: AttackCampaignResult) -> float:
    """Flipped over correctly-predicted-pre-attack."""
    if result.n_correct_pre == 0:
        raise NoValidExamples("no input was correctly predicted before the attack")
    return result.n_flipped / result.n_correct_pre


def wild_coverage(perturbations, records, min_sources: int = 1) -> tuple[float, int, int]:
    """Fraction of ``perturbations`` present (case-insensitively) among
    corpus tokens written by at least ``min_sources`` distinct sources.

    Returns ``(fraction, matched, total)``.
    """
    perturbations = list(perturbations)
    if not perturbations:
        raise EmptyInput("no perturbations to check")
    reference = {
        record.token.casefold() for record in records if record.sources >= min_sources
    }
    matched = sum(1 for p in perturbations if p.casefold() in reference)
    return matched / len(perturbations), matched, len(perturbations)


def _perturb_text(text: str, index, fraction: float, rng: random.Random, k: int, d: int) -> str:
    view = WordView(text)
    positions = [p for p in range(len(view)) if contains_letter(view.core(p))]
    n_replace = int(fraction * len(positions))
    if n_replace == 0:
        return text
    for position in sorted(rng.sample(positions, n_replace)):
        core = view.core(position)
        try:
            pool = index.retrieve(core, k, d)
        except EncodingFailure:
            continue
        pool.discard(core)
        if not pool:
            continue
        view.replace_core(position, rng.choice(sorted(pool)))
    return view.text()


def precision_under_perturbation(
    scorer,
    positives,
    index,
    positive_label,
    fractions=(0.0, 0.25, 0.5),
    seed: int = 0,
    k: int = 1,
    d: int = 1,
) -> dict[float, float]:
    """Share of positive texts still classified positive after replacing a
    fraction of their words with sampled retrieval candidates.

    Word positions and candidates are drawn from ``random.Random`` seeded
    with ``seed`` and the fraction, so every fraction is reproducible on its
    own. Words with no candidates stay unchanged.
    """
    positives = list(positives)
    if not positives:
        raise EmptyInput("no positive texts")
    names = list(scorer.label_names)
    if positive_label not in names:
        raise ValueError(f"label {positive_label!r} not in scorer labels {names}")
    positive_idx = names.index(positive_label)

    out: dict[float, float] = {}
    for fraction in fractions:
        if not 0.0 <= fraction <= 1.0:
            raise ValueError(f"fractions must be in [0, 1], got {fraction}")
        rng = random.Random(f"{seed}|{fraction!r}")
        perturbed = [_perturb_text(text, index, fraction, rng, k, d) for text in positives]
        vectors = scorer.score(perturbed)
        still_positive = sum(
            1 for vector in vectors if max(range(len(vector)), key=vector.__getitem__) == positive_idx
        )
        out[fraction] = still_positive / len(positives)
    return out


@dataclass
class GridCell:
    attack: str
    defense: str
    atk_rate: float
    n: int
    mean_queries: float


def defense_grid(attacks, defenses, inputs, index=None) -> list[GridCell]:
    """Cross every attack config with every (name, scorer, stack) defense.

    A defense with a stack gets the stack applied to each scorer query
    inside the attack loop. ``stack`` may be ``None`` for an undefended
    baseline.
    """
    cells: list[GridCell] = []
    for config in attacks:
        for name, scorer, stack in defenses:
            defended = NormalizingScorer(scorer, stack) if stack is not None else scorer
            result = run_campaign(defended, inputs, config, index)
            cells.append(
                GridCell(
                    attack=config.label,
                    defense=name,
                    atk_rate=atk_rate(result),
                    n=result.n_correct_pre,
                    mean_queries=result.mean_queries,
                )
            )
    return cells


def grid_to_tsv(cells) -> str:
    """Render grid cells as TSV with a fixed header; rates use 4 decimals."""
    lines = ["attack\tdefense\tatk_rate\tn\tmean_queries"]
    for cell in cells:
        lines.append(
            f"{cell.attack}\t{cell.defense}\t{cell.atk_rate:.4f}\t{cell.n}\t{cell.mean_queries:.2f}"
        )
    return "\n".join(lines) + "\n"


__all__ = [
    "AttackCampaignResult",
    "GridCell",
    "atk_rate",
    "defense_grid",
    "grid_to_tsv",
    "precision_under_perturbation",
    "run_campaign",
    "wild_coverage",
]
