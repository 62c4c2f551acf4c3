"""Greedy black-box word-replacement attack.

Words are ranked by how much deleting them drops the scorer's probability
for the true label, then visited in that order. For each word the candidate
replacement that minimizes the true-label probability is kept, but only if
it strictly decreases it; the attack stops as soon as the argmax label
flips. Candidates come from the mined index ("anthro"), from enumerated
character bugs ("bugs"), or from both ("beta").

Every step is deterministic: candidate batches are scored in sorted order
and ties are broken by the lexicographically smaller candidate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .corpus import WordView, contains_letter
from .errors import EncodingFailure, NotCorrectlyPredicted
from .phonetic import DEFAULT_FOLD_TABLE

_MODES = ("anthro", "bugs", "beta")
_BUG_KINDS = ("space", "delete", "swap", "substitute")

# Reverse fold table: letter -> the confusables that imitate it.
_CONFUSABLES_FOR: dict[str, tuple[str, ...]] = {}
for _src, _dst in sorted(DEFAULT_FOLD_TABLE.items()):
    _CONFUSABLES_FOR.setdefault(_dst, ())
    _CONFUSABLES_FOR[_dst] = _CONFUSABLES_FOR[_dst] + (_src,)


@dataclass(frozen=True)
class AttackConfig:
    """Search-space knobs for one attack run.

    ``bug_kinds`` narrows the enumerated bug classes, e.g. to study
    confusable substitutions in isolation.
    """

    mode: str = "anthro"
    k: int = 1
    d: int = 1
    max_candidates_per_word: int | None = 50
    max_words_perturbed: int | None = None
    bug_kinds: tuple[str, ...] = _BUG_KINDS

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.k < 0 or self.d < 0:
            raise ValueError("k and d must be >= 0")
        if self.max_candidates_per_word is not None and self.max_candidates_per_word < 1:
            raise ValueError("max_candidates_per_word must be >= 1 or None")
        if self.max_words_perturbed is not None and self.max_words_perturbed < 1:
            raise ValueError("max_words_perturbed must be >= 1 or None")
        unknown = set(self.bug_kinds) - set(_BUG_KINDS)
        if unknown:
            raise ValueError(f"unknown bug kinds: {sorted(unknown)}")

    @property
    def label(self) -> str:
        return f"{self.mode}[k={self.k},d={self.d}]"


@dataclass(frozen=True)
class Edit:
    position: int
    original: str
    replacement: str


@dataclass
class AttackOutcome:
    """Result of attacking one text; serializes to one JSON-lines row."""

    original: str
    perturbed: str | None
    edits: list[Edit] = field(default_factory=list)
    queries_used: int = 0
    original_probability: float = 0.0
    final_probability: float = 0.0
    success: bool = False

    def to_json(self) -> dict:
        row = {
            "original": self.original,
            "edits": [
                {"position": e.position, "original": e.original, "replacement": e.replacement}
                for e in self.edits
            ],
            "queries_used": self.queries_used,
            "original_probability": self.original_probability,
            "final_probability": self.final_probability,
            "success": self.success,
        }
        if self.perturbed is not None:
            row["perturbed"] = self.perturbed
        return row

    def to_json_line(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False)


def _argmax(vector) -> int:
    best = 0
    for i in range(1, len(vector)):
        if vector[i] > vector[best]:
            best = i
    return best


def _resolve_label(scorer, true_label) -> int:
    if isinstance(true_label, int):
        if true_label < 0:
            raise ValueError(f"label index must be >= 0, got {true_label}")
        return true_label
    names = getattr(scorer, "label_names", None)
    if names is None:
        raise ValueError("scorer exposes no label names; pass an integer label index")
    names = list(names)
    if true_label not in names:
        raise ValueError(f"label {true_label!r} not in scorer labels {names}")
    return names.index(true_label)


def char_bugs(word: str, kinds: tuple[str, ...] = _BUG_KINDS) -> set[str]:
    """All single-edit bugs of ``word``: interior space insertions, single
    deletions, adjacent swaps and confusable substitutions.

    Substitutions touch lowercase letters only, so homoglyph normalization
    can invert them exactly.

    >>> sorted(char_bugs("ab"))
    ['@b', 'a', 'a b', 'b', 'ba']
    """
    out: set[str] = set()
    n = len(word)
    if "space" in kinds:
        for i in range(1, n):
            out.add(word[:i] + " " + word[i:])
    if "delete" in kinds:
        for i in range(n):
            out.add(word[:i] + word[i + 1 :])
    if "swap" in kinds:
        for i in range(n - 1):
            if word[i] != word[i + 1]:
                out.add(word[:i] + word[i + 1] + word[i] + word[i + 2 :])
    if "substitute" in kinds:
        for i, ch in enumerate(word):
            for confusable in _CONFUSABLES_FOR.get(ch, ()):
                out.add(word[:i] + confusable + word[i + 1 :])
    out.discard(word)
    out.discard("")
    return out


def candidates(word: str, config: AttackConfig, index=None) -> set[str]:
    """Replacement candidates for one word under ``config``.

    Mined candidates are the index retrieval at (k, d) minus the word
    itself; bug candidates are the deterministic enumeration. When the set
    is truncated, indexed tokens rank first by descending frequency.
    """
    mined: dict[str, int] = {}
    if config.mode in ("anthro", "beta"):
        if index is None:
            raise ValueError(f"{config.mode} mode requires an index")
        try:
            found = index.retrieve(word, config.k, config.d)
        except EncodingFailure:
            found = set()
        found.discard(word)
        mined = {token: index.frequency(token) for token in found}
    bugs: set[str] = set()
    if config.mode in ("bugs", "beta"):
        bugs = char_bugs(word, config.bug_kinds)
    ranked = sorted(mined, key=lambda t: (-mined[t], t))
    ranked.extend(sorted(bugs - mined.keys()))
    if config.max_candidates_per_word is not None:
        ranked = ranked[: config.max_candidates_per_word]
    return set(ranked)


def _deletion_importances(scorer, view: WordView, positions: list[int], label_idx: int, base: float):
    if not positions:
        return []
    vectors = scorer.score([view.without(p) for p in positions])
    return [(p, base - vectors[i][label_idx]) for i, p in enumerate(positions)]


def score_words(scorer, text: str, true_label) -> list[tuple[int, float]]:
    """Deletion-based importance of each letter-bearing word of ``text``.

    Importance is P(true label | text) minus the same probability with the
    word removed; results keep text order.
    """
    label_idx = _resolve_label(scorer, true_label)
    view = WordView(text)
    positions = [p for p in range(len(view)) if contains_letter(view.core(p))]
    base = scorer.score([text])[0][label_idx]
    return _deletion_importances(scorer, view, positions, label_idx, base)


def attack(scorer, text: str, true_label, config: AttackConfig, index=None) -> AttackOutcome:
    """Perturb ``text`` until the scorer's argmax label flips, greedily.

    Raises :class:`NotCorrectlyPredicted` when the scorer already mislabels
    the input. On failure the outcome keeps any accepted edits and reports
    ``perturbed`` as absent.
    """
    label_idx = _resolve_label(scorer, true_label)
    view = WordView(text)
    queries = 0

    base_vector = scorer.score([text])[0]
    queries += 1
    if _argmax(base_vector) != label_idx:
        raise NotCorrectlyPredicted(
            f"scorer predicts label {_argmax(base_vector)}, not {true_label!r}: {text!r}"
        )
    original_probability = base_vector[label_idx]
    current = original_probability

    positions = [p for p in range(len(view)) if contains_letter(view.core(p))]
    importances = _deletion_importances(scorer, view, positions, label_idx, original_probability)
    queries += len(positions)
    importances.sort(key=lambda item: (-item[1], item[0]))

    edits: list[Edit] = []
    success = False
    for position, _ in importances:
        if config.max_words_perturbed is not None and len(edits) >= config.max_words_perturbed:
            break
        core = view.core(position)
        pool = sorted(candidates(core, config, index))
        if not pool:
            continue
        vectors = scorer.score([view.preview(position, c) for c in pool])
        queries += len(pool)
        best = min(range(len(pool)), key=lambda i: (vectors[i][label_idx], pool[i]))
        best_probability = vectors[best][label_idx]
        if best_probability < current:
            view.replace_core(position, pool[best])
            edits.append(Edit(position=position, original=core, replacement=pool[best]))
            current = best_probability
            if _argmax(vectors[best]) != label_idx:
                success = True
                break

    return AttackOutcome(
        original=text,
        perturbed=view.text() if success else None,
        edits=edits,
        queries_used=queries,
        original_probability=original_probability,
        final_probability=current,
        success=success,
    )
