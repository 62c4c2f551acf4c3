"""Input normalizers that undo common character-level perturbations.

Three stages compose in any order:

- ``a`` strips accents ("clever" with dots stays "clever"),
- ``h`` rewrites homoglyphs and confusables to the ASCII letters they
  imitate ("he11o" -> "hello"), preserving case where the source has one,
- ``p`` replaces out-of-dictionary words with the most frequent dictionary
  word within a small edit distance.

Wrapping a scorer with :class:`NormalizingScorer` applies a stage stack to
every query, which is how the defenses are evaluated.
"""

from __future__ import annotations

import unicodedata
from pathlib import Path

from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import WordView, contains_letter
from .distance import levenshtein_ci
from .errors import FormatError, IoFailure
from .phonetic import DEFAULT_FOLD_TABLE

_STAGES = ("a", "h", "p")

# Unicode characters commonly dropped in for ASCII letters. Cased sources
# map to the matching case of their target.
HOMOGLYPH_SUPPLEMENT: dict[str, str] = {
    # Cyrillic
    "а": "a", "е": "e", "о": "o", "р": "p", "с": "c", "у": "y", "х": "x",
    "і": "i", "ѕ": "s", "ј": "j", "ԁ": "d", "ԛ": "q", "ԝ": "w",
    "А": "A", "В": "B", "С": "C", "Е": "E", "К": "K", "М": "M", "Н": "H",
    "О": "O", "Р": "P", "Т": "T", "Х": "X", "Ѕ": "S", "І": "I", "Ј": "J",
    "Ԛ": "Q", "Ԝ": "W",
    # Greek
    "α": "a", "ο": "o", "ν": "v", "ι": "i", "ρ": "p", "υ": "u",
    "Α": "A", "Β": "B", "Ε": "E", "Ζ": "Z", "Η": "H", "Ι": "I", "Κ": "K",
    "Μ": "M", "Ν": "N", "Ο": "O", "Ρ": "P", "Τ": "T", "Υ": "Y", "Χ": "X",
    # Latin lookalikes
    "ı": "i", "ℓ": "l",
}
# Fullwidth forms
for _i in range(26):
    HOMOGLYPH_SUPPLEMENT[chr(0xFF21 + _i)] = chr(ord("A") + _i)
    HOMOGLYPH_SUPPLEMENT[chr(0xFF41 + _i)] = chr(ord("a") + _i)


def _homoglyph_translation(fold_table: dict[str, str]) -> dict[int, str]:
    trans: dict[int, str] = {}
    for src, dst in HOMOGLYPH_SUPPLEMENT.items():
        trans[ord(src)] = dst
    for src, dst in fold_table.items():
        trans[ord(src)] = dst
        upper_src, upper_dst = src.upper(), dst.upper()
        if upper_src != src and len(upper_src) == 1:
            trans.setdefault(ord(upper_src), upper_dst)
    return trans


_DEFAULT_HOMOGLYPHS = _homoglyph_translation(DEFAULT_FOLD_TABLE)


def normalize_accents(text: str) -> str:
    """Strip combining marks; letters without an ASCII base pass through."""
    decomposed = unicodedata.normalize("NFD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


def normalize_homoglyphs(text: str, fold_table: dict[str, str] | None = None) -> str:
    """Rewrite confusable characters to the ASCII letters they imitate.

    >>> normalize_homoglyphs("he11o")
    'hello'
    >>> normalize_homoglyphs("mor0ns")
    'morons'
    """
    if fold_table is None:
        return text.translate(_DEFAULT_HOMOGLYPHS)
    return text.translate(_homoglyph_translation(fold_table))


def load_dictionary(path: str | Path) -> dict[str, int]:
    """Read a ``word<TAB>frequency`` dictionary, casefolding and summing."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read dictionary {path}: {exc}") from exc
    out: dict[str, int] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected word<TAB>frequency")
        word, freq_s = parts
        try:
            freq = int(freq_s)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: bad frequency {freq_s!r}") from exc
        if freq < 1:
            raise FormatError(f"{path}:{lineno}: frequency must be >= 1")
        key = word.casefold()
        out[key] = out.get(key, 0) + freq
    return out


def _best_correction(word: str, dictionary: dict[str, int], max_distance: int) -> str | None:
    length = len(word)
    best: tuple[int, str] | None = None
    for entry, freq in dictionary.items():
        if abs(len(entry) - length) > max_distance:
            continue
        if levenshtein_ci(word, entry, limit=max_distance) > max_distance:
            continue
        key = (-freq, entry)
        if best is None or key < best:
            best = key
    return best[1] if best else None


def correct_spelling(text: str, dictionary: dict[str, int], max_distance: int = 2) -> str:
    """Replace out-of-dictionary words with the highest-frequency dictionary
    word within ``max_distance`` (ties break lexicographically).

    Dictionary membership is case-folded; in-dictionary words and words with
    no close entry pass through untouched, as does edge punctuation.
    """
    if not dictionary:
        raise ValueError("dictionary is empty")
    if max_distance < 0:
        raise ValueError(f"max_distance must be >= 0, got {max_distance}")
    view = WordView(text)
    for position in range(len(view)):
        core = view.core(position)
        if not core or not contains_letter(core):
            continue
        if core.casefold() in dictionary:
            continue
        replacement = _best_correction(core, dictionary, max_distance)
        if replacement is not None:
            view.replace_core(position, replacement)
    return view.text()


class NormalizerStack(TransformerMixin, BaseEstimator):
    """Ordered normalization pipeline over stages ``a``, ``h`` and ``p``.

    ``stages`` is a string like ``"ah"`` or a sequence of stage names, applied
    left to right. Stage ``p`` requires a dictionary. Every stage is
    idempotent with the built-in tables, so is the stack.
    """

    def __init__(
        self,
        stages="ah",
        dictionary: dict[str, int] | None = None,
        p_max_distance: int = 2,
        fold_table: dict[str, str] | None = None,
    ):
        self.stages = stages
        self.dictionary = dictionary
        self.p_max_distance = p_max_distance
        self.fold_table = fold_table

    def _stage_list(self) -> list[str]:
        stages = list(self.stages)
        for stage in stages:
            if stage not in _STAGES:
                raise ValueError(f"unknown stage {stage!r}; expected ones of {_STAGES}")
        if "p" in stages and not self.dictionary:
            raise ValueError("stage 'p' requires a non-empty dictionary")
        return stages

    def fit(self, X=None, y=None) -> "NormalizerStack":
        self._stage_list()
        return self

    def normalize_text(self, text: str) -> str:
        for stage in self._stage_list():
            if stage == "a":
                text = normalize_accents(text)
            elif stage == "h":
                text = normalize_homoglyphs(text, self.fold_table)
            else:
                text = correct_spelling(text, self.dictionary, self.p_max_distance)
        return text

    def transform(self, X) -> list[str]:
        if isinstance(X, str):
            raise TypeError("expected a sequence of texts, got a single string")
        return [self.normalize_text(text) for text in X]


class NormalizingScorer:
    """Scorer wrapper that normalizes every query before delegating."""

    def __init__(self, scorer, stack: NormalizerStack):
        self._scorer = scorer
        self._stack = stack

    @property
    def label_names(self):
        return self._scorer.label_names

    def score(self, texts) -> list[list[float]]:
        return self._scorer.score(self._stack.transform(list(texts)))
