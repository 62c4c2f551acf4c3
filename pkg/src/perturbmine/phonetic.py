"""Hierarchical sound codes for words, robust to visual character tricks.

A word is first folded: accents are stripped, visually confusable
characters ("0", "@", "!", ...) are rewritten to the letters they imitate,
and anything that is not alphanumeric is dropped. The fold makes "p0rn"
and "porn" indistinguishable before any sound coding happens.

The code at level ``k`` keeps the first ``k + 1`` letters verbatim and
maps the rest onto the classic consonant classes::

    b f p v      -> 1        d t -> 3        m n -> 5
    c g j k q    -> 2        l   -> 4        r   -> 6
    s x z
    a e i o u y h w -> dropped

Adjacent characters sharing a class collapse into one digit, including a
leading remainder character that shares the class of the last verbatim
letter. The digit tail is zero-padded to three digits and truncated at
four. Higher levels therefore refine lower ones:

>>> encode("porn", 0).code
'P650'
>>> encode("porn", 1).code
'PO650'
>>> encode("p0rn", 1).code
'PO650'

All functions here are pure and safe to call from multiple threads.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyAfterFold, FormatError, IoFailure

# Built-in fold table: visually confusable character -> the ASCII letter it
# stands in for. Loadable overrides use the same shape (see load_fold_table).
DEFAULT_FOLD_TABLE: dict[str, str] = {
    "0": "o",
    "1": "l",
    "3": "e",
    "5": "s",
    "7": "t",
    "@": "a",
    "$": "s",
    "!": "i",
    "|": "l",
}

_CONSONANT_CODES = {
    "B": "1", "F": "1", "P": "1", "V": "1",
    "C": "2", "G": "2", "J": "2", "K": "2", "Q": "2", "S": "2", "X": "2", "Z": "2",
    "D": "3", "T": "3",
    "L": "4",
    "M": "5", "N": "5",
}
_CONSONANT_CODES["R"] = "6"

_SUFFIX_PAD = 3
_SUFFIX_MAX = 4


@dataclass(frozen=True, slots=True)
class PhoneticCode:
    """A level-tagged code: verbatim letter prefix plus digit tail."""

    level: int
    code: str

    @property
    def alpha_prefix(self) -> str:
        return self.code[: len(self.code) - len(self.digit_suffix)]

    @property
    def digit_suffix(self) -> str:
        i = len(self.code)
        while i > 0 and self.code[i - 1].isdigit():
            i -= 1
        return self.code[i:]


def _compile_table(table: dict[str, str]) -> dict[int, str]:
    trans: dict[int, str] = {}
    for src, dst in table.items():
        if len(src) != 1:
            raise ValueError(f"fold table keys must be single characters, got {src!r}")
        if len(dst) != 1 or not (dst.isascii() and dst.isalpha() and dst.islower()):
            raise ValueError(f"fold table values must be lowercase ASCII letters, got {dst!r}")
        trans[ord(src)] = dst
        # Cased sources fold their case variants too unless mapped explicitly.
        for variant in (src.upper(), src.lower()):
            if variant != src and len(variant) == 1:
                trans.setdefault(ord(variant), dst)
    return trans


_DEFAULT_TRANSLATION = _compile_table(DEFAULT_FOLD_TABLE)


def fold_visual(word: str, table: dict[str, str] | None = None) -> str:
    """Strip accents, rewrite confusables to letters, drop the rest, uppercase.

    >>> fold_visual("p0rn")
    'PORN'
    >>> fold_visual("sh•t")
    'SHT'
    """
    trans = _DEFAULT_TRANSLATION if table is None else _compile_table(table)
    if not word.isascii():
        decomposed = unicodedata.normalize("NFD", word)
        word = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    word = word.translate(trans)
    return "".join(ch for ch in word if ch.isalnum()).upper()


def _cleaned_letters(word: str, table: dict[str, str] | None = None) -> str:
    folded = fold_visual(word, table)
    if folded.isalpha():
        return folded
    return "".join(ch for ch in folded if ch.isalpha())


def _code_from_letters(letters: str, k: int) -> str:
    split = min(k + 1, len(letters))
    prefix = letters[:split]
    digits: list[str] = []
    prev = _CONSONANT_CODES.get(letters[split - 1])
    for ch in letters[split:]:
        code = _CONSONANT_CODES.get(ch)
        if code is not None and code != prev:
            digits.append(code)
        prev = code
    suffix = "".join(digits[:_SUFFIX_MAX]).ljust(_SUFFIX_PAD, "0")
    return prefix + suffix


def encode(word: str, k: int, table: dict[str, str] | None = None) -> PhoneticCode:
    """Encode ``word`` at level ``k``.

    The first ``min(k + 1, len)`` folded letters are kept verbatim; the rest
    become consonant-class digits with adjacent duplicates collapsed, also
    across the prefix boundary. Raises :class:`EmptyAfterFold` when folding
    leaves no letters.

    >>> encode("dirrrty", 1).code
    'DI630'
    >>> encode("arre", 1).code
    'AR000'
    """
    if k < 0:
        raise ValueError(f"level must be >= 0, got {k}")
    letters = _cleaned_letters(word, table)
    if not letters:
        raise EmptyAfterFold(f"no letters left after folding {word!r}")
    return PhoneticCode(level=k, code=_code_from_letters(letters, k))


def encode_levels(word: str, max_level: int, table: dict[str, str] | None = None) -> list[str]:
    """Codes for every level ``0..max_level``, folding the word only once."""
    if max_level < 0:
        raise ValueError(f"max_level must be >= 0, got {max_level}")
    letters = _cleaned_letters(word, table)
    if not letters:
        raise EmptyAfterFold(f"no letters left after folding {word!r}")
    return [_code_from_letters(letters, k) for k in range(max_level + 1)]


def load_fold_table(path: str | Path) -> dict[str, str]:
    """Read a fold table: one ``<char><TAB><ascii-letter>`` pair per line.

    Blank lines and lines starting with ``#`` are ignored, so ``#`` itself
    cannot be used as a source character.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read fold table {path}: {exc}") from exc
    table: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected <char><TAB><letter>")
        src, dst = parts[0], parts[1].strip()
        if len(src) != 1 or len(dst) != 1 or not (dst.isascii() and dst.isalpha()):
            raise FormatError(f"{path}:{lineno}: bad pair {src!r} -> {dst!r}")
        table[src] = dst.lower()
    return table
