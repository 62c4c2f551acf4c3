"""Tokenization and token/source counting for raw text corpora.

Tokens are whitespace-separated pieces with edge punctuation stripped.
Hyphens, internal symbols and case are kept as written, because exactly
those quirks are what the miner wants to index. Pieces without a single
letter are not tokens.
"""

from __future__ import annotations

import gzip
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import FormatError, IoFailure

_EDGE_PUNCT = ".,;:\"'?()[]{}"
_LETTER_RE = re.compile(r"[^\W\d_]")
_WS_RE = re.compile(r"(\s+)")


def contains_letter(text: str) -> bool:
    return _LETTER_RE.search(text) is not None


def split_affixes(piece: str) -> tuple[str, str, str]:
    """Split one whitespace-delimited piece into (head, core, tail).

    Head and tail hold the stripped edge punctuation so the piece can be
    rebuilt byte-exactly around a replacement core.
    """
    left = piece.lstrip(_EDGE_PUNCT)
    head = piece[: len(piece) - len(left)]
    core = left.rstrip(_EDGE_PUNCT)
    tail = left[len(core):]
    return head, core, tail


def tokenize(text: str) -> list[str]:
    """Split on whitespace, strip edge punctuation, drop letterless pieces.

    >>> tokenize("the demokRATs are dirrrty")
    ['the', 'demokRATs', 'are', 'dirrrty']
    >>> tokenize("de-pres-sion.")
    ['de-pres-sion']
    >>> tokenize("12 34")
    []
    """
    tokens = []
    for piece in text.split():
        core = piece.strip(_EDGE_PUNCT)
        if core and contains_letter(core):
            tokens.append(core)
    return tokens


class WordView:
    """Mutable view of a text's whitespace-delimited words.

    Whitespace and edge punctuation are preserved byte-exactly; only word
    cores are ever replaced. Word positions refer to the original text and
    stay valid however cores are rewritten.
    """

    def __init__(self, text: str):
        self._parts = _WS_RE.split(text)
        self._slots = [i for i, part in enumerate(self._parts) if part and not part.isspace()]

    def __len__(self) -> int:
        return len(self._slots)

    def chunk(self, position: int) -> str:
        return self._parts[self._slots[position]]

    def core(self, position: int) -> str:
        return split_affixes(self.chunk(position))[1]

    def replace_core(self, position: int, new_core: str) -> None:
        head, _, tail = split_affixes(self.chunk(position))
        self._parts[self._slots[position]] = head + new_core + tail

    def preview(self, position: int, new_core: str) -> str:
        """The text with one core swapped, without mutating the view."""
        head, _, tail = split_affixes(self.chunk(position))
        slot = self._slots[position]
        parts = self._parts
        return "".join(
            head + new_core + tail if i == slot else part for i, part in enumerate(parts)
        )

    def without(self, position: int) -> str:
        """The words of the text with one dropped, single-spaced."""
        return " ".join(
            self.chunk(i) for i in range(len(self._slots)) if i != position
        )

    def text(self) -> str:
        return "".join(self._parts)


@dataclass(frozen=True, slots=True)
class TokenRecord:
    """One mined token with its occurrence and distinct-source counts."""

    token: str
    frequency: int
    sources: int


class TokenCounts:
    """Aggregate of per-token occurrence counts and distinct source ids.

    Two aggregates over disjoint source-id spaces merge exactly, so a corpus
    may be sharded, counted in parallel and combined deterministically.
    """

    __slots__ = ("_freq", "_sources")

    def __init__(self) -> None:
        self._freq: dict[str, int] = {}
        self._sources: dict[str, set] = {}

    def add_text(self, text: str, source_id) -> None:
        freq = self._freq
        sources = self._sources
        for token in tokenize(text):
            if token in freq:
                freq[token] += 1
                sources[token].add(source_id)
            else:
                freq[token] = 1
                sources[token] = {source_id}

    def update(self, other: "TokenCounts") -> None:
        for token, count in other._freq.items():
            if token in self._freq:
                self._freq[token] += count
                self._sources[token] |= other._sources[token]
            else:
                self._freq[token] = count
                self._sources[token] = set(other._sources[token])

    def records(self) -> list[TokenRecord]:
        return [
            TokenRecord(token=token, frequency=self._freq[token], sources=len(self._sources[token]))
            for token in sorted(self._freq)
        ]

    def __len__(self) -> int:
        return len(self._freq)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TokenCounts):
            return NotImplemented
        return self._freq == other._freq and self._sources == other._sources

    def total_frequency(self) -> int:
        return sum(self._freq.values())


def ingest(rows: Iterable) -> TokenCounts:
    """Count tokens from a stream of lines.

    Each row is either a plain text line or a ``(text, source_id)`` pair.
    Plain lines get their stream position as source id, so every line counts
    as its own source.
    """
    counts = TokenCounts()
    for line_no, row in enumerate(rows):
        if isinstance(row, str):
            counts.add_text(row, line_no)
        else:
            text, source_id = row
            counts.add_text(text, source_id)
    return counts


def merge(parts: Iterable[TokenCounts]) -> TokenCounts:
    merged = TokenCounts()
    for part in parts:
        merged.update(part)
    return merged


def read_corpus(path: str | Path, tsv: bool = False) -> Iterator:
    """Yield corpus rows from a text file, decompressing ``.gz`` transparently.

    In TSV mode each line is ``text<TAB>source-id`` and pairs are yielded;
    otherwise plain text lines are yielded. Trailing newlines are removed.
    """
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    try:
        with opener(path, "rt", encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.rstrip("\n")
                if not tsv:
                    yield line
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise FormatError(
                        f"{path}:{lineno}: expected text<TAB>source-id, got {len(parts)} column(s)"
                    )
                yield parts[0], parts[1]
    except OSError as exc:
        raise IoFailure(f"cannot read corpus {path}: {exc}") from exc
