"""Level-keyed phonetic bucket tables with sound/spelling retrieval.

Every indexed token is bucketed once per level under its code at that
level. Retrieval encodes the query word, grabs its bucket and keeps the
members within a case-insensitive edit distance, so lookup cost is the
encoding cost plus the (small) bucket size, independent of corpus size.
"""

from __future__ import annotations

import hashlib
import os
import zlib
from pathlib import Path
from typing import Iterable

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .corpus import TokenRecord
from .distance import levenshtein_ci
from .errors import ChecksumMismatch, EmptyAfterFold, EmptyGold, FormatError, IoFailure
from .phonetic import encode, encode_levels

_MAGIC = "ANTHRO-INDEX"
_VERSION = "v1"


def _fingerprint(records: list[TokenRecord]) -> str:
    digest = hashlib.sha256()
    for record in sorted(records, key=lambda r: r.token):
        digest.update(f"{record.token}\t{record.frequency}\t{record.sources}\n".encode("utf-8"))
    return digest.hexdigest()[:12]


class PerturbationIndex(BaseEstimator):
    """Bucket tables over corpus tokens for levels ``0..max_level``.

    Parameters
    ----------
    max_level:
        Deepest level to build. Queries may use any ``k <= max_level``.
    min_frequency:
        Tokens occurring fewer times than this are not indexed.
    min_sources:
        Tokens written by fewer distinct sources than this are not indexed.

    Fitted attributes (read-only once built): ``tables_`` maps each level to
    ``{code: [token, ...]}`` with buckets sorted for determinism, ``freq_``
    maps each indexed token to its corpus frequency, and ``meta_`` records
    the corpus fingerprint plus build parameters.
    """

    def __init__(self, max_level: int = 2, min_frequency: int = 1, min_sources: int = 1):
        self.max_level = max_level
        self.min_frequency = min_frequency
        self.min_sources = min_sources

    def fit(self, records: Iterable[TokenRecord], y=None) -> "PerturbationIndex":
        if self.max_level < 0:
            raise ValueError(f"max_level must be >= 0, got {self.max_level}")
        if self.min_frequency < 1 or self.min_sources < 1:
            raise ValueError("min_frequency and min_sources must be >= 1")
        if hasattr(records, "records"):
            records = records.records()
        records = list(records)

        tables: list[dict[str, list[str]]] = [{} for _ in range(self.max_level + 1)]
        freq: dict[str, int] = {}
        for record in records:
            if record.frequency < self.min_frequency or record.sources < self.min_sources:
                continue
            try:
                codes = encode_levels(record.token, self.max_level)
            except EmptyAfterFold:
                continue
            freq[record.token] = record.frequency
            for k, code in enumerate(codes):
                tables[k].setdefault(code, []).append(record.token)
        for table in tables:
            for bucket in table.values():
                bucket.sort()

        self.tables_ = tables
        self.freq_ = freq
        self.meta_ = {
            "fingerprint": _fingerprint(records),
            "max_level": self.max_level,
            "min_frequency": self.min_frequency,
            "min_sources": self.min_sources,
        }
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "tables_"):
            raise NotFittedError("index is not built; call fit() or load()")

    @property
    def n_tokens_(self) -> int:
        self._check_fitted()
        return len(self.freq_)

    def bucket_counts(self) -> list[int]:
        self._check_fitted()
        return [len(table) for table in self.tables_]

    def frequency(self, token: str) -> int:
        self._check_fitted()
        return self.freq_.get(token, 0)

    def retrieve(self, word: str, k: int = 1, d: int = 1) -> set[str]:
        """Bucket members at level ``k`` within case-insensitive distance ``d``.

        The word itself is included when it is indexed. Raises
        :class:`EncodingFailure` when the query cannot be encoded and
        ``ValueError`` when ``k`` exceeds the built depth.
        """
        self._check_fitted()
        if not 0 <= k <= self.max_level:
            raise ValueError(f"k must be in 0..{self.max_level}, got {k}")
        if d < 0:
            raise ValueError(f"d must be >= 0, got {d}")
        code = encode(word, k).code
        bucket = self.tables_[k].get(code)
        if not bucket:
            return set()
        return {t for t in bucket if levenshtein_ci(word, t, limit=d) <= d}

    def precision_recall(self, word: str, gold: set[str], k: int = 1, d: int = 1) -> tuple[float, float]:
        """Precision/recall of retrieval against a gold perturbation set.

        The query word itself is excluded from the retrieved set. An empty
        retrieval asserts nothing and scores precision 1.0.
        """
        if not gold:
            raise EmptyGold("gold set is empty")
        retrieved = self.retrieve(word, k, d)
        retrieved.discard(word)
        hit = len(retrieved & gold)
        precision = hit / len(retrieved) if retrieved else 1.0
        recall = hit / len(gold)
        return precision, recall

    def save(self, path: str | Path) -> None:
        """Write the canonical on-disk form (atomically).

        Line 1 is ``ANTHRO-INDEX<TAB>v1<TAB>K=<max_level><TAB><build-flags>``,
        line 2 is ``CHECKSUM<TAB><crc32 hex>`` over every following byte, then
        one ``level<TAB>code<TAB>token<TAB>frequency`` row per bucket member,
        sorted by (level, code, token). Equal indexes serialize to equal bytes.
        """
        self._check_fitted()
        rows = []
        for k, table in enumerate(self.tables_):
            for code in sorted(table):
                for token in table[code]:
                    rows.append(f"{k}\t{code}\t{token}\t{self.freq_[token]}\n")
        body = "".join(rows).encode("utf-8")
        flags = (
            f"min_freq={self.min_frequency} min_sources={self.min_sources} "
            f"fingerprint={self.meta_['fingerprint']}"
        )
        header = f"{_MAGIC}\t{_VERSION}\tK={self.max_level}\t{flags}\n"
        checksum = zlib.crc32(body) & 0xFFFFFFFF
        payload = header.encode("utf-8") + f"CHECKSUM\t{checksum:08x}\n".encode("utf-8") + body

        path = Path(path)
        tmp = path.with_name(f"{path.name}.tmp.{os.getpid()}")
        try:
            tmp.write_bytes(payload)
            os.replace(tmp, path)
        except OSError as exc:
            raise IoFailure(f"cannot write index {path}: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> "PerturbationIndex":
        """Read an index written by :meth:`save`, verifying its checksum."""
        path = Path(path)
        try:
            blob = path.read_bytes()
        except OSError as exc:
            raise IoFailure(f"cannot read index {path}: {exc}") from exc

        first = blob.find(b"\n")
        if first < 0:
            raise FormatError(f"{path}: missing header line")
        second = blob.find(b"\n", first + 1)
        if second < 0:
            raise FormatError(f"{path}: missing checksum line")
        try:
            header = blob[:first].decode("utf-8")
            checksum_line = blob[first + 1 : second].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: header is not UTF-8") from exc
        body = blob[second + 1 :]

        fields = header.split("\t")
        if len(fields) != 4 or fields[0] != _MAGIC:
            raise FormatError(f"{path}: not a {_MAGIC} file")
        if fields[1] != _VERSION:
            raise FormatError(f"{path}: unsupported version {fields[1]!r}")
        if not fields[2].startswith("K="):
            raise FormatError(f"{path}: malformed level field {fields[2]!r}")
        try:
            max_level = int(fields[2][2:])
        except ValueError as exc:
            raise FormatError(f"{path}: malformed level field {fields[2]!r}") from exc
        flags = {}
        for item in fields[3].split():
            key, sep, value = item.partition("=")
            if not sep:
                raise FormatError(f"{path}: malformed build flag {item!r}")
            flags[key] = value

        parts = checksum_line.split("\t")
        if len(parts) != 2 or parts[0] != "CHECKSUM":
            raise FormatError(f"{path}: malformed checksum line")
        try:
            stored = int(parts[1], 16)
        except ValueError as exc:
            raise FormatError(f"{path}: malformed checksum {parts[1]!r}") from exc
        actual = zlib.crc32(body) & 0xFFFFFFFF
        if stored != actual:
            raise ChecksumMismatch(f"{path}: checksum {actual:08x} does not match stored {stored:08x}")

        tables: list[dict[str, list[str]]] = [{} for _ in range(max_level + 1)]
        freq: dict[str, int] = {}
        text = body.decode("utf-8")
        for lineno, line in enumerate(text.splitlines(), start=3):
            cols = line.split("\t")
            if len(cols) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 columns, got {len(cols)}")
            level_s, code, token, freq_s = cols
            try:
                level = int(level_s)
                frequency = int(freq_s)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-integer level or frequency") from exc
            if not 0 <= level <= max_level:
                raise FormatError(f"{path}:{lineno}: level {level} out of range 0..{max_level}")
            if token in freq and freq[token] != frequency:
                raise FormatError(f"{path}:{lineno}: conflicting frequencies for {token!r}")
            freq[token] = frequency
            tables[level].setdefault(code, []).append(token)
        for table in tables:
            for bucket in table.values():
                bucket.sort()

        loaded = cls(
            max_level=max_level,
            min_frequency=int(flags.get("min_freq", 1)),
            min_sources=int(flags.get("min_sources", 1)),
        )
        loaded.tables_ = tables
        loaded.freq_ = freq
        loaded.meta_ = {
            "fingerprint": flags.get("fingerprint", ""),
            "max_level": max_level,
            "min_frequency": loaded.min_frequency,
            "min_sources": loaded.min_sources,
        }
        return loaded
