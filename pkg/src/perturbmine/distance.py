"""Case-insensitive edit distance."""

from __future__ import annotations


def levenshtein_ci(a: str, b: str, limit: int | None = None) -> int:
    """Unit-cost insert/delete/substitute distance between casefolded strings.

    When ``limit`` is given the scan may abandon early and return any value
    greater than ``limit`` once the true distance is known to exceed it,
    which makes bucket filtering cheap.

    >>> levenshtein_ci("democrats", "demokRATs")
    1
    >>> levenshtein_ci("dirty", "dirrrty")
    2
    """
    a = a.casefold()
    b = b.casefold()
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if limit is not None:
        if limit < 0:
            raise ValueError(f"limit must be >= 0, got {limit}")
        if abs(len(a) - len(b)) > limit:
            return limit + 1
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        row_best = i
        for j, cb in enumerate(b, start=1):
            value = min(
                previous[j - 1] + (ca != cb),
                previous[j] + 1,
                current[j - 1] + 1,
            )
            current.append(value)
            if value < row_best:
                row_best = value
        if limit is not None and row_best > limit:
            return limit + 1
        previous = current
    return previous[-1]
