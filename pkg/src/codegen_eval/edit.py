"""Character-level Levenshtein distance and normalized edit similarity.

Distances are computed over Unicode code points (one ``str`` element per
unit), with unit costs for insertion, deletion, and substitution.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class EditResult:
    distance: int
    max_len: int
    similarity: float


def levenshtein(a: str, b: str) -> int:
    """Minimal number of single-character edits transforming `a` into `b`.

    Single-row dynamic program; bit-identical to the full DP table but
    O(min(len)) in memory.
    """
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(b) > len(a):
        a, b = b, a
    row = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        diag = row[0]
        row[0] = i
        for j, cb in enumerate(b, 1):
            up = row[j]
            sub = diag if ca == cb else diag + 1
            ins = row[j - 1] + 1
            dele = up + 1
            best = sub if sub < ins else ins
            row[j] = best if best < dele else dele
            diag = up
    return row[-1]


def edit_sim(gen: str, ref: str) -> float:
    """Normalized edit similarity: 1 - distance / max(len(gen), len(ref)).

    Both strings empty yields 1.0 (zero edits needed).
    """
    max_len = max(len(gen), len(ref))
    if max_len == 0:
        return 1.0
    return 1.0 - levenshtein(gen, ref) / max_len


def edit_result(gen: str, ref: str) -> EditResult:
    distance = levenshtein(gen, ref)
    max_len = max(len(gen), len(ref))
    similarity = 1.0 if max_len == 0 else 1.0 - distance / max_len
    return EditResult(distance=distance, max_len=max_len, similarity=similarity)
