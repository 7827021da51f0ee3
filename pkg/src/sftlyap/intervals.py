"""Finite unions of open intervals with exact Lebesgue measure.

Set operations are exact up to finitely many points: ``subtract`` of an open
set leaves closed endpoints, which are dropped.  Touching intervals such as
``(-2, 0)`` and ``(0, 2)`` stay separate because the shared point is excluded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class IntervalSet:
    intervals: tuple[tuple[float, float], ...] = ()
    closed: bool = False

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", _normalize(ivs, merge_touching=self.closed))

    @classmethod
    def of(cls, *pairs, closed: bool = False) -> "IntervalSet":
        return cls(tuple(pairs), closed=closed)

    @classmethod
    def union_all(cls, sets: Iterable["IntervalSet"]) -> "IntervalSet":
        return cls(tuple(iv for s in sets for iv in s.intervals))

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def __bool__(self):
        return bool(self.intervals)

    @property
    def measure(self) -> float:
        return math.fsum(b - a for a, b in self.intervals)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        A, B = self.intervals, other.intervals
        while i < len(A) and j < len(B):
            lo = max(A[i][0], B[j][0])
            hi = min(A[i][1], B[j][1])
            if lo < hi:
                out.append((lo, hi))
            if A[i][1] < B[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(tuple(out))

    def complement_in(self, lo: float, hi: float) -> "IntervalSet":
        """``(lo, hi)`` minus this set, up to the null set of endpoints."""
        out, cur = [], lo
        for a, b in self.intervals:
            if b <= lo:
                continue
            if a >= hi:
                break
            if a > cur:
                out.append((cur, min(a, hi)))
            cur = max(cur, b)
        if cur < hi:
            out.append((cur, hi))
        return IntervalSet(tuple(out))

    def subtract(self, other: "IntervalSet") -> "IntervalSet":
        if not self.intervals:
            return IntervalSet()
        lo, hi = self.intervals[0][0], self.intervals[-1][1]
        return self.intersect(other.complement_in(lo, hi))

    def restrict(self, lo: float, hi: float) -> "IntervalSet":
        if not lo < hi:
            return IntervalSet()
        return self.intersect(IntervalSet(((lo, hi),)))

    def contains(self, x: float, closed: bool | None = None, tol: float = 0.0) -> bool:
        """Membership; ``closed`` defaults to the set's own flag, ``tol`` widens (closed)
        or shrinks (open) each interval."""
        closed = self.closed if closed is None else closed
        for a, b in self.intervals:
            if closed and a - tol <= x <= b + tol:
                return True
            if not closed and a + tol < x < b - tol:
                return True
        return False

    def issubset(self, other: "IntervalSet", slack: float = 0.0) -> bool:
        """Every interval here lies inside a single interval of ``other`` widened by ``slack``,
        or inside a run of ``other`` broken only by excluded points within ``slack``."""
        merged = _normalize(tuple((a - slack, b + slack) for a, b in other.intervals),
                            merge_touching=True)
        for a, b in self.intervals:
            if not any(c <= a and b <= d for c, d in merged):
                return False
        return True

    def to_list(self) -> list[list[float]]:
        return [[a, b] for a, b in self.intervals]


def _normalize(ivs, merge_touching: bool):
    ivs = sorted((a, b) for a, b in ivs if a < b)
    out: list[list[float]] = []
    for a, b in ivs:
        if out and (a < out[-1][1] or (merge_touching and a == out[-1][1])):
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


def measure(s: IntervalSet) -> float:
    return s.measure


def interval_algebra(a: IntervalSet, b: IntervalSet, op: str) -> IntervalSet:
    if op == "union":
        return a.union(b)
    if op == "intersect":
        return a.intersect(b)
    if op == "subtract":
        return a.subtract(b)
    raise ValueError(f"unknown interval operation {op!r}")
