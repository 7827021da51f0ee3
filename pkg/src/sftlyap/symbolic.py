"""Subshifts of finite type given by a 0/1 transition matrix.

Symbols are integers ``0..l-1`` internally; ``labels`` only matter for
display and config parsing.  Systems always keep the full ambient alphabet,
so a sub-system is just a dominated matrix over the same symbol indices and
symbols that cannot occur in any bi-infinite sequence are pruned to inactive.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class SymbolError(ValueError):
    pass


class ResourceCapError(RuntimeError):
    """Raised when a combinatorial enumeration exceeds its configured cap."""


class PruningWarning(UserWarning):
    pass


MAX_ORBITS = 200_000


def _prune(matrix: np.ndarray) -> tuple[np.ndarray, list[int]]:
    m = matrix.copy()
    removed = []
    while True:
        alive = m.any(axis=1) & m.any(axis=0)
        dead = [i for i in range(len(m)) if not alive[i] and (m[i].any() or m[:, i].any())]
        if not dead:
            break
        for i in dead:
            m[i, :] = False
            m[:, i] = False
        removed.extend(dead)
    return m, sorted(removed)


@dataclass(frozen=True, eq=False)
class TransitionSystem:
    """SFT on ``alphabet_size`` symbols; ``transitions[i, j]`` allows the word ij."""

    transitions: np.ndarray
    labels: tuple[str, ...] = ()
    pruned: tuple[int, ...] = field(default=(), init=False)

    def __post_init__(self):
        m = np.array(self.transitions, dtype=bool)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise SymbolError(f"transition matrix must be square and nonempty, got shape {m.shape}")
        m, removed = _prune(m)
        if removed:
            warnings.warn(f"pruned symbols without admissible bi-infinite continuation: {removed}",
                          PruningWarning, stacklevel=3)
        m.setflags(write=False)
        object.__setattr__(self, "transitions", m)
        object.__setattr__(self, "pruned", tuple(removed))
        labels = tuple(self.labels) or tuple(str(i + 1) for i in range(len(m)))
        if len(labels) != len(m):
            raise SymbolError(f"{len(labels)} labels for an alphabet of size {len(m)}")
        object.__setattr__(self, "labels", labels)

    @property
    def alphabet_size(self) -> int:
        return self.transitions.shape[0]

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.transitions.any(axis=1)))

    @property
    def is_empty(self) -> bool:
        return not self.transitions.any()

    def allowed(self, a: int, b: int) -> bool:
        return bool(self.transitions[a, b])

    def format_word(self, word: Sequence[int]) -> str:
        sep = "" if all(len(s) == 1 for s in self.labels) else " "
        return sep.join(self.labels[s] for s in word)

    def parse_word(self, text: str) -> tuple[int, ...]:
        parts = text.split() if any(c.isspace() for c in text.strip()) else list(text.strip())
        index = {lab: i for i, lab in enumerate(self.labels)}
        try:
            return tuple(index[p] for p in parts)
        except KeyError as exc:
            raise SymbolError(f"unknown symbol {exc.args[0]!r} in word {text!r}") from None

    def __eq__(self, other):
        return (isinstance(other, TransitionSystem)
                and np.array_equal(self.transitions, other.transitions)
                and self.labels == other.labels)

    def __hash__(self):
        return hash((self.transitions.tobytes(), self.labels))

    @classmethod
    def full_shift(cls, n: int) -> "TransitionSystem":
        return cls(np.ones((n, n), dtype=bool))

    @classmethod
    def golden_mean(cls) -> "TransitionSystem":
        return cls(np.array([[1, 1], [1, 0]], dtype=bool))


def _check_symbols(T: TransitionSystem, w: Sequence[int]):
    for s in w:
        if not 0 <= int(s) < T.alphabet_size:
            raise SymbolError(f"symbol {s} outside alphabet of size {T.alphabet_size}")


def validate_word(T: TransitionSystem, w: Sequence[int]) -> bool:
    """True iff every adjacent pair of ``w`` is an allowed transition."""
    _check_symbols(T, w)
    return all(T.transitions[a, b] for a, b in zip(w, w[1:]))


def _reachability(m: np.ndarray) -> np.ndarray:
    n = len(m)
    reach = m.astype(bool) | np.eye(n, dtype=bool)
    for _ in range(max(1, n.bit_length())):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    return reach


def is_transitive(T: TransitionSystem) -> bool:
    """Strong connectivity of the transition graph restricted to active symbols."""
    act = list(T.active)
    if not act:
        return False
    sub = T.transitions[np.ix_(act, act)]
    return bool(_reachability(sub).all())


def is_primitive_word(w: Sequence[int]) -> bool:
    n = len(w)
    for d in range(1, n):
        if n % d == 0 and all(w[i] == w[i % d] for i in range(n)):
            return False
    return True


def canonical_rotation(w: Sequence[int]) -> tuple[int, ...]:
    w = tuple(w)
    return min(w[k:] + w[:k] for k in range(len(w)))


@dataclass(frozen=True)
class PeriodicOrbit:
    """Primitive cyclic word in canonical (lexicographically least) rotation."""

    word: tuple[int, ...]

    def __post_init__(self):
        w = tuple(int(s) for s in self.word)
        if not w:
            raise SymbolError("periodic orbit needs a nonempty word")
        if not is_primitive_word(w):
            raise SymbolError(f"word {w} is a proper power")
        object.__setattr__(self, "word", canonical_rotation(w))

    @property
    def period(self) -> int:
        return len(self.word)

    def symbol(self, n: int) -> int:
        return self.word[n % len(self.word)]

    def is_admissible(self, T: TransitionSystem) -> bool:
        w = self.word
        return all(T.transitions[w[k], w[(k + 1) % len(w)]] for k in range(len(w)))

    def point(self) -> "SymbolicPoint":
        return SymbolicPoint(self.word, (), self.word, 0)


def enumerate_periodic_orbits(T: TransitionSystem, max_period: int,
                              cap: int = MAX_ORBITS) -> list[PeriodicOrbit]:
    """All admissible periodic orbits of period <= ``max_period``, sorted by (period, word)."""
    if max_period < 1:
        raise ValueError("max_period must be >= 1")
    M = T.transitions
    succ = [list(np.flatnonzero(M[a])) for a in range(T.alphabet_size)]
    out: list[tuple[int, ...]] = []

    def is_lyndon(w):
        n = len(w)
        return all(w < w[k:] + w[:k] for k in range(1, n))

    def extend(word, first, n):
        if len(word) == n:
            if M[word[-1], first] and is_lyndon(word):
                out.append(word)
                if len(out) > cap:
                    raise ResourceCapError(f"more than {cap} periodic orbits up to period {max_period}")
            return
        for b in succ[word[-1]]:
            # a canonical word starts with its smallest symbol
            if b >= first:
                extend(word + (b,), first, n)

    for n in range(1, max_period + 1):
        for a in T.active:
            extend((a,), a, n)
    out.sort(key=lambda w: (len(w), w))
    return [PeriodicOrbit(w) for w in out]


@dataclass(frozen=True)
class SymbolicPoint:
    """Eventually periodic bi-infinite sequence.

    ``core`` occupies indices ``c_lo .. c_lo+len(core)-1``.  The cycles use
    absolute phase: ``omega[n] = left_cycle[n % len(left_cycle)]`` for
    ``n < c_lo`` and ``omega[n] = right_cycle[n % len(right_cycle)]`` past the
    core.
    """

    left_cycle: tuple[int, ...]
    core: tuple[int, ...]
    right_cycle: tuple[int, ...]
    c_lo: int = 0

    def __post_init__(self):
        for name in ("left_cycle", "core", "right_cycle"):
            object.__setattr__(self, name, tuple(int(s) for s in getattr(self, name)))
        if not self.left_cycle or not self.right_cycle:
            raise SymbolError("cycles must be nonempty")

    @property
    def c_hi(self) -> int:
        return self.c_lo + len(self.core) - 1

    def __getitem__(self, n: int) -> int:
        if n < self.c_lo:
            return self.left_cycle[n % len(self.left_cycle)]
        if n > self.c_hi:
            return self.right_cycle[n % len(self.right_cycle)]
        return self.core[n - self.c_lo]

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Symbols at indices ``lo..hi-1``."""
        return np.array([self[n] for n in range(lo, hi)], dtype=np.int64)

    def shift(self, k: int = 1) -> "SymbolicPoint":
        """``T^k`` applied to the point: ``(T^k w)_n = w_{n+k}``."""
        L, R = len(self.left_cycle), len(self.right_cycle)
        left = tuple(self.left_cycle[(i + k) % L] for i in range(L))
        right = tuple(self.right_cycle[(i + k) % R] for i in range(R))
        return SymbolicPoint(left, self.core, right, self.c_lo - k)

    def is_admissible(self, T: TransitionSystem) -> bool:
        lo = self.c_lo - len(self.left_cycle) - 1
        hi = self.c_hi + len(self.right_cycle) + 2
        w = self.window(lo, hi)
        _check_symbols(T, w)
        return bool(T.transitions[w[:-1], w[1:]].all())

    def agrees(self, other: "SymbolicPoint", indices) -> bool:
        return all(self[n] == other[n] for n in indices)


def splice_points(omega: SymbolicPoint, omega_p: SymbolicPoint) -> SymbolicPoint:
    """The point equal to ``omega`` for n <= 0 and to ``omega_p`` for n >= 0."""
    if omega[0] != omega_p[0]:
        raise SymbolError(f"splice needs matching 0-th symbols, got {omega[0]} and {omega_p[0]}")
    lo = min(omega.c_lo, 0)
    hi = max(omega_p.c_hi, 0)
    core = [omega[n] for n in range(lo, 1)] + [omega_p[n] for n in range(1, hi + 1)]
    return SymbolicPoint(omega.left_cycle, core, omega_p.right_cycle, lo)


def d_sets_and_connectivity(T: TransitionSystem) -> tuple[dict[int, frozenset[int]], bool]:
    """Follower sets ``D_j`` and whether they are chained together by intersections."""
    act = T.active
    D = {j: frozenset(int(k) for k in np.flatnonzero(T.transitions[j])) for j in act}
    if not act:
        return D, False
    # union-find over owners whose follower sets intersect
    parent = {j: j for j in act}

    def find(j):
        while parent[j] != j:
            parent[j] = parent[parent[j]]
            j = parent[j]
        return j

    for a in act:
        for b in act:
            if D[a] & D[b]:
                parent[find(a)] = find(b)
    connected = len({find(j) for j in act}) == 1
    return D, connected


@dataclass(frozen=True)
class SubshiftEmbedding:
    sub: TransitionSystem
    super: TransitionSystem


def is_sub_embedding(e: SubshiftEmbedding) -> bool:
    if e.sub.alphabet_size != e.super.alphabet_size or e.sub.is_empty:
        return False
    return bool(np.all(~e.sub.transitions | e.super.transitions))
