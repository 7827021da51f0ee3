"""Stationary Markov measures on a subshift and seeded orbit sampling."""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .symbolic import TransitionSystem, _reachability

STOCHASTIC_TOL = 1e-12
DIRECT_SOLVE_MAX = 64


class MeasureError(ValueError):
    pass


class ErgodicityError(MeasureError):
    pass


def _closed_classes(support: np.ndarray) -> list[list[int]]:
    n = len(support)
    reach = _reachability(support)
    classes, seen = [], set()
    for i in range(n):
        if i in seen or not support[i].any():
            continue
        comp = [j for j in range(n) if reach[i, j] and reach[j, i]]
        seen.update(comp)
        # closed iff nothing outside the class is reachable
        if all(not reach[i, k] or k in comp for k in range(n)):
            classes.append(comp)
    return classes


def stationary_distribution(P) -> np.ndarray:
    """Unique stationary vector of a stochastic matrix with a single closed class.

    Rows that are identically zero belong to symbols outside the chain and get
    zero mass.  More than one closed class raises :class:`ErgodicityError`.
    """
    P = np.asarray(P, dtype=float)
    n = len(P)
    rows = P.sum(axis=1)
    live = rows > 0
    if np.any(np.abs(rows[live] - 1.0) > STOCHASTIC_TOL):
        raise MeasureError(f"rows must sum to 1, got sums {rows.tolist()}")
    classes = _closed_classes(P > 0)
    if len(classes) != 1:
        trapped = [[int(i) + 1 for i in c] for c in classes]
        raise ErgodicityError(f"reducible chain: closed classes {trapped} (1-based symbols)")
    cls = classes[0]
    Q = P[np.ix_(cls, cls)]
    k = len(cls)
    if k <= DIRECT_SOLVE_MAX:
        A = np.vstack([Q.T - np.eye(k), np.ones(k)])
        b = np.zeros(k + 1)
        b[-1] = 1.0
        sol = np.linalg.lstsq(A, b, rcond=None)[0]
    else:
        sol = np.full(k, 1.0 / k)
        for _ in range(100_000):
            nxt = 0.5 * (sol + sol @ Q)  # lazy chain: aperiodic, same stationary vector
            if np.abs(nxt - sol).max() < 1e-15:
                break
            sol = nxt
    sol = np.clip(sol, 0.0, None)
    pi = np.zeros(n)
    pi[cls] = sol / sol.sum()
    return pi


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    P: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        pi = np.array(self.pi, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or pi.shape != (len(P),):
            raise MeasureError(f"shape mismatch: P {P.shape}, pi {pi.shape}")
        if np.any(P < 0) or np.any(pi < 0):
            raise MeasureError("negative probabilities")
        rows = P.sum(axis=1)
        bad = [i for i in range(len(P)) if rows[i] != 0 and abs(rows[i] - 1) > STOCHASTIC_TOL]
        if bad:
            raise MeasureError(f"row {bad[0] + 1} of P sums to {rows[bad[0]]!r}, not 1")
        if abs(pi.sum() - 1) > STOCHASTIC_TOL or np.abs(pi @ P - pi).max() > STOCHASTIC_TOL:
            raise MeasureError("pi is not a stationary probability vector for P")
        if np.any((pi > 0) & (rows == 0)):
            raise MeasureError("pi charges a symbol with an empty row of P")
        for a in (P, pi):
            a.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "pi", pi)

    @classmethod
    def from_matrix(cls, P) -> "MarkovMeasure":
        return cls(np.asarray(P, dtype=float), stationary_distribution(P))

    @classmethod
    def uniform(cls, T: TransitionSystem) -> "MarkovMeasure":
        """Uniform choice among allowed successors (full support on ``T``)."""
        M = T.transitions.astype(float)
        deg = M.sum(axis=1, keepdims=True)
        P = np.divide(M, deg, out=np.zeros_like(M), where=deg > 0)
        return cls.from_matrix(P)

    @classmethod
    def bernoulli(cls, weights) -> "MarkovMeasure":
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
        return cls(np.tile(w, (len(w), 1)), w)

    @property
    def alphabet_size(self) -> int:
        return len(self.P)

    def __eq__(self, other):
        return (isinstance(other, MarkovMeasure) and np.array_equal(self.P, other.P)
                and np.array_equal(self.pi, other.pi))

    def __hash__(self):
        return hash((self.P.tobytes(), self.pi.tobytes()))


@dataclass(frozen=True)
class MeasureReport:
    ergodic: bool
    full_support: bool


def validate_measure(mu: MarkovMeasure, T: TransitionSystem) -> MeasureReport:
    if mu.alphabet_size != T.alphabet_size:
        raise MeasureError(f"measure on {mu.alphabet_size} symbols, system on {T.alphabet_size}")
    support = mu.P > 0
    outside = np.argwhere(support & ~T.transitions)
    if len(outside):
        i, j = outside[0]
        raise MeasureError(f"P charges forbidden transition {T.labels[i]}{T.labels[j]}")
    for i in T.active:
        if abs(mu.P[i].sum() - 1) > STOCHASTIC_TOL:
            raise MeasureError(f"row {T.labels[i]} of P is not stochastic (sums to {mu.P[i].sum()!r})")
    ergodic = len(_closed_classes(support)) == 1
    return MeasureReport(ergodic=ergodic, full_support=bool(np.array_equal(support, T.transitions)))


def _cumulative(mu: MarkovMeasure) -> tuple[np.ndarray, np.ndarray]:
    cum = np.cumsum(mu.P, axis=1)
    cum[:, -1] = np.where(mu.P.sum(axis=1) > 0, 1.0, 0.0)
    cpi = np.cumsum(mu.pi)
    cpi[-1] = 1.0
    return cpi, cum


def _uniforms(rng: np.random.Generator, size: int) -> np.ndarray:
    # values in (0, 1] so that zero-probability symbols are never selected
    return 1.0 - rng.random(size)


def sample_orbit(mu: MarkovMeasure, length: int, seed: int) -> np.ndarray:
    """A length-``length`` word: first symbol from ``pi``, successors from rows of ``P``."""
    if length <= 0:
        raise ValueError(f"orbit length must be positive, got {length}")
    rng = np.random.default_rng(seed)
    cpi, cum = _cumulative(mu)
    u = _uniforms(rng, length).tolist()
    rows = cum.tolist()
    out = [0] * length
    s = bisect_left(cpi.tolist(), u[0])
    out[0] = s
    for k in range(1, length):
        s = bisect_left(rows[s], u[k])
        out[k] = s
    return np.array(out, dtype=np.int64)


def derive_seed(base_seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for ``(base_seed, keys...)``."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])

