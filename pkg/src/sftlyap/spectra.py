"""Periodic discriminants, their level sets and the band / S-set construction."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .cocycle import Potential
from .intervals import IntervalSet
from .symbolic import PeriodicOrbit, TransitionSystem, enumerate_periodic_orbits

ROOT_TOL = 1e-12
TOL_DELTA = 1e-6
DEFAULT_MAX_PERIOD = 10
EPS = np.finfo(float).eps


class RootIsolationError(ArithmeticError):
    pass


@dataclass(frozen=True, eq=False)
class DiscriminantPoly:
    """Monic trace polynomial of a periodic monodromy, coefficients highest degree first."""

    coefficients: np.ndarray
    orbit: PeriodicOrbit | None = None

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, E):
        return np.polyval(self.coefficients, E)


def trace_polynomial(values) -> np.ndarray:
    """Coefficients (highest first) of ``Tr(A(v_{n-1}) ... A(v_0))`` as a polynomial in E."""
    # rows of the running product, ascending coefficients
    a, b = np.array([1.0]), np.array([0.0])
    c, d = np.array([0.0]), np.array([1.0])

    def times_e_minus(p, v):
        out = np.zeros(len(p) + 1)
        out[1:] += p
        out[:-1] -= v * p
        return out

    def add(p, q):
        out = np.zeros(max(len(p), len(q)))
        out[:len(p)] += p
        out[:len(q)] += q
        return out

    for v in values:
        a, b, c, d = add(times_e_minus(a, v), -c), add(times_e_minus(b, v), -d), a, b
    tr = add(a, d)
    n = len(values)
    tr = tr[:n + 1]
    return tr[::-1].copy()


def discriminant_poly(p: PeriodicOrbit, V: Potential) -> DiscriminantPoly:
    coeffs = trace_polynomial(V.along_orbit(p))
    return DiscriminantPoly(coeffs, p)


# ---------------------------------------------------------------------------
# real roots: derivative cascade + bisection, certified by a Sturm count


def _polyval_rows(P: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Evaluate row ``i`` of ``P`` at every entry of ``X[i]``."""
    out = np.zeros_like(X)
    for k in range(P.shape[1]):
        out = out * X + P[:, k, None]
    return out


def _cauchy_bound(P: np.ndarray) -> np.ndarray:
    return 1.0 + np.abs(P[:, 1:] / P[:, :1]).max(axis=1, initial=0.0)


def _stage(P: np.ndarray, crit: np.ndarray, cmult: np.ndarray, bound: np.ndarray):
    """Real roots of each row of ``P`` given the distinct real roots of its derivative.

    Between consecutive critical points the polynomial is monotone, so each
    piece holds at most one root, found by bisection on a sign change.  A
    critical point where the value vanishes to rounding is a multiple root.
    """
    m, d = P.shape[0], P.shape[1] - 1
    pts = np.concatenate([-bound[:, None], crit, bound[:, None]], axis=1)
    mult = np.concatenate([np.zeros((m, 1), int), cmult, np.zeros((m, 1), int)], axis=1)
    order = np.argsort(pts, axis=1)  # NaN padding sorts last
    pts = np.take_along_axis(pts, order, axis=1)
    mult = np.take_along_axis(mult, order, axis=1)
    valid = ~np.isnan(pts)
    X = np.where(valid, pts, 0.0)
    vals = _polyval_rows(P, X)
    err = 8 * (d + 1) * EPS * _polyval_rows(np.abs(P), np.abs(X))
    # critical points are only known to ROOT_TOL: add the Taylor bound of the variation
    Dk, fact = P, 1.0
    for k in range(1, d + 1):
        Dk = Dk[:, :-1] * np.arange(Dk.shape[1] - 1, 0, -1)[None, :]
        fact *= k
        err = err + np.abs(_polyval_rows(Dk, X)) * ROOT_TOL ** k / fact
    touch = valid & (mult > 0) & (np.abs(vals) <= err)
    s = np.sign(vals)
    lo, hi = X[:, :-1], X[:, 1:]
    br = (valid[:, :-1] & valid[:, 1:] & ~touch[:, :-1] & ~touch[:, 1:]
          & (s[:, :-1] * s[:, 1:] < 0))
    roots = np.full(lo.shape, np.nan)
    if br.any():
        r, c = np.nonzero(br)
        a, b = lo[r, c].copy(), hi[r, c].copy()
        sa = s[r, c]
        Pr = P[r]
        width = float((b - a).max())
        iters = max(1, int(math.ceil(math.log2(max(width, ROOT_TOL) / (0.25 * ROOT_TOL)))))
        for _ in range(iters):
            mid = 0.5 * (a + b)
            fm = _polyval_rows(Pr, mid[:, None])[:, 0]
            same = np.sign(fm) == sa
            a = np.where(same, mid, a)
            b = np.where(same, b, mid)
            exact = fm == 0
            a = np.where(exact, mid, a)
            b = np.where(exact, mid, b)
        roots[r, c] = 0.5 * (a + b)
    all_roots = np.concatenate([roots, np.where(touch, pts, np.nan)], axis=1)
    all_mult = np.concatenate([np.where(br, 1, 0), np.where(touch, mult + 1, 0)], axis=1)
    order = np.argsort(all_roots, axis=1)
    all_roots = np.take_along_axis(all_roots, order, axis=1)[:, :d]
    all_mult = np.take_along_axis(all_mult, order, axis=1)[:, :d]
    all_mult = np.where(np.isnan(all_roots), 0, all_mult)
    all_touch = np.concatenate([np.zeros_like(br), touch], axis=1)
    all_touch = np.take_along_axis(all_touch, order, axis=1)[:, :d]
    return all_roots, all_mult, all_touch


def _derivative_roots(P: np.ndarray, bound: np.ndarray):
    """Distinct real roots (NaN padded) and multiplicities of every row's derivative."""
    m, d = P.shape[0], P.shape[1] - 1
    if d <= 1:
        return np.full((m, 0), np.nan), np.zeros((m, 0), int)
    derivs = [P]
    for _ in range(d - 1):
        Q = derivs[-1]
        k = Q.shape[1] - 1
        derivs.append(Q[:, :-1] * np.arange(k, 0, -1)[None, :])
    lin = derivs[-1]
    roots = (-lin[:, 1] / lin[:, 0])[:, None]
    mult = np.ones((m, 1), int)
    for Q in reversed(derivs[1:-1]):
        roots, mult, _ = _stage(Q, roots, mult, bound)
    return roots, mult


@dataclass(frozen=True)
class LevelSet:
    level: float
    roots: tuple[float, ...]
    multiplicities: tuple[int, ...]
    sturm_count: int


def _trim(p, tol=0.0):
    p = np.asarray(p)
    nz = np.flatnonzero(np.abs(p) > tol)
    return p[nz[0]:] if len(nz) else p[:0]


def _sturm_sequence(p, rel_tol: float = 0.0) -> list[list]:
    """Sturm chain of ``p`` (highest coefficient first).

    Works for floats and Fractions alike; with ``rel_tol > 0`` remainder
    coefficients below ``rel_tol`` times the divisor scale count as zero, so
    a numerically vanishing remainder ends the chain at the approximate gcd.
    """
    def strip(a, tol):
        i = 0
        while i < len(a) and abs(a[i]) <= tol:
            i += 1
        return a[i:]

    def scaled(a):
        if rel_tol == 0:
            return a
        m = max(abs(c) for c in a)
        return [c / m for c in a]

    p = scaled(strip(list(p), 0))
    n = len(p) - 1
    seq = [p, scaled([c * (n - i) for i, c in enumerate(p[:-1])])]
    while len(seq[-1]) > 1:
        a, b = list(seq[-2]), seq[-1]
        while len(a) >= len(b):
            f = a[0] / b[0]
            for i in range(1, len(b)):
                a[i] -= f * b[i]
            a.pop(0)
        tol = rel_tol * max(max(abs(c) for c in seq[-2]), max(abs(c) for c in b))
        r = strip(a, tol)
        if not r:
            break
        seq.append(scaled([-c for c in r]))
    return seq


def _variations(seq, x) -> int:
    last, count = 0, 0
    for q in seq:
        v = 0
        for c in q:
            v = v * x + c
        if v != 0:
            sgn = 1 if v > 0 else -1
            if last and sgn != last:
                count += 1
            last = sgn
    return count


def sturm_count(p, lo: float, hi: float, exact: bool = False) -> int:
    """Number of distinct real roots of ``p`` in ``(lo, hi]``."""
    if exact:
        seq = _sturm_sequence([Fraction(float(c)) for c in p])
        return _variations(seq, Fraction(lo)) - _variations(seq, Fraction(hi))
    seq = _sturm_sequence([float(c) for c in p], rel_tol=1e-10)
    return _variations(seq, float(lo)) - _variations(seq, float(hi))


def _certify(p: np.ndarray, roots, mults, touching, bound: float) -> int:
    lo, hi = -bound, bound
    n = len(roots)
    count = sturm_count(p, lo, hi)
    if count == n:
        return count
    exact = sturm_count(p, lo, hi, exact=True)
    # a tangency within rounding may be 0..m distinct roots of the rounded coefficients
    slack_lo = sum(1 for t in touching if t)
    slack_hi = sum(m - 1 for m, t in zip(mults, touching) if t)
    if n - slack_lo <= exact <= n + slack_hi:
        return exact
    raise RootIsolationError(f"Sturm count {exact} disagrees with {n} isolated roots "
                             f"of polynomial {p.tolist()}")


def _level_sets_batch(P: np.ndarray, levels) -> list[list[LevelSet]]:
    """Level sets ``{p = c}`` for every row of ``P`` (all of one degree) and level ``c``."""
    m, d = P.shape[0], P.shape[1] - 1
    out: list[list[LevelSet]] = [[] for _ in range(m)]
    shifted = []
    for c in levels:
        Q = P.copy()
        Q[:, -1] -= c
        shifted.append(Q)
    bound = np.max([_cauchy_bound(Q) for Q in shifted], axis=0)
    if d == 1:
        for i in range(m):
            for c, Q in zip(levels, shifted):
                out[i].append(LevelSet(c, (float(-Q[i, 1] / Q[i, 0]),), (1,), 1))
        return out
    crit, cmult = _derivative_roots(P, bound)
    for c, Q in zip(levels, shifted):
        roots, mult, touch = _stage(Q, crit, cmult, bound)
        for i in range(m):
            keep = ~np.isnan(roots[i])
            rs = tuple(float(x) for x in roots[i][keep])
            ms = tuple(int(x) for x in mult[i][keep])
            ts = tuple(bool(x) for x in touch[i][keep])
            count = _certify(Q[i], rs, ms, ts, float(bound[i]))
            out[i].append(LevelSet(c, rs, ms, count))
    return out


def solve_level_set(q, c: float) -> LevelSet:
    """Real roots of ``q(E) = c`` with multiplicities, refined to ``ROOT_TOL``."""
    coeffs = q.coefficients if isinstance(q, DiscriminantPoly) else np.asarray(q, float)
    coeffs = _trim(np.asarray(coeffs, float))
    if len(coeffs) < 2:
        raise ValueError("level sets need a polynomial of degree >= 1")
    return _level_sets_batch(coeffs[None, :], [float(c)])[0][0]


@dataclass(frozen=True)
class BandData:
    bands: IntervalSet
    s_set: IntervalSet
    levels: tuple[LevelSet, ...]


def _bands_from_levels(coeffs: np.ndarray, levels) -> BandData:
    pts = sorted({x for ls in levels for x in ls.roots})
    band, sset = [], []
    for a, b in zip(pts, pts[1:]):
        mid = 0.5 * (a + b)
        v = np.polyval(coeffs, mid)
        inside = abs(v) < 2
        if abs(abs(v) - 2) <= 1e-9:
            # shallow gap or band edge: q - c with c folded into the constant
            # term resolves the sign far below the rounding of q itself
            c = math.copysign(2.0, v)
            shifted = coeffs.copy()
            shifted[-1] -= c
            inside = np.polyval(shifted, mid) * c < 0
        if inside:
            band.append((a, b))
            if v != 0:
                sset.append((a, b))
    return BandData(IntervalSet(tuple(band), closed=True), IntervalSet(tuple(sset)), tuple(levels))


def band_and_s_sets(q: DiscriminantPoly) -> tuple[IntervalSet, IntervalSet]:
    """Closed bands ``{|q| <= 2}`` and the open set ``{q in (-2,0) u (0,2)}``."""
    data = _bands_from_levels(q.coefficients, _level_sets_batch(q.coefficients[None, :], (-2.0, 0.0, 2.0))[0])
    return data.bands, data.s_set


def _value_key(values) -> tuple[float, ...]:
    vals = tuple(float(v) for v in values)
    return min(vals[k:] + vals[:k] for k in range(len(vals)))


class BandCache:
    """Band data memoized on the cyclic sequence of potential values."""

    def __init__(self):
        self._data: dict[tuple[float, ...], BandData] = {}

    def get_many(self, value_seqs) -> list[BandData]:
        keys = [_value_key(v) for v in value_seqs]
        todo: dict[int, list[tuple[float, ...]]] = {}
        for k in dict.fromkeys(keys):
            if k not in self._data:
                todo.setdefault(len(k), []).append(k)
        for n, ks in todo.items():
            P = np.array([trace_polynomial(k) for k in ks])
            for k, coeffs, levels in zip(ks, P, _level_sets_batch(P, (-2.0, 0.0, 2.0))):
                self._data[k] = _bands_from_levels(coeffs, levels)
        return [self._data[k] for k in keys]


_DEFAULT_CACHE = BandCache()


@dataclass(frozen=True)
class SUnion:
    """Truncation of the S-set at ``max_period`` with per-orbit provenance."""

    intervals: IntervalSet
    max_period: int
    per_orbit: tuple[tuple[PeriodicOrbit, IntervalSet], ...] = field(repr=False)
    bands: tuple[tuple[PeriodicOrbit, IntervalSet], ...] = field(repr=False, default=())

    @property
    def measure(self) -> float:
        return self.intervals.measure

    def witnesses(self, E: float) -> list[PeriodicOrbit]:
        return [p for p, s in self.per_orbit if s.contains(E)]


def union_S(T: TransitionSystem, V: Potential, max_period: int = DEFAULT_MAX_PERIOD,
            orbits=None, cache: BandCache | None = None) -> SUnion:
    if orbits is None:
        orbits = enumerate_periodic_orbits(T, max_period)
    cache = _DEFAULT_CACHE if cache is None else cache
    data = cache.get_many([V.along_orbit(p) for p in orbits])
    per = tuple((p, d.s_set) for p, d in zip(orbits, data))
    bands = tuple((p, d.bands) for p, d in zip(orbits, data))
    return SUnion(IntervalSet.union_all(s for _, s in per), max_period, per, bands)
