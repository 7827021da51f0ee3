"""Lyapunov zeros: scanning, removable/unremovable classification, the J functional
and embedding experiments."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cocycle import (DEFAULT_N_SAMPLES, DEFAULT_N_STEPS, LyapunovEstimate, Potential,
                      lyapunov_scan, monodromy)
from .intervals import IntervalSet
from .markov import MarkovMeasure, validate_measure
from .spectra import DEFAULT_MAX_PERIOD, TOL_DELTA, SUnion, union_S
from .symbolic import (PeriodicOrbit, ResourceCapError, SubshiftEmbedding, TransitionSystem,
                       d_sets_and_connectivity, enumerate_periodic_orbits, is_sub_embedding,
                       is_transitive)

DEFAULT_THETA = 0.01
DEFAULT_GRID_COUNT = 1001
CLUSTER_FRACTION = 0.2
J_SLACK = 1e-9
INFINITE_U_MESSAGE = ("J is only defined when the set of unremovable zeros is finite; "
                      "the scan found a zero cluster too wide to be isolated points")

ELLIPTIC = "unremovable-elliptic"
DEGENERATE = "unremovable-degenerate"
REMOVABLE = "removable"
INCONCLUSIVE = "inconclusive"
UNREMOVABLE = (ELLIPTIC, DEGENERATE)


class ConsistencyError(AssertionError):
    pass


class InfiniteZeroSetError(ValueError):
    pass


def energy_window(sup_norm: float) -> tuple[float, float]:
    return -2.5 - sup_norm, 2.5 + sup_norm


def default_grid(sup_norm: float, count: int = DEFAULT_GRID_COUNT) -> np.ndarray:
    lo, hi = energy_window(sup_norm)
    return np.linspace(lo, hi, count)


@dataclass
class ZeroCandidate:
    energy: float
    L_hat: float
    stderr: float
    classification: str = INCONCLUSIVE
    witness: str | None = None
    witness_delta: float | None = None
    cluster_lo: float = math.nan
    cluster_hi: float = math.nan
    cluster_size: int = 1
    max_period: int | None = None


@dataclass
class ScanResult:
    estimates: list[LyapunovEstimate]
    candidates: list[ZeroCandidate]
    grid_step: float
    errors: list[tuple[float, str]] = field(default_factory=list)

    @property
    def widest_cluster_fraction(self) -> float:
        n = max(len(self.estimates), 1)
        return max((c.cluster_size / n for c in self.candidates), default=0.0)


def _estimate_robust(grid, V, mu, n_steps, n_samples, seed):
    try:
        return lyapunov_scan(grid, V, mu, n_steps, n_samples, seed), []
    except Exception:
        # retry point by point so one bad energy does not sink the scan
        ests, errors = [], []
        for j, E in enumerate(grid):
            try:
                ests.extend(lyapunov_scan([E], V, mu, n_steps, n_samples, seed, energy_indices=[j]))
            except Exception as exc:  # noqa: BLE001 - recorded in the report
                errors.append((float(E), repr(exc)))
                ests.append(LyapunovEstimate(float(E), math.nan, math.nan, n_steps, n_samples,
                                             math.nan, int(seed)))
        return ests, errors


def scan_zero_candidates(T: TransitionSystem, V: Potential, mu: MarkovMeasure, grid,
                         theta: float = DEFAULT_THETA, n_steps: int = DEFAULT_N_STEPS,
                         n_samples: int = DEFAULT_N_SAMPLES, seed: int = 0,
                         window: tuple[float, float] | None = None) -> ScanResult:
    """Runs of consecutive grid energies with ``L_hat < theta``, one candidate per run."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    grid = np.asarray(grid, dtype=float)
    if len(grid) == 0:
        return ScanResult([], [], 0.0)
    lo, hi = window if window is not None else energy_window(V.sup_norm)
    if grid.min() < lo - 1e-12 or grid.max() > hi + 1e-12:
        raise ValueError(f"grid leaves the energy window [{lo}, {hi}]")
    ests, errors = _estimate_robust(grid, V, mu, n_steps, n_samples, seed)
    step = float(grid[1] - grid[0]) if len(grid) > 1 else 0.0
    below = [e.value < theta for e in ests]
    cands = []
    i = 0
    while i < len(ests):
        if not below[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(ests) and below[j + 1]:
            j += 1
        run = ests[i:j + 1]
        k = min(range(len(run)), key=lambda t: run[t].raw_mean)
        best = run[k]
        cands.append(ZeroCandidate(best.energy, best.value, best.std_error,
                                   cluster_lo=run[0].energy, cluster_hi=run[-1].energy,
                                   cluster_size=len(run)))
        i = j + 1
    return ScanResult(ests, cands, step, errors)


@dataclass(frozen=True)
class Classification:
    label: str
    witness: PeriodicOrbit | None
    witness_delta: float | None
    max_period: int


def discriminants_at(E: float, orbits: Sequence[PeriodicOrbit], V: Potential) -> np.ndarray:
    return np.array([np.trace(monodromy(E, V, p)) for p in orbits])


def classify_unremovable(E: float, orbits: Sequence[PeriodicOrbit], V: Potential,
                         tol_delta: float = TOL_DELTA) -> Classification:
    """Label an energy by the periodic discriminants of the (truncated) orbit list."""
    if not orbits:
        raise ValueError("classification needs at least one periodic orbit")
    ordered = sorted(orbits, key=lambda p: (p.period, p.word))
    deltas = np.abs(discriminants_at(E, ordered, V))
    m = max(p.period for p in ordered)
    elliptic = np.flatnonzero((deltas > tol_delta) & (deltas < 2 - tol_delta))
    if len(elliptic):
        k = int(elliptic[0])
        signed = float(np.trace(monodromy(E, V, ordered[k])))
        return Classification(ELLIPTIC, ordered[k], signed, m)
    if np.all(np.minimum(deltas, np.abs(deltas - 2)) <= tol_delta):
        return Classification(DEGENERATE, None, None, m)
    return Classification(REMOVABLE, None, None, m)


def classify_candidates(candidates: list[ZeroCandidate], orbits, V: Potential, T: TransitionSystem,
                        tol_delta: float = TOL_DELTA) -> list[ZeroCandidate]:
    for c in candidates:
        cl = classify_unremovable(c.energy, orbits, V, tol_delta)
        c.classification = cl.label
        c.witness = T.format_word(cl.witness.word) if cl.witness else None
        c.witness_delta = cl.witness_delta
        c.max_period = cl.max_period
    return candidates


@dataclass
class CrossCheckReport:
    passed: bool
    checked: int
    mismatches: list[dict]


def corollary_cross_check(candidates: Sequence[ZeroCandidate], orbits: Sequence[PeriodicOrbit],
                          V: Potential, tol: float = TOL_DELTA,
                          raise_on_failure: bool = True) -> CrossCheckReport:
    """Unremovable zeros must lie in the spectrum of every periodic operator."""
    mismatches = []
    for c in candidates:
        if c.classification == INCONCLUSIVE:
            continue
        deltas = np.abs(discriminants_at(c.energy, orbits, V))
        worst = int(np.argmax(deltas))
        in_all = bool(deltas[worst] <= 2 + tol)
        if (c.classification in UNREMOVABLE) != in_all:
            mismatches.append({"energy": c.energy, "classification": c.classification,
                               "orbit": list(orbits[worst].word), "abs_delta": float(deltas[worst])})
    report = CrossCheckReport(not mismatches, len(candidates), mismatches)
    if mismatches and raise_on_failure:
        m = mismatches[0]
        raise ConsistencyError(f"energy {m['energy']!r} classified {m['classification']} but "
                               f"orbit {m['orbit']} has |Delta| = {m['abs_delta']!r}")
    return report


@dataclass
class JInterval:
    lo: float
    hi: float
    measure: float
    N: int
    term: float


@dataclass
class JReport:
    E_0: float
    E_end: float
    lam: float
    U: list[float]
    intervals: list[JInterval]
    complement: float
    N: int
    J: float
    sup_norm: float
    max_period: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "JReport":
        d = dict(d)
        d["intervals"] = [JInterval(**iv) for iv in d["intervals"]]
        return cls(**d)


def _xlogx(x: float, scale: float) -> float:
    return 0.0 if x == 0 else x * math.log(scale * x)


def _n_cell(lam: float, x: float) -> int:
    q = 2 * lam / x
    if math.isfinite(q):
        return int(math.floor(q))
    return math.floor(Fraction(2 * lam) / Fraction(x))  # subnormal x


def _log_ratio(c: float, N: int, lam: float) -> float:
    denom = N * lam if N < 2 ** 1000 else math.inf
    if math.isfinite(denom):
        return math.log(c / denom)
    return math.log(c) - math.log(N) - math.log(lam)


def compute_J(U: Sequence[float], S: IntervalSet, sup_norm: float, finite: bool = True,
              N_floor: int | None = None, max_period: int | None = None) -> JReport:
    """The J functional of sorted unremovable energies ``U`` and the set ``S``.

    ``N_floor`` raises N to at least the given value, for comparisons that hold
    N at an ambient system's level.
    """
    if not finite:
        raise InfiniteZeroSetError(INFINITE_U_MESSAGE)
    E0, Eend = energy_window(sup_norm)
    U = [float(u) for u in U]
    if any(b <= a for a, b in zip(U, U[1:])):
        raise ValueError("U must be strictly increasing")
    if U and (U[0] <= E0 or U[-1] >= Eend):
        raise ValueError(f"U must lie inside ({E0}, {Eend})")
    lam = Eend - E0
    cuts = [E0] + U + [Eend]
    xs = [S.restrict(a, b).measure for a, b in zip(cuts, cuts[1:])]
    Ns = [2 if x == 0 else _n_cell(lam, x) for x in xs]
    N = max(Ns)
    if N_floor is not None:
        N = max(N, int(N_floor))
    c = S.complement_in(E0, Eend).measure
    l1 = len(xs)
    second = 0.0 if c == 0 else c / (lam * l1) * _log_ratio(c, N, lam)
    terms = [_xlogx(x / lam, 1.0) + second for x in xs]
    intervals = [JInterval(a, b, x, n, t) for a, b, x, n, t in zip(cuts, cuts[1:], xs, Ns, terms)]
    return JReport(E0, Eend, lam, U, intervals, c, N, math.fsum(terms), sup_norm, max_period)


@dataclass
class PositivityCertificate:
    certified: bool
    radius_zero: bool
    distinct_values: int
    d_connected: bool
    d_sets: dict

    def __bool__(self):
        return self.certified


def positivity_certificate(T: TransitionSystem, V: Potential) -> PositivityCertificate:
    """Sufficient condition for a positive exponent at every energy: a one-symbol
    potential taking two values over chained follower sets."""
    D, connected = d_sets_and_connectivity(T)
    radius_zero = V.window_radius == 0
    nvals = len(V.distinct_values)
    return PositivityCertificate(radius_zero and nvals >= 2 and connected, radius_zero, nvals,
                                 connected,
                                 {T.labels[j]: sorted(T.labels[k] for k in s) for j, s in D.items()})


@dataclass
class ScanParams:
    grid_count: int = DEFAULT_GRID_COUNT
    grid_lo: float | None = None
    grid_hi: float | None = None
    theta: float = DEFAULT_THETA
    n_steps: int = DEFAULT_N_STEPS
    n_samples: int = DEFAULT_N_SAMPLES
    seed: int = 0
    max_period: int = DEFAULT_MAX_PERIOD
    tol_delta: float = TOL_DELTA
    cluster_fraction: float = CLUSTER_FRACTION
    j_slack: float = J_SLACK

    def grid(self, sup_norm: float) -> np.ndarray:
        lo, hi = energy_window(sup_norm)
        lo = lo if self.grid_lo is None else self.grid_lo
        hi = hi if self.grid_hi is None else self.grid_hi
        return np.linspace(lo, hi, self.grid_count)


@dataclass
class SystemAnalysis:
    """Everything computed for one (system, measure) pair."""

    system: TransitionSystem
    potential: Potential
    measure: MarkovMeasure
    s_union: SUnion
    scan: ScanResult
    orbits: list[PeriodicOrbit]
    cross_check: CrossCheckReport
    finite: bool
    j_report: JReport | None

    @property
    def unremovable(self) -> list[ZeroCandidate]:
        return [c for c in self.scan.candidates if c.classification in UNREMOVABLE]


def analyze_system(T: TransitionSystem, V: Potential, mu: MarkovMeasure, params: ScanParams,
                   sup_norm: float | None = None) -> SystemAnalysis:
    """S-set, zero scan, classification and J for one system.

    ``sup_norm`` fixes the energy window; sub-systems pass the ambient value so
    both sides of a comparison share ``E_0`` and ``E_{l+1}``.
    """
    sup = V.sup_norm if sup_norm is None else sup_norm
    report = validate_measure(mu, T)
    if not report.ergodic:
        raise ValueError("measure is not ergodic")
    orbits = enumerate_periodic_orbits(T, params.max_period)
    su = union_S(T, V, params.max_period, orbits=orbits)
    grid = params.grid(sup)
    scan = scan_zero_candidates(T, V, mu, grid, params.theta, params.n_steps, params.n_samples,
                                params.seed, window=energy_window(sup))
    classify_candidates(scan.candidates, orbits, V, T, params.tol_delta)
    cc = corollary_cross_check(scan.candidates, orbits, V, params.tol_delta, raise_on_failure=False)
    finite = scan.widest_cluster_fraction <= params.cluster_fraction
    j = None
    if finite:
        U = sorted({c.energy for c in scan.candidates if c.classification in UNREMOVABLE})
        j = compute_J(U, su.intervals, sup, max_period=params.max_period)
    return SystemAnalysis(T, V, mu, su, scan, orbits, cc, finite, j)


def j_truncation_sensitivity(an: SystemAnalysis, extra: int = 2) -> dict | None:
    """J recomputed with S truncated at ``max_period + extra`` (same U)."""
    if an.j_report is None:
        return None
    m = an.s_union.max_period + extra
    try:
        su = union_S(an.system, an.potential, m)
    except ResourceCapError as exc:
        return {"max_period": m, "error": str(exc)}
    rep = compute_J(an.j_report.U, su.intervals, an.j_report.sup_norm, max_period=m)
    return {"max_period": m, "S_measure": su.measure, "N": rep.N, "J": rep.J,
            "delta_J": rep.J - an.j_report.J}


def _matched(c: ZeroCandidate, pool: Sequence[ZeroCandidate], step: float) -> bool:
    for d in pool:
        lo = min(d.cluster_lo, d.energy) - step - 1e-12
        hi = max(d.cluster_hi, d.energy) + step + 1e-12
        if lo <= c.energy <= hi:
            return True
    return False


def j_grid_sensitivity(U: Sequence[float], S: IntervalSet, sup_norm: float, step: float) -> float:
    """Largest change of J when one unremovable energy moves by one grid step."""
    if step == 0 or not U:
        return 0.0
    base = compute_J(U, S, sup_norm).J
    worst = 0.0
    E0, Eend = energy_window(sup_norm)
    for i in range(len(U)):
        for dx in (-step, step):
            moved = list(U)
            moved[i] += dx
            if sorted(moved) != moved or len(set(moved)) != len(moved) \
                    or moved[0] <= E0 or moved[-1] >= Eend:
                continue
            worst = max(worst, abs(compute_J(moved, S, sup_norm).J - base))
    return worst


@dataclass
class Assertion:
    name: str
    status: str  # pass | fail | skipped
    detail: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    """Assertion verdicts plus the per-system analyses they were computed from.

    The spectral cross-checks of both systems are diagnostics: a mismatch
    marks a candidate that is not an actual zero, not a failed comparison.
    """

    assertions: list[Assertion]
    super_analysis: SystemAnalysis
    sub_analysis: SystemAnalysis
    params: ScanParams

    @property
    def passed(self) -> bool:
        return all(a.status != "fail" for a in self.assertions)

    @property
    def cross_checks(self) -> dict[str, CrossCheckReport]:
        return {"super": self.super_analysis.cross_check, "sub": self.sub_analysis.cross_check}


def run_monotonicity_experiment(e: SubshiftEmbedding, mu: MarkovMeasure, mu_sub: MarkovMeasure,
                                V: Potential, params: ScanParams | None = None
                                ) -> ExperimentReport:
    """Compare a system with a sub-system: S inclusion, unremovable-zero inclusion,
    N and J monotonicity, and the S-restricted zero inclusion for transitive systems."""
    params = params or ScanParams()
    if not is_sub_embedding(e):
        raise ValueError("not a valid subshift embedding")
    sup = V.sup_norm
    V_sub = V.restrict(e.sub)
    big = analyze_system(e.super, V, mu, params, sup)
    small = analyze_system(e.sub, V_sub, mu_sub, params, sup)
    step = big.scan.grid_step
    out: list[Assertion] = []

    s_ok = small.s_union.intervals.issubset(big.s_union.intervals, slack=1e-9)
    out.append(Assertion("s_inclusion", "pass" if s_ok else "fail",
                         {"measure_sub": small.s_union.measure, "measure_super": big.s_union.measure}))

    missing = [c.energy for c in big.unremovable if not _matched(c, small.unremovable, step)]
    out.append(Assertion("unremovable_inclusion", "fail" if missing else "pass",
                         {"unmatched_super_energies": missing,
                          "super": [c.energy for c in big.unremovable],
                          "sub": [c.energy for c in small.unremovable]}))

    if is_transitive(e.super):
        in_s = [c for c in big.scan.candidates if big.s_union.intervals.contains(c.energy)]
        missing = [c.energy for c in in_s if not _matched(c, small.scan.candidates, step)]
        out.append(Assertion("s_zero_inclusion", "fail" if missing else "pass",
                             {"unmatched_super_energies": missing}))
    else:
        out.append(Assertion("s_zero_inclusion", "skipped", {"reason": "super system not transitive"}))

    if big.j_report is None or small.j_report is None:
        reason = {"reason": "zero cluster wider than the finiteness threshold",
                  "super_finite": big.finite, "sub_finite": small.finite}
        out.append(Assertion("n_monotone", "skipped", reason))
        out.append(Assertion("j_monotone", "skipped", reason))
    else:
        jb, js = big.j_report, small.j_report
        out.append(Assertion("n_monotone", "pass" if js.N >= jb.N else "fail",
                             {"N_sub": js.N, "N_super": jb.N}))
        slack = (params.j_slack
                 + j_grid_sensitivity(jb.U, big.s_union.intervals, sup, step)
                 + j_grid_sensitivity(js.U, small.s_union.intervals, sup, step))
        out.append(Assertion("j_monotone", "pass" if jb.J >= js.J - slack else "fail",
                             {"J_super": jb.J, "J_sub": js.J, "slack": slack}))
    return ExperimentReport(out, big, small, params)
