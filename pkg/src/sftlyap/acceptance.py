"""Acceptance suite: one function per criterion, each returning a CriterionResult."""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

from .cocycle import (Potential, admissible_words, cocycle_product, direct_product, holonomy,
                      lyapunov_scan, periodic_lyapunov, transport_z, z_point)
from .intervals import IntervalSet
from .markov import MarkovMeasure, sample_orbit
from .spectra import discriminant_poly, union_S
from .symbolic import (PeriodicOrbit, PruningWarning, SubshiftEmbedding, SymbolicPoint,
                       TransitionSystem, enumerate_periodic_orbits, is_sub_embedding)
from .zeros import (compute_J, default_grid, positivity_certificate, run_monotonicity_experiment,
                    scan_zero_candidates)


@dataclass
class CriterionResult:
    key: str
    title: str
    passed: bool
    seconds: float
    limit_seconds: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        limit = f" (limit {self.limit_seconds:.0f} s)" if self.limit_seconds else ""
        return f"[{verdict}] {self.key}: {self.title} [{self.seconds:.1f} s{limit}]"


def _timed(key: str, title: str, limit: float | None, body: Callable[[], tuple[bool, dict]]):
    t0 = time.perf_counter()
    ok, details = body()
    dt = time.perf_counter() - t0
    if limit is not None and dt >= limit:
        ok = False
        details["runtime_exceeded"] = True
    return CriterionResult(key, title, bool(ok), dt, limit, details)


def bundled_configs() -> dict[str, str]:
    root = resources.files("sftlyap").joinpath("corpus")
    return {p.name: p.read_text() for p in sorted(root.iterdir(), key=lambda p: p.name)
            if p.name.endswith(".yaml")}


def embedding_corpus() -> dict[str, object]:
    """Parsed bundled configs that describe a system/subsystem comparison."""
    from .config import parse_config
    out = {}
    for name, text in bundled_configs().items():
        cfg = parse_config(text)
        if cfg.functional.S is None and name != "positivity.yaml":
            out[name] = cfg
    return out


def constant_potential_oracle() -> CriterionResult:
    def body():
        T = TransitionSystem.full_shift(2)
        V = Potential.constant(T, 0.0)
        mu = MarkovMeasure.bernoulli([0.5, 0.5])
        outside = [2.2, 2.5, 3.0, 4.0]
        inside = [-1.5, 0.3, 1.9]
        ests = lyapunov_scan(outside + inside, V, mu, 100_000, 20, seed=0)
        errs = {E: abs(e.value - math.log((abs(E) + math.sqrt(E * E - 4)) / 2))
                for E, e in zip(outside, ests)}
        ins = {E: e.value for E, e in zip(inside, ests[len(outside):])}
        ok = max(errs.values()) <= 0.02 and max(ins.values()) <= 0.02
        return ok, {"abs_error_outside": errs, "L_hat_inside": ins}
    return _timed("constant-potential", "constant potential against closed form", 30, body)


def discriminant_oracle(seed: int = 0) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        T = TransitionSystem.full_shift(3)
        V = Potential.from_symbol_values(T, rng.uniform(-1, 1, 3).tolist())
        worst = 0.0
        for _ in range(20):
            n = int(rng.integers(1, 11))
            while True:
                w = tuple(int(s) for s in rng.integers(0, 3, n))
                try:
                    p = PeriodicOrbit(w)
                    break
                except ValueError:
                    continue
            q = discriminant_poly(p, V)
            vals = V.along_orbit(p)
            for E in rng.uniform(-3.5, 3.5, 10):
                worst = max(worst, abs(q(E) - np.trace(direct_product(E, vals))))
        cheb = 0.0
        for n in range(1, 9):
            q = discriminant_poly(PeriodicOrbit((0,) * (n - 1) + (1,)), Potential.constant(T, 0.0))
            for E in np.linspace(-3, 3, 25):
                ref = 2 * np.polynomial.chebyshev.chebval(E / 2, [0] * n + [1])
                cheb = max(cheb, abs(q(E) - ref))
        return worst <= 1e-8 and cheb <= 1e-9, {"max_trace_error": worst, "max_chebyshev_error": cheb}
    return _timed("discriminant", "discriminant coefficients against monodromy traces", None, body)


def random_embedding(rng: np.random.Generator) -> tuple[SubshiftEmbedding, Potential]:
    """A random transitive-ish super system on 2-3 symbols, a nonempty sub system and V."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PruningWarning)
        while True:
            n = int(rng.integers(2, 4))
            M = rng.random((n, n)) < 0.7
            np.fill_diagonal(M, M.diagonal() | (rng.random(n) < 0.5))
            T = TransitionSystem(M)
            if T.is_empty:
                continue
            S = M & (rng.random((n, n)) < 0.7)
            sub = TransitionSystem(S)
            if sub.is_empty:
                continue
            e = SubshiftEmbedding(sub, T)
            if not is_sub_embedding(e):
                continue
            r = int(rng.integers(0, 2))
            table = {w: float(rng.uniform(-1.5, 1.5)) for w in admissible_words(T, 2 * r + 1)}
            return e, Potential(T, r, table)


def s_monotonicity(seed: int = 0, pairs: int = 20, max_period: int = 8) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        bad = []
        for k in range(pairs):
            e, V = random_embedding(rng)
            big = union_S(e.super, V, max_period)
            small = union_S(e.sub, V.restrict(e.sub), max_period)
            if not small.intervals.issubset(big.intervals, slack=1e-9):
                bad.append(k)
        return not bad, {"pairs": pairs, "failing_pairs": bad}
    return _timed("s-monotonicity", "S(sub) inside S(super) on random embeddings", 10, body)


def periodic_approximation(n_energies: int = 10, max_period: int = 14) -> CriterionResult:
    def body():
        T = TransitionSystem.golden_mean()
        V = Potential.from_symbol_values(T, [0.5, 0.0])
        mu = MarkovMeasure.uniform(T)
        orbits = enumerate_periodic_orbits(T, max_period)
        grid = np.linspace(-2.5 - V.sup_norm, 2.5 + V.sup_norm, n_energies)
        ests = lyapunov_scan(grid, V, mu, 100_000, 20, seed=0)
        gaps = {}
        for E, est in zip(grid, ests):
            gaps[float(E)] = min(abs(periodic_lyapunov(E, V, p) - est.value) for p in orbits)
        return max(gaps.values()) <= 0.1, {"min_gap_per_energy": gaps, "orbits": len(orbits)}
    return _timed("periodic-approximation", "periodic exponents approximate the ergodic one",
                  120, body)


def positivity() -> CriterionResult:
    def body():
        T = TransitionSystem.full_shift(2)
        V = Potential.from_symbol_values(T, [0.0, 1.0])
        mu = MarkovMeasure.bernoulli([0.5, 0.5])
        cert = positivity_certificate(T, V)
        scan = scan_zero_candidates(T, V, mu, default_grid(V.sup_norm, 101), theta=0.005)
        low = min(e.value for e in scan.estimates)
        ok = bool(cert) and low >= 0.005 and not scan.candidates
        return ok, {"certificate": cert.certified, "min_L_hat": low,
                    "candidates": len(scan.candidates)}
    return _timed("positivity", "two-valued potential: certificate and positive scan", 120, body)


def _corpus_runs(cache={}):
    if "runs" not in cache:
        runs = {}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PruningWarning)
            for name, cfg in embedding_corpus().items():
                runs[name] = run_monotonicity_experiment(cfg.embedding(), cfg.measure_obj(),
                                                         cfg.submeasure_obj(), cfg.potential_obj(),
                                                         cfg.scan)
        cache["runs"] = runs
    return cache["runs"]


def classifier_consistency() -> CriterionResult:
    def body():
        out = {}
        for name, rep in _corpus_runs().items():
            out[name] = {k: {"passed": c.passed, "checked": c.checked, "mismatches": c.mismatches}
                         for k, c in rep.cross_checks.items()}
        ok = all(c["passed"] for d in out.values() for c in d.values())
        return ok, out
    return _timed("classifier-consistency", "unremovable iff in every periodic spectrum", None, body)


def j_fixture() -> CriterionResult:
    def body():
        rep = compute_J([], IntervalSet.of((-2, 0), (0, 2)), 0.0)
        return abs(rep.J - (-0.639032)) <= 1e-5, {"J": rep.J, "N": rep.N}
    return _timed("j-fixture", "J arithmetic fixture", None, body)


def synthetic_j_pair(rng: np.random.Generator):
    """Random (U, S) and a refinement U' of U with S' inside S."""
    sup = float(rng.uniform(0, 2))
    lo, hi = -2.5 - sup, 2.5 + sup
    k = int(rng.integers(1, 6))
    pts = np.sort(rng.uniform(lo, hi, 2 * k))
    S = IntervalSet(tuple(zip(pts[::2].tolist(), pts[1::2].tolist())))
    U = sorted(set(rng.uniform(lo, hi, int(rng.integers(0, 5))).tolist()))
    U2 = sorted(set(U) | set(rng.uniform(lo, hi, int(rng.integers(0, 4))).tolist()))
    kept = []
    for a, b in S:
        if rng.random() < 0.8:
            x, y = np.sort(rng.uniform(a, b, 2)).tolist()
            kept.append((x, y))
    return sup, U, S, U2, IntervalSet(tuple(kept))


def j_monotonicity(seed: int = 0, pairs: int = 200) -> CriterionResult:
    def body():
        corpus = {}
        for name, rep in _corpus_runs().items():
            corpus[name] = {a.name: a.status for a in rep.assertions
                            if a.name in ("n_monotone", "j_monotone")}
        rng = np.random.default_rng(seed)
        violations = []
        for k in range(pairs):
            sup, U, S, U2, S2 = synthetic_j_pair(rng)
            base = compute_J(U, S, sup)
            refined = compute_J(U2, S2, sup, N_floor=base.N)
            if refined.J > base.J + 1e-12:
                # does some refined cell inside a nonempty base cell lose all of S?
                emptied = any(r.measure == 0 and any(b.measure > 0 and b.lo <= r.lo and r.hi <= b.hi
                                                     for b in base.intervals)
                              for r in refined.intervals)
                violations.append({"pair": k, "J": base.J, "J_refined": refined.J,
                                   "emptied_cell": emptied})
        corpus_ok = all(s != "fail" for d in corpus.values() for s in d.values())
        return corpus_ok and not violations, {"corpus": corpus, "synthetic_pairs": pairs,
                                              "synthetic_violations": violations}
    return _timed("j-monotonicity", "N and J monotone under embedding", None, body)


def cocycle_invariants(seed: int = 0) -> CriterionResult:
    def body():
        rng = np.random.default_rng(seed)
        T = TransitionSystem.full_shift(2)
        V = Potential.from_symbol_values(T, [0.0, 1.0])
        mu = MarkovMeasure.bernoulli([0.5, 0.5])
        word = sample_orbit(mu, 1_000_000, seed)
        pt = SymbolicPoint((0,), tuple(int(s) for s in word), (0,), 0)
        prod = cocycle_product(0.4, V, pt, 1_000_000, check_det=False)
        det_err = abs(math.expm1(prod.log_det))

        ident = 0.0
        core = tuple(int(s) for s in rng.integers(0, 2, 120))
        w = SymbolicPoint((1,), core, (0, 1), -60)
        for _ in range(20):
            m, n = (int(x) for x in rng.integers(-50, 51, 2))
            E = float(rng.uniform(-3, 3))
            lhs = cocycle_product(E, V, w, m + n).full()
            Am = cocycle_product(E, V, w.shift(n), m).full()
            An = cocycle_product(E, V, w, n).full()
            # error relative to the factor sizes: mixed signs cancel in lhs
            scale = np.linalg.norm(Am, 2) * np.linalg.norm(An, 2)
            ident = max(ident, float(np.abs(lhs - Am @ An).max() / scale))

        hol = 0.0
        for _ in range(10):
            E = float(rng.uniform(-3, 3))
            a = SymbolicPoint((0,), rng.integers(0, 2, 6), (1,), -3)
            # same future, different past; same past, different future
            fut = SymbolicPoint((1,), tuple(rng.integers(0, 2, 3)) + tuple(a.window(0, 3)), (1,), -3)
            past = SymbolicPoint((0,), tuple(a.window(-3, 1)) + tuple(rng.integers(0, 2, 2)), (1, 0), -3)
            for kind, other in (("stable", fut), ("unstable", past)):
                H = holonomy(E, V, a, other, kind).matrix
                hol = max(hol, float(np.abs(H - np.eye(2)).max()))

        resid = trans = 0.0
        elliptic = 0
        for p in enumerate_periodic_orbits(T, 6):
            vals = V.along_orbit(p)
            for E in np.linspace(-2.5, 3.5, 25):
                M = direct_product(E, vals)
                if abs(np.trace(M)) >= 2 - 1e-6:
                    continue
                elliptic += 1
                z = z_point(E, V, p)
                resid = max(resid, abs(transport_z(z, M) - z) / max(1.0, abs(z)))
                z1 = complex(_z_at_shift(E, V, p))
                a0 = direct_product(E, vals[:1])
                trans = max(trans, abs(transport_z(z, a0) - z1) / max(1.0, abs(z1)))
        ok = det_err <= 1e-6 and ident <= 1e-9 and hol == 0.0 and resid <= 1e-10 and trans <= 1e-9
        return ok, {"det_error_1e6_steps": det_err, "cocycle_identity_error": ident,
                    "holonomy_identity_error": hol, "z_residual": resid,
                    "z_transport_error": trans, "elliptic_cases": elliptic}
    return _timed("cocycle-invariants", "determinant, cocycle identity, holonomies, Z-points",
                  None, body)


def _z_at_shift(E: float, V: Potential, p: PeriodicOrbit) -> complex:
    from .cocycle import elliptic_fixed_point
    pt = p.point().shift(1)
    return elliptic_fixed_point(direct_product(E, V.along(pt, 0, p.period)))


CRITERIA: tuple[Callable[[], CriterionResult], ...] = (
    constant_potential_oracle, discriminant_oracle, s_monotonicity, periodic_approximation,
    positivity, classifier_consistency, j_fixture, j_monotonicity, cocycle_invariants,
)


def run_all(echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    out = []
    for crit in CRITERIA:
        res = crit()
        if echo:
            echo(res.line)
        out.append(res)
    return out
