import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sftlyap.acceptance import bundled_configs
from sftlyap.cocycle import Potential
from sftlyap.config import parse_config
from sftlyap.intervals import IntervalSet
from sftlyap.markov import MarkovMeasure
from sftlyap.spectra import union_S
from sftlyap.symbolic import (PeriodicOrbit, SubshiftEmbedding, TransitionSystem,
                              enumerate_periodic_orbits)
from sftlyap.zeros import (DEGENERATE, ELLIPTIC, REMOVABLE, UNREMOVABLE, ConsistencyError,
                           InfiniteZeroSetError, JReport, ScanParams, ZeroCandidate,
                           classify_unremovable, compute_J, corollary_cross_check, default_grid,
                           energy_window, positivity_certificate, run_monotonicity_experiment,
                           scan_zero_candidates)

T2 = TransitionSystem.full_shift(2)
ZERO = Potential.constant(T2, 0.0)
FIX = [PeriodicOrbit((0,))]
LAM = 5.0


# scanning

def test_scan_constant_potential_band():
    mu = MarkovMeasure.bernoulli([0.5, 0.5])
    grid = np.linspace(-2.5, 2.5, 101)
    res = scan_zero_candidates(T2, ZERO, mu, grid, theta=0.02, n_steps=5000, n_samples=4)
    assert len(res.candidates) == 1
    c = res.candidates[0]
    assert abs(c.cluster_lo + 2) <= 0.05 and abs(c.cluster_hi - 2) <= 0.05
    assert c.cluster_lo <= c.energy <= c.cluster_hi
    assert c.L_hat == min(e.value for e in res.estimates)
    assert res.widest_cluster_fraction > 0.2


def test_scan_two_valued_potential_is_positive():
    V = Potential.from_symbol_values(T2, [0.0, 1.0])
    mu = MarkovMeasure.bernoulli([0.5, 0.5])
    res = scan_zero_candidates(T2, V, mu, default_grid(1.0, 21), theta=0.005,
                               n_steps=20000, n_samples=8)
    assert res.candidates == []


def test_scan_edge_cases():
    mu = MarkovMeasure.bernoulli([0.5, 0.5])
    assert scan_zero_candidates(T2, ZERO, mu, []).candidates == []
    with pytest.raises(ValueError):
        scan_zero_candidates(T2, ZERO, mu, [3.0])
    with pytest.raises(ValueError):
        scan_zero_candidates(T2, ZERO, mu, [0.0], theta=0)


def test_scan_records_estimator_failures():
    G = TransitionSystem.golden_mean()
    V = Potential(G, 1, {w: 0.0 for w in [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 0, 1)]})
    res = scan_zero_candidates(G, V, MarkovMeasure.bernoulli([0.5, 0.5]), [0.0, 1.0],
                               n_steps=200, n_samples=2)
    assert len(res.errors) == 2 and all(math.isnan(e.value) for e in res.estimates)


# classification

def test_classification_examples():
    c = classify_unremovable(1.0, FIX, ZERO)
    assert c.label == ELLIPTIC and c.witness == FIX[0] and c.witness_delta == 1.0
    assert classify_unremovable(2.0, FIX, ZERO).label == DEGENERATE
    assert classify_unremovable(5.0, FIX, ZERO).label == REMOVABLE
    assert classify_unremovable(0.0, FIX, ZERO).label == DEGENERATE
    assert classify_unremovable(1.0, FIX, ZERO).max_period == 1


@given(st.floats(-4, 4), st.randoms(use_true_random=False), st.integers(1, 6))
def test_classification_ignores_orbit_order(E, rnd, m):
    V = Potential.from_symbol_values(T2, [0.0, 1.0])
    orbits = enumerate_periodic_orbits(T2, m)
    shuffled = list(orbits)
    rnd.shuffle(shuffled)
    a = classify_unremovable(E, orbits, V)
    b = classify_unremovable(E, shuffled, V)
    assert a == b


def cand(E, label):
    return ZeroCandidate(E, 0.0, 0.0, classification=label)


def test_cross_check_examples():
    rep = corollary_cross_check([cand(1.0, ELLIPTIC), cand(5.0, REMOVABLE)], FIX, ZERO)
    assert rep.passed and rep.checked == 2
    with pytest.raises(ConsistencyError, match="energy 5.0"):
        corollary_cross_check([cand(5.0, ELLIPTIC)], FIX, ZERO)
    rep = corollary_cross_check([cand(1.0, REMOVABLE)], FIX, ZERO, raise_on_failure=False)
    assert not rep.passed and rep.mismatches[0]["orbit"] == [0]


@given(st.floats(-4, 4.5), st.integers(1, 5))
def test_cross_check_passes_on_classifier_output(E, m):
    V = Potential.from_symbol_values(T2, [0.0, 1.0])
    orbits = enumerate_periodic_orbits(T2, m)
    c = cand(E, classify_unremovable(E, orbits, V).label)
    # an elliptic label may sit outside another orbit's spectrum when E is not
    # an actual zero; the other two labels always agree with the spectra
    if c.classification != ELLIPTIC:
        assert corollary_cross_check([c], orbits, V).passed


# J functional

def test_J_examples():
    rep = compute_J([], IntervalSet.of((-2, 0), (0, 2)), 0.0)
    expected = 0.8 * math.log(0.8) + 0.2 * math.log(1 / 10)
    assert rep.J == pytest.approx(expected, abs=1e-15)
    assert abs(rep.J - (-0.639032)) <= 1e-5
    assert (rep.E_0, rep.E_end, rep.lam, rep.N, rep.complement) == (-2.5, 2.5, 5.0, 2, 1.0)
    rep = compute_J([], IntervalSet(), 0.0)
    assert rep.J == math.log(0.5) and rep.N == 2


def test_J_input_errors():
    S = IntervalSet.of((-1, 1))
    with pytest.raises(ValueError):
        compute_J([0.5, 0.1], S, 0.0)
    with pytest.raises(ValueError):
        compute_J([3.0], S, 0.0)
    with pytest.raises(InfiniteZeroSetError, match="finite"):
        compute_J([], S, 0.0, finite=False)


@st.composite
def j_inputs(draw):
    sup = draw(st.floats(0, 2))
    lo, hi = energy_window(sup)
    pts = sorted(draw(st.lists(st.floats(lo, hi), max_size=10, unique=True)))
    S = IntervalSet(tuple(zip(pts[::2], pts[1::2])))
    U = sorted(set(draw(st.lists(st.floats(lo + 1e-6, hi - 1e-6), max_size=5))))
    return sup, U, S


@given(j_inputs())
def test_J_report_structure(inp):
    sup, U, S = inp
    rep = compute_J(U, S, sup)
    assert rep.E_0 == -2.5 - sup and rep.E_end == 2.5 + sup and rep.lam == rep.E_end - rep.E_0
    assert rep.N == max(iv.N for iv in rep.intervals)
    for iv in rep.intervals:
        if iv.measure == 0:
            assert iv.N == 2
            continue
        q = 2 * rep.lam / iv.measure
        exact = math.floor(q) if math.isfinite(q) else math.floor(Fraction(2 * rep.lam) / Fraction(iv.measure))
        assert iv.N == exact >= 2
    assert abs(math.fsum(iv.term for iv in rep.intervals) - rep.J) <= 1e-12
    assert rep == compute_J(U, S, sup)
    back = JReport.from_dict(json.loads(json.dumps(rep.to_dict())))
    assert back == rep and back.J.hex() == rep.J.hex()


@given(j_inputs(), st.lists(st.floats(0, 1), max_size=4))
def test_refining_U_never_increases_J(inp, extra):
    sup, U, S = inp
    lo, hi = energy_window(sup)
    U2 = sorted(set(U) | {lo + (hi - lo) * (0.001 + 0.998 * t) for t in extra})
    assert compute_J(U2, S, sup).J <= compute_J(U, S, sup).J + 1e-12


def shrink(S, U, lo, hi, fracs):
    """Shrink S inside each cell of U without emptying any cell that meets S."""
    cuts = [lo] + list(U) + [hi]
    out = []
    for (a, b), f in zip(zip(cuts, cuts[1:]), fracs):
        cell = S.restrict(a, b)
        if not cell:
            continue
        kept = [(x, y) for x, y in cell]
        x, y = kept[0]
        z = min(y, x + max(f, 0.05) * (y - x))
        kept[0] = (x, z if z > x else y)
        out.extend(kept[:1] + [iv for iv, keep in zip(kept[1:], [f > 0.3] * len(kept)) if keep])
    return IntervalSet(tuple(out))


@given(j_inputs(), st.lists(st.floats(0, 1), min_size=6, max_size=6))
def test_shrinking_S_without_emptying_cells_never_increases_J(inp, fracs):
    sup, U, S = inp
    lo, hi = energy_window(sup)
    S2 = shrink(S, U, lo, hi, fracs)
    assert S2.issubset(S)
    base = compute_J(U, S, sup)
    assert compute_J(U, S2, sup, N_floor=base.N).J <= base.J + 1e-12


def test_emptied_cell_can_raise_J():
    # a cell whose S-part vanishes drops to N_j = 2 and loses its x ln x term,
    # so J increases even with N held at the larger system's value
    S = IntervalSet.of((0.0, 0.5))
    base = compute_J([], S, 0.0)
    assert base.N == 20
    emptied = compute_J([], IntervalSet(), 0.0, N_floor=base.N)
    assert emptied.J > base.J
    assert emptied.J == pytest.approx(math.log(5 / 100))


# positivity

def test_certificate_examples():
    assert positivity_certificate(T2, Potential.from_symbol_values(T2, [0.0, 1.0]))
    assert not positivity_certificate(T2, Potential.constant(T2, 0.3))
    diag = TransitionSystem(np.eye(2, dtype=bool))
    cert = positivity_certificate(diag, Potential.from_symbol_values(diag, [0.0, 1.0]))
    assert not cert and not cert.d_connected and cert.distinct_values == 2
    w = Potential(T2, 1, {k: float(k[1]) for k in Potential.constant(T2, 0, 1).table})
    assert not positivity_certificate(T2, w)


# monotonicity experiments

FAST = ScanParams(grid_count=81, n_steps=5000, n_samples=4, max_period=6, theta=0.002)


def test_golden_in_full_experiment():
    G = TransitionSystem.golden_mean()
    V = Potential.from_symbol_values(T2, [0.5, 0.0])
    rep = run_monotonicity_experiment(SubshiftEmbedding(G, T2), MarkovMeasure.bernoulli([0.5, 0.5]),
                                      MarkovMeasure.uniform(G), V, FAST)
    status = {a.name: a.status for a in rep.assertions}
    assert set(status) == {"s_inclusion", "unremovable_inclusion", "s_zero_inclusion",
                           "n_monotone", "j_monotone"}
    assert status["s_inclusion"] == "pass"
    assert union_S(G, V.restrict(G), 6).intervals.issubset(union_S(T2, V, 6).intervals)


def test_reflexive_experiment_has_equality():
    V = Potential.from_symbol_values(T2, [0.5, 0.0])
    mu = MarkovMeasure.bernoulli([0.5, 0.5])
    rep = run_monotonicity_experiment(SubshiftEmbedding(T2, T2), mu, mu, V, FAST)
    assert rep.passed
    b, s = rep.super_analysis, rep.sub_analysis
    assert b.j_report == s.j_report
    assert [c.energy for c in b.scan.candidates] == [c.energy for c in s.scan.candidates]


def test_constant_potential_skips_J():
    mu = MarkovMeasure.bernoulli([0.5, 0.5])
    rep = run_monotonicity_experiment(SubshiftEmbedding(T2, T2), mu, mu, ZERO, FAST)
    status = {a.name: a.status for a in rep.assertions}
    assert status["n_monotone"] == status["j_monotone"] == "skipped"
    assert rep.super_analysis.j_report is None


def test_other_measure_same_unremovable_zeros():
    cfg = parse_config(bundled_configs()["dimer_reflexive.yaml"])
    assert not np.array_equal(cfg.measure_obj().P, cfg.submeasure_obj().P)
    rep = run_monotonicity_experiment(cfg.embedding(), cfg.measure_obj(), cfg.submeasure_obj(),
                                      cfg.potential_obj(), cfg.scan)
    step = rep.super_analysis.scan.grid_step
    big = sorted(c.energy for c in rep.super_analysis.unremovable)
    small = sorted(c.energy for c in rep.sub_analysis.unremovable)
    assert big == pytest.approx([-0.625, 0.625], abs=step)
    assert small == pytest.approx(big, abs=step)
    assert rep.passed


def test_experiment_rejects_bad_embedding():
    G = TransitionSystem.golden_mean()
    V = Potential.from_symbol_values(G, [0.5, 0.0])
    with pytest.raises(ValueError):
        run_monotonicity_experiment(SubshiftEmbedding(T2, G), MarkovMeasure.uniform(G),
                                    MarkovMeasure.uniform(G), V, FAST)
