import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sftlyap.cocycle import Potential, admissible_words, monodromy
from sftlyap.intervals import IntervalSet
from sftlyap.spectra import (DiscriminantPoly, band_and_s_sets, discriminant_poly,
                             solve_level_set, sturm_count, trace_polynomial, union_S)
from sftlyap.symbolic import (PeriodicOrbit, SubshiftEmbedding, TransitionSystem,
                              enumerate_periodic_orbits)

T2 = TransitionSystem.full_shift(2)
T3 = TransitionSystem.full_shift(3)
R2 = math.sqrt(2)


def poly(*coeffs):
    return DiscriminantPoly(np.array(coeffs, dtype=float))


def test_discriminant_examples():
    V = Potential.from_symbol_values(T2, [0.3, -1.1])
    assert np.allclose(discriminant_poly(PeriodicOrbit((1,)), V).coefficients, [1, 1.1])
    a, b = 0.3, -1.1
    q = discriminant_poly(PeriodicOrbit((0, 1)), V)
    assert np.allclose(q.coefficients, [1, -(a + b), a * b - 2], atol=1e-15)
    zero = Potential.constant(T2, 0.0)
    q3 = discriminant_poly(PeriodicOrbit((0, 0, 1)), zero)
    assert np.array_equal(q3.coefficients, [1, 0, -3, 0])
    assert q.degree == 2 and q.coefficients[0] == 1.0


def chebyshev_reference(n, E):
    prev, cur = 2.0, E
    for _ in range(n - 1):
        prev, cur = cur, E * cur - prev
    return cur


@pytest.mark.parametrize("n", range(1, 9))
def test_chebyshev_identity(n):
    q = DiscriminantPoly(trace_polynomial([0.0] * n))
    for E in np.linspace(-3, 3, 31):
        assert abs(q(E) - chebyshev_reference(n, E)) <= 1e-9


@st.composite
def orbit_and_potential(draw):
    n = draw(st.integers(1, 10))
    word = tuple(draw(st.lists(st.integers(0, 2), min_size=n, max_size=n)))
    try:
        p = PeriodicOrbit(word)
    except ValueError:
        p = PeriodicOrbit(word[:-1] + ((word[-1] + 1) % 3,)) if n > 1 else PeriodicOrbit((0,))
    vals = draw(st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3))
    return p, Potential.from_symbol_values(T3, vals)


@given(orbit_and_potential(), st.lists(st.floats(-3.5, 3.5), min_size=10, max_size=10))
def test_polynomial_matches_numeric_trace(pv, energies):
    p, V = pv
    q = discriminant_poly(p, V)
    for E in energies:
        assert abs(q(E) - np.trace(monodromy(E, V, p))) <= 1e-8


@given(st.lists(st.floats(-1.5, 1.5), min_size=1, max_size=8), st.integers(0, 7))
def test_rotation_invariance(vals, k):
    k %= len(vals)
    a = trace_polynomial(vals)
    b = trace_polynomial(vals[k:] + vals[:k])
    assert np.allclose(a, b, rtol=0, atol=1e-10)


def test_level_set_examples():
    ls = solve_level_set(poly(1, 0), 2.0)
    assert ls.roots == (2.0,)
    ls = solve_level_set(poly(1, 0, -2), -2.0)
    assert len(ls.roots) == 1 and abs(ls.roots[0]) <= 1e-12 and ls.multiplicities == (2,)
    ls = solve_level_set(poly(1, 0, -3, 0), 0.0)
    assert np.allclose(ls.roots, [-math.sqrt(3), 0, math.sqrt(3)], atol=1e-12)
    assert ls.multiplicities == (1, 1, 1)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=8, unique=True).filter(
    lambda r: min((abs(a - b) for i, a in enumerate(r) for b in r[i + 1:]), default=1) > 1e-2))
def test_level_set_recovers_random_roots(roots):
    coeffs = np.poly(roots)
    ls = solve_level_set(coeffs, 0.0)
    assert len(ls.roots) == len(roots) == ls.sturm_count
    assert np.allclose(ls.roots, sorted(roots), atol=1e-9)


def test_sturm_count_simple():
    assert sturm_count(np.array([1.0, 0.0, -3.0, 0.0]), -2, 2) == 3
    assert sturm_count(np.array([1.0, 0.0, 1.0]), -5, 5) == 0


def close_sets(a, b, tol=1e-12):
    return len(a) == len(b) and all(abs(x - y) <= tol and abs(u - v) <= tol
                                    for (x, u), (y, v) in zip(a, b))


def test_band_examples():
    sig, s = band_and_s_sets(poly(1, 0))
    assert close_sets(sig, [(-2, 2)]) and close_sets(s, [(-2, 0), (0, 2)])
    sig, s = band_and_s_sets(poly(1, 0, -2))
    assert close_sets(sig, [(-2, 2)])
    assert close_sets(s, [(-2, -R2), (-R2, 0), (0, R2), (R2, 2)])
    assert math.isclose(s.measure, sig.measure, rel_tol=1e-12)


@given(orbit_and_potential())
def test_band_structure(pv):
    p, V = pv
    q = discriminant_poly(p, V)
    sig, s = band_and_s_sets(q)
    assert len(sig) <= p.period
    assert 0 <= sig.measure <= 4 * p.period
    assert abs(s.measure - sig.measure) <= 1e-9
    for a, b in s:
        mid = 0.5 * (a + b)
        # |q| may round to exactly 2 where q approaches 2 within an ulp
        assert 0 < abs(q(mid)) <= 2


def test_union_examples():
    zero = Potential.constant(T2, 0.0)
    su = union_S(T2, zero, 1)
    assert close_sets(su.intervals, [(-2, 0), (0, 2)])
    su = union_S(T2, Potential.from_symbol_values(T2, [0.0, 1.0]), 1)
    assert math.isclose(su.measure, 5.0, rel_tol=1e-14)
    assert su.intervals.issubset(IntervalSet.of((-2, 3)))
    assert su.witnesses(2.5) == [PeriodicOrbit((1,))]
    assert su.witnesses(0.5) == [PeriodicOrbit((0,)), PeriodicOrbit((1,))]


@st.composite
def small_embeddings(draw):
    n = draw(st.integers(2, 3))
    bits = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    M = np.array(bits).reshape(n, n)
    M[0, 0] = True
    keep = np.array(draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))).reshape(n, n)
    S = M & keep
    S[0, 0] = True
    vals = draw(st.lists(st.floats(-1.5, 1.5), min_size=n, max_size=n))
    return M, S, vals


@given(small_embeddings(), st.integers(1, 6), st.integers(0, 2))
def test_union_monotone_in_system_and_period(emb, m, dm):
    import warnings
    from sftlyap.symbolic import PruningWarning
    M, S, vals = emb
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PruningWarning)
        big, small = TransitionSystem(M), TransitionSystem(S)
    V = Potential(big, 0, {w: vals[w[0]] for w in admissible_words(big, 1)})
    a = union_S(small, V.restrict(small), m).intervals
    b = union_S(big, V, m).intervals
    c = union_S(big, V, m + dm).intervals
    assert a.issubset(b, slack=1e-9)
    assert b.issubset(c, slack=1e-9)
