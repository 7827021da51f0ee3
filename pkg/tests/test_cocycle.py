import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sftlyap.cocycle import (DomainError, Potential, admissible_words, cocycle_product,
                             direct_product, elliptic_fixed_point, estimate_lyapunov, holonomy,
                             lyapunov_scan, monodromy, one_step_matrix, periodic_lyapunov,
                             potential_eval, product_matrix, transport_z, z_point, ZINF)
from sftlyap.markov import MarkovMeasure, derive_seed, sample_orbit
from sftlyap.symbolic import PeriodicOrbit, SymbolicPoint, TransitionSystem

GOLD = math.log((3 + math.sqrt(5)) / 2)
T2 = TransitionSystem.full_shift(2)
V01 = Potential.from_symbol_values(T2, [0.0, 1.0])


def window_potential(seed=0):
    rng = np.random.default_rng(seed)
    return Potential(T2, 1, {w: float(rng.uniform(-1, 1)) for w in admissible_words(T2, 3)})


# potential

def test_potential_eval_examples():
    w = SymbolicPoint((0,), (), (1,), 1)
    assert potential_eval(V01, w, 3) == 1.0
    assert potential_eval(V01, w, -4) == 0.0
    c = Potential.constant(T2, 0.7)
    assert all(potential_eval(c, w, n) == 0.7 for n in range(-5, 5))
    V = window_potential()
    p = PeriodicOrbit((0, 1)).point()
    vals = [potential_eval(V, p, n) for n in range(8)]
    assert vals[0::2] == [V.table[(1, 0, 1)]] * 4
    assert vals[1::2] == [V.table[(0, 1, 0)]] * 4


def test_potential_must_be_total():
    with pytest.raises(ValueError, match="misses"):
        Potential(T2, 0, {(0,): 1.0})
    with pytest.raises(ValueError, match="inadmissible"):
        Potential(TransitionSystem.golden_mean(), 1,
                  {w: 0.0 for w in admissible_words(T2, 3)})


def test_restrict_keeps_values():
    V = window_potential(3)
    G = TransitionSystem.golden_mean()
    R = V.restrict(G)
    assert R.table == {w: V.table[w] for w in admissible_words(G, 3)}


# one-step matrix and products

def test_one_step_examples():
    assert np.array_equal(one_step_matrix(0, 0), [[0, -1], [1, 0]])
    assert np.array_equal(one_step_matrix(3, 1), [[2, -1], [1, 0]])


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_one_step_trace_and_det(E, v):
    A = one_step_matrix(E, v)
    assert A[0, 0] + A[1, 1] == E - v
    assert A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0] == 1


def test_product_examples():
    w = SymbolicPoint((0,), (), (0,))
    zero = Potential.constant(T2, 0.0)
    p0 = cocycle_product(0.7, zero, w, 0)
    assert np.array_equal(p0.matrix, np.eye(2)) and p0.log_scale == 0
    assert np.allclose(cocycle_product(0.0, zero, w, 4).full(), np.eye(2), atol=1e-14)


@st.composite
def random_point(draw):
    core = tuple(draw(st.lists(st.integers(0, 1), min_size=0, max_size=40)))
    lc = tuple(draw(st.lists(st.integers(0, 1), min_size=1, max_size=3)))
    rc = tuple(draw(st.lists(st.integers(0, 1), min_size=1, max_size=3)))
    return SymbolicPoint(lc, core, rc, draw(st.integers(-40, 0)))


@given(random_point(), st.integers(-50, 50), st.integers(-50, 50), st.floats(-3, 3),
       st.sampled_from(["r0", "r1"]))
def test_cocycle_identity(w, m, n, E, kind):
    V = V01 if kind == "r0" else window_potential()
    lhs = cocycle_product(E, V, w, m + n).full()
    An = cocycle_product(E, V, w.shift(m), n).full()
    Am = cocycle_product(E, V, w, m).full()
    scale = np.linalg.norm(An, 2) * np.linalg.norm(Am, 2)
    assert np.abs(lhs - An @ Am).max() <= 1e-9 * scale


@given(random_point(), st.integers(-40, 40), st.floats(-4, 4))
def test_renormalized_matches_direct(w, n, E):
    prod = cocycle_product(E, window_potential(1), w, n)
    direct = product_matrix(E, window_potential(1), w, n)
    assert np.allclose(prod.full(), direct, rtol=1e-10, atol=1e-10 * np.abs(direct).max())
    assert math.isclose(np.linalg.norm(prod.matrix, 2), 1.0, rel_tol=1e-12)


def test_long_product_keeps_determinant():
    word = sample_orbit(MarkovMeasure.bernoulli([0.5, 0.5]), 200_000, 3)
    w = SymbolicPoint((0,), tuple(int(s) for s in word), (0,))
    prod = cocycle_product(0.4, V01, w, 200_000)
    assert abs(prod.log_det) <= 1e-6


# Lyapunov estimates

def test_estimator_closed_forms():
    zero = Potential.constant(T2, 0.0)
    c = Potential.constant(T2, 0.3)
    mu = MarkovMeasure.bernoulli([0.5, 0.5])
    assert estimate_lyapunov(0.3, c, mu, 20_000, 8).value <= 0.02
    est = estimate_lyapunov(3.0, zero, mu, 20_000, 8)
    assert abs(est.value - GOLD) <= 0.02
    again = estimate_lyapunov(3.0, zero, mu, 20_000, 8)
    assert est == again
    assert est.value >= 0 and est.std_error >= 0


def test_kernel_agrees_with_renormalized_product():
    V = window_potential(2)
    mu = MarkovMeasure.bernoulli([0.3, 0.7])
    n = 3000
    est = lyapunov_scan([0.9], V, mu, n, 3, seed=11)[0]
    ref = []
    for i in range(3):
        word = sample_orbit(mu, n + 2, derive_seed(11, 0, i))
        w = SymbolicPoint((0,), tuple(int(s) for s in word), (0,), -1)
        ref.append(cocycle_product(0.9, V, w, n).log_scale / n)
    assert math.isclose(est.raw_mean, float(np.mean(ref)), rel_tol=1e-10, abs_tol=1e-13)


def test_step_doubling_consistency():
    V = Potential.from_symbol_values(T2, [0.0, 1.0])
    mu = MarkovMeasure.bernoulli([0.5, 0.5])
    for E in (-0.5, 0.6, 2.0):
        a = estimate_lyapunov(E, V, mu, 5000, 20, seed=1)
        b = estimate_lyapunov(E, V, mu, 20000, 20, seed=2)
        # finite-n bias of (1/n) E log||A_n|| is O(1/n); allow it on top of 3 sigma
        assert abs(a.value - b.value) <= 3 * math.hypot(a.std_error, b.std_error) + 2e-3


def test_estimator_rejects_support_outside_potential():
    G = TransitionSystem.golden_mean()
    V = Potential.from_symbol_values(G, [0.0, 1.0])
    V1 = Potential(G, 1, {w: 0.0 for w in admissible_words(G, 3)})
    with pytest.raises(ValueError):
        estimate_lyapunov(0.0, V1, MarkovMeasure.bernoulli([0.5, 0.5]), 1000, 2)
    assert estimate_lyapunov(0.0, V, MarkovMeasure.uniform(G), 1000, 2).n_steps == 1000


def test_periodic_lyapunov_examples():
    p = PeriodicOrbit((0,))
    assert periodic_lyapunov(1.0, V01, p) == 0.0
    assert math.isclose(periodic_lyapunov(3.0, V01, p), GOLD, rel_tol=1e-14)
    assert periodic_lyapunov(2.0, V01, p) == 0.0
    q = PeriodicOrbit((0, 1))
    E = 0.5 * (1 + math.sqrt(17))  # (E)(E-1) - 2 = 2
    assert periodic_lyapunov(E, V01, q) == 0.0


# holonomies

@given(st.floats(-3, 3), st.data())
def test_radius_zero_holonomies_are_identity(E, data):
    core = tuple(data.draw(st.lists(st.integers(0, 1), min_size=4, max_size=4)))
    a = SymbolicPoint((0,), core, (1,), -2)
    other_past = tuple(data.draw(st.lists(st.integers(0, 1), min_size=2, max_size=2)))
    b = SymbolicPoint((1,), other_past + core[2:], (1,), -2)
    assert np.array_equal(holonomy(E, V01, a, b, "stable").matrix, np.eye(2))
    assert np.array_equal(holonomy(E, V01, a, a, "unstable").matrix, np.eye(2))


def test_radius_one_holonomy_single_factor():
    V = window_potential(4)
    a = SymbolicPoint((0,), (0, 1, 1, 0), (1,), -2)
    b = SymbolicPoint((0,), (0, 0, 1, 0), (1,), -2)  # differs at n = -1 only
    for E in (-1.3, 0.2, 2.4):
        H = holonomy(E, V, a, b, "stable")
        assert H.stabilization_index == 1
        direct = np.linalg.inv(product_matrix(E, V, b, 1)) @ product_matrix(E, V, a, 1)
        assert np.allclose(H.matrix, direct, atol=1e-14)
        assert abs(np.linalg.det(H.matrix) - 1) <= 1e-9


def test_holonomy_membership_is_checked():
    a = SymbolicPoint((0,), (0, 1), (1,), 0)
    b = SymbolicPoint((0,), (0, 0), (1,), 0)
    with pytest.raises(DomainError):
        holonomy(0.0, V01, a, b, "stable")


# Z points

def test_z_point_examples():
    assert z_point(0.0, V01, PeriodicOrbit((0,))) == 1j
    assert transport_z(1j, np.eye(2)) == 1j
    assert transport_z(1j, np.array([[1.0, 1.0], [0.0, 1.0]])) == 1 + 1j
    assert transport_z(ZINF, np.array([[2.0, 0.0], [1.0, 0.5]])) == 2.0
    with pytest.raises(DomainError):
        z_point(3.0, V01, PeriodicOrbit((0,)))


@st.composite
def sl2(draw):
    a, b, c = (draw(st.floats(-3, 3)) for _ in range(3))
    if abs(a) < 0.1:
        a = 0.1 + abs(a)
    return np.array([[a, b], [c, (1 + b * c) / a]])


@st.composite
def elliptic(draw):
    theta = draw(st.floats(0.05, math.pi - 0.05))
    R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    Q = draw(sl2())
    return Q @ R @ np.linalg.inv(Q)


@given(elliptic())
def test_z_point_solves_fixed_point_equation(M):
    z = elliptic_fixed_point(M)
    a, b, c, d = M.ravel()
    assert z.imag > 0
    assert abs(c * z * z + (d - a) * z - b) <= 1e-10 * max(1.0, abs(z) ** 2)


@given(elliptic(), sl2())
def test_z_point_equivariance(M, Q):
    z = elliptic_fixed_point(M)
    zq = elliptic_fixed_point(Q @ M @ np.linalg.inv(Q))
    image = transport_z(z, Q)
    assert abs(image - zq) <= 1e-8 * max(1.0, abs(zq))


@given(st.sampled_from([(0,), (1,), (0, 1), (0, 0, 1), (0, 1, 1, 1)]), st.floats(-2, 3))
def test_z_point_fixed_by_monodromy(word, E):
    p = PeriodicOrbit(word)
    M = monodromy(E, V01, p)
    if abs(np.trace(M)) >= 2 - 1e-6:
        return
    z = z_point(E, V01, p)
    assert abs(transport_z(z, M) - z) <= 1e-9 * max(1.0, abs(z))
