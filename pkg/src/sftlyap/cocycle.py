"""Schrodinger cocycles over a subshift: products, Lyapunov exponents, holonomies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from ._kernels import chain_log_norm
from .markov import MarkovMeasure, _cumulative, _uniforms, derive_seed
from .symbolic import PeriodicOrbit, SymbolicPoint, TransitionSystem

RENORM_EVERY = 16
DET_TOL = 1e-6
MAX_TABLE_SIZE = 1 << 22

DEFAULT_N_STEPS = 100_000
DEFAULT_N_SAMPLES = 20


class DomainError(ValueError):
    pass


class NumericalDriftError(ArithmeticError):
    pass


def admissible_words(T: TransitionSystem, length: int) -> list[tuple[int, ...]]:
    words = [(a,) for a in T.active]
    for _ in range(length - 1):
        words = [w + (int(b),) for w in words for b in np.flatnonzero(T.transitions[w[-1]])]
    return words


class Potential:
    """Locally constant potential: a value for every admissible word of length ``2r+1``.

    ``table[w]`` is ``V(omega)`` for any ``omega`` with ``omega[-r..r] == w``.
    """

    def __init__(self, system: TransitionSystem, window_radius: int,
                 table: Mapping[Sequence[int], float]):
        if window_radius < 0:
            raise ValueError("window radius must be nonnegative")
        self.system = system
        self.window_radius = r = int(window_radius)
        width = 2 * r + 1
        l = system.alphabet_size
        if l ** width > MAX_TABLE_SIZE:
            raise ValueError(f"window table of size {l}^{width} is too large")
        table = {tuple(int(s) for s in k): float(v) for k, v in table.items()}
        allowed = admissible_words(system, width)
        missing = [w for w in allowed if w not in table]
        if missing:
            raise ValueError(f"potential table misses admissible window {system.format_word(missing[0])!r}")
        extra = set(table) - set(allowed)
        if extra:
            w = sorted(extra)[0]
            raise ValueError(f"potential table has inadmissible window {system.format_word(w)!r}")
        self.table = {w: table[w] for w in allowed}
        self.sup_norm = max(abs(v) for v in self.table.values())
        self._weights = l ** np.arange(width - 1, -1, -1, dtype=np.int64)
        self._dense = np.full(l ** width, np.nan)
        for w, v in self.table.items():
            self._dense[int(np.dot(w, self._weights))] = v

    @classmethod
    def from_symbol_values(cls, system: TransitionSystem, values: Sequence[float]) -> "Potential":
        return cls(system, 0, {(a,): values[a] for a in system.active})

    @classmethod
    def constant(cls, system: TransitionSystem, c: float, radius: int = 0) -> "Potential":
        return cls(system, radius, {w: c for w in admissible_words(system, 2 * radius + 1)})

    def restrict(self, sub: TransitionSystem) -> "Potential":
        width = 2 * self.window_radius + 1
        return Potential(sub, self.window_radius,
                         {w: self.table[w] for w in admissible_words(sub, width)})

    @property
    def distinct_values(self) -> set[float]:
        return set(self.table.values())

    def values_on_word(self, word) -> np.ndarray:
        """Potential at positions ``r .. len(word)-r-1`` of a finite word."""
        word = np.asarray(word, dtype=np.int64)
        width = 2 * self.window_radius + 1
        n = len(word) - width + 1
        codes = np.zeros(n, dtype=np.int64)
        for i in range(width):
            codes += word[i:i + n] * self._weights[i]
        vals = self._dense[codes]
        if np.isnan(vals).any():
            raise ValueError("word contains a window outside the potential table")
        return vals

    def along(self, omega: SymbolicPoint, start: int, count: int) -> np.ndarray:
        """``V(T^k omega)`` for ``k = start .. start+count-1``."""
        r = self.window_radius
        return self.values_on_word(omega.window(start - r, start + count + r))

    def along_orbit(self, p: PeriodicOrbit) -> np.ndarray:
        return self.along(p.point(), 0, p.period)

    def __repr__(self):
        return f"Potential(r={self.window_radius}, sup_norm={self.sup_norm})"


def potential_eval(V: Potential, omega: SymbolicPoint, n: int) -> float:
    return float(V.along(omega, n, 1)[0])


def one_step_matrix(E: float, v: float) -> np.ndarray:
    return np.array([[E - v, -1.0], [1.0, 0.0]])


def opnorm(B: np.ndarray) -> float:
    """Spectral norm of a 2x2 matrix, in closed form."""
    a, b, c, d = B[0, 0], B[0, 1], B[1, 0], B[1, 1]
    return 0.5 * (math.hypot(a + d, b - c) + math.hypot(a - d, b + c))


def _opnorm_vec(a, b, c, d):
    return 0.5 * (np.hypot(a + d, b - c) + np.hypot(a - d, b + c))


def _adj(B: np.ndarray) -> np.ndarray:
    return np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]])


def direct_product(E: float, values: Sequence[float]) -> np.ndarray:
    """Plain ordered product ``A(v_{n-1}) ... A(v_0)``; only for short runs."""
    M = np.eye(2)
    for v in values:
        M = one_step_matrix(E, v) @ M
    return M


class RenormalizedProduct(NamedTuple):
    """``A_n(omega) = exp(log_scale) * matrix`` with ``||matrix|| = 1``.

    ``log_det`` is the logarithm of the determinant of the represented
    product as tracked by the QR recursion (0 in exact arithmetic).
    """

    matrix: np.ndarray
    log_scale: float
    log_det: float

    def full(self) -> np.ndarray:
        return math.exp(self.log_scale) * self.matrix


def _forward_product(E: float, values: Sequence[float]) -> RenormalizedProduct:
    # A_n = Q diag(e^s1, e^s2) [[1, tau], [0, 1]], kept by a Givens step per factor
    q0, q1 = 1.0, 0.0
    tau, rho = 0.0, 1.0
    pa = pc = 1.0
    logs: list[float] = []
    log_det = 0.0
    for k, v in enumerate(values, 1):
        x = E - v
        m00, m10 = x * q0 - q1, q0
        m01, m11 = -x * q1 - q0, -q1
        a = math.hypot(m00, m10)
        q0, q1 = m00 / a, m10 / a
        b = q0 * m01 + q1 * m11
        c = q0 * m11 - q1 * m01
        tau += (b / a) * rho
        rho *= c / a
        pa *= a
        pc *= c
        if k % RENORM_EVERY == 0:
            logs.append(math.log(pa))
            log_det += math.log(pa * pc)
            pa = pc = 1.0
    logs.append(math.log(pa))
    log_det += math.log(pa * pc)
    B0 = np.array([[q0, -q1], [q1, q0]]) @ np.array([[1.0, tau], [0.0, rho]])
    nrm = opnorm(B0)
    logs.append(math.log(nrm))
    return RenormalizedProduct(B0 / nrm, math.fsum(logs), log_det)


def cocycle_product(E: float, V: Potential, omega: SymbolicPoint, n: int,
                    check_det: bool = True) -> RenormalizedProduct:
    """Renormalized ``A_n(omega)``, including ``n <= 0`` via the inverse branch."""
    if n == 0:
        return RenormalizedProduct(np.eye(2), 0.0, 0.0)
    if n > 0:
        out = _forward_product(E, V.along(omega, 0, n).tolist())
    else:
        # A_n(w) = [A_{-n}(T^n w)]^{-1}, and adj(A) = A^{-1} on SL(2)
        fwd = _forward_product(E, V.along(omega, n, -n).tolist())
        out = RenormalizedProduct(_adj(fwd.matrix), fwd.log_scale, -fwd.log_det)
    if check_det and abs(out.log_det) > DET_TOL:
        raise NumericalDriftError(f"determinant drifted: log det = {out.log_det:.3e}")
    return out


def product_matrix(E: float, V: Potential, omega: SymbolicPoint, n: int) -> np.ndarray:
    """Unnormalized ``A_n(omega)`` by direct multiplication (short ``|n|`` only)."""
    if n >= 0:
        return direct_product(E, V.along(omega, 0, n))
    return _adj(direct_product(E, V.along(omega, n, -n)))


@dataclass(frozen=True)
class LyapunovEstimate:
    energy: float
    value: float
    std_error: float
    n_steps: int
    n_samples: int
    raw_mean: float
    seed: int


def lyapunov_scan(energies, V: Potential, mu: MarkovMeasure,
                  n_steps: int = DEFAULT_N_STEPS, n_samples: int = DEFAULT_N_SAMPLES,
                  seed: int = 0, energy_indices=None
                  ) -> list[LyapunovEstimate]:
    """Lyapunov estimates on a grid; sample ``i`` at energy index ``j`` uses seed
    ``derive_seed(seed, j, i)``."""
    energies = np.asarray(energies, dtype=float).ravel()
    if energy_indices is None:
        energy_indices = range(len(energies))
    energy_indices = list(energy_indices)
    if n_steps < 1 or n_samples < 1:
        raise ValueError("n_steps and n_samples must be positive")
    out: list[LyapunovEstimate] = []
    for E, j in zip(energies, energy_indices):
        seeds = [derive_seed(seed, j, i) for i in range(n_samples)]
        row = _sample_lyapunov(np.full(n_samples, E), V, mu, seeds, n_steps)
        mean = float(row.mean())
        se = float(row.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
        out.append(LyapunovEstimate(float(E), max(mean, 0.0), se, n_steps, n_samples,
                                    mean, int(seed)))
    return out


def _chain_uniforms(seed: int, length: int) -> np.ndarray:
    # identical stream to ``sample_orbit(mu, length, seed)``
    return _uniforms(np.random.default_rng(seed), length)


def _sample_lyapunov(Ec: np.ndarray, V: Potential, mu: MarkovMeasure, seeds, n_steps: int):
    cpi, cum = _cumulative(mu)
    length = n_steps + 2 * V.window_radius
    out = np.empty(len(Ec))
    for c, (E, s) in enumerate(zip(Ec, seeds)):
        out[c] = chain_log_norm(_chain_uniforms(s, length), float(E), cpi, cum,
                                V._weights, V._dense, RENORM_EVERY)
    if np.isnan(out).any():
        raise ValueError("sampled orbit left the domain of the potential; measure support "
                         "exceeds the system")
    return out / n_steps


def estimate_lyapunov(E: float, V: Potential, mu: MarkovMeasure,
                      n_steps: int = DEFAULT_N_STEPS, n_samples: int = DEFAULT_N_SAMPLES,
                      seed: int = 0, energy_index: int = 0) -> LyapunovEstimate:
    return lyapunov_scan([E], V, mu, n_steps, n_samples, seed, energy_indices=[energy_index])[0]


def monodromy(E: float, V: Potential, p: PeriodicOrbit) -> np.ndarray:
    return direct_product(E, V.along_orbit(p))


def periodic_lyapunov(E: float, V: Potential, p: PeriodicOrbit) -> float:
    delta = float(np.trace(monodromy(E, V, p)))
    if abs(delta) <= 2:
        return 0.0
    return math.log((abs(delta) + math.sqrt(delta * delta - 4)) / 2) / p.period


@dataclass(frozen=True)
class HolonomyMatrix:
    matrix: np.ndarray
    kind: str
    stabilization_index: int


def _agree_range(omega: SymbolicPoint, other: SymbolicPoint, kind: str) -> range:
    if kind == "stable":
        span = math.lcm(len(omega.right_cycle), len(other.right_cycle))
        return range(0, max(omega.c_hi, other.c_hi, 0) + span + 1)
    span = math.lcm(len(omega.left_cycle), len(other.left_cycle))
    return range(min(omega.c_lo, other.c_lo, 0) - span - 1, 1)


def holonomy(E: float, V: Potential, omega: SymbolicPoint, omega_p: SymbolicPoint,
             kind: str) -> HolonomyMatrix:
    """Stable (``kind="stable"``) or unstable holonomy ``[A_n(w')]^{-1} A_n(w)``.

    Factors ``A(T^k w)`` only read coordinates within distance ``r`` of ``k``,
    so the ratio is frozen from ``n = r`` (resp. ``n = -r``) on.
    """
    if kind not in ("stable", "unstable"):
        raise ValueError(f"kind must be 'stable' or 'unstable', got {kind!r}")
    if not omega.agrees(omega_p, _agree_range(omega, omega_p, kind)):
        raise DomainError(f"second point is not in the local {kind} set of the first")
    r = V.window_radius
    sign = 1 if kind == "stable" else -1

    def h(n):
        return _adj(product_matrix(E, V, omega_p, n)) @ product_matrix(E, V, omega, n)

    H = h(sign * r)
    again = h(sign * (r + 1))
    if not np.allclose(H, again, rtol=0, atol=1e-12 * max(1.0, np.abs(H).max())):
        raise NumericalDriftError("holonomy failed to stabilize at the window radius")
    return HolonomyMatrix(H, kind, r)


def su_transport_matrix(E: float, V: Potential, omega: SymbolicPoint,
                        omega_p: SymbolicPoint) -> np.ndarray:
    """``H^u_{w ^ w', w} H^s_{w', w ^ w'}``: carries data at ``w'`` to ``w``."""
    from .symbolic import splice_points
    wedge = splice_points(omega, omega_p)
    Hs = holonomy(E, V, omega_p, wedge, "stable").matrix
    Hu = holonomy(E, V, wedge, omega, "unstable").matrix
    return Hu @ Hs


ZINF = complex(math.inf, 0.0)


def is_infinite(z: complex) -> bool:
    return math.isinf(z.real) or math.isinf(z.imag)


def elliptic_fixed_point(M: np.ndarray) -> complex:
    """Upper half-plane fixed point of ``z -> (az+b)/(cz+d)`` for ``|tr M| < 2``."""
    a, b, c, d = (float(x) for x in M.ravel())
    delta = a + d
    if abs(delta) >= 2:
        raise DomainError(f"monodromy is not elliptic: trace {delta!r}")
    # c != 0 here: c = 0 forces ad = 1 and |a + d| >= 2
    root = math.sqrt(4.0 - delta * delta)
    return complex(a - d, math.copysign(root, c)) / (2.0 * c)


def z_point(E: float, V: Potential, p: PeriodicOrbit) -> complex:
    return elliptic_fixed_point(monodromy(E, V, p))


def transport_z(z: complex, Q: np.ndarray) -> complex:
    """Mobius image ``(az+b)/(cz+d)`` with the point at infinity handled projectively."""
    a, b, c, d = (float(x) for x in np.asarray(Q).ravel())
    if is_infinite(z):
        return ZINF if c == 0 else complex(a / c)
    den = c * z + d
    if den == 0:
        return ZINF
    return (a * z + b) / den
