"""Two-point step functionals on the smash line, their convolution powers
and exact n-step moments, plus a brute-force braided-algebra oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qcalculus import Deformation, q_factorial
from .smash_algebra import (
    DEFAULT_X_CAP,
    X,
    XI,
    SmashElement,
    multislot_multiply,
    multislot_power,
    slot_sum,
)

ORACLE_MAX_STEPS = 8
ORACLE_MAX_X_POWER = 5


class OracleGuardExceeded(ValueError):
    pass


@dataclass(frozen=True)
class StepDensity:
    """x jumps by +a with probability p1 (else -a); xi by +theta with p2 (else -theta)."""

    a: float = 1.0
    p1: float = 0.5
    theta: float = 1.0
    p2: float = 0.5

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"a must be > 0, got {self.a}")
        if not self.theta > 0:
            raise ValueError(f"theta must be > 0, got {self.theta}")
        for name in ("p1", "p2"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True)
class WalkSpec:
    step: StepDensity
    n: int
    deformation: Deformation
    Q: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"step count n must be an integer >= 1, got {self.n}")
        if isinstance(self.Q, complex) or not np.isreal(self.Q):
            raise ValueError("Q must be real")

    def with_steps(self, n: int) -> WalkSpec:
        return WalkSpec(self.step, n, self.deformation, self.Q)


def phi_x(i: int, s: StepDensity) -> float:
    """i-th moment of the two-point x density."""
    if i < 0:
        raise ValueError("i must be >= 0")
    return s.p1 * s.a**i + (1.0 - s.p1) * (-s.a) ** i


def phi_xi(j: int, s: StepDensity, d: Deformation) -> float:
    """Value of the q-exponential shift functional on xi**j.

    e_q^{theta D} xi**j evaluated at xi = 0 picks the term theta**j/[j]! *
    D**j xi**j = theta**j, so the q-factorials cancel.
    """
    if not 0 <= j < d.N:
        raise ValueError(f"xi**{j} is not representable (need 0 <= j < N={d.N})")
    return s.p2 * s.theta**j + (1.0 - s.p2) * (-s.theta) ** j


def _series_power(coeffs: np.ndarray, n: int) -> np.ndarray:
    """coeffs(z)**n truncated at len(coeffs), by binary powering."""
    deg = len(coeffs)
    result = np.zeros(deg, dtype=complex)
    result[0] = 1.0
    base = np.asarray(coeffs, dtype=complex)
    while n:
        if n & 1:
            result = np.convolve(result, base)[:deg]
        n >>= 1
        if n:
            base = np.convolve(base, base)[:deg]
    return result


def _x_sector(k: int, w: WalkSpec) -> complex:
    # sum_i multinomial(k; i) prod_t phi_x(i_t) == k! [z^k] (sum_i phi_x(i) z^i / i!)^n
    egf = np.array([phi_x(i, w.step) / math.factorial(i) for i in range(k + 1)], dtype=complex)
    return math.factorial(k) * _series_power(egf, w.n)[k]


def _xi_sector(l: int, w: WalkSpec) -> complex:
    d = w.deformation
    gf = np.array([phi_xi(j, w.step, d) / q_factorial(j, d) for j in range(l + 1)], dtype=complex)
    return q_factorial(l, d) * _series_power(gf, w.n)[l]


def moment(k: int, l: int, w: WalkSpec) -> complex:
    """<x**k xi**l> under the n-fold convolution power of the step functional.

    Parameters
    ----------
    k, l : int
        x- and xi-powers; ``l`` must be below the nilpotency order N.
    w : WalkSpec
        Step densities, step count and deformation. ``w.Q`` does not enter:
        the coproduct coefficients are Q-free.

    Returns
    -------
    complex
        The sum over compositions i of k and j of l of
        multinomial(k; i) [l; j]_q prod_t phi_x(i_t) phi_xi(j_t). Since the
        summand factorizes slot by slot, the composition sum is evaluated as
        a truncated power of the one-step (q-)exponential generating series,
        which is the same finite sum grouped differently.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    N = w.deformation.N
    if not 0 <= l < N:
        raise ValueError(f"xi-power l={l} violates the nilpotency bound l <= N-1={N - 1}")
    return complex(_x_sector(k, w) * _xi_sector(l, w))


def moment_oracle(k: int, l: int, w: WalkSpec, x_cap: int = DEFAULT_X_CAP) -> complex:
    """Brute-force moment that never touches the coproduct formula.

    Builds (x_1 + ... + x_n)**k (xi_1 + ... + xi_n)**l in the braided n-slot
    algebra by repeated normal ordering (so Q does enter), then applies the
    one-step functional slot by slot.
    """
    N = w.deformation.N
    if not 0 <= l < N:
        raise ValueError(f"xi-power l={l} violates the nilpotency bound l <= N-1={N - 1}")
    if w.n > ORACLE_MAX_STEPS or k > ORACLE_MAX_X_POWER:
        raise OracleGuardExceeded(
            f"oracle enumeration limited to n <= {ORACLE_MAX_STEPS}, k <= {ORACLE_MAX_X_POWER} "
            f"(got n={w.n}, k={k})"
        )
    d = w.deformation
    xs = multislot_power(slot_sum(w.n, X), k, w.Q, d, x_cap)
    xis = multislot_power(slot_sum(w.n, XI), l, w.Q, d, x_cap)
    expansion = multislot_multiply(xs, xis, w.Q, d, x_cap)
    total = 0.0 + 0.0j
    for key, c in expansion.terms.items():
        term = c
        for i, j in key:
            term *= phi_x(i, w.step) * phi_xi(j, w.step, d)
        total += term
    return total


def expectation(f: SmashElement, w: WalkSpec) -> complex:
    """Linear extension of :func:`moment` over the monomials of ``f``."""
    if f.deformation != w.deformation:
        raise ValueError("element and walk use different deformations")
    return sum((c * moment(k, l, w) for (k, l), c in f.coeffs.items()), 0j)


def moment_table(w: WalkSpec, k_max: int, l_max: int, oracle: bool = False):
    """Rows ``(n, k, l, value[, oracle_value])`` in lexicographic (k, l) order."""
    rows = []
    for k in range(k_max + 1):
        for l in range(l_max + 1):
            row = [w.n, k, l, moment(k, l, w)]
            if oracle:
                row.append(moment_oracle(k, l, w))
            rows.append(tuple(row))
    return rows


def walk_from_continuum(c1: float, alpha1: float, t: float, n: int, base: StepDensity | None = None):
    """Step density whose x-sector realises drift c1 and diffusivity alpha1 after n steps.

    Inverts 2a(p1 - 1/2) = c1 t / n and a**2 / 2 = alpha1 t / n. The xi-sector
    is copied from ``base``.
    """
    a = math.sqrt(2.0 * alpha1 * t / n)
    p1 = 0.5 + c1 * t / (2.0 * a * n)
    base = base or StepDensity()
    return StepDensity(a=a, p1=p1, theta=base.theta, p2=base.p2)
