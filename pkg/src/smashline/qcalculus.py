"""Deformed arithmetic at a primitive root of unity and the q-calculus on
truncated polynomials in a nilpotent variable xi (xi**N == 0)."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Deformation:
    """Nilpotency order ``N`` together with the braiding root ``q = exp(2*pi*i/N)``."""

    N: int

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or isinstance(self.N, bool):
            raise TypeError(f"N must be an integer, got {type(self.N).__name__}")
        if self.N < 2:
            raise ValueError(f"N must be >= 2 (xi**N == 0 with N={self.N} is degenerate)")

    @cached_property
    def q(self) -> complex:
        return self.root_power(1)

    def root_power(self, m: int) -> complex:
        """q**m with the exponent reduced mod N, so q**N is exactly 1."""
        r = m % self.N
        if r == 0:
            return 1.0 + 0.0j
        return cmath.exp(2j * math.pi * r / self.N)


def q_number(m: int, d: Deformation) -> complex:
    """[m]_q = (1 - q**m) / (1 - q) = 1 + q + ... + q**(m-1).

    Evaluated as the geometric sum over ``m mod N`` terms, so multiples of N
    give exactly zero.
    """
    if m < 0:
        raise ValueError(f"q_number needs m >= 0, got {m}")
    return sum((d.root_power(j) for j in range(m % d.N)), 0.0 + 0.0j)


def q_factorial(m: int, d: Deformation) -> complex:
    if m < 0:
        raise ValueError(f"q_factorial needs m >= 0, got {m}")
    if m >= d.N:
        return 0.0 + 0.0j
    out = 1.0 + 0.0j
    for j in range(1, m + 1):
        out *= q_number(j, d)
    return out


def q_multinomial(m: int, parts, d: Deformation) -> complex:
    """[m]_q! / prod([j]_q! for j in parts).

    Two parts give the Gaussian binomial. Only defined for ``m < N``; above
    that the ratio is 0/0 at the root of unity.
    """
    parts = tuple(int(j) for j in parts)
    if any(j < 0 for j in parts) or sum(parts) != m:
        raise ValueError(f"parts {parts} are not a composition of {m}")
    if m >= d.N:
        raise ValueError(
            f"q_multinomial undefined for m={m} >= N={d.N} (q-factorials vanish at the root of unity)"
        )
    out = q_factorial(m, d)
    for j in parts:
        out /= q_factorial(j, d)
    return out


def q_binomial(m: int, k: int, d: Deformation) -> complex:
    if not 0 <= k <= m:
        return 0.0 + 0.0j
    return q_multinomial(m, (k, m - k), d)


def q_exponential_coefficients(m: int, d: Deformation) -> complex:
    """m-th coefficient 1/[m]_q! of the truncated q-exponential."""
    if m < 0 or m >= d.N:
        raise ValueError(f"q-exponential coefficient needs 0 <= m < N={d.N}, got {m}")
    return 1.0 / q_factorial(m, d)


class XiPolynomial:
    """Element c_0 + c_1 xi + ... + c_{N-1} xi**(N-1) of C[xi]/(xi**N).

    Stored as a length-N complex coefficient array; powers >= N never appear.
    """

    __slots__ = ("coeffs", "deformation")

    def __init__(self, coeffs, deformation: Deformation):
        c = np.zeros(deformation.N, dtype=complex)
        arr = np.asarray(coeffs, dtype=complex).ravel()
        if arr.size > deformation.N:
            if np.any(arr[deformation.N:] != 0):
                raise ValueError(
                    f"coefficient of xi**{deformation.N} or higher given, but xi**{deformation.N} == 0"
                )
            arr = arr[: deformation.N]
        c[: arr.size] = arr
        c.flags.writeable = False
        self.coeffs = c
        self.deformation = deformation

    @classmethod
    def monomial(cls, m: int, d: Deformation, coeff: complex = 1.0) -> XiPolynomial:
        if not 0 <= m < d.N:
            raise ValueError(f"xi**{m} is not representable with N={d.N}")
        c = np.zeros(d.N, dtype=complex)
        c[m] = coeff
        return cls(c, d)

    @property
    def N(self) -> int:
        return self.deformation.N

    def _check(self, other):
        if not isinstance(other, XiPolynomial):
            return NotImplemented
        if other.deformation != self.deformation:
            raise ValueError("XiPolynomials with different deformations")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return XiPolynomial(self.coeffs + other.coeffs, self.deformation)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return XiPolynomial(self.coeffs - other.coeffs, self.deformation)

    def __neg__(self):
        return XiPolynomial(-self.coeffs, self.deformation)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return XiPolynomial(self.coeffs * other, self.deformation)
        other = self._check(other)
        if other is NotImplemented:
            return other
        # xi commutes with itself, so this is the ordinary truncated product
        prod = np.convolve(self.coeffs, other.coeffs)[: self.N]
        return XiPolynomial(prod, self.deformation)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return XiPolynomial(self.coeffs * other, self.deformation)
        return NotImplemented

    def __call__(self, xi):
        """Evaluate at a scalar xi (treating it as a number)."""
        return np.polynomial.polynomial.polyval(xi, self.coeffs)

    def allclose(self, other: XiPolynomial, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.coeffs, other.coeffs, rtol=0.0, atol=atol))

    def __eq__(self, other):
        if not isinstance(other, XiPolynomial):
            return NotImplemented
        return self.deformation == other.deformation and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def __repr__(self):
        return f"XiPolynomial({self.coeffs.tolist()}, N={self.N})"


def jackson_derivative(f: XiPolynomial, d: Deformation | None = None) -> XiPolynomial:
    """Jackson derivative (f(xi) - f(q xi)) / ((1 - q) xi): xi**m -> [m]_q xi**(m-1)."""
    d = d or f.deformation
    c = f.coeffs
    out = np.zeros(d.N, dtype=complex)
    for m in range(1, d.N):
        out[m - 1] = q_number(m, d) * c[m]
    return XiPolynomial(out, d)


def scale_operator(f: XiPolynomial, s: complex) -> XiPolynomial:
    """L_s f (xi) = f(s xi)."""
    powers = np.asarray([s**m for m in range(f.N)], dtype=complex)
    return XiPolynomial(f.coeffs * powers, f.deformation)


def dual_derivative(f: XiPolynomial, d: Deformation | None = None) -> XiPolynomial:
    """D* = -D_xi L_{1/q}, acting as xi**m -> -q**(-m) [m]_q xi**(m-1)."""
    d = d or f.deformation
    return -jackson_derivative(scale_operator(f, d.root_power(-1)), d)
