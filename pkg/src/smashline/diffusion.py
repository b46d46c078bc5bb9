"""Continuum limit of the smash-line walk: parameter substitutions, the
limiting functional, the diffusion generator (stationary and with constant
Hamiltonian drifts), closed-form solutions and PDE residuals."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .matrices import d_xi_matrix, nilpotent_expm, xi_generator_matrix
from .qcalculus import Deformation, XiPolynomial, q_factorial, q_number
from .random_walk import StepDensity
from .smash_algebra import SmashElement

STATIONARY, NONSTATIONARY = "stationary", "nonstationary"


@dataclass(frozen=True)
class DiffusionParams:
    """Drift/diffusivity constants of the limiting process.

    ``lambda_`` and ``lambda_tilde`` are the constant Hamiltonian drifts of
    the non-stationary equation; they default to zero. ``alpha2`` may be
    complex (it absorbs [2]_q).
    """

    c1: float = 0.0
    alpha1: float = 1.0
    c2: complex = 0.0
    alpha2: complex = 0.0
    lambda_: float = 0.0
    lambda_tilde: float = 0.0
    d1: float = 1.0
    d2: float = 1.0
    t: float = 1.0

    def __post_init__(self):
        if not self.alpha1 > 0:
            raise ValueError(f"alpha1 must be > 0, got {self.alpha1}")
        if self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")

    def at(self, t: float) -> DiffusionParams:
        return replace(self, t=t)


def continuum_params(s: StepDensity, n: int, t: float, d: Deformation) -> DiffusionParams:
    """Invert the scaling 2a(p1-1/2) = c1 t/n, a^2/2 = alpha1 t/n,
    2 theta (p2-1/2) = c2 t/n, theta^2/[2]_q = alpha2 t/n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not t > 0:
        raise ValueError("t must be > 0")
    two_q = q_number(2, d)
    if two_q == 0:
        raise ValueError(
            f"[2]_q = 0 at N={d.N}: alpha2 = theta^2 n / ([2]_q t) is undefined "
            "(no second-order xi term exists when xi**2 = 0)"
        )
    return DiffusionParams(
        c1=2.0 * s.a * (s.p1 - 0.5) * n / t,
        alpha1=s.a**2 * n / (2.0 * t),
        c2=2.0 * s.theta * (s.p2 - 0.5) * n / t,
        alpha2=s.theta**2 * n / (two_q * t),
        t=t,
    )


def gaussian_solution(x, t, p: DiffusionParams, exponent: float = -0.5):
    """Drifted heat kernel (4 pi alpha1 t)**exponent * exp(-(x - c1 t)^2 / (4 alpha1 t)).

    Only ``exponent=-0.5`` solves the x-part of the diffusion equation; other
    values are accepted so the alternative normalisation can be checked.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("gaussian_solution needs t > 0")
    x = np.asarray(x, dtype=float)
    var4 = 4.0 * p.alpha1 * t
    return (math.pi * var4) ** exponent * np.exp(-((x - p.c1 * t) ** 2) / var4)


def xi_closed_form(theta, t, p: DiffusionParams, d: Deformation) -> complex:
    """The displayed xi-sector solution, evaluated term by term as written.

    sum_{k<N} theta^(N-1-k) sum_{0 <= l < k/2} (c2 t)^(k-l) (alpha2/c2)^l [k]_q! / (l! (k-2l)!)

    The k = 0 inner sum is empty and contributes nothing. Not a verified
    solution: compare with :func:`xi_sector_oracle`.
    """
    if p.c2 == 0:
        raise ValueError("closed form divides by c2; c2 must be nonzero")
    N = d.N
    total = 0j
    for k in range(N):
        inner = 0j
        l = 0
        while l < k / 2:
            inner += (
                (p.c2 * t) ** (k - l)
                * (p.alpha2 / p.c2) ** l
                * q_factorial(k, d)
                / (math.factorial(l) * math.factorial(k - 2 * l))
            )
            l += 1
        total += theta ** (N - 1 - k) * inner
    return complex(total)


def xi_sector_oracle(
    t: float,
    p: DiffusionParams,
    d: Deformation,
    initial=None,
    variant: str = "printed",
) -> XiPolynomial:
    """Exact solution of the xi-part d/dt rho = (c2 D* + alpha2 D*^2) rho.

    The generator is nilpotent, so exp(t G) is a finite series. ``initial``
    defaults to xi**(N-1).
    """
    if initial is None:
        initial = XiPolynomial.monomial(d.N - 1, d)
    elif not isinstance(initial, XiPolynomial):
        initial = XiPolynomial(initial, d)
    G = xi_generator_matrix(d.N, p.c2, p.alpha2, variant)
    return XiPolynomial(nilpotent_expm(G, t) @ initial.coeffs, d)


@dataclass(frozen=True)
class Generator:
    """Backward-form generator (x_drift D_x + x_diffusivity D_x^2) (x) 1 + 1 (x) xi_part.

    ``xi_part`` acts on the component vector (rho_0, ..., rho_{N-1}).
    """

    x_drift: float
    x_diffusivity: float
    xi_part: np.ndarray

    def same_as(self, other: Generator, atol: float = 0.0) -> bool:
        return (
            abs(self.x_drift - other.x_drift) <= atol
            and abs(self.x_diffusivity - other.x_diffusivity) <= atol
            and self.xi_part.shape == other.xi_part.shape
            and bool(np.all(np.abs(self.xi_part - other.xi_part) <= atol))
        )


def generator(p: DiffusionParams, d: Deformation, variant: str = STATIONARY, dstar: str = "printed"):
    """Right-hand side operator of the diffusion equation.

    stationary: -c1 D_x + alpha1 D_x^2 + c2 D* + alpha2 D*^2.
    nonstationary: additionally + lambda d1 D_x - lambda_tilde d2 D*. The
    alpha2 term is kept so the two coincide at lambda = lambda_tilde = 0.
    """
    if variant == STATIONARY:
        return Generator(-p.c1, p.alpha1, xi_generator_matrix(d.N, p.c2, p.alpha2, dstar))
    if variant == NONSTATIONARY:
        return Generator(
            -p.c1 + p.lambda_ * p.d1,
            p.alpha1,
            xi_generator_matrix(d.N, p.c2, p.alpha2, dstar, drift_shift=p.lambda_tilde * p.d2),
        )
    raise ValueError(f"unknown variant {variant!r}")


def _as_components(values, N):
    v = np.asarray(values, dtype=complex)
    if v.ndim == 1:
        # a bare profile is read as the xi**0 component
        out = np.zeros((N,) + v.shape, dtype=complex)
        out[0] = v
        return out
    if v.shape[0] != N:
        raise ValueError(f"expected {N} components, got {v.shape[0]}")
    return v


def diffusion_residual(
    rho,
    x,
    times,
    p: DiffusionParams,
    d: Deformation,
    variant: str = STATIONARY,
    dt: float = 1e-4,
    dstar: str = "printed",
    return_field: bool = False,
):
    """Max-norm of d_t rho - G rho over interior grid points.

    Parameters
    ----------
    rho : callable
        ``rho(x, t)`` returning shape (nx,) (read as the xi**0 component) or
        (N, nx).
    x : array
        Uniform spatial grid; the first and last points are only used as
        stencil neighbours.
    times : array
        Sample times; d_t uses the central stencil t +- dt.
    dt : float
        Time step of the central difference.

    Returns
    -------
    float, or (float, ndarray) with the (ntimes, N, nx-2) residual field when
    ``return_field`` is set.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 3:
        raise ValueError("need a 1-D grid with at least 3 points")
    dx = np.diff(x)
    if np.any(dx <= 0) or not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
        raise ValueError("grid must be uniform and increasing")
    if not dt > 0:
        raise ValueError("dt must be > 0")
    h = dx[0]
    G = generator(p, d, variant, dstar)
    fields = []
    for t in np.atleast_1d(times):
        r0 = _as_components(rho(x, t), d.N)
        rp = _as_components(rho(x, t + dt), d.N)
        rm = _as_components(rho(x, t - dt), d.N)
        dt_rho = (rp - rm) / (2.0 * dt)
        d1 = (r0[:, 2:] - r0[:, :-2]) / (2.0 * h)
        d2 = (r0[:, 2:] - 2.0 * r0[:, 1:-1] + r0[:, :-2]) / h**2
        rhs = G.x_drift * d1 + G.x_diffusivity * d2 + G.xi_part @ r0[:, 1:-1]
        fields.append(dt_rho[:, 1:-1] - rhs)
    field = np.array(fields)
    worst = float(np.max(np.abs(field))) if field.size else 0.0
    return (worst, field) if return_field else worst


def _x_exponential_at_zero(k: int, a, b):
    """(exp(a D_x + b D_x^2) x**k)(0) = k! sum_{s + 2r = k} a^s b^r / (s! r!)."""
    total = 0j
    for r in range(k // 2 + 1):
        s = k - 2 * r
        total += a**s * b**r / (math.factorial(s) * math.factorial(r))
    return math.factorial(k) * total


def _xi_exponential_at_zero(d: Deformation, a, b) -> np.ndarray:
    """Row vector v with v[l] = (exp(a D_xi + b D_xi^2) xi**l)(0)."""
    D = d_xi_matrix(d.N)
    E = nilpotent_expm(a * D + b * (D @ D))
    return E[0]


def phi_infinity_terms(f: SmashElement, p: DiffusionParams, d: Deformation):
    """The three summands of the limiting functional, each evaluated at x = xi = 0.

    Returns (x_term, xi_term, joint_term) for exp(c1 t D_x + alpha1 t D_x^2),
    exp(c2 t D_xi + alpha2 t D_xi^2) and their product, each applied to all
    of ``f``.
    """
    t = p.t
    xi_row = _xi_exponential_at_zero(d, p.c2 * t, p.alpha2 * t)
    x_term = xi_term = joint = 0j
    for (k, l), c in f.coeffs.items():
        ex = _x_exponential_at_zero(k, p.c1 * t, p.alpha1 * t)
        exi = xi_row[l]
        joint += c * ex * exi
        if l == 0:
            x_term += c * ex
        if k == 0:
            xi_term += c * exi
    return complex(x_term), complex(xi_term), complex(joint)


def phi_infinity(f: SmashElement, p: DiffusionParams, d: Deformation, form: str = "printed") -> complex:
    """Limiting n -> infinity functional.

    ``form="printed"`` adds the three displayed exponential evaluations (so a
    constant is counted three times); ``form="joint"`` keeps only the
    combined exponential, which is the limit of the walk moments.
    """
    x_term, xi_term, joint = phi_infinity_terms(f, p, d)
    if form == "printed":
        return x_term + xi_term + joint
    if form == "joint":
        return joint
    raise ValueError(f"unknown form {form!r}")


def forward_generator(f: SmashElement, p: DiffusionParams) -> SmashElement:
    """(c1 D_x + alpha1 D_x^2 + c2 D_xi + alpha2 D_xi^2) f, the observable-side generator."""
    d = f.deformation
    out: dict = {}

    def add(key, v):
        out[key] = out.get(key, 0) + v

    for (k, l), c in f.coeffs.items():
        if k >= 1:
            add((k - 1, l), c * p.c1 * k)
        if k >= 2:
            add((k - 2, l), c * p.alpha1 * k * (k - 1))
        if l >= 1:
            add((k, l - 1), c * p.c2 * q_number(l, d))
        if l >= 2:
            add((k, l - 2), c * p.alpha2 * q_number(l, d) * q_number(l - 1, d))
    return SmashElement(out, d, f.x_cap)


__all__ = [
    "DiffusionParams",
    "Generator",
    "NONSTATIONARY",
    "STATIONARY",
    "continuum_params",
    "diffusion_residual",
    "forward_generator",
    "gaussian_solution",
    "generator",
    "phi_infinity",
    "phi_infinity_terms",
    "xi_closed_form",
    "xi_sector_oracle",
]
