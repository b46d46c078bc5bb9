"""Coupled diffusion system for the xi-components rho_0 .. rho_{N-1}.

d rho_k / dt = H_x rho_k + c2 lambda_{k+1} rho_{k+1} + alpha2 lambda_{k+1} lambda_{k+2} rho_{k+2},
with H_x = -c1 D_x + alpha1 D_x^2 and out-of-range terms dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.integrate import quad_vec
from scipy.sparse.linalg import splu

from .diffusion import DiffusionParams
from .matrices import (
    VARIANTS,
    d_xi_matrix,
    d_xi_star_matrix,
    lambdas,
    nilpotent_expm,
    rho_matrix,
    xi_generator_matrix,
    xi_matrix,
)

CRANK_NICOLSON, RK4 = "crank-nicolson", "rk4"
DEFAULT_DT = {CRANK_NICOLSON: 1e-3, RK4: 2.5e-4}
EXPLICIT_STABILITY = 0.25
INSTABILITY_GROWTH = 1e6
BOUNDARY_MASS_TOL = 1e-10


class NumericalInstability(ArithmeticError):
    pass


class BoundaryMassError(RuntimeError):
    pass


@dataclass(frozen=True)
class CoupledOperator:
    """Block upper-triangular operator H = H_x (x) 1 + coupling.

    ``coupling[k, j]`` multiplies rho_j in the equation for rho_k.
    """

    N: int
    c1: float
    alpha1: float
    coupling: np.ndarray
    lambdas: np.ndarray

    def couplings(self, k: int):
        """Nonzero (j, coefficient) pairs feeding the equation for rho_k."""
        return [(j, self.coupling[k, j]) for j in range(k + 1, self.N) if self.coupling[k, j] != 0]


def assemble_H(N: int, p: DiffusionParams, variant: str = "printed") -> CoupledOperator:
    lam = lambdas(N, variant)
    C = xi_generator_matrix(N, p.c2, p.alpha2, variant)
    return CoupledOperator(N=N, c1=p.c1, alpha1=p.alpha1, coupling=C, lambdas=lam)


@dataclass(frozen=True)
class GridSpec:
    x_min: float = -10.0
    x_max: float = 10.0
    dx: float = 0.01
    dt: float | None = None
    t_end: float = 1.0
    scheme: str = CRANK_NICOLSON
    stride: int = 0
    upwind: bool = False

    def __post_init__(self):
        if self.scheme not in DEFAULT_DT:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose {sorted(DEFAULT_DT)}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        if not self.dx > 0 or not self.t_end > 0:
            raise ValueError("dx and t_end must be > 0")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.stride < 0:
            raise ValueError("stride must be >= 0")

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else DEFAULT_DT[self.scheme]

    @property
    def x(self) -> np.ndarray:
        cells = int(round((self.x_max - self.x_min) / self.dx))
        return self.x_min + self.dx * np.arange(cells + 1)

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.step)))


@dataclass
class SystemState:
    x: np.ndarray
    components: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.components = np.atleast_2d(np.asarray(self.components, dtype=complex))
        if self.components.shape[1] != self.x.size:
            raise ValueError("components must share the x grid")
        h = np.diff(self.x)
        if np.any(h <= 0) or not np.allclose(h, h[0], rtol=1e-9, atol=0):
            raise ValueError("grid must be uniform with dx > 0")

    @property
    def N(self) -> int:
        return self.components.shape[0]

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def mass(self) -> np.ndarray:
        return self.components.sum(axis=1) * self.dx

    def lower_triangular(self) -> np.ndarray:
        return rho_matrix(self.components)


@dataclass(frozen=True)
class GaussianMixture:
    """sum_i w_i * Normal(x; mean_i, var_i), closed under the drifted heat flow."""

    weights: tuple
    means: tuple
    variances: tuple

    def __post_init__(self):
        if not len(self.weights) == len(self.means) == len(self.variances):
            raise ValueError("weights, means and variances must align")
        if any(v <= 0 for v in self.variances):
            raise ValueError("variances must be > 0")

    @classmethod
    def single(cls, weight=1.0, mean=0.0, var=0.25):
        return cls((weight,), (mean,), (var,))

    @classmethod
    def zero(cls):
        return cls((), (), ())

    def evolve(self, tau: float, c1: float, alpha1: float) -> GaussianMixture:
        return GaussianMixture(
            self.weights,
            tuple(m + c1 * tau for m in self.means),
            tuple(v + 2.0 * alpha1 * tau for v in self.variances),
        )

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for w, m, v in zip(self.weights, self.means, self.variances):
            out += w * np.exp(-((x - m) ** 2) / (2.0 * v)) / math.sqrt(2.0 * math.pi * v)
        return out


@dataclass
class Solution:
    x: np.ndarray
    times: np.ndarray
    states: np.ndarray  # (n_snapshots, N, nx)
    info: dict = field(default_factory=dict)

    def final(self) -> SystemState:
        return SystemState(self.x, self.states[-1], float(self.times[-1]))

    def rows(self):
        """(x, t, k, re, im) rows ordered by t, k, x."""
        for t, state in zip(self.times, self.states):
            for k, comp in enumerate(state):
                for xv, v in zip(self.x, comp):
                    yield xv, t, k, v.real, v.imag


def _hx_matrix(m: int, h: float, c1: float, alpha1: float, upwind: bool):
    diff = alpha1 / h**2 * sps.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(m, m))
    if upwind:
        if c1 >= 0:
            adv = -c1 / h * sps.diags([-1.0, 1.0], [-1, 0], shape=(m, m))
        else:
            adv = -c1 / h * sps.diags([-1.0, 1.0], [0, 1], shape=(m, m))
    else:
        adv = -c1 / (2.0 * h) * sps.diags([-1.0, 1.0], [-1, 1], shape=(m, m))
    return (diff + adv).tocsc().astype(complex)


def _boundary_mass(comps: np.ndarray, dx: float, band: float = 0.05) -> float:
    nx = comps.shape[1]
    w = max(1, int(band * nx))
    edge = np.abs(comps[:, :w]).sum() + np.abs(comps[:, -w:]).sum()
    total = max(np.abs(comps).sum(), 1e-300)
    return float(edge / total)


def solve_system(
    g: GridSpec,
    p: DiffusionParams,
    initial: SystemState,
    variant: str = "printed",
    check_boundary: bool = True,
) -> Solution:
    """March the coupled system to ``g.t_end`` with zero Dirichlet boundaries.

    Crank-Nicolson handles H_x implicitly. The coupling is strictly upper
    triangular, so components are advanced from rho_{N-1} down to rho_0,
    and the already-advanced higher components enter the trapezoidal source
    at both time levels. RK4 advances the full system explicitly and
    requires alpha1 dt / dx^2 <= 0.25.
    """
    x = g.x
    if initial.x.size != x.size or not np.allclose(initial.x, x):
        raise ValueError("initial state must be sampled on the GridSpec x grid")
    N = initial.N
    h = g.dx
    dt = g.step
    if g.scheme == RK4 and p.alpha1 * dt / h**2 > EXPLICIT_STABILITY:
        raise NumericalInstability(
            f"explicit scheme unstable: alpha1*dt/dx^2 = {p.alpha1 * dt / h**2:.4g} > {EXPLICIT_STABILITY}"
        )
    C = xi_generator_matrix(N, p.c2, p.alpha2, variant)
    L = _hx_matrix(x.size - 2, h, p.c1, p.alpha1, g.upwind)
    U = np.array(initial.components[:, 1:-1], dtype=complex)
    scale = max(1.0, float(np.abs(U).max()))
    n_steps = g.n_steps
    stride = g.stride or n_steps

    def padded(V):
        out = np.zeros((N, x.size), dtype=complex)
        out[:, 1:-1] = V
        return out

    times = [initial.time]
    snaps = [padded(U)]

    if g.scheme == CRANK_NICOLSON:
        eye = sps.identity(L.shape[0], dtype=complex, format="csc")
        lu = splu((eye - 0.5 * dt * L).tocsc())
        B = (eye + 0.5 * dt * L).tocsr()

        def advance(V):
            new = np.empty_like(V)
            for k in range(N - 1, -1, -1):
                rhs = B @ V[k]
                for j in range(k + 1, N):
                    if C[k, j] != 0:
                        rhs += 0.5 * dt * C[k, j] * (V[j] + new[j])
                new[k] = lu.solve(rhs)
            return new

    else:
        Lr = L.tocsr()

        def rate(V):
            return (Lr @ V.T).T + C @ V

        def advance(V):
            k1 = rate(V)
            k2 = rate(V + 0.5 * dt * k1)
            k3 = rate(V + 0.5 * dt * k2)
            k4 = rate(V + dt * k3)
            return V + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    for step in range(1, n_steps + 1):
        U = advance(U)
        if not np.all(np.isfinite(U)) or np.abs(U).max() > INSTABILITY_GROWTH * scale:
            raise NumericalInstability(f"solution norm blew up at step {step}")
        if step % stride == 0 or step == n_steps:
            times.append(initial.time + step * dt)
            snaps.append(padded(U))

    states = np.array(snaps)
    info = {"scheme": g.scheme, "dt": dt, "dx": h, "steps": n_steps, "variant": variant}
    if check_boundary:
        bm = _boundary_mass(states[-1], h)
        info["boundary_mass"] = bm
        if bm > BOUNDARY_MASS_TOL:
            raise BoundaryMassError(
                f"relative mass {bm:.3g} within 5% of the domain edge exceeds {BOUNDARY_MASS_TOL}; widen the domain"
            )
    return Solution(x=x, times=np.array(times), states=states, info=info)


def initial_state(x, mixtures, time: float = 0.0) -> SystemState:
    return SystemState(np.asarray(x, dtype=float), np.array([m(x) for m in mixtures]), time)


def duhamel_oracle(
    p: DiffusionParams,
    initial,
    t: float,
    x,
    variant: str = "printed",
    epsrel: float = 1e-10,
    epsabs: float = 1e-12,
) -> SystemState:
    """Variation-of-constants solution, evaluated at points ``x``.

    ``initial`` is a sequence of N :class:`GaussianMixture`. With S the free
    H_x flow, heat(tau) rho_k(t) equals
    S(t + tau) rho_k(0) + int_0^t sum_j C_kj S(tau + t - s) rho_j(s) ds,
    and the recursion bottoms out at rho_{N-1}, a pure Gaussian mixture.
    Time integrals use adaptive vector quadrature.
    """
    mixtures = list(initial)
    if not all(isinstance(m, GaussianMixture) for m in mixtures):
        raise TypeError("duhamel_oracle needs Gaussian-mixture initial data")
    N = len(mixtures)
    x = np.asarray(x, dtype=float)
    C = xi_generator_matrix(N, p.c2, p.alpha2, variant)

    def flowed(k, t_, tau):
        val = mixtures[k].evolve(t_ + tau, p.c1, p.alpha1)(x)
        if t_ == 0:
            return val
        for j in range(k + 1, N):
            if C[k, j] == 0:
                continue

            def integrand(s, j=j):
                return C[k, j] * flowed(j, s, tau + t_ - s)

            res, _ = quad_vec(integrand, 0.0, t_, epsabs=epsabs, epsrel=epsrel, norm="max")
            val = val + res
        return val

    comps = np.array([flowed(k, t, 0.0) for k in range(N)])
    return SystemState(x, comps, t)


def commuting_solution(p: DiffusionParams, initial, t: float, x, variant: str = "printed") -> SystemState:
    """Closed form exp(t C) applied to the free-flowed initial data.

    H_x acts on x and the coupling C on the component index, so the two
    exponentials commute.
    """
    mixtures = list(initial)
    N = len(mixtures)
    x = np.asarray(x, dtype=float)
    E = nilpotent_expm(xi_generator_matrix(N, p.c2, p.alpha2, variant), t)
    free = np.array([m.evolve(t, p.c1, p.alpha1)(x) for m in mixtures])
    return SystemState(x, E @ free, t)


def relative_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


__all__ = [
    "BoundaryMassError",
    "CRANK_NICOLSON",
    "CoupledOperator",
    "GaussianMixture",
    "GridSpec",
    "NumericalInstability",
    "RK4",
    "Solution",
    "SystemState",
    "VARIANTS",
    "assemble_H",
    "commuting_solution",
    "d_xi_matrix",
    "d_xi_star_matrix",
    "duhamel_oracle",
    "initial_state",
    "lambdas",
    "relative_l2",
    "rho_matrix",
    "solve_system",
    "xi_matrix",
]
