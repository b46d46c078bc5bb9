"""N x N matrix representations of xi, D_xi and D_xi* on the monomial basis.

Conventions: a polynomial sum_m c_m xi**m is the coefficient vector
(c_0, ..., c_{N-1}). The derivative-type matrices (single superdiagonal)
act on column vectors, ``M @ c``, lowering the degree. The printed xi matrix
has the same superdiagonal shape, so it is the multiplication operator in
the row-vector convention, ``c @ M``; its transpose multiplies column vectors.
"""

from __future__ import annotations

import cmath

import numpy as np

from .qcalculus import Deformation, q_number

VARIANTS = ("printed", "algebraic")


def _check_N(N):
    if int(N) != N or N < 2:
        raise ValueError(f"matrix realisation needs an integer N >= 2, got {N}")
    return int(N)


def bracket(i: int, N: int) -> complex:
    """{i} = (1 - w**i) / (1 - w) with w = exp(2 pi i / N); equals [i]_q."""
    return q_number(i, Deformation(N))


def xi_matrix(N: int) -> np.ndarray:
    N = _check_N(N)
    return np.eye(N, k=1, dtype=complex)


def d_xi_matrix(N: int) -> np.ndarray:
    N = _check_N(N)
    M = np.zeros((N, N), dtype=complex)
    for i in range(1, N):
        M[i - 1, i] = bracket(i, N)
    return M


def lambdas(N: int, variant: str = "printed") -> np.ndarray:
    """Superdiagonal entries lambda_1 .. lambda_{N-1} of the chosen D* matrix."""
    N = _check_N(N)
    d = Deformation(N)
    if variant == "printed":
        winv = d.root_power(-1)
        return np.array([bracket(i, N) * cmath.exp(winv * bracket(i, N)) for i in range(1, N)])
    if variant == "algebraic":
        # -D L_{1/q} on xi**i gives -q**(-i) [i]_q xi**(i-1)
        return np.array([-d.root_power(-i) * bracket(i, N) for i in range(1, N)])
    raise ValueError(f"unknown D* variant {variant!r}; choose from {VARIANTS}")


def d_xi_star_matrix(N: int, variant: str = "printed") -> np.ndarray:
    lam = lambdas(N, variant)
    M = np.zeros((len(lam) + 1,) * 2, dtype=complex)
    M[np.arange(len(lam)), np.arange(1, len(lam) + 1)] = lam
    return M


def xi_generator_matrix(N: int, c2, alpha2, variant: str = "printed", drift_shift=0.0) -> np.ndarray:
    """c2 D* + alpha2 D*^2 - drift_shift D*, the xi-part of the diffusion generator."""
    S = d_xi_star_matrix(N, variant)
    return (c2 - drift_shift) * S + alpha2 * (S @ S)


def nilpotent_expm(A: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(t A) for nilpotent A: the series stops after dim(A) terms, so it is exact.

    Raises if A is not nilpotent (A**dim != 0).
    """
    n = A.shape[0]
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for m in range(1, n + 1):
        term = term @ (t * A) / m
        if m == n:
            if np.any(term != 0):
                raise ValueError("matrix is not nilpotent; finite series would be inexact")
            break
        out = out + term
    return out


def rho_matrix(components) -> np.ndarray:
    """Lower-triangular Toeplitz arrangement of rho_0 .. rho_{N-1}.

    ``components`` has shape (N,) or (N, ...); trailing axes are carried along.
    This is sum_i rho_i S**i with S = xi_matrix(N).T.
    """
    comps = np.asarray(components)
    N = comps.shape[0]
    out = np.zeros((N, N) + comps.shape[1:], dtype=np.result_type(comps, complex))
    for i in range(N):
        for j in range(i + 1):
            out[i, j] = comps[i - j]
    return out
