import cmath
import math

import numpy as np
import pytest

from smashline.diffusion import DiffusionParams
from smashline.matrices import (
    bracket,
    d_xi_matrix,
    d_xi_star_matrix,
    lambdas,
    nilpotent_expm,
    rho_matrix,
    xi_matrix,
)
from smashline.matrix_realization import (
    RK4,
    BoundaryMassError,
    GaussianMixture,
    GridSpec,
    NumericalInstability,
    SystemState,
    assemble_H,
    commuting_solution,
    duhamel_oracle,
    initial_state,
    relative_l2,
    solve_system,
)
from smashline.qcalculus import Deformation, XiPolynomial, dual_derivative, jackson_derivative

FAST = GridSpec(dx=0.02, dt=2e-3, t_end=0.5)
PARAMS = DiffusionParams(c1=0.5, alpha1=0.5, c2=1.0, alpha2=0.5)


def gaussians(N, var=0.25):
    return [GaussianMixture.single(1.0, 0.0, var) for _ in range(N)]


def test_matrix_examples():
    assert np.array_equal(xi_matrix(2), [[0, 1], [0, 0]])
    assert np.array_equal(np.diag(xi_matrix(3), 1), [1, 1])
    assert d_xi_matrix(2)[0, 1] == 1
    assert np.allclose(np.diag(d_xi_matrix(4), 1), [1, 1 + 1j, 1j], atol=1e-15)
    assert abs(d_xi_star_matrix(2, "printed")[0, 1] - math.exp(-1)) < 1e-15
    assert abs(d_xi_star_matrix(2, "algebraic")[0, 1] - 1) < 1e-15
    with pytest.raises(ValueError):
        lambdas(3, "other")
    with pytest.raises(ValueError):
        xi_matrix(1)


def test_printed_lambdas_formula():
    for N in range(2, 6):
        w = cmath.exp(2j * math.pi / N)
        want = [bracket(i, N) * cmath.exp(bracket(i, N) / w) for i in range(1, N)]
        assert np.allclose(lambdas(N), want, atol=1e-14)


@pytest.mark.parametrize("N", range(2, 7))
def test_matrix_fidelity_and_nilpotency(N):
    d = Deformation(N)
    X, D, S = xi_matrix(N), d_xi_matrix(N), d_xi_star_matrix(N, "algebraic")
    for m in range(N):
        e = XiPolynomial.monomial(m, d)
        times_xi = e * XiPolynomial.monomial(1, d)
        assert np.max(np.abs(e.coeffs @ X - times_xi.coeffs)) < 1e-13
        assert np.max(np.abs(X.T @ e.coeffs - times_xi.coeffs)) < 1e-13
        assert np.max(np.abs(D @ e.coeffs - jackson_derivative(e).coeffs)) < 1e-13
        assert np.max(np.abs(S @ e.coeffs - dual_derivative(e).coeffs)) < 1e-13
    for M in (X, D, S, d_xi_star_matrix(N, "printed")):
        assert np.all(np.linalg.matrix_power(M, N) == 0)
        assert np.all(np.tril(M) == 0)


def test_nilpotent_expm():
    A = np.array([[0, 2.0], [0, 0]])
    assert np.allclose(nilpotent_expm(A, 0.5), [[1, 1], [0, 1]])
    with pytest.raises(ValueError):
        nilpotent_expm(np.eye(2))


def test_rho_matrix_is_toeplitz_series():
    comps = np.array([1.0, 2.0, 3.0])
    S = xi_matrix(3).T
    want = sum(c * np.linalg.matrix_power(S, i) for i, c in enumerate(comps))
    assert np.allclose(rho_matrix(comps), want)
    field = np.arange(6.0).reshape(3, 2)
    assert rho_matrix(field).shape == (3, 3, 2)


def test_assemble_H_shapes():
    op = assemble_H(2, PARAMS)
    lam = lambdas(2)
    assert op.couplings(0) == [(1, pytest.approx(PARAMS.c2 * lam[0]))]
    assert op.couplings(1) == []
    op3 = assemble_H(3, PARAMS)
    lam = lambdas(3)
    assert np.isclose(op3.coupling[0, 1], PARAMS.c2 * lam[0])
    assert np.isclose(op3.coupling[1, 2], PARAMS.c2 * lam[1])
    assert np.isclose(op3.coupling[0, 2], PARAMS.alpha2 * lam[0] * lam[1])
    assert not np.any(assemble_H(4, DiffusionParams(c1=1.0)).coupling)


def test_grid_and_state_validation():
    with pytest.raises(ValueError):
        GridSpec(x_min=1.0, x_max=0.0)
    with pytest.raises(ValueError):
        GridSpec(scheme="euler")
    with pytest.raises(ValueError):
        GridSpec(dt=-1.0)
    assert GridSpec().step == 1e-3 and GridSpec(scheme=RK4).step == 2.5e-4
    assert GridSpec().x.size == 2001
    with pytest.raises(ValueError):
        SystemState(np.array([0.0, 1.0, 3.0]), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        GaussianMixture((1.0,), (0.0,), (0.0,))


def test_last_component_is_free_heat_flow():
    for N in (2, 3):
        sol = solve_system(FAST, PARAMS, initial_state(FAST.x, gaussians(N)))
        exact = GaussianMixture.single().evolve(FAST.t_end, PARAMS.c1, PARAMS.alpha1)(FAST.x)
        assert relative_l2(sol.final().components[-1], exact) < 1e-3


def test_decoupled_components_stay_identical():
    p = DiffusionParams(c1=0.7, alpha1=0.5)
    sol = solve_system(FAST, p, initial_state(FAST.x, gaussians(3)))
    for state in sol.states:
        assert np.array_equal(state[0], state[1]) and np.array_equal(state[1], state[2])


def test_solver_matches_duhamel():
    mix = gaussians(2)
    sol = solve_system(FAST, PARAMS, initial_state(FAST.x, mix))
    orc = duhamel_oracle(PARAMS.at(FAST.t_end), mix, FAST.t_end, FAST.x)
    assert relative_l2(sol.final().components, orc.components) < 1e-3


def test_triangular_causality():
    mix = gaussians(3)
    base = solve_system(FAST, PARAMS, initial_state(FAST.x, mix))
    bumped = list(mix)
    bumped[0] = GaussianMixture((1.0, 0.3), (0.0, 1.0), (0.25, 0.1))
    pert = solve_system(FAST, PARAMS, initial_state(FAST.x, bumped))
    assert np.array_equal(base.states[:, 1:], pert.states[:, 1:])
    assert not np.array_equal(base.states[:, 0], pert.states[:, 0])


def test_mass_conservation_without_coupling():
    p = DiffusionParams(c1=-1.3, alpha1=0.5)
    g = GridSpec(dx=0.02, t_end=1.0)
    mix = [GaussianMixture.single(w, 0.5, 0.3) for w in (1.0, 2.0)]
    sol = solve_system(g, p, initial_state(g.x, mix))
    m0 = SystemState(g.x, sol.states[0]).mass()
    assert np.max(np.abs(sol.final().mass() - m0)) < 1e-6


def test_rk4_agrees_with_crank_nicolson():
    g_cn = GridSpec(dx=0.05, dt=1e-3, t_end=0.2)
    g_rk = GridSpec(dx=0.05, dt=1e-3, t_end=0.2, scheme=RK4)
    init = initial_state(g_cn.x, gaussians(3))
    a = solve_system(g_cn, PARAMS, init).final().components
    b = solve_system(g_rk, PARAMS, init).final().components
    assert relative_l2(a, b) < 1e-5


def test_explicit_stability_bound_enforced():
    g = GridSpec(dx=0.01, scheme=RK4, t_end=0.01)
    with pytest.raises(NumericalInstability, match="unstable"):
        solve_system(g, PARAMS, initial_state(g.x, gaussians(2)))


def test_boundary_mass_violation():
    g = GridSpec(x_min=-2.0, x_max=2.0, dx=0.02, t_end=0.5)
    with pytest.raises(BoundaryMassError):
        solve_system(g, PARAMS, initial_state(g.x, gaussians(2)))


def test_stride_and_rows():
    g = GridSpec(dx=0.05, dt=0.01, t_end=0.1, stride=5)
    sol = solve_system(g, PARAMS, initial_state(g.x, gaussians(2)))
    assert np.allclose(sol.times, [0.0, 0.05, 0.1])
    rows = list(sol.rows())
    assert len(rows) == 3 * 2 * g.x.size
    assert rows[0][:3] == (g.x[0], 0.0, 0)


def test_upwind_option_runs_and_stays_close():
    p = DiffusionParams(c1=2.0, alpha1=0.5)
    g = GridSpec(dx=0.02, t_end=0.3)
    up = GridSpec(dx=0.02, t_end=0.3, upwind=True)
    init = initial_state(g.x, gaussians(2))
    a = solve_system(g, p, init).final().components
    b = solve_system(up, p, init).final().components
    assert relative_l2(b, a) < 0.05


def test_duhamel_trivial_cases():
    x = np.linspace(-5, 5, 101)
    mix = [GaussianMixture.single(1.0, 0.2, 0.3), GaussianMixture.single(2.0, -0.1, 0.5)]
    at0 = duhamel_oracle(PARAMS, mix, 0.0, x)
    assert np.allclose(at0.components, [m(x) for m in mix])
    p = DiffusionParams(c1=0.4, alpha1=0.6)
    free = duhamel_oracle(p, mix, 0.8, x)
    assert np.allclose(free.components, [m.evolve(0.8, 0.4, 0.6)(x) for m in mix], atol=1e-14)
    with pytest.raises(TypeError):
        duhamel_oracle(p, [lambda x: x], 0.5, x)


@pytest.mark.parametrize("N", [2, 3])
@pytest.mark.parametrize("variant", ["printed", "algebraic"])
def test_duhamel_matches_commuting_exponential(N, variant):
    x = np.linspace(-5, 5, 101)
    mix = gaussians(N)
    a = duhamel_oracle(PARAMS, mix, 0.7, x, variant).components
    b = commuting_solution(PARAMS, mix, 0.7, x, variant).components
    assert np.max(np.abs(a - b)) < 1e-9


def test_variants_give_different_solutions():
    mix = gaussians(2)
    sol = {
        v: solve_system(FAST, PARAMS, initial_state(FAST.x, mix), variant=v).final().components
        for v in ("printed", "algebraic")
    }
    assert relative_l2(sol["printed"], sol["algebraic"]) > 1e-2


def test_initial_grid_must_match():
    g = GridSpec(dx=0.05, t_end=0.1)
    other = GridSpec(dx=0.1)
    with pytest.raises(ValueError):
        solve_system(g, PARAMS, initial_state(other.x, gaussians(2)))
