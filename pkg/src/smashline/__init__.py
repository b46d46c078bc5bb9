"""Algebraic Brownian motion on the smash line (real line x paragrassmann line)."""

from .qcalculus import (
    Deformation,
    XiPolynomial,
    dual_derivative,
    jackson_derivative,
    q_binomial,
    q_exponential_coefficients,
    q_factorial,
    q_multinomial,
    q_number,
    scale_operator,
)
from .smash_algebra import (
    MultiSlotExpansion,
    MultiSlotWord,
    SmashElement,
    braided_normal_order,
    coproduct,
    coproduct_power,
    counit,
    multiply,
    multislot_multiply,
)
from .random_walk import StepDensity, WalkSpec, expectation, moment, moment_oracle, phi_x, phi_xi
from .diffusion import (
    DiffusionParams,
    continuum_params,
    diffusion_residual,
    gaussian_solution,
    phi_infinity,
    xi_closed_form,
    xi_sector_oracle,
)
from .matrix_realization import (
    GaussianMixture,
    GridSpec,
    SystemState,
    assemble_H,
    d_xi_matrix,
    d_xi_star_matrix,
    duhamel_oracle,
    solve_system,
    xi_matrix,
)

__version__ = "0.1.0"
