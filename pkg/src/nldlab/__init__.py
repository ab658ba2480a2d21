"""Numerical laboratory for radially symmetric nonlocal diffusion on a ball:
stationary solutions and their branches in the interaction radius, stability
certificates, and semi-implicit time integration with dissipation ledgers.
"""

from .grids import (
    RadialField,
    RadialGrid,
    build_grid,
    constant_field,
    field_from_function,
    h1_seminorm,
    l2_norm,
    principal_eigenvalue,
    radial_derivative,
    sup_norm,
)
from .kernels import InteractionKernel, build_kernel, cap_fraction, functional_bound_report
from .coefficients import (
    ConstantCoefficient,
    DiffusionCoefficient,
    PiecewiseLinearCoefficient,
    RationalCoefficient,
    TabulatedCoefficient,
    build_staircase,
    designed_intervals,
    interval_condition_check,
    scalar_mu_roots,
)
from .stationary import (
    Branch,
    FixedPointDiverged,
    StationaryProblem,
    StationarySolution,
    comparison_check,
    continue_branch,
    fixed_point_solve,
    make_problem,
    multistart_solve,
    pde_residual,
    poisson_phi,
    solve_at_max_radius,
    solve_linear_radial,
    uniqueness_quotient,
    with_radius,
)
from .stability import (
    StabilityCertificate,
    assemble_form,
    assemble_h1,
    certify_stability,
    min_eigenvalue,
    quadratic_form_value,
    stability_lower_bound,
)
from .parabolic import (
    MoserExponents,
    ParabolicProblem,
    Trajectory,
    absorbing_set_report,
    contraction_check,
    corridor_check,
    energy_ledger,
    linf_tracking,
    make_parabolic,
    moser_exponents,
    moser_sigma,
    run,
    steady_convergence_report,
    step,
)

__version__ = "0.1.0"
