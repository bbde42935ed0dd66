"""Numerical and symbolic toolkit for second and fourth order diffusion on a model cone.

The cone is [x_min, 1] x (cross section), carrying the metric dx^2 + x^2 h.
The package splits into a symbolic layer (eigenvalue catalogs, pole catalogs of
the radial conormal symbol, admissible near-tip asymptotics and the domains of
the closed extensions they generate) and a numerical layer (log-radial grids,
weighted Sobolev norms, banded mode-diagonal operators, semi-implicit
Cahn-Hilliard / Allen-Cahn stepping, sectorial-operator estimates and
exponent-recovery diagnostics).
"""

from .cross_section import CrossSection, make_circle, make_sphere, from_spectrum, project
from .cone_symbol import (
    AsymptoticTerm,
    PoleCatalog,
    PoleEntry,
    PoleProximityError,
    apply_symbol,
    compute_bilaplacian_poles,
    compute_poles,
    invert_symbol,
    symbolic_laplacian,
)
from .extensions import (
    DomainAddon,
    EndpointCollisionError,
    ExtensionSpec,
    InconsistentDomainError,
    admissible_window,
    bilaplacian_domain,
    build_extension,
    default_weight,
    inner_boundary_conditions,
    interval_I,
    select_extension,
    weight_window,
)
from .mellin import (
    ConeGrid,
    FieldState,
    constant_state,
    cutoff,
    mellin_norm,
    membership_test,
    monomial_state,
    pointwise_bound_check,
)
from .assembly import (
    ModeOperator,
    TransformPlan,
    apply_operator,
    assemble_bilaplacian,
    assemble_laplacian,
    bilaplacian_suite,
    cubic_field,
    flux_divergence,
    gradient_pairing,
    laplacian_suite,
    nonlinearity,
    to_banded,
    transform_plan,
)
from .evolve import (
    PicardDivergenceError,
    RunConfig,
    Stepper,
    ac_step,
    ch_step,
    compatibility_check,
    double_well,
    energy_functional,
    initial_state,
    mass_functional,
    run,
    wellposedness_smoke,
)
from .spectral_lab import (
    LabReport,
    SpectrumInSectorError,
    bip_estimate,
    imaginary_power,
    imaginary_power_integral,
    lab_report,
    matrix_power_spd,
    perturbation_conditions,
    sector_resolvent_bound,
    symmetrized_laplacian,
    verify_square_identity,
)
from .asymptotics import (
    ZeroModeError,
    fit_exponents,
    interior_smoothness_report,
    match_catalog,
)
from .cli import CliConfig, ConfigError, dispatch, main, parse_config

__version__ = "0.1.0"
