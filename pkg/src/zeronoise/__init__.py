"""Stationary densities of diffusively perturbed flows on the circle and torus.

The package cross-checks three independent routes to the same object:

* closed-form quadrature of the stationary equation (the oracle),
* cyclic finite-difference solvers in one and two dimensions,
* Monte Carlo occupation measures of the underlying Stratonovich SDE,

and certifies the explicit first-order residual bounds, the gradient-flow
Gibbs concentration, and the exact stationarity of volume on the torus
under homogeneous diffusion.
"""

from .circle import (
    BoundCertificate,
    ConvergenceReport,
    Density,
    ResidualReport,
    StationarySolution,
    certify_bounds,
    convergence_study,
    residual,
    solve_stationary_fd,
    solve_stationary_quadrature,
    unperturbed_density,
)
from .errors import (
    InsufficientDataError,
    ModeError,
    NonsingularityError,
    PositivityError,
    PrecisionExhaustedError,
    RefineGridError,
    SolverFailureError,
    ValidationError,
    ZeroNoiseError,
)
from .families import make_rule, make_rule_2d
from .fields import (
    DiffusionCoeff1D,
    FlowField1D,
    Grid1D,
    PeriodicField1D,
    cumulative_integral,
    differentiate,
    evaluate_trig,
    field_from_rule,
    field_from_samples,
    integrate,
    norm_l2,
    norm_sup,
)
from .fields2d import Grid2D, PeriodicField2D, constant_field_2d, field_from_rule_2d
from .gradient import (
    ConcentrationTable,
    GibbsDensity,
    PotentialField,
    concentration_study,
    gibbs_density,
    gradient_drift,
    well_masses,
)
from .orderfit import OrderFit, fit_order
from .report import RunManifest
from .sde import (
    OccupationMeasure,
    SdeConfig,
    bin_masses,
    default_test_functions,
    l1_distance,
    l1_to_uniform_2d,
    merge_measures,
    occupation_measure,
    occupation_measure_2d,
    scheme_reference_density,
    step_stratonovich_heun,
    weak_convergence_probe,
    weak_gaps,
    zero_drift_density,
)
from .torus import (
    Density2D,
    RigidityVerdict,
    StreamFunction2D,
    TorusField2D,
    ZeroNoiseReport2D,
    constant_field,
    field_from_stream,
    nonuniformity_contrast,
    rigidity_check,
    solve_stationary_fd_2d,
    solve_stationary_fd_2d_scalar_gamma,
    zero_noise_probe_2d,
)

__version__ = "0.1.0"
