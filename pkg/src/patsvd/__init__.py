"""SVD of the photoacoustic wave forward map with radial sound speed.

The package solves the radial eigenproblems that diagonalize the forward
map taking an initial acoustic pressure on the unit ball to its boundary
trace, builds the corresponding modal basis, simulates the forward map
spectrally and by finite differences, and inverts boundary data through
the singular system, both coefficientwise and by least squares.
"""

__version__ = "0.1.0"

from .errors import ConfigurationError, DivergenceError, NumericalError, ShapeError
from .speed import SoundSpeedProfile, evaluate_speed, make_profile
from .radial import (
    BoundaryCondition,
    DiscreteOperator,
    EndpointClass,
    RadialGrid,
    RadialMode,
    assemble_discrete_operator,
    bessel_reference_modes,
    boundary_values,
    classify_origin,
    convergence_order,
    load_modes,
    radial_eigenvalues,
    reference_boundary_amplitude,
    save_modes,
    solve_radial_modes,
)
from .basis import (
    AngularGrid,
    GridFunction,
    ModalCoefficients,
    Mode,
    ModeIndex,
    QuadratureRule,
    discrete_angular_eigenvalue,
    enumerate_modes,
    evaluate_mode,
    gram_matrix,
    load_grid,
    mode_samples,
    project,
    save_grid,
    save_grid_csv,
    spherical_harmonic,
    synthesize,
    weighted_inner_product,
    weighted_norm,
    worker_count,
)
from .forward import (
    BoundaryTrace,
    FdtdConfig,
    FdtdRun,
    TimeGrid,
    cosine_pair_average,
    fdtd_time_step,
    forward_fdtd,
    forward_spectral,
    leapfrog_frequency,
    load_trace,
    load_trace_csv,
    run_fdtd,
    save_trace,
    save_trace_csv,
    singular_trace,
    time_averaged_inner_product,
    trace_norm,
)
from .inversion import (
    ReconstructionReport,
    SvdTriple,
    lsq_coefficients,
    crosstalk_bound,
    degenerate_pairs,
    dirichlet_forward_trace,
    dirichlet_recover,
    lsq_reconstruct,
    make_triples,
    reconstruct,
    recover_coefficient,
    recover_coefficients,
    singular_spectrum,
)
from .phantoms import PhantomSpec, gaussian_mass, make_phantom
from .figures import (
    cartesian_to_polar,
    export_image,
    polar_to_cartesian,
    save_field_figure,
    save_spectrum_figure,
    save_trace_figure,
)
from .pipeline import (
    PRESETS,
    RunConfig,
    VALIDATION_SUITES,
    load_config,
    run_forward,
    run_pipeline,
    validate_suite,
)

__all__ = [
    "__version__",
    "ConfigurationError", "DivergenceError", "NumericalError", "ShapeError",
    "SoundSpeedProfile", "evaluate_speed", "make_profile",
    "BoundaryCondition", "DiscreteOperator", "EndpointClass", "RadialGrid", "RadialMode",
    "assemble_discrete_operator", "bessel_reference_modes", "boundary_values",
    "classify_origin", "convergence_order", "load_modes", "radial_eigenvalues",
    "reference_boundary_amplitude",
    "save_modes", "solve_radial_modes",
    "AngularGrid", "GridFunction", "ModalCoefficients", "Mode", "ModeIndex",
    "QuadratureRule", "discrete_angular_eigenvalue", "enumerate_modes", "evaluate_mode", "gram_matrix",
    "load_grid", "mode_samples", "project", "save_grid", "save_grid_csv",
    "spherical_harmonic", "synthesize", "weighted_inner_product", "weighted_norm",
    "worker_count",
    "BoundaryTrace", "FdtdConfig", "FdtdRun", "TimeGrid", "cosine_pair_average",
    "fdtd_time_step", "forward_fdtd", "leapfrog_frequency", "forward_spectral", "load_trace", "load_trace_csv", "run_fdtd",
    "save_trace", "save_trace_csv", "singular_trace", "time_averaged_inner_product",
    "trace_norm",
    "ReconstructionReport", "SvdTriple", "lsq_coefficients", "crosstalk_bound",
    "degenerate_pairs", "dirichlet_forward_trace", "dirichlet_recover",
    "lsq_reconstruct", "make_triples", "reconstruct", "recover_coefficient",
    "recover_coefficients", "singular_spectrum",
    "PhantomSpec", "gaussian_mass", "make_phantom",
    "cartesian_to_polar", "export_image", "polar_to_cartesian",
    "save_field_figure", "save_spectrum_figure", "save_trace_figure",
    "PRESETS", "RunConfig", "VALIDATION_SUITES", "load_config", "run_forward",
    "run_pipeline", "validate_suite",
]
