"""Riesz energy minimizers on S^d and their Sobolev and spherical-cap discrepancies."""
from .discrepancy import (
    CapDiscrepancy,
    CapDiscrepancyEstimate,
    DiscrepancyReport,
    IdentityReport,
    SmoothingDefect,
    SobolevDiscrepancy,
    cap_discrepancy,
    discrepancy_report,
    mean_value_check,
    smoothing_defect,
    stolarsky_decomposition_check,
    witnessed_discrepancy,
)
from .energy import (
    EnergyStats,
    RieszParams,
    continuous_energy,
    discrete_energy,
    energy_gap,
    energy_gradient,
    laplace_riesz_residual,
    riesz_kernel,
)
from .exceptions import (
    ConvergenceError,
    InvalidArgumentError,
    ParseError,
    PreconditionError,
    SingularityError,
    StagnationError,
    SweepError,
)
from .experiments import (
    SweepConfig,
    SweepOutputs,
    SweepResult,
    VerifyReport,
    energy_expansion_coefficient,
    fit_exponent,
    read_sweep_csv,
    run_sweep,
    verify,
    write_sweep_csv,
)
from .minimize import MinimizeOptions, MinimizeResult, RieszEnergyMinimizer, minimize_cached, minimize_energy
from .spectral import (
    SobolevDiscrepancyResult,
    SpectralTable,
    cap_multiplier,
    gegenbauer,
    hyp3f2_terminating,
    pair_cap_energy,
    riesz_eigenvalue,
    riesz_eigenvalues,
    sobolev_discrepancy,
    spectral_table,
    zonal_kernel,
    zonal_sums,
)
from .sphere import (
    Cap,
    ConfigMeta,
    Configuration,
    Separation,
    cap_area,
    cap_counts,
    cap_fraction,
    make_rng,
    read_config,
    sample_uniform,
    separation,
    sphere_area,
    write_config,
)
from .validation import check_points

__version__ = "0.1.0"
