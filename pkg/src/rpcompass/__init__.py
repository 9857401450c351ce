"""Steady-state spin dynamics and estimation-theory limits for radical-pair
magnetic compasses."""

from .constants import (
    DEFAULT_G_FACTOR,
    dipolar_prefactor_mT_nm3,
    gyromagnetic_ratio_mT,
)
from .hamiltonian import (
    build_hamiltonian,
    hamiltonian_terms,
    point_dipole_tensor,
    zeeman_frequencies,
)
from .liouville import (
    NumericalError,
    SteadyStateResult,
    build_liouvillian,
    devectorize,
    hamiltonian_superoperator,
    partial_trace_electronic,
    propagate_time_domain,
    solve_steady_state,
    steady_state,
    steady_state_schur,
    vectorize,
)
from .metrology import (
    MetrologyRecord,
    RouteDiagnostics,
    StateDerivative,
    cfi_yield,
    metrology_record,
    optimal_estimator,
    orthogonality_distance,
    qfi_from_sld,
    qfi_spectral,
    qfi_vectorized,
    record_from_derivative,
    route_diagnostics,
    singlet_population,
    sld_solve,
    spin_component_basis,
    spin_component_decomposition,
    state_derivative,
    yield_from_population,
    yield_variance,
    yield_variance_from_total_spin,
)
from .modelio import (
    ModelFileError,
    load_shipped_model,
    load_spin_system,
    shipped_model_names,
    shipped_models_dir,
)
from .operators import (
    angular_momentum_ops,
    electron_pair_ops,
    electron_singlet_projector,
    electron_spin_squared,
    electron_spin_squared_pair,
    embed_site_operator,
    singlet_projector,
)
from .sweep import (
    SweepGrid,
    SweepResult,
    TruncationRow,
    TruncationSummary,
    anisotropy,
    best_precision_point,
    sweep,
    truncation_scan,
    weighted_sphere_mean,
    write_scan_summary,
    write_sweep_csv,
    write_sweep_summary,
)
from .system import (
    DimensionCapError,
    FieldOrientation,
    Nucleus,
    SpinSystem,
    average_conformers,
    dimension_cap,
    hyperfine_strength,
    rank_and_truncate,
)

__version__ = "0.1.0"
