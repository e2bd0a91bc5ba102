"""Interferometric test of quantum versus classical gravity dynamics.

A particle held in a two-arm superposition between two source balls
accumulates a relative phase whose frequency differs between unitary
quantum dynamics (omega_Q, set by the potential difference between the
arms) and classical phase-space transport (omega_C, set by the midpoint
force).  Choosing ball distances that null omega_C while leaving omega_Q
at a fraction of a rad/s turns the fringe into a discriminating
measurement.

The package provides the geometry and frequency formulas
(:mod:`gravfringe.gravity`), the reduced two-state dynamics of the
candidate laws (:mod:`gravfringe.twostate`), a full phase-space
evolution oracle that derives those frequencies from grid dynamics
instead of formulas (:mod:`gravfringe.phasespace`,
:mod:`gravfringe.oracle`), fringe-record synthesis and estimation
(:mod:`gravfringe.fringe`), and a command line (``gravfringe``).
"""

from .config import (
    ExperimentConfig,
    PhysicalConstants,
    ball_radius,
    cesium_tungsten_config,
    load_config,
    parse_config,
    save_config,
    serialize_config,
)
from .errors import (
    CoherenceGrowthWarning,
    ConfigParseError,
    ConfigValidationError,
    DerivativeOrderError,
    DomainError,
    FitConvergenceError,
    GravfringeError,
    GridError,
    InfeasibleGeometryError,
    InstabilityError,
    InsufficientSpanError,
    IntegrationError,
    NonOrthogonalPacketsError,
    NoSteadyStateError,
    PositivityWarning,
    RecordError,
    UnsupportedModelError,
)
from .gravity import (
    PotentialProfile,
    force_derivative,
    frequency_report,
    omega_classical,
    omega_quantum,
    potential,
    solve_null_distance,
    solve_null_quantum_distance,
    two_ball_derivative,
    two_ball_potential,
)
from .fringe import (
    FitResult,
    FringeRecord,
    fit_damped_fringe,
    population_shift,
    read_fit_result,
    read_record,
    signal_from_state,
    synthesize_record,
    write_fit_result,
    write_record,
)
from .oracle import (
    OracleConfig,
    OracleReport,
    default_scaled_config,
    load_oracle_config,
    parse_oracle_config,
    run_validation,
    save_oracle_config,
)
from .phasespace import (
    BracketOrder,
    HamiltonianField,
    WignerGrid,
    arm_coherence,
    coherence_from_kernel,
    evolve_wigner,
    kinetic_bracket,
    load_grid,
    moyal_bracket,
    moyal_correction_terms,
    poisson_bracket,
    potential_bracket,
    potential_commutator_term,
    save_grid,
    stability_bound,
    truncation_tail_ratio,
    weyl_density_matrix,
    wigner_from_two_packets,
)
from .twostate import (
    PLUS_STATE,
    ClassicalPoisson,
    DynamicsModel,
    GeneralLinear,
    Schrodinger,
    TilloyDiosi,
    TwoLevelState,
    analytic_coherence,
    coherence_matrix,
    derivative,
    eigenvalue_branch,
    evolve,
    spectral_solution,
    steady_state_population,
    trajectory,
)

__version__ = "0.1.0"
