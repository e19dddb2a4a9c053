"""poptomo: density-matrix reconstruction from population dynamics.

Estimates the initial state of an n-level system (and optionally its
dephasing rate) from time-resolved sublevel population measurements,
assuming the drive Hamiltonian is fully known.
"""

from .errors import (
    DegenerateParams,
    DimensionMismatch,
    EmptyWindow,
    FactorizationFailure,
    GridMismatch,
    InvalidState,
    NoConvergence,
    NonFiniteObjective,
    NonHermitianInput,
    NumericalDrift,
    NumericalError,
    ParseError,
    PoptomoError,
    SchemaError,
    ValidationError,
)
from .dynamics import (
    DensityMatrix,
    EvolutionModel,
    GenericHamiltonian,
    HamiltonianSpec,
    Ladder5,
    Propagator,
    build_hamiltonian,
    evolve,
    lindblad_rhs,
    liouvillian_matrix,
    make_propagator,
    populations,
    uhlmann_fidelity,
    unvectorize,
    vectorize,
)
from .parameterize import StateParams, params_to_rho, rho_to_params
from .optimize import (
    OptResult,
    SimplexConfig,
    SubplexConfig,
    multi_start,
    nelder_mead,
    subplex,
)
from .records import (
    MeasurementRecord,
    load_record,
    save_record,
    shot_noise_floor,
)
from .tomography import (
    ConvergencePoint,
    GammaSweepResult,
    PopulationPredictor,
    ReconstructionResult,
    convergence_study,
    infer_grid_step,
    prepare_pulse_state,
    reconstruct,
    sweep_gamma,
    truncate_record,
    weighted_error,
)
from .experiment import (
    ExperimentConfig,
    PreparationSchedule,
    PulseSegment,
    pi_half_duration,
    run_preparation,
    synthesize_record,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergencePoint",
    "DegenerateParams",
    "DensityMatrix",
    "DimensionMismatch",
    "EmptyWindow",
    "EvolutionModel",
    "ExperimentConfig",
    "FactorizationFailure",
    "GammaSweepResult",
    "GenericHamiltonian",
    "GridMismatch",
    "HamiltonianSpec",
    "InvalidState",
    "Ladder5",
    "MeasurementRecord",
    "NoConvergence",
    "NonFiniteObjective",
    "NonHermitianInput",
    "NumericalDrift",
    "NumericalError",
    "OptResult",
    "ParseError",
    "PoptomoError",
    "PopulationPredictor",
    "PreparationSchedule",
    "Propagator",
    "PulseSegment",
    "ReconstructionResult",
    "SchemaError",
    "SimplexConfig",
    "StateParams",
    "SubplexConfig",
    "ValidationError",
    "build_hamiltonian",
    "convergence_study",
    "evolve",
    "infer_grid_step",
    "lindblad_rhs",
    "liouvillian_matrix",
    "load_record",
    "make_propagator",
    "multi_start",
    "nelder_mead",
    "params_to_rho",
    "pi_half_duration",
    "populations",
    "prepare_pulse_state",
    "reconstruct",
    "rho_to_params",
    "run_preparation",
    "save_record",
    "shot_noise_floor",
    "subplex",
    "sweep_gamma",
    "synthesize_record",
    "truncate_record",
    "uhlmann_fidelity",
    "unvectorize",
    "vectorize",
    "weighted_error",
]
