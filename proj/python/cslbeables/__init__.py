"""Beable trajectories for a lattice collapse model.

The compiled core exposes grid and wavefunction constructors, jump-rate
helpers, scenario configs, the experiment runner, and the acceptance battery.
Note the collapse-rate config attribute is ``lambda_`` (``lambda`` in JSON).
"""

from ._core import (
    CriterionResult,
    EnsembleStats,
    ExperimentConfig,
    FitResult,
    GeneratorMatrix,
    Grid,
    JumpParams,
    TransitionMatrix,
    WaveFunction,
    build_hamiltonian,
    column_drift_velocity,
    default_config,
    format_criterion_line,
    gaussian_packet,
    load_config,
    make_grid,
    make_jump_params,
    parse_config,
    plane_wave,
    probability_vector,
    run_experiment,
    run_verification,
    scenario_names,
    schema_version,
    transition_at,
    two_packet_superposition,
    write_verification_report,
)

__all__ = [
    "CriterionResult",
    "EnsembleStats",
    "ExperimentConfig",
    "FitResult",
    "GeneratorMatrix",
    "Grid",
    "JumpParams",
    "TransitionMatrix",
    "WaveFunction",
    "build_hamiltonian",
    "column_drift_velocity",
    "default_config",
    "format_criterion_line",
    "gaussian_packet",
    "load_config",
    "make_grid",
    "make_jump_params",
    "parse_config",
    "plane_wave",
    "probability_vector",
    "run_experiment",
    "run_verification",
    "scenario_names",
    "schema_version",
    "transition_at",
    "two_packet_superposition",
    "write_verification_report",
]

__version__ = "0.1.0"
