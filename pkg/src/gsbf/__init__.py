"""Joint inference-task selection and downlink beamforming via group
sparse optimization: network model, conic subproblems, the three-stage
log-sum pipeline with baselines, convergence certificates, an exhaustive
small-instance oracle and a Monte Carlo experiment harness."""

from .netmodel import (
    BeamformingSolution,
    ChannelRealization,
    ConstraintReport,
    NetworkConfig,
    PowerBreakdown,
    TaskSelection,
    Topology,
    generate_channels,
    generate_topology,
    path_loss_db,
    power_breakdown,
    sinr_per_user,
    validate,
)
from .pipeline import (
    AlgorithmParams,
    ConvergenceTrace,
    InstanceInfeasible,
    PipelineResult,
    SolverFailure,
    prox_irw,
    run_cb,
    run_mixed_l12,
    run_three_stage,
)
from .oracle import OracleResult, oracle_min_power
from .harness import ExperimentConfig, TrialRecord, load_config, run_trials, summarize

__all__ = [
    "AlgorithmParams",
    "BeamformingSolution",
    "ChannelRealization",
    "ConstraintReport",
    "ConvergenceTrace",
    "ExperimentConfig",
    "InstanceInfeasible",
    "NetworkConfig",
    "OracleResult",
    "PipelineResult",
    "PowerBreakdown",
    "SolverFailure",
    "TaskSelection",
    "Topology",
    "TrialRecord",
    "generate_channels",
    "generate_topology",
    "load_config",
    "oracle_min_power",
    "path_loss_db",
    "power_breakdown",
    "prox_irw",
    "run_cb",
    "run_mixed_l12",
    "run_three_stage",
    "run_trials",
    "sinr_per_user",
    "summarize",
    "validate",
]
