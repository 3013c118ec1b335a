"""lingrowth package."""

from typing import Sequence

from .analysis import (
    DriftAudit,
    DriftBreakdown,
    audit_drift,
    drift_positivity_witness,
    exact_drift,
    f_bound_check,
    hausdorff_young_check,
    overlap_functional_S,
    v_term_constant,
)
from .config import RunConfig, load_numerics_policy, load_run_config, parse_config
from .engine import (
    ClockedSimulator,
    Configuration,
    Observables,
    TrajectoryRecord,
    apply_dual_step,
    init_config,
    observables,
    run,
    run_dual,
    step,
)
from .errors import (
    AssumptionError,
    ConditionNotSatisfiedError,
    ConfigError,
    DegenerateKernelError,
    DivergentGreenFunctionError,
    InvalidParameterError,
    InvalidStateError,
    LinGrowthError,
)
from .identities import IdentityReport, run_identities
from .kernel import (
    KernelAtom,
    KernelDistribution,
    beta_matrix,
    log_moment_margin,
    make_bcpp,
    make_custom,
    make_potlatch,
    mean_kernel,
    validate,
)
from .lattice import MassField, SparseField
from .seeds import derive_seed
from .theory import (
    PhaseReport,
    find_witness,
    g_n,
    green_function,
    harmonic_h,
    localization_statistic,
    phase_report,
    potlatch_threshold,
    q_matrix,
    srw_return_probability,
    transition_p,
)


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Run the command-line interface without importing ``rich`` at import time."""

    from .cli import main

    return main(argv)


__all__ = [
    "AssumptionError",
    "ClockedSimulator",
    "ConditionNotSatisfiedError",
    "ConfigError",
    "Configuration",
    "DegenerateKernelError",
    "DivergentGreenFunctionError",
    "DriftAudit",
    "DriftBreakdown",
    "IdentityReport",
    "InvalidParameterError",
    "InvalidStateError",
    "KernelAtom",
    "KernelDistribution",
    "LinGrowthError",
    "MassField",
    "Observables",
    "PhaseReport",
    "RunConfig",
    "SparseField",
    "TrajectoryRecord",
    "apply_dual_step",
    "audit_drift",
    "beta_matrix",
    "derive_seed",
    "drift_positivity_witness",
    "exact_drift",
    "f_bound_check",
    "find_witness",
    "g_n",
    "green_function",
    "harmonic_h",
    "hausdorff_young_check",
    "init_config",
    "load_numerics_policy",
    "load_run_config",
    "localization_statistic",
    "log_moment_margin",
    "make_bcpp",
    "make_custom",
    "make_potlatch",
    "mean_kernel",
    "observables",
    "overlap_functional_S",
    "parse_config",
    "phase_report",
    "potlatch_threshold",
    "q_matrix",
    "run",
    "run_cli",
    "run_dual",
    "run_identities",
    "srw_return_probability",
    "step",
    "transition_p",
    "v_term_constant",
    "validate",
]
