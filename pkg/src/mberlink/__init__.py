"""DS-CDMA link-level simulation and minimum-BER reduced-rank detection."""

from ._version import __version__
from .baselines import FullRankState, init_full_rank, lms_update, mber_full_rank_update
from .complexity import Algorithm, OpCountReport, complexity_sweep, op_count
from .detector_core import (
    DecisionStatistic,
    decision_statistic,
    error_probability,
    filter_and_decide,
    gradient_S,
    gradient_w,
    kernel_density,
    project,
    q_function,
)
from .errors import ConfigParseError, ConfigurationError
from .harness import (
    ExperimentConfig,
    ExperimentResult,
    SweepResult,
    emit_csv,
    parse_config,
    run_monte_carlo,
    run_trial,
    sweep,
)
from .jio_mber import (
    JioState,
    Mode,
    RankSelectionConfig,
    candidate_error,
    init_state,
    jio_step,
    scale_filter,
    select_rank,
    update_filter,
    update_projection,
)
from .signal_model import (
    JakesChannel,
    ReceivedSample,
    SpreadingCode,
    StaticChannel,
    UserConfig,
    build_convolution_matrix,
    generate_gold_family,
    synthesize_arrays,
    synthesize_stream,
)

__all__ = [
    "__version__",
    "Algorithm",
    "ConfigParseError",
    "ConfigurationError",
    "DecisionStatistic",
    "ExperimentConfig",
    "ExperimentResult",
    "FullRankState",
    "JakesChannel",
    "JioState",
    "Mode",
    "OpCountReport",
    "RankSelectionConfig",
    "ReceivedSample",
    "SpreadingCode",
    "StaticChannel",
    "SweepResult",
    "UserConfig",
    "build_convolution_matrix",
    "candidate_error",
    "complexity_sweep",
    "decision_statistic",
    "emit_csv",
    "error_probability",
    "filter_and_decide",
    "generate_gold_family",
    "gradient_S",
    "gradient_w",
    "init_full_rank",
    "init_state",
    "jio_step",
    "kernel_density",
    "lms_update",
    "mber_full_rank_update",
    "op_count",
    "parse_config",
    "project",
    "q_function",
    "run_monte_carlo",
    "run_trial",
    "scale_filter",
    "select_rank",
    "sweep",
    "synthesize_arrays",
    "synthesize_stream",
    "update_filter",
    "update_projection",
]
