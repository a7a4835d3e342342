"""Precoder design for multi-user MISO FDD downlinks with incomplete CSI.

Closed-form AWAMSE alternating minimization, an accelerated stochastic
IWMMSE, naive IWMMSE and MMSE-precoder baselines, LMMSE channel estimation,
and a seeded Monte-Carlo harness tying them together.
"""

from .awamse import (
    AwamseOptions,
    AwamseReport,
    beta_scale,
    delta_opt,
    solve_awamse,
    update_precoder_unconstrained,
    update_receive_filters,
    update_weights,
)
from .baselines import mmse_precoder
from .channel import (
    Scenario,
    build_covariances,
    build_pilot_matrix,
    observe_downlink,
    sample_channel,
)
from .config import CovarianceModel, SystemConfig
from .estimation import EstimationResult, error_covariance, lmmse_estimate
from .harness import (
    ALGORITHMS,
    BeforeAfterReport,
    ConfigError,
    ExperimentSpec,
    SweepRecord,
    before_after_report,
    emit_plot_data,
    high_snr_slope,
    parse_config,
    power_allocation_report,
    read_results,
    run_sweep,
    runtime_benchmark,
    write_results,
)
from .metrics import (
    RateReport,
    SolverState,
    average_mse,
    awamse_objective,
    effective_sinr,
    instantaneous_rates,
    mmse_receive_filter,
    sum_rate_lower_bound,
)
from .siwmmse import (
    SampleStats,
    SiwmmseOptions,
    bisection_precoder_oracle,
    draw_error_samples,
    per_sample_statistics,
    solve_iwmmse_naive,
    solve_siwmmse,
    update_precoder_siwmmse,
)

__version__ = "0.1.0"
