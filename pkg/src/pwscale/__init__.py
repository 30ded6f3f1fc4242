"""Thurstone Case V scaling of pairwise comparison data in JOD units."""

__version__ = "0.1.0"

from .ingest import (  # noqa: E402
    ConditionSet,
    FormatError,
    Selection,
    Trial,
    TrialTable,
    build_observer_matrices,
    parse_trials,
    pool_matrices,
    read_trials,
)
from .outliers import OutlierReport, observer_loo_loglik, observer_preference_profile, outlier_scores  # noqa: E402
from .scaling import (  # noqa: E402
    DisconnectedGraphError,
    ScaleOptions,
    ScaleResult,
    ScalingError,
    distance_matrix,
    empirical_probabilities,
    prob_to_jod,
    scale_least_squares,
    scale_mle,
)
from .simulate import Design, SimConfig, SimMetrics, TieModel, run_monte_carlo, simulate_experiment  # noqa: E402
from .stats import (  # noqa: E402
    BootstrapResult,
    SignificanceReport,
    bootstrap_scale,
    confidence_intervals,
    difference_variance,
    pairwise_significance,
)
