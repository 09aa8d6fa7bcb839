"""Conceptor-based offline change point detection for multivariate series."""

from .bootstrap import (
    BlockPlan,
    HallSelection,
    NullDistribution,
    hall_block_length,
    hall_selection,
    mbb_resample,
    null_distribution,
    quantile_estimate,
)
from .detector import (
    ChangePointProposal,
    SimilaritySeries,
    StatisticSeries,
    aggregate,
    cosine_similarity,
    featurize_similarities,
    ks_distance,
    propose,
    q_weight,
    statistic_series,
)
from .errors import FitError, InputError, InvariantError
from .esn import (
    Conceptor,
    EsnHyperparams,
    EsnWeights,
    FitResult,
    ScalingConfig,
    StateSequence,
    compute_conceptor,
    fit_hyperparams,
    init_weights,
    nrmse,
    propagate,
    ridge_readout,
    select_scaling,
    washout_length,
)
from .evaluation import (
    RunRecord,
    adjusted_rand_index,
    error_cdf,
    segment_labels,
    type1_rate,
)
from .pipeline import DetectConfig, DetectionReport, build_ensemble, detect, run_simulation
from .series import MultiSeries, load_csv, save_csv
from .simgen import (
    LabeledSeries,
    Scenario,
    gen_ou,
    gen_periodic,
    gen_var,
    gen_white_noise,
    random_var_coefficients,
    scenario,
    scenario_ids,
)

__version__ = "0.1.0"
