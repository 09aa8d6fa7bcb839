"""Moving block bootstrap null for the split statistic.

Resamples keep the training prefix [1, t0] verbatim and rebuild the tail
from blocks whose start is uniform over {t0+1, ..., T}; block indices
running past T wrap back to t0+1.  The block length comes from a
Hall-style selection: candidate lengths are scored against a pilot MBB
estimate of the variance of the series' sample mean.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .detector import KAPPA, NU, STATISTIC_EXPONENT, aggregate, featurize_similarities, propose
from .errors import InputError
from .rand import substream
from .series import MultiSeries, as_values

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockPlan:
    """Block length, blocks per resample, and resample count."""

    block_length: int
    n_blocks: int
    b_count: int


@dataclass(frozen=True)
class NullDistribution:
    """Bootstrap sample {K_b} and the block length it was drawn with."""

    k_values: np.ndarray = field(repr=False)
    block_length: int
    p: float | None = None

    def __post_init__(self):
        arr = np.ascontiguousarray(self.k_values, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "k_values", arr)
        if arr.ndim != 1 or arr.size < 1:
            raise InputError("k_values must be a nonempty vector")


@dataclass(frozen=True)
class HallSelection:
    """Chosen block length plus the candidate grid and scores behind it."""

    block_length: int
    candidates: tuple
    pilot_variance: float
    scores: tuple


def block_plan(t_total, t0, block_length, b_count):
    n_tail = t_total - t0
    if not (0 <= t0 < t_total and 1 <= block_length <= n_tail):
        raise InputError(f"bad block plan: t0={t0}, T={t_total}, l={block_length}")
    return BlockPlan(block_length, math.ceil(n_tail / block_length), b_count)


def mbb_series(x, block_length, rng):
    """Plain moving block bootstrap of a 1-d array (no wrap, no prefix)."""
    arr = np.asarray(x, dtype=np.float64).ravel()
    n = arr.size
    if not 1 <= block_length <= n:
        raise InputError(f"block length {block_length} outside [1, {n}]")
    n_blocks = math.ceil(n / block_length)
    starts = rng.integers(0, n - block_length + 1, size=n_blocks)
    idx = (starts[:, None] + np.arange(block_length)[None, :]).ravel()[:n]
    return arr[idx]


def mbb_tail_indices(t_total, t0, block_length, rng):
    """1-based source indices for one resampled tail (t0, T].

    Block starts are uniform over {t0+1, ..., T}; positions past T wrap
    to t0+1.  The result has length T - t0.
    """
    n_tail = t_total - t0
    if not (0 <= t0 < t_total and 1 <= block_length <= n_tail):
        raise InputError(f"bad resample window: t0={t0}, T={t_total}, l={block_length}")
    n_blocks = math.ceil(n_tail / block_length)
    starts = rng.integers(t0 + 1, t_total + 1, size=n_blocks)
    offsets = (starts[:, None] - (t0 + 1) + np.arange(block_length)[None, :]) % n_tail
    return (t0 + 1 + offsets).ravel()[:n_tail]


def mbb_resample(y, t0, block_length, seed):
    """Resample y keeping [1, t0] verbatim and bootstrapping the tail.

    ``seed`` may be an integer or a Generator.
    """
    vals = as_values(y)
    rng = seed if isinstance(seed, np.random.Generator) else substream(seed)
    idx = mbb_tail_indices(vals.shape[0], t0, block_length, rng)
    return MultiSeries(np.concatenate([vals[:t0], vals[idx - 1]], axis=0))


def hall_selection(series, pilot, t_total, seed=0, n_candidates=5, n_resamples=40):
    """Score candidate block lengths against a pilot MBB variance estimate.

    Candidates are n_candidates reals equally spaced on
    [ceil(t_total^(1/5)), ceil(t_total^(1/2))], rounded to the nearest
    integer and deduplicated preserving order.  The target functional is
    the variance of the sample mean of ``series``; the pilot estimate at
    block length ``pilot`` is treated as the ground-truth proxy and each
    candidate's squared deviation from it is its score (ties: the
    shortest).  Pilot resamples use streams substream(seed, 0, j),
    candidate i uses substream(seed, 1 + i, j).
    """
    arr = np.asarray(series, dtype=np.float64).ravel()
    n = arr.size
    if not 2 <= pilot <= n:
        raise InputError(f"pilot block length {pilot} outside [2, {n}]")
    lo = math.ceil(t_total ** (1.0 / 5.0))
    hi = math.ceil(t_total ** 0.5)
    grid = np.linspace(lo, hi, n_candidates)
    candidates = []
    for g in np.rint(grid).astype(int):
        length = int(g)
        if length > n:
            logger.warning("candidate block length %d exceeds series length %d; clamping", length, n)
            length = n
        if length not in candidates:
            candidates.append(length)

    def mean_variance(block_length, stream_tag):
        means = [
            mbb_series(arr, block_length, substream(seed, stream_tag, j)).mean()
            for j in range(n_resamples)
        ]
        return float(np.var(means))

    pilot_var = mean_variance(pilot, 0)
    scores = [
        (mean_variance(length, 1 + i) - pilot_var) ** 2
        for i, length in enumerate(candidates)
    ]
    best = int(np.argmin(scores))
    return HallSelection(candidates[best], tuple(candidates), pilot_var, tuple(scores))


def hall_block_length(series, pilot, t_total, seed=0, n_candidates=5, n_resamples=40):
    """Block length chosen by hall_selection."""
    return hall_selection(series, pilot, t_total, seed, n_candidates, n_resamples).block_length


def null_distribution(
    y,
    ensemble,
    t_wash,
    t_train,
    block_length,
    b_count,
    seed=0,
    nu=NU,
    kappa=KAPPA,
    exponent=STATISTIC_EXPONENT,
    threads=1,
):
    """Bootstrap sample of the maximum statistic under the frozen ensemble.

    Replicate b resamples y with stream substream(seed, b), re-featurizes
    with the same ensemble (no refit), and records the maximum split
    statistic.  The thread cap only parallelizes replicates; results are
    independent of it.
    """
    if b_count < 1:
        raise InputError("b_count must be positive")
    t0 = t_wash + t_train

    def one(b):
        yb = mbb_resample(y, t0, block_length, substream(seed, b))
        sims = featurize_similarities(yb, ensemble, t_wash, t_train)
        return propose(aggregate(sims, t0), nu, kappa, exponent).k

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            k_values = list(pool.map(one, range(b_count)))
    else:
        k_values = [one(b) for b in range(b_count)]
    return NullDistribution(np.asarray(k_values), block_length)


def quantile_estimate(k_observed, k_values):
    """Fraction of the null sample strictly exceeding the observed maximum."""
    arr = np.asarray(getattr(k_values, "k_values", k_values), dtype=np.float64)
    if arr.size < 1:
        raise InputError("null sample is empty")
    return float(np.mean(arr > k_observed))


def with_quantile(null, k_observed):
    """Return a copy of ``null`` with its p field filled in."""
    return replace(null, p=quantile_estimate(k_observed, null.k_values))
