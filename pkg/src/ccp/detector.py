"""Similarity featurization and the offline change point statistic.

Each network r in a frozen ensemble yields a similarity sequence

    s_{r,t} = (h_t' C_r h_t) / (||C_r h_t|| ||h_t||),   t = T0+1..T,

with T0 = t_wash + t_train.  The ensemble average S_t is scanned with a
weighted two-sample ECDF statistic: for every candidate split t the sup
distance between the ECDFs of S over (T0, t] and (t, T] is scaled by

    (t - T0)(T - t) / (q(t) (T - T0)^exponent),

where q(t) = max((u(1-u))^nu, kappa) for u = (t - T0)/(T - T0).  The
proposed change point is the argmax of that statistic.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .esn import _input_drive, _stack_weights, _step
from .series import as_values

logger = logging.getLogger(__name__)

NU = 0.5
KAPPA = 0.01
STATISTIC_EXPONENT = 2.0


@dataclass(frozen=True)
class SimilaritySeries:
    """Aggregated similarities S_t for t = t0+1..t_end (values[i] is t0+1+i)."""

    values: np.ndarray = field(repr=False)
    t0: int
    t_end: int

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1 or arr.size != self.t_end - self.t0:
            raise InputError("similarity length does not match the time window")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise InputError("similarities must lie in [0, 1]")


@dataclass(frozen=True)
class StatisticSeries:
    """K_t for the interior splits t = t0+1..t_end-1."""

    values: np.ndarray = field(repr=False)
    t0: int
    t_end: int
    nu: float
    kappa: float
    exponent: float = STATISTIC_EXPONENT

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1 or arr.size != self.t_end - self.t0 - 1:
            raise InputError("statistic length does not match the time window")


@dataclass(frozen=True)
class ChangePointProposal:
    """Maximum statistic k attained at time tau_hat."""

    k: float
    tau_hat: int
    statistic: StatisticSeries


def cosine_similarity(c, h):
    """Cosine of the angle between C h and h, in [0, 1] for a conceptor C.

    A degenerate state (C h = 0 or h = 0) is logged and scored as 0.
    """
    c_arr = np.asarray(getattr(c, "c", c), dtype=np.float64)
    h_arr = np.asarray(h, dtype=np.float64)
    ch = c_arr @ h_arr
    den = float(np.linalg.norm(ch) * np.linalg.norm(h_arr))
    if den == 0.0:
        logger.warning("degenerate state in cosine similarity; scoring 0")
        return 0.0
    return float(np.clip(float(ch @ h_arr) / den, 0.0, 1.0))


def featurize_similarities(y, ensemble, t_wash, t_train):
    """Similarity matrix of shape (R, T - T0) for a frozen ensemble.

    ``ensemble`` is a sequence of (EsnWeights, Conceptor) pairs.  Each
    network runs identity-filtered up to t_wash, then with its conceptor
    in place from t_wash + 1 on (filtered states feed back); similarities
    are recorded for t > T0 = t_wash + t_train.
    """
    vals = as_values(y)
    t_total = vals.shape[0]
    t0 = t_wash + t_train
    if not ensemble:
        raise InputError("ensemble is empty")
    if t_wash < 0 or t_train < 1 or t0 >= t_total:
        raise InputError(f"bad windows: t_wash={t_wash}, t_train={t_train}, T={t_total}")
    w_h, w_i, b = _stack_weights([w for w, _ in ensemble])
    c = np.stack([co.c for _, co in ensemble])
    n_nets, n = b.shape
    drive = _input_drive(w_i, b, vals, 1, t_total)
    h = np.zeros((n_nets, n))
    for i in range(t_wash):
        h = np.tanh(_step(w_h, h) + drive[:, i])
    feedback = h  # raw state at t_wash seeds the conceptor run
    sims = np.empty((n_nets, t_total - t0))
    degenerate = 0
    for i in range(t_wash, t_total):
        h = np.tanh(_step(w_h, feedback) + drive[:, i])
        feedback = _step(c, h)
        if i + 1 > t0:
            num = np.einsum("rn,rn->r", feedback, h)
            den = np.linalg.norm(feedback, axis=1) * np.linalg.norm(h, axis=1)
            ok = den > 0.0
            degenerate += int(np.count_nonzero(~ok))
            s = np.where(ok, num / np.where(ok, den, 1.0), 0.0)
            sims[:, i - t0] = np.clip(s, 0.0, 1.0)
    if degenerate:
        logger.warning("%d degenerate states scored as similarity 0", degenerate)
    return sims


def aggregate(similarities, t0):
    """Average the (R, M) similarity matrix over networks."""
    sims = np.asarray(similarities, dtype=np.float64)
    if sims.ndim != 2 or sims.shape[0] < 1:
        raise InputError("similarities must be a (R, M) matrix")
    t_end = t0 + sims.shape[1]
    return SimilaritySeries(sims.mean(axis=0), t0, t_end)


def ks_distance(left, right):
    """Sup distance between two sample ECDFs, evaluated at pooled points.

    ECDFs are right-continuous: F(s) counts values <= s.
    """
    ls = np.sort(np.asarray(left, dtype=np.float64).ravel())
    rs = np.sort(np.asarray(right, dtype=np.float64).ravel())
    if ls.size == 0 or rs.size == 0:
        raise InputError("both samples must be nonempty")
    grid = np.concatenate([ls, rs])
    fl = np.searchsorted(ls, grid, side="right") / ls.size
    fr = np.searchsorted(rs, grid, side="right") / rs.size
    return float(np.max(np.abs(fl - fr)))


def q_weight(t, t0, t_end, nu=NU, kappa=KAPPA):
    """Floor-protected weight q(t) = max((u(1-u))^nu, kappa)."""
    if not (t0 < t < t_end):
        raise InputError(f"t must lie strictly inside ({t0}, {t_end})")
    if not (nu > 0 and kappa > 0):
        raise InputError("nu and kappa must be positive")
    u = (t - t0) / (t_end - t0)
    return float(max((u * (1.0 - u)) ** nu, kappa))


def _all_split_distances(values):
    """Sup ECDF distance for every prefix/suffix split of ``values``.

    Equivalent to calling ks_distance on each split; computed jointly via
    cumulative counts over the pooled value grid, in column chunks to
    bound memory.  Counts are exact integers, so the result matches the
    per-split computation bit for bit.
    """
    m = values.size
    _, inv = np.unique(values, return_inverse=True)
    n_unique = int(inv.max()) + 1
    left_sizes = np.arange(1, m, dtype=np.float64)
    right_sizes = m - left_sizes
    best = np.zeros(m - 1)
    chunk = max(1, int(8_000_000 // max(m, 1)))
    for k0 in range(0, n_unique, chunk):
        cols = np.arange(k0, min(n_unique, k0 + chunk))
        leq = inv[:, None] <= cols[None, :]
        cum = np.cumsum(leq, axis=0, dtype=np.float64)
        total = cum[-1]
        fl = cum[:-1] / left_sizes[:, None]
        fr = (total[None, :] - cum[:-1]) / right_sizes[:, None]
        np.maximum(best, np.abs(fl - fr).max(axis=1), out=best)
    return best


def statistic_series(similarity, nu=NU, kappa=KAPPA, exponent=STATISTIC_EXPONENT):
    """Weighted split statistic K_t over all interior splits.

    With the default exponent 2 every K_t is bounded by 1 / (4 kappa).
    """
    values = similarity.values
    m = values.size
    if m < 2:
        raise InputError("need at least 2 post-training points to form a split")
    if not (nu > 0 and kappa > 0):
        raise InputError("nu and kappa must be positive")
    dist = _all_split_distances(values)
    i = np.arange(1, m, dtype=np.float64)
    u = i / m
    q = np.maximum((u * (1.0 - u)) ** nu, kappa)
    coeff = i * (m - i) / (q * float(m) ** exponent)
    return StatisticSeries(coeff * dist, similarity.t0, similarity.t_end, nu, kappa, exponent)


def propose(similarity, nu=NU, kappa=KAPPA, exponent=STATISTIC_EXPONENT):
    """Argmax of the split statistic (earliest index on ties)."""
    stat = statistic_series(similarity, nu, kappa, exponent)
    idx = int(np.argmax(stat.values))
    return ChangePointProposal(float(stat.values[idx]), stat.t0 + 1 + idx, stat)
