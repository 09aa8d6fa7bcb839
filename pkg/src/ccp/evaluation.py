"""Scoring of detection runs against ground truth.

A run is scored on the post-training window (t0, T]: the true and the
estimated change point each induce a two-segment labeling of that
window, compared via the adjusted Rand index.  Runs whose bootstrap
quantile exceeds the detection level q count as non-detections and are
scored as if the change point were at T (single-segment labeling); the
same convention feeds the error CDF.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InputError

DELTA_GRID = np.linspace(0.0, 0.5, 101)


@dataclass(frozen=True)
class RunRecord:
    """One detection run on one generated series, plus its settings."""

    scenario_id: str
    rep: int
    truth: int | None
    tau_hat: int
    k: float
    p: float
    block_length: int
    eps_train: float
    t_wash: int
    t_train: int
    t_total: int
    r_ensemble: int
    b_count: int
    seed: int
    n: int
    alpha: float
    nu: float = 0.5
    kappa: float = 0.01
    statistic_exponent: float = 2.0

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def segment_labels(tau, t0, t_end):
    """0/1 labels over t = t0+1..t_end: 1 after tau.

    tau = t_end yields the single-segment (all zeros) labeling.
    """
    if not (t0 < tau <= t_end):
        raise InputError(f"tau must lie in ({t0}, {t_end}], got {tau}")
    t = np.arange(t0 + 1, t_end + 1)
    return (t > tau).astype(np.int64)


def adjusted_rand_index(labels_a, labels_b):
    """Hubert-Arabie adjusted Rand index of two labelings.

    Computed from the contingency table in exact integer arithmetic with
    a single final division.  Degenerate pairs whose chance-adjusted
    denominator is zero (e.g. both single-cluster) score 1.
    """
    a = np.asarray(labels_a).ravel()
    b = np.asarray(labels_b).ravel()
    if a.size != b.size:
        raise InputError("labelings have different lengths")
    if a.size < 2:
        raise InputError("need at least 2 points")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    n_a = int(ai.max()) + 1
    n_b = int(bi.max()) + 1
    table = np.bincount(ai * n_b + bi, minlength=n_a * n_b).reshape(n_a, n_b)

    def pairs(counts):
        return sum(int(c) * (int(c) - 1) // 2 for c in counts)

    sum_cells = pairs(table.ravel())
    sum_rows = pairs(table.sum(axis=1))
    sum_cols = pairs(table.sum(axis=0))
    n = int(a.size)
    total = n * (n - 1) // 2
    numerator = 2 * (total * sum_cells - sum_rows * sum_cols)
    denominator = total * (sum_rows + sum_cols) - 2 * sum_rows * sum_cols
    if denominator == 0:
        return 1.0
    return numerator / denominator


def effective_tau(record, q):
    """tau_hat if the run detected at level q, else t_total (no detection)."""
    return record.tau_hat if record.p <= q else record.t_total


def record_ari(record, q):
    """ARI of the truth vs estimate segmentations of one changing run."""
    if record.truth is None:
        raise InputError("record has no true change point")
    t0 = record.t_wash + record.t_train
    return adjusted_rand_index(
        segment_labels(record.truth, t0, record.t_total),
        segment_labels(effective_tau(record, q), t0, record.t_total),
    )


def error_cdf(records, deltas=None, q=0.05):
    """Fraction of runs with relative localization error <= delta.

    Errors are |tau_eff - tau| / (T - t_wash - t_train) with the
    non-detection convention tau_eff = T.  Returns (deltas, fractions).
    """
    recs = [r for r in records if r.truth is not None]
    if not recs:
        raise InputError("no records with a true change point")
    if deltas is None:
        deltas = DELTA_GRID
    deltas = np.asarray(deltas, dtype=np.float64)
    errors = np.array(
        [abs(effective_tau(r, q) - r.truth) / (r.t_total - r.t_wash - r.t_train) for r in recs]
    )
    fractions = np.array([(errors <= d).mean() for d in deltas])
    return deltas, fractions


def type1_rate(records, q):
    """Fraction of no-change runs rejected at level q."""
    recs = [r for r in records if r.truth is None]
    if not recs:
        raise InputError("no records without a change point")
    return float(np.mean([r.p <= q for r in recs]))
