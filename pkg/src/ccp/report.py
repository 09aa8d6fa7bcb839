"""Report serialization: JSON summary, plot-data CSVs, and rendered figures.

All output is byte-deterministic for a fixed run: keys are sorted,
floats use their shortest round-trip form, and figures are written
without timestamps.
"""

import csv
import json
import os
from dataclasses import asdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import InputError, InvariantError
from .evaluation import DELTA_GRID, error_cdf, record_ari, type1_rate

_PNG_META = {"Date": None}


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else repr(v) for v in row])


def report_dict(report):
    """JSON-ready summary of a DetectionReport."""
    hp = report.hyperparams
    return {
        "tau_hat": int(report.tau_hat),
        "k": float(report.k),
        "p": float(report.p),
        "block_length": int(report.block_length),
        "t_total": int(report.t_total),
        "dim": int(report.dim),
        "t0": int(hp.t_wash + hp.t_train),
        "fit_nrmse": float(report.fit_nrmse),
        "hyperparams": {
            "n": int(hp.n),
            "alpha": float(hp.alpha),
            "t_wash": int(hp.t_wash),
            "t_train": int(hp.t_train),
            "eps_train": float(hp.eps_train),
        },
        "scaling": {
            "c_input": float(report.scaling.c_input),
            "c_bias": float(report.scaling.c_bias),
            "rho": float(report.scaling.rho),
        },
        "config": {k: v for k, v in asdict(report.config).items()},
        "provenance": report.provenance,
    }


def write_report(report, out_dir):
    """Write report.json, the three plot-data CSVs, and the figure."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report_dict(report), fh, sort_keys=True, indent=2)
        fh.write("\n")

    sim = report.similarity
    _write_csv(
        os.path.join(out_dir, "similarity_series.csv"),
        ["t", "similarity"],
        [(int(sim.t0 + 1 + i), float(v)) for i, v in enumerate(sim.values)],
    )
    stat = report.statistic
    _write_csv(
        os.path.join(out_dir, "statistic_series.csv"),
        ["t", "statistic"],
        [(int(stat.t0 + 1 + i), float(v)) for i, v in enumerate(stat.values)],
    )
    _write_csv(
        os.path.join(out_dir, "null_sample.csv"),
        ["b", "k"],
        [(b, float(v)) for b, v in enumerate(report.null.k_values)],
    )
    render_detection_figure(report, os.path.join(out_dir, "detection.png"))


def render_detection_figure(report, path):
    """Three-panel view: statistic with its null, similarities, ECDF drift."""
    sim = report.similarity
    stat = report.statistic
    t_stat = np.arange(stat.t0 + 1, stat.t_end)
    t_sim = np.arange(sim.t0 + 1, sim.t_end + 1)

    fig = plt.figure(figsize=(9.0, 10.0))
    grid = fig.add_gridspec(3, 2, width_ratios=[4, 1], hspace=0.35, wspace=0.05)

    ax = fig.add_subplot(grid[0, 0])
    ax.plot(t_stat, stat.values, color="tab:blue", lw=1.0)
    ax.axvline(report.tau_hat, color="tab:red", ls="--", lw=1.0, label=f"estimate t={report.tau_hat}")
    ax.set_ylabel("split statistic")
    ax.set_xlabel("t")
    ax.legend(loc="upper left", fontsize=8)
    ax_null = fig.add_subplot(grid[0, 1], sharey=ax)
    ax_null.hist(
        report.null.k_values, bins=24, orientation="horizontal", color="0.7", edgecolor="0.4"
    )
    for level in (0.90, 0.95, 0.99):
        ax_null.axhline(np.quantile(report.null.k_values, level), color="tab:red", lw=0.8, ls=":")
    ax_null.tick_params(labelleft=False)
    ax_null.set_xlabel("null count")
    ax_null.set_title(f"p = {report.p:.3f}", fontsize=9)

    ax2 = fig.add_subplot(grid[1, :])
    ax2.plot(t_sim, sim.values, color="tab:green", lw=0.8)
    for lo, hi in ((5, 95), (25, 75)):
        ax2.axhspan(
            np.percentile(sim.values, lo), np.percentile(sim.values, hi), color="tab:green", alpha=0.10
        )
    ax2.axvline(report.tau_hat, color="tab:red", ls="--", lw=1.0)
    ax2.set_ylabel("mean similarity")
    ax2.set_xlabel("t")

    ax3 = fig.add_subplot(grid[2, :])
    n_windows = min(10, sim.values.size)
    edges = np.linspace(0, sim.values.size, n_windows + 1).astype(int)
    s_grid = np.linspace(sim.values.min(), sim.values.max(), 60)
    overall = np.searchsorted(np.sort(sim.values), s_grid, side="right") / sim.values.size
    diffs = np.empty((s_grid.size, n_windows))
    for w in range(n_windows):
        seg = np.sort(sim.values[edges[w] : edges[w + 1]])
        seg_cdf = np.searchsorted(seg, s_grid, side="right") / max(seg.size, 1)
        diffs[:, w] = seg_cdf - overall
    centers = sim.t0 + 1 + (edges[:-1] + edges[1:]) / 2.0
    mesh = ax3.pcolormesh(centers, s_grid, diffs, cmap="RdBu_r", shading="nearest")
    fig.colorbar(mesh, ax=ax3, label="window ECDF - overall ECDF")
    ax3.axvline(report.tau_hat, color="k", ls="--", lw=1.0)
    ax3.set_xlabel("t (window centers)")
    ax3.set_ylabel("similarity level")

    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def _grouped(records):
    groups = {}
    for rec in records:
        groups.setdefault((rec.scenario_id, rec.eps_train), []).append(rec)
    return dict(sorted(groups.items()))


def write_evaluation(records, q, out_dir, deltas=None):
    """ARI table, type-1 table, error CDF curves, and the curve figure."""
    if not records:
        raise InputError("no records to evaluate")
    os.makedirs(out_dir, exist_ok=True)
    if deltas is None:
        deltas = DELTA_GRID
    groups = _grouped(records)

    ari_rows = []
    type1_rows = []
    cdf_rows = []
    curves = {}
    for (sid, eps), recs in groups.items():
        changing = [r for r in recs if r.truth is not None]
        nulls = [r for r in recs if r.truth is None]
        if changing:
            mean_ari = float(np.mean([record_ari(r, q) for r in changing]))
            ari_rows.append((sid, float(eps), len(changing), mean_ari))
            dts, fractions = error_cdf(changing, deltas, q)
            curves[(sid, eps)] = (dts, fractions)
            cdf_rows.extend(
                (sid, float(eps), float(d), float(h)) for d, h in zip(dts, fractions)
            )
        if nulls:
            type1_rows.append((sid, float(eps), len(nulls), type1_rate(nulls, q)))

    _write_csv(
        os.path.join(out_dir, "ari_table.csv"),
        ["scenario", "eps_train", "n", "mean_ari"],
        ari_rows,
    )
    _write_csv(
        os.path.join(out_dir, "type1_table.csv"),
        ["scenario", "eps_train", "n", "type1_rate"],
        type1_rows,
    )
    _write_csv(
        os.path.join(out_dir, "error_cdf.csv"),
        ["scenario", "eps_train", "delta", "fraction"],
        cdf_rows,
    )
    _check_monotone(os.path.join(out_dir, "error_cdf.csv"))
    if curves:
        render_error_cdf_figure(curves, os.path.join(out_dir, "error_cdf.png"))


def _check_monotone(path):
    """Re-read the written curves and verify each is nondecreasing."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    by_group = {}
    for row in rows:
        by_group.setdefault((row["scenario"], row["eps_train"]), []).append(
            (float(row["delta"]), float(row["fraction"]))
        )
    for key, pts in by_group.items():
        fractions = [h for _, h in sorted(pts)]
        if any(b < a for a, b in zip(fractions, fractions[1:])):
            raise InvariantError(f"error CDF for {key} is not monotone")


def render_error_cdf_figure(curves, path):
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for (sid, eps), (dts, fractions) in sorted(curves.items()):
        ax.plot(dts, fractions, lw=1.2, label=f"{sid} @ eps={eps:g}")
    ax.set_xlabel("relative error delta")
    ax.set_ylabel("fraction within delta")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
