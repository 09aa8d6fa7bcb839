"""End-to-end detection pipeline and the simulation protocol driver.

A detection run chains: scaling grid search -> (n, alpha) escalation ->
frozen ensemble of R networks with per-network conceptors -> aggregated
similarity series -> split-statistic maximum -> Hall block length (per
input dimension, largest wins) -> moving block bootstrap null of the
same frozen ensemble -> quantile of the observed maximum.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import bootstrap, detector, esn, simgen
from .errors import InputError
from .evaluation import RunRecord
from .rand import derived_seed
from .series import as_values

logger = logging.getLogger(__name__)

# Substream tags for the pipeline stages.
_SCALING, _FIT, _ENSEMBLE, _HALL, _BOOT = 1, 2, 3, 4, 5

# Fixed windows of the simulation protocol.
SIM_T_WASH = 60
SIM_T_TRAIN = 120


@dataclass(frozen=True)
class DetectConfig:
    """Settings of one detection run.

    t_wash = None lets the washout length be measured from the data.
    """

    t_train: int
    t_wash: int | None = None
    eps_train: float = 0.04
    r_ensemble: int = 100
    b_count: int = 240
    nu: float = detector.NU
    kappa: float = detector.KAPPA
    q: float = 0.05
    seed: int = 0
    statistic_exponent: float = detector.STATISTIC_EXPONENT

    def __post_init__(self):
        if self.t_train < 2:
            raise InputError("t_train must be at least 2")
        if self.t_wash is not None and self.t_wash < 0:
            raise InputError("t_wash must be nonnegative")
        if not 0 < self.eps_train < 1:
            raise InputError("eps_train must lie in (0, 1)")
        if self.r_ensemble < 1 or self.b_count < 1:
            raise InputError("r_ensemble and b_count must be positive")
        if not (self.nu > 0 and self.kappa > 0 and 0 < self.q < 1):
            raise InputError("nu, kappa must be positive and q in (0, 1)")


@dataclass(frozen=True)
class DetectionReport:
    """Everything a detection run produced, plus the settings behind it."""

    config: DetectConfig
    scaling: esn.ScalingConfig
    hyperparams: esn.EsnHyperparams
    fit_nrmse: float
    similarity: detector.SimilaritySeries
    statistic: detector.StatisticSeries
    tau_hat: int
    k: float
    block_length: int
    null: bootstrap.NullDistribution
    p: float
    t_total: int
    dim: int
    provenance: dict = field(default_factory=dict)


def build_ensemble(y, scaling, hyperparams, r_ensemble, seed=0, density=None):
    """R frozen (weights, conceptor) pairs fitted on the training window.

    Network r draws from derived_seed(seed, r), runs identity-filtered
    over [1, t0], and takes its conceptor from the states on
    [t_wash + 1, t0] at the fitted aperture.
    """
    vals = as_values(y)
    d = vals.shape[1]
    t_wash, t_train = hyperparams.t_wash, hyperparams.t_train
    weights = [
        esn.init_weights(derived_seed(seed, r), hyperparams.n, d, scaling, density)
        for r in range(r_ensemble)
    ]
    w_h, w_i, b = esn._stack_weights(weights)
    drive = esn._input_drive(w_i, b, vals, 1, t_wash + t_train)
    _, train_states = esn._raw_states(w_h, drive, collect_from=t_wash)
    conceptors = [
        esn.compute_conceptor(train_states[r], hyperparams.alpha) for r in range(r_ensemble)
    ]
    return list(zip(weights, conceptors))


def detect(y, config, threads=1):
    """Run the full pipeline on a series and return a DetectionReport."""
    vals = as_values(y)
    t_total, d = vals.shape
    if config.t_wash is not None and config.t_wash + config.t_train + 2 > t_total:
        raise InputError(
            f"need t_wash + t_train + 2 <= T, got {config.t_wash} + {config.t_train} + 2 > {t_total}"
        )

    scaling = esn.select_scaling(y, config.t_train, seed=derived_seed(config.seed, _SCALING))
    fit = esn.fit_hyperparams(
        y,
        config.t_train,
        scaling,
        eps_train=config.eps_train,
        t_wash_override=config.t_wash,
        seed=derived_seed(config.seed, _FIT),
    )
    hp = fit.hyperparams
    t0 = hp.t_wash + hp.t_train
    if t0 + 2 > t_total:
        raise InputError(f"measured washout {hp.t_wash} leaves no detection window")

    ensemble = build_ensemble(
        y, scaling, hp, config.r_ensemble, seed=derived_seed(config.seed, _ENSEMBLE)
    )
    sims = detector.featurize_similarities(y, ensemble, hp.t_wash, hp.t_train)
    similarity = detector.aggregate(sims, t0)
    proposal = detector.propose(similarity, config.nu, config.kappa, config.statistic_exponent)

    pilot = max(2, hp.t_wash)
    selections = [
        bootstrap.hall_selection(
            vals[t0:, j], pilot, t_total, seed=derived_seed(config.seed, _HALL, j)
        )
        for j in range(d)
    ]
    block_length = max(sel.block_length for sel in selections)

    null = bootstrap.null_distribution(
        y,
        ensemble,
        hp.t_wash,
        hp.t_train,
        block_length,
        config.b_count,
        seed=derived_seed(config.seed, _BOOT),
        nu=config.nu,
        kappa=config.kappa,
        exponent=config.statistic_exponent,
        threads=threads,
    )
    p = bootstrap.quantile_estimate(proposal.k, null.k_values)

    plan = bootstrap.block_plan(t_total, t0, block_length, config.b_count)
    provenance = {
        "scaling": {"c_input": scaling.c_input, "c_bias": scaling.c_bias, "rho": scaling.rho},
        "fit_history": [[n, alpha, err] for n, alpha, err in fit.history],
        "hall": {
            "pilot": pilot,
            "per_dim": [
                {"block_length": sel.block_length, "candidates": list(sel.candidates)}
                for sel in selections
            ],
        },
        "block_plan": {"n_blocks": plan.n_blocks, "b_count": plan.b_count},
        "threads": threads,
    }
    return DetectionReport(
        config=config,
        scaling=scaling,
        hyperparams=hp,
        fit_nrmse=fit.nrmse,
        similarity=similarity,
        statistic=proposal.statistic,
        tau_hat=proposal.tau_hat,
        k=proposal.k,
        block_length=block_length,
        null=bootstrap.with_quantile(null, proposal.k),
        p=p,
        t_total=t_total,
        dim=d,
        provenance=provenance,
    )


def run_simulation(
    scenario_id,
    rep,
    eps_train,
    seed,
    r_ensemble=100,
    b_count=240,
    t_wash=SIM_T_WASH,
    t_train=SIM_T_TRAIN,
    t_total=simgen.T_TOTAL,
    threads=1,
):
    """Generate one scenario draw and run detection on it.

    The rep's data comes from derived_seed(seed, rep); each eps_train
    setting detects on that same series with its own derived seed, so
    settings are comparable rep by rep.
    """
    data = simgen.scenario(scenario_id, seed=derived_seed(seed, rep), t_total=t_total)
    config = DetectConfig(
        t_train=t_train,
        t_wash=t_wash,
        eps_train=eps_train,
        r_ensemble=r_ensemble,
        b_count=b_count,
        seed=derived_seed(seed, rep, int(round(eps_train * 10_000))),
    )
    report = detect(data.series, config, threads=threads)
    return RunRecord(
        scenario_id=scenario_id,
        rep=rep,
        truth=data.truth,
        tau_hat=report.tau_hat,
        k=report.k,
        p=report.p,
        block_length=report.block_length,
        eps_train=eps_train,
        t_wash=report.hyperparams.t_wash,
        t_train=report.hyperparams.t_train,
        t_total=t_total,
        r_ensemble=r_ensemble,
        b_count=b_count,
        seed=seed,
        n=report.hyperparams.n,
        alpha=report.hyperparams.alpha,
        nu=config.nu,
        kappa=config.kappa,
        statistic_exponent=config.statistic_exponent,
    )
