"""Synthetic two-dimensional change point scenarios.

Each catalog entry generates a length-1000 bivariate series whose
distribution switches once at a change point tau drawn uniformly from
[181, 999], or never (no-change entries).  Families:

  1*  VAR(1) with spectral-radius-controlled coefficients + N(0, I)/2 noise
  2*  VAR(2), same construction
  3*  noisy sinusoid with a frequency switch (second dimension phase-led)
  4*  Ornstein-Uhlenbeck (Euler-Maruyama, unit step) with drift/volatility switches
  5*  correlated white noise with mean/variance/cross-covariance switches

Autoregressive families discard a 200-step burn-in so the series starts
in its stationary regime.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError, InvariantError
from .rand import derived_seed, substream
from .series import MultiSeries

T_TOTAL = 1000
TAU_LOW = 181
BURN_IN = 200
NOISE_SCALE = 0.5


@dataclass(frozen=True)
class Scenario:
    """A drawn scenario instance: catalog id, change point, and parameters."""

    id: str
    tau: int | None
    params_before: dict
    params_after: dict | None
    t_total: int = T_TOTAL
    d: int = 2


@dataclass(frozen=True)
class LabeledSeries:
    """Generated series with its true change point (None = no change)."""

    series: MultiSeries
    truth: int | None
    scenario_id: str = "custom"


def _companion_radius(mats):
    d = mats[0].shape[0]
    p = len(mats)
    comp = np.zeros((d * p, d * p))
    comp[:d] = np.hstack(mats)
    if p > 1:
        comp[d:, : d * (p - 1)] = np.eye(d * (p - 1))
    return float(np.abs(np.linalg.eigvals(comp)).max())


def random_var_coefficients(order, d, rho_target, tol=0.02, seed=0, max_rescale=100):
    """Standard normal lag matrices rescaled to a companion spectral radius.

    All lag matrices share one scalar factor, adjusted multiplicatively
    until the companion radius is within tol of rho_target.  A draw whose
    rescaling does not converge in max_rescale steps is regenerated from
    a perturbed stream.
    """
    if order < 1 or d < 1 or not (rho_target > 0) or not (tol > 0):
        raise InputError("bad VAR coefficient request")
    for attempt in range(10):
        rng = substream(seed, attempt)
        mats = [rng.standard_normal((d, d)) for _ in range(order)]
        radius = _companion_radius(mats)
        if radius == 0.0:
            continue
        for _ in range(max_rescale):
            if abs(radius - rho_target) <= tol:
                return [m.copy() for m in mats]
            factor = rho_target / radius
            mats = [m * factor for m in mats]
            radius = _companion_radius(mats)
    raise InvariantError("VAR coefficient rescaling failed 10 draws in a row")


def gen_var(
    order,
    rho_before,
    rho_after,
    tau,
    t_total=T_TOTAL,
    seed=0,
    d=2,
    noise_scale=NOISE_SCALE,
    burn_in=BURN_IN,
    scenario_id="custom",
):
    """VAR(order) series; rho_after None means no change (tau ignored).

    Coefficients are redrawn fresh on both sides of the change even when
    the target radii are equal, so an equal-radius entry still changes
    distribution.  Before-coefficients come from derived_seed(seed, 0),
    after-coefficients from derived_seed(seed, 1), innovations from
    substream(seed, 2).
    """
    change = rho_after is not None
    if change and tau is None:
        raise InputError("tau required when rho_after is given")
    coef_before = random_var_coefficients(order, d, rho_before, seed=derived_seed(seed, 0))
    coef_after = (
        random_var_coefficients(order, d, rho_after, seed=derived_seed(seed, 1)) if change else None
    )
    rng = substream(seed, 2)
    total = burn_in + t_total
    y = np.zeros((total + order, d))
    for t in range(1, total + 1):
        coefs = coef_after if (change and t - burn_in > tau) else coef_before
        row = noise_scale * rng.standard_normal(d)
        for k, a in enumerate(coefs, start=1):
            row = row + a @ y[order + t - 1 - k]
        y[order + t - 1] = row
    out = y[order + burn_in :]
    return LabeledSeries(MultiSeries(out), tau if change else None, scenario_id)


def gen_periodic(
    omega_before,
    omega_after,
    tau,
    t_total=T_TOTAL,
    seed=0,
    noise_scale=NOISE_SCALE,
    scenario_id="custom",
):
    """Noisy sinusoid with a frequency switch at tau (None = no change).

    The phase is continuous across the switch; the second dimension leads
    by omega * pi / 2 with omega the currently active frequency.
    """
    change = omega_after is not None
    if change and tau is None:
        raise InputError("tau required when omega_after is given")
    t = np.arange(1, t_total + 1, dtype=np.float64)
    if change:
        phase = np.where(t <= tau, omega_before * t, omega_before * tau + omega_after * (t - tau))
        active = np.where(t <= tau, omega_before, omega_after)
    else:
        phase = omega_before * t
        active = np.full(t_total, omega_before)
    rng = substream(seed, 2)
    y = np.stack([np.sin(phase), np.sin(phase + active * np.pi / 2.0)], axis=1)
    y = y + noise_scale * rng.standard_normal((t_total, 2))
    return LabeledSeries(MultiSeries(y), tau if change else None, scenario_id)


def gen_ou(
    theta_before,
    theta_after,
    lambda_before,
    lambda_after,
    tau,
    t_total=T_TOTAL,
    seed=0,
    d=2,
    dt=1.0,
    burn_in=BURN_IN,
    scenario_id="custom",
):
    """Euler-Maruyama Ornstein-Uhlenbeck with mean-reverting drift -theta x.

    x_{t+1} = (1 - theta dt) x_t + lambda sqrt(dt) eps_t.  Passing None
    for both after-parameters means no change.  theta dt >= 2 would make
    the discretization explosive and is rejected.
    """
    change = theta_after is not None or lambda_after is not None
    if change and tau is None:
        raise InputError("tau required when after-parameters are given")
    th_after = theta_before if theta_after is None else theta_after
    lam_after = lambda_before if lambda_after is None else lambda_after
    for th in (theta_before, th_after):
        if th < 0 or th * dt >= 2.0:
            raise InputError(f"theta dt must lie in [0, 2), got {th * dt}")
    for lam in (lambda_before, lam_after):
        if lam < 0:
            raise InputError("lambda must be nonnegative")
    rng = substream(seed, 2)
    total = burn_in + t_total
    out = np.empty((t_total, d))
    x = np.zeros(d)
    root_dt = np.sqrt(dt)
    for t in range(1, total + 1):
        after = change and t - burn_in > tau
        theta = th_after if after else theta_before
        lam = lam_after if after else lambda_before
        x = x - theta * x * dt + lam * root_dt * rng.standard_normal(d)
        if t > burn_in:
            out[t - burn_in - 1] = x
    return LabeledSeries(MultiSeries(out), tau if change else None, scenario_id)


def _cross_chol(sigma, rho_cov):
    if not abs(rho_cov) < sigma**2:
        raise InputError(f"|rho| = {abs(rho_cov)} must be < sigma^2 = {sigma ** 2}")
    cov = np.array([[sigma**2, rho_cov], [rho_cov, sigma**2]])
    return np.linalg.cholesky(cov)


def gen_white_noise(
    mu_before,
    mu_after,
    sigma_before,
    sigma_after,
    rho_before,
    rho_after,
    tau,
    t_total=T_TOTAL,
    seed=0,
    scenario_id="custom",
):
    """Bivariate Gaussian noise N(mu 1, sigma^2 I + rho J), J anti-diagonal.

    After-parameters set to None inherit the before value; all three None
    means no change.  Cross-covariance is injected via the Cholesky
    factor of the 2x2 covariance, which requires |rho| < sigma^2.
    """
    change = any(v is not None for v in (mu_after, sigma_after, rho_after))
    if change and tau is None:
        raise InputError("tau required when after-parameters are given")
    mu_a = mu_before if mu_after is None else mu_after
    sig_a = sigma_before if sigma_after is None else sigma_after
    rho_a = rho_before if rho_after is None else rho_after
    chol_before = _cross_chol(sigma_before, rho_before)
    chol_after = _cross_chol(sig_a, rho_a)
    rng = substream(seed, 2)
    z = rng.standard_normal((t_total, 2))
    t = np.arange(1, t_total + 1)
    after = change & (t > (tau if tau is not None else t_total))
    y = np.where(
        after[:, None],
        mu_a + z @ chol_after.T,
        mu_before + z @ chol_before.T,
    )
    return LabeledSeries(MultiSeries(y), tau if change else None, scenario_id)


# Catalog: id -> (kind, params).  "after" values of None inherit "before".
CATALOG = {
    "1a": ("var", dict(order=1, rho_before=0.5, rho_after=0.5)),
    "1b": ("var", dict(order=1, rho_before=0.5, rho_after=0.8)),
    "1c": ("var", dict(order=1, rho_before=0.8, rho_after=0.5)),
    "1d": ("var", dict(order=1, rho_before=0.8, rho_after=0.8)),
    "1e": ("var", dict(order=1, rho_before=0.5, rho_after=None)),
    "1f": ("var", dict(order=1, rho_before=0.8, rho_after=None)),
    "2a": ("var", dict(order=2, rho_before=0.5, rho_after=0.5)),
    "2b": ("var", dict(order=2, rho_before=0.5, rho_after=0.8)),
    "2c": ("var", dict(order=2, rho_before=0.8, rho_after=0.5)),
    "2d": ("var", dict(order=2, rho_before=0.8, rho_after=0.8)),
    "2e": ("var", dict(order=2, rho_before=0.5, rho_after=None)),
    "2f": ("var", dict(order=2, rho_before=0.8, rho_after=None)),
    "3a": ("periodic", dict(omega_before=1.0, omega_after=0.5)),
    "3b": ("periodic", dict(omega_before=1.0, omega_after=0.8)),
    "3c": ("periodic", dict(omega_before=1.0, omega_after=1.2)),
    "3d": ("periodic", dict(omega_before=1.0, omega_after=1.5)),
    "3e": ("periodic", dict(omega_before=1.0, omega_after=None)),
    "4a": ("ou", dict(theta_before=0.5, theta_after=0.0, lambda_before=0.5, lambda_after=None)),
    "4b": ("ou", dict(theta_before=0.5, theta_after=1.0, lambda_before=0.5, lambda_after=None)),
    "4c": ("ou", dict(theta_before=1.0, theta_after=0.0, lambda_before=0.5, lambda_after=None)),
    "4d": ("ou", dict(theta_before=1.0, theta_after=0.5, lambda_before=0.5, lambda_after=None)),
    "4e": ("ou", dict(theta_before=0.5, theta_after=None, lambda_before=0.5, lambda_after=0.2)),
    "4f": ("ou", dict(theta_before=0.5, theta_after=None, lambda_before=0.5, lambda_after=0.8)),
    "4g": ("ou", dict(theta_before=0.5, theta_after=None, lambda_before=0.5, lambda_after=1.0)),
    "4h": ("ou", dict(theta_before=0.5, theta_after=None, lambda_before=0.5, lambda_after=None)),
    "4i": ("ou", dict(theta_before=1.0, theta_after=None, lambda_before=0.5, lambda_after=None)),
    "5a": ("white", dict(mu_before=0.0, mu_after=0.5, sigma_before=1.0, sigma_after=None, rho_before=0.0, rho_after=None)),
    "5b": ("white", dict(mu_before=0.0, mu_after=0.8, sigma_before=1.0, sigma_after=None, rho_before=0.0, rho_after=None)),
    "5c": ("white", dict(mu_before=0.0, mu_after=1.0, sigma_before=1.0, sigma_after=None, rho_before=0.0, rho_after=None)),
    "5d": ("white", dict(mu_before=0.0, mu_after=None, sigma_before=1.0, sigma_after=0.5, rho_before=0.0, rho_after=None)),
    "5e": ("white", dict(mu_before=0.0, mu_after=None, sigma_before=1.0, sigma_after=0.8, rho_before=0.0, rho_after=None)),
    "5f": ("white", dict(mu_before=0.0, mu_after=None, sigma_before=1.0, sigma_after=1.2, rho_before=0.0, rho_after=None)),
    "5g": ("white", dict(mu_before=0.0, mu_after=None, sigma_before=1.0, sigma_after=1.5, rho_before=0.0, rho_after=None)),
    "5h": ("white", dict(mu_before=0.0, mu_after=None, sigma_before=1.0, sigma_after=None, rho_before=0.0, rho_after=0.8)),
    "5i": ("white", dict(mu_before=0.0, mu_after=None, sigma_before=1.0, sigma_after=None, rho_before=0.0, rho_after=None)),
}

_GENERATORS = {"var": gen_var, "periodic": gen_periodic, "ou": gen_ou, "white": gen_white_noise}

# No-change entries never switch parameters, whatever tau would have been.
NO_CHANGE_IDS = frozenset(
    sid
    for sid, (kind, params) in CATALOG.items()
    if all(params.get(key) is None for key in params if key.endswith("_after"))
)


def scenario_ids():
    return sorted(CATALOG)


def has_change(scenario_id):
    if scenario_id not in CATALOG:
        raise InputError(f"unknown scenario id {scenario_id!r}")
    return scenario_id not in NO_CHANGE_IDS


def describe(scenario_id, tau=None, t_total=T_TOTAL):
    """Scenario record for a catalog id with a given change point."""
    kind, params = CATALOG[scenario_id]
    before = {k: v for k, v in params.items() if not k.endswith("_after")}
    after = {k: v for k, v in params.items() if k.endswith("_after")}
    return Scenario(scenario_id, tau, dict(kind=kind, **before), after if tau else None, t_total)


def scenario(scenario_id, seed=0, t_total=T_TOTAL):
    """Draw one labeled series for a catalog entry.

    For changing entries tau is uniform on [181, t_total - 1] (stream
    substream(seed, 0)); the series itself uses derived_seed(seed, 1).
    """
    if scenario_id not in CATALOG:
        raise InputError(f"unknown scenario id {scenario_id!r}")
    if t_total < TAU_LOW + 2:
        raise InputError(f"t_total must be at least {TAU_LOW + 2}")
    kind, params = CATALOG[scenario_id]
    change = has_change(scenario_id)
    tau = int(substream(seed, 0).integers(TAU_LOW, t_total)) if change else None
    gen = _GENERATORS[kind]
    return gen(
        tau=tau, t_total=t_total, seed=derived_seed(seed, 1), scenario_id=scenario_id, **params
    )
