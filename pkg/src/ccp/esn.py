"""Echo state networks with conceptor filtering.

The reservoir update is

    h_t = tanh(w_h @ filt_{t-1} + w_i @ y_t + b)

where ``filt_t`` is the feedback state: the raw state ``h_t`` when no
conceptor is in place, or ``c @ h_t`` when one is.  A conceptor is the
regularized identity map C = R (R + alpha^-2 I)^-1 fitted to the state
correlation matrix R of a training window; its aperture alpha controls
how aggressively low-variance state directions are damped.

This module also carries the three fitting stages used before detection:
a coarse grid search over input/bias scalings, an empirical washout
length, and the (reservoir size, aperture) escalation that stops at the
first configuration whose conceptor-filtered readout reaches a target
reconstruction NRMSE.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import FitError, InputError, InvariantError
from .rand import derived_seed, substream
from .series import as_values

logger = logging.getLogger(__name__)

# Procedure defaults for the scaling grid search.
GRID_C_INPUT = (0.2, 0.6, 1.0, 1.4)
GRID_C_BIAS = (0.1, 0.3, 0.5)
RIDGE_LAMBDA = 1e-4


@dataclass(frozen=True)
class ScalingConfig:
    """Input scale, bias scale, and spectral radius of the reservoir."""

    c_input: float
    c_bias: float
    rho: float = 0.8

    def __post_init__(self):
        if not (self.c_input > 0 and self.c_bias > 0):
            raise InputError("c_input and c_bias must be positive")
        # rho = 0 is allowed as the degenerate memoryless reservoir.
        if not (0.0 <= self.rho < 1.0):
            raise InputError(f"rho must lie in [0, 1), got {self.rho}")


@dataclass(frozen=True)
class EsnWeights:
    """Reservoir matrix, input matrix, and bias of one network.

    w_h : (n, n) reservoir matrix, scaled to the configured spectral radius.
    w_i : (n, d) input matrix.
    b   : (n,) bias vector.
    seed : integer seed the draw came from.
    """

    w_h: np.ndarray = field(repr=False)
    w_i: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    seed: int

    def __post_init__(self):
        for name in ("w_h", "w_i", "b"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.w_h.shape[0]
        if self.w_h.shape != (n, n) or self.w_i.shape[0] != n or self.b.shape != (n,):
            raise InputError("inconsistent weight shapes")

    @property
    def n(self):
        return self.w_h.shape[0]

    @property
    def d(self):
        return self.w_i.shape[1]


@dataclass(frozen=True)
class EsnHyperparams:
    """Fitted reservoir size, aperture, and window lengths."""

    n: int
    alpha: float
    t_wash: int
    t_train: int
    eps_train: float

    def __post_init__(self):
        if self.n < 1 or self.t_wash < 0 or self.t_train < 2:
            raise InputError("invalid hyperparameters")
        if not (self.alpha > 0 and 0 < self.eps_train < 1):
            raise InputError("alpha must be positive and eps_train in (0, 1)")


@dataclass(frozen=True)
class Conceptor:
    """Symmetric PSD matrix with spectrum in [0, 1), plus its aperture."""

    c: np.ndarray = field(repr=False)
    alpha: float

    def __post_init__(self):
        arr = np.ascontiguousarray(self.c, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "c", arr)
        n = arr.shape[0]
        if arr.ndim != 2 or arr.shape != (n, n):
            raise InputError("conceptor must be square")
        if not np.isfinite(arr).all():
            raise InputError("conceptor contains non-finite values")


@dataclass(frozen=True)
class StateSequence:
    """Reservoir states for t = t_start..t_end (rows in that order).

    ``states`` holds the raw states h_t, ``filtered`` the feedback states
    (equal to ``states`` when no conceptor was in place).
    """

    states: np.ndarray = field(repr=False)
    filtered: np.ndarray = field(repr=False)
    t_start: int
    t_end: int

    def __post_init__(self):
        if self.states.shape != self.filtered.shape:
            raise InvariantError("states and filtered shapes differ")
        if self.states.shape[0] != self.t_end - self.t_start + 1:
            raise InvariantError("state count does not match the time window")


@dataclass(frozen=True)
class FitResult:
    """Outcome of the hyperparameter escalation.

    history records every (n, alpha, nrmse) evaluation in visit order.
    """

    hyperparams: EsnHyperparams
    history: tuple
    nrmse: float


def nrmse(y, yhat):
    """Normalized root mean squared error, averaged over dimensions.

    Per dimension the squared error is normalized by the mean of the two
    population variances; the per-dimension roots are then averaged.
    """
    a = as_values(y)
    b = as_values(yhat)
    if a.shape != b.shape:
        raise InputError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] < 2:
        raise InputError("need at least 2 time points")
    mse = np.mean((a - b) ** 2, axis=0)
    denom = 0.5 * a.var(axis=0) + 0.5 * b.var(axis=0)
    bad = np.flatnonzero(denom == 0)
    if bad.size:
        raise InputError(f"zero variance in both series for dimension(s) {bad.tolist()}")
    return float(np.mean(np.sqrt(mse / denom)))


def spectral_radius(m):
    """Largest eigenvalue magnitude of a square matrix.

    Computed from the full (dense) eigenvalue set: random reservoir draws
    frequently have a complex dominant pair, for which plain power
    iteration does not converge, and reservoirs are small enough that the
    dense solve is cheap.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError("matrix must be square")
    return float(np.abs(np.linalg.eigvals(m)).max())


def init_weights(seed, n, d, scaling, density=None):
    """Draw one network's weights.

    w_i and b are i.i.d. standard normal scaled by c_input and c_bias.
    w_h gets exactly round(density * n^2) nonzero standard-normal entries
    (default density min(10/n, 1)) and is rescaled to spectral radius
    scaling.rho.  An all-degenerate pattern with zero radius is redrawn
    from a perturbed stream, at most 10 times.
    """
    if n < 1 or d < 1:
        raise InputError("n and d must be positive")
    if density is None:
        density = min(10.0 / n, 1.0)
    if not 0.0 < density <= 1.0:
        raise InputError(f"density must lie in (0, 1], got {density}")
    rng = substream(seed)
    w_i = rng.standard_normal((n, d)) * scaling.c_input
    b = rng.standard_normal(n) * scaling.c_bias
    k = int(round(density * n * n))
    if scaling.rho == 0.0:
        w_h = np.zeros((n, n))
    else:
        for attempt in range(10):
            rng_h = rng if attempt == 0 else substream(seed, attempt)
            flat = np.zeros(n * n)
            pos = rng_h.choice(n * n, size=k, replace=False)
            flat[pos] = rng_h.standard_normal(k)
            w_h = flat.reshape(n, n)
            radius = spectral_radius(w_h)
            if radius > 0.0:
                w_h = w_h * (scaling.rho / radius)
                break
        else:
            raise InvariantError("reservoir draw had zero spectral radius 10 times in a row")
    return EsnWeights(w_h, w_i, b, int(seed))


def propagate(weights, y, conceptor=None, h0=None, t_start=1, t_end=None):
    """Run one network over y for t = t_start..t_end.

    ``h0`` seeds the feedback state for step t_start (default zeros): it
    is used as-is, so callers chaining a conceptor run onto a raw run
    pass the raw state at t_start - 1 directly.
    """
    vals = as_values(y)
    t_total = vals.shape[0]
    if t_end is None:
        t_end = t_total
    if not (1 <= t_start <= t_end <= t_total):
        raise InputError(f"bad window [{t_start}, {t_end}] for series of length {t_total}")
    if vals.shape[1] != weights.d:
        raise InputError("series dimension does not match input matrix")
    n = weights.n
    c = conceptor.c if isinstance(conceptor, Conceptor) else conceptor
    prev = np.zeros(n) if h0 is None else np.asarray(h0, dtype=np.float64)
    if prev.shape != (n,):
        raise InputError("h0 has the wrong shape")
    length = t_end - t_start + 1
    states = np.empty((length, n))
    filtered = np.empty((length, n))
    for i in range(length):
        h = np.tanh(weights.w_h @ prev + weights.w_i @ vals[t_start - 1 + i] + weights.b)
        hf = h if c is None else c @ h
        states[i] = h
        filtered[i] = hf
        prev = hf
    return StateSequence(states, filtered, t_start, t_end)


def compute_conceptor(h_train, alpha):
    """Conceptor C = R (R + alpha^-2 I)^-1 for R = H'H / len(H).

    Solved against the SPD matrix R + alpha^-2 I (no explicit inverse),
    symmetrized, then eigen-projected onto [gap, 1 - 1e-12 - gap] with
    gap at the rounding-noise scale: the solve alone can leave rounding
    dirt of order 1e-12 just outside [0, 1) on rank-deficient windows,
    and downstream code relies on the spectrum staying strictly inside.
    """
    h = np.asarray(h_train, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] < 1:
        raise InputError("h_train must be a (T, n) matrix")
    if not np.isfinite(h).all():
        raise InputError("h_train contains non-finite values")
    if not alpha > 0:
        raise InputError("alpha must be positive")
    n = h.shape[1]
    r = h.T @ h / h.shape[0]
    r = (r + r.T) / 2.0
    a = float(alpha) ** -2.0
    z = scipy.linalg.solve(r + a * np.eye(n), r, assume_a="pos")
    gap = max(1e-14, 8.0 * n * np.finfo(np.float64).eps)
    lam, vec = np.linalg.eigh((z + z.T) / 2.0)
    lam = np.clip(lam, gap, 1.0 - 1e-12 - gap)
    c = (vec * lam) @ vec.T
    return Conceptor((c + c.T) / 2.0, float(alpha))


def ridge_readout(h, y, lam=RIDGE_LAMBDA):
    """Ridge solution w of min ||h w - y||^2 + lam ||w||^2, shape (n, d).

    Predictions are ``h @ w``.
    """
    hv = np.asarray(h, dtype=np.float64)
    yv = as_values(y)
    if hv.ndim != 2 or hv.shape[0] != yv.shape[0]:
        raise InputError("state and target row counts differ")
    if not lam > 0:
        raise InputError("lam must be positive")
    g = hv.T @ hv + lam * np.eye(hv.shape[1])
    return scipy.linalg.solve(g, hv.T @ yv, assume_a="pos")


# ---------------------------------------------------------------------------
# Stacked propagation over a batch of networks (shared input).


def _stack_weights(weights):
    w_h = np.stack([w.w_h for w in weights])
    w_i = np.stack([w.w_i for w in weights])
    b = np.stack([w.b for w in weights])
    return w_h, w_i, b


def _input_drive(w_i, b, vals, t_start, t_end):
    # drive[r, i] = w_i[r] @ y_{t_start + i} + b[r]
    seg = vals[t_start - 1 : t_end]
    return np.einsum("rnd,td->rtn", w_i, seg) + b[:, None, :]


def _step(w_h, h):
    return np.matmul(w_h, h[..., None])[..., 0]


def _raw_states(w_h, drive, collect_from=0):
    """Identity-feedback pass; returns (state at collect_from, states after)."""
    n_nets, length, n = drive.shape
    h = np.zeros((n_nets, n))
    seed_state = h
    out = np.empty((n_nets, length - collect_from, n))
    for i in range(length):
        h = np.tanh(_step(w_h, h) + drive[:, i])
        if i + 1 == collect_from:
            seed_state = h.copy()
        if i + 1 > collect_from:
            out[:, i - collect_from] = h
    return seed_state, out


# ---------------------------------------------------------------------------
# Fitting stages.


def evaluate_scaling_grid(
    y,
    t_train,
    seed=0,
    grid_input=GRID_C_INPUT,
    grid_bias=GRID_C_BIAS,
    rho=0.8,
    n=None,
    n_init=10,
    t_wash=50,
    ridge_lambda=RIDGE_LAMBDA,
    density=None,
):
    """Mean raw-state readout NRMSE for every (c_input, c_bias) grid cell.

    Cell order is c_input-major, c_bias-minor.  Cell i draws its n_init
    networks from the substreams derived_seed(seed, i, r).
    """
    vals = as_values(y)
    t_total, d = vals.shape
    if n is None:
        n = 10 * d
    if t_wash + t_train > t_total:
        raise InputError(f"need t_train + {t_wash} <= series length, got {t_train} + {t_wash} > {t_total}")
    target = vals[t_wash : t_wash + t_train]
    results = []
    for cell, (ci, cb) in enumerate((ci, cb) for ci in grid_input for cb in grid_bias):
        cfg = ScalingConfig(ci, cb, rho)
        weights = [init_weights(derived_seed(seed, cell, r), n, d, cfg, density) for r in range(n_init)]
        w_h, w_i, b = _stack_weights(weights)
        drive = _input_drive(w_i, b, vals, 1, t_wash + t_train)
        _, states = _raw_states(w_h, drive, collect_from=t_wash)
        errs = [
            nrmse(target, states[r] @ ridge_readout(states[r], target, ridge_lambda))
            for r in range(n_init)
        ]
        results.append((cfg, float(np.mean(errs))))
    return results


def select_scaling(y, t_train, seed=0, **kwargs):
    """Grid cell with the lowest mean readout NRMSE (ties: declared order)."""
    table = evaluate_scaling_grid(y, t_train, seed, **kwargs)
    best = int(np.argmin([err for _, err in table]))
    cfg, err = table[best]
    logger.debug("selected scaling %s with nrmse %.4f", cfg, err)
    return cfg


def washout_length(y, scaling, n, eps_wash=1e-6, seed=0, n_init=10, density=None):
    """Empirical washout: first t where states forget the initial state.

    Runs n_init networks from the all-zeros and the all-ones initial
    state along y and returns the first t at which the largest absolute
    state difference over all networks and units drops below eps_wash,
    together with the networks used (network r comes from
    derived_seed(seed, r)).
    """
    vals = as_values(y)
    t_total, d = vals.shape
    if not eps_wash > 0:
        raise InputError("eps_wash must be positive")
    weights = [init_weights(derived_seed(seed, r), n, d, scaling, density) for r in range(n_init)]
    w_h, w_i, b = _stack_weights(weights)
    drive = _input_drive(w_i, b, vals, 1, t_total)
    ha = np.zeros((n_init, n))
    hb = np.ones((n_init, n))
    for i in range(t_total):
        ha = np.tanh(_step(w_h, ha) + drive[:, i])
        hb = np.tanh(_step(w_h, hb) + drive[:, i])
        if np.max(np.abs(ha - hb)) < eps_wash:
            return i + 1, weights
    raise FitError(f"initial-state difference stayed >= {eps_wash} over all {t_total} steps")


def _filtered_readout_nrmse(vals, weights, alpha, t_wash, t_train, ridge_lambda):
    """Mean NRMSE of conceptor-filtered ridge reconstruction over networks."""
    t0 = t_wash + t_train
    w_h, w_i, b = _stack_weights(weights)
    drive = _input_drive(w_i, b, vals, 1, t0)
    seed_state, raw = _raw_states(w_h, drive, collect_from=t_wash)
    n_nets = raw.shape[0]
    c = np.stack([compute_conceptor(raw[r], alpha).c for r in range(n_nets)])
    hf = seed_state
    filt = np.empty_like(raw)
    for i in range(t_train):
        h = np.tanh(_step(w_h, hf) + drive[:, t_wash + i])
        hf = _step(c, h)
        filt[:, i] = hf
    target = vals[t_wash:t0]
    errs = [
        nrmse(target, filt[r] @ ridge_readout(filt[r], target, ridge_lambda))
        for r in range(n_nets)
    ]
    return float(np.mean(errs))


def fit_hyperparams(
    y,
    t_train,
    scaling,
    eps_train=0.04,
    t_wash_override=None,
    seed=0,
    n_init=10,
    eps_wash=1e-6,
    ridge_lambda=RIDGE_LAMBDA,
    max_n_factor=1000,
    density=None,
):
    """Escalate (n, alpha) until the filtered readout NRMSE meets eps_train.

    Starts at n = 10 d with alpha = n.  While the mean NRMSE over n_init
    networks misses eps_train, alpha grows by sqrt(10) as long as
    alpha <= 100 n, after which n grows by a factor d and alpha resets to
    n.  The washout length is measured afresh at each n (the j-th size
    uses stream derived_seed(seed, j)) unless t_wash_override fixes it,
    in which case the j-th size draws network r from
    derived_seed(seed, j, r).  Raises FitError when n would exceed
    max_n_factor * d.
    """
    vals = as_values(y)
    t_total, d = vals.shape
    if not 0 < eps_train < 1:
        raise InputError(f"eps_train must lie in (0, 1), got {eps_train}")
    if t_train < 2:
        raise InputError("t_train must be at least 2")
    max_n = max_n_factor * d
    n = 10 * d
    history = []
    size_idx = 0
    while n <= max_n:
        if t_wash_override is not None:
            t_wash = int(t_wash_override)
            weights = [
                init_weights(derived_seed(seed, size_idx, r), n, d, scaling, density)
                for r in range(n_init)
            ]
        else:
            t_wash, weights = washout_length(
                y, scaling, n, eps_wash, seed=derived_seed(seed, size_idx), n_init=n_init, density=density
            )
        if t_wash + t_train > t_total:
            raise InputError(
                f"washout {t_wash} plus t_train {t_train} exceeds series length {t_total}"
            )
        alpha = float(n)
        while True:
            err = _filtered_readout_nrmse(vals, weights, alpha, t_wash, t_train, ridge_lambda)
            history.append((n, alpha, err))
            if err <= eps_train:
                hp = EsnHyperparams(n, alpha, t_wash, t_train, eps_train)
                return FitResult(hp, tuple(history), err)
            if alpha <= 100.0 * n:
                alpha = alpha * math.sqrt(10.0)
            else:
                break
        n = n * d
        size_idx += 1
    raise FitError(
        f"readout NRMSE stayed above {eps_train} up to the reservoir size cap {max_n}"
    )
