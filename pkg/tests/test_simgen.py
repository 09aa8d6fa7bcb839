import math

import numpy as np
import pytest

from ccp import simgen
from ccp.errors import InputError
from ccp.rand import derived_seed, substream
from ccp.simgen import (
    CATALOG,
    NO_CHANGE_IDS,
    describe,
    gen_ou,
    gen_periodic,
    gen_var,
    gen_white_noise,
    has_change,
    random_var_coefficients,
    scenario,
    scenario_ids,
)


# --------------------------------------------------------------------------
# VAR coefficients


def _companion(mats):
    d, p = mats[0].shape[0], len(mats)
    comp = np.zeros((d * p, d * p))
    comp[:d] = np.hstack(mats)
    if p > 1:
        comp[d:, : d * (p - 1)] = np.eye(d * (p - 1))
    return comp


def test_var_coefficients_hit_requested_radius():
    for order in (1, 2):
        for target in (0.5, 0.8):
            mats = random_var_coefficients(order, 2, target, seed=order * 10 + int(target * 10))
            assert len(mats) == order
            radius = np.abs(np.linalg.eigvals(_companion(mats))).max()
            assert abs(radius - target) <= 0.02


def test_var_coefficients_are_deterministic():
    a = random_var_coefficients(2, 2, 0.8, seed=3)
    b = random_var_coefficients(2, 2, 0.8, seed=3)
    c = random_var_coefficients(2, 2, 0.8, seed=4)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[0], c[0])


def test_var_coefficients_validate():
    with pytest.raises(InputError):
        random_var_coefficients(0, 2, 0.5)
    with pytest.raises(InputError):
        random_var_coefficients(1, 2, 0.0)


# --------------------------------------------------------------------------
# gen_var


def test_gen_var_replays_order_one_recursion():
    seed, tau = 9, 300
    out = gen_var(1, 0.5, 0.8, tau=tau, seed=seed, t_total=400)
    a_before = random_var_coefficients(1, 2, 0.5, seed=derived_seed(seed, 0))[0]
    a_after = random_var_coefficients(1, 2, 0.8, seed=derived_seed(seed, 1))[0]
    rng = substream(seed, 2)
    prev = np.zeros(2)
    rows = []
    for t in range(1, simgen.BURN_IN + 400 + 1):
        a = a_after if t - simgen.BURN_IN > tau else a_before
        row = 0.5 * rng.standard_normal(2)
        row = row + a @ prev
        prev = row
        if t > simgen.BURN_IN:
            rows.append(row)
    assert out.truth == tau
    assert np.array_equal(out.series.values, np.array(rows))


def test_gen_var_replays_order_two_lags():
    seed = 12
    out = gen_var(2, 0.8, None, tau=None, seed=seed, t_total=250)
    mats = random_var_coefficients(2, 2, 0.8, seed=derived_seed(seed, 0))
    rng = substream(seed, 2)
    hist = [np.zeros(2), np.zeros(2)]  # y_{t-1}, y_{t-2}
    rows = []
    for t in range(1, simgen.BURN_IN + 250 + 1):
        row = 0.5 * rng.standard_normal(2)
        row = row + mats[0] @ hist[0]
        row = row + mats[1] @ hist[1]
        hist = [row, hist[0]]
        if t > simgen.BURN_IN:
            rows.append(row)
    assert out.truth is None
    assert np.array_equal(out.series.values, np.array(rows))


def test_gen_var_prefix_agrees_until_the_switch():
    # Same seed with and without a change: identical up to tau, then the
    # redrawn coefficients take over.
    tau = 150
    with_change = gen_var(1, 0.5, 0.8, tau=tau, seed=21, t_total=300)
    without = gen_var(1, 0.5, None, tau=None, seed=21, t_total=300)
    assert np.array_equal(with_change.series.values[:tau], without.series.values[:tau])
    assert not np.array_equal(with_change.series.values[tau:], without.series.values[tau:])


def test_gen_var_zero_noise_from_zero_state_stays_zero():
    out = gen_var(1, 0.5, None, tau=None, seed=0, t_total=220, noise_scale=0.0)
    assert np.array_equal(out.series.values, np.zeros((220, 2)))


def test_gen_var_requires_tau_for_a_change():
    with pytest.raises(InputError):
        gen_var(1, 0.5, 0.8, tau=None)


# --------------------------------------------------------------------------
# gen_periodic


def test_periodic_phase_is_continuous_across_the_switch():
    # Stepwise phase accumulation with the active frequency is the oracle.
    tau, om_b, om_a = 40, 1.0, 0.5
    out = gen_periodic(om_b, om_a, tau=tau, seed=3, t_total=120, noise_scale=0.0)
    vals = out.series.values
    phase = 0.0
    for t in range(1, 121):
        om = om_b if t <= tau else om_a
        phase += om
        assert vals[t - 1, 0] == pytest.approx(math.sin(phase), abs=1e-9)
        assert vals[t - 1, 1] == pytest.approx(math.sin(phase + om * math.pi / 2), abs=1e-9)


def test_periodic_no_change_is_exact_sinusoid_plus_noise():
    seed, om = 5, 1.0
    out = gen_periodic(om, None, tau=None, seed=seed, t_total=200)
    t = np.arange(1, 201, dtype=np.float64)
    base = np.stack([np.sin(om * t), np.sin(om * t + om * np.pi / 2.0)], axis=1)
    noise = substream(seed, 2).standard_normal((200, 2))
    assert out.truth is None
    assert np.array_equal(out.series.values, base + 0.5 * noise)


def test_periodic_requires_tau_for_a_change():
    with pytest.raises(InputError):
        gen_periodic(1.0, 0.5, tau=None)


# --------------------------------------------------------------------------
# gen_ou


def test_ou_replays_euler_maruyama_updates():
    seed, tau = 6, 100
    out = gen_ou(0.5, 0.0, 0.5, None, tau=tau, seed=seed, t_total=300)
    rng = substream(seed, 2)
    x = np.zeros(2)
    rows = []
    for t in range(1, simgen.BURN_IN + 300 + 1):
        theta = 0.0 if t - simgen.BURN_IN > tau else 0.5
        x = x - theta * x * 1.0 + 0.5 * 1.0 * rng.standard_normal(2)
        if t > simgen.BURN_IN:
            rows.append(x)
    assert out.truth == tau  # theta_after = 0 is still a change
    assert np.array_equal(out.series.values, np.array(rows))


def test_ou_zero_volatility_from_zero_state_stays_zero():
    out = gen_ou(0.5, None, 0.0, None, tau=None, seed=0, t_total=210)
    assert out.truth is None
    assert np.array_equal(out.series.values, np.zeros((210, 2)))


def test_ou_stationary_variance_matches_theory():
    # x_{t+1} = 0.5 x_t + 0.5 eps has stationary variance 1/3.
    out = gen_ou(0.5, None, 0.5, None, tau=None, seed=8, t_total=20000)
    var = out.series.values.var(axis=0)
    assert np.allclose(var, 1.0 / 3.0, rtol=0.1)


def test_ou_validates_parameters():
    with pytest.raises(InputError):
        gen_ou(2.0, None, 0.5, None, tau=None)  # theta dt >= 2 explodes
    with pytest.raises(InputError):
        gen_ou(-0.1, None, 0.5, None, tau=None)
    with pytest.raises(InputError):
        gen_ou(0.5, None, -0.5, None, tau=None)
    with pytest.raises(InputError):
        gen_ou(0.5, 1.0, 0.5, None, tau=None)


# --------------------------------------------------------------------------
# gen_white_noise


def test_white_noise_replays_the_draw():
    seed = 4
    out = gen_white_noise(0.25, None, 2.0, None, 0.0, None, tau=None, seed=seed, t_total=150)
    z = substream(seed, 2).standard_normal((150, 2))
    assert out.truth is None
    assert np.array_equal(out.series.values, 0.25 + 2.0 * z)


def test_white_noise_mean_shift_moments():
    out = gen_white_noise(0.0, 3.0, 1.0, None, 0.0, None, tau=500, seed=5)
    vals = out.series.values
    assert out.truth == 500
    assert np.abs(vals[:500].mean(axis=0)).max() < 0.15
    assert np.abs(vals[500:].mean(axis=0) - 3.0).max() < 0.15
    assert np.allclose(vals[:500].std(axis=0), 1.0, atol=0.2)
    assert np.allclose(vals[500:].std(axis=0), 1.0, atol=0.2)


def test_white_noise_cross_covariance_switch():
    out = gen_white_noise(0.0, None, 1.0, None, 0.0, 0.8, tau=2000, seed=6, t_total=4000)
    vals = out.series.values
    cov_before = np.cov(vals[:2000].T)[0, 1]
    cov_after = np.cov(vals[2000:].T)[0, 1]
    assert abs(cov_before) < 0.1
    assert cov_after == pytest.approx(0.8, abs=0.1)


def test_white_noise_rejects_indefinite_covariance():
    with pytest.raises(InputError):
        gen_white_noise(0.0, None, 1.0, None, 1.0, None, tau=None)
    with pytest.raises(InputError):
        gen_white_noise(0.0, None, 1.0, None, 0.0, -1.2, tau=100)
    with pytest.raises(InputError):
        gen_white_noise(0.0, 1.0, 1.0, None, 0.0, None, tau=None)


# --------------------------------------------------------------------------
# catalog / scenario


def test_catalog_inventory():
    ids = scenario_ids()
    assert len(ids) == 35
    assert ids == sorted(CATALOG)
    assert NO_CHANGE_IDS == {"1e", "1f", "2e", "2f", "3e", "4h", "4i", "5i"}
    assert has_change("4a")  # theta drops to zero: a change, not a no-op
    assert not has_change("5i")
    with pytest.raises(InputError):
        has_change("9z")


def test_scenario_draws_tau_uniformly_inside_the_window():
    taus = [scenario("1b", seed=s, t_total=400).truth for s in range(60)]
    assert all(181 <= tau <= 399 for tau in taus)
    assert len(set(taus)) > 30
    assert scenario("5i", seed=0, t_total=400).truth is None


def test_scenario_is_deterministic_and_dispatches_documented_streams():
    a = scenario("3a", seed=11, t_total=300)
    b = scenario("3a", seed=11, t_total=300)
    assert a.truth == b.truth
    assert np.array_equal(a.series.values, b.series.values)
    tau = int(substream(11, 0).integers(simgen.TAU_LOW, 300))
    want = gen_periodic(1.0, 0.5, tau=tau, seed=derived_seed(11, 1), t_total=300)
    assert a.truth == tau == want.truth
    assert np.array_equal(a.series.values, want.series.values)


def test_every_catalog_entry_generates_a_valid_series():
    for sid in scenario_ids():
        out = scenario(sid, seed=2, t_total=260)
        assert out.scenario_id == sid
        assert out.series.values.shape == (260, 2)
        if has_change(sid):
            assert 181 <= out.truth <= 259
        else:
            assert out.truth is None


def test_describe_splits_parameters():
    sc = describe("5a", tau=321)
    assert sc.id == "5a" and sc.tau == 321
    assert sc.params_before == dict(kind="white", mu_before=0.0, sigma_before=1.0, rho_before=0.0)
    assert sc.params_after == dict(mu_after=0.5, sigma_after=None, rho_after=None)
    assert describe("5a").params_after is None


def test_scenario_rejects_bad_requests():
    with pytest.raises(InputError):
        scenario("nope")
    with pytest.raises(InputError):
        scenario("1a", t_total=100)
