import math

import numpy as np
import pytest
from conftest import h2
from hypothesis import given, settings
from hypothesis import strategies as st

from mdiqkd.bsm import BsmPoint, p_bsm_single, qber_infty
from mdiqkd.params import (
    DecoherenceModel,
    DegenerateError,
    DeviceParams,
    LinkConfig,
    MemoryModel,
    NoSolutionError,
)
from mdiqkd.sps import (
    SpsScenario,
    TruncationWarning,
    avg_attempts_closed,
    avg_attempts_series,
    crossover_distance,
    joint_storage_prob,
    qber_avg_closed,
    qber_avg_series,
    relay_rate_sps,
    repeater_rate_sps,
    tau_min_sps,
)


def brute_qber(e_inf, p0, tau, bins=400):
    """Plain double loop over storage bins; bit is random if the gap exceeds tau."""
    q = 1.0 - p0
    total = 0.0
    for ka in range(1, bins + 1):
        pa = p0 * q ** (ka - 1)
        for kb in range(1, bins + 1):
            err = e_inf if abs(ka - kb) <= tau else 0.5
            total += pa * p0 * q ** (kb - 1) * err
    return total


def brute_max_geom(p0, bins=400):
    q = 1.0 - p0
    return sum(
        max(ka, kb) * p0 * q ** (ka - 1) * p0 * q ** (kb - 1)
        for ka in range(1, bins + 1)
        for kb in range(1, bins + 1)
    )


@pytest.mark.parametrize(
    "k_a, k_b, p0, expected",
    [(1, 1, 1.0, 1.0), (1, 1, 0.5, 0.25), (2, 3, 0.1, 0.1**2 * 0.9 * 0.9**2)],
)
def test_joint_storage_prob(k_a, k_b, p0, expected):
    assert joint_storage_prob(k_a, k_b, p0) == pytest.approx(expected, rel=1e-12)


def test_joint_storage_prob_rejects_bin_zero():
    with pytest.raises(ValueError):
        joint_storage_prob(0, 1, 0.5)


def test_avg_attempts_closed_values():
    assert avg_attempts_closed(1.0, 1.0) == 1.0
    assert avg_attempts_closed(0.5, 0.5) == pytest.approx(16 / 3, rel=1e-12)


@pytest.mark.parametrize("p0", [0.5, 0.2, 0.05])
def test_avg_attempts_closed_matches_expected_max(p0):
    assert avg_attempts_closed(p0, 1.0) == pytest.approx(brute_max_geom(p0, bins=900), rel=1e-9)


def test_avg_attempts_small_p0_asymptote():
    p0, pb = 1e-6, 0.0072
    assert avg_attempts_closed(p0, pb) * pb * p0 == pytest.approx(1.5, rel=1e-5)


def test_avg_attempts_degenerate():
    with pytest.raises(DegenerateError):
        avg_attempts_closed(0.0, 0.5)
    with pytest.raises(DegenerateError):
        avg_attempts_series(0.5, 0.0)


def test_avg_attempts_series_examples():
    assert avg_attempts_series(0.5, 0.5, 200) == pytest.approx(16 / 3, abs=1e-6)
    assert avg_attempts_series(1.0, 1.0, 10) == pytest.approx(1.0, abs=1e-15)
    closed = avg_attempts_closed(0.1, 0.0072)
    assert avg_attempts_series(0.1, 0.0072, 2000) == pytest.approx(closed, rel=1e-6)


def test_avg_attempts_series_warns_on_short_truncation():
    with pytest.warns(TruncationWarning):
        avg_attempts_series(0.01, 0.5, 50)


@pytest.mark.parametrize("p0", [0.5, 0.1, 0.03])
@pytest.mark.parametrize("pb", [1.0, 0.5, 0.0072])
def test_avg_attempts_series_grid(p0, pb):
    assert avg_attempts_series(p0, pb, 2000) == pytest.approx(avg_attempts_closed(p0, pb), rel=1e-6)


def test_qber_closed_limits():
    assert qber_avg_closed(0.03, 0.2, math.inf) == 0.03
    assert qber_avg_closed(0.0, 1e-12, 5.0) == pytest.approx(0.5, abs=1e-9)
    assert qber_avg_closed(0.02, 1.0, 0.0) == 0.02


def test_qber_closed_reference_value():
    # storage gap > 2 for two Geom(1/2) variables has probability 1/6
    expected = 0.5 / 6
    assert qber_avg_closed(0.0, 0.5, 2.0) == pytest.approx(expected, rel=1e-12)
    assert brute_qber(0.0, 0.5, 2) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("e_inf", [0.0, 0.01, 0.05])
@pytest.mark.parametrize("p0", [0.5, 0.3, 0.1])
@pytest.mark.parametrize("tau", [0, 1, 3, 20])
def test_qber_closed_matches_brute_force(e_inf, p0, tau):
    assert qber_avg_closed(e_inf, p0, tau) == pytest.approx(brute_qber(e_inf, p0, tau), rel=1e-9)


def test_qber_series_examples():
    assert qber_avg_series(0.0, 0.5, 2, 200) == pytest.approx(0.5 / 6, abs=1e-8)
    assert qber_avg_series(0.01, 0.3, 0, 200) == pytest.approx(qber_avg_closed(0.01, 0.3, 0), abs=1e-8)
    assert qber_avg_series(0.04, 1.0, 7, 10) == pytest.approx(0.04, abs=1e-15)


@pytest.mark.parametrize("p0", [0.5, 0.1, 0.01])
@pytest.mark.parametrize("e_inf", [0.0, 0.01, 0.05])
@pytest.mark.parametrize("tau", [0, 3, 20, math.inf])
def test_qber_series_grid(p0, e_inf, tau):
    series = qber_avg_series(e_inf, p0, tau, 5000)
    assert series == pytest.approx(qber_avg_closed(e_inf, p0, tau), rel=1e-6, abs=1e-15)


@given(st.floats(0.0, 0.5), st.floats(1e-4, 1.0), st.floats(0.0, 1e6))
def test_qber_between_e_inf_and_half(e_inf, p0, tau):
    e = qber_avg_closed(e_inf, p0, tau)
    assert e_inf - 1e-15 <= e <= 0.5 + 1e-15


@pytest.mark.parametrize("p0", [0.5, 0.1, 1e-2, 1e-3, 1e-4])
@pytest.mark.parametrize("e_inf", [0.0, 1e-4, 0.05])
def test_tau_min_round_trip(p0, e_inf):
    tau = tau_min_sps(e_inf, p0)
    assert abs(qber_avg_closed(e_inf, p0, tau) - 0.11) <= 1e-9


def test_tau_min_asymptote():
    p0 = 1e-6
    assert tau_min_sps(0.0, p0) * p0 == pytest.approx(math.log(0.22) / -1.0, abs=1e-4)
    assert tau_min_sps(0.0, p0) * p0 == pytest.approx(1.514, abs=0.01)


def test_tau_min_errors():
    with pytest.raises(NoSolutionError):
        tau_min_sps(0.11, 0.1)
    with pytest.raises(ValueError):
        tau_min_sps(0.0, 0.0)


def test_tau_min_at_400_km(device):
    e_inf = qber_infty(BsmPoint(device.eta_md, device.p_d))
    tau = tau_min_sps(e_inf, 10**-3.4)
    assert 3.7e3 < tau < 3.9e3


def test_repeater_rate_at_zero_distance(device):
    rep = repeater_rate_sps(SpsScenario(device, LinkConfig(0.0)))
    e = qber_infty(BsmPoint(0.12, 1e-6))
    expected = p_bsm_single(BsmPoint(0.12, 1e-6)) * (1 - 2 * h2(e))
    assert rep.avg_attempts == pytest.approx(1 / rep.p_bsm, rel=1e-12)
    assert rep.skr_per_pulse == pytest.approx(expected, rel=1e-12)
    assert rep.skr_per_pulse == pytest.approx(7.195e-3, abs=1e-5)
    assert rep.skr_per_second == pytest.approx(rep.skr_per_pulse * 1e8)


def test_repeater_rate_two_tau_min_close_to_perfect(device):
    link = LinkConfig(400.0)
    tau = tau_min_sps(qber_infty(BsmPoint(device.eta_md, device.p_d)), link.eta_t)
    perfect = repeater_rate_sps(SpsScenario(device, link)).skr_per_pulse
    two = repeater_rate_sps(SpsScenario(device, link, MemoryModel(2 * tau))).skr_per_pulse
    assert perfect / 2 < two <= perfect


def test_repeater_rate_vanishes_at_tiny_p0(device):
    rep = repeater_rate_sps(SpsScenario(device, LinkConfig(3000.0), MemoryModel(10.0)))
    assert rep.skr_per_pulse == 0.0
    assert rep.skr_signed < 0.0
    assert not rep.feasible


def test_repeater_rejects_depolarizing(device):
    with pytest.raises(ValueError):
        repeater_rate_sps(SpsScenario(device, LinkConfig(10.0), MemoryModel(5.0, DecoherenceModel.DEPOLARIZING)))


def test_relay_rate_examples():
    d = DeviceParams(eta_d=0.2, p_d=0.0, eta_m=0.3)
    rel = relay_rate_sps(d, LinkConfig(0.0))
    assert rel.avg_attempts == pytest.approx(50.0, rel=1e-12)
    for distance in (10.0, 150.0):
        rel = relay_rate_sps(d, LinkConfig(distance))
        assert rel.qber_x == rel.qber_z == 0.0
        assert rel.skr_per_pulse == pytest.approx((rel.p0 * 0.2) ** 2 / 2, rel=1e-12)


@settings(max_examples=50)
@given(st.floats(0.0, 600.0), st.floats(0.0, 50.0))
def test_repeater_monotone_in_distance(distance, step):
    d = DeviceParams()
    a = repeater_rate_sps(SpsScenario(d, LinkConfig(distance), MemoryModel(1e4))).skr_per_pulse
    b = repeater_rate_sps(SpsScenario(d, LinkConfig(distance + step), MemoryModel(1e4))).skr_per_pulse
    assert b <= a * (1 + 1e-12)


@settings(max_examples=50)
@given(st.floats(0.0, 1e5), st.floats(0.0, 1e4))
def test_repeater_monotone_in_tau(tau, step):
    d, link = DeviceParams(), LinkConfig(300.0)
    a = repeater_rate_sps(SpsScenario(d, link, MemoryModel(tau))).skr_per_pulse
    b = repeater_rate_sps(SpsScenario(d, link, MemoryModel(tau + step))).skr_per_pulse
    assert b >= a * (1 - 1e-12)


@settings(max_examples=50)
@given(st.floats(0.05, 0.95), st.floats(0.0, 0.05))
def test_repeater_monotone_in_eta_m(eta_m, step):
    link, mem = LinkConfig(250.0), MemoryModel(2e3)
    a = repeater_rate_sps(SpsScenario(DeviceParams(eta_m=eta_m), link, mem)).skr_per_pulse
    b = repeater_rate_sps(SpsScenario(DeviceParams(eta_m=eta_m + step), link, mem)).skr_per_pulse
    assert b >= a * (1 - 1e-12)


def test_crossover_is_single_sign_change(device):
    distance = crossover_distance(device)
    grid = np.geomspace(10.0, 500.0, 50)
    sign = []
    for x in grid:
        link = LinkConfig(float(x))
        rep = repeater_rate_sps(SpsScenario(device, link)).skr_per_pulse
        rel = relay_rate_sps(device, link).skr_per_pulse
        sign.append(rep > rel)
    assert sum(a != b for a, b in zip(sign, sign[1:])) == 1
    assert not sign[0] and sign[-1]
    below = LinkConfig(distance - 1.0)
    above = LinkConfig(distance + 1.0)
    assert repeater_rate_sps(SpsScenario(device, below)).skr_per_pulse < relay_rate_sps(device, below).skr_per_pulse
    assert repeater_rate_sps(SpsScenario(device, above)).skr_per_pulse > relay_rate_sps(device, above).skr_per_pulse


def test_crossover_no_sign_change(device):
    with pytest.raises(NoSolutionError):
        crossover_distance(device, lo_km=200.0, hi_km=300.0)
