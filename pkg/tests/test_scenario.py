import dataclasses
import json
import math

import numpy as np
import pytest

from rsma_mgm.scenario import (USER_ORDER, Geometry, ScenarioError, WidebandCsit, channel_metrics, design_csit,
                               dumps_scenario, estimate_csi_ls, exponential_profile, frequency_response,
                               generate_channels, load_scenario, los_gains, pathloss_difference_db,
                               save_scenario, scenario_from_dict, spatial_correlation, true_wideband,
                               wideband_average)

# (alpha band dB, rho band) per case, cases 1..9
BANDS = {
    1: ((-1.0, -0.4), (0.44, 0.99)),
    2: ((-1.5, -1.2), (0.55, 0.76)),
    3: ((-1.8, -1.6), (0.18, 0.62)),
    4: ((-6.3, -5.4), (0.43, 0.84)),
    5: ((-6.7, -5.5), (0.24, 0.76)),
    6: ((-6.9, -6.3), (0.17, 0.57)),
    7: ((-15.0, -11.0), (0.42, 0.93)),
    8: ((-19.0, -17.0), (0.39, 0.88)),
    9: ((-19.0, -16.5), (0.15, 0.61)),
}


def test_pathloss_difference_is_amplitude_ratio():
    h1 = np.array([1.0, 0.0])
    h2 = np.array([0.1, 0.0])
    assert pathloss_difference_db(h1, h2) == pytest.approx(-10.0)
    with pytest.raises(ValueError):
        pathloss_difference_db(np.zeros(2), h2)


def test_spatial_correlation_bounds(rng):
    for _ in range(50):
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        rho = spatial_correlation(a, b)
        assert 0.0 <= rho <= 1.0
        assert spatial_correlation(a, 3j * a) == pytest.approx(1.0)
    assert spatial_correlation(np.array([1, 0]), np.array([0, 1])) == 0.0


def test_estimate_csi_ls_zero_on_unused_bins():
    known = np.array([1.0, 0.0, -1.0, 1.0])
    rx = np.array([2.0, 5.0, 3.0, 1j])
    est = estimate_csi_ls(rx, known)
    np.testing.assert_allclose(est, [2.0, 0.0, -3.0, 1j])
    with pytest.raises(ValueError):
        estimate_csi_ls(rx[:3], known)
    with pytest.raises(ValueError):
        estimate_csi_ls(rx, np.zeros(4))


def test_wideband_average_mean_and_spread():
    est = np.array([[1.0, 0.0], [3.0, 2.0], [100.0, 100.0]])
    w = wideband_average(est, occupied=[0, 1])
    np.testing.assert_allclose(w.h_hat, [2.0, 1.0])
    assert w.spread == pytest.approx(2.0)          # each row is (1, 1) away from the mean
    with pytest.raises(ValueError):
        wideband_average(np.zeros((0, 2)))


def test_design_csit_scaling():
    c = WidebandCsit(np.array([2.0, 0.0]), 1, 1, spread=0.5)
    (d,) = design_csit([c], sigma2=1.0, tx_power=4.0)
    scale = math.sqrt(1.0 + 4.0 * 0.5 / 2)
    np.testing.assert_allclose(d.h_hat, c.h_hat / scale)
    assert d.spread == pytest.approx(0.5 / scale ** 2)
    with pytest.raises(ValueError):
        design_csit([c], 0.0, 1.0)


def test_frequency_response_flat_for_single_tap():
    taps = np.array([[0.5 + 0.5j], [1.0]])
    G = frequency_response(taps, 8)
    assert G.shape == (8, 2)
    np.testing.assert_allclose(G, np.tile([0.5 + 0.5j, 1.0], (8, 1)))


def test_exponential_profile():
    mp = exponential_profile(3, 0.05, 6)
    assert mp.n_taps == 3
    assert sum(mp.tap_powers) == pytest.approx(0.05)
    assert list(mp.delays()) == [2, 4, 6]
    assert all(a > b for a, b in zip(mp.tap_powers, mp.tap_powers[1:]))


def test_los_gain_magnitude_is_inverse_distance():
    geom = Geometry(((0.0, 0.0), (0.0, 0.1)), ((2.0, 0.0), (2.0, 0.0), (4.0, 0.0), (4.0, 0.0)), 0.12,
                    (0.0, 0.0, 20.0, 20.0))
    g = los_gains(geom)
    assert abs(g[0, 0]) == pytest.approx(0.5)
    assert abs(g[2, 0]) == pytest.approx(0.25 * 0.1)


def test_generate_channels_deterministic(nine_cases):
    c = nine_cases[0]
    a, b = generate_channels(c), generate_channels(c)
    assert [(ch.group, ch.user) for ch in a] == list(USER_ORDER)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.h, y.h)
    other = generate_channels(c, rng_seed=99)
    assert not np.array_equal(a[0].h, other[0].h)
    assert a[0].h.shape == (64, 2)


def test_channel_convention_matches_taps(nine_cases):
    ch = generate_channels(nine_cases[4])[2]
    k = 5
    n = np.arange(ch.taps.shape[1])
    expect = np.conj((ch.taps * np.exp(-2j * np.pi * k * n / 64)).sum(axis=1))
    np.testing.assert_allclose(ch.h[k], expect, atol=1e-14)


@pytest.mark.parametrize("case", range(1, 10))
def test_nine_cases_within_bands(nine_cases, case):
    m = channel_metrics(true_wideband(generate_channels(nine_cases[case - 1])))
    (a_lo, a_hi), (r_lo, r_hi) = BANDS[case]
    assert a_lo <= m["alpha_mean"] <= a_hi
    assert r_lo <= m["rho_mean"] <= r_hi


def test_correlation_decreases_within_triples(nine_cases):
    rho = [channel_metrics(true_wideband(generate_channels(c)))["rho_mean"] for c in nine_cases]
    for t in range(3):
        assert rho[3 * t] > rho[3 * t + 1] > rho[3 * t + 2]


def test_far_field_enforced(nine_cases):
    geom = nine_cases[0].geometry
    near = Geometry(geom.tx_positions, ((0.1, 0.0),) + geom.user_positions[1:], geom.wavelength)
    with pytest.raises(ScenarioError, match="Fraunhofer"):
        dataclasses.replace(nine_cases[0], geometry=near)


@pytest.mark.parametrize("field,value", [
    ("n_tx", 1), ("n_subcarriers", 48), ("noise_variance", 0.0), ("tx_power", float("inf")),
])
def test_validation_errors(nine_cases, field, value):
    with pytest.raises(ScenarioError) as err:
        dataclasses.replace(nine_cases[0], **{field: value})
    assert err.value.field == field


def test_scenario_json_round_trip(nine_cases, tmp_path):
    c = nine_cases[7]
    path = save_scenario(c, tmp_path / "s.json")
    back = load_scenario(path)
    assert back == c
    assert dumps_scenario(back) == dumps_scenario(c)


def test_scenario_rejects_unknown_and_version(nine_cases):
    d = json.loads(dumps_scenario(nine_cases[0]))
    with pytest.raises(ScenarioError, match="unknown"):
        scenario_from_dict({**d, "colour": 1})
    with pytest.raises(ScenarioError, match="geometry.foo"):
        scenario_from_dict({**d, "geometry": {**d["geometry"], "foo": 0}})
    with pytest.raises(ScenarioError, match="schema_version"):
        scenario_from_dict({**d, "schema_version": 2})
    del d["tx_power"]
    with pytest.raises(ScenarioError, match="tx_power"):
        scenario_from_dict(d)


def test_load_scenario_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ScenarioError, match="invalid JSON"):
        load_scenario(p)
