import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ramstap._validation import InvalidDimensionError
from ramstap.scene import (
    RadarConfig, SnapshotSet, boresight_azimuth, brennan_rank, draw_snapshots, exact_ccm,
    make_clutter_scenario, patch_frequencies, smi_ccm, space_steering, space_time_steering,
    steering_matrix, time_steering, wrap_frequency)

# Flat-earth geometry of the default scene, evaluated by hand:
# elevation = asin(9000 / 20000), Doppler scale = 2 * 50 / (0.667 * 300), d / lambda = 0.5.
COS_EL = math.cos(math.asin(9000 / 20000))
DOPPLER_AHEAD = 2 * 50 / (0.667 * 300) * COS_EL   # 0.446291...
SPATIAL_ENDFIRE = 0.5 * COS_EL                     # 0.446514...


def test_frozen_geometry_constants():
    assert DOPPLER_AHEAD == pytest.approx(0.446291, abs=1e-6)
    assert SPATIAL_ENDFIRE == pytest.approx(0.446514, abs=1e-6)


@pytest.mark.parametrize("f, expected", [
    (0.5, 0.5), (-0.5, 0.5), (0.7, -0.3), (1.0, 0.0), (-0.25, -0.25), (2.4, 0.4)])
def test_wrap_frequency(f, expected):
    assert wrap_frequency(f) == pytest.approx(expected, abs=1e-12)


@given(st.floats(-50, 50, allow_nan=False))
def test_wrap_frequency_range_and_congruence(f):
    w = wrap_frequency(f)
    assert -0.5 < w <= 0.5
    assert abs((w - f) - round(w - f)) < 1e-9


def test_steering_vectors_are_time_major():
    N, M, f_d, f_s = 3, 4, 0.13, -0.31
    s = space_time_steering(f_d, f_s, N, M)
    for n in range(N):
        for m in range(M):
            assert s[n * M + m] == pytest.approx(np.exp(2j * np.pi * (n * f_d + m * f_s)))
    np.testing.assert_allclose(np.abs(s), 1.0)
    assert time_steering(f_d, N)[0] == 1 and space_steering(f_s, M)[0] == 1


def test_steering_matrix_matches_single_vectors():
    f_d = np.array([0.1, -0.4, 0.5])
    f_s = np.array([0.2, 0.0, -0.15])
    S = steering_matrix(f_d, f_s, 4, 3)
    for i in range(3):
        np.testing.assert_allclose(S[:, i], space_time_steering(f_d[i], f_s[i], 4, 3))


def test_patch_frequencies_sidelooking_ahead():
    f_d, f_s = patch_frequencies(RadarConfig(), 0.0)
    assert f_d == pytest.approx(DOPPLER_AHEAD, abs=1e-9)
    assert f_s == pytest.approx(SPATIAL_ENDFIRE, abs=1e-9)


def test_patch_frequencies_forward_looking_abeam():
    cfg = RadarConfig(crab_angle=math.pi / 2)
    f_d, f_s = patch_frequencies(cfg, math.pi / 2)
    assert f_d == pytest.approx(0.0, abs=1e-12)
    assert f_s == pytest.approx(SPATIAL_ENDFIRE, abs=1e-9)


def test_boresight_has_zero_spatial_frequency():
    for psi in (0.0, math.pi / 4, math.pi / 2):
        cfg = RadarConfig(crab_angle=psi)
        assert patch_frequencies(cfg, boresight_azimuth(cfg))[1] == pytest.approx(0.0, abs=1e-12)


def test_sidelooking_ridge_is_a_line():
    # With zero crab angle, f_d / f_s = 2 v / (d f_r) for every patch.
    scenario = make_clutter_scenario(RadarConfig())
    f_d = np.array([p.doppler_freq for p in scenario])
    f_s = np.array([p.spatial_freq for p in scenario])
    beta = 2 * 50 / (0.3335 * 300)
    np.testing.assert_allclose(f_d, beta * f_s, atol=1e-12)


def test_scenario_powers_sum_to_clutter_power():
    scenario = make_clutter_scenario(RadarConfig())
    assert len(scenario) == 360
    powers = [p.power for p in scenario]
    assert powers[0] == pytest.approx(1e4 / 360)
    assert sum(powers) == pytest.approx(1e4)


def test_single_patch_sits_at_boresight():
    cfg = RadarConfig(num_patches=1, crab_angle=0.3)
    (patch,) = make_clutter_scenario(cfg)
    assert patch.azimuth == pytest.approx(boresight_azimuth(cfg))


def test_no_clutter_at_minus_infinite_cnr():
    cfg = RadarConfig(cnr_db=-math.inf)
    assert all(p.power == 0 for p in make_clutter_scenario(cfg))
    np.testing.assert_allclose(exact_ccm(make_clutter_scenario(cfg), cfg), np.eye(64))


def test_single_patch_ccm_is_rank_one_update():
    cfg = RadarConfig(num_patches=1, num_pulses=4, num_elements=3, cnr_db=20)
    scenario = make_clutter_scenario(cfg)
    R = exact_ccm(scenario, cfg)
    w = np.linalg.eigvalsh(R)
    assert w[-1] == pytest.approx(100 * 12 + 1)
    np.testing.assert_allclose(w[:-1], 1.0, atol=1e-9)


def test_brennan_rank_of_default_scene():
    assert brennan_rank(RadarConfig()) == 15


def test_draw_snapshots_is_seeded():
    cfg = RadarConfig()
    scenario = make_clutter_scenario(cfg)
    a = draw_snapshots(scenario, cfg, 3, 7)
    b = draw_snapshots(scenario, cfg, 3, 7)
    c = draw_snapshots(scenario, cfg, 3, 8)
    np.testing.assert_array_equal(a.data, b.data)
    assert not np.allclose(a.data, c.data)
    assert a.data.shape == (64, 3) and a.seed == 7


def test_snapshot_statistics_match_exact_ccm():
    cfg = RadarConfig(num_pulses=2, num_elements=2, num_patches=20, cnr_db=10)
    scenario = make_clutter_scenario(cfg)
    snaps = draw_snapshots(scenario, cfg, 40000, 0)
    R = exact_ccm(scenario, cfg)
    assert np.linalg.norm(smi_ccm(snaps) - R) / np.linalg.norm(R) < 0.03


def test_smi_is_hermitian_average():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
    R = smi_ccm(SnapshotSet(X, 2, 2))
    np.testing.assert_allclose(R, X @ X.conj().T / 5)
    np.testing.assert_allclose(R, R.conj().T)


def test_snapshot_set_container():
    X = np.arange(12, dtype=complex).reshape(4, 3)
    snaps = SnapshotSet(X, 2, 2)
    assert len(snaps) == 3 and snaps.dims == (2, 2)
    np.testing.assert_array_equal(list(snaps)[1], X[:, 1])
    np.testing.assert_array_equal(snaps.permuted([2, 0, 1]).data, X[:, [2, 0, 1]])
    with pytest.raises(ValueError):
        SnapshotSet(np.zeros((5, 2)), 2, 2)


@pytest.mark.parametrize("kwargs", [
    {"num_pulses": 0}, {"num_elements": 2.5}, {"prf": 0}, {"noise_power": -1},
    {"range": 100.0}, {"cnr_db": math.nan}, {"num_patches": 0}])
def test_radar_config_validation(kwargs):
    with pytest.raises((ValueError, InvalidDimensionError)):
        RadarConfig(**kwargs)
