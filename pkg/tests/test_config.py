import math

import pytest

from hetsim.config import (ConfigError, PathlossModel, ScenarioConfig,
                           csi_error_from_speed, parse_config, serialize_config)


def test_empty_config_gives_defaults():
    cfg = parse_config("")
    assert cfg.n_antennas == 128
    assert cfg.n_sca == 16
    assert cfg.sca_pitch_m == 125.0
    assert cfg.small_cell_radius_m == 35.0
    assert cfg.pathloss_exp == 3.5
    assert cfg.noise_power_dbm == -104.0
    assert cfg.bandwidth_hz == 10e6
    assert abs(cfg.noise_w - 10 ** (-13.4)) < 1e-20


def test_comments_and_values():
    cfg = parse_config("# comment\nn_antennas = 64\nspeed_kmh = 50  # fast\n")
    assert cfg.n_antennas == 64
    assert cfg.speed_kmh == 50.0


def test_unknown_key_rejected_with_line():
    with pytest.raises(ConfigError, match=r"line 2.*bogus"):
        parse_config("n_mue = 128\nbogus = 1\n")


def test_bad_value_rejected():
    with pytest.raises(ConfigError, match=r"n_antennas"):
        parse_config("n_antennas = many\n")


def test_divisibility_rule_named():
    with pytest.raises(ConfigError, match="divisible"):
        parse_config("n_mue = 7\n")


def test_round_trip():
    cfg = parse_config("speed_kmh = 50\nn_antennas = 96\nn_mue = 96\nn_sca = 16\n"
                       "correlated = true\ncell_side_m = 480\nsca_pitch_m = 120\n")
    assert parse_config(serialize_config(cfg)) == cfg


def test_pitch_must_tile_cell():
    with pytest.raises(ConfigError, match="sca_pitch"):
        parse_config("sca_pitch_m = 100\n")


def test_pathloss_reference_points():
    model = PathlossModel()
    # exactly the configured attenuation at the cutoff, 3 dB more at the origin
    assert model.gain(25.0) == pytest.approx(10 ** (-8.65), rel=1e-12)
    assert model.gain(0.0) == pytest.approx(2 * 10 ** (-8.65), rel=1e-12)


def test_pathloss_far_field_asymptote():
    model = PathlossModel()
    approx = 2 * model.ref_gain * (model.cutoff_m / 250.0) ** model.exponent
    assert model.gain(250.0) == pytest.approx(approx, rel=5e-3)


def test_pathloss_monotone_decreasing():
    model = PathlossModel(exponent=2.7, cutoff_m=10.0, ref_gain=1e-8)
    dists = [0.0, 0.5, 3.0, 10.0, 55.0, 400.0, 8000.0]
    gains = [model.gain(d) for d in dists]
    assert all(a > b > 0 for a, b in zip(gains, gains[1:]))


def test_csi_error_chart_speeds():
    # 2.4 GHz carrier, 1 ms slots: 15 km/h lands near 0.1, 50 km/h near 0.3
    lam = 0.125
    assert csi_error_from_speed(15 / 3.6, lam, 1e-3, 0.08) == pytest.approx(0.1, abs=5e-3)
    assert csi_error_from_speed(50 / 3.6, lam, 1e-3, 0.08) == pytest.approx(0.3, abs=5e-3)


def test_csi_error_static_is_floor():
    assert csi_error_from_speed(0.0, 0.125, 1e-3, 0.08) == 0.08


def test_csi_error_rejects_useless_estimate():
    with pytest.raises(ConfigError, match="uncorrelated"):
        csi_error_from_speed(500 / 3.6, 0.125, 1e-3, 0.9)


def test_config_tau_sq_uses_speed():
    cfg = ScenarioConfig()
    assert cfg.tau_sq == pytest.approx(0.1, abs=5e-3)
    assert cfg.with_overrides(tau_sq_override=0.3).tau_sq == 0.3


def test_exponent_must_exceed_two():
    with pytest.raises(ConfigError):
        PathlossModel(exponent=2.0)


def test_validation_catches_negative_rate():
    with pytest.raises(ConfigError, match="mue_rate"):
        ScenarioConfig(mue_rate_bps_hz=-1.0)
