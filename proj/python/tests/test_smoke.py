import math

import pytest

import twinforge


def test_matrix_and_batches():
    ids = twinforge.default_matrix()
    assert len(ids) == 128
    assert len(set(ids)) == 128
    groups = twinforge.batches(16)
    assert [len(g) for g in groups] == [16] * 8


def test_case_id_parsing():
    info = twinforge.parse_case_id("v3_tiny-thick_fog-0000")
    assert info["model"] == "v3_tiny"
    assert info["weather"] == "thick_fog"
    assert info["time"] == "00:00"
    assert info["seed"] == twinforge.stable_hash("v3_tiny-thick_fog-0000")
    assert twinforge.parse_case_id("v3-sunny-1200") is None


def test_condition_anchor():
    c = twinforge.condition("clear", "12:00")
    assert c["visibility"] == 1.0
    assert c["ambient_light"] == 1.0
    with pytest.raises(ValueError):
        twinforge.condition("sunny", "12:00")


def test_dynamics_helpers():
    k, b = twinforge.suspension_coefficients(1000.0, 2.0 * math.pi, 0.5)
    assert b * b == pytest.approx(4 * 0.25 * k * 1000.0, rel=1e-9)
    left, right = twinforge.ackermann_angles(0.2, 2.5, 1.5)
    assert left < 0.2 < right
    rpm = twinforge.transmission_map_rpm(60 * 0.44704, 15.75 * 0.0254, 4.0, 1.0)
    assert round(rpm) == 2561


def test_lidar_closed_form():
    assert twinforge.lidar_flat_ground(2.0, 30.0) == pytest.approx(4.0, abs=1e-6)


def test_run_case_is_deterministic():
    a = twinforge.run_case("v3-clear-1200")
    b = twinforge.run_case("v3-clear-1200")
    assert a["csv"] == b["csv"]
    assert a["verdict"]["passed"]
    assert a["verdict"]["aeb_triggered"]
    again = twinforge.evaluate_csv("v3-clear-1200", a["csv"])
    assert again["min_dtc"] == a["verdict"]["min_dtc"]


def test_overrides_and_errors():
    r = twinforge.run_case("v3-clear-1200", overrides='{"t_max": 5}')
    assert r["verdict"]["duration"] <= 5.0 + 1e-9
    assert r["termination"] == "timeout"
    with pytest.raises(ValueError):
        twinforge.run_case("v3-clear-1200", overrides='{"warp": 1}')
    with pytest.raises(ValueError):
        twinforge.run_case("v9-clear-1200")


def test_format_rate():
    assert twinforge.format_rate(46, 64) == "71.88"
