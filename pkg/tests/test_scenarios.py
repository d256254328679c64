import dataclasses
import math

import numpy as np
import pytest

from hetsim.config import PathlossModel, ScenarioConfig
from hetsim.geometry import build_network
from hetsim.scenarios import (SWEEP_HEADER, build_architecture, class_power_means,
                              evaluate_point, expected_interference,
                              power_accounting, rate_sweep, solve_point)

NOISE = 10 ** (-13.4)


def table_cfg(**kw):
    base = dict(tau_sq_override=0.1)
    base.update(kw)
    return ScenarioConfig(**base)


# --------------------------------------------------------------------------
# architectures
# --------------------------------------------------------------------------

def test_hetnet_served_and_nulled_counts():
    cfg = table_cfg()
    arch = build_architecture("hetnet", cfg, build_network(cfg, 0))
    assert arch.n_served == 72
    assert arch.n_nulled == 8
    assert arch.served_class.count("MUE") == 64
    assert arch.served_class.count("SCA") == 8


def test_wired_has_no_backhaul_class():
    cfg = table_cfg()
    arch = build_architecture("wired", cfg, build_network(cfg, 0))
    assert arch.n_served == 64
    assert "SCA" not in arch.served_class
    assert arch.n_nulled == 8          # co-band cells still protected
    ul, dl = solve_point(arch, "rzf")
    means = class_power_means(arch, ul, dl)
    assert "sca_ul" not in means
    assert "sca_dl" in means


def test_mmimo_serves_sues_directly():
    cfg = table_cfg()
    arch = build_architecture("mmimo", cfg, build_network(cfg, 0))
    assert arch.n_served == 72
    assert arch.n_nulled == 0
    assert arch.served_class.count("SUE") == 8
    ul, dl = solve_point(arch, "rzf")
    means = class_power_means(arch, ul, dl)
    # direct small-cell users burn orders of magnitude more uplink power
    assert means["sue_ul"] > 0.05
    assert means["sue_ul"] == pytest.approx(0.22, rel=0.5)


def test_unknown_architecture_rejected():
    cfg = table_cfg()
    with pytest.raises(ValueError, match="unknown architecture"):
        build_architecture("mesh", cfg, build_network(cfg, 0))


def test_single_tier_equals_two_tier_without_small_cells():
    # strip the small-cell rows from both builds: identical solver inputs
    cfg = table_cfg()
    geom = build_network(cfg, 3)
    het = build_architecture("hetnet", cfg, geom)
    mm = build_architecture("mmimo", cfg, geom)
    n_macro = het.n_macro

    def macro_only(arch):
        return dataclasses.replace(
            arch, tag="macro",
            served_gamma=arch.served_gamma[:n_macro],
            served_tau_sq=arch.served_tau_sq[:n_macro],
            served_gain=arch.served_gain[:n_macro],
            served_class=list(arch.served_class[:n_macro]),
            served_theta=arch.served_theta[:n_macro],
            served_rate=arch.served_rate[:n_macro],
            nulled_gain_bs=np.zeros(0), sue_access_gain=np.zeros(0),
            sue_cross_gain=np.zeros((0, n_macro)), sue_rate=np.zeros(0))

    a, b = macro_only(het), macro_only(mm)
    sol_a = solve_point(a, "rzf")
    sol_b = solve_point(b, "rzf")
    assert np.array_equal(a.served_gain, b.served_gain)
    assert np.array_equal(sol_a[0].powers_served, sol_b[0].powers_served)
    assert sol_a[1].total_power_w == sol_b[1].total_power_w


# --------------------------------------------------------------------------
# accounting
# --------------------------------------------------------------------------

def test_accounting_identity_and_throughput():
    cfg = table_cfg()
    arch = build_architecture("hetnet", cfg, build_network(cfg, 0))
    ul, dl = solve_point(arch, "rzf")
    acct = power_accounting(arch, ul, dl, cfg)
    m = acct["class_means_w"]
    expect_ul = 64 * m["mue_ul"] + 8 * m["sca_ul"] + 8 * m["sue_ul"]
    expect_dl = m["bs_dl"] + 8 * m["sca_dl"]
    assert acct["ul_total_w"] == pytest.approx(expect_ul, rel=1e-12)
    assert acct["dl_total_w"] == pytest.approx(expect_dl, rel=1e-12)
    # 64 x 1.5 + 8 x 3 bit/s/Hz over 10 MHz and 0.25 km^2
    assert acct["area_tput_gbps_km2"] == pytest.approx(4.8, rel=1e-12)


def test_mue_throughput_decomposition():
    cfg = table_cfg()
    arch = build_architecture("hetnet", cfg, build_network(cfg, 0))
    ul, dl = solve_point(arch, "rzf")
    acct = power_accounting(arch, ul, dl, cfg)
    mue_part = 64 * 1.5 * 10e6 / 0.25 / 1e9
    sue_part = 8 * 3.0 * 10e6 / 0.25 / 1e9
    assert mue_part == pytest.approx(3.84)
    assert sue_part == pytest.approx(0.96)
    assert acct["area_tput_gbps_km2"] == pytest.approx(mue_part + sue_part)


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

def test_sweep_rows_and_header():
    cfg = table_cfg()
    report = rate_sweep(cfg, "hetnet", "rzf", [0.5, 1.0], trials=0, seed=0)
    text = report.to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == SWEEP_HEADER
    assert len(lines) == 3
    assert all(ln.split(",")[4] == "true" for ln in lines[1:])


def test_sweep_flags_infeasible_points():
    cfg = table_cfg(tau_sq_override=0.3)
    report = rate_sweep(cfg, "hetnet", "zf", [1.0, 2.0], trials=0, seed=0)
    flags = [p.feasible for p in report.points]
    assert flags == [True, False]
    assert math.isnan(report.points[1].p_mue_ul)


def test_power_blowup_window_near_wall():
    # tau^2 = 0.3: power grows mildly up to ~1.2 then explodes into the wall
    cfg = table_cfg(tau_sq_override=0.3)
    rates = [0.8, 1.2, 1.40, 1.45]
    vals = []
    for r in rates:
        pt = evaluate_point(cfg, "hetnet", "zf", r, trials=0, seed=0)
        assert pt.feasible
        vals.append(pt.p_bs_dl)
    assert vals[1] / vals[0] < 6.0
    assert vals[3] / vals[1] > 8.0
    pt = evaluate_point(cfg, "hetnet", "zf", 1.5, trials=0, seed=0)
    assert not pt.feasible


def test_wired_macro_power_close_to_hetnet():
    cfg = table_cfg()
    for rate in (1.0, 1.5):
        het = evaluate_point(cfg, "hetnet", "rzf", rate, trials=0, seed=0)
        wired = evaluate_point(cfg, "wired", "rzf", rate, trials=0, seed=0)
        assert wired.p_mue_ul == pytest.approx(het.p_mue_ul, rel=0.20)


def test_wired_small_cells_pay_for_lost_shielding():
    cfg = table_cfg()
    het = evaluate_point(cfg, "hetnet", "rzf", 1.5, trials=0, seed=0)
    wired = evaluate_point(cfg, "wired", "rzf", 1.5, trials=0, seed=0)
    assert wired.p_sca_dl > 2.0 * het.p_sca_dl
    assert wired.p_sca_dl == pytest.approx(2.69, rel=0.5)


def test_sweep_with_trials_populates_mc_columns():
    cfg = table_cfg()
    report = rate_sweep(cfg, "hetnet", "rzf", [1.5], trials=20, seed=0,
                        redraw_every=10)
    pt = report.points[0]
    assert pt.mc_relerr < 0.15
    assert pt.mc_p_bs_dl == pytest.approx(pt.p_bs_dl, rel=0.2)
    assert pt.nulling_residual < 1e-8
    mc_csv = report.to_csv(mc=True)
    assert format(pt.mc_p_bs_dl, ".12g") in mc_csv


# --------------------------------------------------------------------------
# density / separation tradeoff
# --------------------------------------------------------------------------

def test_interference_closed_form_matches_quadrature():
    model = PathlossModel()
    for d in np.geomspace(12.5, 1250.0, 9):
        hyp = expected_interference(5.12e-4, 0.083, model, float(d), method="hyp")
        quad = expected_interference(5.12e-4, 0.083, model, float(d), method="quad")
        assert hyp == pytest.approx(quad, rel=1e-6)


def test_interference_far_field_form():
    model = PathlossModel()
    d = 20 * model.cutoff_m
    val = expected_interference(5.12e-4, 0.083, model, d)
    ff = 4 * math.pi * 5.12e-4 * 0.083 * model.ref_gain / 1.5 \
        * model.cutoff_m ** 3.5 / d ** 1.5
    assert val == pytest.approx(ff, rel=0.01)


def test_interference_zero_density():
    assert expected_interference(0.0, 0.083, PathlossModel(), 27.5) == 0.0


def test_interference_decreasing_in_distance():
    model = PathlossModel()
    vals = [expected_interference(5.12e-4, 0.083, model, d) for d in (10, 30, 100, 400)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
