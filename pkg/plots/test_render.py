import subprocess
import sys
from pathlib import Path

import pytest

from render import (FigureSpec, PlotInputError, PRESETS, read_rows, render,
                    spec_dl_power_by_scheme_and_csi, spec_ul_power_by_arch)

HEADER = ("rate_bps_hz,arch,scheme,tau_sq,feasible,p_mue_ul_w,p_sca_ul_w,"
          "p_sue_ul_w,p_bs_dl_w,p_sca_dl_w,mc_sinr_relerr,area_tput_gbps_km2")


def write_sweep(path: Path, tau_sq=0.1, arch="hetnet", scheme="rzf",
                infeasible_from=None):
    rows = [HEADER]
    for i, rate in enumerate([0.5, 1.0, 1.5, 2.0]):
        feas = infeasible_from is None or rate < infeasible_from
        if feas:
            p = 0.01 * (1 + i)
            rows.append(f"{rate},{arch},{scheme},{tau_sq},true,{p},{2*p},"
                        f"2e-4,{p/2},{3*p},0.03,4.8")
        else:
            rows.append(f"{rate},{arch},{scheme},{tau_sq},false,nan,nan,nan,"
                        "nan,nan,nan,nan")
    path.write_text("\n".join(rows) + "\n")
    return path


def test_render_lines_and_markers(tmp_path):
    a = write_sweep(tmp_path / "a.csv")
    m = write_sweep(tmp_path / "a_mc.csv")
    out = render(spec_ul_power_by_arch([a], [m], tmp_path / "fig.png"))
    assert Path(out).stat().st_size > 5000


def test_render_multi_csi_families(tmp_path):
    inputs = [write_sweep(tmp_path / f"t{i}.csv", tau_sq=t)
              for i, t in enumerate((0.0, 0.1, 0.3))]
    spec = FigureSpec(inputs=inputs, y_columns=["p_mue_ul_w", "p_sca_ul_w"],
                      out_path=str(tmp_path / "csi.png"), group_columns=["tau_sq"])
    assert Path(render(spec)).exists()


def test_render_divergence_wall(tmp_path):
    a = write_sweep(tmp_path / "rzf.csv", tau_sq=0.3, scheme="rzf",
                    infeasible_from=1.8)
    b = write_sweep(tmp_path / "zf.csv", tau_sq=0.3, scheme="zf",
                    infeasible_from=1.5)
    out = render(spec_dl_power_by_scheme_and_csi([a, b], [], tmp_path / "wall.png"))
    assert Path(out).stat().st_size > 5000


def test_all_presets_render(tmp_path):
    a = write_sweep(tmp_path / "a.csv")
    for name, builder in PRESETS.items():
        out = builder([a], [], tmp_path / f"{name}.png")
        assert Path(render(out)).exists()


def test_missing_column_reports_path(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("rate_bps_hz,arch,scheme,tau_sq,feasible\n1.0,hetnet,rzf,0.1,true\n")
    with pytest.raises(PlotInputError, match=r"p_bs_dl_w.*bad\.csv"):
        render(FigureSpec(inputs=[bad], y_columns=["p_bs_dl_w"],
                          out_path=str(tmp_path / "x.png")))
    assert not (tmp_path / "x.png").exists()


def test_empty_csv_rejected(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text(HEADER + "\n")
    with pytest.raises(PlotInputError, match="no data rows"):
        read_rows(str(empty), ["rate_bps_hz"])
    out = tmp_path / "never.png"
    with pytest.raises(PlotInputError):
        render(FigureSpec(inputs=[empty], y_columns=["p_bs_dl_w"],
                          out_path=str(out)))
    assert not out.exists()


def test_missing_file_reported(tmp_path):
    with pytest.raises(PlotInputError, match="not found"):
        render(FigureSpec(inputs=[tmp_path / "ghost.csv"],
                          y_columns=["p_bs_dl_w"], out_path=str(tmp_path / "x.png")))


def test_cli_exit_codes(tmp_path):
    a = write_sweep(tmp_path / "a.csv")
    script = Path(__file__).with_name("render.py")
    ok = subprocess.run([sys.executable, str(script), "--preset", "dl-by-arch",
                         "--inputs", str(a), "--out", str(tmp_path / "ok.png")],
                        capture_output=True, text=True)
    assert ok.returncode == 0
    assert (tmp_path / "ok.png").exists()
    bad = subprocess.run([sys.executable, str(script), "--inputs",
                          str(tmp_path / "ghost.csv"), "--out",
                          str(tmp_path / "no.png")],
                         capture_output=True, text=True)
    assert bad.returncode == 2
    assert "not found" in bad.stderr


def test_deterministic_output_bytes(tmp_path):
    a = write_sweep(tmp_path / "a.csv")
    spec = spec_ul_power_by_arch([a], [], tmp_path / "one.png")
    render(spec)
    first = (tmp_path / "one.png").read_bytes()
    spec2 = spec_ul_power_by_arch([a], [], tmp_path / "two.png")
    render(spec2)
    assert first == (tmp_path / "two.png").read_bytes()
