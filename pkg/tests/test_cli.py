import json
import math
from pathlib import Path

import numpy as np
import pytest

from vanishlab import _io
from vanishlab.cli import main
from vanishlab.config import config_from_dict, load_config
from vanishlab.errors import ConfigError, InvalidSpecError
from vanishlab.grid import RadialFunction, RadialGrid
from vanishlab.scenarios import REGISTRY, build_context, list_scenarios, plotdata_rows


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_list(capsys):
    assert main(["list"]) == 0
    names = capsys.readouterr().out.split()
    assert names == list_scenarios()
    assert len(names) == 17


def test_run_writes_report_csv_figure(tmp_path, capsys):
    cfg = write(tmp_path, "c.toml", f'scenario = "drift-order"\noutput_dir = "{tmp_path}/out"\n')
    assert main(["run", str(cfg)]) == 0
    out = tmp_path / "out" / "drift-order"
    assert {p.name for p in out.iterdir()} == {"report.json", "manifest.json",
                                                "solution.csv", "solution.png"}
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] and report["report_type"] == "DriftReport"
    assert (out / "solution.png").read_bytes()[:4] == b"\x89PNG"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_file"] == str(cfg)
    assert "PASS drift-order" in capsys.readouterr().out


def test_lab_out_dir_overrides(tmp_path, monkeypatch):
    monkeypatch.setenv("LAB_OUT_DIR", str(tmp_path / "env"))
    cfg = write(tmp_path, "c.toml", 'scenario = "desingularize"\noutput_dir = "ignored"\n')
    assert main(["run", str(cfg)]) == 0
    assert (tmp_path / "env" / "desingularize" / "report.json").exists()


def test_failed_check_exit_code(tmp_path):
    cfg = write(tmp_path, "c.toml", f'scenario = "drift-order"\noutput_dir = "{tmp_path}"\n'
                                    "[tolerances]\nslope_rel = 1e-12\n")
    assert main(["run", str(cfg)]) == 1


@pytest.mark.parametrize("text", [
    'scenario = "nope"\n',
    'scenario = "drift-order"\nextra = 1\n',
    'scenario = "drift-order"\n[params]\nmuu = 1.0\n',
    'scenario = "drift-order"\n[tolerances]\nslope_rel = -1.0\n',
    'scenario = "drift-order"\n[grid]\nr_min = 5.0\n',
    'scenario = "drift-order"\nseed = -3\n',
    'scenario = "hardy-order"\n[potential]\nname = "hardy"\ncolour = 1\n',
    'scenario = "hardy-order"\n[potential]\nname = "composite"\n',
    'scenario = [',
])
def test_config_errors_exit_2(tmp_path, text, capsys):
    cfg = write(tmp_path, "bad.toml", text)
    assert main(["run", str(cfg)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_missing_config_exit_2(tmp_path):
    assert main(["run", str(tmp_path / "missing.toml")]) == 2


def test_bad_config_fails_before_any_run(tmp_path):
    good = write(tmp_path, "a.toml", f'scenario = "desingularize"\noutput_dir = "{tmp_path}"\n')
    bad = write(tmp_path, "b.toml", 'scenario = "nope"\n')
    assert main(["run", str(good), str(bad)]) == 2
    assert not (tmp_path / "desingularize").exists()


def test_numerical_failure_exit_3(tmp_path):
    # sample radii below the grid: a domain failure inside the solver, not a config error
    cfg = write(tmp_path, "c.toml", f'scenario = "green-bound"\noutput_dir = "{tmp_path}"\n'
                                    "[params]\nl_max = 2\nr_range = [1e-6, 1.0]\n")
    assert main(["run", str(cfg)]) == 3


def test_parallel_run_matches_serial(tmp_path):
    names = ["desingularize", "hardy-inequality", "lower-bound"]
    for mode, jobs in (("serial", "1"), ("parallel", "3")):
        cfgs = [str(write(tmp_path, f"{mode}-{n}.toml",
                          f'scenario = "{n}"\noutput_dir = "{tmp_path}/{mode}"\n'))
                for n in names]
        assert main(["run", *cfgs, "--jobs", jobs]) == 0
    for n in names:
        assert ((tmp_path / "serial" / n / "report.json").read_bytes()
                == (tmp_path / "parallel" / n / "report.json").read_bytes())


def test_plotdata(tmp_path):
    cfg = write(tmp_path, "c.toml", f'scenario = "form-bound"\noutput_dir = "{tmp_path}"\n')
    assert main(["run", str(cfg)]) == 0
    report = tmp_path / "form-bound" / "report.json"
    assert main(["plotdata", str(report)]) == 0
    lines = (tmp_path / "form-bound" / "report.plotdata.csv").read_text().splitlines()
    assert lines[0] == "series,x,y" and len(lines) == 4


def test_plotdata_generic_and_malformed(tmp_path):
    rows = plotdata_rows({"report_type": "Other", "results": {"a": 1.5, "b": [1, 2], "c": "x"}})
    assert rows == [("a", 0, 1.5), ("b", 0, 1), ("b", 1, 2)]
    with pytest.raises(ConfigError):
        plotdata_rows({"results": {}})
    bad = write(tmp_path, "r.json", "{not json")
    assert main(["plotdata", str(bad)]) == 2


def test_sawyer_subcommand(tmp_path):
    out = tmp_path / "s.json"
    assert main(["sawyer", "--estimate", "s1", "--n-max", "3", "--samples", "500",
                 "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["results"]["samples"] == 500
    assert len(plotdata_rows(data)) == 3


def test_prop22_subcommand(capsys):
    assert main(["prop22", "--p", "3", "--probes", "5", "--n-points", "512"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["kappa_p"] == pytest.approx(9 / 8)


def test_every_scenario_has_valid_defaults():
    for name, sc in REGISTRY.items():
        _, ctx = build_context(config_from_dict({"scenario": name}))
        assert ctx.params == sc.params and ctx.tol == sc.tolerances
        assert all(v > 0 for v in sc.tolerances.values())


def test_shipped_configs_load():
    configs = sorted((Path(__file__).parent.parent / "configs").glob("*.toml"))
    assert {load_config(c).scenario for c in configs} == set(list_scenarios())


def test_json_float_format():
    text = _io.dumps({"b": [0.1, 1.0, math.inf], "a": {"x": np.float64(1 / 3)}, "n": None})
    assert text.index('"a"') < text.index('"b"')
    assert "0.33333333333333331" in text
    assert "[0.10000000000000001, 1.0, Infinity]" in text
    assert json.loads(text)["n"] is None


def test_radial_function_csv_roundtrip(tmp_path):
    grid = RadialGrid(n_points=128)
    f = RadialFunction.sample(grid, np.exp, l=2, note="x")
    path = tmp_path / "f.csv"
    f.to_csv(path)
    g = RadialFunction.from_csv(path, grid, l=2)
    assert g.l == 2 and np.array_equal(g.values, f.values) and g.grid == grid


def test_grid_validation_and_refinement():
    with pytest.raises(InvalidSpecError):
        RadialGrid(2.0, 10.0, 128)
    grid = RadialGrid(1e-3, 10.0, 129)
    fine = grid.refined(2)
    assert fine.n_points == 257 and fine.h == pytest.approx(grid.h / 2)
    assert np.array_equal(fine.r[::2], grid.r)
    assert grid.r[grid.nearest_index(0.5)] == pytest.approx(0.5, rel=grid.h)
