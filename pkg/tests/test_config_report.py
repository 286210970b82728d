import json

import pytest

from membrana.config import load_config, parse_config
from membrana.errors import ConfigError
from membrana.regions import Classification, Confirmation, GridSpec, RegionMap
from membrana.report import atomic_write, csv_text, export_csv, fmt, render_region_svg

GEOM = {"outer": [0.0, 1.0], "inner": [1 / 3, 2 / 3], "gamma1": 1.0, "gamma2": 2.0, "n_per_unit": 48}


def test_minimal_config_defaults():
    cfg = parse_config({"geometry": GEOM})
    assert cfg.params.beta == 1.0 and cfg.seed == 0
    assert cfg.model_params().geometry.gamma2 == 2.0


@pytest.mark.parametrize("raw", [
    {"geometry": {**GEOM, "gamma1": -1.0}},
    {"geometry": {**GEOM, "inner": [0.5, 0.2]}},
    {"geometry": GEOM, "parms": {}},
    {"geometry": GEOM, "params": {"lamda1": 2.0}},
    {"geometry": GEOM, "params": {"alpha1": 0.0}},
    {"geometry": GEOM, "commands": {"coexist": {"tol": 0.0}}},
    {"geometry": GEOM, "commands": {"curve_h": {"start": 1.0, "stop": 0.0, "num": 5}}},
    {"geometry": GEOM, "commands": {"large": {"m_list": [1e3, 1e2]}}},
    {"geometry": GEOM, "commands": {"region_map": {"x_range": [0, 1], "mu_range": [1, 1]}}},
])
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_shipped_configs_validate():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    names = sorted(p.name for p in root.glob("*.json"))
    assert {"g0.json", "fig1.json", "fig2.json", "fig3.json"} <= set(names)
    for p in root.glob("*.json"):
        load_config(p)


def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(3) == "3"
    assert fmt(float("nan")) == "nan"
    assert fmt("") == "" and fmt("x") == "x"
    assert fmt(True) == "true"


def test_csv_format(tmp_path):
    text = csv_text(("nu2", "H", "flag"), [(0.0, 1 / 3, "OK")])
    assert text == "nu2,H,flag\n0,0.33333333333333331,OK\n"
    path = export_csv(tmp_path / "a" / "c.csv", ("x",), [(1.5,)])
    assert path.read_bytes() == b"x\n1.5\n"


def test_atomic_write_leaves_no_temp(tmp_path):
    atomic_write(tmp_path / "f.txt", "one")
    atomic_write(tmp_path / "f.txt", "two")
    assert (tmp_path / "f.txt").read_text() == "two"
    assert [p.name for p in tmp_path.iterdir()] == ["f.txt"]


def _tiny_map():
    grid = GridSpec((0.0, 2.0), (-1.0, 1.0), 2, 2)
    classes = [[Classification.NON_EXISTENCE_NECESSARY] * 2, [Classification.COEXISTENCE, Classification.INDETERMINATE]]
    marks = [[Confirmation.UNCHECKED] * 2, [Confirmation.CONFIRMED, Confirmation.REFUTED]]
    return RegionMap(grid, 1.0, classes, marks)


def test_svg_deterministic_and_complete():
    rmap = _tiny_map()
    a = render_region_svg(rmap, {"g": [(0.0, 0.2), (2.0, 0.8)]}, [(1.0, 0.0, "G(0)")], "t")
    b = render_region_svg(rmap, {"g": [(0.0, 0.2), (2.0, 0.8)]}, [(1.0, 0.0, "G(0)")], "t")
    assert a == b
    assert a.startswith("<?xml") and a.rstrip().endswith("</svg>")
    assert "<polyline" in a and "lambda1" in a and ">mu<" in a and "G(0)" in a
    plain = render_region_svg(rmap)
    assert "<polyline" not in plain and "CoexistencePredicted" in plain
