import json

import numpy as np
import pytest

from shapekin import __version__
from shapekin.grid import Field, Grid3
from shapekin.io import (
    ConfigError,
    config_hash,
    fmt,
    load_config,
    locate,
    read_field,
    summary_header,
    write_csv,
    write_field,
    write_json,
)


def test_fmt_round_trips_doubles():
    for x in (0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23):
        assert float(fmt(x)) == x


def test_csv_and_json_output(tmp_path):
    write_csv(tmp_path / "a.csv", ["t", "n", "tag"], [[0.1, 3, "x"], [np.float64(2.0), np.int64(4), "y"]])
    assert (tmp_path / "a.csv").read_text() == "t,n,tag\n0.10000000000000001,3,x\n2,4,y\n"
    write_json(tmp_path / "s.json", {"a": np.arange(2), "b": np.float64(np.nan), "c": np.bool_(True)})
    assert json.loads((tmp_path / "s.json").read_text()) == {"a": [0, 1], "b": None, "c": True}


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})
    head = summary_header("evolve", {"name": "n"}, seed=3)
    assert head["version"] == __version__ and head["tool"] == "shapekin" and head["seed"] == 3


def test_locate():
    text = '{\n  "grid": {\n    "lo": [0, 0, 0],\n    "counts": 4\n  },\n  "counts": 9\n}'
    assert locate(text, ["grid", "counts"]) == 4
    assert locate(text, ["counts"]) == 4
    assert locate(text, ["grid"]) == 2
    assert locate(text, []) == 1


def _write(tmp_path, text):
    p = tmp_path / "c.json"
    p.write_text(text)
    return p


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError) as e:
        load_config(_write(tmp_path, '{\n  "name": "x",\n  "time": {,}\n}'), "evolve")
    assert e.value.line == 3 and str(e.value).startswith(str(tmp_path / "c.json") + ":3:")
    bad_counts = ('{\n  "command": "compat",\n  "grid": {\n    "counts": 4\n  },\n'
                  '  "shape": {"kind": "identity"}\n}')
    with pytest.raises(ConfigError) as e:
        load_config(_write(tmp_path, bad_counts), "compat")
    assert e.value.line == 4 and "grid/counts" in str(e.value)
    with pytest.raises(ConfigError) as e:
        load_config(_write(tmp_path, '{"command": "compat"}'), "evolve")
    assert "not 'evolve'" in str(e.value)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json", "evolve")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[1, 2]"), "evolve")


def test_field_round_trip(tmp_path):
    g = Grid3.box((0.5, -1.0, 0.0), (1.5, 1.0, 0.4), (5, 6, 7))
    rng = np.random.default_rng(1)
    f = Field(g, rng.standard_normal(g.counts + (3, 3)))
    write_field(tmp_path / "E.csv", f, "E")
    back = read_field(tmp_path / "E.csv", "E")
    assert back.grid.counts == g.counts
    np.testing.assert_array_equal(back.values, f.values)
    np.testing.assert_allclose(back.grid.nodes(), g.nodes(), atol=1e-14)
    lines = (tmp_path / "E.csv").read_text().splitlines()
    assert lines[0] == "i,j,k,x,y,z,E_xx,E_xy,E_xz,E_yx,E_yy,E_yz,E_zx,E_zy,E_zz"
    assert len(lines) == g.size + 1


def test_read_field_errors(tmp_path):
    p = tmp_path / "E.csv"
    p.write_text("i,j,k,x,y,z,u_x,u_y,u_z\n")
    with pytest.raises(ConfigError):
        read_field(p)
    g = Grid3.box((0, 0, 0), (1, 1, 1), 5)
    write_field(p, Field(g, np.zeros(g.counts + (3, 3))), "E")
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ConfigError):
        read_field(p)
    lines[3] = lines[3].replace(",0,0,0,0,0,0,0,0,0", ",0,abc,0,0,0,0,0,0,0")
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(ConfigError):
        read_field(p)
