"""Deterministic CSV/JSON output and config loading for the command line."""

from __future__ import annotations

import csv
import hashlib
import json
import re
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .grid import Field, Grid3

COMPONENTS = ("xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz")
AXES = ("x", "y", "z")


class ConfigError(Exception):
    """Invalid configuration; ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        super().__init__(message)
        self.path = path
        self.line = line

    def __str__(self):
        where = str(self.path or "<config>")
        if self.line is not None:
            where += f":{self.line}"
        return f"{where}: {self.args[0]}"


def fmt(x):
    return "%.17g" % x


def _cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt(v)


def write_csv(path, header, rows):
    """Write rows of numbers with 17 significant digits and ``\\n`` endings."""
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_plain(obj), fh, indent=2)
        fh.write("\n")


def config_hash(config):
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def summary_header(command, config, seed=None):
    return {
        "tool": "shapekin",
        "version": __version__,
        "command": command,
        "name": config.get("name", ""),
        "config_sha256": config_hash(config),
        "seed": seed,
    }


# --------------------------------------------------------------------------
# config


def load_schema():
    text = resources.files("shapekin").joinpath("schema/config.schema.json").read_text()
    return json.loads(text)


def locate(text, path):
    """Best-effort 1-based line of a JSON path (sequence of keys/indices) in ``text``."""
    pos = 0
    line_pos = 0
    for key in path:
        if isinstance(key, int):
            continue
        m = re.compile(r'"%s"\s*:' % re.escape(str(key))).search(text, pos)
        if not m:
            break
        pos = line_pos = m.start()
    return text.count("\n", 0, line_pos) + 1


def load_config(path, command):
    """Read, parse and schema-validate a config file for ``command``."""
    import jsonschema

    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from None
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", path, exc.lineno) from None
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object", path, 1)
    if config.get("command", command) != command:
        raise ConfigError(
            f"config is for command {config['command']!r}, not {command!r}", path, locate(text, ["command"])
        )
    schema = load_schema()
    validator = jsonschema.Draft202012Validator({"$ref": f"#/$defs/{command}", "$defs": schema["$defs"]})
    errors = sorted(validator.iter_errors(config), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        loc = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{loc}: {err.message}", path, locate(text, list(err.absolute_path)))
    return config, text


# --------------------------------------------------------------------------
# grids and fields


def grid_from_dict(d) -> Grid3:
    counts = d["counts"]
    counts = [counts] * 3 if isinstance(counts, int) else counts
    return Grid3.box(d.get("lo", (0.0, 0.0, 0.0)), d.get("hi", (1.0, 1.0, 1.0)), counts,
                     bool(d.get("periodic", False)))


def field_rows(field: Field):
    g = field.grid
    idx = np.indices(g.counts).reshape(3, -1).T
    X = g.nodes().reshape(-1, 3)
    V = field.values.reshape(g.size, -1)
    for n in range(g.size):
        yield [int(idx[n, 0]), int(idx[n, 1]), int(idx[n, 2]), *X[n], *V[n]]


def write_field(path, field: Field, prefix):
    """Field dump: ``i,j,k,x,y,z`` then components (``u_x..`` or ``R_xx..``)."""
    names = AXES if field.rank == 1 else COMPONENTS
    header = ["i", "j", "k", "x", "y", "z"] + [f"{prefix}_{c}" for c in names]
    write_csv(path, header, field_rows(field))


def read_field(path, prefix="E") -> Field:
    """Read a rank-2 field dump written by :func:`write_field`."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read field file: {exc.strerror}", path) from None
    header = rows[0]
    expected = ["i", "j", "k", "x", "y", "z"] + [f"{prefix}_{c}" for c in COMPONENTS]
    if header != expected:
        raise ConfigError(f"unexpected header, need {','.join(expected)}", path, 1)
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise ConfigError(f"non-numeric entry: {exc}", path) from None
    idx = data[:, :3].astype(int)
    counts = tuple(int(v) for v in idx.max(axis=0) + 1)
    if int(np.prod(counts)) != len(data):
        raise ConfigError("field file does not cover a full grid", path)
    order = np.ravel_multi_index(idx.T, counts)
    X = np.empty((len(data), 3))
    X[order] = data[:, 3:6]
    X = X.reshape(counts + (3,))
    origin = X[0, 0, 0]
    spacing = (X[1, 0, 0, 0] - origin[0], X[0, 1, 0, 1] - origin[1], X[0, 0, 1, 2] - origin[2])
    grid = Grid3(tuple(origin), spacing, counts)
    if np.max(np.abs(grid.nodes() - X)) > 1e-9 * max(1.0, float(np.max(np.abs(X)))):
        raise ConfigError("field nodes do not form a uniform axis-aligned grid", path)
    vals = np.empty((len(data), 9))
    vals[order] = data[:, 6:]
    return Field(grid, vals.reshape(counts + (3, 3)))
