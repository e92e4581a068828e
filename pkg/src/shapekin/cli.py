"""Command-line scenario runner.

    shapekin evolve      --config CFG [--out DIR] [--seed N] [--quiet]
    shapekin compat      --config CFG ...
    shapekin reconstruct --config CFG ...
    shapekin sweep       --config CFG ...

``CFG`` is a JSON file or ``bundled:NAME`` for a scenario shipped with the
package (``shapekin evolve --config bundled:list`` prints them).  Exit codes:
0 ok, 2 configuration error, 3 numerical failure, 4 incompatible input.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np

from . import io
from .compat import (
    _snap,
    cesaro_volterra,
    compat_residual_from_shape,
    shape_from_inverse_potential,
    shape_from_potential,
)
from .errors import GridError, IncompatibleFieldError, ShapekinError, SymmetryError
from .grid import Field, grad_values, refine, rms
from .motion import motion_from_dict
from .plastic import evolve_elastoplastic, law_from_dict
from .shape import ElasticPotential, _steps, stress_from_potential
from .tensor import I3, check_metric, fro, func_of_hsym, is_h_symmetric, sym, sym_part_h

log = logging.getLogger("shapekin")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INCOMPATIBLE = 0, 2, 3, 4
COMMANDS = ("evolve", "compat", "reconstruct", "sweep")


def workers():
    """Worker cap from ``SHAPEKIN_THREADS`` (default: CPU count)."""
    cap = os.environ.get("SHAPEKIN_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            raise io.ConfigError(f"SHAPEKIN_THREADS must be an integer, got {cap!r}") from None
    return n


def bundled_scenarios():
    """Names of the scenarios shipped with the package."""
    root = resources.files("shapekin").joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_config(spec):
    if spec.startswith("bundled:"):
        name = spec.split(":", 1)[1]
        if name not in bundled_scenarios():
            raise io.ConfigError(f"no bundled scenario {name!r}; have {', '.join(bundled_scenarios())}")
        return Path(str(resources.files("shapekin").joinpath(f"scenarios/{name}.json")))
    return Path(spec)


class _Ctx:
    """Config plus raw text, for anchoring semantic errors to lines."""

    def __init__(self, config, text, path):
        self.config, self.text, self.path = config, text, path

    def build(self, key, fn, *args):
        try:
            return fn(*args)
        except (ValueError, KeyError, TypeError, ShapekinError) as exc:
            msg = exc.args[0] if exc.args else type(exc).__name__
            raise io.ConfigError(f"{key}: {msg}", self.path, io.locate(self.text, key.split("/"))) from None


def _matrix(d, key, default=None):
    v = d.get(key)
    return default if v is None else np.asarray(v, dtype=float)


def _time_window(motion, tm):
    t0 = tm.get("t0", 0.0)
    _steps(t0, tm["t1"], tm["dt"])
    motion.check_time(t0)
    motion.check_time(tm["t1"])


def _order(e0, e1, h0, h1):
    """Observed order between two levels; nan when either error is exactly zero."""
    if not (e0 > 0.0 and e1 > 0.0):
        return float("nan")
    return float(np.log(e0 / e1) / np.log(h0 / h1))


# --------------------------------------------------------------------------
# evolve


def potential_gradient(desc, X):
    """Exact gradient ``Q[..., i, k] = d_k p_i`` of a polynomial potential at points X."""
    X = np.asarray(X, dtype=float)
    Q = np.broadcast_to(I3, X.shape[:-1] + (3, 3)).copy()
    for c, a, *pw in desc["terms"]:
        for k in range(3):
            if pw[k] == 0:
                continue
            e = list(pw)
            e[k] -= 1
            Q[..., int(c), k] += a * pw[k] * X[..., 0] ** e[0] * X[..., 1] ** e[1] * X[..., 2] ** e[2]
    return Q


def _initial_shape(d, h, seed, points):
    kind = d.get("kind", "identity")
    if kind == "identity":
        return I3.copy()
    if kind == "from_potential":
        Q = potential_gradient(d["potential"], points)
        det = np.linalg.det(Q)
        if np.any(det <= 0.0):
            raise ValueError(f"potential gradient has det <= 0 at point {int(np.argmin(det))}")
        return Q @ np.linalg.inv(h) @ np.swapaxes(Q, -1, -2) @ h
    if kind == "explicit":
        A = np.asarray(d["A"], dtype=float)
        if not is_h_symmetric(A, h, tol=1e-10):
            raise ValueError("explicit A is not h-symmetric")
        func_of_hsym(A, h, "ln")  # raises if not positive definite
        return A
    rng = np.random.default_rng(seed)
    M = d.get("spread", 0.1) * rng.standard_normal((3, 3))
    return func_of_hsym(sym_part_h(M, h), h, "exp")


def _power_residual(traj, pot):
    D = traj.D()
    U = pot.energy(D)
    Udot = np.gradient(U, traj.times, axis=0, edge_order=2)
    sigma = stress_from_potential(D, pot, traj.A)
    power = np.trace(sigma @ traj.L, axis1=-2, axis2=-1)
    return D, np.abs(power - pot.density(traj.A) * Udot)


def _expect_checks(expect, traj, D):
    out = {}
    t = traj.times[:, None]
    for e in expect:
        tol = e.get("tol", 1e-8)
        if e["kind"] == "uniaxial_log":
            a = e.get("axis", 0)
            err = float(np.max(np.abs(D[..., a, a] - e["rate"] * t)))
        else:
            ref = np.exp(2.0 * e["beta"] * t)[..., None, None] * traj.A[0]
            err = float(np.max(fro(traj.A - ref) / fro(ref)))
        out[e["kind"]] = {"max_error": err, "tol": tol, "status": "pass" if err <= tol else "fail"}
    return out


def run_evolve(ctx, out, seed):
    c = ctx.config
    motion = ctx.build("motion", motion_from_dict, c["motion"])
    h = ctx.build("h", check_metric, _matrix(c, "h", I3))
    seed = c.get("seed", 0) if seed is None else seed
    points = np.asarray(c.get("points", [[0.0, 0.0, 0.0]]), dtype=float)
    A0 = ctx.build("initial_shape", _initial_shape, c.get("initial_shape", {}), h, seed, points)
    pot = ctx.build("material", lambda: ElasticPotential(**c.get("material", {})))
    law = ctx.build("plastic_law", law_from_dict, c.get("plastic_law", {"kind": "none"}))
    tm = c["time"]
    ctx.build("time", _time_window, motion, tm)

    traj = evolve_elastoplastic(A0, motion, h, law, pot, tm.get("t0", 0.0), tm["t1"], tm["dt"], points)
    D, pres = _power_residual(traj, pot)
    vol = traj.volume_ratio()

    header = (["t", "point_id"] + [f"A_{s}" for s in io.COMPONENTS] + [f"D_{s}" for s in io.COMPONENTS]
              + ["vol_ratio", "power_residual"])
    npts = points.shape[0]

    def rows():
        for k, t in enumerate(traj.times):
            for p in range(npts):
                yield [t, p, *traj.A[k, p].ravel(), *D[k, p].ravel(), vol[k, p], pres[k, p]]

    io.write_csv(out / "trajectory.csv", header, rows())

    tol_id = c.get("tolerances", {}).get("elastic_identity", 1e-10)
    max_D = float(np.max(np.abs(D)))
    checks = {"elastic-identity": "pass" if max_D <= tol_id else "fail"}
    checks.update(_expect_checks(c.get("expect", []), traj, D))
    power_scale = float(np.max(np.abs(np.trace(stress_from_potential(D, pot, traj.A) @ traj.L,
                                                  axis1=-2, axis2=-1))))
    summary = io.summary_header("evolve", c, seed)
    summary.update({
        "steps": len(traj.times) - 1,
        "dt": traj.dt,
        "points": npts,
        "plastic_law": law.to_dict(),
        "final": {
            "A_norm": fro(traj.A[-1]),
            "D_norm": fro(D[-1]),
            "vol_ratio": vol[-1],
        },
        "max_abs_D": max_D,
        "max_drift": float(traj.drift.max()),
        "max_drift_step": int(np.argmax(traj.drift)),
        "min_eigenvalue": float(np.min(np.linalg.eigvals(traj.A).real)),
        "max_power_residual": float(pres.max()),
        "power_scale": power_scale,
        "checks": checks,
    })
    io.write_json(out / "summary.json", summary)
    return summary


# --------------------------------------------------------------------------
# compat


def potential_fn(desc):
    terms = [(int(c), float(a), int(px), int(py), int(pz)) for c, a, px, py, pz in desc["terms"]]

    def p(X):
        out = X.copy()
        for c, a, px, py, pz in terms:
            out[..., c] += a * X[..., 0] ** px * X[..., 1] ** py * X[..., 2] ** pz
        return out

    return p


def shape_field(desc, grid, h):
    kind = desc["kind"]
    if kind == "identity":
        return Field(grid, np.broadcast_to(I3, grid.counts + (3, 3)))
    if kind == "diag_y2":
        eps = float(desc.get("eps", 1e-3))
        y = grid.nodes()[..., 1]
        A = np.broadcast_to(I3, grid.counts + (3, 3)).copy()
        A[..., 0, 0] += 2.0 * eps * y**2
        return Field(grid, A)
    pot = Field.from_function(grid, potential_fn(desc["potential"]))
    if kind == "from_potential":
        return shape_from_potential(pot, h)
    return shape_from_inverse_potential(pot, h)


def _compat_levels(ctx, c, levels):
    h = ctx.build("h", check_metric, _matrix(c, "h", I3))
    grid = ctx.build("grid", io.grid_from_dict, c["grid"])
    reports = []
    for lvl in range(levels):
        if lvl:
            grid = refine(grid, 2)
        A = ctx.build("shape", shape_field, c["shape"], grid, h)
        rep = compat_residual_from_shape(A, h, saint_venant=True)
        # only the base-level Ricci field is dumped; drop the rest early
        rep.saint_venant_field = None
        if lvl:
            rep.ricci_field = None
        del A
        reports.append(rep)
    return reports


def run_compat(ctx, out, seed, levels=None):
    c = ctx.config
    levels = levels or c.get("sweep", {}).get("levels", 1)
    reports = _compat_levels(ctx, c, levels)
    base = reports[0]
    if c.get("write_field", True):
        io.write_field(out / "residual.csv", base.ricci_field, "R")
    thresh = c.get("tolerances", {}).get("ricci_relative", 1e-3)
    final = reports[-1]
    summary = io.summary_header("compat", c, seed)
    summary.update({
        "counts": list(base.grid.counts),
        "ricci_rms": base.ricci_rms,
        "saint_venant_rms": base.saint_venant_rms,
        "field_scale": base.field_scale,
        "ricci_relative": base.ricci_rms / base.field_scale,
        "ricci_relative_threshold": thresh,
        "ricci_below_threshold": bool(final.ricci_rms / final.field_scale < thresh),
    })
    if levels > 1:
        table = [(r.grid.spacing[0], r.ricci_rms) for r in reports]
        base.convergence = table
        orders = base.observed_orders()
        rows = []
        for i, r in enumerate(reports):
            rows.append([i, *r.grid.counts, r.grid.spacing[0], r.ricci_rms, r.saint_venant_rms,
                         orders[i - 1] if i else float("nan")])
        io.write_csv(out / "convergence.csv",
                     ["level", "nx", "ny", "nz", "spacing", "ricci_rms", "saint_venant_rms", "observed_order"],
                     rows)
        summary["refinement"] = [
            {"counts": list(r.grid.counts), "spacing": r.grid.spacing[0], "ricci_rms": r.ricci_rms,
             "saint_venant_rms": r.saint_venant_rms}
            for r in reports
        ]
        summary["observed_orders"] = orders
        summary["monotone_decrease"] = bool(all(b < a for a, b in zip([r.ricci_rms for r in reports],
                                                                        [r.ricci_rms for r in reports[1:]])))
    io.write_json(out / "summary.json", summary)
    return summary


# --------------------------------------------------------------------------
# reconstruct


def _strain_from_displacement(d):
    grid = io.grid_from_dict(d["grid"])
    w = Field.from_function(grid, potential_fn(d["displacement"]))
    G = grad_values(w.values, grid) - I3
    return Field(grid, sym(G)), Field(grid, w.values - grid.nodes())


def _antisymmetric(M):
    if M is not None and np.max(np.abs(M + M.T)) > 1e-14 * max(1.0, float(np.max(np.abs(M)))):
        raise ValueError("must be antisymmetric")
    return M


def run_reconstruct(ctx, out, seed):
    c = ctx.config
    if "input" in c:
        src = Path(c["input"])
        if not src.is_absolute():
            src = ctx.path.parent / src
        try:
            E = io.read_field(src, "E")
        except GridError as exc:
            raise io.ConfigError(f"input: {exc}", ctx.path, io.locate(ctx.text, ["input"])) from None
    else:
        E, _ = ctx.build("strain", _strain_from_displacement, c["strain"])
    thresh = c.get("tolerances", {}).get("saint_venant_relative", 1e-6)
    Omega = ctx.build("Omega_arb", _antisymmetric, _matrix(c, "Omega_arb"))
    if "X_arb" in c:
        ctx.build("X_arb", _snap, E.grid, c["X_arb"])
    u = cesaro_volterra(
        E,
        X_arb=c.get("X_arb"),
        u_arb=c.get("u_arb", (0.0, 0.0, 0.0)),
        Omega_arb=Omega,
        path=tuple(c.get("path", (0, 1, 2))),
        threshold=thresh,
    )
    io.write_field(out / "u.csv", u, "u")
    Gu = grad_values(u.values, u.grid)
    mismatch = sym(Gu) - E.values
    summary = io.summary_header("reconstruct", c, seed)
    summary.update({
        "counts": list(E.grid.counts),
        "strain_rms": rms(E.values),
        "verification_rms": rms(mismatch),
        "verification_max": float(np.max(np.abs(mismatch))),
    })
    io.write_json(out / "summary.json", summary)
    return summary


# --------------------------------------------------------------------------
# sweep


def _subctx(ctx, base, command):
    """Validate an embedded base config against its command's schema."""
    import jsonschema

    schema = io.load_schema()
    v = jsonschema.Draft202012Validator({"$ref": f"#/$defs/{command}", "$defs": schema["$defs"]})
    err = next(iter(sorted(v.iter_errors(base), key=lambda e: len(e.absolute_path))), None)
    if err is not None:
        loc = "/".join(["base"] + [str(p) for p in err.absolute_path])
        raise io.ConfigError(f"{loc}: {err.message}", ctx.path,
                             io.locate(ctx.text, ["base"] + list(err.absolute_path)))
    return _Ctx(base, ctx.text, ctx.path)


def run_sweep(ctx, out, seed):
    c = ctx.config
    kind = c["kind"]
    summary = io.summary_header("sweep", c, seed)
    summary["kind"] = kind
    if kind == "refine":
        sub = _subctx(ctx, c["base"], "compat")
        reports = _compat_levels(sub, sub.config, c.get("levels", 3))
        orders = [float("nan")] + [
            _order(a.ricci_rms, b.ricci_rms, a.grid.spacing[0], b.grid.spacing[0])
            for a, b in zip(reports, reports[1:])
        ]
        header = ["level", "nx", "ny", "nz", "spacing", "ricci_rms", "field_scale", "observed_order"]
        rows = [[i, *r.grid.counts, r.grid.spacing[0], r.ricci_rms, r.field_scale, orders[i]]
                for i, r in enumerate(reports)]
        summary["observed_orders"] = orders[1:]
        summary["final_relative"] = reports[-1].ricci_rms / reports[-1].field_scale
    elif kind == "amplitude":
        sub = _subctx(ctx, c["base"], "compat")
        amps = c.get("amplitudes", [1e-1, 1e-2, 1e-3])

        def one(eps):
            cfg = copy.deepcopy(sub.config)
            shp = cfg["shape"]
            if shp["kind"] == "diag_y2":
                shp["eps"] = eps
            elif "potential" in shp:
                shp["potential"]["terms"] = [[t[0], t[1] * eps, *t[2:]] for t in shp["potential"]["terms"]]
            return _compat_levels(_Ctx(cfg, ctx.text, ctx.path), cfg, 1)[0]

        with ThreadPoolExecutor(max_workers=workers()) as pool:
            reports = list(pool.map(one, amps))
        header = ["amplitude", "ricci_rms", "ratio", "saint_venant_rms"]
        rows = [[e, r.ricci_rms, r.ricci_rms / e, r.saint_venant_rms] for e, r in zip(amps, reports)]
        summary["ratios"] = [r[2] for r in rows]
    else:
        sub = _subctx(ctx, c["base"], "evolve")
        dts = sorted(c.get("dts", [4e-3, 2e-3, 1e-3]), reverse=True)

        def one(dt):
            cfg = copy.deepcopy(sub.config)
            cfg["time"]["dt"] = dt
            return _evolve_final(_Ctx(cfg, ctx.text, ctx.path), seed)

        with ThreadPoolExecutor(max_workers=workers()) as pool:
            finals = list(pool.map(one, dts))
        ref = finals[-1]
        errs = [float(np.max(fro(f - ref) / fro(ref))) for f in finals]
        # the finest run is the reference, so its own error (0) gives no order
        orders = [float("nan")] * len(dts)
        for i in range(1, len(dts) - 1):
            if errs[i] > 0.0:
                orders[i] = _order(errs[i - 1], errs[i], dts[i - 1], dts[i])
        header = ["dt", "steps", "error_vs_finest", "observed_order"]
        t_span = sub.config["time"]["t1"] - sub.config["time"].get("t0", 0.0)
        rows = [[dt, int(round(t_span / dt)), e, o] for dt, e, o in zip(dts, errs, orders)]
        summary["errors_vs_finest"] = errs
    io.write_csv(out / "sweep.csv", header, rows)
    io.write_json(out / "summary.json", summary)
    return summary


def _evolve_final(ctx, seed):
    c = ctx.config
    motion = ctx.build("base/motion", motion_from_dict, c["motion"])
    h = ctx.build("base/h", check_metric, _matrix(c, "h", I3))
    pts = np.asarray(c.get("points", [[0.0, 0.0, 0.0]]), dtype=float)
    A0 = ctx.build("base/initial_shape", _initial_shape, c.get("initial_shape", {}), h,
                   c.get("seed", 0) if seed is None else seed, pts)
    pot = ctx.build("base/material", lambda: ElasticPotential(**c.get("material", {})))
    law = ctx.build("base/plastic_law", law_from_dict, c.get("plastic_law", {"kind": "none"}))
    tm = c["time"]
    ctx.build("base/time", _time_window, motion, tm)
    traj = evolve_elastoplastic(A0, motion, h, law, pot, tm.get("t0", 0.0), tm["t1"], tm["dt"], pts)
    return traj.A[-1]


# --------------------------------------------------------------------------
# entry point


RUNNERS = {"evolve": run_evolve, "compat": run_compat, "reconstruct": run_reconstruct, "sweep": run_sweep}


def build_parser():
    p = argparse.ArgumentParser(prog="shapekin", description="Elastic shape kinematics scenario runner.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON config path or bundled:NAME")
        s.add_argument("--out", default=None, help="output directory (default ./shapekin-out/NAME)")
        s.add_argument("--seed", type=int, default=None, help="seed for randomized scenarios")
        s.add_argument("--quiet", action="store_true")
    return p


def run(command, config_spec, out=None, seed=None):
    """Run one scenario; returns the summary dict.  Raises on failure."""
    if config_spec == "bundled:list":
        print("\n".join(bundled_scenarios()))
        return {}
    path = resolve_config(config_spec)
    config, text = io.load_config(path, command)
    out = Path(out) if out else Path("shapekin-out") / (config.get("name") or path.stem)
    out.mkdir(parents=True, exist_ok=True)
    return RUNNERS[command](_Ctx(config, text, path), out, seed)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        summary = run(args.command, args.config, args.out, args.seed)
    except io.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IncompatibleFieldError, SymmetryError) as exc:
        print(f"incompatible input: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except ShapekinError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if summary and not args.quiet:
        print(json.dumps(io._plain(summary), indent=2))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
