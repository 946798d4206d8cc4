"""Command-line front end.

    normalcoords <command> --config run.json [--out DIR] [--threads N] [--seed S]

Commands: synth, register, laminar, levelset, metrics, compare. Every run
writes ``run_summary.json`` into the output directory. Exit codes: 0 on
success, 2 on configuration errors, 3 on numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import platform
import sys
import time
import traceback
from pathlib import Path

import numpy as np

from . import __version__

logger = logging.getLogger("normalcoords")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(Exception):
    pass


class NumericalError(Exception):
    def __init__(self, message, dump_path=None):
        super().__init__(message)
        self.dump_path = dump_path


# ----------------------------------------------------------------------------- config handling

_SCHEMAS = {
    "synth": {"fixture": None, "formats": ["off", "vtk"]},
    "register": {"inner": None, "outer": None, "registration": {}, "checkpoint": "flow.json"},
    "laminar": {"flow": None, "sigma_method": "one_ring", "layers": [0.25, 0.5, 0.75],
                "cross_check": False, "zeta_substeps": 4},
    "levelset": {"inner": None, "outer": None, "spacing": 0.05, "omega": 1.9, "tol": 1e-7,
                 "max_sweeps": 100000, "step": 0.01, "seed_stride": 1, "layers": [],
                 "layer_rule": "potential", "write_grid": True},
    "metrics": {"inner": None, "outer": None, "squared": False, "n_bins": 50, "seeds_csv": None,
                "method": "tree"},
    "compare": {"distributions": None},
}
_PATH_KEYS = {"inner", "outer", "flow", "seeds_csv"}
_COMMON = {"out"}


def load_config(command, path):
    """Read and validate a JSON run config; relative paths are resolved against its folder."""
    schema = _SCHEMAS[command]
    if path is None:
        raw, base = {}, Path.cwd()
    else:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            raw = json.loads(p.read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{p}: invalid JSON ({e})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{p}: top level must be an object")
        base = p.resolve().parent
    unknown = sorted(set(raw) - set(schema) - _COMMON)
    if unknown:
        raise ConfigError(f"unknown config keys for '{command}': {', '.join(unknown)}")
    cfg = {k: (json.loads(json.dumps(v)) if isinstance(v, (dict, list)) else v) for k, v in schema.items()}
    cfg.update(raw)
    cfg["out"] = raw.get("out")
    for key in _PATH_KEYS & set(cfg):
        if cfg[key] is not None:
            cfg[key] = str((base / cfg[key]).resolve())
    if command == "compare" and isinstance(cfg.get("distributions"), list):
        for d in cfg["distributions"]:
            if isinstance(d, dict) and "csv" in d:
                d["csv"] = str((base / d["csv"]).resolve())
    cfg["_base"] = str(base)
    missing = [k for k, v in schema.items() if v is None and cfg.get(k) is None and k != "seeds_csv"]
    if missing:
        raise ConfigError(f"missing required config key(s): {', '.join(missing)}")
    return cfg


def _require_file(cfg, key):
    path = cfg.get(key)
    if path is None or not Path(path).is_file():
        raise ConfigError(f"'{key}': file not found: {path}")
    return Path(path)


def _load_mesh(cfg, key):
    from .io import load_mesh
    from .mesh import MeshError

    path = _require_file(cfg, key)
    try:
        return load_mesh(path)
    except (MeshError, ValueError) as e:
        raise ConfigError(f"'{key}': {e}") from None


# ----------------------------------------------------------------------------- commands

def run_synth(cfg, out, args, summary):
    from .io import save_mesh
    from .synth import FixtureSpec, generate

    fx = dict(cfg["fixture"])
    if args.seed is not None:
        fx["seed"] = args.seed
    try:
        spec = FixtureSpec(**fx)
    except TypeError as e:
        raise ConfigError(f"'fixture': {e}") from None
    except ValueError as e:
        raise ConfigError(f"'fixture': {e}") from None
    inner, outer, oracle = generate(spec)
    for fmt in cfg["formats"]:
        if fmt not in ("off", "vtk"):
            raise ConfigError(f"'formats': unsupported format {fmt!r}")
        for name, m in (("inner", inner), ("outer", outer)):
            save_mesh(m, out / f"{name}.{fmt}")
            summary["outputs"].append(f"{name}.{fmt}")
    (out / "oracle.json").write_text(json.dumps(oracle.to_dict(), indent=2))
    summary["outputs"].append("oracle.json")
    summary["result"] = {"inner_vertices": inner.n_vertices, "outer_vertices": outer.n_vertices,
                         "constants": oracle.constants}


def _performance_table(report, path):
    row = report.performance_row()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(row))
        w.writerow(list(row.values()))
    return row


def run_register(cfg, out, args, summary):
    from .io import save_mesh
    from .mesh import DegenerateFaceError
    from .registration import NumericalFailure, RegistrationConfig, optimize, save_checkpoint

    inner, outer = _load_mesh(cfg, "inner"), _load_mesh(cfg, "outer")
    try:
        rc = RegistrationConfig.from_dict(cfg["registration"])
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"'registration': {e}") from None
    summary["registration_config"] = rc.to_dict()
    try:
        state, report = optimize(rc, inner, outer, dump_dir=out)
    except NumericalFailure as e:
        raise NumericalError(str(e), e.dump_path) from None
    except DegenerateFaceError as e:
        raise NumericalError(f"degenerate surface during the solve: {e}") from None
    save_checkpoint(out / cfg["checkpoint"], rc, state, report)
    end = state.mesh_at(state.n_steps)
    end.point_data["displacement"] = np.linalg.norm(state.q[-1] - state.q[0], axis=1)
    save_mesh(end, out / "endpoint.vtk")
    row = _performance_table(report, out / "performance.csv")
    summary["outputs"] += [cfg["checkpoint"], "endpoint.vtk", "performance.csv"]
    summary["convergence"] = report.to_dict()
    summary["performance"] = row
    print("vertices  faces  iterations  runtime_s")
    print(f"{row['inner_vertices']:>8}  {row['inner_faces']:>5}  {row['iterations']:>10}  {row['runtime_s']:.1f}")
    if not report.converged:
        summary["partial"] = True
        summary["warnings"].append(f"registration did not converge: {report.reason}")


def run_laminar(cfg, out, args, summary):
    from . import laminar as L
    from .io import save_mesh
    from .registration import load_checkpoint

    path = _require_file(cfg, "flow")
    try:
        rc, state, _ = load_checkpoint(path)
    except (KeyError, ValueError, json.JSONDecodeError) as e:
        raise ConfigError(f"'flow': unreadable checkpoint ({e})") from None
    if state.kernel is None:
        state.kernel = rc.kernel
    if cfg["sigma_method"] not in ("one_ring", "zeta"):
        raise ConfigError("'sigma_method' must be 'one_ring' or 'zeta'")
    layers = [float(e) for e in cfg["layers"]]
    if any(not 0 <= e <= 1 for e in layers):
        raise ConfigError("'layers' values must lie in [0, 1]")
    system = L.build_laminar(state, cfg["sigma_method"], int(cfg["zeta_substeps"]))
    L.write_streamlines(system, out / "streamlines.vtk")
    L.write_seed_table(system, out / "seeds.csv")
    summary["outputs"] += ["streamlines.vtk", "seeds.csv"]
    for e in layers:
        name = f"layer_{e:.3f}.vtk"
        save_mesh(L.extract_layer(system, e), out / name)
        summary["outputs"].append(name)
    result = {"mean_thickness": float(system.thickness.mean()), "flagged": int(system.flagged.sum()),
              "mean_c0": float(np.nanmean(system.c0))}
    if cfg["cross_check"]:
        s_zeta = L.sigma_zeta_ode(state, int(cfg["zeta_substeps"]))
        s_lep = L.leprince_sigma_from_system(system)
        ref = L.sigma_one_ring(state)
        result["sigma_max_rel_diff"] = {"zeta": float(np.max(np.abs(s_zeta / ref - 1))),
                                        "leprince": float(np.max(np.abs(s_lep / ref - 1)))}
    summary["result"] = result


def run_levelset(cfg, out, args, summary):
    from . import levelset as LS
    from .io import write_csv, write_vtk_polydata
    from .mesh import MeshError

    inner, outer = _load_mesh(cfg, "inner"), _load_mesh(cfg, "outer")
    h = float(cfg["spacing"])
    if not h > 0:
        raise ConfigError("'spacing' must be > 0")
    try:
        grid = LS.voxelize(inner, outer, h)
    except MeshError as e:
        raise ConfigError(f"'inner'/'outer': {e}") from None
    except LS.LevelSetError as e:
        raise NumericalError(str(e)) from None
    LS.solve_laplace(grid, omega=float(cfg["omega"]), tol=float(cfg["tol"]),
                     max_iter=int(cfg["max_sweeps"]))
    if cfg["write_grid"]:
        LS.write_grid(grid, out / "grid.vtk")
        summary["outputs"].append("grid.vtk")
    idx = np.arange(0, inner.n_vertices, max(1, int(cfg["seed_stride"])))
    pts, lines, rows = [], [], []
    try:
        for k in idx:
            p, _, dev = LS.levelset_streamline(grid, inner.vertices[k], float(cfg["step"]))
            lines.append(np.arange(len(pts), len(pts) + len(p)))
            pts.extend(p)
            rows.append((int(k), float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum()), float(dev)))
        layers = {e: LS.levelset_layer(grid, inner.vertices[idx], float(e), cfg["layer_rule"],
                                       float(cfg["step"])) for e in cfg["layers"]}
    except LS.LevelSetError as e:
        raise NumericalError(str(e)) from None
    write_vtk_polydata(out / "levelset_streamlines.vtk", np.array(pts), lines=lines,
                       cell_data={"thickness": np.array([r[1] for r in rows])})
    write_csv(out / "levelset_thickness.csv", ("seed", "thickness", "max_level_deviation"), rows)
    for e, p in layers.items():
        write_csv(out / f"levelset_layer_{float(e):.3f}.csv", ("seed", "x", "y", "z"),
                  [(int(k), *map(float, q)) for k, q in zip(idx, p)])
        summary["outputs"].append(f"levelset_layer_{float(e):.3f}.csv")
    summary["outputs"] += ["levelset_streamlines.vtk", "levelset_thickness.csv"]
    th = np.array([r[1] for r in rows])
    summary["result"] = {"grid_dims": list(grid.dims), "ribbon_nodes": grid.n_ribbon(),
                         "sweeps": grid.info["sweeps"], "mean_thickness": float(th.mean())}


def _read_column(path, column):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows or column not in rows[0]:
        raise ConfigError(f"{path}: no column '{column}'")
    return rows


def run_metrics(cfg, out, args, summary):
    from . import metrics as M

    inner, outer = _load_mesh(cfg, "inner"), _load_mesh(cfg, "outer")
    if cfg["method"] not in ("tree", "brute"):
        raise ConfigError("'method' must be 'tree' or 'brute'")
    fs = M.fs_distance(inner, outer, squared=bool(cfg["squared"]), method=cfg["method"])
    M.write_distances(fs, out / "fs_distances.csv")
    M.write_cdf(M.cdf(fs, int(cfg["n_bins"])), out / "fs_cdf.csv")
    summary["outputs"] += ["fs_distances.csv", "fs_cdf.csv"]
    dists = [fs]
    if cfg.get("seeds_csv"):
        path = _require_file(cfg, "seeds_csv")
        rows = _read_column(path, "thickness")
        th = M.thickness_distribution(np.array([float(r["thickness"]) for r in rows]),
                                      flagged=np.array([r.get("flagged", "0") == "1" for r in rows]))
        M.write_distances(th, out / "thickness_distances.csv")
        M.write_cdf(M.cdf(th, int(cfg["n_bins"])), out / "thickness_cdf.csv")
        summary["outputs"] += ["thickness_distances.csv", "thickness_cdf.csv"]
        dists.append(th)
    report = M.compare_report(dists)
    M.write_report(report, out / "metrics.json", out / "metrics.csv")
    summary["outputs"] += ["metrics.json", "metrics.csv"]
    summary["result"] = report


def run_compare(cfg, out, args, summary):
    from . import metrics as M

    items = cfg["distributions"]
    if not isinstance(items, list) or not items:
        raise ConfigError("'distributions' must be a non-empty list")
    dists = []
    for n, d in enumerate(items):
        if not isinstance(d, dict) or "csv" not in d:
            raise ConfigError(f"'distributions[{n}]' needs a 'csv' entry")
        extra = set(d) - {"csv", "name", "kind", "column"}
        if extra:
            raise ConfigError(f"'distributions[{n}]': unknown keys {sorted(extra)}")
        if not Path(d["csv"]).is_file():
            raise ConfigError(f"'distributions[{n}].csv': file not found: {d['csv']}")
        col = d.get("column", "distance")
        rows = _read_column(d["csv"], col)
        dist = M.DistanceDistribution(np.array([float(r[col]) for r in rows]), kind=d.get("kind", "distance"),
                                      meta={"name": d.get("name", Path(d["csv"]).stem)})
        dists.append(dist)
    report = M.compare_report(dists)
    M.write_report(report, out / "report.json", out / "report.csv")
    summary["outputs"] += ["report.json", "report.csv"]
    summary["result"] = report


COMMANDS = {"synth": run_synth, "register": run_register, "laminar": run_laminar,
            "levelset": run_levelset, "metrics": run_metrics, "compare": run_compare}


# ----------------------------------------------------------------------------- driver

def _versions():
    import numba
    import scipy
    import torch

    return {"normalcoords": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "torch": torch.__version__, "numba": numba.__version__}


def _set_threads(n):
    if n is None:
        return
    import numba
    import torch

    n = max(1, int(n))
    torch.set_num_threads(n)
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    os.environ["OMP_NUM_THREADS"] = str(n)


def build_parser():
    ap = argparse.ArgumentParser(prog="normalcoords", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides the config's 'out')")
        p.add_argument("--threads", type=int, default=None, help="thread count (default: all cores)")
        p.add_argument("--seed", type=int, default=None, help="random seed")
        p.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    summary = {"command": args.command, "argv": list(sys.argv[1:] if argv is None else argv),
               "status": "ok", "exit_code": EXIT_OK, "outputs": [], "warnings": [], "partial": False,
               "threads": args.threads, "seed": args.seed}
    t0 = time.perf_counter()
    out = Path(args.out) if args.out else None
    code = EXIT_OK
    try:
        summary["versions"] = _versions()
        cfg = load_config(args.command, args.config)
        if out is None:
            out = Path(cfg["_base"]) / (cfg["out"] or "out")
        summary["config"] = {k: v for k, v in cfg.items() if not k.startswith("_")}
        out.mkdir(parents=True, exist_ok=True)
        _set_threads(args.threads)
        if args.seed is not None:
            np.random.seed(args.seed)
        COMMANDS[args.command](cfg, out, args, summary)
    except ConfigError as e:
        code = EXIT_CONFIG
        summary.update(status="config_error", error=str(e))
        print(f"config error: {e}", file=sys.stderr)
    except NumericalError as e:
        code = EXIT_NUMERIC
        summary.update(status="numerical_failure", error=str(e), dump_path=e.dump_path)
        msg = f"numerical failure: {e}"
        if e.dump_path:
            msg += f" (diagnostic dump: {e.dump_path})"
        print(msg, file=sys.stderr)
    except FloatingPointError as e:
        code = EXIT_NUMERIC
        summary.update(status="numerical_failure", error=str(e), traceback=traceback.format_exc())
        print(f"numerical failure: {e}", file=sys.stderr)
    summary["exit_code"] = code
    summary["partial"] = summary["partial"] or code != EXIT_OK
    summary["timings"] = {"wall_s": time.perf_counter() - t0}
    if out is None:
        out = Path.cwd() / "out"
    out.mkdir(parents=True, exist_ok=True)
    (out / "run_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=_jsonable))
    return code


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, Path):
        return str(x)
    return repr(x)


if __name__ == "__main__":
    sys.exit(main())
