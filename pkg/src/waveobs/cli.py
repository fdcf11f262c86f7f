"""Command-line front end.

Wires JSON configs to the computational modules and emits machine-readable
artifacts (CSV/JSON) plus a manifest with content checksums.  One command per
process; re-running a command with the same config and seed reproduces the
output files byte for byte.

Heavy numeric imports happen inside the command handlers so that ``--threads``
can pin the BLAS/OpenMP thread counts before numpy is first loaded.
"""

import argparse
import hashlib
import json
import logging
import os
import sys

log = logging.getLogger("waveobs")

COMMANDS = (
    "graph-cobs",
    "spectrum",
    "hum",
    "optimize",
    "sweep",
    "power-cobs",
    "verify",
)

_SNAP_TOL = 1e-10  # printing only: eigenvalue-derived scalars snap to integers


class UsageError(Exception):
    """Invalid or contradictory configuration (exit status 2)."""


# ---------------------------------------------------------------------------
# formatting and artifact plumbing


def _fmt(x):
    """One CSV cell: ints verbatim, floats at 17 significant digits."""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return "%.17g" % float(x)


def _snap(x, tol=_SNAP_TOL):
    """Round to the nearest integer when within ``tol`` (display helper)."""
    x = float(x)
    r = round(x)
    return float(r) if abs(x - r) <= tol else x


def _jsonable(obj):
    """Recursively convert to plain JSON types; integral floats become ints."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if f.is_integer() and abs(f) < 2**53:
            return int(f)
        return f
    return obj


class ArtifactWriter:
    """Writes CSV/JSON artifacts into one directory and records checksums."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.records = {}

    def _ensure_dir(self):
        try:
            os.makedirs(self.out_dir, exist_ok=True)
        except OSError as exc:
            raise UsageError(f"output directory not writable: {exc}")

    def _write_bytes(self, name, data):
        self._ensure_dir()
        path = os.path.join(self.out_dir, name)
        with open(path, "wb") as f:
            f.write(data)
        self.records[name] = hashlib.sha256(data).hexdigest()
        log.info("wrote %s (%d bytes)", path, len(data))

    def write_csv(self, name, header, rows):
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_fmt(c) for c in row))
        self._write_bytes(name, ("\n".join(lines) + "\n").encode("ascii"))

    def write_json(self, name, obj):
        text = json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"
        self._write_bytes(name, text.encode("ascii"))

    def write_manifest(self, command, seed):
        manifest = {
            "command": command,
            "seed": seed,
            "files": [
                {"path": name, "sha256": digest}
                for name, digest in sorted(self.records.items())
            ],
        }
        text = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "wb") as f:
            f.write(text.encode("ascii"))
        log.info("wrote %s", path)


# ---------------------------------------------------------------------------
# config handling


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    return doc


def _merge_config(command, defaults, given):
    config = dict(defaults)
    for key, value in given.items():
        if key == "command":
            if value != command:
                raise UsageError(
                    f"config is for command {value!r}, invoked as {command!r}"
                )
            continue
        if key not in defaults:
            raise UsageError(f"unknown config key for {command}: {key!r}")
        config[key] = value
    return config


def _positive(config, key, type_=float):
    value = config[key]
    try:
        value = type_(value)
    except (TypeError, ValueError):
        raise UsageError(f"config key {key!r} must be a number, got {value!r}")
    if not value > 0:
        raise UsageError(f"config key {key!r} must be positive, got {value!r}")
    return value


def _nonnegative(config, key, type_=float):
    value = config[key]
    try:
        value = type_(value)
    except (TypeError, ValueError):
        raise UsageError(f"config key {key!r} must be a number, got {value!r}")
    if value < 0:
        raise UsageError(f"config key {key!r} must be >= 0, got {value!r}")
    return value


def _fixture_doc(name):
    from importlib import resources

    ref = resources.files("waveobs").joinpath("fixtures", f"{name}.json")
    try:
        return json.loads(ref.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"unknown fixture: {name!r}")


def _resolve_domain(spec):
    """Domain from a config entry: fixture name, external path, or inline."""
    from waveobs.grid import domain_from_json

    if not isinstance(spec, dict):
        raise UsageError("domain spec must be a JSON object")
    if "fixture" in spec:
        doc = _fixture_doc(spec["fixture"])
    elif "path" in spec:
        try:
            with open(spec["path"], "r", encoding="utf-8") as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read domain file: {exc}")
    else:
        doc = spec
    try:
        return domain_from_json(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid domain: {exc}")


def _resolve_data(config):
    """Initial data (y0, y1, breakpoints, preset) from a config."""
    from waveobs.presets import get_preset

    preset_name = config.get("preset")
    data = config.get("data")
    if preset_name is not None and data is not None:
        raise UsageError("give either 'preset' or 'data', not both")
    if data is not None:
        return _custom_data(data)
    if preset_name is None:
        preset_name = "ex1"
    try:
        preset = get_preset(preset_name)
    except KeyError as exc:
        raise UsageError(str(exc))
    return preset.y0, preset.y1, preset.data_breakpoints(), preset.name


def _custom_data(data):
    """Piecewise data from node/cell arrays: y0 affine on nodes, y1 constant per cell."""
    import numpy as np

    if not isinstance(data, dict) or "y0_nodes" not in data:
        raise UsageError("custom data needs a 'y0_nodes' array")
    y0_nodes = np.asarray(data["y0_nodes"], dtype=float)
    if y0_nodes.ndim != 1 or y0_nodes.size < 3:
        raise UsageError("'y0_nodes' must be a 1-d array of at least 3 values")
    m = y0_nodes.size - 1
    if abs(y0_nodes[0]) > 1e-12 or abs(y0_nodes[-1]) > 1e-12:
        raise UsageError("'y0_nodes' must vanish at both ends")
    nodes = np.arange(m + 1) / m

    def y0(x):
        return np.interp(np.asarray(x, dtype=float), nodes, y0_nodes)

    y1_cells = data.get("y1_cells")
    if y1_cells is None:
        y1 = None
    else:
        y1_cells = np.asarray(y1_cells, dtype=float)
        if y1_cells.shape != (m,):
            raise UsageError(f"'y1_cells' must have {m} entries (one per cell)")

        def y1(x):
            idx = np.clip((np.asarray(x, dtype=float) * m).astype(int), 0, m - 1)
            return y1_cells[idx]

    breakpoints = tuple(nodes[1:-1])
    return y0, y1, breakpoints, "custom"


def _resolve_region(config, T, curve_nodes=128):
    """Observation region from a config 'domain' entry (weighted or sharp)."""
    from waveobs.grid import Cylinder, CurveTube, SquareUnion
    from waveobs.hum import IndicatorRegion, SmoothedTube, WeightProfile

    spec = config.get("domain")
    if spec is None:
        spec = {"type": "cylinder", "x0": 0.25, "delta0": 0.15, "T": T}
    domain = _resolve_domain(spec)
    if abs(float(domain.T) - float(T)) > 1e-12:
        raise UsageError(
            f"domain horizon T={float(domain.T)} does not match config T={float(T)}"
        )
    delta = config.get("delta")
    if isinstance(domain, SquareUnion):
        return IndicatorRegion(domain)
    if isinstance(domain, Cylinder):
        return SmoothedTube.around(
            float(domain.x0),
            float(domain.T),
            float(domain.delta0),
            delta,
            n_nodes=curve_nodes,
        )
    if isinstance(domain, CurveTube):
        return SmoothedTube(domain.curve, WeightProfile(float(domain.delta0), delta))
    raise UsageError(f"cannot build an observation region from {type(domain).__name__}")


# ---------------------------------------------------------------------------
# command handlers


def _cmd_graph_cobs(config, writer, seed):
    from waveobs.graph import observability_constant_graph

    defaults = {"domain": {"fixture": "chevron_l4"}, "level": None, "eps": None}
    config = _merge_config("graph-cobs", defaults, config)
    if config["level"] is not None and config["eps"] is not None:
        raise UsageError("give either 'level' or 'eps', not both")
    level = int(_positive(config, "level", int)) if config["level"] is not None else None
    eps = _positive(config, "eps") if config["eps"] is not None else None
    domain = _resolve_domain(config["domain"])
    gc = observability_constant_graph(domain, eps=eps, level=level)
    result = {
        "c_obs": _snap(gc.c_obs),
        "lambda": _snap(gc.lam),
        "n": gc.n,
        "min_degree": gc.min_degree,
        "c_obs_bound": _snap(gc.c_obs_bound),
        "num_squares": len(gc.squares),
        "num_vertices": gc.graph.degrees.size,
    }
    writer.write_json("result.json", result)
    return result


def _cmd_spectrum(config, writer, seed):
    from waveobs.graph import (
        laplacian,
        observability_constant_graph,
        refined_laplacian,
        spectrum,
        vertex_position,
    )

    defaults = {
        "domain": {"fixture": "chevron_l4"},
        "level": None,
        "eps": None,
        "refine": 1,
    }
    config = _merge_config("spectrum", defaults, config)
    level = int(_positive(config, "level", int)) if config["level"] is not None else None
    eps = _positive(config, "eps") if config["eps"] is not None else None
    p = int(_positive(config, "refine", int))
    domain = _resolve_domain(config["domain"])
    gc = observability_constant_graph(domain, eps=eps, level=level)
    n = gc.n
    base = laplacian(gc.graph)
    if p == 1:
        matrix = base
        names = [None] * (2 * n)
        for i in list(range(-n, 0)) + list(range(1, n + 1)):
            names[vertex_position(i, n)] = f"v{i}"
    else:
        matrix = refined_laplacian(gc.graph, p)
        names = [None] * (2 * n * p)
        for i in list(range(-n, 0)) + list(range(1, n + 1)):
            for s in range(p):
                names[vertex_position(i, n) * p + s] = f"v{i}s{s}"
    eigenvalues = [_snap(v) for v in spectrum(matrix / p)]
    writer.write_csv("laplacian.csv", names, matrix.tolist())
    writer.write_csv(
        "spectrum.csv",
        [f"lambda_{k + 1}" for k in range(len(eigenvalues))],
        [eigenvalues],
    )
    result = {
        "n": n,
        "refine": p,
        "size": int(matrix.shape[0]),
        "algebraic_connectivity": _snap(gc.lam),
        "spectrum": eigenvalues,
    }
    writer.write_json("result.json", result)
    return result


def _raster(writer, solution, nx, nt):
    import numpy as np

    from waveobs.dalembert import eval_phi
    from waveobs.hum import control_density

    T = float(solution.region.T)
    xs = np.linspace(0.0, 1.0, nx)
    ts = np.linspace(0.0, T, nt)
    X, Tt = np.meshgrid(xs, ts)  # t-major rows
    phi = eval_phi(solution.data, X.ravel(), Tt.ravel())
    v = control_density(solution, X.ravel(), Tt.ravel())
    rows_phi = np.column_stack([X.ravel(), Tt.ravel(), phi])
    rows_v = np.column_stack([X.ravel(), Tt.ravel(), v])
    writer.write_csv("phi.csv", ["x", "t", "phi"], rows_phi.tolist())
    writer.write_csv("control.csv", ["x", "t", "v"], rows_v.tolist())


def _cmd_hum(config, writer, seed):
    from waveobs.hum import forward_verify, hum_control

    defaults = {
        "preset": None,
        "data": None,
        "domain": None,
        "T": None,
        "level": 64,
        "tol": 1e-10,
        "quad": 4,
        "grid_m": None,
        "curve_nodes": 128,
        "delta": None,
        "raster_nx": None,
        "raster_nt": None,
    }
    config = _merge_config("hum", defaults, config)
    level = int(_positive(config, "level", int))
    tol = _positive(config, "tol")
    quad = int(_positive(config, "quad", int))
    curve_nodes = int(_positive(config, "curve_nodes", int))
    y0, y1, breakpoints, data_name = _resolve_data(config)
    T = float(config["T"]) if config["T"] is not None else 2.0
    region = _resolve_region(config, T, curve_nodes)
    solution = hum_control(region, level, y0, y1, breakpoints, rtol=tol, quad=quad)
    grid_m = (
        int(_positive(config, "grid_m", int)) if config["grid_m"] is not None else None
    )
    check = forward_verify(solution, y0, y1, breakpoints, grid_m)
    nx = (
        int(_positive(config, "raster_nx", int))
        if config["raster_nx"] is not None
        else level + 1
    )
    nt = (
        int(_positive(config, "raster_nt", int))
        if config["raster_nt"] is not None
        else int(round(T * level)) + 1
    )
    _raster(writer, solution, nx, nt)
    result = {
        "cost": solution.cost,
        "iterations": solution.iterations,
        "residual": solution.residual,
        "terminal_ratio": check["ratio"],
        "energy_initial": check["energy_initial"],
        "energy_terminal": check["energy_terminal"],
        "level": level,
        "T": T,
        "data": data_name,
    }
    writer.write_json("result.json", result)
    return result


def _gamma0_curve(spec, T, n_nodes):
    import numpy as np

    from waveobs.grid import Curve

    if spec is None:
        raise UsageError("optimize needs a 'gamma0' spec")
    if not isinstance(spec, dict):
        raise UsageError("'gamma0' must be an object")
    if "constant" in spec:
        return Curve.constant(float(spec["constant"]), T, n_nodes)
    if "times" in spec and "values" in spec:
        times = np.asarray(spec["times"], dtype=float)
        values = np.asarray(spec["values"], dtype=float)
        try:
            return Curve(times, values)
        except ValueError as exc:
            raise UsageError(f"invalid gamma0 curve: {exc}")
    raise UsageError("'gamma0' needs 'constant' or 'times'+'values'")


def _snapshot_indices(count, limit=12):
    if count <= limit:
        return list(range(count))
    step = (count - 1) / (limit - 1)
    idx = sorted({int(round(k * step)) for k in range(limit)})
    idx[-1] = count - 1
    return idx


def _cmd_optimize(config, writer, seed):
    import numpy as np

    from waveobs.presets import get_preset
    from waveobs.shape import cylindrical_sweep, optimize, performance_index

    defaults = {
        "preset": None,
        "data": None,
        "T": None,
        "eps_reg": None,
        "rho": None,
        "curve_nodes": 128,
        "level": 64,
        "gamma0": None,
        "max_iters": 500,
        "delta0": 0.15,
        "delta": None,
        "patience": 10,
        "stop_tol": 1e-3,
        "sweep_count": 13,
    }
    config = _merge_config("optimize", defaults, config)
    if config["preset"] is None and config["data"] is None:
        config["preset"] = "ex1"
    y0, y1, breakpoints, data_name = _resolve_data(config)
    preset = get_preset(config["preset"]) if config["preset"] is not None else None
    T = float(config["T"]) if config["T"] is not None else (preset.T if preset else 2.0)
    eps = (
        float(_nonnegative(config, "eps_reg"))
        if config["eps_reg"] is not None
        else (preset.eps if preset else 1e-2)
    )
    rho = (
        _positive(config, "rho")
        if config["rho"] is not None
        else (preset.rho if preset else 1e-4)
    )
    level = int(_positive(config, "level", int))
    curve_nodes = int(_positive(config, "curve_nodes", int))
    max_iters = int(_positive(config, "max_iters", int))
    delta0 = _positive(config, "delta0")
    patience = int(_positive(config, "patience", int))
    stop_tol = _positive(config, "stop_tol")
    sweep_count = int(_positive(config, "sweep_count", int))
    gamma0_spec = config["gamma0"]
    if gamma0_spec is None and preset is not None:
        gamma0_spec = {"constant": preset.x0_init}
    curve0 = _gamma0_curve(gamma0_spec, T, curve_nodes)
    if abs(curve0.T - T) > 1e-12:
        raise UsageError(f"gamma0 horizon {curve0.T} does not match T={T}")

    trace = optimize(
        y0,
        curve0,
        delta0,
        level,
        y1=y1,
        breakpoints=breakpoints,
        delta=config["delta"],
        rho=rho,
        eps=eps,
        max_iters=max_iters,
        patience=patience,
        tol=stop_tol,
    )

    costs = trace.costs
    lips = [c.lipschitz_estimate() for c in trace.curves[: len(costs)]]
    rows = []
    for n in range(len(costs)):
        delta_j = costs[n] - costs[n - 1] if n > 0 else 0.0
        rows.append([n, costs[n], delta_j, lips[n]])
    writer.write_csv(
        "iterations.csv", ["n", "J_eps", "delta_J", "lipschitz_estimate"], rows
    )

    snap_rows = []
    for n in _snapshot_indices(len(trace.curves)):
        c = trace.curves[n]
        for t, g in zip(c.times, c.values):
            snap_rows.append([n, t, g])
    writer.write_csv("curve_snapshots.csv", ["iteration", "t", "value"], snap_rows)
    final = trace.curve
    writer.write_csv(
        "curve_final.csv", ["t", "value"], np.column_stack([final.times, final.values])
    )

    sweep = cylindrical_sweep(
        y0,
        delta0,
        level,
        T,
        y1=y1,
        breakpoints=breakpoints,
        delta=config["delta"],
        x0s=np.linspace(0.2, 0.8, sweep_count),
        n_nodes=curve_nodes,
    )
    writer.write_csv(
        "sweep.csv", ["x0", "J"], np.column_stack([sweep.x0s, sweep.costs])
    )
    j_opt = float(costs[-1])
    result = {
        "data": data_name,
        "T": T,
        "eps_reg": eps,
        "rho": rho,
        "level": level,
        "curve_nodes": curve_nodes,
        "iterations": trace.iterations,
        "converged": trace.converged,
        "J0": float(costs[0]),
        "J_opt": j_opt,
        "J_raw_final": float(trace.raw_costs[-1]),
        "lipschitz_final": float(lips[-1]),
        "sweep_best_x0": sweep.best_x0,
        "sweep_best_J": sweep.best_cost,
        "sweep_worst_x0": sweep.worst_x0,
        "sweep_worst_J": sweep.worst_cost,
        "performance_index": performance_index(j_opt, sweep.best_cost),
    }
    writer.write_json("summary.json", result)
    return result


def _cmd_sweep(config, writer, seed):
    import numpy as np

    from waveobs.shape import cylindrical_sweep

    defaults = {
        "preset": None,
        "data": None,
        "T": None,
        "level": 64,
        "curve_nodes": 128,
        "delta0": 0.15,
        "delta": None,
        "x0_min": 0.2,
        "x0_max": 0.8,
        "count": 13,
    }
    config = _merge_config("sweep", defaults, config)
    y0, y1, breakpoints, data_name = _resolve_data(config)
    T = float(config["T"]) if config["T"] is not None else 2.0
    level = int(_positive(config, "level", int))
    curve_nodes = int(_positive(config, "curve_nodes", int))
    delta0 = _positive(config, "delta0")
    count = int(_positive(config, "count", int))
    x0_min, x0_max = float(config["x0_min"]), float(config["x0_max"])
    if not 0.0 < x0_min <= x0_max < 1.0:
        raise UsageError("need 0 < x0_min <= x0_max < 1")
    sweep = cylindrical_sweep(
        y0,
        delta0,
        level,
        T,
        y1=y1,
        breakpoints=breakpoints,
        delta=config["delta"],
        x0s=np.linspace(x0_min, x0_max, count),
        n_nodes=curve_nodes,
    )
    writer.write_csv(
        "sweep.csv", ["x0", "J"], np.column_stack([sweep.x0s, sweep.costs])
    )
    result = {
        "data": data_name,
        "T": T,
        "level": level,
        "best_x0": sweep.best_x0,
        "best_J": sweep.best_cost,
        "worst_x0": sweep.worst_x0,
        "worst_J": sweep.worst_cost,
    }
    writer.write_json("result.json", result)
    return result


def _cmd_power_cobs(config, writer, seed):
    import numpy as np

    from waveobs.power import power_iterate

    defaults = {
        "domain": {"fixture": "chevron_l4"},
        "level": 64,
        "tol": 1e-4,
        "max_iters": 50,
        "solver_tol": 1e-10,
    }
    config = _merge_config("power-cobs", defaults, config)
    level = int(_positive(config, "level", int))
    tol = _positive(config, "tol")
    max_iters = int(_positive(config, "max_iters", int))
    solver_tol = _positive(config, "solver_tol")
    domain = _resolve_domain(config["domain"])
    res = power_iterate(
        domain, level, tol=tol, max_iters=max_iters, rtol=solver_tol
    )
    writer.write_csv(
        "estimates.csv",
        ["k", "estimate"],
        [[k + 1, est] for k, est in enumerate(res.estimates)],
    )
    m = res.vector.m
    xs = np.arange(m + 1) / m
    writer.write_csv(
        "worst_datum.csv",
        ["x", "y0", "y1"],
        np.column_stack([xs, res.vector.y0, res.vector.y1]),
    )
    result = {
        "constant": res.constant,
        "iterations": res.iterations,
        "converged": res.converged,
        "level": level,
    }
    writer.write_json("result.json", result)
    return result


def _cmd_verify(config, writer, seed):
    import numpy as np

    from waveobs.grid import SquareUnion
    from waveobs.hum import forward_verify, hum_control

    defaults = {
        "preset": None,
        "data": None,
        "domain": None,
        "T": None,
        "levels": [32, 64],
        "grid_factor": 4,
        "tol": 1e-10,
        "quad": 4,
        "curve_nodes": 128,
        "delta": None,
        "obs_samples": 0,
    }
    config = _merge_config("verify", defaults, config)
    levels = config["levels"]
    if not isinstance(levels, (list, tuple)) or not levels:
        raise UsageError("'levels' must be a nonempty array of integers")
    levels = [int(v) for v in levels]
    if any(v < 1 for v in levels):
        raise UsageError("'levels' must be positive")
    grid_factor = int(_positive(config, "grid_factor", int))
    tol = _positive(config, "tol")
    quad = int(_positive(config, "quad", int))
    curve_nodes = int(_positive(config, "curve_nodes", int))
    obs_samples = int(_nonnegative(config, "obs_samples", int))
    y0, y1, breakpoints, data_name = _resolve_data(config)
    T = float(config["T"]) if config["T"] is not None else 2.0
    region = _resolve_region(config, T, curve_nodes)

    rows = []
    ratios = []
    for level in levels:
        solution = hum_control(region, level, y0, y1, breakpoints, rtol=tol, quad=quad)
        check = forward_verify(solution, y0, y1, breakpoints, grid_factor * level)
        rows.append(
            [
                level,
                grid_factor * level,
                solution.cost,
                solution.iterations,
                solution.residual,
                check["ratio"],
            ]
        )
        ratios.append(check["ratio"])
    writer.write_csv(
        "verify.csv",
        ["level", "grid_m", "cost", "iterations", "residual", "terminal_ratio"],
        rows,
    )
    result = {
        "data": data_name,
        "T": T,
        "levels": levels,
        "ratios": ratios,
        "decreasing": all(b < a for a, b in zip(ratios, ratios[1:])),
    }

    if obs_samples:
        from waveobs.dalembert import check_discrete_observability
        from waveobs.graph import observability_constant_graph
        from waveobs.testing import random_initial_data

        spec = config.get("domain")
        domain = _resolve_domain(spec) if spec is not None else None
        if not isinstance(domain, SquareUnion):
            raise UsageError("'obs_samples' needs a square_union domain")
        gc = observability_constant_graph(domain)
        rng = np.random.default_rng(seed)
        violations = 0
        for _ in range(obs_samples):
            data = random_initial_data(rng, domain.level)
            out = check_discrete_observability(data, gc.squares, gc.n, gc.c_obs)
            violations += 0 if out["holds"] else 1
        result["obs_samples"] = obs_samples
        result["obs_violations"] = violations

    writer.write_json("result.json", result)
    return result


_HANDLERS = {
    "graph-cobs": _cmd_graph_cobs,
    "spectrum": _cmd_spectrum,
    "hum": _cmd_hum,
    "optimize": _cmd_optimize,
    "sweep": _cmd_sweep,
    "power-cobs": _cmd_power_cobs,
    "verify": _cmd_verify,
}


# ---------------------------------------------------------------------------
# entry point


def _set_threads(n):
    for var in (
        "OPENBLAS_NUM_THREADS",
        "OMP_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
    ):
        os.environ[var] = str(n)
    if "numpy" in sys.modules:
        log.warning("numpy already imported; --threads may not take effect")


def _setup_logging():
    name = os.environ.get("WAVEOBS_LOG", "warning").upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="waveobs",
        description=(
            "Observability constants, null controls and support-curve "
            "optimization for the 1-d wave equation on moving domains."
        ),
    )
    parser.add_argument("command", choices=COMMANDS, help="subcommand to run")
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument(
        "--out", metavar="DIR", default="waveobs-out", help="artifact directory"
    )
    parser.add_argument("--seed", metavar="N", type=int, default=0, help="RNG seed")
    parser.add_argument(
        "--threads",
        metavar="N",
        type=int,
        help="pin BLAS/OpenMP thread counts (set before numpy loads)",
    )
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be >= 1")
        _set_threads(args.threads)
    _setup_logging()

    writer = ArtifactWriter(args.out)
    try:
        config = _load_config(args.config)
        result = _HANDLERS[args.command](config, writer, args.seed)
    except UsageError as exc:
        parser.error(str(exc))  # exits 2
    except Exception as exc:  # computational failure -> structured error
        error = {
            "command": args.command,
            "error": {"type": type(exc).__name__, "message": str(exc)},
        }
        text = json.dumps(error, sort_keys=True)
        print(text)
        try:
            writer.write_json("error.json", error)
        except (OSError, UsageError):
            log.warning("could not write error.json")
        log.debug("failure detail", exc_info=True)
        return 1
    writer.write_manifest(args.command, args.seed)
    print(json.dumps(_jsonable(result), sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
