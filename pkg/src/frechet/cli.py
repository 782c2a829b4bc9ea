"""Command-line surface: distance evaluation, mean computation, and the
experiment suites, with machine-readable JSON/CSV results.

Every run is driven by one JSON config file (stamped with a schema
version) plus optional key=value overrides. Result JSON re-parses under
the same schema; CSV bodies are byte-identical across reruns with the
same seed and config, with timestamps confined to a metadata sidecar
field.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .core import (
    ConfigurationError,
    ConvergenceFailure,
    DiscreteMeasure,
    FrechetConfig,
    cocycle_gap,
    metric_axiom_violations,
    power_bound_slack,
    renorm_bound_slack,
)
from .convergence import gamma_convergence_probe
from .solvers import SolverConfig, grid_oracle
from .spaces import space_from_json
from .stochastics import (
    ExperimentConfig,
    ergodic_experiment,
    ldp_experiment,
    sampler_from_json,
    slln_experiment,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _load_config(path: str, overrides: list[str]) -> dict:
    with open(path) as fh:
        config = json.load(fh)
    if config.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(
            f"config schema_version must be {SCHEMA_VERSION}")
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return config


def _require(config: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in config]
    if missing:
        raise ConfigurationError(f"config is missing required keys: {missing}")


def _measure_from_json(space, spec: dict) -> DiscreteMeasure:
    points = [space.point_from_json(obj) for obj in spec["support"]]
    weights = spec.get("weights")
    if weights is None:
        return DiscreteMeasure.uniform(space, points)
    return DiscreteMeasure.from_weights(space, points, np.asarray(weights, dtype=float))


def _experiment_config(config: dict, space) -> ExperimentConfig:
    targets = tuple(space.point_from_json(obj)
                    for obj in config.get("target_points", []))
    threads = int(os.environ.get("FRECHET_THREADS", "1"))
    solver_config = SolverConfig(
        max_iterations=int(config.get("max_iterations", 500)),
        step_tolerance=float(config.get("step_tolerance", 1e-10)),
        value_tolerance=float(config.get("value_tolerance", 1e-9)),
    )
    return ExperimentConfig(
        solver=config.get("solver", "grid"),
        epsilon=float(config.get("epsilon", 0.0)),
        grid_step=float(config.get("grid_step", 0.01)),
        grid_pad=float(config.get("grid_pad", 1.0)),
        target_points=targets,
        threshold=config.get("threshold"),
        max_workers=max(threads, 1),
        solver_config=solver_config,
    )


def _write_outputs(out: str, command: str, config: dict, result: dict,
                   rows: list[dict] | None, runtime: float | None = None) -> list[str]:
    written = []
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "result": result,
        "metadata": {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
                     "runtime_seconds": runtime,
                     "version": __version__},
    }
    json_path = out + ".json"
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    written.append(json_path)
    if rows:
        csv_path = out + ".csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
            writer.writeheader()
            for row in rows:
                # Wall-clock values would break byte-identical reruns; they
                # live in the JSON metadata sidecar instead.
                writer.writerow({k: ("" if k == "runtime" else v)
                                 for k, v in row.items()})
        written.append(csv_path)
    return written


def _cmd_dist(config: dict) -> tuple[dict, list[dict] | None, str]:
    _require(config, "space", "x", "y")
    space = space_from_json(config["space"])
    x = space.point_from_json(config["x"])
    y = space.point_from_json(config["y"])
    value = space.distance(x, y)
    return {"distance": value}, None, f"distance={value:.8f}"


def _cmd_mean(config: dict) -> tuple[dict, list[dict] | None, str]:
    _require(config, "space", "measure", "p")
    space = space_from_json(config["space"])
    mu = _measure_from_json(space, config["measure"])
    fc = FrechetConfig(p=float(config["p"]),
                       epsilon=float(config.get("epsilon", 0.0)))
    scheme = config.get("scheme", "grid")
    kwargs = {}
    if scheme in ("grid", "ball-grid"):
        kwargs["step"] = float(config.get("grid_step", 0.01))
        kwargs["pad"] = float(config.get("grid_pad", 1.0))
    grid = space.candidates(mu, scheme, **kwargs)
    band = grid_oracle(space, mu, fc, grid, resolution=kwargs.get("step"))
    result = {
        "mean_set": [space.point_to_json(pt) for pt in band.points],
        "resolution": band.resolution,
        "achieved_value": band.achieved_value,
    }
    return result, None, f"mean_set_size={len(band.points)} value={band.achieved_value:.6g}"


def _cmd_slln(config: dict) -> tuple[dict, list[dict] | None, str]:
    _require(config, "space", "sampler", "p", "n_grid")
    space = space_from_json(config["space"])
    sampler = sampler_from_json(config["sampler"])
    if "seed" in config:
        sampler = sampler.with_seed(int(config["seed"]))
    exp = _experiment_config(config, space)
    report = slln_experiment(space, sampler, float(config["p"]),
                             [int(n) for n in config["n_grid"]],
                             int(config.get("replications", 1)), exp)
    return report.to_json_dict(), report.rows(), f"final_dvec={report.dvec[-1]:.6g}"


def _cmd_ergodic(config: dict) -> tuple[dict, list[dict] | None, str]:
    _require(config, "space", "sampler", "p", "n_grid")
    space = space_from_json(config["space"])
    sampler = sampler_from_json(config["sampler"])
    if "seed" in config:
        sampler = sampler.with_seed(int(config["seed"]))
    exp = _experiment_config(config, space)
    report = ergodic_experiment(space, sampler, float(config["p"]),
                                [int(n) for n in config["n_grid"]], exp)
    return report.to_json_dict(), report.rows(), f"final_dvec={report.dvec[-1]:.6g}"


def _cmd_ldp(config: dict) -> tuple[dict, list[dict] | None, str]:
    _require(config, "space", "measure", "p", "n_grid", "event_points")
    space = space_from_json(config["space"])
    mu = _measure_from_json(space, config["measure"])
    events = [space.point_from_json(obj) for obj in config["event_points"]]
    result = ldp_experiment(
        space, mu, float(config["p"]), events,
        [int(n) for n in config["n_grid"]],
        mode=config.get("mode", "exact-binomial"),
        replications=int(config.get("replications", 1000)),
        seed=int(config.get("seed", 0)),
        simplex_step=float(config.get("simplex_step", 1e-3)))
    summary = f"theoretical_rate={result.theoretical_rate:.6g}"
    return result.to_json_dict(), result.rows(), summary


def _cmd_gamma(config: dict) -> tuple[dict, list[dict] | None, str]:
    _require(config, "space", "measures", "limit", "p")
    space = space_from_json(config["space"])
    seq = [_measure_from_json(space, spec) for spec in config["measures"]]
    limit = _measure_from_json(space, config["limit"])
    eps = config.get("eps_sequence") or [1.0 / (i + 1) for i in range(len(seq))]
    report = gamma_convergence_probe(
        space, seq, limit, float(config["p"]), [float(e) for e in eps],
        grid_step=float(config.get("grid_step", 0.01)),
        grid_pad=float(config.get("grid_pad", 1.0)),
        seed=int(config.get("seed", 0)))
    return report.to_json_dict(), report.rows(), f"final_dvec={report.dvec[-1]:.6g}"


def _cmd_diag(config: dict) -> tuple[dict, list[dict] | None, str]:
    _require(config, "space")
    space = space_from_json(config["space"])
    seed = int(config.get("seed", 0))
    trials = int(config.get("trials", 1000))
    rng = np.random.default_rng(seed)
    axioms = metric_axiom_violations(space, rng, trials=trials)

    # Functional algebra on random single-point measures and triples.
    p = float(config.get("p", 2.0))
    worst_cocycle = 0.0
    worst_renorm = 0.0
    worst_power = 0.0
    for _ in range(min(trials, 200)):
        pts = [space.sample_point(rng) for _ in range(5)]
        mu = DiscreteMeasure.uniform(space, pts[:2])
        worst_cocycle = max(worst_cocycle,
                            cocycle_gap(space, mu, pts[2], pts[3], pts[4], p))
        worst_renorm = max(worst_renorm,
                           -renorm_bound_slack(space, mu, pts[2], pts[3], p))
        worst_power = max(worst_power,
                          -power_bound_slack(space, pts[2], pts[3], pts[4],
                                             float(rng.uniform(0.0, 4.0))))
    result = {
        "axioms": {k: (bool(v) if isinstance(v, bool) else float(v))
                   for k, v in axioms.items()},
        "worst_cocycle_gap": worst_cocycle,
        "worst_renorm_violation": worst_renorm,
        "worst_power_violation": worst_power,
        "passed": bool(axioms["passed"] and worst_cocycle <= 1e-9
                       and worst_renorm <= 1e-9 and worst_power <= 1e-9),
    }
    rows = [{"check": k, "value": v} for k, v in result.items() if k != "axioms"]
    return result, rows, f"passed={result['passed']}"


_COMMANDS = {
    "dist": _cmd_dist,
    "mean": _cmd_mean,
    "slln": _cmd_slln,
    "ergodic": _cmd_ergodic,
    "ldp": _cmd_ldp,
    "gamma": _cmd_gamma,
    "diag": _cmd_diag,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frechet",
        description="Set-valued mean computation and experiments over metric spaces")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="path to a JSON config")
        cmd.add_argument("--out", required=True, help="output path prefix")
        cmd.add_argument("--set", dest="overrides", action="append", default=[],
                         metavar="KEY=VALUE", help="override a config entry")
        cmd.add_argument("--seed", type=int, default=None, help="override the seed")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args.config, args.overrides)
        if args.seed is not None:
            config["seed"] = args.seed
    except (OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}))
        return EXIT_CONFIG
    except ConfigurationError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}))
        return EXIT_CONFIG

    t0 = time.perf_counter()
    try:
        result, rows, summary = _COMMANDS[args.command](config)
    except (ConfigurationError, ValueError, KeyError) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}))
        return EXIT_CONFIG
    except ConvergenceFailure as exc:
        partial = {"error": "solver", "message": str(exc),
                   "iterations": exc.iterations}
        try:
            _write_outputs(args.out, args.command, config, partial, None)
        except OSError:
            pass
        print(json.dumps(partial))
        return EXIT_SOLVER

    runtime = time.perf_counter() - t0
    try:
        _write_outputs(args.out, args.command, config, result, rows, runtime=runtime)
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}))
        return EXIT_IO
    print(f"{args.command} {summary} runtime={runtime:.3f}s")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
