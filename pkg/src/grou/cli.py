"""Command-line entry point.

Subcommands cover the full workflow: ``simulate`` writes edge paths,
``estimate`` fits drift parameters, ``forecast`` rolls conditional means,
``benchmark`` runs Monte Carlo comparison studies, ``select`` performs
model and network selection on edge series, and ``mrc`` turns price files
into pre-averaged covariance series.

Every output embeds the resolved configuration and seed in its header, so
a run can be reproduced from its artifacts alone.  Exit codes: 0 success,
1 usage or input-format error, 2 numerical or data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .benchmarks import (
    MODEL_KINDS,
    BenchmarkContext,
    StudyConfig,
    evaluate,
    fit_benchmark,
    monte_carlo_study,
    predictive_study_config,
    study_rows_to_csv,
)
from .errors import GrouError
from .estimate import ThresholdPolicy, estimate_drift, estimate_triplet
from .forecast import one_step_map, rolling_forecast, system_from_fit, write_forecast_csv
from .graphs import EdgeGraph, pair_order, weight_matrices
from .model import GrouParams, build_companion, cov_integral
from .noise import LevySpec
from .selection import joint_network_model_search, select_model
from .simulate import make_uniform_grids, read_path_csv, simulate_path, write_path_csv
from .mrc import (
    MrcConfig,
    ingest_prices,
    read_edge_series_csv,
    rolling_mrc,
    write_edge_series_csv,
)


class _UsageError(Exception):
    """Raised for malformed invocations and inputs (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _seed_from(args, config=None):
    """Seed precedence: flag, then config field, then GROU_SEED, then 0."""
    if getattr(args, "seed", None) is not None:
        return args.seed
    if config and config.get("seed") is not None:
        return int(config["seed"])
    return int(os.environ.get("GROU_SEED", "0"))


def _read_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise _UsageError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise _UsageError(f"{what} file {path} is not valid JSON: {exc}") from None


def _load_graph(path):
    doc = _read_json(path, "graph")
    try:
        return EdgeGraph(doc["n_vertices"], [tuple(e) for e in doc["edges"]], doc.get("directed", False))
    except (KeyError, ValueError, TypeError) as exc:
        raise _UsageError(f"bad graph file {path}: {exc}") from None


def _load_params(path):
    doc = _read_json(path, "params")
    try:
        return GrouParams(np.asarray(doc["alpha"]), tuple(np.asarray(b) for b in doc["beta"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise _UsageError(f"bad params file {path}: {exc}") from None


def _load_noise(path):
    try:
        with open(path) as fh:
            return LevySpec.from_json(fh.read())
    except FileNotFoundError:
        raise _UsageError(f"noise file not found: {path}") from None
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise _UsageError(f"bad noise file {path}: {exc}") from None


def _policy_from(args):
    beta = getattr(args, "beta_exp", None)
    return ThresholdPolicy(beta_exp=beta, activity=args.activity)


def _parse_shapes(doc):
    return [(int(item[0]), tuple(int(r) for r in item[1])) for item in doc]


def _config_header(config):
    return [f"grou {__version__}", "config: " + json.dumps(config, sort_keys=True)]


# ---------------------------------------------------------------------------
# subcommand implementations


def _cmd_simulate(args):
    graph = _load_graph(args.graph)
    params = _load_params(args.params)
    noise = _load_noise(args.noise)
    if params.n_edges != graph.n_edges:
        raise _UsageError(
            f"params are for {params.n_edges} edges but graph has {graph.n_edges}"
        )
    seed = _seed_from(args)
    max_stage = max(max(params.stages, default=0), 1)
    weights = weight_matrices(graph, max_stage)
    system = build_companion(params, weights)
    grid = make_uniform_grids(args.t_end, args.mesh_fine, args.ratio)
    init = "stationary" if args.init == "stationary" else np.zeros(system.dim)
    path = simulate_path(system, noise, grid, init=init, rng_seed=seed)
    config = {
        "subcommand": "simulate",
        "graph": args.graph,
        "params": args.params,
        "noise": args.noise,
        "t_end": args.t_end,
        "mesh_fine": args.mesh_fine,
        "ratio": args.ratio,
        "init": args.init,
        "seed": seed,
    }
    write_path_csv(path, args.out, header_lines=_config_header(config))
    if args.truth_out:
        truth = path.truth
        sidecar = {
            "config": config,
            "init_state": truth.init_state.tolist(),
            "noise": json.loads(noise.to_json()),
        }
        if truth.arrival_times is not None:
            sidecar["jump_times"] = truth.arrival_times.tolist()
            sidecar["jump_sizes"] = truth.arrival_sizes.tolist()
        with open(args.truth_out, "w") as fh:
            json.dump(sidecar, fh, indent=2)
    print(f"wrote {path.n_points} observations of {path.n_edges} edges to {args.out}")
    return 0


def _shape_from_args(args):
    stages = [int(s) for s in args.stages.split(",")] if args.stages else []
    if len(stages) == 1 and args.lags > 1:
        stages = stages * args.lags
    if len(stages) != args.lags:
        raise _UsageError(
            f"--stages must list one count per lag: got {stages} for {args.lags} lags"
        )
    return (args.lags, tuple(stages))


def _cmd_estimate(args):
    path = read_path_csv(args.path, ratio=args.ratio)
    shape = _shape_from_args(args)
    weights = None
    if max(shape[1], default=0) > 0:
        if not args.graph:
            raise _UsageError("--graph is required when any neighborhood stage is positive")
        graph = _load_graph(args.graph)
        if graph.n_edges != path.n_edges:
            raise _UsageError(
                f"graph has {graph.n_edges} edges but path has {path.n_edges} columns"
            )
        weights = weight_matrices(graph, max(shape[1]))
    policy = _policy_from(args)
    triplet = _load_noise(args.triplet) if args.triplet else estimate_triplet(path, policy)
    result = estimate_drift(path, weights, shape, triplet, policy, ridge=args.ridge)
    config = {
        "subcommand": "estimate",
        "path": args.path,
        "ratio": args.ratio,
        "graph": args.graph,
        "lags": shape[0],
        "stages": list(shape[1]),
        "activity": args.activity,
        "beta_exp": args.beta_exp,
        "ridge": args.ridge,
        "triplet": args.triplet,
    }
    report = {"config": config, **result.to_json_dict()}
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"estimated {result.theta_hat.size} drift parameters; bic={result.bic:.6g}")
    return 0


def _fit_from_report(doc):
    """Reconstruct the pieces of an estimation report the forecaster needs."""
    from .estimate import EstimationResult

    triplet = LevySpec.from_json(json.dumps(doc["triplet"]))
    theta = np.asarray(doc["theta"], dtype=float)
    shape = None
    if doc.get("structure", "grou") == "grou":
        shape = (int(doc["shape"]["L"]), tuple(int(r) for r in doc["shape"]["R"]))
    return EstimationResult(
        theta_hat=theta,
        score=np.zeros_like(theta),
        info=np.eye(theta.size),
        loglik=doc.get("loglik", 0.0),
        bic=doc.get("bic", float("nan")),
        n_coarse=doc.get("n_coarse", 2),
        ridge_used=doc.get("ridge", 0.0),
        triplet_used=triplet,
        structure=doc.get("structure", "grou"),
        shape=shape,
        n_edges=int(doc["n_edges"]),
        diagnostics=doc.get("diagnostics", {}),
    )


def _cmd_forecast(args):
    path = read_path_csv(args.path, ratio=args.ratio)
    doc = _read_json(args.fit, "fit report")
    try:
        fitted = _fit_from_report(doc)
    except (KeyError, ValueError) as exc:
        raise _UsageError(f"bad fit report {args.fit}: {exc}") from None
    weights = None
    if fitted.structure == "grou" and max(fitted.shape[1], default=0) > 0:
        if not args.graph:
            raise _UsageError("--graph is required for a network-structured fit")
        graph = _load_graph(args.graph)
        weights = weight_matrices(graph, max(fitted.shape[1]))
    if fitted.n_edges != path.n_edges:
        raise _UsageError(
            f"fit is for {fitted.n_edges} edges but path has {path.n_edges} columns"
        )
    h = path.grid.mesh_coarse if args.horizon == "coarse" else path.grid.mesh_fine
    h *= args.horizon_steps
    system = system_from_fit(fitted, weights)
    noise_mat = (
        system.noise_selector
        @ fitted.triplet_used.covariance_rate
        @ system.noise_selector.T
    )
    _, state_cov = cov_integral(system.transition, noise_mat, h)
    variance = system.observation @ state_cov @ system.observation.T
    n_eval = min(args.eval_tail, path.n_points - 1)
    eval_idx = range(path.n_points - n_eval, path.n_points)
    means = rolling_forecast(path, fitted, weights, eval_idx, horizon=args.horizon,
                             horizon_steps=args.horizon_steps)
    # one extra forecast beyond the observed horizon, from the final point
    const, gain = one_step_map(system, fitted.triplet_used.mean_rate, h)
    beyond = const + gain @ path.values[-1]
    times = np.concatenate([path.grid.fine[list(eval_idx)], [path.grid.t_end + h]])
    all_means = np.vstack([means, beyond])
    var_rows = np.tile(np.diag(variance), (all_means.shape[0], 1))
    labels = path.labels or tuple(f"e_{k+1}" for k in range(path.n_edges))
    config = {
        "subcommand": "forecast",
        "path": args.path,
        "fit": args.fit,
        "graph": args.graph,
        "horizon": args.horizon,
        "horizon_steps": args.horizon_steps,
        "eval_tail": args.eval_tail,
    }
    write_forecast_csv(
        args.out, times, labels, all_means, var_rows, header_lines=_config_header(config)
    )
    print(f"wrote {all_means.shape[0]} forecast rows to {args.out}")
    return 0


_SCENARIOS = {
    "correct": "correct",
    "missing_dominant": ("missing_edge", (0, 1)),
    "missing_weak": ("missing_edge", (3, 4)),
}


def _study_from_config(doc, seed):
    models = tuple(doc.get("models", MODEL_KINDS))
    common = {
        "n_paths": int(doc.get("n_paths", 200)),
        "n_obs": int(doc.get("n_obs", 2187)),
        "t_end": float(doc.get("t_end", 2.0)),
        "ratio": int(doc.get("ratio", 1)),
        "test_size": int(doc.get("test_size", 400)),
        "models": models,
        "seed": seed,
    }
    design = doc.get("design")
    if design:
        scenario = design.get("scenario", "correct")
        if isinstance(scenario, str):
            if scenario not in _SCENARIOS:
                raise _UsageError(
                    f"unknown scenario {scenario!r}; choose from {sorted(_SCENARIOS)}"
                )
            scenario = _SCENARIOS[scenario]
        return predictive_study_config(
            sigma2=float(design.get("sigma2", 10.0)), scenario=scenario, **common
        )
    try:
        graph = _load_graph(doc["graph"])
        params = _load_params(doc["params"])
        noise = _load_noise(doc["noise"])
    except KeyError as exc:
        raise _UsageError(f"study config missing field {exc}") from None
    shape = doc.get("shape", {"L": 1, "R": [1]})
    scenario = doc.get("scenario", {"type": "correct"})
    if scenario.get("type") == "correct":
        scen = "correct"
    elif scenario.get("type") == "missing_edge":
        scen = ("missing_edge", tuple(scenario["edge"]))
    else:
        raise _UsageError(f"unknown scenario {scenario!r}")
    return StudyConfig(
        graph=graph,
        params=params,
        noise=noise,
        shape=(int(shape["L"]), tuple(int(r) for r in shape["R"])),
        scenario=scen,
        **common,
    )


def _cmd_benchmark(args):
    doc = _read_json(args.config, "study config")
    seed = _seed_from(args, doc)
    config = _study_from_config(doc, seed)
    rows = monte_carlo_study(config, threads=args.threads)
    header = _config_header({"subcommand": "benchmark", "config_file": args.config,
                             "resolved": doc, "seed": seed})
    study_rows_to_csv(rows, args.out, header_lines=header)
    print(f"wrote {len(rows)} model rows to {args.out}")
    return 0


def _cmd_select(args):
    doc = _read_json(args.config, "selection config")
    seed = _seed_from(args, doc)
    try:
        rolling = read_edge_series_csv(doc["edge_series"])
        mesh_fine = float(doc.get("mesh_fine", 0.01))
        ratio = int(doc.get("ratio", 18))
        shapes = _parse_shapes(doc["shapes"])
    except KeyError as exc:
        raise _UsageError(f"selection config missing field {exc}") from None
    path = rolling.to_path(mesh_fine=mesh_fine, ratio=ratio)
    test_fraction = float(doc.get("test_fraction", 0.2))
    n_test = max(2, int(round(test_fraction * path.n_points)))
    n_train = path.n_points - n_test
    if n_train < 10:
        raise _UsageError("edge series too short for the requested test fraction")
    # covariance series live at a positive level while the zero-mean model
    # reads levels as drift signal; center per edge on the training mean
    # (one-step increments, hence both metrics, are shift-invariant)
    if doc.get("demean", True):
        center = path.values[:n_train].mean(axis=0)
        from .simulate import SampledPath

        path = SampledPath(grid=path.grid, values=path.values - center, labels=path.labels)
    train = path.section(0, n_train)
    policy = ThresholdPolicy(activity=doc.get("activity", "finite"))
    mode = doc.get("mode", "shapes")
    common = dict(
        tolerance=float(doc.get("tolerance", 1e-2)),
        eval_fraction=float(doc.get("eval_fraction", 0.2)),
        policy=policy,
        horizon="fine",
    )
    if mode == "shapes":
        if "graph" not in doc:
            raise _UsageError("selection config needs 'graph' in shapes mode")
        graph = _load_graph(doc["graph"])
        order = {p: k for k, p in enumerate(pair_order(len(rolling.asset_ids)))}
        cols = [order[e] for e in graph.edges]
        outcome = select_model(train.select_columns(cols), graph, shapes, **common)
        chosen_cols = cols
    elif mode == "joint":
        n_vertices = int(doc.get("n_vertices", len(rolling.asset_ids)))
        outcome = joint_network_model_search(
            train,
            n_vertices,
            shapes,
            n_candidates=int(doc.get("n_candidates", 1000)),
            edge_prob=float(doc.get("edge_prob", 0.4)),
            screen_shape=_parse_shapes([doc.get("screen_shape", [1, [1]])])[0],
            retain=int(doc.get("retain", 50)),
            rng_seed=seed,
            threads=args.threads,
            **common,
        )
        order = {p: k for k, p in enumerate(pair_order(n_vertices))}
        chosen_cols = [order[e] for e in outcome.chosen_graph.edges]
    else:
        raise _UsageError(f"unknown selection mode {mode!r}")

    report = {
        "config": {**doc, "seed": seed},
        **outcome.to_json_dict(),
    }
    # final held-out comparison table in the one-step forecast layout
    table = _final_table(path, outcome, chosen_cols, n_train, policy)
    report["test_table"] = table
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=2)
    if doc.get("table_out"):
        _write_table_csv(doc["table_out"], table, doc, seed)
    lags, stages = outcome.chosen.shape
    print(
        f"selected grOU({lags},{list(stages)}) with validation DirAcc "
        f"{outcome.chosen.dir_acc:.4f}; test table has {len(table)} models"
    )
    return 0


def _final_table(path, outcome, cols, n_train, policy):
    sub = path.select_columns(cols)
    graph = outcome.chosen_graph
    shape = outcome.chosen.shape
    weights = weight_matrices(graph, max(max(shape[1], default=0), 1))
    train = sub.section(0, n_train)
    triplet = estimate_triplet(train, policy)
    ctx = BenchmarkContext(
        graph=graph, weights=weights, shape=shape, policy=policy, triplet=triplet
    )
    models = [fit_benchmark(kind, train, ctx) for kind in MODEL_KINDS]
    reports = evaluate(models, sub, range(n_train, sub.n_points))
    lags, stages = shape
    table = []
    for rep in reports:
        name = f"grOU({lags},{list(stages)})" if rep.kind == "GROU" else rep.kind
        table.append({"model": name, "rmse": rep.rmse, "dir_acc": rep.dir_acc})
    return table


def _write_table_csv(file, table, doc, seed):
    with open(file, "w") as fh:
        for line in _config_header({"subcommand": "select", "resolved": doc, "seed": seed}):
            fh.write(f"# {line}\n")
        fh.write("model,rmse,dir_acc\n")
        for row in table:
            fh.write(f"{row['model']},{row['rmse']:.17g},{row['dir_acc']:.17g}\n")


def _cmd_mrc(args):
    prices = ingest_prices(
        args.prices,
        frequency=args.freq,
        market_hours=args.market_hours,
        trim_open_close=args.trim_open_close,
    )
    cfg = MrcConfig(delta=args.delta, theta=args.theta, is_corr=args.corr)
    rolling = rolling_mrc(
        prices, cfg, window=args.window, step=args.step or args.window, threads=args.threads
    )
    config = {
        "subcommand": "mrc",
        "prices": args.prices,
        "freq": args.freq,
        "delta": args.delta,
        "theta": args.theta,
        "corr": args.corr,
        "window": args.window,
        "step": args.step or args.window,
        "market_hours": args.market_hours,
        "trim_open_close": args.trim_open_close,
        "skipped_rows": prices.skipped_rows,
        "skipped_windows": rolling.skipped_windows,
    }
    write_edge_series_csv(rolling, args.out, header_lines=_config_header(config))
    print(
        f"wrote {rolling.values.shape[0]} windows x {rolling.values.shape[1]} pairs "
        f"to {args.out}"
    )
    return 0


# ---------------------------------------------------------------------------
# argument wiring


def _build_parser():
    parser = _Parser(prog="grou", description=__doc__)
    parser.add_argument("--version", action="version", version=f"grou {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="simulate an edge path")
    p.add_argument("--graph", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--mesh-fine", type=float, required=True)
    p.add_argument("--ratio", type=int, default=1)
    p.add_argument("--init", choices=("stationary", "zero"), default="stationary")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--truth-out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="fit drift parameters to a path")
    p.add_argument("--path", required=True)
    p.add_argument("--ratio", type=int, default=1)
    p.add_argument("--graph")
    p.add_argument("--lags", type=int, default=1)
    p.add_argument("--stages", default="1")
    p.add_argument("--activity", choices=("finite", "infinite"), default="finite")
    p.add_argument("--beta-exp", type=float)
    p.add_argument("--triplet", help="known noise spec JSON; omitted = estimate from data")
    p.add_argument("--ridge", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("forecast", help="one-step forecasts from a fit report")
    p.add_argument("--path", required=True)
    p.add_argument("--ratio", type=int, default=1)
    p.add_argument("--fit", required=True)
    p.add_argument("--graph")
    p.add_argument("--horizon", choices=("fine", "coarse"), default="fine")
    p.add_argument("--horizon-steps", type=int, default=1)
    p.add_argument("--eval-tail", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_forecast)

    p = sub.add_parser("benchmark", help="Monte Carlo comparison study")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("select", help="model / joint network+model selection")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("mrc", help="pre-averaged covariance series from prices")
    p.add_argument("--prices", required=True)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--freq", type=float, default=1.0)
    p.add_argument("--window", type=float, default=3600.0)
    p.add_argument("--step", type=float)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--corr", action="store_true")
    p.add_argument("--market-hours", action="store_true")
    p.add_argument("--trim-open-close", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mrc)
    return parser


def run(argv) -> int:
    """Entry point used by tests; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1
    except (GrouError, np.linalg.LinAlgError) as exc:
        print(f"{type(exc).__module__}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run(sys.argv[1:]))
