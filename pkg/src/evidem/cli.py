"""Command-line entry point: generate data, fit one dataset, run sweeps.

Exit codes partition outcomes: 0 success, 2 configuration error, 3 fit did
not converge, 4 estimation degenerated, 5 I/O failure.  Every run writes a
manifest.json echoing the resolved configuration and master seed, which is
enough to reproduce it exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .censoring import read_dataset_csv, run_life_test, write_dataset_csv
from .config import ConfigError, RunConfig, parse_config
from .estimator import (
    EstimationError,
    LabelMode,
    SoftLabeledDataset,
    fit,
    quantile_spread_init,
    read_soft_labels_csv,
    write_soft_labels_csv,
)
from .figures import Series, write_line_chart
from .rayleigh import sample_labeled
from .simulation import (
    CorruptionConfig,
    ExperimentConfig,
    SweepSpec,
    corrupt_labels,
    draw_error_probs,
    effective_sd,
    run_sweep,
    substream,
    truth_offset_init,
    write_figure_csv,
    write_results_csv,
    write_summary_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_DEGENERATE = 4
EXIT_IO = 5

_METHOD_CHOICES = [m.value for m in LabelMode] + ["all"]


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, help="YAML run configuration")
    shared.add_argument("--seed", type=int, help="master seed (overrides config)")
    shared.add_argument("--n", type=int, help="number of test units")
    shared.add_argument("--censor-frac", type=float, help="fraction of units censored")
    shared.add_argument("--rho", type=float, help="mean label error probability")
    shared.add_argument("--reps", type=int, help="repetitions per sweep cell")
    shared.add_argument("--method", choices=_METHOD_CHOICES, help="supervision regime(s)")
    shared.add_argument("--out", type=Path, help="output directory")
    shared.add_argument("--workers", type=int, help="sweep worker processes")
    shared.add_argument("--tol", type=float, help="relative log-likelihood stop threshold")
    shared.add_argument("--max-iters", type=int, help="iteration cap")

    parser = argparse.ArgumentParser(prog="evidem", description=__doc__)
    parser.add_argument("--version", action="version", version=f"evidem {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[shared], help="simulate a censored, label-corrupted dataset")
    sub.add_parser("fit", parents=[shared], help="fit one dataset with its soft labels")
    sub.add_parser("sweep", parents=[shared], help="run a Monte-Carlo bias sweep")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "seed": args.seed,
        "out": None if args.out is None else str(args.out),
        "reps": args.reps,
        "workers": args.workers,
        "methods": None if args.method is None else args.method,
        "scheme.n": args.n,
        "scheme.censor_frac": args.censor_frac,
        "corruption.rho": args.rho,
        "fit.tol": args.tol,
        "fit.max_iters": args.max_iters,
    }


def _write_manifest(cfg: RunConfig, extra: dict | None = None) -> None:
    payload = {"version": __version__, "master_seed": cfg.seed, "config": cfg.manifest_dict()}
    payload.update(extra or {})
    with open(cfg.out / "manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(cfg: RunConfig, what: str, present: bool) -> None:
    if not present:
        raise ConfigError(f"the {cfg.command} command needs {what}")


def cmd_generate(cfg: RunConfig) -> int:
    _require(cfg, "a 'model' section", cfg.model is not None)
    _require(cfg, "a 'scheme' section", cfg.scheme is not None)
    cfg.out.mkdir(parents=True, exist_ok=True)
    rng = substream(cfg.seed)
    times, labels = sample_labeled(cfg.model, cfg.scheme.n, rng)
    ds = run_life_test(list(zip(times, labels)), cfg.scheme, rng)
    q = draw_error_probs(CorruptionConfig(cfg.rho, cfg.sd), cfg.scheme.n, rng)
    _, pl = corrupt_labels(ds.true_label, q, cfg.model.n_components, rng)
    write_dataset_csv(ds, cfg.out / "data.csv")
    write_soft_labels_csv(pl, cfg.out / "labels.csv", item_ids=ds.item_id)
    _write_manifest(cfg, {"effective_sd": effective_sd(cfg.rho, cfg.sd)})
    print(f"wrote {cfg.out / 'data.csv'} ({cfg.scheme.J} observed, {cfg.scheme.n_censored} censored)")
    return EXIT_OK


def _align_labels(ds_item_ids: np.ndarray, ids: np.ndarray, pl: np.ndarray) -> np.ndarray:
    if sorted(ids.tolist()) != sorted(ds_item_ids.tolist()):
        raise ConfigError("label file item_ids do not match the dataset")
    position = {int(i): k for k, i in enumerate(ids)}
    return pl[[position[int(i)] for i in ds_item_ids]]


def cmd_fit(cfg: RunConfig) -> int:
    _require(cfg, "a 'data' path", cfg.data is not None)
    _require(cfg, "'labels' (CSV path) or inline 'soft_labels'",
             cfg.labels is not None or cfg.soft_labels is not None)
    paths = [cfg.data] + ([cfg.labels] if cfg.labels is not None else [])
    for path in paths:
        if not Path(path).exists():
            raise ConfigError(f"input file not found: {path}")
    cfg.out.mkdir(parents=True, exist_ok=True)
    try:
        ds = read_dataset_csv(cfg.data)
        if cfg.labels is not None:
            ids, pl = read_soft_labels_csv(cfg.labels)
            pl = _align_labels(ds.item_id, ids, pl)
        else:
            pl = cfg.soft_labels
        soft = SoftLabeledDataset(ds, pl)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid input data: {exc}") from None
    p = soft.n_components
    init_rule = cfg.init or ("model" if cfg.model is not None else "quantile-spread")
    if init_rule == "quantile-spread":
        init = quantile_spread_init(ds, p)
    else:
        _require(cfg, f"a 'model' section (fit.init = {init_rule})", cfg.model is not None)
        init = cfg.model if init_rule == "model" else truth_offset_init(cfg.model)
    try:
        est, trace = fit(soft, init, cfg.fit_config)
    except EstimationError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        _write_manifest(cfg, {"init": init_rule, "outcome": f"degenerate: {exc}"})
        return EXIT_DEGENERATE

    with open(cfg.out / "estimate.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [f"lambda_{z + 1}" for z in range(p)]
            + [f"xi_{z + 1}" for z in range(p)]
            + ["iterations", "converged", "gll"]
        )
        writer.writerow(
            [repr(float(v)) for v in est.lambdas]
            + [repr(float(v)) for v in est.xis]
            + [trace.iterations_used, "true" if trace.converged else "false", repr(trace.iterates[-1][1])]
        )
    with open(cfg.out / "trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "gll"] + [f"lambda_{z + 1}" for z in range(p)] + [f"xi_{z + 1}" for z in range(p)])
        for k, (params, gll) in enumerate(trace.iterates):
            writer.writerow(
                [k, repr(gll)] + [repr(float(v)) for v in params.lambdas] + [repr(float(v)) for v in params.xis]
            )
    _write_manifest(cfg, {"init": init_rule, "outcome": "converged" if trace.converged else "not converged"})
    if not trace.converged:
        print(f"did not converge within {cfg.fit_config.max_iters} iterations", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    print(f"converged in {trace.iterations_used} iterations; estimates in {cfg.out / 'estimate.csv'}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    _require(cfg, "a 'model' section", cfg.model is not None)
    _require(cfg, "a 'scheme' section", cfg.scheme is not None)
    _require(cfg, "a 'sweep' section", cfg.sweep_variable is not None)
    cfg.out.mkdir(parents=True, exist_ok=True)
    base = ExperimentConfig(
        true_params=cfg.model,
        n=cfg.scheme.n,
        censor_frac=cfg.censor_frac,
        rho=cfg.rho,
        sd=cfg.sd,
        init=cfg.init or "truth-offset",
        fit_config=cfg.fit_config,
    )
    spec = SweepSpec(
        variable=cfg.sweep_variable,
        grid=tuple(cfg.sweep_grid),
        reps=cfg.reps,
        base=base,
        methods=tuple(cfg.methods),
    )
    result = run_sweep(spec, cfg.seed, workers=cfg.workers)
    write_results_csv(result, cfg.out / "results.csv")
    write_summary_csv(result, cfg.out / "summary.csv")
    p = cfg.model.n_components
    for z in range(p):
        name = f"xi_{z + 1}"
        write_figure_csv(result, name, cfg.out / f"figure_{name}.csv")
        series = []
        grid = None
        for method in spec.methods:
            g, mean, sd = result.report.curve(method, name)
            grid = g
            series.append(Series(label=method.value, mean=mean, sd=sd))
        write_line_chart(
            cfg.out / f"figure_{name}.svg",
            grid,
            series,
            title=f"mean absolute relative bias of {name}",
            xlabel=spec.variable,
            ylabel="RABias",
        )
    _write_manifest(cfg, {"effective_sd": result.effective_sds})
    n_failed = sum(1 for r in result.rows if r.failed)
    print(f"{len(result.rows)} replications, {n_failed} failed; outputs in {cfg.out}")
    if n_failed == len(result.rows):
        print("every replication failed", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


_COMMANDS = {"generate": cmd_generate, "fit": cmd_fit, "sweep": cmd_sweep}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, _overrides(args), command=args.command)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
