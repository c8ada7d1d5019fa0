"""Command line interface: fit, predict, simulate, benchmark, sweep.

Data files are CSV with a header row.  A schema JSON names column roles:

    {"x": ["x1", "x2"], "z": ["t"], "outcome": "y", "categorical": ["x2"]}

x and z may share columns (pass the same name in both lists); categorical
names must be a subset of x.  Exit codes: 0 ok, 2 usage, 3 data,
4 numerical.  Errors print one machine-parsable line on stderr:
``ridgebart: error: <Class>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
import pandas as pd

from .config import BranchingPrior
from .dgp import generate_binary, generate_friedman, generate_recovery
from .errors import DataError, NumericalError, RidgeBartError, SchemaMismatchError, SerializationError
from .evaluate import logloss, pointwise_coverage, rmse
from .fit import fit_arrays
from .model import predict_processed
from .serialize import load, save

USAGE_EXIT, DATA_EXIT, NUMERIC_EXIT = 2, 3, 4


def _fail(exc: BaseException, code: int) -> int:
    print(f"ridgebart: error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def _read_schema(path: str) -> dict:
    with open(path) as fh:
        schema = json.load(fh)
    for key in ("x", "z", "outcome"):
        if key not in schema:
            raise SchemaMismatchError(f"schema is missing the {key!r} entry")
    schema.setdefault("categorical", [])
    bad = [c for c in schema["categorical"] if c not in schema["x"]]
    if bad:
        raise SchemaMismatchError(f"categorical columns {bad} are not x columns")
    return schema


def _frame_to_arrays(frame: pd.DataFrame, schema: dict, need_outcome: bool = True):
    missing = [c for c in schema["x"] + schema["z"] if c not in frame.columns]
    if need_outcome and schema["outcome"] not in frame.columns:
        missing.append(schema["outcome"])
    if missing:
        raise SchemaMismatchError(f"data file is missing columns {missing}")
    has_strings = any(frame[c].dtype == object for c in schema["categorical"])
    raw_x = frame[schema["x"]].to_numpy(dtype=object if has_strings else float)
    raw_z = frame[schema["z"]].to_numpy(dtype=float)
    raw_y = frame[schema["outcome"]].to_numpy(dtype=float) if need_outcome else None
    cat_idx = tuple(schema["x"].index(c) for c in schema["categorical"])
    return raw_x, raw_z, raw_y, cat_idx


def _cmd_fit(args) -> int:
    schema = _read_schema(args.schema)
    frame = pd.read_csv(args.data)
    raw_x, raw_z, raw_y, cat_idx = _frame_to_arrays(frame, schema)
    branching = BranchingPrior(gamma=args.gamma) if args.gamma is not None else None
    samples, diagnostics = fit_arrays(
        raw_x,
        raw_z,
        raw_y,
        categorical_columns=cat_idx,
        binary=args.outcome == "binary",
        activation=args.activation,
        n_trees=args.trees,
        n_ridge=args.ridge,
        chains=args.chains,
        iterations=args.iters,
        burn_in=args.burnin,
        thin=args.thin,
        seed=args.seed,
        nu=args.nu,
        rho_threshold=args.rho_threshold,
        rho_prob=args.prob_rho_lt,
        rotate_omega=args.rotate_omega,
        branching=branching,
        jobs=args.jobs,
        collect_diagnostics=args.diagnostics is not None,
        schema=schema,
    )
    save(samples, args.out)
    if args.diagnostics is not None:
        with open(args.diagnostics, "w") as fh:
            for rec in diagnostics:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    print(f"wrote {len(samples.draws)} draws to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    samples = load(args.model)
    schema = samples.meta.schema
    if schema is None:
        raise SchemaMismatchError("model file carries no column schema")
    frame = pd.read_csv(args.data)
    raw_x, raw_z, _, _ = _frame_to_arrays(frame, schema, need_outcome=False)
    record = samples.meta.transform
    summary = predict_processed(
        samples, record.apply_x(raw_x), record.apply_z(raw_z), level=args.level
    )
    if samples.meta.binary:
        out = pd.DataFrame(
            {"prob_mean": summary.mean, "prob_lower": summary.lower, "prob_upper": summary.upper}
        )
    else:
        out = pd.DataFrame(
            {"mean": summary.mean, "lower": summary.lower, "upper": summary.upper}
        )
    out.to_csv(args.out, index=False)
    print(f"wrote {out.shape[0]} predictions to {args.out}")
    return 0


def _simulate(dgp: str, n: int, seed: int, sigma: float, p_extra: int):
    if dgp == "recovery":
        return generate_recovery(n, seed)
    if dgp == "friedman":
        return generate_friedman(n, sigma=sigma, p_extra=p_extra, seed=seed)
    if dgp == "binary":
        return generate_binary(n, seed)
    raise ValueError(f"unknown dgp {dgp!r}")


def _cmd_simulate(args) -> int:
    sim = _simulate(args.dgp, args.n, args.seed, args.sigma, args.p_extra)
    out = Path(args.out)
    truth_path = Path(args.truth_out) if args.truth_out else out.with_suffix(".truth.csv")
    schema_path = Path(args.schema_out) if args.schema_out else out.with_suffix(".schema.json")
    sim.frame().to_csv(out, index=False)
    sim.truth_frame().to_csv(truth_path, index=False)
    with open(schema_path, "w") as fh:
        json.dump(sim.schema(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {sim.n} rows to {out}, truth to {truth_path}, schema to {schema_path}")
    return 0


def _fold_indices(n: int, folds: int, seed: int) -> list[np.ndarray]:
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(order, folds)]


def _fit_score_fold(sim, schema, train, test, activation, args) -> dict:
    t0 = time.perf_counter()
    samples, _ = fit_arrays(
        sim.x[train],
        sim.z[train] if not sim.shared_z else sim.x[train],
        sim.y[train],
        binary=sim.prob_true is not None,
        activation=activation,
        n_trees=args.trees,
        n_ridge=args.ridge if activation != "constant" else 1,
        chains=args.chains,
        iterations=args.iters,
        burn_in=args.burnin,
        thin=args.thin,
        seed=args.seed,
        jobs=1,
        schema=schema,
    )
    record = samples.meta.transform
    x_test = sim.x[test]
    z_test = sim.z[test] if not sim.shared_z else x_test
    summary = predict_processed(
        samples, record.apply_x(x_test), record.apply_z(z_test), level=0.95
    )
    seconds = time.perf_counter() - t0
    row = {"activation": activation, "seconds": seconds, "n_train": len(train), "n_test": len(test)}
    if sim.prob_true is not None:
        row["rmse"] = rmse(summary.mean, sim.prob_true[test])
        row["logloss"] = logloss(summary.mean, sim.y[test])
        row["coverage"] = pointwise_coverage(summary.lower, summary.upper, sim.prob_true[test])
    else:
        row["rmse"] = rmse(summary.mean, sim.f_true[test])
        row["logloss"] = float("nan")
        row["coverage"] = pointwise_coverage(summary.lower, summary.upper, sim.f_true[test])
    return row


def _cmd_benchmark(args) -> int:
    sim = _simulate(args.dgp, args.n, args.seed, args.sigma, args.p_extra)
    schema = sim.schema()
    activations = [a.strip() for a in args.activations.split(",") if a.strip()]
    folds = _fold_indices(sim.n, args.folds, args.seed)
    all_rows = np.arange(sim.n)
    rows = []
    for activation in activations:
        for k, test in enumerate(folds):
            train = np.setdiff1d(all_rows, test)
            row = _fit_score_fold(sim, schema, train, test, activation, args)
            row.update({"dgp": args.dgp, "fold": k})
            rows.append(row)
            print(
                f"{args.dgp} fold {k} {activation}: rmse={row['rmse']:.4f} "
                f"coverage={row['coverage']:.3f} ({row['seconds']:.1f}s)"
            )
    table = pd.DataFrame(rows)
    table.to_csv(args.out, index=False)
    print(table.groupby("activation")[["rmse", "coverage", "seconds"]].mean().to_string())
    return 0


def _cmd_sweep(args) -> int:
    if args.grid == "md":
        cells = [
            {"trees": m, "ridge": d, "rho_prob": 0.5, "rho_threshold": 1.0}
            for m in (10, 50, 100)
            for d in (1, 5, 10)
        ]
    elif args.grid == "scale":
        cells = [
            {"trees": 50, "ridge": 1, "rho_prob": p, "rho_threshold": q}
            for p in (0.25, 0.5, 0.75)
            for q in (0.5, 1.0, 2.0)
        ]
    else:
        raise ValueError(f"unknown grid {args.grid!r}")
    sim = generate_friedman(args.n, sigma=args.sigma, seed=args.seed)
    schema = sim.schema()
    folds = _fold_indices(sim.n, args.folds, args.seed)
    all_rows = np.arange(sim.n)
    rows = []
    for cell in cells:
        for k, test in enumerate(folds):
            train = np.setdiff1d(all_rows, test)
            t0 = time.perf_counter()
            samples, _ = fit_arrays(
                sim.x[train],
                sim.x[train],
                sim.y[train],
                activation=args.activation,
                n_trees=cell["trees"],
                n_ridge=cell["ridge"],
                chains=args.chains,
                iterations=args.iters,
                burn_in=args.burnin,
                thin=args.thin,
                seed=args.seed,
                rho_prob=cell["rho_prob"],
                rho_threshold=cell["rho_threshold"],
                jobs=1,
                schema=schema,
            )
            record = samples.meta.transform
            summary = predict_processed(
                samples, record.apply_x(sim.x[test]), record.apply_z(sim.x[test])
            )
            rows.append(
                {
                    "grid": args.grid,
                    "activation": args.activation,
                    "trees": cell["trees"],
                    "ridge": cell["ridge"],
                    "rho_prob": cell["rho_prob"],
                    "rho_threshold": cell["rho_threshold"],
                    "fold": k,
                    "rmse": rmse(summary.mean, sim.f_true[test]),
                    "seconds": time.perf_counter() - t0,
                }
            )
            print(f"cell {cell} fold {k}: rmse={rows[-1]['rmse']:.4f}")
    pd.DataFrame(rows).to_csv(args.out, index=False)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _add_fit_like_flags(p: argparse.ArgumentParser, iters: int, burnin: int, chains: int):
    p.add_argument("--trees", type=int, default=50, help="ensemble size M")
    p.add_argument("--ridge", type=int, default=1, help="ridge functions per leaf D")
    p.add_argument("--chains", type=int, default=chains)
    p.add_argument("--iters", type=int, default=iters)
    p.add_argument("--burnin", type=int, default=burnin)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ridgebart",
        description="Tree ensembles with ridge-function leaves: fit, predict, simulate, benchmark, sweep.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--outcome", choices=("gaussian", "binary"), default="gaussian")
    p.add_argument("--activation", choices=("cosine", "tanh", "relu", "constant"), default="cosine")
    _add_fit_like_flags(p, iters=2000, burnin=1000, chains=10)
    p.add_argument("--rotate-omega", action="store_true")
    p.add_argument("--nu", type=float, default=3.0)
    p.add_argument("--prob-rho-lt", type=float, default=0.5, help="target P(rho < threshold)")
    p.add_argument("--rho-threshold", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=None, help="geometric branching prior gamma")
    p.add_argument("--jobs", type=int, default=1, help="chains run in this many processes")
    p.add_argument("--diagnostics", default=None, help="write per-iteration records here (ndjson)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="predict from a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("simulate", help="write a synthetic dataset, its truth, and a schema")
    p.add_argument("--dgp", choices=("recovery", "friedman", "binary"), required=True)
    p.add_argument("--n", type=int, required=True, help="patients (recovery) or rows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=float, default=1.0, help="friedman noise sd")
    p.add_argument("--p-extra", type=int, default=0, help="extra inert friedman covariates")
    p.add_argument("--out", required=True)
    p.add_argument("--truth-out", default=None)
    p.add_argument("--schema-out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("benchmark", help="cross-validated comparison against the constant baseline")
    p.add_argument("--dgp", choices=("recovery", "friedman", "binary"), default="friedman")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--p-extra", type=int, default=0)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--activations", default="cosine,relu,constant")
    _add_fit_like_flags(p, iters=500, burnin=250, chains=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("sweep", help="hyperparameter grids on the friedman benchmark")
    p.add_argument("--grid", choices=("md", "scale"), required=True)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--activation", choices=("cosine", "tanh", "relu"), default="cosine")
    _add_fit_like_flags(p, iters=500, burnin=250, chains=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except (DataError, SerializationError) as exc:
        return _fail(exc, DATA_EXIT)
    except NumericalError as exc:
        return _fail(exc, NUMERIC_EXIT)
    except (ValueError, KeyError, FileNotFoundError, RidgeBartError) as exc:
        return _fail(exc, USAGE_EXIT)


if __name__ == "__main__":
    sys.exit(main())
