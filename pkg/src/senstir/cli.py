"""``senstir`` command-line entry point.

Every command writes its artifacts plus one JSON manifest recording the
command, its resolved configuration, the seed, SHA-256 hashes of the inputs,
the outputs and the wall time. Exit codes: 0 success, 2 usage error,
3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .core import DataError, Dataset, NumericError, Query, Ranking, ideal_ranking
from .data import (
    REPORT_HEADER,
    IoError,
    ModelFile,
    PoolSpec,
    SyntheticSpec,
    build_queries_from_pool,
    gen_synthetic,
    load_metric,
    load_model,
    preprocess_german,
    read_dataset,
    save_metric,
    save_model,
    write_dataset,
    write_report,
)
from .evaluation import evaluate, group_flip, nearest_fair_neighbors, sensitive_weight_ratio
from .fair_metric import DEFAULT_RIDGE_ALPHAS, FairItemMetric, SensitiveSubspace, fit_logistic, fit_subspace_ridge
from .ips import PropensityModel, basic_delta, ips_delta, simulate_clicks, true_delta
from .policy_gradient import LinearPolicy
from .training import VARIANTS, TrainConfig, substream, train

log = logging.getLogger("senstir")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
COLUMNS_FILE = "columns.json"
SWEEP_HEADER = REPORT_HEADER + ("sensitive_weight_ratio",)
IPS_HEADER = ("query_id", "truth", "basic_mean", "ips_mean", "basic_abs_error", "ips_abs_error")

# hyperparameter rows per dataset family; synthetic is also the TrainConfig default
PRESETS = {
    "synthetic": dict(epochs=2000, batch_size=1, attack_subspace_lr=0.001, attack_subspace_steps=20,
                      epsilon=0.001, attack_full_lr=0.001, attack_full_steps=20, fair_start_frac=0.0,
                      l2=0.0, mc_samples=10),
    "german": dict(epochs=20000, batch_size=10, attack_subspace_lr=0.01, attack_subspace_steps=20,
                   epsilon=1.0, attack_full_lr=0.001, attack_full_steps=20, fair_start_frac=0.1,
                   l2=0.0, mc_samples=25),
    "mslr": dict(epochs=68000, batch_size=10, attack_subspace_lr=0.01, attack_subspace_steps=40,
                 epsilon=0.01, attack_full_lr=0.001, attack_full_steps=40, fair_start_frac=0.1,
                 l2=0.001, mc_samples=32),
}
EVAL_SAMPLES = {"synthetic": 10, "german": 25, "mslr": 32}

# CLI flag -> TrainConfig field
TRAIN_FLAGS = {
    "rho": "rho", "epsilon": "epsilon", "epochs": "epochs", "batch_size": "batch_size",
    "mc_samples": "mc_samples", "as_": "attack_subspace_lr", "ae": "attack_subspace_steps",
    "fs": "attack_full_lr", "fe": "attack_full_steps", "frs": "fair_start_frac", "l2": "l2",
    "lambda_init": "lambda_init", "lambda_step": "lambda_step", "lr": "theta_step",
    "attack_init_scale": "attack_init_scale", "optimizer": "optimizer", "weight_init": "weight_init_range",
}


class UsageError(Exception):
    pass


# -- helpers -------------------------------------------------------------------


def _sha256(path) -> str:
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            for chunk in iter(lambda: fh.read(1 << 16), b""):
                h.update(chunk)
    except OSError as e:
        raise IoError(str(e)) from e
    return h.hexdigest()


def _write_manifest(path, command: str, config: dict, seed, inputs, outputs, started: float) -> None:
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise IoError(str(e)) from e


def _manifest_path(out) -> Path:
    out = Path(out)
    return out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
        return v
    return parse


def _float_list(text: str):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _threads() -> int:
    raw = os.environ.get("SENSTIR_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"SENSTIR_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"SENSTIR_THREADS must be a positive integer, got {raw!r}")
    return n


def _column_names(data_path):
    path = Path(data_path).with_name(COLUMNS_FILE)
    if not path.exists():
        return None
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _resolve_column(ref: str, names, p: int) -> int:
    if names is not None and ref in names:
        return names.index(ref)
    try:
        idx = int(ref)
    except ValueError:
        raise UsageError(f"unknown column {ref!r} (no such name in {COLUMNS_FILE})") from None
    if not 0 <= idx < p:
        raise UsageError(f"column index {idx} out of range for {p} features")
    return idx


def _write_columns(out_dir: Path, names) -> Path:
    path = out_dir / COLUMNS_FILE
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(list(names), fh, indent=2)
        fh.write("\n")
    return path


def _train_config(args, base: dict | None = None) -> TrainConfig:
    values = dict(PRESETS[args.preset])
    values.update(base or {})
    for flag, name in TRAIN_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[name] = v
    values["seed"] = args.seed
    return TrainConfig(**values)


def _stack_unique(data: Dataset, extra=None):
    """Individual rows (each distinct feature vector once) with optional labels."""
    X = np.vstack([q.features for q in data])
    if extra is None:
        return np.unique(X, axis=0), None
    lab = np.concatenate([extra(q) for q in data])
    _, idx = np.unique(np.column_stack([X, lab]), axis=0, return_index=True)
    idx = np.sort(idx)
    return X[idx], lab[idx]


# -- commands ------------------------------------------------------------------


def cmd_synth_gen(args):
    if args.queries < 1 or args.test_queries < 0:
        raise UsageError("--queries must be >= 1 and --test-queries >= 0")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    train_data = gen_synthetic(SyntheticSpec(args.queries, args.items), substream(args.seed, "data", 0))
    write_dataset(out / "train.jsonl", train_data)
    outputs.append(out / "train.jsonl")
    if args.test_queries:
        test_data = gen_synthetic(SyntheticSpec(args.test_queries, args.items), substream(args.seed, "data", 1), "t")
        write_dataset(out / "test.jsonl", test_data)
        outputs.append(out / "test.jsonl")
    outputs.append(_write_columns(out, ["z1", "z2"]))
    config = {"queries": args.queries, "test_queries": args.test_queries, "items": args.items}
    return out, config, [], outputs


def cmd_german_prep(args):
    if args.train_queries < 1 or args.test_queries < 1:
        raise UsageError("query counts must be >= 1")
    if not 0 < args.test_frac < 1:
        raise UsageError("--test-frac must lie in (0, 1)")
    features, rels, groups, names = preprocess_german(args.csv, args.label_column, args.positive_label,
                                                      args.young_age)
    m = rels.size
    rng = substream(args.seed, "data", 0)
    perm = rng.permutation(m)
    n_test = max(1, int(round(args.test_frac * m)))
    test_idx, train_idx = np.sort(perm[:n_test]), np.sort(perm[n_test:])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    for name, idx, count, key in (("train", train_idx, args.train_queries, 1), ("test", test_idx, args.test_queries, 2)):
        spec = PoolSpec(features[idx], rels[idx], groups[idx], args.query_size, count, args.stratified)
        data = build_queries_from_pool(spec, substream(args.seed, "data", key), f"{name[:2]}")
        write_dataset(out / f"{name}.jsonl", data)
        outputs.append(out / f"{name}.jsonl")
    outputs.append(_write_columns(out, names))
    config = {k: getattr(args, k) for k in ("train_queries", "test_queries", "test_frac", "query_size",
                                            "stratified", "label_column", "positive_label", "young_age")}
    return out, config, [args.csv], outputs


def cmd_metric_fit(args):
    data = read_dataset(args.data)
    names = _column_names(args.data)
    p = data.feature_dim
    extra = []
    for ref in args.extra_basis:
        e = np.zeros(p)
        e[_resolve_column(ref, names, p)] = 1.0
        extra.append(e)
    info = {"method": args.method, "target": args.target}
    if args.target == "group":
        if not data.has_groups:
            raise DataError("--target group needs group labels in the data")
        X, y = _stack_unique(data, lambda q: q.groups)
        if args.method == "logistic":
            w, b = fit_logistic(X, y.astype(int), args.l2)
            info.update(l2_strength=args.l2, hyperplane=(w / np.linalg.norm(w)).tolist(), intercept=float(b))
            subspace = SensitiveSubspace.spanned_by([w] + extra)
        else:
            subspace = fit_subspace_ridge(X, y, args.ridge_alphas, extra)
    elif args.target.startswith("column:"):
        col = _resolve_column(args.target.split(":", 1)[1], names, p)
        X, _ = _stack_unique(data)
        if args.method == "logistic":
            y = X[:, col]
            if not np.all(np.isin(y, (0.0, 1.0))):
                raise DataError(f"logistic target column {col} is not 0/1")
            w, b = fit_logistic(np.delete(X, col, axis=1), y.astype(int), args.l2)
            w = np.insert(w, col, 0.0)
            info.update(l2_strength=args.l2, hyperplane=(w / np.linalg.norm(w)).tolist(), intercept=float(b))
            subspace = SensitiveSubspace.spanned_by([w] + extra)
        else:
            subspace = fit_subspace_ridge(np.delete(X, col, axis=1), X[:, col], args.ridge_alphas, extra,
                                          target_index=col, feature_dim=p)
        info["target_column"] = col
    else:
        raise UsageError(f"--target must be 'group' or 'column:<name>', got {args.target!r}")
    info["rank"] = subspace.rank
    save_metric(args.out, FairItemMetric(subspace), info)
    config = {"target": args.target, "method": args.method, "extra_basis": args.extra_basis,
              "l2": args.l2, "ridge_alphas": list(args.ridge_alphas)}
    return Path(args.out), config, [args.data], [args.out]


def _train_one(cfg: TrainConfig, data: Dataset, metric, variant: str):
    policy, history = train(cfg, data, metric, variant)
    summary = {"steps": len(history)}
    if len(history):
        tail = max(1, len(history) // 10)
        summary.update(final_utility=float(np.mean(history.utility[-tail:])), final_lambda=history.lam[-1])
    return policy, history, summary


def cmd_train(args):
    if args.variant == "baseline" and args.rho is not None:
        log.warning("--rho is ignored for the baseline variant")
    if args.variant == "random" and args.epochs is not None:
        log.warning("--epochs is ignored for the random variant")
    cfg = _train_config(args)
    if args.variant in ("baseline", "random"):
        cfg = cfg.replace(rho=0.0)
    data = read_dataset(args.data)
    inputs = [args.data]
    metric = None
    if args.metric:
        metric = load_metric(args.metric)
        inputs.append(args.metric)
    elif args.variant in ("project",) or (args.variant == "senstir" and cfg.rho > 0):
        raise UsageError(f"--metric is required for variant {args.variant!r}")
    policy, history, summary = _train_one(cfg, data, metric, args.variant)
    save_model(args.out, ModelFile(policy.theta, metric, cfg.to_dict(), cfg.seed, args.variant, summary))
    outputs = [args.out]
    if args.variant != "random":
        hist_path = Path(args.out).with_suffix(".history.json")
        with open(hist_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(history.to_dict(), fh, sort_keys=True)
            fh.write("\n")
        outputs.append(hist_path)
    return Path(args.out), {"variant": args.variant, **cfg.to_dict()}, inputs, outputs


def _hypotheticals(spec: str, data: Dataset, metric, pool: Dataset | None, names):
    if spec == "nearest-fair-neighbor":
        if metric is None:
            raise UsageError("nearest-fair-neighbor needs a fair metric (--metric or a model that stores one)")
        return nearest_fair_neighbors(metric, data, pool)
    if spec.startswith("group-flip:"):
        col = _resolve_column(spec.split(":", 1)[1], names, data.feature_dim)
        return group_flip(data, col)
    raise UsageError(f"unknown hypothetical {spec!r}")


def _eval_pool(data: Dataset, pool_paths):
    if not pool_paths:
        return None
    queries = list(data)
    for path in pool_paths:
        queries.extend(read_dataset(path))
    return Dataset.of(queries)


def _report_row(variant, cfg: dict, seed, result) -> dict:
    return {
        "variant": variant, "rho": float(cfg.get("rho", 0.0)), "epsilon": float(cfg.get("epsilon", float("nan"))),
        "seed": int(seed), "ndcg_stochastic": result.ndcg_stochastic, "kendall_tau": result.kendall_tau,
        "kendall_tau_weighted": result.kendall_tau_weighted, "exposure_disparity": result.exposure_disparity,
    }


def cmd_eval(args):
    if args.samples is not None and args.samples < 1:
        raise UsageError("--samples must be >= 1")
    model = load_model(args.model)
    data = read_dataset(args.data)
    inputs = [args.model, args.data] + list(args.pool)
    metric = model.metric
    if args.metric:
        metric = load_metric(args.metric)
        inputs.append(args.metric)
    samples = args.samples or EVAL_SAMPLES[args.preset]
    hyp = None
    if args.hypothetical:
        hyp = _hypotheticals(args.hypothetical, data, metric, _eval_pool(data, args.pool), _column_names(args.data))
    result = evaluate(LinearPolicy(model.theta), data, samples, args.seed, hyp, not args.no_exposure,
                      args.weighted_method)
    write_report(args.out, [_report_row(model.variant, model.config, model.seed, result)])
    config = {"samples": samples, "hypothetical": args.hypothetical, "exposure": not args.no_exposure,
              "weighted_method": args.weighted_method}
    return Path(args.out), config, inputs, [args.out]


def _sweep_job(job):
    cfg, train_data, test_data, metric, hyp, samples, eval_seed, exposure, weighted = job
    policy, _, _ = _train_one(cfg, train_data, metric, "senstir")
    result = evaluate(policy, test_data, samples, eval_seed, hyp, exposure, weighted)
    row = _report_row("senstir", cfg.to_dict(), cfg.seed, result)
    row["sensitive_weight_ratio"] = sensitive_weight_ratio(policy, metric)
    return row


def cmd_sweep(args):
    grid = sorted(set(args.rho_grid))
    if not grid:
        raise UsageError("--rho-grid is empty")
    if min(grid) < 0:
        raise UsageError("rho values must be >= 0")
    if args.samples is not None and args.samples < 1:
        raise UsageError("--samples must be >= 1")
    train_data = read_dataset(args.data)
    test_data = read_dataset(args.test)
    metric = load_metric(args.metric)
    samples = args.samples or EVAL_SAMPLES[args.preset]
    hyp = None
    if args.hypothetical:
        pool = _eval_pool(test_data, args.pool)
        hyp = _hypotheticals(args.hypothetical, test_data, metric, pool, _column_names(args.test))
    base = _train_config(args)
    jobs = [(base.replace(rho=rho), train_data, test_data, metric, hyp, samples, args.seed,
             not args.no_exposure, args.weighted_method) for rho in grid]
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(j) for j in jobs]
    write_report(args.out, rows, SWEEP_HEADER)
    config = {"rho_grid": grid, "samples": samples, "hypothetical": args.hypothetical, **base.to_dict()}
    return Path(args.out), config, [args.data, args.test, args.metric] + list(args.pool), [args.out]


def cmd_ips_eval(args):
    if args.draws < 1:
        raise UsageError("--draws must be >= 1")
    if args.eta < 0 or not 0 < args.floor <= 1:
        raise UsageError("--eta must be >= 0 and --floor in (0, 1]")
    data = read_dataset(args.data)
    if args.binarize is not None:
        data = Dataset.of([Query(q.id, q.features, (q.rels >= args.binarize).astype(float), q.groups)
                           for q in data])
    prop = PropensityModel(args.eta, args.floor)
    rows = []
    for i, q in enumerate(data):
        rng = substream(args.seed, "sampling", i)
        logged = Ranking(rng.permutation(q.n))
        target = ideal_ranking(q) if args.evaluated == "ideal" else logged
        truth = true_delta(q, target)
        basic, ips = [], []
        for _ in range(args.draws):
            c = simulate_clicks(q, logged, prop, rng)
            basic.append(basic_delta(target, c))
            ips.append(ips_delta(target, c, logged, prop))
        b, s = float(np.mean(basic)), float(np.mean(ips))
        rows.append({"query_id": q.id, "truth": truth, "basic_mean": b, "ips_mean": s,
                     "basic_abs_error": abs(b - truth), "ips_abs_error": abs(s - truth)})
    write_report(args.out, rows, IPS_HEADER)
    config = {"eta": args.eta, "floor": args.floor, "draws": args.draws, "evaluated": args.evaluated,
              "binarize": args.binarize}
    return Path(args.out), config, [args.data], [args.out]


# -- parser --------------------------------------------------------------------


def _add_train_flags(p, with_rho=True):
    p.add_argument("--preset", choices=sorted(PRESETS), default="synthetic",
                   help="hyperparameter row to start from (default: synthetic)")
    if with_rho:
        p.add_argument("--rho", type=float, help="invariance regularization strength")
    p.add_argument("--epsilon", type=float, help="transport budget")
    p.add_argument("--epochs", type=int, help="number of mini-batch updates")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--mc-samples", type=int, help="rankings sampled per query for the policy gradient")
    p.add_argument("--as", dest="as_", type=float, metavar="LR", help="subspace-attack step size")
    p.add_argument("--ae", type=int, metavar="STEPS", help="subspace-attack steps")
    p.add_argument("--fs", type=float, metavar="LR", help="full-attack step size")
    p.add_argument("--fe", type=int, metavar="STEPS", help="full-attack steps")
    p.add_argument("--frs", type=float, metavar="FRAC", help="share of updates before the regularizer starts")
    p.add_argument("--l2", type=float, help="l2 penalty on the weights")
    p.add_argument("--lambda-init", type=float)
    p.add_argument("--lambda-step", type=float)
    p.add_argument("--lr", type=float, help="policy step size")
    p.add_argument("--attack-init-scale", type=float, help="std of the random start inside the sensitive subspace")
    p.add_argument("--weight-init", type=float, help="half-width of the uniform weight init")
    p.add_argument("--optimizer", choices=("adam", "sgd"))


def _add_eval_flags(p):
    p.add_argument("--samples", type=int, help="rankings sampled per query (default from --preset)")
    p.add_argument("--hypothetical", help="group-flip:<column> or nearest-fair-neighbor")
    p.add_argument("--pool", action="append", default=[],
                   help="extra dataset searched for nearest fair neighbours (repeatable)")
    p.add_argument("--no-exposure", action="store_true", help="skip the group exposure disparity")
    p.add_argument("--weighted-method", choices=("hyperbolic", "scipy"), default="hyperbolic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="senstir", description="Individually fair learning to rank.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-gen", help="generate the two-feature synthetic corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--test-queries", type=int, default=100)
    p.add_argument("--items", type=_positive(int), default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth_gen)

    p = sub.add_parser("german-prep", help="turn a German-credit CSV into train/test query files")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--train-queries", type=int, default=500)
    p.add_argument("--test-queries", type=int, default=100)
    p.add_argument("--test-frac", type=float, default=0.2)
    p.add_argument("--query-size", type=_positive(int), default=10)
    p.add_argument("--stratified", type=int, help="exact number of relevant individuals per query")
    p.add_argument("--label-column", default="Risk")
    p.add_argument("--positive-label", default="good")
    p.add_argument("--young-age", type=float, default=25.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_german_prep)

    p = sub.add_parser("metric-fit", help="learn a sensitive subspace and store the fair metric")
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True, help="group or column:<name-or-index>")
    p.add_argument("--method", choices=("logistic", "ridge"), default="logistic")
    p.add_argument("--extra-basis", action="append", default=[],
                   help="column whose unit vector joins the subspace (repeatable)")
    p.add_argument("--l2", type=float, default=0.01, help="logistic l2 strength on the summed loss")
    p.add_argument("--ridge-alphas", type=_float_list, default=list(DEFAULT_RIDGE_ALPHAS))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_metric_fit)

    p = sub.add_parser("train", help="train one model variant")
    p.add_argument("--data", required=True)
    p.add_argument("--metric")
    p.add_argument("--variant", choices=VARIANTS, default="senstir")
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model into a one-row report")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--metric", help="override the metric stored in the model")
    p.add_argument("--preset", choices=sorted(PRESETS), default="synthetic")
    _add_eval_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train and evaluate over a grid of rho values")
    p.add_argument("--data", required=True, help="training queries")
    p.add_argument("--test", required=True, help="evaluation queries")
    p.add_argument("--metric", required=True)
    p.add_argument("--rho-grid", type=_float_list, default=[0.0, 0.0003, 0.001])
    _add_train_flags(p, with_rho=False)
    _add_eval_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ips-eval", help="compare basic and IPS click estimators against the truth")
    p.add_argument("--data", required=True)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--floor", type=float, default=1e-3)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--binarize", type=float, metavar="THRESHOLD",
                   help="treat relevance >= THRESHOLD as relevant, below as not")
    p.add_argument("--evaluated", choices=("ideal", "logged"), default="ideal",
                   help="ranking whose metric is estimated")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ips_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        out, config, inputs, outputs = args.func(args)
        _write_manifest(_manifest_path(out), args.command, config, args.seed, inputs, outputs, started)
    except UsageError as e:
        print(f"senstir {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, IoError, FileNotFoundError) as e:
        print(f"senstir {args.command}: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"senstir {args.command}: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
