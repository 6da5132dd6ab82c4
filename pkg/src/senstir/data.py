"""Dataset generation, ingestion and persistence."""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import DataError, Dataset, Query, SenstirError, validate_query
from .fair_metric import FairItemMetric, SensitiveSubspace

SCHEMA_VERSION = 1
REPORT_HEADER = (
    "variant", "rho", "epsilon", "seed",
    "ndcg_stochastic", "kendall_tau", "kendall_tau_weighted", "exposure_disparity",
)


class ParseError(DataError):
    def __init__(self, line: int, column: int, reason: str, path: str = "<input>"):
        self.line, self.column, self.reason, self.path = line, column, reason, path
        super().__init__(f"{path}:{line}:{column}: {reason}")


class EmptyAfterFilter(DataError):
    pass


class EmptyPool(DataError):
    pass


class SchemaVersionMismatch(DataError):
    pass


class IoError(SenstirError, OSError):
    pass


# -- synthetic ---------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    num_queries: int = 100
    items_per_query: int = 10
    majority_prob: float = 0.8
    rel_clip: tuple = (0.0, 5.0)
    feature_range: tuple = (0.0, 3.0)

    def __post_init__(self):
        if self.num_queries < 1 or self.items_per_query < 1:
            raise DataError("need at least one query and one item per query")
        if not 0.0 <= self.majority_prob <= 1.0:
            raise DataError("majority_prob must lie in [0, 1]")


def gen_synthetic(spec: SyntheticSpec, rng: np.random.Generator, id_prefix: str = "q") -> Dataset:
    """Two-feature items; minority items have their second feature zeroed
    while relevance still uses the uncorrupted value.

    Group label 1 marks the majority, 0 the minority.
    """
    lo, hi = spec.feature_range
    queries = []
    for k in range(spec.num_queries):
        z = rng.uniform(lo, hi, size=(spec.items_per_query, 2))
        majority = rng.random(spec.items_per_query) < spec.majority_prob
        rels = np.clip(z.sum(axis=1), *spec.rel_clip)
        x = z.copy()
        x[~majority, 1] = 0.0
        queries.append(Query(f"{id_prefix}{k}", x, rels, majority.astype(int)))
    return Dataset(queries, 2, True)


# -- pool-based queries --------------------------------------------------------


@dataclass(frozen=True)
class PoolSpec:
    """Individuals ``(features, binary relevance, group)`` sampled into queries.

    With ``stratified_relevant`` set, each query holds exactly that many
    relevant individuals (each side drawn with replacement).
    """

    features: np.ndarray
    rels: np.ndarray
    groups: Optional[np.ndarray] = None
    query_size: int = 10
    num_queries: int = 100
    stratified_relevant: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "features", np.atleast_2d(np.asarray(self.features, dtype=float)))
        object.__setattr__(self, "rels", np.asarray(self.rels, dtype=float).reshape(-1))
        if self.groups is not None:
            object.__setattr__(self, "groups", np.asarray(self.groups, dtype=int).reshape(-1))
        if self.query_size < 1 or self.num_queries < 1:
            raise DataError("query_size and num_queries must be >= 1")


def build_queries_from_pool(spec: PoolSpec, rng: np.random.Generator, id_prefix: str = "q") -> Dataset:
    m = spec.rels.size
    if m == 0:
        raise EmptyPool("pool has no individuals")
    if spec.features.shape[0] != m or (spec.groups is not None and spec.groups.size != m):
        raise DataError("pool arrays disagree in length")
    relevant = np.flatnonzero(spec.rels > 0)
    irrelevant = np.flatnonzero(spec.rels <= 0)
    k = spec.stratified_relevant
    if k is not None:
        if not 0 <= k <= spec.query_size:
            raise DataError("stratified_relevant must lie in [0, query_size]")
        if (k > 0 and relevant.size == 0) or (k < spec.query_size and irrelevant.size == 0):
            raise EmptyPool("pool lacks the relevant/irrelevant individuals stratification needs")
    queries = []
    for j in range(spec.num_queries):
        if k is None:
            idx = rng.integers(0, m, size=spec.query_size)
        else:
            idx = np.concatenate([
                rng.choice(relevant, size=k, replace=True) if k else np.empty(0, dtype=int),
                rng.choice(irrelevant, size=spec.query_size - k, replace=True)
                if k < spec.query_size else np.empty(0, dtype=int),
            ])
            idx = rng.permutation(idx)
        groups = None if spec.groups is None else spec.groups[idx]
        queries.append(Query(f"{id_prefix}{j}", spec.features[idx], spec.rels[idx], groups))
    return Dataset(queries, spec.features.shape[1], spec.groups is not None)


@dataclass(frozen=True)
class PlantedBiasPool:
    features: np.ndarray
    rels: np.ndarray
    clean_rels: np.ndarray
    groups: np.ndarray
    age_column: int
    sex_column: int


def gen_planted_bias_pool(m: int, rng: np.random.Generator, n_signal: int = 3, bias_strength: float = 1.5,
                          relevant_rate: float = 0.4, young_share: float = 0.5) -> PlantedBiasPool:
    """Credit-style pool with a planted age bias in the observed labels.

    Columns: ``n_signal`` legitimate features, a standardized ``age`` column
    and a binary ``sex`` column correlated with age. ``clean_rels`` depend
    on the signal features only; ``rels`` additionally reward age, mimicking
    historically biased labels. Both mark the top ``relevant_rate`` share as
    relevant. Group 0 is the youngest ``young_share`` of the pool, group 1 the rest.
    """
    signal = rng.standard_normal((m, n_signal))
    age = rng.standard_normal(m)
    sex = (0.8 * age + rng.standard_normal(m) > 0).astype(float)
    merit = signal.sum(axis=1) / math.sqrt(n_signal)

    def top_share(score):
        return (score > np.quantile(score, 1.0 - relevant_rate)).astype(float)

    groups = (age > np.quantile(age, young_share)).astype(int)
    features = np.column_stack([signal, age, sex])
    return PlantedBiasPool(features, top_share(merit + bias_strength * age), top_share(merit),
                           groups, n_signal, n_signal + 1)


# -- LETOR text format -----------------------------------------------------------

_TOKEN = re.compile(r"\S+")


def _parse_letor_lines(lines: Iterable[str], path: str):
    """Yield ``(qid, rel, {fid: value})`` per data line."""
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0]
        tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(line)]
        if not tokens:
            continue
        (rel_tok, col) = tokens[0]
        try:
            rel = float(rel_tok)
        except ValueError:
            raise ParseError(lineno, col, f"malformed relevance {rel_tok!r}", path) from None
        if not math.isfinite(rel) or rel < 0:
            raise ParseError(lineno, col, f"relevance must be finite and >= 0, got {rel_tok!r}", path)
        if len(tokens) < 2 or not tokens[1][0].startswith("qid:") or len(tokens[1][0]) == 4:
            c = tokens[1][1] if len(tokens) > 1 else len(line.rstrip()) + 1
            raise ParseError(lineno, c, "expected qid:<id>", path)
        qid = tokens[1][0][4:]
        feats = {}
        for tok, c in tokens[2:]:
            fid, sep, val = tok.partition(":")
            if not sep or not fid.isdigit() or int(fid) < 1:
                raise ParseError(lineno, c, f"malformed feature token {tok!r}", path)
            try:
                v = float(val)
            except ValueError:
                raise ParseError(lineno, c, f"malformed feature value {val!r}", path) from None
            if not math.isfinite(v):
                raise ParseError(lineno, c, f"non-finite feature value {val!r}", path)
            if int(fid) in feats:
                raise ParseError(lineno, c, f"duplicate feature id {fid}", path)
            feats[int(fid)] = v
        yield qid, rel, feats


@dataclass(frozen=True)
class Standardizer:
    """Per-feature z-scoring; ``skip`` columns (0-based) pass through."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, skip: Sequence[int] = ()) -> "Standardizer":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        skip = list(skip)
        mean[skip] = 0.0
        scale[skip] = 1.0
        return cls(mean, scale)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["scale"], dtype=float))


def parse_letor(path, min_docs: int = 1, require_max_rel: Optional[int] = None,
                sample_docs: Optional[int] = None, rng: Optional[np.random.Generator] = None,
                binary_features: Sequence[int] = (), drop_features: Sequence[int] = (),
                num_features: Optional[int] = None, standardizer: Optional[Standardizer] = None,
                standardize: bool = True):
    """Read a LETOR/SVMrank text file into a Dataset.

    Queries keep file order. Queries with fewer than ``min_docs`` documents
    are dropped; with ``require_max_rel`` queries lacking a document of that
    relevance are dropped; with ``sample_docs`` each query is subsampled to
    that many documents without replacement, redrawing until the sample
    contains a ``require_max_rel`` document (when set). Feature ids are
    1-based in the file; ``binary_features`` and ``drop_features`` use those
    ids. Unlisted features default to 0.

    Returns ``(dataset, standardizer)``. Pass the standardizer fitted on the
    training split to transform validation/test splits.
    """
    path = str(path)
    try:
        with open(path, encoding="utf-8") as fh:
            rows = list(_parse_letor_lines(fh, path))
    except OSError as e:
        raise IoError(str(e)) from e
    max_fid = max((max(f) for _, _, f in rows if f), default=0)
    p_raw = num_features if num_features is not None else max_fid
    if max_fid > p_raw:
        raise DataError(f"feature id {max_fid} exceeds num_features={p_raw}")
    grouped: dict = {}
    for qid, rel, feats in rows:
        vec = np.zeros(p_raw)
        for fid, v in feats.items():
            vec[fid - 1] = v
        grouped.setdefault(qid, ([], []))
        grouped[qid][0].append(vec)
        grouped[qid][1].append(rel)

    keep_cols = [c for c in range(p_raw) if (c + 1) not in set(drop_features)]
    # binary feature ids renumbered after dropping
    skip = [keep_cols.index(fid - 1) for fid in binary_features if (fid - 1) in keep_cols]
    if sample_docs is not None and rng is None:
        raise ValueError("sampling documents needs a random stream")

    kept = []
    for qid, (vecs, rels) in grouped.items():
        X = np.vstack(vecs)[:, keep_cols]
        rels = np.asarray(rels)
        if len(rels) < min_docs:
            continue
        if require_max_rel is not None and not np.any(rels == require_max_rel):
            continue
        if sample_docs is not None and sample_docs < len(rels):
            while True:
                idx = rng.choice(len(rels), size=sample_docs, replace=False)
                if require_max_rel is None or np.any(rels[idx] == require_max_rel):
                    break
            X, rels = X[idx], rels[idx]
        kept.append((qid, X, rels))
    if not kept:
        raise EmptyAfterFilter(f"{path}: no queries left after filtering")
    if standardize:
        if standardizer is None:
            standardizer = Standardizer.fit(np.vstack([X for _, X, _ in kept]), skip)
        kept = [(qid, standardizer(X), rels) for qid, X, rels in kept]
    queries = [Query(qid, X, rels) for qid, X, rels in kept]
    return Dataset(queries, len(keep_cols), False), standardizer


# -- German-credit style CSV ----------------------------------------------------

GERMAN_NUMERIC = ("Age", "Duration", "Credit amount")
GERMAN_CATEGORICAL = ("Job", "Housing", "Saving accounts", "Checking account", "Purpose")


def preprocess_german(path, label_column: str = "Risk", positive_label: str = "good",
                      young_age: float = 25.0):
    """One-hot categoricals (missing as its own category), z-scored
    age/duration/credit amount, binary sex column.

    Returns ``(features, rels, groups, columns)``: relevance is the
    creditworthiness label, group 0 is ``age < young_age``.
    """
    import pandas as pd

    try:
        df = pd.read_csv(path)
    except OSError as e:
        raise IoError(str(e)) from e
    df = df.drop(columns=[c for c in df.columns if c.startswith("Unnamed")])
    required = set(GERMAN_NUMERIC) | {"Sex", label_column}
    missing = required - set(df.columns)
    if missing:
        raise DataError(f"German CSV lacks columns {sorted(missing)}")
    if df.empty:
        raise EmptyPool(f"{path}: German CSV has a header but no rows")
    cols = {}
    for name in GERMAN_NUMERIC:
        v = df[name].astype(float).to_numpy()
        cols[name.lower().replace(" ", "_")] = (v - v.mean()) / v.std()
    cols["sex"] = (df["Sex"].astype(str).str.lower() == "male").astype(float).to_numpy()
    for name in GERMAN_CATEGORICAL:
        if name not in df.columns:
            continue
        values = df[name].astype(object).where(df[name].notna(), "NA").astype(str)
        for level in sorted(values.unique()):
            cols[f"{name.lower().replace(' ', '_')}={level}"] = (values == level).astype(float).to_numpy()
    features = np.column_stack(list(cols.values()))
    rels = (df[label_column].astype(str) == positive_label).astype(float).to_numpy()
    groups = (df["Age"].astype(float).to_numpy() >= young_age).astype(int)
    return features, rels, groups, list(cols)


# -- persistence --------------------------------------------------------------------


def dataset_to_jsonl(data: Dataset) -> str:
    lines = []
    for q in data:
        items = []
        for i in range(q.n):
            item = {"features": q.features[i].tolist(), "rel": float(q.rels[i])}
            if q.groups is not None:
                item["group"] = int(q.groups[i])
            items.append(item)
        lines.append(json.dumps({"query_id": q.id, "items": items}, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def write_dataset(path, data: Dataset) -> None:
    _write_text(path, dataset_to_jsonl(data))


def read_dataset(path) -> Dataset:
    path = str(path)
    queries = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    q = Query.from_items(str(rec["query_id"]), rec["items"])
                except (ValueError, KeyError, TypeError) as e:
                    if isinstance(e, DataError):
                        raise
                    raise ParseError(lineno, 1, f"bad dataset record: {e}", path) from None
                validate_query(q)
                queries.append(q)
    except OSError as e:
        raise IoError(str(e)) from e
    if not queries:
        raise DataError(f"{path}: dataset is empty")
    return Dataset.of(queries)


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise IoError(str(e)) from e


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise IoError(str(e)) from e
    except ValueError as e:
        raise DataError(f"{path}: invalid JSON ({e})") from None
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: schema_version {doc.get('schema_version')!r}, expected {SCHEMA_VERSION}"
        )
    return doc


def _dump(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def save_metric(path, metric: FairItemMetric, info: Optional[dict] = None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "fair_metric",
        "feature_dim": metric.dim,
        "subspace_basis": metric.subspace.basis.tolist(),
        "metric_mode": metric.mode,
        "info": info or {},
    }
    _write_text(path, _dump(doc))


def load_metric(path) -> FairItemMetric:
    doc = _read_json(path)
    basis = doc.get("subspace_basis")
    if not basis:
        raise DataError(f"{path}: no subspace stored")
    return FairItemMetric(SensitiveSubspace(np.asarray(basis, dtype=float)), doc.get("metric_mode", "euclidean"))


@dataclass
class ModelFile:
    theta: np.ndarray
    metric: Optional[FairItemMetric]
    config: dict
    seed: int
    variant: str = "senstir"
    train_metrics: dict = field(default_factory=dict)

    @property
    def feature_dim(self) -> int:
        return int(np.asarray(self.theta).size)


def save_model(path, model: ModelFile) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "model",
        "feature_dim": model.feature_dim,
        "theta": np.asarray(model.theta, dtype=float).tolist(),
        "subspace_basis": None if model.metric is None else model.metric.subspace.basis.tolist(),
        "metric_mode": None if model.metric is None else model.metric.mode,
        "variant": model.variant,
        "config": model.config,
        "seed": int(model.seed),
        "train_metrics": model.train_metrics,
    }
    _write_text(path, _dump(doc))


def load_model(path) -> ModelFile:
    doc = _read_json(path)
    try:
        theta = np.asarray(doc["theta"], dtype=float)
        if theta.size != doc["feature_dim"]:
            raise DataError(f"{path}: theta has {theta.size} entries, feature_dim {doc['feature_dim']}")
        metric = None
        if doc.get("subspace_basis"):
            metric = FairItemMetric(SensitiveSubspace(np.asarray(doc["subspace_basis"], dtype=float)),
                                    doc["metric_mode"])
        return ModelFile(theta, metric, doc["config"], doc["seed"], doc.get("variant", "senstir"),
                         doc.get("train_metrics", {}))
    except KeyError as e:
        raise DataError(f"{path}: model file lacks field {e}") from None


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def report_to_csv(rows: Sequence[dict], header: Sequence[str] = REPORT_HEADER) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row.get(k, float("nan"))) for k in header])
    return buf.getvalue()


def write_report(path, rows: Sequence[dict], header: Sequence[str] = REPORT_HEADER) -> None:
    _write_text(path, report_to_csv(rows, header))
