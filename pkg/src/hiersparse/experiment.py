"""Experiment drivers behind the CLI: generate, run, audit, sweep.

A run is fully described by an :class:`ExperimentConfig`; the resolved config
is written next to every set of outputs so results can be regenerated.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import formats
from .dictionary import HierDictionary, build_dictionary
from .errors import ConfigError, DataError, DepthDimensionError
from .evaluate import (
    RecoveryReport,
    audit_clusters,
    audit_orthogonality,
    audit_simplex,
    densify,
    hierarchical_nn,
    nn_classify,
    predict,
    support_precision_recall,
    train_linear_classifier,
)
from .numerics import solve_least_squares
from .pursuit import PursuitConfig, SparseCode, hierarchical_omp, omp
from .synth import EmbeddingSet, SampleConfig, generate_embeddings, make_schedule, sample_noisy
from .taxonomy import Taxonomy, build_balanced_tree, load_taxonomy, save_taxonomy

log = logging.getLogger(__name__)

METHODS = ("homp", "omp", "nn", "hnn")
SWEEP_AXES = ("noise", "beam", "sparsity")


@dataclass
class GeneratorParams:
    b: int = 3
    L: int = 7
    d: int = 50
    theta0_deg: float = 85.0
    root_child_norm: float = 0.8
    rate: float = 0.4
    schedule_mode: str = "raw-rate"
    noise_variance: float = 1e-5
    samples_per_leaf: int = 5
    seed: int = 0


@dataclass
class PursuitParams:
    beam: int = 4
    max_steps: int | None = None  # None -> hierarchy depth
    tolerance: float = 1e-6
    sparsity: int | None = None  # None -> hierarchy depth


@dataclass
class ClassifierParams:
    enabled: bool = True
    epochs: int = 500
    lr: float = 0.1
    weight_decay: float = 1e-4
    seed: int = 0
    test_fraction: float = 0.2
    split_seed: int = 0
    shots: int | None = None


@dataclass
class ExperimentConfig:
    mode: str = "synthetic"
    generator: GeneratorParams = field(default_factory=GeneratorParams)
    pursuit: PursuitParams = field(default_factory=PursuitParams)
    classifier: ClassifierParams = field(default_factory=ClassifierParams)
    methods: list[str] = field(default_factory=lambda: ["homp"])
    baselines: bool = False
    data_dir: str = "data"
    output_dir: str = "out"
    taxonomy_path: str | None = None
    embeddings_path: str | None = None
    samples_path: str | None = None
    labels_path: str | None = None
    vector_format: str = "bin"
    normalize_samples: bool = False
    workers: int = 1
    record_timing: bool = False
    audit_random_pairs: int = 1000
    audit_seed: int = 0
    path_cap: int = 64

    # -------------------------------------------------------------------
    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        sections = {"generator": GeneratorParams, "pursuit": PursuitParams, "classifier": ClassifierParams}
        kwargs = {}
        names = {f.name for f in dataclasses.fields(cls)}
        for key, value in doc.items():
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
            if key in sections:
                sub = sections[key]
                allowed = {f.name for f in dataclasses.fields(sub)}
                bad = set(value) - allowed
                if bad:
                    raise ConfigError(f"unknown {key} keys: {sorted(bad)}")
                kwargs[key] = sub(**value)
            else:
                kwargs[key] = value
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self):
        if self.mode not in ("synthetic", "ingested"):
            raise ConfigError(f"mode must be 'synthetic' or 'ingested', got {self.mode!r}")
        g = self.generator
        if self.mode == "synthetic":
            if g.b < 2 or g.L < 1:
                raise ConfigError(f"need b >= 2 and L >= 1, got b={g.b}, L={g.L}")
            if g.d < g.L + g.b:
                raise DepthDimensionError(
                    f"d={g.d} violates the depth-dimension condition d >= L + b = {g.L + g.b}; "
                    f"raise --d to at least {g.L + g.b} or reduce --L / --b"
                )
            make_schedule(math.radians(g.theta0_deg), g.rate, g.b, g.L, g.schedule_mode)
            SampleConfig(g.noise_variance, g.samples_per_leaf, g.seed)
        p = self.pursuit
        PursuitConfig(p.beam, p.max_steps or 1, p.tolerance, p.sparsity or 1)
        c = self.classifier
        if c.epochs < 0 or not c.lr > 0 or c.weight_decay < 0:
            raise ConfigError("classifier needs epochs >= 0, lr > 0, weight_decay >= 0")
        if not 0 < c.test_fraction < 1:
            raise ConfigError(f"test_fraction must lie in (0, 1), got {c.test_fraction}")
        if c.shots is not None and c.shots < 1:
            raise ConfigError(f"shots must be >= 1, got {c.shots}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.vector_format not in ("bin", "csv"):
            raise ConfigError("vector_format must be 'bin' or 'csv'")

    def pursuit_config(self, depth: int) -> PursuitConfig:
        p = self.pursuit
        return PursuitConfig(p.beam, p.max_steps or depth, p.tolerance, p.sparsity or depth)

    def schedule(self, t: Taxonomy):
        g = self.generator
        b = max(len(t.children(i)) for i in range(len(t)))
        b = max(b, 2)
        return make_schedule(math.radians(g.theta0_deg), g.rate, b, t.depth, g.schedule_mode)


def derive_seed(base: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(base), *map(int, keys)]).generate_state(1)[0])


# ----------------------------------------------------------------- data

@dataclass
class Dataset:
    taxonomy: Taxonomy
    embeddings: EmbeddingSet
    sample_ids: np.ndarray
    samples: np.ndarray
    leaves: np.ndarray


def _ext(cfg: ExperimentConfig) -> str:
    return ".csv" if cfg.vector_format == "csv" else ".hce"


def data_paths(cfg: ExperimentConfig) -> dict[str, Path]:
    root = Path(cfg.data_dir)
    ext = _ext(cfg)

    def pick(explicit, name):
        if explicit:
            return Path(explicit)
        if name.endswith("*"):
            stem = name[:-1]
            for e in (ext, ".hce", ".csv"):
                if (root / (stem + e)).exists():
                    return root / (stem + e)
            return root / (stem + ext)
        return root / name

    return {
        "taxonomy": pick(cfg.taxonomy_path, "taxonomy.json"),
        "embeddings": pick(cfg.embeddings_path, "embeddings*"),
        "samples": pick(cfg.samples_path, "samples*"),
        "labels": pick(cfg.labels_path, "labels.csv"),
    }


def load_dataset(cfg: ExperimentConfig, need_samples: bool = True) -> Dataset:
    paths = data_paths(cfg)
    wanted = ["taxonomy", "embeddings"] + (["samples", "labels"] if need_samples else [])
    missing = [str(paths[k]) for k in wanted if not paths[k].exists()]
    if missing:
        raise DataError("missing input files: " + ", ".join(missing))
    t = load_taxonomy(paths["taxonomy"], path_cap=cfg.path_cap)
    e = formats.load_embeddings(paths["embeddings"])
    for i in t.non_root:
        if i not in e:
            raise DataError(f"embedding file {paths['embeddings']} lacks node {i}")
    if not need_samples:
        return Dataset(t, e, np.zeros(0, dtype=np.int64), np.zeros((0, e.dim)), np.zeros(0, dtype=np.int64))
    ids, X = formats.read_vectors(paths["samples"])
    if X.shape[1] != e.dim:
        raise DataError(f"samples have dimension {X.shape[1]}, embeddings {e.dim}")
    labels = formats.read_labels(paths["labels"])
    order = np.argsort(ids, kind="stable")
    ids, X = ids[order], X[order]
    try:
        leaves = np.array([labels[int(i)] for i in ids], dtype=np.int64)
    except KeyError as exc:
        raise DataError(f"sample {exc.args[0]} has no entry in {paths['labels']}") from None
    leafset = set(t.leaves)
    bad = [int(l) for l in leaves if int(l) not in leafset]
    if bad:
        raise DataError(f"labels reference non-leaf nodes, e.g. {bad[0]}")
    if cfg.normalize_samples:
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0):
            raise DataError("cannot unit-normalize a zero sample")
        X = X / norms[:, None]
    return Dataset(t, e, ids, X, leaves)


# ------------------------------------------------------------------ gen

def synthesize(cfg: ExperimentConfig):
    g = cfg.generator
    t = build_balanced_tree(g.b, g.L)
    sched = make_schedule(math.radians(g.theta0_deg), g.rate, g.b, g.L, g.schedule_mode)
    e = generate_embeddings(t, g.d, sched, g.root_child_norm, seed=derive_seed(g.seed, 0))
    samples = sample_noisy(e, t, SampleConfig(g.noise_variance, g.samples_per_leaf, derive_seed(g.seed, 1)))
    return t, e, samples


def cmd_gen(cfg: ExperimentConfig) -> dict[str, Path]:
    cfg.validate()
    if cfg.mode != "synthetic":
        raise ConfigError("gen only produces synthetic data (mode must be 'synthetic')")
    t, e, samples = synthesize(cfg)
    root = Path(cfg.data_dir)
    root.mkdir(parents=True, exist_ok=True)
    ext = _ext(cfg)
    out = {
        "taxonomy": root / "taxonomy.json",
        "embeddings": root / f"embeddings{ext}",
        "samples": root / f"samples{ext}",
        "labels": root / "labels.csv",
        "dictionary": root / f"dictionary{ext}",
        "config": root / "config.json",
    }
    save_taxonomy(t, out["taxonomy"])
    formats.save_embeddings(e, out["embeddings"])
    X = np.stack([s for s, _ in samples])
    sids = np.arange(len(samples))
    formats.write_vectors(out["samples"], sids, X)
    formats.write_labels(out["labels"], sids, [leaf for _, leaf in samples])
    formats.export_dictionary(build_dictionary(e, t), out["dictionary"])
    formats.write_json(out["config"], cfg.to_dict())
    log.info("wrote %d samples over %d leaves to %s", len(samples), len(t.leaves), root)
    return out


# ------------------------------------------------------------------ run

_WORKER = {}


def _init_worker(D, t, e, method, pcfg):
    _WORKER.update(D=D, t=t, e=e, method=method, pcfg=pcfg)


def _recover_one(x, D: HierDictionary, t: Taxonomy, e: EmbeddingSet, method: str, pcfg: PursuitConfig):
    start = time.perf_counter()
    leaf = None
    if method == "homp":
        code = hierarchical_omp(x, D, t, pcfg)
        if code.path and t.is_leaf(code.path[-1]):
            leaf = code.path[-1]
    elif method == "omp":
        code = omp(x, D, pcfg)
    elif method == "hnn":
        path, leaf = hierarchical_nn(x, e, t)
        cols = D.path_columns(path)
        w = solve_least_squares(D.atoms[:, cols], x)
        code = SparseCode(cols, w, float(np.linalg.norm(x - D.atoms[:, cols] @ w)), path)
    elif method == "nn":
        leaf = nn_classify(x, e, t.leaves)
        code = None
    else:
        raise ConfigError(f"unknown method {method!r}")
    return code, leaf, time.perf_counter() - start


def _recover_chunk(X):
    w = _WORKER
    return [_recover_one(x, w["D"], w["t"], w["e"], w["method"], w["pcfg"]) for x in X]


def recover_all(X, D, t, e, method, pcfg, workers=1):
    if workers <= 1 or len(X) < 2:
        return [_recover_one(x, D, t, e, method, pcfg) for x in X]
    chunks = np.array_split(np.arange(len(X)), workers * 4)
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(D, t, e, method, pcfg)) as pool:
        parts = pool.map(_recover_chunk, [X[c] for c in chunks if len(c)])
        return [r for part in parts for r in part]


def stratified_split(leaves, test_fraction: float, seed: int, shots: int | None = None):
    """Per-leaf shuffled split; returns a list of 'train' / 'test' / 'unused' tags.

    Leaves with a single sample keep it for training. ``shots`` caps the
    training samples of each class; the surplus is tagged 'unused'.
    """
    leaves = np.asarray(leaves)
    tags = np.array(["train"] * len(leaves), dtype=object)
    rng = np.random.default_rng(seed)
    for leaf in np.unique(leaves):
        idx = np.flatnonzero(leaves == leaf)
        idx = idx[rng.permutation(len(idx))]
        n_test = int(round(test_fraction * len(idx))) if len(idx) > 1 else 0
        n_test = min(max(n_test, 1 if len(idx) > 1 else 0), len(idx) - 1)
        tags[idx[:n_test]] = "test"
        train = idx[n_test:]
        if shots is not None and len(train) > shots:
            tags[np.sort(train)[shots:]] = "unused"
    return tags.tolist()


def evaluate_method(data: Dataset, D: HierDictionary, cfg: ExperimentConfig, method: str, pcfg: PursuitConfig | None = None):
    """Recover every sample with ``method``; return (per-sample rows, summary)."""
    t = data.taxonomy
    pcfg = pcfg or cfg.pursuit_config(t.depth)
    started = time.perf_counter()
    results = recover_all(data.samples, D, t, data.embeddings, method, pcfg, cfg.workers)
    c = cfg.classifier

    reports = []
    for sid, leaf, (code, pred, wall) in zip(data.sample_ids, data.leaves, results):
        if code is None:
            rep = RecoveryReport(int(sid), int(leaf), [], (), math.nan, math.nan, math.nan, wall, pred)
        else:
            p, r, path = support_precision_recall(code.support, int(leaf), t, D)
            rep = RecoveryReport(int(sid), int(leaf), list(code.support), path, p, r, code.residual_norm, wall, pred)
        reports.append(rep)

    if c.enabled:
        split = stratified_split(data.leaves, c.test_fraction, c.split_seed, c.shots)
    else:
        split = ["eval"] * len(reports)

    if c.enabled and method != "nn":
        codes = [res[0] for res in results]
        X = densify(codes, D.n_atoms)
        labels = np.array([t.label_of(int(l)) for l in data.leaves])
        tr = np.array([s == "train" for s in split])
        te = np.array([s == "test" for s in split])
        if len(np.unique(labels[tr])) < 2:
            raise DataError("training split holds fewer than two classes")
        model = train_linear_classifier(X[tr], labels[tr], c.epochs, c.lr, c.weight_decay, c.seed)
        preds = np.full(len(reports), -1)
        if te.any():
            preds[te] = predict(model, X[te])
        for rep, lab, s in zip(reports, preds, split):
            rep.predicted_leaf = t.leaf_by_label[int(lab)] if s == "test" else None

    rows = []
    for rep, s in zip(reports, split):
        correct = None if rep.predicted_leaf is None else int(rep.predicted_leaf == rep.true_leaf)
        row = {
            "sample_id": rep.sample_id,
            "true_leaf": rep.true_leaf,
            "split": s,
            "support": rep.support,
            "matched_path": list(rep.matched_path),
            "precision": rep.precision,
            "recall": rep.recall,
            "residual_norm": rep.residual_norm,
            "predicted_leaf": rep.predicted_leaf,
            "correct": correct,
        }
        if cfg.record_timing:
            row["wall_time"] = rep.wall_time
        rows.append(row)
    summary = summarize(rows, method)
    if cfg.record_timing:
        summary["total_wall_time"] = time.perf_counter() - started
    return rows, summary


def _mean(vals):
    vals = [v for v in vals if v is not None and not (isinstance(v, float) and math.isnan(v))]
    return float(np.mean(vals)) if vals else None


def summarize(rows: list[dict], method: str) -> dict:
    """Summary metrics, computable from the per-sample rows alone."""
    evald = [r for r in rows if r["split"] in ("test", "eval") and r["correct"] is not None]
    per_class: dict[int, int] = {}
    for r in rows:
        if r["split"] == "train":
            per_class[r["true_leaf"]] = per_class.get(r["true_leaf"], 0) + 1
    out = {
        "method": method,
        "n_samples": len(rows),
        "mean_precision": _mean([r["precision"] for r in rows]),
        "mean_recall": _mean([r["recall"] for r in rows]),
        "mean_residual": _mean([r["residual_norm"] for r in rows]),
        "accuracy": _mean([r["correct"] for r in evald]),
        "n_train": sum(per_class.values()),
        "n_test": sum(r["split"] == "test" for r in rows),
        "max_train_per_class": max(per_class.values(), default=0),
        "min_train_per_class": min(per_class.values(), default=0),
    }
    if rows and "wall_time" in rows[0]:
        out["mean_wall_time"] = _mean([r["wall_time"] for r in rows])
    return out


CSV_COLUMNS = ["sample_id", "true_leaf", "split", "support", "matched_path", "precision", "recall",
               "residual_norm", "predicted_leaf", "correct"]


def cmd_run(cfg: ExperimentConfig, methods=None) -> dict[str, dict]:
    cfg.validate()
    methods = list(methods or cfg.methods)
    if cfg.baselines:
        methods += [m for m in METHODS if m not in methods]
    data = load_dataset(cfg)
    D = build_dictionary(data.embeddings, data.taxonomy)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_json(out / "config.json", cfg.to_dict())
    summaries = {}
    for m in methods:
        rows, summary = evaluate_method(data, D, cfg, m)
        cols = CSV_COLUMNS + (["wall_time"] if cfg.record_timing else [])
        formats.write_rows_csv(out / f"{m}_samples.csv", rows, cols)
        formats.write_json(out / f"{m}_summary.json", summary)
        summaries[m] = summary
        log.info("%s: precision=%s recall=%s accuracy=%s", m, summary["mean_precision"], summary["mean_recall"], summary["accuracy"])
    return summaries


# ---------------------------------------------------------------- audit

def cmd_audit(cfg: ExperimentConfig) -> dict[str, dict]:
    cfg.validate()
    data = load_dataset(cfg, need_samples=False)
    t, e = data.taxonomy, data.embeddings
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_json(out / "config.json", cfg.to_dict())
    reports = [
        audit_orthogonality(e, t, cfg.audit_random_pairs, cfg.audit_seed),
        audit_clusters(e, t, cfg.schedule(t)),
        audit_simplex(e, t),
    ]
    result = {}
    for rep in reports:
        formats.write_rows_csv(out / f"audit_{rep.name}.csv", rep.rows)
        formats.write_json(out / f"audit_{rep.name}.json", rep.summary)
        result[rep.name] = rep.summary
    return result


# ---------------------------------------------------------------- sweep

SWEEP_METRICS = ("mean_precision", "mean_recall", "accuracy", "mean_residual")


def cmd_sweep(cfg: ExperimentConfig, axis: str, values) -> Path:
    cfg.validate()
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    methods = list(cfg.methods)
    if cfg.baselines:
        methods += [m for m in METHODS if m not in methods]
    data = load_dataset(cfg, need_samples=axis != "noise")
    if axis == "noise":
        for v in values:
            if not float(v) >= 0:
                raise ConfigError(f"noise variance must be >= 0, got {v}")
    D = build_dictionary(data.embeddings, data.taxonomy)
    t = data.taxonomy
    spl = cfg.generator.samples_per_leaf
    rows = []
    for cell, v in enumerate(values):
        cell_data = data
        pcfg = cfg.pursuit_config(t.depth)
        if axis == "noise":
            smp = sample_noisy(data.embeddings, t, SampleConfig(float(v), spl, derive_seed(cfg.generator.seed, 2, cell)))
            X = np.stack([s for s, _ in smp])
            if cfg.normalize_samples:
                X = X / np.linalg.norm(X, axis=1)[:, None]
            cell_data = Dataset(t, data.embeddings, np.arange(len(smp)), X, np.array([leaf for _, leaf in smp]))
        elif axis == "beam":
            pcfg = dataclasses.replace(pcfg, beam=int(v))
        else:
            pcfg = dataclasses.replace(pcfg, sparsity=int(v), max_steps=int(v))
        for m in methods:
            _, summary = evaluate_method(cell_data, D, cfg, m, pcfg)
            for metric in SWEEP_METRICS:
                rows.append({"axis": axis, "value": v, "method": m, "metric": metric, "metric_value": summary[metric]})
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_json(out / "config.json", {**cfg.to_dict(), "sweep": {"axis": axis, "values": values}})
    path = out / f"sweep_{axis}.csv"
    formats.write_rows_csv(path, rows, ["axis", "value", "method", "metric", "metric_value"])
    return path
