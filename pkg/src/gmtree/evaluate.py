"""Cross-validation, accuracy and timing: the benchmark harness.

The runner consumes local files only; dataset acquisition is documented in
``data/`` at the repo root. Per-fold training time covers carving the train
subset out of the loaded dataset (stable-filtered sorted orders) plus the
tree build itself — never file loading or the initial full-file sort.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .data import DataSet, SubsetView, kfold_indices, load_csv, load_rows, load_schema, make_subset
from .errors import DataFormatError, GmtError
from .partition import DirichletParams, PriorConfig
from .tree import (
    GmtConfig,
    Model,
    TreeEnsemble,
    build_ensemble_distinct_roots,
    build_gmt,
    predict_class,
)


def config_from_dict(spec: dict) -> GmtConfig:
    """Build configuration from the declarative benchmark/CLI form."""
    alpha = spec.get("alpha")
    prior = DirichletParams(np.asarray(alpha, dtype=np.float64)) if alpha else None
    return GmtConfig(
        prior=prior,
        prior_cfg=PriorConfig(
            g=float(spec.get("g", 0.99)),
            depth_dependent=bool(spec.get("depth_dependent", True)),
        ),
        delta=float(spec.get("delta", 0.0)),
        max_depth=spec.get("max_depth"),
    )


def config_echo(cfg: GmtConfig) -> dict:
    return {
        "alpha": [float(a) for a in cfg.prior.alpha] if cfg.prior is not None else None,
        "g": cfg.prior_cfg.g,
        "depth_dependent": cfg.prior_cfg.depth_dependent,
        "delta": cfg.delta,
        "max_depth": cfg.max_depth,
    }


@dataclass(frozen=True)
class BenchmarkSpec:
    """One dataset's benchmark protocol."""

    name: str
    data: str
    schema: str
    protocol: dict  # {"kind": "kfold", "k", "seed"} | {"kind": "train-test", "test"}
    config: GmtConfig = GmtConfig()
    repetitions: int = 1
    n_trees: int = 1

    @classmethod
    def from_dict(cls, spec: dict, base_dir: Union[str, Path, None] = None) -> "BenchmarkSpec":
        base = Path(base_dir) if base_dir is not None else Path(".")

        def resolve(p):
            p = Path(p)
            return str(p if p.is_absolute() else base / p)

        protocol = dict(spec.get("protocol", {"kind": "kfold", "k": 10, "seed": 0}))
        if protocol.get("kind") == "train-test":
            protocol["test"] = resolve(protocol["test"])
        return cls(
            name=spec["name"],
            data=resolve(spec["data"]),
            schema=resolve(spec["schema"]),
            protocol=protocol,
            config=config_from_dict(spec.get("model", {})),
            repetitions=int(spec.get("repetitions", 1)),
            n_trees=int(spec.get("n_trees", 1)),
        )


@dataclass
class FoldResult:
    seed: int
    fold: int
    train_ms: float
    accuracy: float
    depth: int
    n_leaves: int
    test_rows: list[int]
    predictions: list[int]


@dataclass
class BenchmarkReport:
    name: str
    n: int
    d: int
    n_classes: int
    protocol: dict
    config: dict
    repetitions: int
    accuracy: float
    accuracy_std: float
    seed_accuracies: list[float]
    train_ms_mean: float
    depth_mean: float
    leaves_mean: float
    folds: list[FoldResult] = field(default_factory=list)

    def to_dict(self, include_predictions: bool = True) -> dict:
        out = {
            "name": self.name,
            "n": self.n,
            "d": self.d,
            "n_classes": self.n_classes,
            "protocol": self.protocol,
            "config": self.config,
            "repetitions": self.repetitions,
            "accuracy": self.accuracy,
            "accuracy_std": self.accuracy_std,
            "seed_accuracies": self.seed_accuracies,
            "train_ms_mean": self.train_ms_mean,
            "depth_mean": self.depth_mean,
            "leaves_mean": self.leaves_mean,
        }
        if include_predictions:
            out["folds"] = [
                {
                    "seed": f.seed,
                    "fold": f.fold,
                    "train_ms": f.train_ms,
                    "accuracy": f.accuracy,
                    "depth": f.depth,
                    "n_leaves": f.n_leaves,
                    "test_rows": f.test_rows,
                    "predictions": f.predictions,
                }
                for f in self.folds
            ]
        return out


def evaluate_accuracy(model: Model, features: np.ndarray, outcomes: np.ndarray) -> float:
    """Fraction of rows whose predicted class matches the given outcome."""
    features = np.asarray(features, dtype=np.float64)
    outcomes = np.asarray(outcomes)
    if len(features) == 0:
        raise DataFormatError("cannot evaluate accuracy on an empty test set")
    if len(features) != len(outcomes):
        raise DataFormatError("feature and outcome row counts differ")
    predictions = predict_class(model, features)
    return float(np.mean(predictions == outcomes))


BuildFn = Callable[[SubsetView, GmtConfig], Model]


def _default_build(view: SubsetView, cfg: GmtConfig) -> Model:
    return build_gmt(view, cfg)


def _model_stats(model: Model) -> tuple[int, int]:
    if isinstance(model, TreeEnsemble):
        return max(t.depth for t in model.trees), sum(t.n_leaves for t in model.trees)
    return model.depth, model.n_leaves


def run_cv(
    spec: BenchmarkSpec,
    dataset: Optional[DataSet] = None,
    build_fn: BuildFn = _default_build,
) -> BenchmarkReport:
    """Run one benchmark spec and report accuracy, timing and tree shape.

    ``build_fn`` is the injection point for timing baselines or user-supplied
    comparison models; it receives the training view and the model config.
    """
    schema = load_schema(spec.schema)
    if dataset is None:
        dataset = load_csv(spec.data, schema)
    cfg = spec.config
    if spec.n_trees > 1 and build_fn is _default_build:
        def build_fn(view, c):
            return build_ensemble_distinct_roots(view, c, spec.n_trees)

    folds: list[FoldResult] = []
    seed_accuracies: list[float] = []

    kind = spec.protocol.get("kind", "kfold")
    if kind == "train-test":
        test_X, test_y = load_rows(spec.protocol["test"], schema, require_target=True)
        begin = time.perf_counter()
        view = dataset.full_view()
        model = build_fn(view, cfg)
        train_ms = (time.perf_counter() - begin) * 1e3
        predictions = predict_class(model, test_X)
        accuracy = float(np.mean(predictions == test_y))
        depth, leaves = _model_stats(model)
        folds.append(
            FoldResult(
                seed=0,
                fold=0,
                train_ms=train_ms,
                accuracy=accuracy,
                depth=depth,
                n_leaves=leaves,
                test_rows=list(range(len(test_y))),
                predictions=[int(p) for p in predictions],
            )
        )
        seed_accuracies.append(accuracy)
    elif kind == "kfold":
        k = int(spec.protocol.get("k", 10))
        base_seed = int(spec.protocol.get("seed", 0))
        for rep in range(spec.repetitions):
            seed = base_seed + rep
            plan = kfold_indices(dataset.n, k, seed)
            correct = 0
            for fold in range(k):
                begin = time.perf_counter()
                train_view = make_subset(dataset, plan.train_mask(fold))
                model = build_fn(train_view, cfg)
                train_ms = (time.perf_counter() - begin) * 1e3
                test_rows = plan.test_rows(fold)
                predictions = predict_class(model, dataset.features[test_rows])
                truth = dataset.outcomes[test_rows]
                matches = int(np.sum(predictions == truth))
                correct += matches
                depth, leaves = _model_stats(model)
                folds.append(
                    FoldResult(
                        seed=seed,
                        fold=fold,
                        train_ms=train_ms,
                        accuracy=matches / len(test_rows),
                        depth=depth,
                        n_leaves=leaves,
                        test_rows=[int(r) for r in test_rows],
                        predictions=[int(p) for p in predictions],
                    )
                )
            seed_accuracies.append(correct / dataset.n)
    else:
        raise DataFormatError(f"{spec.name}: unknown protocol kind {kind!r}")

    accuracies = np.array(seed_accuracies)
    return BenchmarkReport(
        name=spec.name,
        n=dataset.n,
        d=dataset.d,
        n_classes=dataset.C,
        protocol=dict(spec.protocol),
        config=config_echo(cfg),
        repetitions=spec.repetitions,
        accuracy=float(accuracies.mean()),
        accuracy_std=float(accuracies.std()),
        seed_accuracies=[float(a) for a in accuracies],
        train_ms_mean=float(np.mean([f.train_ms for f in folds])),
        depth_mean=float(np.mean([f.depth for f in folds])),
        leaves_mean=float(np.mean([f.n_leaves for f in folds])),
        folds=folds,
    )


def format_table(reports: Sequence[BenchmarkReport], errors: Sequence[dict] = ()) -> str:
    """Fixed-width summary, best accuracy first."""
    header = (
        f"{'dataset':<12} {'n':>7} {'d':>4} {'accuracy':>9} {'+/-':>6} "
        f"{'ms/fold':>9} {'depth':>6} {'leaves':>7}"
    )
    lines = [header, "-" * len(header)]
    for rep in sorted(reports, key=lambda r: -r.accuracy):
        lines.append(
            f"{rep.name:<12} {rep.n:>7} {rep.d:>4} {rep.accuracy * 100:>8.1f}% "
            f"{rep.accuracy_std * 100:>5.1f}% {rep.train_ms_mean:>9.1f} "
            f"{rep.depth_mean:>6.1f} {rep.leaves_mean:>7.1f}"
        )
    for err in errors:
        lines.append(f"{err['name']:<12} ERROR: {err['error']}")
    return "\n".join(lines) + "\n"


def run_suite(
    specs: Sequence[Union[BenchmarkSpec, dict]],
    out_path: Union[str, Path, None] = None,
    base_dir: Union[str, Path, None] = None,
    build_fn: BuildFn = _default_build,
    include_predictions: bool = True,
) -> dict:
    """Run every spec, collecting per-dataset failures instead of aborting.

    Returns (and optionally writes) a machine-readable report with full
    configuration echo plus per-row predictions for audit.
    """
    reports: list[BenchmarkReport] = []
    errors: list[dict] = []
    for raw in specs:
        spec = raw if isinstance(raw, BenchmarkSpec) else BenchmarkSpec.from_dict(raw, base_dir)
        try:
            reports.append(run_cv(spec, build_fn=build_fn))
        except (GmtError, OSError) as exc:
            errors.append({"name": spec.name, "error": str(exc)})
    payload = {
        "results": [r.to_dict(include_predictions) for r in reports],
        "errors": errors,
        "table": format_table(reports, errors),
    }
    if out_path is not None:
        Path(out_path).write_text(json.dumps(payload, indent=2, sort_keys=True))
    return payload


def load_suite(path: Union[str, Path]) -> list[BenchmarkSpec]:
    """Read a suite config file; relative paths resolve against the file."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except OSError as exc:
        raise DataFormatError(f"cannot read suite {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"suite {path} is not valid JSON: {exc}") from exc
    return [BenchmarkSpec.from_dict(entry, path.parent) for entry in payload["benchmarks"]]
