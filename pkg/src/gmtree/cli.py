"""Command-line surface: train, predict, eval, bench, export, importance.

Exit codes are a stable scripting contract: 0 success, 1 usage error,
2 data error, 3 schema/model mismatch. Probabilities print with six
significant digits; full precision lives only in structured model files.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .data import encode_row, iter_csv_records, load_csv, load_rows, load_schema
from .errors import DataFormatError, GmtError, SchemaMismatchError
from .evaluate import BenchmarkSpec, config_from_dict, evaluate_accuracy, load_suite, run_cv, run_suite
from .partition import dimension_importance
from .tree import (
    BayesianTree,
    TreeEnsemble,
    build_ensemble_distinct_roots,
    build_gmt,
    decision_path,
    export_tree,
    model_from_json,
    model_to_json,
    predict_proba,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_MISMATCH = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the CLI contract says 1
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _add_model_flags(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--alpha",
        type=float,
        action="append",
        metavar="A",
        help="prior pseudo-count, repeat once per class (default: 10 per class)",
    )
    parser.add_argument("--g", type=float, default=0.99, help="split-continuation base (default 0.99)")
    parser.add_argument(
        "--depth-independent-prior",
        action="store_true",
        help="pin the prior exponent at 1 instead of growing with depth",
    )
    parser.add_argument("--delta", type=float, default=0.0, help="smoothing proportion (default 0)")
    parser.add_argument("--max-depth", type=int, default=None, help="optional hard depth cap")


def _config_from_args(args):
    return config_from_dict(
        {
            "alpha": args.alpha,
            "g": args.g,
            "depth_dependent": not args.depth_independent_prior,
            "delta": args.delta,
            "max_depth": args.max_depth,
        }
    )


def _write_atomic(path: str, text: str):
    # never leave a partial model file behind
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_model(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read model {path}: {exc}") from exc
    return model_from_json(text)


def _model_digest(model) -> str | None:
    tree = model if isinstance(model, BayesianTree) else model.trees[0]
    return tree.schema_digest


def _check_schema(model, schema):
    digest = _model_digest(model)
    if digest is not None and digest != schema.digest():
        raise SchemaMismatchError(
            "model was trained under a different schema (digest mismatch); refusing to predict"
        )


def _out_stream(args):
    if getattr(args, "out", None):
        return open(args.out, "w")
    return sys.stdout


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_train(args) -> int:
    schema = load_schema(args.schema)
    dataset = load_csv(args.data, schema)
    cfg = _config_from_args(args)
    if args.trees > 1:
        model = build_ensemble_distinct_roots(dataset, cfg, args.trees)
        trees = model.trees
        print(f"trained ensemble of {len(trees)} trees on n={dataset.n} d={dataset.d} C={dataset.C}")
        for i, (tree, w) in enumerate(zip(trees, model.weights)):
            print(
                f"  tree {i}: depth={tree.depth} leaves={tree.n_leaves} "
                f"log_prob={tree.log_prob:.6f} weight={w:.6g}"
            )
    else:
        model = build_gmt(dataset, cfg)
        print(
            f"trained tree on n={dataset.n} d={dataset.d} C={dataset.C}: "
            f"depth={model.depth} leaves={model.n_leaves} log_prob={model.log_prob:.6f}"
        )
    _write_atomic(args.out, model_to_json(model))
    print(f"model written to {args.out}")
    return EXIT_OK


def _cmd_predict(args) -> int:
    schema = load_schema(args.schema)
    model = _load_model(args.model)
    _check_schema(model, schema)
    labels = schema.class_labels
    stream = _out_stream(args)
    close = stream is not sys.stdout
    explain_tree = model if isinstance(model, BayesianTree) else model.trees[int(np.argmax(model.weights))]
    try:
        for lineno, row in iter_csv_records(args.data, schema):
            try:
                encoded, _ = encode_row(row, schema, require_target=False, context=f"row {lineno}")
            except DataFormatError as exc:
                stream.write(f"row {lineno}: error: {exc}\n")
                continue
            x = np.asarray(encoded)
            proba = predict_proba(model, x)
            label = labels[int(np.argmax(proba))]
            fields = [label] + [f"{p:.6g}" for p in proba]
            if args.explain:
                path = "; ".join(decision_path(explain_tree, x))
                fields.append(f"path: {path}" if path else "path: (root leaf)")
            stream.write("\t".join(fields) + "\n")
    finally:
        if close:
            stream.close()
    return EXIT_OK


def _cmd_eval(args) -> int:
    schema = load_schema(args.schema)
    if args.model:
        model = _load_model(args.model)
        _check_schema(model, schema)
        X, y = load_rows(args.data, schema, require_target=True)
        accuracy = evaluate_accuracy(model, X, y)
        print(f"accuracy: {accuracy:.6g} on {len(y)} rows")
        return EXIT_OK
    # no fixed model: cross-validate the configuration on the dataset
    spec = BenchmarkSpec(
        name=Path(args.data).stem,
        data=args.data,
        schema=args.schema,
        protocol={"kind": "kfold", "k": args.k, "seed": args.seed},
        config=_config_from_args(args),
        n_trees=args.trees,
    )
    report = run_cv(spec)
    print(f"{args.k}-fold CV (shuffle seed {args.seed}):")
    print(
        f"accuracy: {report.accuracy:.6g}  mean train ms/fold: {report.train_ms_mean:.3f}  "
        f"mean depth: {report.depth_mean:.1f}  mean leaves: {report.leaves_mean:.1f}"
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    specs = load_suite(args.suite)
    payload = run_suite(specs, out_path=args.out, include_predictions=not args.no_predictions)
    sys.stdout.write(payload["table"])
    if args.out:
        print(f"report written to {args.out}")
    return EXIT_OK


def _cmd_export(args) -> int:
    model = _load_model(args.model)
    if isinstance(model, TreeEnsemble):
        if args.format != "structured":
            raise DataFormatError("text/graph exports apply to single trees; this file holds an ensemble")
        text = model_to_json(model)
    else:
        text = export_tree(model, args.format)
    stream = _out_stream(args)
    stream.write(text)
    if stream is not sys.stdout:
        stream.close()
        print(f"export written to {args.out}")
    return EXIT_OK


def _cmd_importance(args) -> int:
    schema = load_schema(args.schema)
    dataset = load_csv(args.data, schema)
    cfg = _config_from_args(args)
    prior = cfg.resolve_prior(dataset.C)
    masses = dimension_importance(dataset, prior, cfg.prior_cfg, depth=0)
    sources = schema.source_columns()
    by_column: dict[str, float] = {}
    for dim, source in enumerate(sources):
        by_column[source] = by_column.get(source, 0.0) + float(masses[dim + 1])
    width = max(len("(no split)"), *(len(c) for c in by_column))
    print(f"{'column':<{width}}  mass")
    print(f"{'(no split)':<{width}}  {masses[0]:.6g}")
    for column, mass in sorted(by_column.items(), key=lambda kv: -kv[1]):
        print(f"{column:<{width}}  {mass:.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gmt", description="Greedy-modal Bayesian decision trees")
    parser.add_argument("--version", action="version", version=f"gmt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="fit a model and write its structured export")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trees", type=int, default=1, help="ensemble size (distinct roots)")
    _add_model_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="classify rows with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out")
    p.add_argument(
        "--explain",
        action="store_true",
        help="append the decision path (highest-weight tree for ensembles)",
    )
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="accuracy of a model file, or k-fold CV of a config")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--model", help="fixed model to score; omit to cross-validate")
    p.add_argument("--k", type=int, default=10, help="fold count for CV mode")
    p.add_argument("--seed", type=int, default=0, help="fold shuffle seed (echoed in output)")
    p.add_argument("--trees", type=int, default=1)
    _add_model_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", help="run a benchmark suite config")
    p.add_argument("--suite", required=True)
    p.add_argument("--out", help="write the machine-readable report here")
    p.add_argument("--no-predictions", action="store_true", help="drop per-row predictions from the report")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("export", help="re-export a saved model as text/structured/graph")
    p.add_argument("--model", required=True)
    p.add_argument("--format", choices=("text", "structured", "graph"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("importance", help="per-column posterior split mass at the root")
    p.add_argument("--data", required=True)
    p.add_argument("--schema", required=True)
    _add_model_flags(p)
    p.set_defaults(func=_cmd_importance)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SchemaMismatchError as exc:
        print(f"gmt {args.command}: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (GmtError, OSError, ValueError) as exc:
        print(f"gmt {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
