"""Command-line workflow: train, grid-search, evaluate, formula, explain,
neighbors, serve.

Every run is seeded end to end and writes a manifest next to its outputs
(inputs with content hashes, seeds, package version) so artifacts can be
reproduced exactly. Outputs are machine-first JSON/CSV; plots are the web
client's job.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .additive import build_differential_logit_matrix, build_logit_matrix
from .bundle import ModelBundle, load_model, save_model
from .data import SchemaConfig, fit_preprocessor, load_csv, split, subsample
from .errors import InvalidInputError
from .interpret import feature_importance, nearest_patients, pdp, radar
from .additive import average_contribution, patient_logit_row
from .metrics import metric_report
from .network import ModelConfig
from .symbolic import distill, formula_to_dict, render_formula, round_formula
from .training import (
    GridSearchSpace,
    TrainConfig,
    build_model,
    fit_lr_baseline,
    grid_search,
    save_history_csv,
    train,
)

DEFAULT_SUBSAMPLE = 1000


def _file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_path, command: str, inputs: dict, seeds: dict,
                    outputs: list):
    manifest = {
        "command": command,
        "inputs": inputs,
        "seeds": seeds,
        "outputs": outputs,
        "package_version": __version__,
    }
    path = Path(str(out_path) + ".manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def _parse_hidden(text: str) -> tuple:
    text = (text or "").strip()
    if text in ("", "0", "none"):
        return ()
    return tuple(int(p) for p in text.split(",") if p.strip())


def _load_table(args):
    schema = SchemaConfig.from_json(args.schema)
    if getattr(args, "target", None):
        schema.target = args.target
    raw = load_csv(args.data, schema)
    n = args.subsample_n
    if n and raw.num_rows > n:
        raw = subsample(raw, n, seed=args.seed)
    return raw


def _split_encode(raw, args):
    train_raw, test_raw = split(raw, args.test_fraction, seed=args.seed,
                                stratify=True)
    pre = fit_preprocessor(train_raw)
    return train_raw, test_raw, pre


def _cmd_train(args) -> int:
    raw = _load_table(args)
    train_raw, test_raw, pre = _split_encode(raw, args)
    train_ds = pre.encode_dataset(train_raw)
    test_ds = pre.encode_dataset(test_raw)

    if args.model == "lr":
        if len(raw.class_labels) != 2:
            raise InvalidInputError("the lr baseline handles binary targets only")
        model = fit_lr_baseline(train_ds.X, train_ds.y,
                                class_balanced=args.balance)
        history = []
    else:
        config = ModelConfig(
            hidden_sizes=_parse_hidden(args.hidden), grid_points=args.grid,
            degree=args.degree, l1_lambda=args.l1, class_balanced=args.balance,
            init_mode=args.init,
        )
        model = build_model(args.model, train_ds.X, train_ds.feature_names,
                            train_ds.class_labels, config, seed=args.seed)
        tcfg = TrainConfig(epochs=args.epochs, learning_rate=args.lr_rate,
                           l1_lambda=args.l1, class_balanced=args.balance,
                           seed=args.seed)
        result = train(model, train_ds.X, train_ds.y, tcfg)
        history = result.history

    probs = np.atleast_2d(model.predict_proba(test_ds.X))
    report = metric_report(probs, test_ds.y, len(raw.class_labels), seed=args.seed)

    metadata = {
        "model_kind": args.model,
        "seed": args.seed,
        "test_fraction": args.test_fraction,
        "subsample_n": args.subsample_n,
        "epochs": args.epochs,
        "learning_rate": args.lr_rate,
        "data_sha256": _file_sha256(args.data),
    }
    bundle = ModelBundle(args.model, model, pre, train_raw, test_raw,
                         metadata=metadata)
    save_model(bundle, args.out)
    report.to_json(str(args.out) + ".metrics.json")
    if history:
        save_history_csv(history, str(args.out) + ".history.csv")
    _write_manifest(
        args.out, "train",
        inputs={"data": str(args.data), "data_sha256": metadata["data_sha256"],
                "schema": str(args.schema)},
        seeds={"seed": args.seed},
        outputs=[str(args.out), str(args.out) + ".metrics.json"],
    )
    print(f"trained {args.model} on {train_ds.num_rows} rows; "
          f"test accuracy {report.accuracy.point:.3f}, "
          f"auc {report.roc_auc.point:.3f}")
    return 0


def _cmd_grid_search(args) -> int:
    raw = _load_table(args)
    train_raw, _, pre = _split_encode(raw, args)
    ds = pre.encode_dataset(train_raw)
    space = (GridSearchSpace.for_additive() if args.model == "kaam"
             else GridSearchSpace())
    base = TrainConfig(epochs=args.epochs, learning_rate=args.lr_rate,
                       seed=args.seed, early_stop_patience=0)
    result = grid_search(space, ds.X, ds.y, ds.feature_names, ds.class_labels,
                         model_kind=args.model, folds=3, base_config=base)
    doc = {
        "best_config": result.best_config.to_dict(),
        "best_score": result.best_score,
        "records": [
            {"config": cfg.to_dict(), "fold_f1": scores, "mean_f1": mean}
            for cfg, scores, mean in result.records
        ],
    }
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
    _write_manifest(args.out, "grid-search",
                    inputs={"data": str(args.data),
                            "data_sha256": _file_sha256(args.data)},
                    seeds={"seed": args.seed}, outputs=[str(args.out)])
    print(f"searched {len(result.records)} configs; "
          f"best mean F1 {result.best_score:.3f}")
    return 0


def _cmd_evaluate(args) -> int:
    bundle, _ = load_model(args.model)
    if args.data:
        schema = SchemaConfig(
            target=bundle.train_table.target_name,
            features={s.name: s.kind for s in bundle.train_table.specs},
            positive_label=(bundle.class_labels[1]
                            if len(bundle.class_labels) == 2 else None),
        )
        raw = load_csv(args.data, schema)
        if list(raw.class_labels) != bundle.class_labels:
            raise InvalidInputError(
                f"labels {raw.class_labels} do not match the bundle's "
                f"{bundle.class_labels}"
            )
        ds = bundle.preprocessor.encode_dataset(raw)
    else:
        ds = bundle.test_dataset()
    probs = np.atleast_2d(bundle.model.predict_proba(ds.X))
    report = metric_report(probs, ds.y, len(bundle.class_labels), seed=args.seed)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
        _write_manifest(args.out, "evaluate",
                        inputs={"model": str(args.model)},
                        seeds={"seed": args.seed}, outputs=[str(args.out)])
    print(text)
    return 0


def _require_kaam(bundle):
    if bundle.kind != "kaam":
        raise InvalidInputError(
            "this command needs an additive (kaam) bundle; "
            f"got {bundle.kind!r}"
        )


def _bundle_formula(bundle):
    if bundle.formula is not None:
        return bundle.formula
    _require_kaam(bundle)
    return distill(bundle.model, bundle.train_dataset().X)


def _cmd_formula(args) -> int:
    bundle, _ = load_model(args.model)
    formula = _bundle_formula(bundle)
    if args.decimals is not None:
        formula = round_formula(formula, args.decimals)
    text = render_formula(formula)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
        with open(str(args.out) + ".json", "w") as fh:
            json.dump(formula_to_dict(formula), fh, indent=2, sort_keys=True)
        _write_manifest(args.out, "formula", inputs={"model": str(args.model)},
                        seeds={}, outputs=[str(args.out)])
    return 0


def _load_patient(bundle, path) -> np.ndarray:
    with open(path) as fh:
        covariates = json.load(fh)
    record = bundle.preprocessor.record_from_covariates(covariates)
    return bundle.preprocessor.transform_record(record)


def _class_key(bundle, class_index):
    binary = len(bundle.class_labels) == 2
    if class_index is None:
        if binary:
            return None
        raise InvalidInputError("--class is required for multiclass models")
    return class_index


def _cmd_explain(args) -> int:
    bundle, _ = load_model(args.model)
    _require_kaam(bundle)
    x = _load_patient(bundle, args.patient)
    key = _class_key(bundle, args.class_index)
    model = bundle.model
    train_ds = bundle.train_dataset()
    matrix = (build_differential_logit_matrix(model, train_ds.X, train_ds.row_ids)
              if key is None
              else build_logit_matrix(model, train_ds.X, key, train_ds.row_ids))
    delta = average_contribution(matrix)
    query = patient_logit_row(model, x, key)
    labels = [train_ds.class_labels[c] for c in train_ds.y]
    neigh = nearest_patients(matrix, query, k=args.k, true_labels=labels,
                             records=train_ds.records)
    neighbor_rows = train_ds.X[[train_ds.row_ids.index(i) for i in neigh.ids]]
    doc = {
        "class_index": key,
        "radar": radar(model, delta, x, key).to_dict(),
        "pdp": [
            pdp(model, j, key, patient=x, cohort=train_ds.X,
                neighbors=neighbor_rows).to_dict()
            for j in range(model.feature_count)
        ],
        "importance": feature_importance(matrix).to_dict(),
        "neighbors": neigh.to_dict(),
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
        _write_manifest(args.out, "explain",
                        inputs={"model": str(args.model),
                                "patient": str(args.patient)},
                        seeds={}, outputs=[str(args.out)])
    else:
        print(text)
    return 0


def _cmd_neighbors(args) -> int:
    bundle, _ = load_model(args.model)
    _require_kaam(bundle)
    x = _load_patient(bundle, args.patient)
    key = _class_key(bundle, args.class_index)
    train_ds = bundle.train_dataset()
    matrix = (build_differential_logit_matrix(bundle.model, train_ds.X,
                                              train_ds.row_ids)
              if key is None
              else build_logit_matrix(bundle.model, train_ds.X, key,
                                      train_ds.row_ids))
    query = patient_logit_row(bundle.model, x, key)
    labels = [train_ds.class_labels[c] for c in train_ds.y]
    neigh = nearest_patients(matrix, query, k=args.k, true_labels=labels,
                             records=train_ds.records)
    text = json.dumps(neigh.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ModelRegistry, create_app

    registry = ModelRegistry()
    for path in args.bundles:
        model_id = registry.load(path)
        print(f"loaded bundle {model_id} from {path}")
    uvicorn.run(create_app(registry, default_threshold=args.threshold),
                host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kaamlab",
        description="Train, explain, and serve interpretable spline-based "
                    "tabular classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_flags(p):
        p.add_argument("--data", required=True, help="CSV file with a header row")
        p.add_argument("--schema", required=True, help="schema config JSON")
        p.add_argument("--target", help="override the schema's target column")
        p.add_argument("--subsample-n", type=int, default=DEFAULT_SUBSAMPLE,
                       help="cap on rows (0 disables; default 1000)")
        p.add_argument("--test-fraction", type=float, default=0.2)

    def add_model_flags(p):
        p.add_argument("--hidden", default="", help="comma-separated hidden sizes")
        p.add_argument("--grid", type=int, default=5, help="spline grid intervals")
        p.add_argument("--degree", type=int, default=3, help="spline degree")
        p.add_argument("--l1", type=float, default=0.0)
        p.add_argument("--balance", action=argparse.BooleanOptionalAction,
                       default=False, help="inverse-frequency class weighting")
        p.add_argument("--init", choices=["sparse", "dense"], default="dense")
        p.add_argument("--epochs", type=int, default=500)
        p.add_argument("--lr-rate", type=float, default=1e-2)

    p_train = sub.add_parser("train", help="train a model and save a bundle")
    add_data_flags(p_train)
    add_model_flags(p_train)
    p_train.add_argument("--model", choices=["kaam", "logistic-kan", "lr"],
                         required=True)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--out", required=True, help="bundle output path")
    p_train.set_defaults(fn=_cmd_train)

    p_grid = sub.add_parser("grid-search", help="exhaustive hyperparameter search")
    add_data_flags(p_grid)
    p_grid.add_argument("--model", choices=["kaam", "logistic-kan"], required=True)
    p_grid.add_argument("--epochs", type=int, default=150)
    p_grid.add_argument("--lr-rate", type=float, default=1e-2)
    p_grid.add_argument("--seed", type=int, default=0)
    p_grid.add_argument("--out", required=True, help="results JSON path")
    p_grid.set_defaults(fn=_cmd_grid_search)

    p_eval = sub.add_parser("evaluate", help="score a bundle on test data")
    p_eval.add_argument("--model", required=True, help="bundle path")
    p_eval.add_argument("--data", help="CSV to score (defaults to the bundle's "
                                       "embedded test rows)")
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out")
    p_eval.set_defaults(fn=_cmd_evaluate)

    p_formula = sub.add_parser("formula", help="distill and print the formula")
    p_formula.add_argument("--model", required=True, help="bundle path")
    p_formula.add_argument("--decimals", type=int)
    p_formula.add_argument("--out")
    p_formula.set_defaults(fn=_cmd_formula)

    p_explain = sub.add_parser("explain",
                               help="radar, dependence curves, importance, and "
                                    "neighbors for one patient")
    p_explain.add_argument("--model", required=True, help="bundle path")
    p_explain.add_argument("--patient", required=True,
                           help="JSON file of raw covariates")
    p_explain.add_argument("--class", dest="class_index", type=int)
    p_explain.add_argument("--k", type=int, default=5)
    p_explain.add_argument("--out")
    p_explain.set_defaults(fn=_cmd_explain)

    p_nb = sub.add_parser("neighbors", help="nearest patients in logit space")
    p_nb.add_argument("--model", required=True, help="bundle path")
    p_nb.add_argument("--patient", required=True)
    p_nb.add_argument("--class", dest="class_index", type=int)
    p_nb.add_argument("--k", type=int, default=5)
    p_nb.add_argument("--out")
    p_nb.set_defaults(fn=_cmd_neighbors)

    p_serve = sub.add_parser("serve", help="HTTP JSON API over model bundles")
    p_serve.add_argument("bundles", nargs="+", help="bundle paths to load")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--threshold", type=float, default=0.5)
    p_serve.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (FileNotFoundError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
