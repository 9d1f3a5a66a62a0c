"""Build (once) the heart bundle the end-to-end client test serves."""

import sys
from pathlib import Path

from kaamlab import distill, load_model, save_model
from kaamlab.cli import main
from kaamlab.datasets import synthetic_heart_table, write_dataset


def build(bundle_path: Path) -> None:
    if bundle_path.exists():
        return
    bundle_path.parent.mkdir(parents=True, exist_ok=True)
    frame, schema = synthetic_heart_table(n=1400, seed=5)
    csv = bundle_path.parent / "heart.csv"
    sch = bundle_path.parent / "heart.schema.json"
    write_dataset(frame, schema, csv, sch)
    rc = main([
        "train", "--data", str(csv), "--schema", str(sch), "--model", "kaam",
        "--out", str(bundle_path), "--seed", "7", "--epochs", "150",
        "--balance", "--subsample-n", "700", "--grid", "3", "--degree", "3",
    ])
    if rc != 0:
        raise SystemExit(rc)
    bundle, _ = load_model(bundle_path)
    bundle.formula = distill(bundle.model, bundle.train_dataset().X,
                             prune_threshold=0.05)
    save_model(bundle, bundle_path)


if __name__ == "__main__":
    build(Path(sys.argv[1]))
    print(f"fixture ready: {sys.argv[1]}")
