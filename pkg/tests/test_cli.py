import json
from pathlib import Path

import numpy as np
import pytest

from kaamlab import load_model, metric_report
from kaamlab.cli import main
from kaamlab.datasets import synthetic_obesity_table, write_dataset


@pytest.fixture(scope="module")
def small_data(tmp_path_factory):
    out = tmp_path_factory.mktemp("clidata")
    frame, schema = synthetic_obesity_table(n=240, seed=9, binary=True)
    write_dataset(frame, schema, out / "ob.csv", out / "ob.schema.json")
    return str(out / "ob.csv"), str(out / "ob.schema.json")


def train_args(data, schema, out, **over):
    args = {
        "--data": data, "--schema": schema, "--model": "kaam",
        "--out": out, "--seed": "3", "--epochs": "30",
        "--grid": "3", "--degree": "2", "--subsample-n": "0",
    }
    args.update(over)
    flat = ["train"]
    for k, v in args.items():
        flat.extend([k, v])
    return flat


class TestTrain:
    def test_train_writes_bundle_metrics_manifest(self, small_data, tmp_path,
                                                  capsys):
        data, schema = small_data
        out = tmp_path / "m.bundle.json"
        rc = main(train_args(data, schema, str(out)))
        assert rc == 0
        assert out.exists()
        assert Path(str(out) + ".metrics.json").exists()
        assert Path(str(out) + ".manifest.json").exists()
        assert Path(str(out) + ".history.csv").exists()
        manifest = json.loads(Path(str(out) + ".manifest.json").read_text())
        assert manifest["seeds"] == {"seed": 3}
        assert "data_sha256" in manifest["inputs"]

    def test_same_seed_bitwise_identical_bundles(self, small_data, tmp_path):
        data, schema = small_data
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(train_args(data, schema, str(a))) == 0
        assert main(train_args(data, schema, str(b))) == 0
        assert a.read_bytes() == b.read_bytes()
        assert (Path(str(a) + ".metrics.json").read_bytes()
                == Path(str(b) + ".metrics.json").read_bytes())

    def test_different_seed_changes_bundle(self, small_data, tmp_path):
        data, schema = small_data
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(train_args(data, schema, str(a))) == 0
        assert main(train_args(data, schema, str(b), **{"--seed": "4"})) == 0
        assert a.read_bytes() != b.read_bytes()

    def test_lr_baseline_kind(self, small_data, tmp_path):
        data, schema = small_data
        out = tmp_path / "lr.json"
        rc = main(train_args(data, schema, str(out), **{"--model": "lr"}))
        assert rc == 0
        bundle, _ = load_model(out)
        assert bundle.kind == "lr"


class TestEvaluate:
    def test_matches_in_process_recomputation(self, small_data, tmp_path,
                                              capsys):
        data, schema = small_data
        out = tmp_path / "m.json"
        assert main(train_args(data, schema, str(out))) == 0
        capsys.readouterr()
        rc = main(["evaluate", "--model", str(out), "--seed", "11"])
        assert rc == 0
        printed = json.loads(capsys.readouterr().out)
        bundle, _ = load_model(out)
        ds = bundle.test_dataset()
        probs = np.atleast_2d(bundle.model.predict_proba(ds.X))
        report = metric_report(probs, ds.y, 2, seed=11)
        assert printed == report.to_dict()


class TestFormula:
    def test_decimals_rounding_in_output(self, heart_bundle_path, capsys):
        rc = main(["formula", "--model", heart_bundle_path, "--decimals", "3"])
        assert rc == 0
        text = capsys.readouterr().out.strip()
        assert text  # one-line logit expression
        for token in text.replace("(", " ").replace(")", " ").split():
            try:
                v = float(token)
            except ValueError:
                continue
            assert abs(v - round(v, 3)) < 1e-12

    def test_structured_file_written(self, heart_bundle_path, tmp_path):
        out = tmp_path / "formula.txt"
        rc = main(["formula", "--model", heart_bundle_path, "--decimals", "3",
                   "--out", str(out)])
        assert rc == 0
        assert out.exists()
        doc = json.loads(Path(str(out) + ".json").read_text())
        assert doc["mode"] == "binary-differential"


class TestExplain:
    def patient_file(self, bundle_path, tmp_path):
        bundle, _ = load_model(bundle_path)
        record = dict(bundle.train_table.records[0])
        path = tmp_path / "patient.json"
        path.write_text(json.dumps(record))
        return path

    def test_explain_document_sections(self, heart_bundle_path, tmp_path):
        patient = self.patient_file(heart_bundle_path, tmp_path)
        out = tmp_path / "explain.json"
        rc = main(["explain", "--model", heart_bundle_path, "--patient",
                   str(patient), "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert set(doc) >= {"radar", "pdp", "importance", "neighbors"}
        assert len(doc["neighbors"]["neighbors"]) == 5  # default k
        assert len(doc["pdp"]) == len(doc["importance"]["features"])

    def test_schema_mismatch_is_usage_error(self, heart_bundle_path, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"Age": 5}))
        rc = main(["explain", "--model", heart_bundle_path, "--patient",
                   str(path)])
        assert rc == 2

    def test_neighbors_command(self, heart_bundle_path, tmp_path, capsys):
        patient = self.patient_file(heart_bundle_path, tmp_path)
        rc = main(["neighbors", "--model", heart_bundle_path, "--patient",
                   str(patient), "--k", "3"])
        assert rc == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc["neighbors"]) == 3
        # the patient came from the training set, so it is its own neighbor
        # (recomputing its logit row goes through a different BLAS shape, so
        # allow accumulation jitter)
        assert doc["neighbors"][0]["distance"] < 1e-12


class TestUsageErrors:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_unknown_flag(self, small_data, capsys):
        data, schema = small_data
        assert main(["train", "--data", data, "--schema", schema,
                     "--model", "kaam", "--out", "x", "--frob", "1"]) == 2

    def test_missing_file(self, tmp_path, capsys):
        schema = tmp_path / "s.json"
        schema.write_text('{"target": "y"}')
        rc = main(train_args("/nonexistent.csv", str(schema),
                             str(tmp_path / "m.json")))
        assert rc == 2

    def test_missing_required_flag(self, capsys):
        assert main(["train", "--model", "kaam"]) == 2


class TestGridSearch:
    def test_restricted_search_runs(self, small_data, tmp_path, monkeypatch):
        import kaamlab.cli as cli_mod
        from kaamlab.training import GridSearchSpace

        # a 2-config space keeps the CLI path fast
        monkeypatch.setattr(
            GridSearchSpace, "for_additive",
            classmethod(lambda cls: cls(hidden_sizes=[()], grid_points=[3],
                                        degree=[1, 2], l1_lambda=[1e-3],
                                        class_balanced=[False],
                                        init_mode=["dense"])))
        data, schema = small_data
        out = tmp_path / "grid.json"
        rc = main(["grid-search", "--data", data, "--schema", schema,
                   "--model", "kaam", "--out", str(out), "--epochs", "15",
                   "--subsample-n", "120", "--seed", "2"])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert len(doc["records"]) == 2
        assert doc["best_config"] in [r["config"] for r in doc["records"]]
