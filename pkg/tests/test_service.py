import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from kaamlab import load_model
from kaamlab.service import (
    ModelRegistry,
    create_app,
    formula_payload,
    importance_payload,
    models_payload,
    neighbors_payload,
    pdp_payload,
    prediction_bars_payload,
    predict_payload,
    radar_payload,
)


@pytest.fixture(scope="module")
def registry(heart_bundle_path):
    reg = ModelRegistry()
    reg.load(heart_bundle_path, model_id="heart")
    return reg


@pytest.fixture(scope="module")
def client(registry):
    return TestClient(create_app(registry))


@pytest.fixture(scope="module")
def patients(registry):
    entry = registry.get("heart")
    rng = np.random.default_rng(99)
    records = entry.bundle.train_table.records
    picks = rng.choice(len(records), size=50, replace=False)
    return [dict(records[i]) for i in picks]


def canonical(payload):
    return json.dumps(payload, sort_keys=True)


class TestEndpointConformance:
    """Every endpoint body must equal the in-process payload serialization."""

    def test_models(self, client, registry):
        assert canonical(client.get("/models").json()) == canonical(
            models_payload(registry))

    def test_predict(self, client, registry, patients):
        entry = registry.get("heart")
        for cov in patients:
            body = client.post("/models/heart/predict",
                               json={"covariates": cov}).json()
            assert canonical(body) == canonical(predict_payload(entry, cov))

    def test_radar(self, client, registry, patients):
        entry = registry.get("heart")
        for cov in patients:
            body = client.post("/models/heart/explain/radar",
                               json={"covariates": cov}).json()
            assert canonical(body) == canonical(radar_payload(entry, cov))

    def test_radar_with_neighbor_polygon(self, client, registry, patients):
        entry = registry.get("heart")
        cov = patients[0]
        body = client.post(
            "/models/heart/explain/radar",
            json={"covariates": cov, "include_neighbor": True}).json()
        expected = radar_payload(entry, cov, include_neighbor=True)
        assert canonical(body) == canonical(expected)
        assert body["neighbor_axes"] is not None

    def test_pdp(self, client, registry, patients):
        entry = registry.get("heart")
        features = entry.train_ds.feature_names[:3]
        for cov in patients:
            body = client.post(
                "/models/heart/explain/pdp",
                json={"covariates": cov, "features": features}).json()
            expected = pdp_payload(entry, cov, features=features)
            assert canonical(body) == canonical(expected)

    def test_neighbors(self, client, registry, patients):
        entry = registry.get("heart")
        for cov in patients:
            body = client.post("/models/heart/neighbors",
                               json={"covariates": cov, "k": 5}).json()
            assert canonical(body) == canonical(neighbors_payload(entry, cov, 5))

    def test_importance(self, client, registry):
        entry = registry.get("heart")
        body = client.get("/models/heart/importance").json()
        assert canonical(body) == canonical(importance_payload(entry))

    def test_formula(self, client, registry):
        entry = registry.get("heart")
        body = client.get("/models/heart/formula?decimals=3").json()
        assert canonical(body) == canonical(formula_payload(entry, 3))

    def test_prediction_bars(self, client, registry):
        entry = registry.get("heart")
        body = client.get("/models/heart/prediction-bars?threshold=0.4").json()
        assert canonical(body) == canonical(
            prediction_bars_payload(entry, 0.4))


class TestContracts:
    def test_probabilities_sum_to_one(self, client, patients):
        body = client.post("/models/heart/predict",
                           json={"covariates": patients[0]}).json()
        assert sum(body["probabilities"]) == pytest.approx(1.0, abs=1e-9)

    def test_identical_requests_identical_bytes(self, client, patients):
        req = {"covariates": patients[1]}
        a = client.post("/models/heart/explain/radar", json=req)
        b = client.post("/models/heart/explain/radar", json=req)
        assert a.content == b.content

    def test_every_response_carries_id_and_hash(self, client, registry,
                                                patients):
        entry = registry.get("heart")
        bodies = [
            client.post("/models/heart/predict",
                        json={"covariates": patients[0]}).json(),
            client.get("/models/heart/importance").json(),
            client.get("/models/heart/formula").json(),
            client.get("/models/heart/prediction-bars").json(),
        ]
        for body in bodies:
            assert body["model_id"] == "heart"
            assert body["bundle_hash"] == entry.bundle_hash

    def test_unknown_model_404(self, client):
        assert client.get("/models/nope/importance").status_code == 404
        r = client.post("/models/nope/predict", json={"covariates": {}})
        assert r.status_code == 404

    def test_invalid_covariates_422(self, client, patients):
        r = client.post("/models/heart/predict",
                        json={"covariates": {"Age": 5}})
        assert r.status_code == 422
        assert "missing features" in json.dumps(r.json())
        bad = dict(patients[0])
        bad["Age"] = "not-a-number"
        r = client.post("/models/heart/predict", json={"covariates": bad})
        assert r.status_code == 422

    def test_malformed_json_400(self, client):
        r = client.post("/models/heart/predict",
                        content=b"{not json",
                        headers={"content-type": "application/json"})
        assert r.status_code == 400

    def test_missing_body_field_422(self, client):
        r = client.post("/models/heart/predict", json={"wrong": 1})
        assert r.status_code == 422

    def test_models_listing_shape(self, client):
        body = client.get("/models").json()
        model = body["models"][0]
        assert model["id"] == "heart"
        assert model["classes"] == ["0", "1"]
        kinds = {f["kind"] for f in model["features"]}
        assert kinds <= {"binary", "categorical", "integer", "continuous"}
        numeric = [f for f in model["features"] if f["kind"] != "categorical"]
        assert all("min" in f and "max" in f for f in numeric)

    def test_registry_caches_immutable_after_load(self, registry,
                                                  heart_bundle_path):
        entry = registry.get("heart")
        before = entry.logit_matrices[None].values.copy()
        # a second load creates a fresh entry without touching the first
        reg2 = ModelRegistry()
        reg2.load(heart_bundle_path, model_id="heart2")
        np.testing.assert_array_equal(entry.logit_matrices[None].values, before)

    def test_class_on_binary_maps_to_differential(self, client, registry,
                                                  patients):
        entry = registry.get("heart")
        a = client.post("/models/heart/explain/radar",
                        json={"covariates": patients[2], "class": 1}).json()
        b = radar_payload(entry, patients[2], class_index=None)
        assert canonical(a) == canonical(b)
