"""HTTP JSON API over loaded model bundles.

The registry loads each bundle once, precomputing the logit matrices, the
average-contribution vectors, and the distilled formula; every endpoint is a
stateless read of those caches, so identical requests produce identical
bodies and concurrent traffic needs no locking. Each response carries the
model id and the bundle hash for auditability.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .additive import (
    average_contribution,
    build_differential_logit_matrix,
    build_logit_matrix,
    patient_logit_row,
)
from .bundle import load_model
from .errors import InvalidInputError
from .interpret import (
    feature_importance,
    nearest_patients,
    pdp,
    prediction_bars,
    radar,
)
from .symbolic import distill, formula_to_dict, render_formula, round_formula

MAX_COHORT_MARKERS = 200


@dataclass
class RegistryEntry:
    model_id: str
    bundle: object
    bundle_hash: str
    train_ds: object
    test_ds: object
    logit_matrices: dict   # class key (None = binary differential) -> LogitMatrix
    averages: dict         # class key -> AverageContribution
    formula: object | None

    @property
    def model(self):
        return self.bundle.model

    @property
    def preprocessor(self):
        return self.bundle.preprocessor

    @property
    def is_additive(self) -> bool:
        return self.bundle.kind == "kaam"

    @property
    def class_labels(self) -> list:
        return self.bundle.class_labels

    def class_keys(self):
        if len(self.class_labels) == 2:
            return [None]
        return list(range(len(self.class_labels)))

    def resolve_class(self, class_index):
        binary = len(self.class_labels) == 2
        if class_index is None:
            if binary:
                return None
            raise InvalidInputError("class is required for multiclass models")
        if class_index not in range(len(self.class_labels)):
            raise InvalidInputError(f"class {class_index} out of range")
        # binary models always explain through the differential decomposition
        return None if binary else class_index


class ModelRegistry:
    """Immutable-after-load map of model id to cached bundle state."""

    def __init__(self):
        self.entries = {}

    def load(self, path, model_id: str | None = None) -> str:
        bundle, bundle_hash = load_model(path)
        model_id = model_id or Path(path).stem
        train_ds = bundle.train_dataset()
        test_ds = bundle.test_dataset()
        matrices, averages = {}, {}
        formula = bundle.formula
        if bundle.kind == "kaam":
            keys = ([None] if len(bundle.class_labels) == 2
                    else list(range(len(bundle.class_labels))))
            for key in keys:
                m = (build_differential_logit_matrix(bundle.model, train_ds.X,
                                                     train_ds.row_ids)
                     if key is None
                     else build_logit_matrix(bundle.model, train_ds.X, key,
                                             train_ds.row_ids))
                matrices[key] = m
                averages[key] = average_contribution(m)
            if formula is None:
                formula = distill(bundle.model, train_ds.X)
        entry = RegistryEntry(model_id, bundle, bundle_hash, train_ds, test_ds,
                              matrices, averages, formula)
        self.entries[model_id] = entry
        return model_id

    def get(self, model_id: str) -> RegistryEntry:
        if model_id not in self.entries:
            raise KeyError(model_id)
        return self.entries[model_id]


# ---------------------------------------------------------------------------
# Payload builders (pure; the conformance tests call these directly)
# ---------------------------------------------------------------------------


def _stamp(entry: RegistryEntry, payload: dict) -> dict:
    return {"model_id": entry.model_id, "bundle_hash": entry.bundle_hash, **payload}


def _encode_patient(entry: RegistryEntry, covariates: dict) -> np.ndarray:
    record = entry.preprocessor.record_from_covariates(covariates)
    return entry.preprocessor.transform_record(record)


def _require_additive(entry: RegistryEntry):
    if not entry.is_additive:
        raise InvalidInputError(
            "explanation endpoints need an additive (kaam) bundle"
        )


def models_payload(registry: ModelRegistry) -> dict:
    out = []
    for entry in registry.entries.values():
        out.append({
            "id": entry.model_id,
            "kind": entry.bundle.kind,
            "bundle_hash": entry.bundle_hash,
            "classes": list(entry.class_labels),
            "features": entry.preprocessor.feature_summary(),
        })
    return {"models": out}


def predict_payload(entry: RegistryEntry, covariates: dict) -> dict:
    x = _encode_patient(entry, covariates)
    if entry.bundle.kind == "lr":
        p1 = float(entry.model.predict_proba_positive(x[None, :])[0])
        probs = [1.0 - p1, p1]
        logits = [0.0, float(np.log(max(p1, 1e-300)) - np.log(max(1 - p1, 1e-300)))]
    else:
        probs = [float(v) for v in entry.model.predict_proba(x)]
        logits = [float(v) for v in entry.model.forward_logits(x)]
    predicted = int(np.argmax(probs))
    return _stamp(entry, {
        "probabilities": probs,
        "logits": logits,
        "predicted_class": entry.class_labels[predicted],
        "predicted_index": predicted,
    })


def radar_payload(entry: RegistryEntry, covariates: dict, class_index=None,
                  include_neighbor: bool = False, k: int = 1) -> dict:
    _require_additive(entry)
    key = entry.resolve_class(class_index)
    x = _encode_patient(entry, covariates)
    data = radar(entry.model, entry.averages[key], x, key)
    if include_neighbor:
        query = patient_logit_row(entry.model, x, key)
        neigh = nearest_patients(entry.logit_matrices[key], query, k=max(1, k))
        row_pos = entry.train_ds.row_ids.index(neigh.ids[0])
        neighbor_x = entry.train_ds.X[row_pos]
        data.neighbor_axes = radar(entry.model, entry.averages[key], neighbor_x,
                                   key).axes
    return _stamp(entry, data.to_dict())


def _cohort_sample(X: np.ndarray) -> np.ndarray:
    if X.shape[0] <= MAX_COHORT_MARKERS:
        return X
    stride = np.linspace(0, X.shape[0] - 1, MAX_COHORT_MARKERS).astype(int)
    return X[stride]


def pdp_payload(entry: RegistryEntry, covariates: dict, class_index=None,
                features=None, k: int = 5) -> dict:
    _require_additive(entry)
    key = entry.resolve_class(class_index)
    x = _encode_patient(entry, covariates)
    names = entry.train_ds.feature_names
    if features is None:
        indices = list(range(len(names)))
    else:
        unknown = [f for f in features if f not in names]
        if unknown:
            raise InvalidInputError(f"unknown features: {unknown}")
        indices = [names.index(f) for f in features]
    query = patient_logit_row(entry.model, x, key)
    neigh = nearest_patients(entry.logit_matrices[key], query, k=k)
    rows = [entry.train_ds.row_ids.index(i) for i in neigh.ids]
    neighbor_x = entry.train_ds.X[rows]
    cohort = _cohort_sample(entry.train_ds.X)
    curves = [
        pdp(entry.model, j, key, patient=x, cohort=cohort,
            neighbors=neighbor_x).to_dict()
        for j in indices
    ]
    return _stamp(entry, {"class_index": key, "curves": curves})


def neighbors_payload(entry: RegistryEntry, covariates: dict, k: int = 5,
                      class_index=None) -> dict:
    _require_additive(entry)
    key = entry.resolve_class(class_index)
    x = _encode_patient(entry, covariates)
    query = patient_logit_row(entry.model, x, key)
    labels = [entry.train_ds.class_labels[c] for c in entry.train_ds.y]
    neigh = nearest_patients(entry.logit_matrices[key], query, k=k,
                             true_labels=labels, records=entry.train_ds.records)
    return _stamp(entry, neigh.to_dict())


def importance_payload(entry: RegistryEntry, class_index=None) -> dict:
    _require_additive(entry)
    key = entry.resolve_class(class_index)
    return _stamp(entry, feature_importance(entry.logit_matrices[key]).to_dict())


def formula_payload(entry: RegistryEntry, decimals: int | None = None) -> dict:
    _require_additive(entry)
    formula = entry.formula
    if decimals is not None:
        formula = round_formula(formula, decimals)
    return _stamp(entry, {
        "text": render_formula(formula),
        "structured": formula_to_dict(formula),
    })


def prediction_bars_payload(entry: RegistryEntry, threshold: float = 0.5) -> dict:
    if len(entry.class_labels) != 2:
        raise InvalidInputError("prediction bars need a binary model")
    bars = prediction_bars(entry.model, entry.test_ds.X, entry.test_ds.y, threshold)
    return _stamp(entry, bars.to_dict())


# ---------------------------------------------------------------------------
# FastAPI wiring
# ---------------------------------------------------------------------------


class PredictRequest(BaseModel):
    covariates: dict


class RadarRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    covariates: dict
    class_index: int | None = Field(default=None, alias="class")
    include_neighbor: bool = False
    k: int = 1


class PdpRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    covariates: dict
    class_index: int | None = Field(default=None, alias="class")
    features: list | None = None
    k: int = 5


class NeighborsRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)
    covariates: dict
    class_index: int | None = Field(default=None, alias="class")
    k: int = 5


def create_app(registry: ModelRegistry,
               default_threshold: float = 0.5) -> FastAPI:
    app = FastAPI(title="kaamlab service", version="1")
    # the web client is served as static files from anywhere
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        # malformed JSON is a 400; schema-level problems stay 422
        if any("json" in str(e.get("type", "")) for e in exc.errors()):
            return JSONResponse(status_code=400,
                                content={"detail": "malformed JSON body"})
        return JSONResponse(status_code=422, content={"detail": exc.errors()})

    def entry_or_404(model_id: str) -> RegistryEntry:
        try:
            return registry.get(model_id)
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"unknown model {model_id!r}")

    def run(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InvalidInputError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/models")
    def list_models():
        return models_payload(registry)

    @app.post("/models/{model_id}/predict")
    def predict(model_id: str, body: PredictRequest):
        return run(predict_payload, entry_or_404(model_id), body.covariates)

    @app.post("/models/{model_id}/explain/radar")
    def explain_radar(model_id: str, body: RadarRequest):
        return run(radar_payload, entry_or_404(model_id), body.covariates,
                   body.class_index, body.include_neighbor, body.k)

    @app.post("/models/{model_id}/explain/pdp")
    def explain_pdp(model_id: str, body: PdpRequest):
        return run(pdp_payload, entry_or_404(model_id), body.covariates,
                   body.class_index, body.features, body.k)

    @app.post("/models/{model_id}/neighbors")
    def neighbors(model_id: str, body: NeighborsRequest):
        return run(neighbors_payload, entry_or_404(model_id), body.covariates,
                   body.k, body.class_index)

    @app.get("/models/{model_id}/importance")
    def importance(model_id: str,
                   class_index: int | None = Query(None, alias="class")):
        return run(importance_payload, entry_or_404(model_id), class_index)

    @app.get("/models/{model_id}/formula")
    def formula(model_id: str, decimals: int | None = None):
        return run(formula_payload, entry_or_404(model_id), decimals)

    @app.get("/models/{model_id}/prediction-bars")
    def bars(model_id: str, threshold: float | None = None):
        return run(prediction_bars_payload, entry_or_404(model_id),
                   default_threshold if threshold is None else threshold)

    return app
