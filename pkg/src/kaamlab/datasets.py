"""Benchmark tables for the evaluation suites and the demo workflow.

The 569-row breast cancer table ships with scikit-learn and is used as-is.
The heart-risk and obesity cohorts are seeded synthetic replicas that follow
the public datasets' schemas, class proportions, and signal structure
(age/health-driven cardiovascular risk; obesity levels cut from
weight/height); they stand in where the original files are not available.
Any real CSV with a matching schema file drops in through the same loaders.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from .splines import sigmoid

HEART_TARGET = "HeartDiseaseorAttack"
OBESITY_TARGET = "NObeyesdad"
OBESITY_BIN_TARGET = "Obese"

_OBESITY_LEVELS = [
    ("Insufficient_Weight", 14.5, 18.3),
    ("Normal_Weight", 18.6, 24.8),
    ("Overweight_Level_I", 25.1, 27.3),
    ("Overweight_Level_II", 27.6, 29.7),
    ("Obesity_Type_I", 30.3, 34.8),
    ("Obesity_Type_II", 35.1, 39.8),
    ("Obesity_Type_III", 40.1, 47.0),
]
_OBESE_LEVELS = {"Obesity_Type_I", "Obesity_Type_II", "Obesity_Type_III"}


def breast_cancer_table():
    """The 569 x 30 diagnostic table; positive class 1 marks malignancy."""
    from sklearn.datasets import load_breast_cancer

    raw = load_breast_cancer()
    frame = pd.DataFrame(raw.data, columns=list(raw.feature_names))
    frame["diagnosis"] = (1 - raw.target).astype(int)  # sklearn codes benign as 1
    schema = {
        "target": "diagnosis",
        "positive_label": "1",
        "features": {name: "continuous" for name in raw.feature_names},
    }
    return frame, schema


def synthetic_heart_table(n: int = 20000, seed: int = 20150801):
    """Survey-style cardiovascular cohort with ~9.4% positive prevalence."""
    rng = np.random.default_rng(seed)
    age_probs = np.array([4, 5, 6, 7, 8, 9.5, 11, 12, 11.5, 10, 8, 5, 3])
    age = rng.choice(np.arange(1, 14), size=n, p=age_probs / age_probs.sum())
    sex = rng.binomial(1, 0.44, n)
    genhlth = np.clip(np.rint(1.8 + 0.12 * (age - 7) + 0.9 * rng.normal(size=n)),
                      1, 5).astype(int)
    bmi = np.clip(np.rint(rng.normal(28.3, 6.2, n)), 13, 70).astype(int)
    highbp = rng.binomial(1, sigmoid(-1.3 + 0.24 * (age - 7) + 0.35 * (genhlth - 3)
                                     + 0.06 * (bmi - 28)))
    highchol = rng.binomial(1, sigmoid(-0.9 + 0.18 * (age - 7) + 0.25 * (genhlth - 3)))
    cholcheck = rng.binomial(1, 0.96, n)
    smoker = rng.binomial(1, sigmoid(-0.25 + 0.25 * sex + 0.05 * (age - 7)))
    stroke = rng.binomial(1, sigmoid(-3.9 + 0.28 * (age - 7) + 0.55 * (genhlth - 3)))
    diabetes = rng.binomial(1, sigmoid(-2.4 + 0.1 * (age - 7) + 0.09 * (bmi - 28)
                                       + 0.4 * (genhlth - 3))) * 2
    physact = rng.binomial(1, sigmoid(1.2 - 0.35 * (genhlth - 3)))
    fruits = rng.binomial(1, 0.63, n)
    veggies = rng.binomial(1, 0.81, n)
    alcohol = rng.binomial(1, 0.056, n)
    anyhc = rng.binomial(1, 0.95, n)
    nodoc = rng.binomial(1, 0.084, n)
    menthlth = np.where(rng.random(n) < 0.69, 0,
                        np.clip(np.rint(np.exp(rng.normal(1.6, 1.0, n))), 1, 30))
    physhlth = np.where(rng.random(n) < 0.63 - 0.05 * (genhlth - 3), 0,
                        np.clip(np.rint(np.exp(rng.normal(1.5, 1.1, n)))
                                + 2 * (genhlth - 3), 0, 30))
    diffwalk = rng.binomial(1, sigmoid(-2.4 + 0.22 * (age - 7) + 0.75 * (genhlth - 3)))
    education = np.clip(np.rint(4.9 - 0.08 * (age - 7) + 1.0 * rng.normal(size=n)),
                        1, 6).astype(int)
    income = np.clip(np.rint(5.4 + 0.55 * (education - 5) + 1.7 * rng.normal(size=n)),
                     1, 8).astype(int)

    risk = (
        -10.05
        + 0.5025 * age
        + 0.72 * genhlth
        + 1.53 * stroke
        + 0.705 * highchol
        + 0.63 * highbp
        + 1.08 * sex
        + 0.495 * smoker
        + 0.57 * diffwalk
        + 0.255 * diabetes
        + 0.0225 * physhlth
        + 0.015 * (bmi - 28)
    )
    target = rng.binomial(1, sigmoid(risk))

    frame = pd.DataFrame({
        HEART_TARGET: target,
        "HighBP": highbp, "HighChol": highchol, "CholCheck": cholcheck,
        "BMI": bmi, "Smoker": smoker, "Stroke": stroke, "Diabetes": diabetes,
        "PhysActivity": physact, "Fruits": fruits, "Veggies": veggies,
        "HvyAlcoholConsump": alcohol, "AnyHealthcare": anyhc,
        "NoDocbcCost": nodoc, "GenHlth": genhlth,
        "MentHlth": menthlth.astype(int), "PhysHlth": physhlth.astype(int),
        "DiffWalk": diffwalk, "Sex": sex, "Age": age,
        "Education": education, "Income": income,
    })
    binary = ["HighBP", "HighChol", "CholCheck", "Smoker", "Stroke", "PhysActivity",
              "Fruits", "Veggies", "HvyAlcoholConsump", "AnyHealthcare",
              "NoDocbcCost", "DiffWalk", "Sex"]
    integer = ["BMI", "Diabetes", "GenHlth", "MentHlth", "PhysHlth", "Age",
               "Education", "Income"]
    schema = {
        "target": HEART_TARGET,
        "positive_label": "1",
        "features": {**{f: "binary" for f in binary},
                     **{f: "integer" for f in integer}},
    }
    return frame, schema


def synthetic_obesity_table(n: int = 2111, seed: int = 20190723,
                            binary: bool = False):
    """Lifestyle cohort whose obesity level is cut from weight/height.

    Mirrors how the public cohort was built: a few hundred base subjects with
    near-uniform levels, expanded by interpolating numeric traits between
    same-level neighbors (the bulk of the public file is oversampled the same
    way). Interpolation runs in (body-mass-index, height) space so the level
    rule stays exact for every generated row.
    """
    rng = np.random.default_rng(seed)
    n_base = max(60, int(round(0.23 * n)))
    level_base = rng.integers(0, len(_OBESITY_LEVELS), size=n_base)
    gender_base = np.where(rng.random(n_base) < 0.51, "Male", "Female")
    height_base = np.where(
        gender_base == "Male",
        rng.normal(1.70, 0.07, n_base),
        rng.normal(1.62, 0.06, n_base),
    )
    height_base = np.clip(height_base, 1.45, 1.98)
    bmi_base = np.array([
        rng.uniform(_OBESITY_LEVELS[i][1], _OBESITY_LEVELS[i][2])
        for i in level_base
    ])
    age_base = np.clip(rng.gamma(6.0, 4.0, n_base) + 14 + 0.6 * level_base, 14, 61)

    rows = list(range(n_base))
    parents = list(range(n_base))
    ts = [0.0] * n_base
    while len(rows) < n:
        i = int(rng.integers(n_base))
        same = np.flatnonzero(level_base == level_base[i])
        j = int(same[rng.integers(same.size)])
        rows.append(i)
        parents.append(j)
        ts.append(float(rng.random()))
    rows, parents, ts = (np.array(rows[:n]), np.array(parents[:n]),
                         np.array(ts[:n]))

    bmi = bmi_base[rows] + ts * (bmi_base[parents] - bmi_base[rows])
    height = height_base[rows] + ts * (height_base[parents] - height_base[rows])
    height = np.round(height, 2)
    age = np.rint(age_base[rows] + ts * (age_base[parents] - age_base[rows]))
    level_idx = level_base[rows]
    gender = gender_base[rows]
    weight = np.round(bmi * height ** 2, 1)
    # recompute the level from the recorded weight so the rule stays exact;
    # midpoints of the inter-level gaps absorb the rounding wobble
    final_bmi = weight / height ** 2
    cuts = [(hi + _OBESITY_LEVELS[k + 1][1]) / 2.0
            for k, (_, _, hi) in enumerate(_OBESITY_LEVELS[:-1])]
    labels = np.array([
        _OBESITY_LEVELS[int(np.searchsorted(cuts, v))][0] for v in final_bmi
    ])
    family = np.where(
        rng.random(n) < np.clip(0.35 + 0.09 * level_idx, 0, 0.95), "yes", "no")
    favc = np.where(rng.random(n) < np.clip(0.5 + 0.06 * level_idx, 0, 0.95),
                    "yes", "no")
    fcvc = np.round(np.clip(rng.normal(2.4, 0.5, n), 1, 3), 1)
    ncp = np.round(np.clip(rng.normal(2.7, 0.8, n), 1, 4), 1)
    caec = rng.choice(["no", "Sometimes", "Frequently", "Always"], size=n,
                      p=[0.05, 0.75, 0.15, 0.05])
    smoke = np.where(rng.random(n) < 0.021, "yes", "no")
    ch2o = np.round(np.clip(rng.normal(2.0, 0.6, n), 1, 3), 1)
    scc = np.where(rng.random(n) < 0.045, "yes", "no")
    faf = np.round(np.clip(rng.normal(1.0, 0.85, n) - 0.05 * level_idx, 0, 3), 1)
    tue = np.round(np.clip(rng.normal(0.65, 0.6, n), 0, 2), 1)
    calc = rng.choice(["no", "Sometimes", "Frequently", "Always"], size=n,
                      p=[0.30, 0.65, 0.04, 0.01])
    mtrans = rng.choice(
        ["Public_Transportation", "Automobile", "Walking", "Motorbike", "Bike"],
        size=n, p=[0.74, 0.21, 0.03, 0.01, 0.01])

    frame = pd.DataFrame({
        "Gender": gender, "Age": age.astype(int), "Height": height,
        "Weight": weight, "family_history_with_overweight": family,
        "FAVC": favc, "FCVC": fcvc, "NCP": ncp, "CAEC": caec, "SMOKE": smoke,
        "CH2O": ch2o, "SCC": scc, "FAF": faf, "TUE": tue, "CALC": calc,
        "MTRANS": mtrans,
    })
    schema_features = {
        "Gender": "categorical", "Age": "integer", "Height": "continuous",
        "Weight": "continuous", "family_history_with_overweight": "categorical",
        "FAVC": "categorical", "FCVC": "continuous", "NCP": "continuous",
        "CAEC": "categorical", "SMOKE": "categorical", "CH2O": "continuous",
        "SCC": "categorical", "FAF": "continuous", "TUE": "continuous",
        "CALC": "categorical", "MTRANS": "categorical",
    }
    if binary:
        frame[OBESITY_BIN_TARGET] = np.isin(labels, list(_OBESE_LEVELS)).astype(int)
        schema = {"target": OBESITY_BIN_TARGET, "positive_label": "1",
                  "features": schema_features}
    else:
        frame[OBESITY_TARGET] = labels
        schema = {"target": OBESITY_TARGET, "features": schema_features}
    return frame, schema


def write_dataset(frame: pd.DataFrame, schema: dict, csv_path, schema_path):
    frame.to_csv(csv_path, index=False)
    with open(schema_path, "w") as fh:
        json.dump(schema, fh, indent=2, sort_keys=True)


def materialize_all(out_dir):
    """Write every benchmark table and schema into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = {
        "breast_cancer": breast_cancer_table(),
        "heart": synthetic_heart_table(),
        "obesity": synthetic_obesity_table(binary=False),
        "obesity_bin": synthetic_obesity_table(binary=True),
    }
    for name, (frame, schema) in tables.items():
        write_dataset(frame, schema, out / f"{name}.csv", out / f"{name}.schema.json")
    return sorted(p.name for p in out.iterdir())


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "data"
    for name in materialize_all(target):
        print(name)
