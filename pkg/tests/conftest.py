import numpy as np
import pytest

from kaamlab import ModelConfig, build_kaam, build_logistic_kan


def random_learnable_function(rng, degree=3, grid=5, lo=-1.0, hi=1.0):
    from kaamlab import BSplineBasis, LearnableFunction

    basis = BSplineBasis(degree=degree, interval_count=grid,
                         domain_min=lo, domain_max=hi)
    return LearnableFunction(
        basis=basis,
        coefficients=rng.normal(size=basis.num_basis),
        base_weight=float(rng.normal()),
        spline_weight=float(rng.normal()),
    )


def random_network(rng, in_dim=3, hidden=(4,), classes=2, degree=3, grid=3,
                   scale=1.0):
    X = rng.normal(size=(50, in_dim)) * scale
    cfg = ModelConfig(hidden_sizes=hidden, grid_points=grid, degree=degree,
                      init_mode="dense")
    net = build_logistic_kan(X, [f"f{i}" for i in range(in_dim)],
                             [str(c) for c in range(classes)], cfg,
                             seed=int(rng.integers(1 << 31)))
    # spread the parameters so gradients are not near the init's small scale
    for layer in net.layers:
        layer.coefficients += rng.normal(scale=0.5, size=layer.coefficients.shape)
        layer.base_weight += rng.normal(scale=0.3, size=layer.base_weight.shape)
        layer.spline_weight += rng.normal(scale=0.3, size=layer.spline_weight.shape)
    return net, X


def random_kaam(rng, features=4, classes=2, degree=3, grid=4):
    X = rng.normal(size=(60, features))
    cfg = ModelConfig(hidden_sizes=(), grid_points=grid, degree=degree,
                      init_mode="dense")
    model = build_kaam(X, [f"f{i}" for i in range(features)],
                       [str(c) for c in range(classes)], cfg,
                       seed=int(rng.integers(1 << 31)))
    model.layer.coefficients += rng.normal(scale=0.6,
                                           size=model.layer.coefficients.shape)
    model.layer.base_weight += rng.normal(scale=0.3,
                                          size=model.layer.base_weight.shape)
    model.bias += rng.normal(scale=0.5, size=model.bias.shape)
    return model, X


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def heart_files(tmp_path_factory):
    from kaamlab.datasets import synthetic_heart_table, write_dataset

    out = tmp_path_factory.mktemp("heartdata")
    frame, schema = synthetic_heart_table(n=1400, seed=5)
    write_dataset(frame, schema, out / "heart.csv", out / "heart.schema.json")
    return str(out / "heart.csv"), str(out / "heart.schema.json")


@pytest.fixture(scope="session")
def heart_bundle_path(heart_files, tmp_path_factory):
    """A trained additive heart bundle with the distilled formula embedded."""
    from kaamlab import distill, load_model, save_model
    from kaamlab.cli import main

    csv_path, schema_path = heart_files
    out = tmp_path_factory.mktemp("heartbundle") / "heart.bundle.json"
    rc = main([
        "train", "--data", csv_path, "--schema", schema_path,
        "--model", "kaam", "--out", str(out), "--seed", "7",
        "--epochs", "150", "--balance", "--subsample-n", "700",
        "--grid", "3", "--degree", "3",
    ])
    assert rc == 0
    bundle, _ = load_model(out)
    bundle.formula = distill(bundle.model, bundle.train_dataset().X,
                             prune_threshold=0.05)
    save_model(bundle, out)
    return str(out)
