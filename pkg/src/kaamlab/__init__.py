"""Interpretable tabular classification with spline-based additive networks."""

from .splines import (
    BSplineBasis,
    LearnableFunction,
    basis_derivative,
    basis_eval,
    fit_basis_from_data,
    func_eval,
    func_grad,
    sigmoid,
    silu,
)
from .network import (
    KANLayer,
    LogisticKAN,
    ModelConfig,
    build_logistic_kan,
    layer_forward,
)
from .additive import (
    KAAM,
    AverageContribution,
    LogitMatrix,
    as_single_layer_network,
    average_contribution,
    build_differential_logit_matrix,
    build_kaam,
    build_logit_matrix,
    kaam_logit,
    patient_logit_row,
)
from .training import (
    GridSearchSpace,
    LRBaseline,
    TrainConfig,
    class_weights,
    cross_entropy,
    fit_lr_baseline,
    grid_search,
    l1_penalty,
    lr_gradient,
    train,
)
from .symbolic import (
    SymbolicFormula,
    SymbolicTerm,
    distill,
    eval_formula,
    fit_symbolic,
    formula_probabilities,
    parse_formula,
    render_formula,
    round_formula,
)
from .interpret import (
    ImportanceVector,
    NeighborResult,
    PDPCurve,
    RadarData,
    feature_importance,
    nearest_patients,
    pdp,
    prediction_bars,
    radar,
)
from .data import (
    Dataset,
    FeatureSpec,
    Preprocessor,
    SchemaConfig,
    fit_preprocessor,
    load_csv,
    split,
    subsample,
)
from .metrics import (
    MetricReport,
    RankTable,
    bootstrap_ci,
    confusion_metrics,
    metric_report,
    mrr,
    roc_auc,
)
from .bundle import ModelBundle, load_model, save_model

__version__ = "0.1.0"
