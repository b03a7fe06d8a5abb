"""Greedy-modal Bayesian decision trees.

Classification trees grown by repeatedly taking the highest-posterior
partition of each region under a Dirichlet-multinomial model, with a
depth-dependent prior over partitions standing in for pruning. Includes
prediction, smoothing, distinct-root ensembles, explainable exports, a
cross-validation benchmark harness and a CLI (``gmt``).
"""

__version__ = "0.1.0"

from .data import (
    DataSet,
    FoldPlan,
    SchemaSpec,
    SubsetView,
    decode_categories,
    kfold_indices,
    load_csv,
    load_rows,
    load_schema,
    make_subset,
)
from .errors import DataFormatError, GmtError, SchemaMismatchError
from .evaluate import (
    BenchmarkReport,
    BenchmarkSpec,
    evaluate_accuracy,
    format_table,
    load_suite,
    run_cv,
    run_suite,
)
from .partition import (
    DirichletMultinomialModel,
    DirichletParams,
    LikelihoodModel,
    PartitionChoice,
    PriorConfig,
    dimension_importance,
    dm_marginal_loglike,
    enumerate_partition_choices,
    find_modal_partition_classification,
    find_modal_partition_general,
    log_beta,
    partition_log_prior,
)
from .tree import (
    BayesianTree,
    GmtConfig,
    Leaf,
    Sprout,
    TreeEnsemble,
    build_ensemble_distinct_roots,
    build_gmt,
    decision_path,
    export_tree,
    import_tree,
    model_from_json,
    model_to_json,
    predict_class,
    predict_posterior,
    predict_proba,
    smoothed_child_prior,
)

__all__ = [
    "__version__",
    "BayesianTree",
    "BenchmarkReport",
    "BenchmarkSpec",
    "DataFormatError",
    "DataSet",
    "DirichletMultinomialModel",
    "DirichletParams",
    "FoldPlan",
    "GmtConfig",
    "GmtError",
    "Leaf",
    "LikelihoodModel",
    "PartitionChoice",
    "PriorConfig",
    "SchemaMismatchError",
    "SchemaSpec",
    "Sprout",
    "SubsetView",
    "TreeEnsemble",
    "build_ensemble_distinct_roots",
    "build_gmt",
    "decision_path",
    "decode_categories",
    "dimension_importance",
    "dm_marginal_loglike",
    "enumerate_partition_choices",
    "evaluate_accuracy",
    "export_tree",
    "find_modal_partition_classification",
    "find_modal_partition_general",
    "format_table",
    "import_tree",
    "kfold_indices",
    "load_csv",
    "load_rows",
    "load_schema",
    "load_suite",
    "log_beta",
    "make_subset",
    "model_from_json",
    "model_to_json",
    "partition_log_prior",
    "predict_class",
    "predict_posterior",
    "predict_proba",
    "run_cv",
    "run_suite",
    "smoothed_child_prior",
]
