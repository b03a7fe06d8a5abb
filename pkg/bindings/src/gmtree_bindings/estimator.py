"""Scikit-learn-style estimator facade over the core tree library.

Every numerical operation crosses into :mod:`gmtree`; nothing is
reimplemented here, so results are bit-identical to the core API and the
CLI on the same arrays and configuration. Model files are interchangeable
with the CLI's structured export.

Inputs at this layer are plain numeric arrays: categorical encoding is the
caller's responsibility (the schema-aware path lives in the CLI).
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from gmtree import (
    DataSet,
    DirichletParams,
    GmtConfig,
    PriorConfig,
    build_ensemble_distinct_roots,
    build_gmt,
    dimension_importance,
    export_tree,
    model_from_json,
    model_to_json,
    predict_class,
    predict_proba,
)
from gmtree.tree import BayesianTree, TreeEnsemble

__all__ = ["GreedyModalTreeClassifier", "NotFittedError"]


class NotFittedError(RuntimeError):
    """Predict-side call on an estimator that has not been fitted."""


class GreedyModalTreeClassifier:
    """Greedy-modal Bayesian decision tree with a fit/predict surface.

    Parameters mirror the core build configuration: ``alpha`` is the prior
    pseudo-count vector (default: ten per class), ``g`` and
    ``depth_dependent`` control the partition prior, ``delta`` the prior
    smoothing, ``max_depth`` an optional cap, and ``n_trees`` grows a
    distinct-root ensemble when greater than one.
    """

    def __init__(
        self,
        alpha: Optional[Sequence[float]] = None,
        g: float = 0.99,
        depth_dependent: bool = True,
        delta: float = 0.0,
        max_depth: Optional[int] = None,
        n_trees: int = 1,
    ):
        self.alpha = alpha
        self.g = g
        self.depth_dependent = depth_dependent
        self.delta = delta
        self.max_depth = max_depth
        self.n_trees = n_trees
        self._model = None
        self._importances = None

    # -- sklearn-compatible parameter plumbing ------------------------------

    _PARAM_NAMES = ("alpha", "g", "depth_dependent", "delta", "max_depth", "n_trees")

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._PARAM_NAMES}

    def set_params(self, **params) -> "GreedyModalTreeClassifier":
        for name, value in params.items():
            if name not in self._PARAM_NAMES:
                raise ValueError(f"unknown parameter {name!r}")
            setattr(self, name, value)
        return self

    # -- fitting -------------------------------------------------------------

    def _config(self) -> GmtConfig:
        prior = None
        if self.alpha is not None:
            prior = DirichletParams(np.asarray(self.alpha, dtype=np.float64))
        return GmtConfig(
            prior=prior,
            prior_cfg=PriorConfig(g=self.g, depth_dependent=self.depth_dependent),
            delta=self.delta,
            max_depth=self.max_depth,
        )

    def fit(self, X, y) -> "GreedyModalTreeClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D array")
        if y.shape != (X.shape[0],):
            raise ValueError(f"y has length {y.shape}, X has {X.shape[0]} rows")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite values")
        if y.size and (y != np.floor(y)).any():
            raise ValueError("labels must be integers 0..C-1")
        y = y.astype(np.int64)
        # at least binary, so a one-row or one-class fit still yields a model
        dataset = DataSet(X, y, n_classes=max(2, int(y.max()) + 1))
        cfg = self._config()
        if self.n_trees > 1:
            self._model = build_ensemble_distinct_roots(dataset, cfg, self.n_trees)
        else:
            self._model = build_gmt(dataset, cfg)
        prior = cfg.resolve_prior(dataset.C)
        masses = dimension_importance(dataset, prior, cfg.prior_cfg, depth=0)
        self._importances = masses
        return self

    # -- prediction ----------------------------------------------------------

    def _fitted_model(self):
        if self._model is None:
            raise NotFittedError("call fit() before predicting")
        return self._model

    @property
    def n_features_in_(self) -> int:
        model = self._fitted_model()
        return model.n_features if isinstance(model, BayesianTree) else model.trees[0].n_features

    @property
    def classes_(self) -> np.ndarray:
        model = self._fitted_model()
        C = model.n_classes if isinstance(model, BayesianTree) else model.trees[0].n_classes
        return np.arange(C)

    def _check_X(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(f"X must be 2-D with {self.n_features_in_} columns")
        return X

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba(self._fitted_model(), self._check_X(X))

    def predict(self, X) -> np.ndarray:
        return predict_class(self._fitted_model(), self._check_X(X))

    @property
    def feature_importances_(self) -> np.ndarray:
        """Posterior split mass per feature at the root partition space
        (entries plus :attr:`trivial_mass_` sum to one)."""
        self._fitted_model()
        return self._importances[1:].copy()

    @property
    def trivial_mass_(self) -> float:
        self._fitted_model()
        return float(self._importances[0])

    @property
    def log_prob_(self) -> float:
        """Unnormalised log-probability of the fitted tree (first tree of an
        ensemble)."""
        model = self._fitted_model()
        return model.log_prob if isinstance(model, BayesianTree) else model.trees[0].log_prob

    # -- model files (interchangeable with the CLI) --------------------------

    def export(self, format: str = "structured") -> str:
        model = self._fitted_model()
        if isinstance(model, TreeEnsemble):
            if format != "structured":
                raise ValueError("text/graph exports apply to single trees")
            return model_to_json(model)
        return export_tree(model, format)

    def save(self, path) -> None:
        Path(path).write_text(self.export("structured"))

    @classmethod
    def load(cls, path) -> "GreedyModalTreeClassifier":
        """Rehydrate from a structured model file (CLI exports included).
        Importances are unavailable on loaded models."""
        model = model_from_json(Path(path).read_text())
        tree = model if isinstance(model, BayesianTree) else model.trees[0]
        out = cls(
            alpha=[float(a) for a in tree.prior.alpha],
            g=tree.config.prior_cfg.g,
            depth_dependent=tree.config.prior_cfg.depth_dependent,
            delta=tree.config.delta,
            max_depth=tree.config.max_depth,
            n_trees=1 if isinstance(model, BayesianTree) else len(model.trees),
        )
        out._model = model
        return out
