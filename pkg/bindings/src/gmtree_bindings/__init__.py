"""Estimator-style bindings for the gmtree library."""

__version__ = "0.1.0"

from .estimator import GreedyModalTreeClassifier, NotFittedError

__all__ = ["GreedyModalTreeClassifier", "NotFittedError", "__version__"]
