"""The finite partition space over a region of feature space.

A region's candidate partitions are the trivial "keep everything together"
choice plus, per dimension, one axis-aligned split at the midpoint between
each adjacent pair of distinct sorted feature values. Candidates are scored
by the product of conjugate marginal likelihoods of the outcomes on each
side times a prior that increasingly favours the trivial choice with depth.
All scoring happens in log space.

Two searches are provided: a generic one that re-evaluates an arbitrary
likelihood model on both sides of every candidate, and a classification fast
path that sweeps each dimension once, pricing both sides of every candidate
from running class counts via shared prefix-sum log tables (O(d*n) per
region).
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit
from scipy.special import gammaln

from .data import DataSet, SubsetView, as_view

TRIVIAL = "trivial"
SPLIT = "split"

# ---------------------------------------------------------------------------
# Multivariate log-beta
#
# ln B(z) = sum_c lgamma(z_c) - lgamma(sum_c z_c). The naive three-term form
# loses ~7 digits to cancellation once components reach ~1e6, so for large
# totals the pairwise reduction below evaluates lgamma(y) - lgamma(x + y)
# directly from Stirling's expansion. Coefficients are the standard
# B_2k / (2k (2k-1)) Bernoulli terms.

_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
)

_SMALL_TOTAL = 100.0  # below this the naive form is already ~1e-14 accurate


def _stirling_correction(z: float) -> float:
    # phi(z) = lgamma(z) - [(z - 0.5) ln z - z + 0.5 ln 2pi], valid z >= 10
    zi = 1.0 / z
    r = zi * zi
    acc = 0.0
    for c in reversed(_STIRLING):
        acc = acc * r + c
    return acc * zi


def _lgamma_diff(x: float, y: float) -> float:
    # lgamma(y) - lgamma(x + y) for x >= 0, without cancellation
    if y < 10.0:
        k = int(math.ceil(10.0 - y))
        shift = sum(math.log1p(x / (y + i)) for i in range(k))
        return _lgamma_diff(x, y + k) + shift
    return (
        x
        - x * math.log(y)
        - (x + y - 0.5) * math.log1p(x / y)
        + (_stirling_correction(y) - _stirling_correction(x + y))
    )


def log_beta(z: Union[Sequence[float], np.ndarray]) -> float:
    """Natural log of the multivariate beta function of ``z``.

    Accurate to ~1e-13 relative error even for components up to 1e6 and
    beyond, where the textbook gamma-function formula cancels badly.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size < 1:
        raise ValueError("log_beta expects a 1-D vector of parameters")
    if not np.all(z > 0.0) or not np.all(np.isfinite(z)):
        raise ValueError("log_beta arguments must be positive and finite")
    total = float(z.sum())
    if total <= _SMALL_TOTAL:
        return float(gammaln(z).sum() - gammaln(total))
    z = np.sort(z)
    acc = float(z[0])
    out = 0.0
    for zi in z[1:]:
        zi = float(zi)
        hi, lo = (acc, zi) if acc >= zi else (zi, acc)
        out += float(gammaln(lo)) + _lgamma_diff(lo, hi)
        acc += zi
    return out


# ---------------------------------------------------------------------------
# Conjugate family and priors


@dataclass(frozen=True, eq=False)
class DirichletParams:
    """Pseudo-count vector of a Dirichlet prior (or posterior) over classes."""

    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=np.float64)
        if alpha.ndim != 1 or alpha.size < 1:
            raise ValueError("alpha must be a 1-D vector")
        if not np.all(alpha > 0.0) or not np.all(np.isfinite(alpha)):
            raise ValueError("alpha components must be positive and finite")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)

    def __eq__(self, other) -> bool:
        return isinstance(other, DirichletParams) and np.array_equal(self.alpha, other.alpha)

    def __hash__(self) -> int:
        return hash(tuple(self.alpha))

    def __len__(self) -> int:
        return len(self.alpha)

    @property
    def pseudo_count(self) -> float:
        return float(self.alpha.sum())

    def posterior(self, counts: np.ndarray) -> "DirichletParams":
        return DirichletParams(self.alpha + np.asarray(counts, dtype=np.float64))

    def mean(self) -> np.ndarray:
        return self.alpha / self.alpha.sum()

    @classmethod
    def symmetric(cls, value: float, n_classes: int) -> "DirichletParams":
        return cls(np.full(n_classes, float(value)))


def dm_marginal_loglike(counts: Union[Sequence[float], np.ndarray], prior: DirichletParams) -> float:
    """Dirichlet-multinomial marginal log-likelihood of an outcome multiset.

    Equals ln B(alpha + counts) - ln B(alpha); an empty multiset has
    likelihood one, hence exactly 0.0.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != prior.alpha.shape:
        raise ValueError(
            f"counts length {counts.shape} does not match prior length {prior.alpha.shape}"
        )
    return log_beta(prior.alpha + counts) - log_beta(prior.alpha)


@dataclass(frozen=True)
class PriorConfig:
    """Partition-space prior: trivial gets 1 - g**(1+depth), the remainder is
    spread uniformly over dimensions and then over each dimension's splits.
    With ``depth_dependent`` off the exponent is pinned at 1 (the flat
    variant used for deeper exploration)."""

    g: float = 0.99
    depth_dependent: bool = True

    def __post_init__(self):
        if not (0.0 < self.g < 1.0):
            raise ValueError("split-continuation base g must lie in (0, 1)")


def partition_log_prior(
    kind: str,
    depth: int,
    n_dims: int,
    n_splits: int,
    cfg: PriorConfig,
) -> float:
    """Log prior probability of one candidate partition.

    ``n_dims`` is the full feature count (dimensions without candidate
    splits still count); ``n_splits`` is the number of candidate splits along
    the chosen dimension (split kind only).
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    exponent = (1 + depth) if cfg.depth_dependent else 1
    if kind == TRIVIAL:
        return math.log1p(-cfg.g ** exponent)
    if kind == SPLIT:
        if n_splits < 1:
            raise ValueError("a split candidate requires n_splits >= 1")
        # np.log here so scalar and vectorised prior evaluations agree bitwise
        return exponent * math.log(cfg.g) - math.log(n_dims) - float(np.log(n_splits))
    raise ValueError(f"unknown partition kind {kind!r}")


def _log_prior(kind: str, depth: int, n_dims: int, n_splits: int, cfg: Optional[PriorConfig]) -> float:
    # cfg None means a uniform (improper) prior over candidates: pure
    # likelihood comparison.
    if cfg is None:
        return 0.0
    return partition_log_prior(kind, depth, n_dims, n_splits, cfg)


@dataclass(frozen=True)
class PartitionChoice:
    """Outcome of a partition search over one region."""

    kind: str
    dim: Optional[int]
    threshold: Optional[float]
    loglike: float
    logprob: float

    @property
    def is_trivial(self) -> bool:
        return self.kind == TRIVIAL

    @classmethod
    def trivial(cls, loglike: float, logprob: float) -> "PartitionChoice":
        return cls(TRIVIAL, None, None, loglike, logprob)

    @classmethod
    def split(cls, dim: int, threshold: float, loglike: float, logprob: float) -> "PartitionChoice":
        return cls(SPLIT, int(dim), float(threshold), loglike, logprob)


# ---------------------------------------------------------------------------
# Likelihood models (generic search path)


class LikelihoodModel(ABC):
    """Marginal likelihood of an outcome multiset under a conjugate prior.

    The generic split search only needs these two operations, so alternative
    outcome models (e.g. a regression family) can plug into the same search.
    """

    @abstractmethod
    def marginal_loglike(self, outcomes: np.ndarray) -> float:
        """Log marginal likelihood; the empty multiset must return 0.0."""

    @abstractmethod
    def posterior(self, outcomes: np.ndarray):
        """Posterior parameters after observing ``outcomes``."""


class DirichletMultinomialModel(LikelihoodModel):
    """Categorical outcomes with a Dirichlet prior over class frequencies."""

    def __init__(self, prior: DirichletParams):
        self.prior = prior

    def _counts(self, outcomes: np.ndarray) -> np.ndarray:
        return np.bincount(np.asarray(outcomes, dtype=np.int64), minlength=len(self.prior))

    def marginal_loglike(self, outcomes: np.ndarray) -> float:
        if len(outcomes) == 0:
            return 0.0
        return dm_marginal_loglike(self._counts(outcomes), self.prior)

    def posterior(self, outcomes: np.ndarray) -> DirichletParams:
        return self.prior.posterior(self._counts(outcomes))


# ---------------------------------------------------------------------------
# Candidate sweeps


# The marginal likelihood of a side with class counts k expands into the
# running products prod_c prod_{i<k_c} (alpha_c + i) / prod_{t<|k|}
# (pseudo + t), so the prefix tables class_table[c, k] = sum_{i<k}
# ln(alpha_c + i) and total_table[s] = sum_{t<s} ln(pseudo + t) price any
# candidate from its cumulative class counts alone. Because a candidate's
# score is a pure function of its count vector looked up in shared tables,
# with commutative per-candidate accumulation, mathematically tied
# candidates are *bitwise* tied regardless of which side is which or which
# dimension they sit on, keeping the canonical tie-break stable.


@njit(cache=True)
def _log_tables(alpha, pseudo, m):
    C = alpha.shape[0]
    class_table = np.zeros((C, m + 1))
    for c in range(C):
        acc = 0.0
        for i in range(m):
            acc += np.log(alpha[c] + i)
            class_table[c, i + 1] = acc
    total_table = np.zeros(m + 1)
    acc = 0.0
    for t in range(m):
        acc += np.log(pseudo + t)
        total_table[t + 1] = acc
    return class_table, total_table


@njit(cache=True)
def _trivial_score(counts, class_table, total_table, m):
    acc = -total_table[m]
    for c in range(counts.shape[0]):
        acc += class_table[c, counts[c]]
    return acc


@njit(cache=True)
def _sweep_full(xs, ys, counts, alpha, pseudo):
    """Score every candidate split of a region, all dimensions in one pass.

    Entry ``[r, j]`` of the matrix is the two-sided marginal log-likelihood
    of splitting dimension r between sorted positions j and j+1, or -inf
    where the values are equal (no candidate).
    """
    d, m = xs.shape
    C = counts.shape[0]
    class_table, total_table = _log_tables(alpha, pseudo, m)
    trivial = _trivial_score(counts, class_table, total_table, m)
    out = np.full((d, m - 1), -np.inf)
    n_splits = np.zeros(d, dtype=np.int64)
    seen = np.zeros(C, dtype=np.int64)
    for r in range(d):
        for c in range(C):
            seen[c] = 0
        for j in range(m - 1):
            seen[ys[r, j]] += 1
            if xs[r, j] != xs[r, j + 1]:
                n_splits[r] += 1
                acc = -total_table[j + 1] - total_table[m - j - 1]
                for c in range(C):
                    acc += class_table[c, seen[c]] + class_table[c, counts[c] - seen[c]]
                out[r, j] = acc
    return trivial, out, n_splits


@njit(cache=True)
def _sweep_best(features_by_dim, outcomes, sorted_rows, C, alpha, pseudo):
    """Like :func:`_sweep_full` reduced to each dimension's best candidate
    (strictly-greater replacement, so ties keep the lowest threshold).

    Operates on the global arrays through the region's sorted row ids; one
    call covers the whole region, construction's hot path. Candidate scores
    use exactly the same table lookups and accumulation order as
    :func:`_sweep_full`, so the two paths agree bitwise.
    """
    d, m = sorted_rows.shape
    counts = np.zeros(C, dtype=np.int64)
    for i in range(m):
        counts[outcomes[sorted_rows[0, i]]] += 1
    class_table, total_table = _log_tables(alpha, pseudo, m)
    trivial = _trivial_score(counts, class_table, total_table, m)
    best_ll = np.full(d, -np.inf)
    thresholds = np.zeros(d)
    n_splits = np.zeros(d, dtype=np.int64)
    seen = np.zeros(C, dtype=np.int64)
    for r in range(d):
        for c in range(C):
            seen[c] = 0
        column = features_by_dim[r]
        x_here = column[sorted_rows[r, 0]] if m > 0 else 0.0
        for j in range(m - 1):
            seen[outcomes[sorted_rows[r, j]]] += 1
            x_next = column[sorted_rows[r, j + 1]]
            if x_here != x_next:
                n_splits[r] += 1
                acc = -total_table[j + 1] - total_table[m - j - 1]
                for c in range(C):
                    acc += class_table[c, seen[c]] + class_table[c, counts[c] - seen[c]]
                if acc > best_ll[r]:
                    best_ll[r] = acc
                    thresholds[r] = (x_here + x_next) / 2.0
            x_here = x_next
    return trivial, counts, best_ll, thresholds, n_splits


def _node_scan(view: SubsetView, prior: DirichletParams):
    """Sweep a region and return every candidate.

    Returns ``(trivial_loglike, per_dim)`` where ``per_dim`` lists, for each
    dimension with at least one candidate, ``(dim, thresholds, loglikes)`` in
    ascending threshold order.
    """
    n = view.n
    if n == 0:
        raise ValueError("cannot search partitions of an empty region")
    if len(prior.alpha) != view.dataset.C:
        raise ValueError("prior length does not match the dataset class count")
    dataset = view.dataset
    order = view.sorted_rows
    xs = dataset.features[order, np.arange(dataset.d)[:, None]]
    ys = dataset.outcomes[order]
    trivial, loglikes, n_splits = _sweep_full(
        xs, ys, view.class_counts(), prior.alpha, prior.pseudo_count
    )
    per_dim = []
    for r in np.flatnonzero(n_splits):
        boundary = np.flatnonzero(loglikes[r] != -np.inf)
        thresholds = (xs[r, boundary] + xs[r, boundary + 1]) / 2.0
        per_dim.append((int(r), thresholds, loglikes[r, boundary]))
    return float(trivial), per_dim


def _best_split_scan(view: SubsetView, prior: DirichletParams):
    """Best candidate per dimension (the construction hot path).

    Returns ``(trivial_loglike, counts, dims, thresholds, loglikes,
    n_splits)`` with one entry per dimension that has candidates, dimensions
    ascending and per-dimension ties already resolved to the lowest
    threshold.
    """
    if view.n == 0:
        raise ValueError("cannot search partitions of an empty region")
    dataset = view.dataset
    if len(prior.alpha) != dataset.C:
        raise ValueError("prior length does not match the dataset class count")
    trivial, counts, best_ll, thresholds, n_splits = _sweep_best(
        dataset.features_by_dim,
        dataset.outcomes,
        view.sorted_rows,
        dataset.C,
        prior.alpha,
        prior.pseudo_count,
    )
    active = np.flatnonzero(n_splits)
    return (
        float(trivial),
        counts,
        active,
        thresholds[active],
        best_ll[active],
        n_splits[active],
    )


def find_modal_partition_classification(
    data: Union[DataSet, SubsetView],
    prior: DirichletParams,
    cfg: Optional[PriorConfig],
    depth: int = 0,
) -> PartitionChoice:
    """Highest-posterior partition of a region (classification fast path).

    Scan order is canonical — trivial first, then dimensions ascending, then
    thresholds ascending — and the incumbent is only replaced by a strictly
    larger log-probability, so exact ties resolve to the earliest candidate.
    A region with fewer than two distinct feature vectors has no candidate
    splits and always comes back trivial. ``cfg=None`` scores candidates on
    likelihood alone.
    """
    view = as_view(data)
    trivial_loglike, _, dims, thresholds, loglikes, n_splits = _best_split_scan(view, prior)
    d = view.dataset.d
    best = PartitionChoice.trivial(
        trivial_loglike, trivial_loglike + _log_prior(TRIVIAL, depth, d, 0, cfg)
    )
    if dims.size:
        if cfg is None:
            logprobs = loglikes
        else:
            exponent = (1 + depth) if cfg.depth_dependent else 1
            # same association and log provenance as partition_log_prior
            logprobs = loglikes + (
                (exponent * math.log(cfg.g) - math.log(d)) - np.log(n_splits.astype(np.float64))
            )
        k = int(np.argmax(logprobs))  # dims ascend, so first max is canonical
        if logprobs[k] > best.logprob:
            best = PartitionChoice.split(
                int(dims[k]), float(thresholds[k]), float(loglikes[k]), float(logprobs[k])
            )
    return best


def find_modal_partition_general(
    data: Union[DataSet, SubsetView],
    model: LikelihoodModel,
    cfg: Optional[PriorConfig],
    depth: int = 0,
) -> PartitionChoice:
    """Highest-posterior partition under an arbitrary likelihood model.

    Reference path: evaluates the model on both sides of every candidate
    (quadratic in the region size). Instantiated with the Dirichlet-
    multinomial model it agrees with the classification fast path.
    """
    view = as_view(data)
    n = view.n
    if n == 0:
        raise ValueError("cannot search partitions of an empty region")
    dataset = view.dataset
    d = dataset.d
    trivial_loglike = model.marginal_loglike(view.outcomes())
    best = PartitionChoice.trivial(
        trivial_loglike, trivial_loglike + _log_prior(TRIVIAL, depth, d, 0, cfg)
    )
    for r in range(d):
        order = view.sorted_rows[r]
        xs = dataset.features[order, r]
        ys = dataset.outcomes[order]
        n_splits = int(np.count_nonzero(xs[:-1] != xs[1:]))
        if n_splits == 0:
            continue
        log_prior = _log_prior(SPLIT, depth, d, n_splits, cfg)
        for j in range(n - 1):
            if xs[j] == xs[j + 1]:
                continue
            loglike = model.marginal_loglike(ys[: j + 1]) + model.marginal_loglike(ys[j + 1 :])
            logprob = loglike + log_prior
            if logprob > best.logprob:
                best = PartitionChoice.split(r, (xs[j] + xs[j + 1]) / 2.0, loglike, logprob)
    return best


def enumerate_partition_choices(
    data: Union[DataSet, SubsetView],
    prior: DirichletParams,
    cfg: Optional[PriorConfig],
    depth: int = 0,
) -> list[PartitionChoice]:
    """Every candidate partition of a region, in canonical scan order
    (trivial first, then dimensions ascending, thresholds ascending)."""
    view = as_view(data)
    trivial_loglike, per_dim = _node_scan(view, prior)
    d = view.dataset.d
    out = [
        PartitionChoice.trivial(
            trivial_loglike, trivial_loglike + _log_prior(TRIVIAL, depth, d, 0, cfg)
        )
    ]
    for r, thresholds, loglikes in per_dim:
        log_prior = _log_prior(SPLIT, depth, d, len(thresholds), cfg)
        for threshold, loglike in zip(thresholds, loglikes):
            out.append(
                PartitionChoice.split(r, float(threshold), float(loglike), float(loglike) + log_prior)
            )
    return out


def dimension_importance(
    data: Union[DataSet, SubsetView],
    prior: DirichletParams,
    cfg: Optional[PriorConfig],
    depth: int = 0,
) -> np.ndarray:
    """Posterior mass of "no split" and of splitting along each dimension.

    Entry 0 is the trivial partition's normalized probability; entry r+1
    aggregates every candidate along dimension r. Normalization exponentiates
    under a max shift, and the entries sum to one up to float round-off.
    """
    view = as_view(data)
    trivial_loglike, per_dim = _node_scan(view, prior)
    d = view.dataset.d
    logprobs = [
        np.array([trivial_loglike + _log_prior(TRIVIAL, depth, d, 0, cfg)])
    ]
    dims = [None]
    for r, thresholds, loglikes in per_dim:
        logprobs.append(loglikes + _log_prior(SPLIT, depth, d, len(thresholds), cfg))
        dims.append(r)
    flat = np.concatenate(logprobs)
    shift = flat.max()
    weights = np.exp(flat - shift)
    total = weights.sum()
    out = np.zeros(d + 1)
    offset = 0
    for dim, group in zip(dims, logprobs):
        mass = weights[offset : offset + len(group)].sum() / total
        out[0 if dim is None else dim + 1] = mass
        offset += len(group)
    return out
