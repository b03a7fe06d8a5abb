"""Greedy-modal Bayesian tree construction, prediction and serialisation.

A tree is grown by picking the highest-posterior partition of each region:
a split creates a sprout with two child regions, the trivial choice seals
the region as a leaf holding the Dirichlet posterior of its outcomes. There
is no pruning pass; the depth-dependent trivial prior plays that role during
construction. A region whose outcomes are all one class is sealed
immediately: no split can change the class signal it carries.

The tree's (unnormalised) log-probability is the sum over leaves of each
leaf's trivial-partition log-posterior at its depth, accumulated during the
build and preserved by serialisation.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .data import DataSet, SubsetView, as_view
from .errors import SchemaMismatchError
from .partition import (
    TRIVIAL,
    DirichletParams,
    PartitionChoice,
    PriorConfig,
    dm_marginal_loglike,
    enumerate_partition_choices,
    find_modal_partition_classification,
    partition_log_prior,
)

FORMAT_NAME = "gmtree-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Leaf:
    """Terminal region: posterior pseudo-counts and the number of training
    rows that landed here."""

    posterior: DirichletParams
    support: int

    def mean(self) -> np.ndarray:
        return self.posterior.mean()


@dataclass(frozen=True)
class Sprout:
    """Internal rule: rows with ``x[dim] <= threshold`` go to ``lower``."""

    dim: int
    threshold: float
    lower: "TreeNode"
    upper: "TreeNode"


TreeNode = Union[Leaf, Sprout]


@dataclass(frozen=True)
class GmtConfig:
    """Build configuration.

    ``prior`` defaults to ten pseudo-counts per class when left unset.
    ``delta`` inflates each child's prior by ``delta`` times the child's
    class counts (0 keeps the prior constant everywhere). ``max_depth``
    forces regions at the cap to become leaves; off by default.
    """

    prior: Optional[DirichletParams] = None
    prior_cfg: PriorConfig = PriorConfig()
    delta: float = 0.0
    max_depth: Optional[int] = None

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("smoothing proportion delta must be >= 0")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 when set")

    def resolve_prior(self, n_classes: int) -> DirichletParams:
        if self.prior is None:
            return DirichletParams.symmetric(10.0, n_classes)
        if len(self.prior) != n_classes:
            raise ValueError(
                f"prior has {len(self.prior)} components but data has {n_classes} classes"
            )
        return self.prior


@dataclass(frozen=True)
class BayesianTree:
    """An immutable fitted tree; safe to share across threads."""

    root: TreeNode
    log_prob: float
    config: GmtConfig
    prior: DirichletParams
    n_features: int
    n_classes: int
    n_leaves: int
    depth: int
    feature_names: Optional[tuple[str, ...]] = None
    schema_digest: Optional[str] = None


@dataclass(frozen=True, eq=False)
class TreeEnsemble:
    """Trees weighted by their normalised (max-shifted) probabilities."""

    trees: tuple[BayesianTree, ...]
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        if len(weights) != len(self.trees) or len(self.trees) == 0:
            raise ValueError("ensemble needs one weight per tree")
        if not np.all(weights >= 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ValueError("ensemble weights must be non-negative and sum to one")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)


Model = Union[BayesianTree, TreeEnsemble]


def smoothed_child_prior(
    parent_prior: DirichletParams, child_counts: np.ndarray, delta: float
) -> DirichletParams:
    """Prior for a child region: parent prior plus ``delta`` times the
    child's own class counts. ``delta=0`` returns the parent prior itself."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if delta == 0.0:
        return parent_prior
    return DirichletParams(parent_prior.alpha + delta * np.asarray(child_counts, dtype=np.float64))


# ---------------------------------------------------------------------------
# Construction


def _trivial_choice(counts, prior, depth, n_dims, prior_cfg) -> PartitionChoice:
    loglike = dm_marginal_loglike(counts, prior)
    return PartitionChoice.trivial(
        loglike, loglike + partition_log_prior(TRIVIAL, depth, n_dims, 0, prior_cfg)
    )


ChoosePartition = Callable[[SubsetView, DirichletParams, PriorConfig, int], PartitionChoice]


def _grow(
    view: SubsetView,
    cfg: GmtConfig,
    forced_root: Optional[PartitionChoice],
    choose_partition: Optional[ChoosePartition],
):
    """Worklist construction (no recursion, so region chains of any depth are
    safe). Returns (root, log_prob, n_leaves, depth)."""
    dataset = view.dataset
    prior0 = cfg.resolve_prior(dataset.C)
    prior_cfg = cfg.prior_cfg
    search = choose_partition or find_modal_partition_classification
    log_prob = 0.0
    n_leaves = 0
    max_depth_seen = 0
    done: list[TreeNode] = []
    work: list = [("expand", view, 0, prior0, view.class_counts())]
    while work:
        frame = work.pop()
        if frame[0] == "combine":
            _, dim, threshold = frame
            upper = done.pop()
            lower = done.pop()
            done.append(Sprout(dim=dim, threshold=threshold, lower=lower, upper=upper))
            continue
        _, region, depth, prior, counts = frame
        if depth == 0 and forced_root is not None:
            choice = forced_root
        elif (cfg.max_depth is not None and depth >= cfg.max_depth) or np.count_nonzero(
            counts
        ) < 2:
            choice = _trivial_choice(counts, prior, depth, dataset.d, prior_cfg)
        else:
            choice = search(region, prior, prior_cfg, depth)
        if choice.is_trivial:
            done.append(Leaf(posterior=prior.posterior(counts), support=region.n))
            log_prob += choice.logprob
            n_leaves += 1
            max_depth_seen = max(max_depth_seen, depth)
            continue
        lower, upper = region.split(choice.dim, choice.threshold)
        lower_counts = lower.class_counts()
        upper_counts = counts - lower_counts
        work.append(("combine", choice.dim, choice.threshold))
        work.append(
            (
                "expand",
                upper,
                depth + 1,
                smoothed_child_prior(prior, upper_counts, cfg.delta),
                upper_counts,
            )
        )
        work.append(
            (
                "expand",
                lower,
                depth + 1,
                smoothed_child_prior(prior, lower_counts, cfg.delta),
                lower_counts,
            )
        )
    root = done.pop()
    assert not done
    return root, log_prob, n_leaves, max_depth_seen


def _finish(view: SubsetView, cfg: GmtConfig, forced_root=None, choose_partition=None) -> BayesianTree:
    dataset = view.dataset
    root, log_prob, n_leaves, depth = _grow(view, cfg, forced_root, choose_partition)
    schema = dataset.schema
    return BayesianTree(
        root=root,
        log_prob=log_prob,
        config=cfg,
        prior=cfg.resolve_prior(dataset.C),
        n_features=dataset.d,
        n_classes=dataset.C,
        n_leaves=n_leaves,
        depth=depth,
        feature_names=dataset.feature_names,
        schema_digest=schema.digest() if schema is not None else None,
    )


def build_gmt(
    data: Union[DataSet, SubsetView],
    cfg: GmtConfig = GmtConfig(),
    choose_partition: Optional[ChoosePartition] = None,
) -> BayesianTree:
    """Grow the greedy-modal tree: at every region take the modal partition,
    sealing the region as a leaf when the trivial choice wins, when the
    region has fewer than two distinct feature vectors, or when its outcomes
    are pure.

    ``choose_partition`` swaps the per-region search strategy — it receives
    ``(region, prior, prior_cfg, depth)`` and returns the chosen
    :class:`PartitionChoice`. The default is the classification fast path;
    the generic likelihood-model search or a lookahead strategy plug in the
    same way.
    """
    view = as_view(data)
    if view.n == 0:
        raise ValueError("cannot build a tree from an empty dataset")
    return _finish(view, cfg, choose_partition=choose_partition)


def build_ensemble_distinct_roots(
    data: Union[DataSet, SubsetView], cfg: GmtConfig, n_trees: int
) -> TreeEnsemble:
    """The greedy-modal tree plus variants grown from the next-best root
    splits, weighted by their normalised probabilities.

    Root candidates are ranked by log-probability (ties keep canonical scan
    order); the trivial candidate never seeds an extra tree, so at most
    (number of non-trivial root candidates + 1) trees exist. Asking for more
    returns fewer with a warning.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    view = as_view(data)
    if view.n == 0:
        raise ValueError("cannot build an ensemble from an empty dataset")
    prior = cfg.resolve_prior(view.dataset.C)
    choices = enumerate_partition_choices(view, prior, cfg.prior_cfg, depth=0)
    ranked = sorted(range(len(choices)), key=lambda i: -choices[i].logprob)
    trees = [_finish(view, cfg)]  # rank 1 is the greedy-modal tree itself
    for idx in ranked[1:]:
        if len(trees) == n_trees:
            break
        choice = choices[idx]
        if choice.is_trivial:
            continue
        trees.append(_finish(view, cfg, forced_root=choice))
    if len(trees) < n_trees:
        warnings.warn(
            f"only {len(trees)} distinct roots available, returning "
            f"{len(trees)} trees instead of {n_trees}",
            stacklevel=2,
        )
    log_probs = np.array([t.log_prob for t in trees])
    shifted = np.exp(log_probs - log_probs.max())
    return TreeEnsemble(trees=tuple(trees), weights=shifted / shifted.sum())


# ---------------------------------------------------------------------------
# Prediction


def _route(tree: BayesianTree, x: np.ndarray) -> Leaf:
    node = tree.root
    while isinstance(node, Sprout):
        node = node.lower if x[node.dim] <= node.threshold else node.upper
    return node


def _check_width(model: Model, x: np.ndarray) -> int:
    d = model.n_features if isinstance(model, BayesianTree) else model.trees[0].n_features
    if x.shape[-1] != d:
        raise SchemaMismatchError(f"input has {x.shape[-1]} features, model expects {d}")
    return d


def predict_posterior(tree: BayesianTree, x: Sequence[float]) -> DirichletParams:
    """Route one point to its leaf and return the leaf posterior."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise SchemaMismatchError("predict_posterior takes a single feature vector")
    _check_width(tree, x)
    return _route(tree, x).posterior


def decision_path(tree: BayesianTree, x: Sequence[float]) -> list[str]:
    """Human-readable answers taken on the way to the leaf."""
    x = np.asarray(x, dtype=np.float64)
    _check_width(tree, x)
    steps = []
    node = tree.root
    while isinstance(node, Sprout):
        name = _feature_label(tree.feature_names, node.dim)
        took_lower = x[node.dim] <= node.threshold
        steps.append(f"{name} <= {node.threshold!r}: {'yes' if took_lower else 'no'}")
        node = node.lower if took_lower else node.upper
    return steps


def predict_proba(model: Model, x: Sequence[float]) -> np.ndarray:
    """Expected class probabilities: per tree the posterior mean, for an
    ensemble the weight-averaged means. Accepts one vector or a matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return _proba_one(model, x)
    if x.ndim == 2:
        _check_width(model, x)
        return np.vstack([_proba_one(model, row) for row in x])
    raise SchemaMismatchError("input must be a vector or a matrix of rows")


def _proba_one(model: Model, x: np.ndarray) -> np.ndarray:
    _check_width(model, x)
    if isinstance(model, BayesianTree):
        return _route(model, x).mean()
    out = np.zeros(model.trees[0].n_classes)
    for tree, w in zip(model.trees, model.weights):
        out += w * _route(tree, x).mean()
    return out


def predict_class(model: Model, x: Sequence[float]) -> Union[int, np.ndarray]:
    """Most probable class; exact ties go to the lowest class index."""
    proba = predict_proba(model, x)
    if proba.ndim == 1:
        return int(np.argmax(proba))
    return np.argmax(proba, axis=1)


# ---------------------------------------------------------------------------
# Serialisation
#
# The structured format is a flat node table (children always have larger
# indices than their parent) inside a versioned JSON envelope; thresholds and
# pseudo-counts round-trip bit-exactly through Python's shortest-repr floats.


def _feature_label(names: Optional[tuple[str, ...]], dim: int) -> str:
    return names[dim] if names else f"x{dim + 1}"


def _flatten_nodes(root: TreeNode) -> list[dict]:
    nodes: list[dict] = []
    stack = [(root, None, None)]  # node, parent index, side
    while stack:
        node, parent, side = stack.pop()
        idx = len(nodes)
        if parent is not None:
            nodes[parent][side] = idx
        if isinstance(node, Leaf):
            nodes.append(
                {
                    "kind": "leaf",
                    "posterior": [float(a) for a in node.posterior.alpha],
                    "support": int(node.support),
                }
            )
        else:
            nodes.append(
                {
                    "kind": "sprout",
                    "dim": int(node.dim),
                    "threshold": float(node.threshold),
                    "lower": None,
                    "upper": None,
                }
            )
            stack.append((node.upper, idx, "upper"))
            stack.append((node.lower, idx, "lower"))
    return nodes


def _unflatten_nodes(nodes: list[dict]) -> TreeNode:
    built: list[Optional[TreeNode]] = [None] * len(nodes)
    for idx in range(len(nodes) - 1, -1, -1):
        spec = nodes[idx]
        if spec["kind"] == "leaf":
            built[idx] = Leaf(
                posterior=DirichletParams(np.array(spec["posterior"], dtype=np.float64)),
                support=int(spec["support"]),
            )
        else:
            built[idx] = Sprout(
                dim=int(spec["dim"]),
                threshold=float(spec["threshold"]),
                lower=built[spec["lower"]],
                upper=built[spec["upper"]],
            )
    return built[0]


def _tree_body(tree: BayesianTree) -> dict:
    return {
        "config": {
            "alpha": [float(a) for a in tree.prior.alpha],
            "g": tree.config.prior_cfg.g,
            "depth_dependent": tree.config.prior_cfg.depth_dependent,
            "delta": tree.config.delta,
            "max_depth": tree.config.max_depth,
        },
        "n_features": tree.n_features,
        "n_classes": tree.n_classes,
        "feature_names": list(tree.feature_names) if tree.feature_names else None,
        "schema_digest": tree.schema_digest,
        "log_prob": float(tree.log_prob),
        "nodes": _flatten_nodes(tree.root),
    }


def _tree_from_body(body: dict) -> BayesianTree:
    cfg_spec = body["config"]
    prior = DirichletParams(np.array(cfg_spec["alpha"], dtype=np.float64))
    cfg = GmtConfig(
        prior=prior,
        prior_cfg=PriorConfig(g=cfg_spec["g"], depth_dependent=cfg_spec["depth_dependent"]),
        delta=cfg_spec["delta"],
        max_depth=cfg_spec["max_depth"],
    )
    nodes = body["nodes"]
    root = _unflatten_nodes(nodes)
    # recompute structural stats instead of trusting the file
    n_leaves = sum(1 for n in nodes if n["kind"] == "leaf")
    depth = _depth_of(nodes)
    names = body.get("feature_names")
    return BayesianTree(
        root=root,
        log_prob=float(body["log_prob"]),
        config=cfg,
        prior=prior,
        n_features=int(body["n_features"]),
        n_classes=int(body["n_classes"]),
        n_leaves=n_leaves,
        depth=depth,
        feature_names=tuple(names) if names else None,
        schema_digest=body.get("schema_digest"),
    )


def _depth_of(nodes: list[dict]) -> int:
    depth = [0] * len(nodes)
    best = 0
    for idx, spec in enumerate(nodes):
        if spec["kind"] == "sprout":
            depth[spec["lower"]] = depth[idx] + 1
            depth[spec["upper"]] = depth[idx] + 1
        else:
            best = max(best, depth[idx])
    return best


def tree_to_dict(tree: BayesianTree) -> dict:
    out = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "kind": "tree"}
    out.update(_tree_body(tree))
    return out


def ensemble_to_dict(ensemble: TreeEnsemble) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": "ensemble",
        "weights": [float(w) for w in ensemble.weights],
        "trees": [_tree_body(t) for t in ensemble.trees],
    }


def model_to_json(model: Model) -> str:
    """Canonical (byte-stable) JSON serialisation of a tree or ensemble."""
    payload = tree_to_dict(model) if isinstance(model, BayesianTree) else ensemble_to_dict(model)
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def model_from_json(text: Union[str, bytes]) -> Model:
    payload = json.loads(text)
    if payload.get("format") != FORMAT_NAME:
        raise SchemaMismatchError("not a gmtree model file")
    if payload.get("version") != FORMAT_VERSION:
        raise SchemaMismatchError(f"unsupported model version {payload.get('version')!r}")
    if payload["kind"] == "tree":
        return _tree_from_body(payload)
    if payload["kind"] == "ensemble":
        trees = tuple(_tree_from_body(b) for b in payload["trees"])
        return TreeEnsemble(trees=trees, weights=np.array(payload["weights"]))
    raise SchemaMismatchError(f"unknown model kind {payload['kind']!r}")


def import_tree(text: Union[str, bytes]) -> BayesianTree:
    model = model_from_json(text)
    if not isinstance(model, BayesianTree):
        raise SchemaMismatchError("model file holds an ensemble, not a single tree")
    return model


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _leaf_line(leaf: Leaf) -> str:
    post = ", ".join(_fmt(a) for a in leaf.posterior.alpha)
    mean = ", ".join(_fmt(m) for m in leaf.mean())
    return f"leaf support={leaf.support} posterior=({post}) mean=({mean})"


def export_text(tree: BayesianTree) -> str:
    """Indented human-readable rules with posterior means per leaf."""
    lines: list[str] = []
    stack = [(tree.root, 0, "")]
    while stack:
        node, indent, label = stack.pop()
        pad = "  " * indent
        if isinstance(node, Leaf):
            lines.append(f"{pad}{label}{_leaf_line(node)}")
        else:
            name = _feature_label(tree.feature_names, node.dim)
            lines.append(f"{pad}{label}{name} <= {node.threshold!r}")
            stack.append((node.upper, indent + 1, "no: "))
            stack.append((node.lower, indent + 1, "yes: "))
    return "\n".join(lines) + "\n"


def export_graph(tree: BayesianTree) -> str:
    """Graphviz DOT rendering of the tree."""
    lines = ["digraph gmtree {", "  node [fontname=helvetica];"]
    stack = [(tree.root, 0)]
    counter = [0]

    def next_id() -> int:
        counter[0] += 1
        return counter[0]

    while stack:
        node, nid = stack.pop()
        if isinstance(node, Leaf):
            mean = ", ".join(_fmt(m) for m in node.mean())
            lines.append(f'  n{nid} [shape=box label="n={node.support}\\nmean=({mean})"];')
        else:
            name = _feature_label(tree.feature_names, node.dim)
            lines.append(f'  n{nid} [label="{name} <= {node.threshold!r}"];')
            lo, up = next_id(), next_id()
            lines.append(f'  n{nid} -> n{lo} [label="yes"];')
            lines.append(f'  n{nid} -> n{up} [label="no"];')
            stack.append((node.upper, up))
            stack.append((node.lower, lo))
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_tree(tree: BayesianTree, format: str = "structured") -> str:
    """Serialise a tree as ``text`` (rules), ``structured`` (JSON, round-
    trippable) or ``graph`` (DOT)."""
    if format == "structured":
        return model_to_json(tree)
    if format == "text":
        return export_text(tree)
    if format == "graph":
        return export_graph(tree)
    raise ValueError(f"unknown export format {format!r}")
