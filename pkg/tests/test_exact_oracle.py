"""End-to-end construction oracle in exact rational arithmetic.

An independent reimplementation of the whole greedy-modal build using
``fractions.Fraction``: every candidate's posterior weight is computed
exactly (running-product marginal likelihoods, exact 99/100 priors at each
depth, exact smoothing inflation), the modal choice is taken by exact
comparison, and the final tree probability is an exact rational. The float
build must reproduce the structure node-for-node and the log-probability to
1e-9. This pins the depth bookkeeping, prior exponents, tie-breaks, child
prior inflation and the leaf-product accumulation jointly.
"""

from fractions import Fraction

import mpmath
import numpy as np

from gmtree import DataSet, DirichletParams, GmtConfig, Leaf, Sprout, build_gmt

mpmath.mp.dps = 60
G = Fraction(99, 100)


def marginal(counts, alpha):
    # prod_c prod_{i<k_c}(a_c+i) / prod_{t<|k|}(p+t), exact
    out = Fraction(1)
    pseudo = sum(alpha)
    for c, k in enumerate(counts):
        for i in range(k):
            out *= alpha[c] + i
    for t in range(sum(counts)):
        out /= pseudo + t
    return out


def prior_trivial(depth):
    return 1 - G ** (1 + depth)


def prior_split(depth, d, n_splits):
    return G ** (1 + depth) / (d * n_splits)


def exact_build(X, y, alpha, C, delta, depth=0, max_depth=None):
    """Returns (node, f): the exact tree and its exact probability."""
    n, d = X.shape
    counts = [int((y == c).sum()) for c in range(C)]

    def leaf():
        post = [a + k for a, k in zip(alpha, counts)]
        return ("leaf", post, n), marginal(counts, alpha) * prior_trivial(depth)

    if (max_depth is not None and depth >= max_depth) or sum(k > 0 for k in counts) < 2:
        return leaf()
    best = ("trivial", marginal(counts, alpha) * prior_trivial(depth))
    for r in range(d):
        order = sorted(range(n), key=lambda i: (X[i, r], i))
        xs = [X[i, r] for i in order]
        ys = [y[i] for i in order]
        n_splits = sum(1 for j in range(n - 1) if xs[j] != xs[j + 1])
        if n_splits == 0:
            continue
        for j in range(n - 1):
            if xs[j] == xs[j + 1]:
                continue
            lower = [sum(1 for t in range(j + 1) if ys[t] == c) for c in range(C)]
            upper = [counts[c] - lower[c] for c in range(C)]
            weight = (
                marginal(lower, alpha)
                * marginal(upper, alpha)
                * prior_split(depth, d, n_splits)
            )
            if weight > best[1]:
                best = ("split", weight, r, (xs[j] + xs[j + 1]) / 2)
    if best[0] == "trivial":
        return leaf()
    _, _, r, threshold = best
    mask = X[:, r] <= threshold
    lower_counts = [int(((y == c) & mask).sum()) for c in range(C)]
    upper_counts = [counts[c] - lower_counts[c] for c in range(C)]
    lower_alpha = [a + delta * k for a, k in zip(alpha, lower_counts)]
    upper_alpha = [a + delta * k for a, k in zip(alpha, upper_counts)]
    lower_node, lower_f = exact_build(X[mask], y[mask], lower_alpha, C, delta, depth + 1, max_depth)
    upper_node, upper_f = exact_build(X[~mask], y[~mask], upper_alpha, C, delta, depth + 1, max_depth)
    return ("sprout", r, threshold, lower_node, upper_node), lower_f * upper_f


def assert_same_structure(node, built):
    if node[0] == "leaf":
        assert isinstance(built, Leaf)
        _, post, support = node
        assert built.support == support
        assert np.allclose(built.posterior.alpha, [float(p) for p in post], rtol=0, atol=1e-12)
        return
    assert isinstance(built, Sprout)
    _, r, threshold, lower, upper = node
    assert built.dim == r and abs(built.threshold - threshold) < 1e-12
    assert_same_structure(lower, built.lower)
    assert_same_structure(upper, built.upper)


def test_float_build_matches_exact_rational_build():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(2, 16))
        d = int(rng.integers(1, 3))
        C = int(rng.integers(2, 4))
        X = rng.integers(0, 4, size=(n, d)).astype(float)
        y = rng.integers(0, C, size=n)
        alpha = [int(a) for a in rng.integers(1, 6, size=C)]
        delta = Fraction(int(rng.integers(0, 3)), 10)
        max_depth = None if rng.random() < 0.8 else int(rng.integers(0, 3))

        node, f = exact_build(X, y, [Fraction(a) for a in alpha], C, delta, max_depth=max_depth)
        tree = build_gmt(
            DataSet(X, y, n_classes=C),
            GmtConfig(
                prior=DirichletParams(np.array(alpha, dtype=float)),
                delta=float(delta),
                max_depth=max_depth,
            ),
        )
        assert_same_structure(node, tree.root)
        exact_log_f = float(
            mpmath.log(mpmath.mpf(f.numerator)) - mpmath.log(mpmath.mpf(f.denominator))
        )
        assert abs(tree.log_prob - exact_log_f) < 1e-9
