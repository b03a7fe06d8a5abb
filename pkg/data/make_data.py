#!/usr/bin/env python3
"""Regenerate every dataset shipped under data/.

Two kinds of files live here:

* ``ripley/`` — a fresh draw from the published generating distribution of
  Ripley's two-class synthetic problem: each class is an equal mixture of two
  bivariate normals with common covariance 0.03*I; class 0 has centres
  (-0.7, 0.3) and (0.3, 0.3), class 1 has centres (-0.3, 0.7) and (0.4, 0.7).
  250 training points (125 per class) and 1000 test points (500 per class),
  the standard protocol for this set.

* ``surrogate/`` — statistical stand-ins for the real UCI benchmark tables:
  same row counts, column counts, schema shapes and class balances, with a
  synthetic signal of roughly comparable difficulty. They exist so the
  benchmark harness, timing checks and examples run hermetically. They are
  NOT the UCI data and accuracy on them is not comparable with published
  numbers; see uci/README.md for obtaining the real files.

Run from the repo root: ``python3 data/make_data.py``. Seeds are fixed; the
exact bytes also depend on the pinned numpy generator (PCG64), so the
generated CSVs are committed and the script only needs re-running when a
recipe changes.
"""

import json
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent


def write_csv(path: Path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_schema(path: Path, columns):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"columns": columns}, indent=2) + "\n")


def fmt(x: float) -> str:
    return f"{x:.9g}"


# ---------------------------------------------------------------------------
# Figure-style five point example


def make_fivepoint():
    rows = [
        ("0", "0"),
        ("0.5", "0"),
        ("1.25", "0"),
        ("1.5", "1"),
        ("1.75", "1"),
    ]
    write_csv(HERE / "fivepoint.csv", rows)
    write_schema(
        HERE / "fivepoint.schema.json",
        [
            {"name": "x", "role": "numeric"},
            {"name": "label", "role": "target", "classes": ["0", "1"]},
        ],
    )


# ---------------------------------------------------------------------------
# Ripley's synthetic two-class problem

RIPLEY_CENTRES = {
    0: [(-0.7, 0.3), (0.3, 0.3)],
    1: [(-0.3, 0.7), (0.4, 0.7)],
}
RIPLEY_SIGMA = np.sqrt(0.03)


def ripley_draw(n_per_class: int, rng) -> list[tuple[str, str, str]]:
    rows = []
    for label in (0, 1):
        centres = RIPLEY_CENTRES[label]
        picks = rng.integers(0, 2, size=n_per_class)
        points = np.array([centres[p] for p in picks]) + rng.normal(
            0.0, RIPLEY_SIGMA, size=(n_per_class, 2)
        )
        rows.extend((fmt(x), fmt(y), str(label)) for x, y in points)
    return rows


def make_ripley():
    rng = np.random.default_rng(0)
    write_csv(HERE / "ripley" / "train.csv", ripley_draw(125, rng))
    write_csv(HERE / "ripley" / "test.csv", ripley_draw(500, rng))
    write_schema(
        HERE / "ripley" / "schema.json",
        [
            {"name": "xs", "role": "numeric"},
            {"name": "ys", "role": "numeric"},
            {"name": "yc", "role": "target", "classes": ["0", "1"]},
        ],
    )


# ---------------------------------------------------------------------------
# UCI-shaped surrogates


def latent_labels(X, rng, positive_rate, weights=None, flip=0.12):
    """Labels from a random linear latent score: the intercept is set by
    quantile so the class balance matches, then a fraction is flipped."""
    n, d = X.shape
    if weights is None:
        weights = rng.normal(size=d) * (rng.random(d) < 0.7)
        if not weights.any():
            weights[0] = 1.0
    z = (X - X.mean(axis=0)) / (X.std(axis=0) + 1e-9)
    score = z @ weights + 0.4 * z[:, 0] * z[:, min(1, d - 1)]
    cut = np.quantile(score, 1.0 - positive_rate)
    y = (score > cut).astype(int)
    noisy = rng.random(n) < flip
    y[noisy] = rng.integers(0, 2, size=noisy.sum())
    return y


def make_haberman():
    rng = np.random.default_rng(101)
    n = 306
    age = np.clip(np.round(rng.normal(52, 10, n)), 30, 83)
    year = rng.integers(58, 70, size=n).astype(float)
    nodes = np.clip(np.round(rng.lognormal(0.5, 1.3, n)) - 1, 0, 52)
    X = np.column_stack([age, year, nodes])
    y = latent_labels(X, rng, positive_rate=0.265, weights=np.array([0.4, 0.0, 1.6]), flip=0.25)
    rows = [
        (f"{a:.0f}", f"{b:.0f}", f"{c:.0f}", "2" if t else "1")
        for (a, b, c), t in zip(X, y)
    ]
    write_csv(HERE / "surrogate" / "haberman.csv", rows)
    write_schema(
        HERE / "surrogate" / "haberman.schema.json",
        [
            {"name": "age", "role": "numeric"},
            {"name": "year", "role": "numeric"},
            {"name": "nodes", "role": "numeric"},
            {"name": "survival", "role": "target", "classes": ["1", "2"]},
        ],
    )


def make_heart():
    rng = np.random.default_rng(102)
    n = 270
    numeric = {
        "age": np.round(rng.normal(54, 9, n)),
        "sex": (rng.random(n) < 0.68).astype(float),
        "trestbps": np.round(rng.normal(131, 17, n)),
        "chol": np.round(rng.normal(249, 51, n)),
        "fbs": (rng.random(n) < 0.15).astype(float),
        "restecg": rng.integers(0, 3, n).astype(float),
        "thalach": np.round(rng.normal(149, 23, n)),
        "exang": (rng.random(n) < 0.33).astype(float),
        "oldpeak": np.round(np.clip(rng.gamma(1.3, 0.8, n), 0, 6.2), 1),
        "ca": rng.integers(0, 4, n).astype(float),
    }
    cp = rng.integers(1, 5, n)
    slope = rng.integers(1, 4, n)
    thal = rng.choice([3, 6, 7], n)
    X = np.column_stack(list(numeric.values()) + [cp, slope, thal])
    y = latent_labels(X, rng, positive_rate=120 / 270, flip=0.15)
    rows = []
    for i in range(n):
        vals = [f"{numeric[k][i]:g}" for k in numeric]
        vals += [str(cp[i]), str(slope[i]), str(thal[i]), "2" if y[i] else "1"]
        rows.append(tuple(vals))
    write_csv(HERE / "surrogate" / "heart.csv", rows)
    write_schema(
        HERE / "surrogate" / "heart.schema.json",
        [{"name": k, "role": "numeric"} for k in numeric]
        + [
            {"name": "cp", "role": "categorical", "categories": ["1", "2", "3", "4"]},
            {"name": "slope", "role": "categorical", "categories": ["1", "2", "3"]},
            {"name": "thal", "role": "categorical", "categories": ["3", "6", "7"]},
            {"name": "disease", "role": "target", "classes": ["1", "2"]},
        ],
    )


def surrogate_numeric(name, n, d, positive_rate, flip, seed, classes=("0", "1"), int_cols=()):
    rng = np.random.default_rng(seed)
    scales = rng.uniform(0.5, 3.0, d)
    offsets = rng.normal(0, 2, d)
    X = rng.normal(0, 1, size=(n, d)) * scales + offsets
    skewed = rng.random(d) < 0.3
    X[:, skewed] = np.exp(0.5 * X[:, skewed])
    for c in int_cols:
        X[:, c] = np.round(X[:, c] * 10)
    y = latent_labels(X, rng, positive_rate=positive_rate, flip=flip)
    rows = [tuple(fmt(v) for v in row) + (classes[t],) for row, t in zip(X, y)]
    write_csv(HERE / "surrogate" / f"{name}.csv", rows)
    write_schema(
        HERE / "surrogate" / f"{name}.schema.json",
        [{"name": f"f{j + 1}", "role": "numeric"} for j in range(d)]
        + [{"name": "label", "role": "target", "classes": list(classes)}],
    )


def make_gamma():
    # clustered generator: many tight clusters, most leaning strongly to one
    # class (bimodal Beta cluster probabilities), so trees keep resolving
    # finer structure as the sample grows — gives the telescope-shaped set
    # realistic depth growth for the timing/scaling checks
    n, d, k_clusters, flip = 19020, 10, 96, 0.02
    rng = np.random.default_rng(104)
    centers = rng.normal(0, 1.5, size=(k_clusters, d))
    probs = rng.beta(0.28, 0.52, k_clusters)
    assign = rng.integers(0, k_clusters, n)
    spread = rng.uniform(0.2, 0.5, (k_clusters, d))
    X = centers[assign] + rng.normal(0, 1, size=(n, d)) * spread[assign]
    skew = rng.random(d) < 0.3
    X[:, skew] = np.exp(0.6 * X[:, skew])
    y = (rng.random(n) < probs[assign]).astype(int)
    noisy = rng.random(n) < flip
    y[noisy] = rng.integers(0, 2, noisy.sum())
    rows = [tuple(fmt(v) for v in row) + ("h" if t else "g",) for row, t in zip(X, y)]
    write_csv(HERE / "surrogate" / "gamma.csv", rows)
    write_schema(
        HERE / "surrogate" / "gamma.schema.json",
        [{"name": f"f{j + 1}", "role": "numeric"} for j in range(d)]
        + [{"name": "label", "role": "target", "classes": ["g", "h"]}],
    )


def make_manifest():
    import hashlib

    lines = []
    for path in sorted(HERE.rglob("*")):
        if not (path.is_file() and path.suffix in (".csv", ".json")):
            continue
        if "uci" in path.parts and path.suffix == ".csv":
            continue  # user-supplied drop-ins are not shipped
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        lines.append(f"{digest}  {path.relative_to(HERE)}")
    (HERE / "MANIFEST.sha256").write_text("\n".join(lines) + "\n")


def main():
    make_fivepoint()
    make_ripley()
    make_haberman()
    make_heart()
    surrogate_numeric("seismic", 2584, 18, positive_rate=170 / 2584, flip=0.05, seed=103)
    make_gamma()
    surrogate_numeric("credit", 30000, 23, positive_rate=0.2212, flip=0.16, seed=105, int_cols=range(23))
    surrogate_numeric("diabetic", 1151, 19, positive_rate=611 / 1151, flip=0.20, seed=106)
    surrogate_numeric("eeg", 14980, 14, positive_rate=6723 / 14980, flip=0.22, seed=107)
    make_manifest()
    print("datasets written under", HERE)


if __name__ == "__main__":
    main()
