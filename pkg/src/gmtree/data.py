"""Dataset ingestion, dummy encoding, sorted-index bookkeeping and fold splitting.

Everything upstream of the probabilistic machinery lives here. The central
object is :class:`DataSet`: an immutable feature matrix with integer class
outcomes plus, for every feature dimension, the permutation that sorts the
rows by that feature. Split searches never re-sort; subsets of the data are
represented as :class:`SubsetView` objects whose sorted orders are obtained
by stable filtering of the parent's orders.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence, Union

import numpy as np
from numba import njit

from .errors import DataFormatError

ROLE_NUMERIC = "numeric"
ROLE_CATEGORICAL = "categorical"
ROLE_TARGET = "target"

_ROLES = (ROLE_NUMERIC, ROLE_CATEGORICAL, ROLE_TARGET)


@dataclass(frozen=True)
class SchemaSpec:
    """Declarative description of a CSV file's columns.

    ``columns`` is the ordered list of ``(name, role)`` pairs with roles
    ``numeric``, ``categorical`` or ``target`` (exactly one target).
    ``category_maps`` gives, for each categorical column, the ordered list of
    its admissible category strings; each category becomes one 0/1 indicator
    column in the encoded feature matrix. ``class_labels`` is the ordered
    list of raw target tokens; the encoded class of a row is the index of its
    token in this list.
    """

    columns: tuple[tuple[str, str], ...]
    category_maps: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    class_labels: tuple[str, ...] = ()
    has_header: bool = False

    def __post_init__(self):
        targets = [name for name, role in self.columns if role == ROLE_TARGET]
        if len(targets) != 1:
            raise DataFormatError(
                f"schema must declare exactly one target column, found {len(targets)}"
            )
        for name, role in self.columns:
            if role not in _ROLES:
                raise DataFormatError(f"column {name!r}: unknown role {role!r}")
            if role == ROLE_CATEGORICAL:
                cats = self.category_maps.get(name)
                if not cats:
                    raise DataFormatError(f"categorical column {name!r} has no category map")
                if len(set(cats)) != len(cats):
                    raise DataFormatError(f"categorical column {name!r} has duplicate categories")
        if len(self.class_labels) < 2:
            raise DataFormatError("schema must list at least two class labels")
        if len(set(self.class_labels)) != len(self.class_labels):
            raise DataFormatError("duplicate class labels")

    # -- derived views ----------------------------------------------------

    @property
    def target_name(self) -> str:
        return next(name for name, role in self.columns if role == ROLE_TARGET)

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    def feature_columns(self) -> list[tuple[str, str]]:
        return [(n, r) for n, r in self.columns if r != ROLE_TARGET]

    def encoded_width(self) -> int:
        width = 0
        for name, role in self.feature_columns():
            width += len(self.category_maps[name]) if role == ROLE_CATEGORICAL else 1
        return width

    def encoded_feature_names(self) -> tuple[str, ...]:
        """Names of the encoded columns; indicator columns read ``col=cat``."""
        names: list[str] = []
        for name, role in self.feature_columns():
            if role == ROLE_CATEGORICAL:
                names.extend(f"{name}={cat}" for cat in self.category_maps[name])
            else:
                names.append(name)
        return tuple(names)

    def source_columns(self) -> tuple[str, ...]:
        """For each encoded column, the raw column it was derived from."""
        out: list[str] = []
        for name, role in self.feature_columns():
            reps = len(self.category_maps[name]) if role == ROLE_CATEGORICAL else 1
            out.extend([name] * reps)
        return tuple(out)

    # -- (de)serialisation -------------------------------------------------

    @classmethod
    def from_dict(cls, spec: Mapping) -> "SchemaSpec":
        try:
            raw_cols = spec["columns"]
        except KeyError:
            raise DataFormatError("schema is missing the 'columns' list")
        columns: list[tuple[str, str]] = []
        category_maps: dict[str, tuple[str, ...]] = {}
        class_labels: tuple[str, ...] = ()
        for col in raw_cols:
            name, role = col["name"], col["role"]
            columns.append((name, role))
            if role == ROLE_CATEGORICAL:
                category_maps[name] = tuple(str(c) for c in col.get("categories", ()))
            if role == ROLE_TARGET:
                class_labels = tuple(str(c) for c in col.get("classes", ()))
        return cls(
            columns=tuple(columns),
            category_maps=category_maps,
            class_labels=class_labels,
            has_header=bool(spec.get("has_header", False)),
        )

    def to_dict(self) -> dict:
        cols = []
        for name, role in self.columns:
            entry: dict = {"name": name, "role": role}
            if role == ROLE_CATEGORICAL:
                entry["categories"] = list(self.category_maps[name])
            if role == ROLE_TARGET:
                entry["classes"] = list(self.class_labels)
            cols.append(entry)
        return {"columns": cols, "has_header": self.has_header}

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        """Stable hash used to pair models with compatible input data."""
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]


def load_schema(path: Union[str, Path]) -> SchemaSpec:
    """Read a schema config (JSON, see repo README for the grammar)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataFormatError(f"cannot read schema {path}: {exc}") from exc
    try:
        return SchemaSpec.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"schema {path} is not valid JSON: {exc}") from exc


class DataSet:
    """Immutable encoded dataset plus per-dimension sorted row orders.

    ``sorted_indices[r]`` is the permutation of ``0..n-1`` that orders the
    rows by feature ``r`` ascending, ties broken by row index (stable), so
    every build over the same data is deterministic. Instances are safe to
    share across threads; all arrays are marked read-only.
    """

    def __init__(
        self,
        features: np.ndarray,
        outcomes: np.ndarray,
        n_classes: int | None = None,
        schema: SchemaSpec | None = None,
        feature_names: Sequence[str] | None = None,
    ):
        features = np.ascontiguousarray(features, dtype=np.float64)
        outcomes = np.asarray(outcomes, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] < 1:
            raise DataFormatError("features must be a non-empty 2-D matrix")
        if outcomes.shape != (features.shape[0],):
            raise DataFormatError("outcomes length does not match feature rows")
        if not np.all(np.isfinite(features)):
            raise DataFormatError("features contain non-finite values")
        if outcomes.min() < 0:
            raise DataFormatError("outcomes must be non-negative class indices")
        if n_classes is None:
            n_classes = int(outcomes.max()) + 1
        if n_classes < 2:
            raise DataFormatError("training data needs at least two classes")
        if outcomes.max() >= n_classes:
            raise DataFormatError("outcome label out of range for declared class count")

        self.features = features
        self.outcomes = outcomes
        self.n, self.d = features.shape
        self.C = int(n_classes)
        self.schema = schema
        if feature_names is None and schema is not None:
            feature_names = schema.encoded_feature_names()
        self.feature_names = tuple(feature_names) if feature_names is not None else None
        # dimension-major copy: the split scans walk one feature at a time
        self.features_by_dim = np.ascontiguousarray(features.T)
        self.sorted_indices = np.empty((self.d, self.n), dtype=np.intp)
        for r in range(self.d):
            self.sorted_indices[r] = np.argsort(features[:, r], kind="stable")
        for arr in (self.features, self.outcomes, self.features_by_dim, self.sorted_indices):
            arr.setflags(write=False)

    def full_view(self) -> "SubsetView":
        return SubsetView(self, np.arange(self.n, dtype=np.intp), self.sorted_indices)


class SubsetView:
    """A subset of a :class:`DataSet`'s rows with restricted sorted orders.

    The restricted orders are the parent's orders with non-members deleted
    (stable filtering, never a re-sort), which keeps carving a split out of a
    node linear in the node size per dimension.
    """

    def __init__(self, dataset: DataSet, rows: np.ndarray, sorted_rows: np.ndarray):
        self.dataset = dataset
        self.rows = rows
        self.sorted_rows = sorted_rows  # (d, len(rows)) global row ids

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def d(self) -> int:
        return self.dataset.d

    @property
    def C(self) -> int:
        return self.dataset.C

    def outcomes(self) -> np.ndarray:
        return self.dataset.outcomes[self.rows]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.outcomes(), minlength=self.C)

    def restrict(self, member: np.ndarray) -> "SubsetView":
        """New view keeping the rows flagged in the global bool mask."""
        keep = member[self.sorted_rows]
        rows = self.rows[member[self.rows]]
        sorted_rows = self.sorted_rows[keep].reshape(self.dataset.d, len(rows))
        return SubsetView(self.dataset, rows, sorted_rows)

    def split(self, dim: int, threshold: float) -> tuple["SubsetView", "SubsetView"]:
        """Partition into (lower: x[dim] <= threshold, upper: rest)."""
        column = self.dataset.features_by_dim[dim]
        lower_rows, lower_sorted, upper_rows, upper_sorted = _split_orders(
            self.rows, self.sorted_rows, column, threshold
        )
        return (
            SubsetView(self.dataset, lower_rows, lower_sorted),
            SubsetView(self.dataset, upper_rows, upper_sorted),
        )


@njit(cache=True)
def _split_orders(rows, sorted_rows, column, threshold):
    # one pass per dimension: stable filtering of the parent's orders into
    # the two sides of `column[row] <= threshold`
    m = rows.shape[0]
    d = sorted_rows.shape[0]
    n_lower = 0
    for i in range(m):
        if column[rows[i]] <= threshold:
            n_lower += 1
    lower_rows = np.empty(n_lower, dtype=np.intp)
    upper_rows = np.empty(m - n_lower, dtype=np.intp)
    a = 0
    b = 0
    for i in range(m):
        row = rows[i]
        if column[row] <= threshold:
            lower_rows[a] = row
            a += 1
        else:
            upper_rows[b] = row
            b += 1
    lower_sorted = np.empty((d, n_lower), dtype=np.intp)
    upper_sorted = np.empty((d, m - n_lower), dtype=np.intp)
    for r in range(d):
        a = 0
        b = 0
        for i in range(m):
            row = sorted_rows[r, i]
            if column[row] <= threshold:
                lower_sorted[r, a] = row
                a += 1
            else:
                upper_sorted[r, b] = row
                b += 1
    return lower_rows, lower_sorted, upper_rows, upper_sorted


def as_view(data: Union[DataSet, SubsetView]) -> SubsetView:
    return data.full_view() if isinstance(data, DataSet) else data


def make_subset(
    parent: Union[DataSet, SubsetView],
    member: Union[np.ndarray, Callable[[np.ndarray], bool]],
) -> SubsetView:
    """Restrict ``parent`` to the rows selected by ``member``.

    ``member`` is either a boolean mask over the underlying dataset's rows or
    a predicate called with each member row's feature vector. Selecting zero
    rows yields a valid empty view.
    """
    view = as_view(parent)
    if callable(member):
        mask = np.zeros(view.dataset.n, dtype=bool)
        feats = view.dataset.features
        for i in view.rows:
            mask[i] = bool(member(feats[i]))
    else:
        mask = np.asarray(member, dtype=bool)
        if mask.shape != (view.dataset.n,):
            raise DataFormatError("member mask length must equal the dataset row count")
    return view.restrict(mask)


# ---------------------------------------------------------------------------
# CSV loading


def encode_row(
    row: Sequence[str],
    schema: SchemaSpec,
    require_target: bool = True,
    context: str = "row",
) -> tuple[list[float], int | None]:
    """Encode one CSV record under ``schema``.

    Returns (encoded feature values, class index or None). Rows may omit the
    target column when ``require_target`` is false. Raises
    :class:`DataFormatError` naming the offending column otherwise.
    """
    width_with_target = len(schema.columns)
    if len(row) == width_with_target:
        row_has_target = True
    elif len(row) == width_with_target - 1 and not require_target:
        row_has_target = False
    else:
        raise DataFormatError(
            f"{context}: expected {width_with_target} fields, got {len(row)}"
        )
    encoded: list[float] = []
    outcome: int | None = None
    cursor = 0
    for name, role in schema.columns:
        if role == ROLE_TARGET:
            if row_has_target:
                token = row[cursor].strip()
                cursor += 1
                try:
                    outcome = schema.class_labels.index(token)
                except ValueError:
                    raise DataFormatError(
                        f"{context}, column {name!r}: unknown class label {token!r}"
                    ) from None
            continue
        token = row[cursor].strip()
        cursor += 1
        if role == ROLE_NUMERIC:
            try:
                value = float(token)
            except ValueError:
                raise DataFormatError(
                    f"{context}, column {name!r}: cannot parse {token!r} as a number"
                ) from None
            if not np.isfinite(value):
                raise DataFormatError(f"{context}, column {name!r}: non-finite value")
            encoded.append(value)
        else:
            cats = schema.category_maps[name]
            try:
                j = cats.index(token)
            except ValueError:
                raise DataFormatError(
                    f"{context}, column {name!r}: unknown category {token!r}"
                ) from None
            block = [0.0] * len(cats)
            block[j] = 1.0
            encoded.extend(block)
    return encoded, outcome


def iter_csv_records(path: Union[str, Path], schema: SchemaSpec):
    """Yield (lineno, raw record) for each data row, honouring the header."""
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        for lineno, row in enumerate(reader, start=1):
            if schema.has_header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            yield lineno, row


def _parse_rows(path: Union[str, Path], schema: SchemaSpec, require_target: bool):
    features: list[list[float]] = []
    outcomes: list[int] = []
    has_target = True
    for lineno, row in iter_csv_records(path, schema):
        encoded, outcome = encode_row(
            row, schema, require_target=require_target, context=f"{path}: row {lineno}"
        )
        features.append(encoded)
        if outcome is None:
            has_target = False
        else:
            outcomes.append(outcome)

    if not features:
        raise DataFormatError(f"{path}: empty dataset")
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(outcomes, dtype=np.int64) if has_target and outcomes else None
    if require_target and y is None:
        raise DataFormatError(f"{path}: target column missing")
    return X, y


def load_rows(path, schema: SchemaSpec, require_target: bool = True):
    """Parse a CSV under ``schema`` into (features, outcomes-or-None).

    Rows may omit the trailing target column when ``require_target`` is
    false (prediction inputs). Categorical values must appear in the schema's
    category maps; anything unparseable raises :class:`DataFormatError` with
    the offending row and column.
    """
    return _parse_rows(path, schema, require_target)


def load_csv(path, schema: SchemaSpec) -> DataSet:
    """Load a training CSV into a :class:`DataSet` (see :func:`load_rows`)."""
    X, y = _parse_rows(path, schema, require_target=True)
    return DataSet(X, y, n_classes=schema.n_classes, schema=schema)


def decode_categories(features: np.ndarray, schema: SchemaSpec) -> dict[str, list[str]]:
    """Recover each categorical column's categories from dummy blocks."""
    out: dict[str, list[str]] = {}
    offset = 0
    for name, role in schema.feature_columns():
        if role == ROLE_CATEGORICAL:
            cats = schema.category_maps[name]
            block = features[:, offset : offset + len(cats)]
            out[name] = [cats[j] for j in np.argmax(block, axis=1)]
            offset += len(cats)
        else:
            offset += 1
    return out


# ---------------------------------------------------------------------------
# Fold assignment

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Tiny fully-specified PRNG (SplitMix64) so fold shuffles reproduce
    bit-for-bit on any platform and library version."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        # rejection sampling keeps the draw unbiased
        limit = _MASK64 + 1 - ((_MASK64 + 1) % bound)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % bound


@dataclass(frozen=True)
class FoldPlan:
    """Deterministic k-fold assignment: ``assignment[i]`` is row i's fold."""

    k: int
    seed: int
    assignment: np.ndarray

    @property
    def n(self) -> int:
        return len(self.assignment)

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def train_mask(self, fold: int) -> np.ndarray:
        return self.assignment != fold

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k)

    def to_text(self) -> str:
        return "\n".join(str(int(f)) for f in self.assignment) + "\n"

    @classmethod
    def from_text(cls, text: str, k: int, seed: int) -> "FoldPlan":
        labels = np.array([int(line) for line in text.split()], dtype=np.int64)
        return cls(k=k, seed=seed, assignment=labels)


def kfold_indices(n: int, k: int, seed: int) -> FoldPlan:
    """Shuffled fold labels for ``n`` rows: Fisher-Yates under SplitMix64,
    folds dealt round-robin so sizes differ by at most one."""
    if k < 2 or k > n:
        raise DataFormatError(f"fold count k={k} must satisfy 2 <= k <= n={n}")
    rng = SplitMix64(seed)
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    assignment = np.empty(n, dtype=np.int64)
    assignment[perm] = np.arange(n) % k
    out = FoldPlan(k=k, seed=seed, assignment=assignment)
    out.assignment.setflags(write=False)
    return out
