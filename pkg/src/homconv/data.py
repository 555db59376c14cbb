"""Tabular dataset loading, fetching, splitting and standardization."""

from __future__ import annotations

import csv
import json
import os
import tempfile
import urllib.request
from dataclasses import dataclass, field

import numpy as np

from .rng import make_rng

OPENML_DESCRIPTION_URL = "https://www.openml.org/api/v1/json/data/{id}"
CACHE_ENV_VAR = "HOMCONV_CACHE"


class DataError(ValueError):
    """Raised for malformed input files or invalid dataset requests."""


@dataclass(frozen=True)
class TabularDataset:
    """A numeric feature matrix (T x n) with contiguous integer labels."""

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    feature_names: list[str]
    source_id: int | None = None

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
            raise DataError(f"feature matrix must be T x n with T,n >= 1, got {features.shape}")
        if not np.all(np.isfinite(features)):
            raise DataError("feature matrix contains non-finite values")
        if labels.shape != (features.shape[0],):
            raise DataError("labels length must equal the number of rows")
        if self.n_classes < 2:
            raise DataError("need at least 2 classes")
        if labels.min() < 0 or labels.max() >= self.n_classes:
            raise DataError("labels must lie in [0, n_classes)")
        if len(self.feature_names) != features.shape[1]:
            raise DataError("feature_names length must equal the number of columns")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SplitIndices:
    """50/25/25 train/validation/test partition of row indices."""

    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int

    def __post_init__(self):
        for name in ("train", "validation", "test"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))


@dataclass(frozen=True)
class StandardizationParams:
    """Per-feature mean / population std, fitted on training rows only."""

    mean: np.ndarray
    std_dev: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "std_dev", np.asarray(self.std_dev, dtype=np.float64))
        if self.mean.shape != self.std_dev.shape:
            raise DataError("mean and std_dev must have the same shape")
        if np.any(self.std_dev < 0):
            raise DataError("std_dev entries must be >= 0")


def encode_labels(raw_labels: list[str]) -> tuple[np.ndarray, list[str]]:
    """Map label strings to 0..C-1 in order of first appearance."""
    classes: list[str] = []
    index: dict[str, int] = {}
    encoded = np.empty(len(raw_labels), dtype=np.int64)
    for i, value in enumerate(raw_labels):
        if value not in index:
            index[value] = len(classes)
            classes.append(value)
        encoded[i] = index[value]
    return encoded, classes


def load_csv(path: str | os.PathLike, label_column: str | int = -1) -> TabularDataset:
    """Load a comma-separated file (header row, '.' decimals) as a dataset.

    `label_column` selects the class column by header name or position;
    every other column must parse as a finite real.
    """
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        rows = [row for row in reader if row]
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one data row")
    header = [name.strip() for name in rows[0]]
    if isinstance(label_column, int):
        label_idx = label_column % len(header)
    else:
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise DataError(f"{path}: no column named {label_column!r}") from None

    feature_names = [name for j, name in enumerate(header) if j != label_idx]
    values = np.empty((len(rows) - 1, len(feature_names)), dtype=np.float64)
    raw_labels: list[str] = []
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r} has {len(row)} cells, expected {len(header)}")
        k = 0
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell == "" or cell == "?":
                raise DataError(f"{path}: missing value at row {r}, column {header[c]!r}")
            if c == label_idx:
                raw_labels.append(cell)
                continue
            try:
                parsed = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: cannot parse {cell!r} at row {r}, column {header[c]!r}"
                ) from None
            if not np.isfinite(parsed):
                raise DataError(f"{path}: non-finite value at row {r}, column {header[c]!r}")
            values[r - 1, k] = parsed
            k += 1
    labels, classes = encode_labels(raw_labels)
    if len(classes) < 2:
        raise DataError(f"{path}: fewer than 2 distinct labels")
    return TabularDataset(values, labels, len(classes), feature_names)


def parse_arff(text: str, source_id: int | None = None) -> TabularDataset:
    """Parse the @attribute/@data ARFF subset: numeric features + one nominal class.

    Rejects datasets with non-numeric features, more than one nominal
    attribute, or missing values.
    """
    attributes: list[tuple[str, str]] = []  # (name, 'numeric' | nominal spec)
    data_lines: list[str] = []
    in_data = False
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            data_lines.append(line)
            continue
        lowered = line.lower()
        if lowered.startswith("@data"):
            in_data = True
        elif lowered.startswith("@attribute"):
            rest = line[len("@attribute"):].strip()
            if rest.startswith(("'", '"')):
                quote = rest[0]
                end = rest.index(quote, 1)
                name, spec = rest[1:end], rest[end + 1:].strip()
            else:
                parts = rest.split(None, 1)
                if len(parts) != 2:
                    raise DataError(f"malformed @attribute line: {line!r}")
                name, spec = parts
            attributes.append((name, spec.strip()))
    if not attributes or not data_lines:
        raise DataError("ARFF payload has no attributes or no data section")

    nominal = [(i, n, s) for i, (n, s) in enumerate(attributes) if s.startswith("{")]
    numeric_kinds = ("numeric", "real", "integer")
    for i, (name, spec) in enumerate(attributes):
        if not spec.startswith("{") and spec.lower() not in numeric_kinds:
            raise DataError(f"attribute {name!r} is non-numeric ({spec}); only numeric features are supported")
    if len(nominal) != 1:
        raise DataError(f"expected exactly one nominal class attribute, found {len(nominal)}")
    class_idx = nominal[0][0]

    feature_names = [n for i, (n, _) in enumerate(attributes) if i != class_idx]
    values = np.empty((len(data_lines), len(feature_names)), dtype=np.float64)
    raw_labels: list[str] = []
    for r, line in enumerate(data_lines):
        cells = next(csv.reader([line]))
        if len(cells) != len(attributes):
            raise DataError(f"ARFF data row {r} has {len(cells)} cells, expected {len(attributes)}")
        k = 0
        for c, cell in enumerate(cells):
            cell = cell.strip().strip("'\"")
            if cell == "?" or cell == "":
                raise DataError(f"missing value at ARFF data row {r}, column {attributes[c][0]!r}")
            if c == class_idx:
                raw_labels.append(cell)
            else:
                values[r, k] = float(cell)
                k += 1
    labels, classes = encode_labels(raw_labels)
    if len(classes) < 2:
        raise DataError("ARFF class attribute has fewer than 2 distinct values")
    return TabularDataset(values, labels, len(classes), feature_names, source_id=source_id)


def _default_http_get(url: str) -> bytes:
    with urllib.request.urlopen(url, timeout=60) as response:
        status = getattr(response, "status", 200)
        if status != 200:
            raise DataError(f"HTTP {status} fetching {url}")
        return response.read()


def _atomic_write(path: str, payload: bytes) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp_path = tempfile.mkstemp(dir=directory)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def fetch_openml(dataset_id: int, cache_dir: str | os.PathLike, http_get=None) -> TabularDataset:
    """Fetch an OpenML dataset by ID, caching the raw ARFF on disk.

    The REST description endpoint supplies the ARFF download URL.  Cached
    files ({id}.arff, {id}.meta.json) are written with atomic renames and
    reused byte-identically on later calls, so repeated fetches work
    without network access.
    """
    if dataset_id <= 0:
        raise DataError(f"invalid OpenML dataset ID {dataset_id}")
    cache_dir = os.fspath(cache_dir)
    os.makedirs(cache_dir, exist_ok=True)
    arff_path = os.path.join(cache_dir, f"{dataset_id}.arff")
    meta_path = os.path.join(cache_dir, f"{dataset_id}.meta.json")

    if not os.path.exists(arff_path):
        get = http_get or _default_http_get
        description = json.loads(get(OPENML_DESCRIPTION_URL.format(id=dataset_id)))
        try:
            url = description["data_set_description"]["url"]
        except (KeyError, TypeError):
            raise DataError(f"OpenML description for {dataset_id} lacks a download URL") from None
        payload = get(url)
        _atomic_write(meta_path, json.dumps(
            {"id": dataset_id, "url": url,
             "name": description["data_set_description"].get("name")},
            indent=2).encode())
        _atomic_write(arff_path, payload)

    with open(arff_path, "r", encoding="utf-8") as handle:
        return parse_arff(handle.read(), source_id=dataset_id)


def split(dataset: TabularDataset, seed: int) -> SplitIndices:
    """Seeded uniform shuffle cut at 50% / 25% / remainder."""
    total = dataset.n_samples
    if total < 4:
        raise DataError(f"need at least 4 samples to split, got {total}")
    order = make_rng(seed).permutation(total)
    n_train = total // 2
    n_val = total // 4
    return SplitIndices(
        train=order[:n_train],
        validation=order[n_train:n_train + n_val],
        test=order[n_train + n_val:],
        seed=seed,
    )


def standardize_fit(dataset: TabularDataset, train_indices) -> StandardizationParams:
    """Per-feature mean and population std over the training rows only."""
    train_indices = np.asarray(train_indices, dtype=np.int64)
    if train_indices.size == 0:
        raise DataError("cannot fit standardization on an empty index list")
    rows = dataset.features[train_indices]
    return StandardizationParams(mean=rows.mean(axis=0), std_dev=rows.std(axis=0))


def standardize_apply(dataset: TabularDataset, params: StandardizationParams) -> TabularDataset:
    """z-score each feature; zero-std features are divided by 1 instead."""
    if params.mean.shape != (dataset.n_features,):
        raise DataError(
            f"params fitted for {params.mean.shape[0]} features, dataset has {dataset.n_features}")
    safe_std = np.where(params.std_dev == 0.0, 1.0, params.std_dev)
    return TabularDataset(
        (dataset.features - params.mean) / safe_std,
        dataset.labels,
        dataset.n_classes,
        dataset.feature_names,
        source_id=dataset.source_id,
    )
