"""CSV ingestion, stratified splits, OpenML download and the dataset-backed problem."""

from __future__ import annotations

import hashlib
import io
import json
import logging
import os
import tempfile
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..configspace import ConfigSpace
from ..ensembles import check_prediction_matrix, classification_error
from ..errors import DatasetError, ValidationError
from ..learners import builtin_space, fit_learner
from ..synthetic import Evaluation

log = logging.getLogger(__name__)

OPENML_URL_ENV = "DIVBO_OPENML_URL"
DEFAULT_OPENML_URL = "https://www.openml.org"
SPLIT_FRACTIONS = (0.6, 0.2, 0.2)


@dataclass
class Dataset:
    """Numeric features, integer labels and a seeded train/val/test split."""

    X: np.ndarray
    y: np.ndarray
    columns: list[str]
    classes: list[str]
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    name: str = "dataset"
    meta: dict = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def part(self, which: str):
        idx = {"train": self.train, "val": self.val, "test": self.test}[which]
        return self.X[idx], self.y[idx]

    def describe(self) -> dict:
        return {
            "kind": "dataset",
            "name": self.name,
            "n_rows": int(self.y.size),
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "split": [int(self.train.size), int(self.val.size), int(self.test.size)],
            **self.meta,
        }


def _allocate(count: int, fractions) -> np.ndarray:
    # Largest-remainder apportioning of one class's rows over the three parts.
    raw = np.asarray(fractions) * count
    out = np.floor(raw).astype(np.int64)
    rest = count - out.sum()
    order = np.argsort(-(raw - out), kind="stable")
    out[order[:rest]] += 1
    return out


def stratified_split(y, fractions=SPLIT_FRACTIONS, seed=0):
    """Disjoint (train, val, test) index arrays, stratified by label.

    Each class is shuffled and cut by the fractions; leftover rows go to
    the parts with the largest fractional remainder.  Returned indices are
    sorted.
    """
    y = np.asarray(y)
    if not np.isclose(sum(fractions), 1.0):
        raise ValidationError("split fractions must sum to 1")
    rng = np.random.default_rng(seed)
    parts: list[list[int]] = [[], [], []]
    for label in np.unique(y):
        rows = np.flatnonzero(y == label)
        rng.shuffle(rows)
        counts = _allocate(rows.size, fractions)
        cuts = np.cumsum(counts)[:-1]
        for k, chunk in enumerate(np.split(rows, cuts)):
            parts[k].extend(chunk.tolist())
    return tuple(np.sort(np.asarray(p, dtype=np.int64)) for p in parts)


def ingest_csv(path, target_column: str, seed: int = 0, name: str | None = None) -> Dataset:
    """Read a headed CSV into a split :class:`Dataset`.

    Columns that parse fully as numbers stay numeric; any other column is
    one-hot expanded (one indicator per distinct value).  Rows with missing
    values are dropped and the count is logged.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError("missing_file", f"no such file: {path}")
    try:
        frame = pd.read_csv(path, skipinitialspace=True, na_values=["?"])
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DatasetError("malformed_csv", f"cannot parse {path}: {exc}") from exc
    if target_column not in frame.columns:
        raise DatasetError("missing_column", f"missing target column {target_column!r}")

    before = len(frame)
    frame = frame.dropna()
    dropped = before - len(frame)
    if dropped:
        log.warning("dropped %d row(s) with missing or unparseable values from %s", dropped, path)

    target = frame.pop(target_column).astype(str)
    classes = sorted(target.unique())
    if len(classes) < 2:
        raise DatasetError("single_class", f"target {target_column!r} has fewer than 2 classes")
    y = target.map({c: i for i, c in enumerate(classes)}).to_numpy(np.int64)

    blocks, columns = [], []
    for col in frame.columns:
        values = frame[col]
        numeric = pd.to_numeric(values, errors="coerce")
        if numeric.notna().all():
            blocks.append(numeric.to_numpy(np.float64)[:, None])
            columns.append(str(col))
        else:
            levels = sorted(values.astype(str).unique())
            blocks.append(np.stack([(values.astype(str) == v).to_numpy(np.float64) for v in levels], axis=1))
            columns.extend(f"{col}={v}" for v in levels)
    X = np.hstack(blocks) if blocks else np.zeros((len(y), 0))
    train, val, test = stratified_split(y, seed=seed)
    return Dataset(
        X, y, columns, classes, train, val, test,
        name=name or path.stem,
        meta={"dropped_rows": int(dropped), "target": target_column, "seed": seed},
    )


class DatasetProblem:
    """Evaluate configurations by training on the train split of a dataset.

    Features are standardised with training-split statistics.  ``evaluate``
    returns validation and test class-probability matrices.
    """

    def __init__(self, dataset: Dataset, space: ConfigSpace | None = None):
        self.dataset = dataset
        self.space = space if space is not None else builtin_space()
        self.n_classes = dataset.n_classes
        X_tr, self._y_tr = dataset.part("train")
        mu = X_tr.mean(axis=0)
        sd = X_tr.std(axis=0)
        sd[sd == 0] = 1.0
        scale = lambda Z: (Z - mu) / sd  # noqa: E731
        self._X_tr = scale(X_tr)
        X_va, self.val_labels = dataset.part("val")
        X_te, self.test_labels = dataset.part("test")
        self._X_va = scale(X_va)
        self._X_te = scale(X_te)

    def evaluate(self, config, seed=None) -> Evaluation:
        config = self.space.validate(config)
        predict = fit_learner(config, self._X_tr, self._y_tr, self.n_classes, 0 if seed is None else seed)
        P = check_prediction_matrix(predict(self._X_va), self.n_classes)
        T = check_prediction_matrix(predict(self._X_te), self.n_classes)
        return Evaluation(P, classification_error(P, self.val_labels), T)

    def describe(self) -> dict:
        return self.dataset.describe()


# ---------------------------------------------------------------- OpenML


def openml_base_url() -> str:
    return os.environ.get(OPENML_URL_ENV, DEFAULT_OPENML_URL).rstrip("/")


def _get(url: str, timeout: float) -> bytes:
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            return resp.read()
    except urllib.error.HTTPError as exc:
        if exc.code in (404, 412):
            raise DatasetError("unknown_id", f"{url}: HTTP {exc.code}") from exc
        raise DatasetError("network_error", f"{url}: HTTP {exc.code}") from exc
    except (urllib.error.URLError, OSError) as exc:
        raise DatasetError("network_error", f"{url}: {exc}") from exc


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _checksum_path(out: Path) -> Path:
    return out.with_name(out.name + ".sha256")


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def fetch_openml(dataset_id: int, out_path, timeout: float = 60.0) -> Path:
    """Download an OpenML dataset as CSV.

    Metadata comes from ``/api/v1/json/data/{id}`` and the table from
    ``/data/get_csv/{file_id}`` under the base URL in ``$DIVBO_OPENML_URL``.
    The CSV and a ``.sha256`` sidecar are written via temporary files and
    renamed, so a failure never leaves a partial file.  If the file already
    matches its sidecar nothing is downloaded.
    """
    out = Path(out_path)
    sidecar = _checksum_path(out)
    if out.is_file() and sidecar.is_file():
        if _sha256(out.read_bytes()) == sidecar.read_text().strip():
            return out
    base = openml_base_url()
    raw = _get(f"{base}/api/v1/json/data/{int(dataset_id)}", timeout)
    try:
        desc = json.loads(raw)["data_set_description"]
        file_id = int(desc["file_id"])
        target = desc.get("default_target_attribute")
    except (ValueError, KeyError, TypeError) as exc:
        raise DatasetError("malformed_payload", f"bad metadata for id {dataset_id}") from exc
    body = _get(f"{base}/data/get_csv/{file_id}", timeout)
    try:
        frame = pd.read_csv(io.BytesIO(body))
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DatasetError("malformed_payload", f"bad CSV for id {dataset_id}") from exc
    if frame.shape[0] == 0 or frame.shape[1] < 2:
        raise DatasetError("malformed_payload", f"empty table for id {dataset_id}")
    if target and target not in frame.columns:
        raise DatasetError("malformed_payload", f"target {target!r} not in table for id {dataset_id}")
    out.parent.mkdir(parents=True, exist_ok=True)
    data = frame.to_csv(index=False).encode()
    _atomic_write(out, data)
    _atomic_write(sidecar, (_sha256(data) + "\n").encode())
    log.info("wrote %s (%d rows, target %s)", out, frame.shape[0], target)
    return out


# ------------------------------------------------- bundled offline datasets

BUNDLED = ("breast_cancer", "wine", "digits", "iris")


def write_bundled_csv(name: str, out_path) -> Path:
    """Write one of scikit-learn's bundled datasets as a CSV with a ``class`` column."""
    from sklearn import datasets

    loaders = {
        "breast_cancer": datasets.load_breast_cancer,
        "wine": datasets.load_wine,
        "digits": datasets.load_digits,
        "iris": datasets.load_iris,
    }
    if name not in loaders:
        raise ValidationError(f"unknown bundled dataset {name!r}; choose from {BUNDLED}")
    bunch = loaders[name]()
    cols = [f"f{i}" for i in range(bunch.data.shape[1])]
    frame = pd.DataFrame(bunch.data, columns=cols)
    frame["class"] = bunch.target
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(out, frame.to_csv(index=False).encode())
    return out
