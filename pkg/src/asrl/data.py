"""CSV ingestion, seeded train/test splitting and the benchmark dataset registry.

Dataset files are not shipped with the package. Registered datasets are looked
up by file name inside a data directory (``$ASRL_DATA_DIR``, default
``./data``); see ``scripts/fetch_data.py`` and the README for how to obtain
them.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from asrl.errors import DataError, DomainError
from asrl.gbdt import Dataset

__all__ = [
    "DatasetSpec",
    "SplitSpec",
    "registry",
    "get_spec",
    "data_dir",
    "dataset_paths",
    "load_csv",
    "load_registered",
    "split",
    "split_indices",
    "split_hash",
    "ROW_TOLERANCE",
]

log = logging.getLogger(__name__)

ROW_TOLERANCE = 0.02


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    target_column: str
    feature_columns: tuple[str, ...]
    source_note: str = ""
    files: tuple[str, ...] = ()
    expected_rows: int | None = None
    expected_test_target_mean: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))
        object.__setattr__(self, "files", tuple(self.files))
        if not self.feature_columns:
            raise DomainError(f"{self.name}: feature_columns must be nonempty")
        if self.target_column in self.feature_columns:
            raise DomainError(f"{self.name}: target column {self.target_column!r} also listed as a feature")
        if len(set(self.feature_columns)) != len(self.feature_columns):
            raise DomainError(f"{self.name}: duplicate feature columns")


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.test_fraction < 1.0):
            raise DomainError(f"test_fraction must lie in (0, 1), got {self.test_fraction!r}")


def _load_registry() -> dict[str, DatasetSpec]:
    text = resources.files("asrl").joinpath("registry.json").read_text(encoding="utf-8")
    doc = json.loads(text)
    out = {}
    for entry in doc["datasets"]:
        spec = DatasetSpec(**entry)
        out[spec.name] = spec
    return out


_REGISTRY: dict[str, DatasetSpec] | None = None


def registry() -> dict[str, DatasetSpec]:
    """The five benchmark datasets keyed by name (insertion order preserved)."""
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = _load_registry()
    return dict(_REGISTRY)


def get_spec(name: str) -> DatasetSpec:
    reg = registry()
    try:
        return reg[name]
    except KeyError:
        raise DataError(f"unknown dataset {name!r}; registered: {', '.join(reg)}") from None


def data_dir() -> Path:
    return Path(os.environ.get("ASRL_DATA_DIR", "data"))


def dataset_paths(spec: DatasetSpec, root: Path | str | None = None) -> list[Path]:
    root = data_dir() if root is None else Path(root)
    return [root / f for f in spec.files]


def _sniff_delimiter(header_line: str) -> str:
    # semicolon wins only if it actually separates more fields than comma
    return ";" if header_line.count(";") > header_line.count(",") else ","


def _read_table(path: Path, spec: DatasetSpec):
    if not path.is_file():
        raise DataError(f"{spec.name}: data file not found: {path}")
    with open(path, encoding="utf-8-sig", newline="") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise DataError(f"{path}: empty file or missing header row")
        delim = _sniff_delimiter(header_line)
        header = [c.strip() for c in next(csv.reader([header_line], delimiter=delim))]
        missing = [c for c in (spec.target_column, *spec.feature_columns) if c not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(repr(c) for c in missing)}")
        cols = [header.index(c) for c in (*spec.feature_columns, spec.target_column)]
        rows = []
        rejected = 0
        first_bad = None
        for lineno, rec in enumerate(csv.reader(fh, delimiter=delim), start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                vals = [float(rec[i]) for i in cols]
            except (IndexError, ValueError):
                vals = None
            if vals is None or not all(math.isfinite(v) for v in vals):
                rejected += 1
                if first_bad is None:
                    first_bad = lineno
                continue
            rows.append(vals)
    return rows, rejected, first_bad


def load_csv(path, spec: DatasetSpec, check_rows: bool = True) -> Dataset:
    """Load one delimited file, or several with identical headers concatenated.

    Rows with a missing or unparsable cell in a selected column are dropped and
    counted. When ``spec.expected_rows`` is set and ``check_rows`` is true the
    usable row count must fall within 2% of it.
    """
    paths = [Path(p) for p in path] if isinstance(path, (list, tuple)) else [Path(path)]
    rows: list[list[float]] = []
    rejected = 0
    for p in paths:
        r, bad, first_bad = _read_table(p, spec)
        if bad:
            log.warning("%s: rejected %d row(s) with missing/unparsable cells (first at line %d)", p, bad, first_bad)
        rows.extend(r)
        rejected += bad
    if not rows:
        raise DataError(f"{spec.name}: zero usable rows ({rejected} rejected)")
    table = np.asarray(rows, dtype=float)
    n = table.shape[0]
    if check_rows and spec.expected_rows:
        lo = spec.expected_rows * (1 - ROW_TOLERANCE)
        hi = spec.expected_rows * (1 + ROW_TOLERANCE)
        if not lo <= n <= hi:
            raise DataError(
                f"{spec.name}: {n} usable rows, expected {spec.expected_rows} +/- {ROW_TOLERANCE:.0%} "
                f"({rejected} rejected); wrong file revision?"
            )
    return Dataset(table[:, :-1], table[:, -1], spec.feature_columns)


def load_registered(name: str, root: Path | str | None = None) -> Dataset:
    spec = get_spec(name)
    return load_csv(dataset_paths(spec, root), spec)


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise DomainError(f"need at least 2 rows to split, got {n}")
    perm = np.random.default_rng(spec.seed).permutation(n)
    n_train = math.ceil(round(n * (1.0 - spec.test_fraction), 9))
    n_train = min(max(n_train, 1), n - 1)
    return perm[:n_train], perm[n_train:]


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, first ceil(n * (1 - test_fraction)) rows to train."""
    tr, te = split_indices(data.n_rows, spec)
    return data.subset(tr), data.subset(te)


def split_hash(train_idx: Sequence[int], test_idx: Sequence[int]) -> str:
    h = hashlib.sha256()
    h.update(np.asarray(train_idx, dtype=np.int64).tobytes())
    h.update(b"|")
    h.update(np.asarray(test_idx, dtype=np.int64).tobytes())
    return h.hexdigest()[:16]
