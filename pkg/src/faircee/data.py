"""Dataset container, CSV ingestion and validation."""
from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError, ValidationError


class Task(str, enum.Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Features ``X`` (sensitive column excluded), binary ``s``, labels ``y``.

    ``explanatory_idx`` lists the columns of ``X`` treated as explanatory
    features; all other columns are non-explanatory. ``intercept`` records
    whether models should append a column of ones to ``X``.
    """

    X: np.ndarray
    s: np.ndarray
    y: np.ndarray
    explanatory_idx: tuple = ()
    task: Task = Task.REGRESSION
    intercept: bool = True
    feature_names: tuple = field(default=())

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValidationError("X must be a 2-D matrix")
        N, d = X.shape
        if N < 2 or d < 1:
            raise ValidationError(f"need N >= 2 and d >= 1, got N={N}, d={d}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("X contains non-finite entries")
        s = np.asarray(self.s, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if s.shape[0] != N or y.shape[0] != N:
            raise ValidationError("X, s and y must have the same number of rows")
        if not np.all((s == 0) | (s == 1)):
            raise ValidationError("sensitive values must be 0 or 1")
        if s.min() == s.max():
            raise ValidationError("sensitive feature is one-sided; both groups must be present")
        if not np.all(np.isfinite(y)):
            raise ValidationError("labels contain non-finite entries")
        task = Task(self.task)
        if task is Task.CLASSIFICATION and not np.all((y == 0) | (y == 1)):
            raise ValidationError("classification labels must be 0 or 1")
        idx = tuple(sorted({int(i) for i in self.explanatory_idx}))
        if any(i < 0 or i >= d for i in idx):
            raise ValidationError(f"explanatory indices must lie in [0, {d})")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(d))
        if len(names) != d:
            raise ValidationError("feature_names length does not match X")
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "s", _readonly(s))
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "explanatory_idx", idx)
        object.__setattr__(self, "task", task)
        object.__setattr__(self, "feature_names", names)

    @property
    def N(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def X_e(self):
        return self.X[:, list(self.explanatory_idx)]

    def design(self, X=None):
        """Model matrix: ``X`` plus a trailing ones column if ``intercept``."""
        return design_matrix(self.X if X is None else X, self.intercept)

    def require_explanatory(self):
        if not self.explanatory_idx:
            raise ValidationError("propensity-based methods need at least one explanatory column")


def design_matrix(X, intercept):
    X = np.asarray(X, dtype=float)
    if not intercept:
        return X
    return np.hstack([X, np.ones((X.shape[0], 1))])


def index_sets(s):
    """Return ``(I_plus, I_minus)`` as integer index arrays."""
    s = np.asarray(s)
    return np.flatnonzero(s == 1), np.flatnonzero(s == 0)


@dataclass(frozen=True)
class CsvConfig:
    sensitive: str
    label: str
    explanatory: tuple = ()
    task: Task = Task.REGRESSION
    intercept: bool = True

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                sensitive=str(d["sensitive"]),
                label=str(d["label"]),
                explanatory=tuple(d.get("explanatory", ())),
                task=Task(d.get("task", "regression")),
                intercept=bool(d.get("intercept", True)),
            )
        except KeyError as e:
            raise ConfigError(f"config is missing key {e.args[0]!r}") from None
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def to_dict(self):
        return {
            "sensitive": self.sensitive,
            "label": self.label,
            "explanatory": list(self.explanatory),
            "task": self.task.value,
            "intercept": self.intercept,
        }


def load_config(path):
    with open(path, encoding="utf-8") as f:
        try:
            return CsvConfig.from_dict(json.load(f))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None


def _to_float(text, row, col):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(row, col, text) from None
    if not math.isfinite(v):
        raise ParseError(row, col, text)
    return v


def load_csv(path, config):
    """Read a CSV file into a validated :class:`Dataset`.

    ``config`` is a :class:`CsvConfig` or a dict with the same keys. Feature
    columns keep their CSV order; the sensitive and label columns are removed.
    Rows are numbered from 1 for the first data line in error messages.
    """
    if not isinstance(config, CsvConfig):
        config = CsvConfig.from_dict(config)
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigError(f"{path}: empty file") from None
        rows = [r for r in reader if r]

    for name in (config.sensitive, config.label, *config.explanatory):
        if name not in header:
            raise ConfigError(f"column {name!r} not found in {path}")
    if config.sensitive == config.label:
        raise ConfigError("sensitive and label columns must differ")
    feature_cols = [j for j, h in enumerate(header) if h not in (config.sensitive, config.label)]
    if not feature_cols:
        raise ConfigError("no feature columns left after removing sensitive and label")
    feature_names = [header[j] for j in feature_cols]
    if any(name in (config.sensitive, config.label) for name in config.explanatory):
        raise ConfigError("explanatory columns cannot be the sensitive or label column")

    values = np.empty((len(rows), len(header)))
    for i, r in enumerate(rows, start=1):
        if len(r) != len(header):
            raise ParseError(i, None, ",".join(r))
        for j, cell in enumerate(r):
            values[i - 1, j] = _to_float(cell.strip(), i, header[j])

    s = values[:, header.index(config.sensitive)]
    bad = np.flatnonzero((s != 0) & (s != 1))
    if bad.size:
        raise ValidationError(
            f"sensitive column {config.sensitive!r} has non-binary value {s[bad[0]]!r} at row {bad[0] + 1}"
        )
    return Dataset(
        X=values[:, feature_cols],
        s=s,
        y=values[:, header.index(config.label)],
        explanatory_idx=tuple(feature_names.index(n) for n in config.explanatory),
        task=config.task,
        intercept=config.intercept,
        feature_names=tuple(feature_names),
    )


def save_csv(dataset, path, sensitive="s", label="y"):
    """Write ``dataset`` as CSV with features, then sensitive, then label.

    Floats are written at 17 significant digits so a reload is lossless.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([*dataset.feature_names, sensitive, label])
        for x, s, y in zip(dataset.X, dataset.s, dataset.y):
            w.writerow([*(f"{v:.17g}" for v in x), f"{s:.17g}", f"{y:.17g}"])
    return path


def csv_config_for(dataset, sensitive="s", label="y"):
    return CsvConfig(
        sensitive=sensitive,
        label=label,
        explanatory=tuple(dataset.feature_names[i] for i in dataset.explanatory_idx),
        task=dataset.task,
        intercept=dataset.intercept,
    )
