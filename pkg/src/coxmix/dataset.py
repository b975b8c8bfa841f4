"""Loading, standardization, splitting and summary of right-censored
survival datasets.

A dataset holds a feature matrix, an observed time per row (event or
censoring time), a binary event indicator, and an optional group label
used for subgroup evaluation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed input files or contract violations."""


@dataclass(frozen=True)
class SurvivalDataset:
    """Immutable collection of right-censored observations.

    features: (N, d) float array, one row per individual
    times: (N,) nonnegative observed times
    events: (N,) values in {0, 1}; 1 = event observed, 0 = censored
    groups: optional (N,) array of string labels
    standardization: optional (mean, std) pair of (d,) arrays recorded by
        ``standardize`` so the same transform can be applied to held-out data
    """

    features: np.ndarray
    times: np.ndarray
    events: np.ndarray
    feature_names: tuple[str, ...]
    groups: np.ndarray | None = None
    standardization: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.features.ndim != 2:
            raise DatasetError("features must be a 2-d array")
        n = self.features.shape[0]
        if len(self.times) != n or len(self.events) != n:
            raise DatasetError("times/events length must match feature rows")
        if np.any(self.times < 0):
            raise DatasetError("times must be nonnegative")
        if not np.all(np.isin(self.events, (0, 1))):
            raise DatasetError("events must be 0 or 1")
        if len(self.feature_names) != self.features.shape[1]:
            raise DatasetError("feature_names length must equal feature count")

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self):
        return self.features.shape[1]

    def subset(self, idx) -> "SurvivalDataset":
        idx = np.asarray(idx)
        return SurvivalDataset(
            features=self.features[idx],
            times=self.times[idx],
            events=self.events[idx],
            feature_names=self.feature_names,
            groups=None if self.groups is None else self.groups[idx],
            standardization=self.standardization,
        )


@dataclass(frozen=True)
class FoldSplit:
    """Deterministic k-fold assignment; fold sizes differ by at most one."""

    fold_assignments: np.ndarray
    k: int
    seed: int

    def train_idx(self, fold):
        return np.flatnonzero(self.fold_assignments != fold)

    def test_idx(self, fold):
        return np.flatnonzero(self.fold_assignments == fold)


def load_csv(path, time_col, event_col, group_col=None, drop_missing=False,
             drop_columns=()):
    """Load a survival dataset from a comma-separated file with a header row.

    All columns other than the time, event and group columns are treated as
    numeric features. Rows with missing or non-numeric values raise a
    DatasetError naming the offending row unless drop_missing is set, in
    which case they are dropped.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        rows = list(reader)

    for col in (time_col, event_col):
        if col not in header:
            raise DatasetError(f"{path}: missing required column {col!r}")
    if group_col is not None and group_col not in header:
        raise DatasetError(f"{path}: missing group column {group_col!r}")

    skip = {time_col, event_col}
    if group_col is not None:
        skip.add(group_col)
    skip.update(drop_columns)
    feature_names = [c for c in header if c not in skip]
    col_idx = {c: header.index(c) for c in header}

    feats, times, events, groups = [], [], [], []
    for rownum, row in enumerate(rows, start=2):  # 1-based, header is row 1
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {rownum} has {len(row)} fields, expected {len(header)}")
        try:
            t = float(row[col_idx[time_col]])
            e = float(row[col_idx[event_col]])
            x = [float(row[col_idx[c]]) for c in feature_names]
        except ValueError:
            if drop_missing:
                continue
            raise DatasetError(f"{path}: row {rownum} has a missing or non-numeric value") from None
        if any(not np.isfinite(v) for v in x) or not np.isfinite(t):
            if drop_missing:
                continue
            raise DatasetError(f"{path}: row {rownum} has a missing or non-numeric value")
        if e not in (0.0, 1.0):
            raise DatasetError(f"{path}: row {rownum} event value {row[col_idx[event_col]]!r} not in {{0,1}}")
        if t < 0:
            raise DatasetError(f"{path}: row {rownum} has negative time")
        feats.append(x)
        times.append(t)
        events.append(int(e))
        if group_col is not None:
            groups.append(row[col_idx[group_col]])

    if not feats:
        raise DatasetError(f"{path}: no usable rows")
    return SurvivalDataset(
        features=np.asarray(feats, dtype=float),
        times=np.asarray(times, dtype=float),
        events=np.asarray(events, dtype=int),
        feature_names=tuple(feature_names),
        groups=np.asarray(groups, dtype=object) if group_col is not None else None,
    )


def standardize(ds, stats=None):
    """Transform each feature column to zero mean, unit standard deviation.

    Standard deviation uses the N-1 divisor. Constant columns are shifted to
    zero and divided by 1. When ``stats`` is given (from a training split)
    those statistics are applied instead of being re-estimated.
    Returns (standardized dataset, (mean, std)).
    """
    if len(ds) == 0:
        raise DatasetError("cannot standardize an empty dataset")
    if stats is None:
        mean = ds.features.mean(axis=0)
        std = ds.features.std(axis=0, ddof=1) if len(ds) > 1 else np.zeros(ds.n_features)
        std = np.where(std < 1e-12, 1.0, std)
    else:
        mean, std = np.asarray(stats[0], dtype=float), np.asarray(stats[1], dtype=float)
    out = SurvivalDataset(
        features=(ds.features - mean) / std,
        times=ds.times,
        events=ds.events,
        feature_names=ds.feature_names,
        groups=ds.groups,
        standardization=(mean, std),
    )
    return out, (mean, std)


def event_quantiles(ds, probs):
    """Empirical quantiles of the uncensored event times.

    Uses the lower nearest-rank rule (no interpolation): the quantile at p
    is the smallest event time whose empirical CDF reaches p. Censored rows
    never affect the result.
    """
    ev = np.sort(ds.times[ds.events == 1])
    if ev.size == 0:
        raise DatasetError("event_quantiles requires at least one uncensored record")
    out = []
    for p in probs:
        if not 0 < p < 1:
            raise DatasetError(f"quantile prob {p} outside (0,1)")
        rank = max(int(np.ceil(p * ev.size)) - 1, 0)
        out.append(float(ev[rank]))
    return out


def k_fold_split(ds, k, seed):
    """Deterministic balanced k-fold partition of the record indices."""
    n = len(ds)
    if k < 2:
        raise DatasetError("k must be >= 2")
    if k > n:
        raise DatasetError(f"k={k} exceeds dataset size {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    assignments = np.empty(n, dtype=int)
    # cycle 0..k-1 over the permuted order; sizes differ by at most 1
    assignments[perm] = np.arange(n) % k
    return FoldSplit(fold_assignments=assignments, k=k, seed=seed)
