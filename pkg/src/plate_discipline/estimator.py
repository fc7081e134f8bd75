"""League swing probability from nearest training balls.

One index per pitch category. Features are standardized with that
category's own training mean and sample standard deviation (or left raw),
and the swing probability of a query ball is the fraction of swings among
its k nearest training balls.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd

from . import scoring
from .errors import (
    ConfigError,
    DegenerateScaleError,
    IndexFormatError,
    InsufficientDataError,
    ParameterError,
    SchemaError,
)
from .ingest import CATEGORIES, FEATURE_COLUMNS, PitchCategory
from .kdtree import KDTree

DEFAULT_K = 200
K_VALUES = (10, 100, 200, 500)
SCALING_MODES = ("zscore", "raw")
QUERY_CHUNK = 16_384

INDEX_MAGIC = b"PDKNNIDX"
INDEX_VERSION = 1


@dataclass(frozen=True)
class FeatureScaler:
    mean: np.ndarray
    std: np.ndarray
    mode: str = "zscore"

    def transform(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if self.mode == "raw":
            return np.ascontiguousarray(x)
        return np.ascontiguousarray((x - self.mean) / self.std)

    @classmethod
    def identity(cls, dim: int = len(FEATURE_COLUMNS)) -> "FeatureScaler":
        return cls(mean=np.zeros(dim), std=np.ones(dim), mode="raw")

    def __eq__(self, other):
        return (
            isinstance(other, FeatureScaler)
            and self.mode == other.mode
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.std, other.std)
        )


def feature_matrix(balls) -> np.ndarray:
    if isinstance(balls, pd.DataFrame):
        missing = [c for c in FEATURE_COLUMNS if c not in balls.columns]
        if missing:
            raise SchemaError(f"missing feature column(s): {', '.join(missing)}")
        x = balls.loc[:, list(FEATURE_COLUMNS)].to_numpy(dtype=np.float64)
    else:
        x = np.asarray(balls, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
    if x.ndim != 2 or x.shape[1] != len(FEATURE_COLUMNS):
        raise ParameterError(f"feature matrix must have {len(FEATURE_COLUMNS)} columns")
    if not np.isfinite(x).all():
        raise SchemaError("feature matrix contains missing or non-finite values")
    return x


def fit_scaler(training, mode: str = "zscore") -> FeatureScaler:
    """Per-dimension mean and sample (n - 1) standard deviation.

    A DataFrame input is ordered by ``stable_id`` first so the result does
    not depend on row order.
    """
    if mode not in SCALING_MODES:
        raise ConfigError(f"unknown scaling mode {mode!r}; expected one of {SCALING_MODES}")
    if isinstance(training, pd.DataFrame) and "stable_id" in training.columns:
        training = training.sort_values("stable_id", kind="stable")
    x = feature_matrix(training)
    if mode == "raw":
        return FeatureScaler.identity(x.shape[1])
    if len(x) < 2:
        raise InsufficientDataError("at least two training balls are needed to fit a scaler")
    mean = x.mean(axis=0)
    std = x.std(axis=0, ddof=1)
    flat = [FEATURE_COLUMNS[j] for j in np.flatnonzero(~(std > 0))]
    if flat:
        raise DegenerateScaleError(f"constant feature dimension(s): {', '.join(flat)}")
    return FeatureScaler(mean=mean, std=std, mode="zscore")


@dataclass
class NeighborIndex:
    """Immutable per-category search index. Rows are kept in stable-id order."""

    category: PitchCategory
    scaler: FeatureScaler
    points: np.ndarray
    labels: np.ndarray
    stable_ids: np.ndarray
    k_default: int = DEFAULT_K
    leaf_size: int = 32
    _tree: KDTree | None = field(default=None, repr=False, compare=False)

    def __len__(self):
        return len(self.points)

    @property
    def tree(self) -> KDTree:
        if self._tree is None:
            self._tree = KDTree(self.points, self.stable_ids, leaf_size=self.leaf_size)
        return self._tree

    def _check_k(self, k):
        k = self.k_default if k is None else int(k)
        if not 1 <= k <= len(self):
            raise ParameterError(f"k = {k} is outside [1, {len(self)}] for the {self.category.value} index")
        return k

    def neighbors(self, features, k: int | None = None):
        """Nearest training balls for raw query features.

        Returns ``(distances, stable_ids, labels)`` in ``(distance, stable_id)``
        order, distances measured in the index's scaled space.
        """
        k = self._check_k(k)
        d, pos = self.tree.query(self.scaler.transform(feature_matrix(features)), k)
        return d, self.stable_ids[pos], self.labels[pos]

    def swing_counts(self, features, ks) -> np.ndarray:
        """Swings among the first ``k`` neighbors, one column per entry of ``ks``."""
        ks = [self._check_k(k) for k in ks]
        x = self.scaler.transform(feature_matrix(features))
        k_max = max(ks)
        cols = np.asarray(ks, dtype=np.int64) - 1
        out = np.empty((len(x), len(ks)), dtype=np.int64)
        for start in range(0, len(x), QUERY_CHUNK):
            _, pos = self.tree.query_squared(x[start:start + QUERY_CHUNK], k_max)
            out[start:start + QUERY_CHUNK] = np.cumsum(self.labels[pos], axis=1, dtype=np.int64)[:, cols]
        return out


def build_index(training: pd.DataFrame, category, k_default: int = DEFAULT_K, scaling: str = "zscore",
                leaf_size: int = 32) -> NeighborIndex:
    category = PitchCategory.parse(category)
    if "category" in training.columns:
        other = set(training["category"].astype(str)) - {category.value}
        if other:
            raise ParameterError(f"training balls for {category.value} include other categories: {sorted(other)}")
    if int(k_default) < 1:
        raise ParameterError("k must be at least 1")
    if len(training) < k_default:
        raise InsufficientDataError(
            f"{category.value}: {len(training)} training balls, fewer than k = {k_default}"
        )
    training = training.sort_values("stable_id", kind="stable")
    ids = training["stable_id"].to_numpy(dtype=np.int64)
    if len(np.unique(ids)) != len(ids):
        raise SchemaError("duplicate stable_id in training balls")
    labels = training["label"].to_numpy(dtype=np.int8)
    if not np.isin(labels, (0, 1)).all():
        raise SchemaError("swing labels must be 0 or 1")
    scaler = fit_scaler(training, scaling)
    points = scaler.transform(feature_matrix(training))
    return NeighborIndex(
        category=category,
        scaler=scaler,
        points=points,
        labels=labels.astype(np.uint8),
        stable_ids=ids,
        k_default=int(k_default),
        leaf_size=leaf_size,
    )


def build_indexes(balls: pd.DataFrame, k_default: int = DEFAULT_K, scaling: str = "zscore") -> dict:
    return {
        c: build_index(balls[balls["category"] == c.value], c, k_default=k_default, scaling=scaling)
        for c in CATEGORIES
    }


def estimate_swing_probability(index: NeighborIndex, query, k: int | None = None):
    """Fraction of swings among the k nearest training balls.

    ``query`` may be one feature vector (a float is returned), a matrix or a
    ball DataFrame (an array is returned).
    """
    k = index._check_k(k)
    single = not isinstance(query, pd.DataFrame) and np.ndim(query) == 1
    p = index.swing_counts(query, [k])[:, 0] / k
    return float(p[0]) if single else p


def score_dataset(indexes: Mapping[PitchCategory, NeighborIndex], queries: pd.DataFrame,
                  k: int | None = None) -> pd.DataFrame:
    """Attach ``p_s``, ``ds``, ``cq`` and ``ads`` to every query ball, keeping row order."""
    out = queries.reset_index(drop=True).copy()
    p_s = np.full(len(out), np.nan)
    cats = out["category"].astype(str).to_numpy() if len(out) else np.array([], dtype=object)
    for value in sorted(set(cats)):
        cat = PitchCategory.parse(value)
        if cat not in indexes:
            raise ConfigError(f"no index for category {cat.value}")
        rows = np.flatnonzero(cats == value)
        idx = indexes[cat]
        kk = idx._check_k(k)
        p_s[rows] = idx.swing_counts(out.iloc[rows], [kk])[:, 0] / kk
    labels = out["label"].to_numpy() if len(out) else np.array([], dtype=np.int8)
    ds = np.asarray(scoring.discipline_score(p_s, labels), dtype=np.float64)
    cq = scoring.contact_quality(
        out["ev"].to_numpy(dtype=np.float64),
        out["la"].to_numpy(dtype=np.float64),
        out["contact_in_play"].to_numpy(dtype=bool),
    )
    out["p_s"] = p_s
    out["ds"] = ds
    out["cq"] = np.asarray(cq.cq, dtype=np.float64)
    out["ads"] = np.asarray(scoring.adjusted_discipline_score(ds, cq.cq), dtype=np.float64)
    return out


# index file layout, all little-endian:
#   magic[8] version:u8 category:u8 scaling:u8 reserved:u8 k_default:u32 dim:u32 n:u64
#   mean:f64[dim] std:f64[dim] points:f64[n*dim] stable_ids:i64[n] labels:u8[n]
#   sha256[32] over everything before it
_HEADER = struct.Struct("<8sBBBBIIQ")


def save_index(index: NeighborIndex, path) -> None:
    n, dim = index.points.shape
    header = _HEADER.pack(
        INDEX_MAGIC, INDEX_VERSION, CATEGORIES.index(index.category), SCALING_MODES.index(index.scaler.mode),
        0, index.k_default, dim, n,
    )
    body = b"".join(
        (
            header,
            np.ascontiguousarray(index.scaler.mean, dtype="<f8").tobytes(),
            np.ascontiguousarray(index.scaler.std, dtype="<f8").tobytes(),
            np.ascontiguousarray(index.points, dtype="<f8").tobytes(),
            np.ascontiguousarray(index.stable_ids, dtype="<i8").tobytes(),
            np.ascontiguousarray(index.labels, dtype="u1").tobytes(),
        )
    )
    Path(path).write_bytes(body + hashlib.sha256(body).digest())


def load_index(path) -> NeighborIndex:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    raw = path.read_bytes()
    if len(raw) < _HEADER.size + 32 or raw[:8] != INDEX_MAGIC:
        raise IndexFormatError(f"{path} is not an index file")
    body, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise IndexFormatError(f"{path} failed its checksum")
    _, version, cat, mode, _, k_default, dim, n = _HEADER.unpack_from(body)
    if version != INDEX_VERSION:
        raise IndexFormatError(f"{path}: unsupported index version {version}")
    if cat >= len(CATEGORIES) or mode >= len(SCALING_MODES):
        raise IndexFormatError(f"{path}: bad category or scaling tag")
    expected = _HEADER.size + 8 * dim * 2 + 8 * n * dim + 8 * n + n
    if len(body) != expected:
        raise IndexFormatError(f"{path}: truncated or oversized payload")
    off = _HEADER.size

    def take(dtype, count):
        nonlocal off
        arr = np.frombuffer(body, dtype=dtype, count=count, offset=off).copy()
        off += arr.nbytes
        return arr

    mean = take("<f8", dim).astype(np.float64)
    std = take("<f8", dim).astype(np.float64)
    points = take("<f8", n * dim).astype(np.float64).reshape(n, dim)
    ids = take("<i8", n).astype(np.int64)
    labels = take("u1", n)
    return NeighborIndex(
        category=CATEGORIES[cat],
        scaler=FeatureScaler(mean=mean, std=std, mode=SCALING_MODES[mode]),
        points=points,
        labels=labels,
        stable_ids=ids,
        k_default=int(k_default),
    )


def index_filename(category: PitchCategory) -> str:
    return f"{PitchCategory.parse(category).value}.idx"
