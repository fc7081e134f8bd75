"""Brier score and calibration curves for swing-probability predictions.

Sums go through ``math.fsum`` so results do not depend on input order or on
how the work was split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import ConfigError, ParameterError
from .ingest import PitchCategory

CALIBRATION_COLUMNS = ("k", "bin_lo", "bin_hi", "mean_pred", "obs_frac", "count")


def _check_inputs(predictions, outcomes):
    p = np.asarray(predictions, dtype=np.float64).ravel()
    y = np.asarray(outcomes).ravel()
    if p.shape != y.shape:
        raise ParameterError(f"{len(p)} predictions but {len(y)} outcomes")
    if len(p) == 0:
        raise ParameterError("no predictions to evaluate")
    if not ((p >= 0) & (p <= 1)).all():
        raise ParameterError("predictions must lie in [0, 1]")
    if not np.isin(y, (0, 1)).all():
        raise ParameterError("outcomes must be 0 or 1")
    return p, y.astype(np.float64)


def brier_score(predictions, outcomes) -> float:
    p, y = _check_inputs(predictions, outcomes)
    return math.fsum(((y - p) ** 2).tolist()) / len(p)


@dataclass(frozen=True)
class CalibrationBin:
    lo: float
    hi: float
    mean_pred: float
    obs_frac: float
    count: int
    brier: float

    @property
    def empty(self) -> bool:
        return self.count == 0


@dataclass
class CalibrationReport:
    k: int | None
    brier: float
    bins: list[CalibrationBin] = field(default_factory=list)

    @property
    def n(self) -> int:
        return sum(b.count for b in self.bins)

    def decomposed_brier(self) -> float:
        """Count-weighted sum of per-bin Brier scores; equals ``brier``."""
        n = self.n
        return math.fsum(b.count / n * b.brier for b in self.bins if b.count)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(self.k, b.lo, b.hi, b.mean_pred, b.obs_frac, b.count) for b in self.bins],
            columns=list(CALIBRATION_COLUMNS),
        )


def bin_edges(n_bins: int) -> np.ndarray:
    if int(n_bins) < 2:
        raise ParameterError("n_bins must be at least 2")
    return np.linspace(0.0, 1.0, int(n_bins) + 1)


def assign_bins(predictions, n_bins: int) -> np.ndarray:
    """Bin index per prediction; bins are [lo, hi) except the last, which includes 1."""
    edges = bin_edges(n_bins)
    idx = np.searchsorted(edges, np.asarray(predictions, dtype=np.float64), side="right") - 1
    return np.clip(idx, 0, len(edges) - 2)


def calibration_curve(predictions, outcomes, n_bins: int = 10, k: int | None = None) -> CalibrationReport:
    """Equal-width calibration bins over [0, 1].

    Empty bins are kept, with count 0 and NaN means.
    """
    p, y = _check_inputs(predictions, outcomes)
    edges = bin_edges(n_bins)
    which = assign_bins(p, n_bins)
    order = np.argsort(which, kind="stable")
    bounds = np.searchsorted(which[order], np.arange(len(edges)))
    bins = []
    for b in range(len(edges) - 1):
        sel = order[bounds[b]:bounds[b + 1]]
        n = len(sel)
        if n == 0:
            bins.append(CalibrationBin(edges[b], edges[b + 1], math.nan, math.nan, 0, math.nan))
            continue
        pb, yb = p[sel], y[sel]
        bins.append(
            CalibrationBin(
                lo=float(edges[b]),
                hi=float(edges[b + 1]),
                mean_pred=math.fsum(pb.tolist()) / n,
                obs_frac=math.fsum(yb.tolist()) / n,
                count=n,
                brier=math.fsum(((yb - pb) ** 2).tolist()) / n,
            )
        )
    return CalibrationReport(k=k, brier=brier_score(p, y), bins=bins)


def k_selection_study(indexes: Mapping[PitchCategory, object], evaluation_set: pd.DataFrame,
                      k_values: Sequence[int] = (10, 100, 200, 500), n_bins: int = 10) -> list[CalibrationReport]:
    """One calibration report per k, pooling every category.

    Each query is searched once at the largest k; smaller k reuse the
    leading neighbors, which are exactly the smaller-k result.
    """
    if len(evaluation_set) == 0:
        raise ParameterError("evaluation set is empty")
    ks = [int(k) for k in k_values]
    if not ks:
        raise ParameterError("no k values given")
    counts = np.zeros((len(evaluation_set), len(ks)), dtype=np.int64)
    cats = evaluation_set["category"].astype(str).to_numpy()
    for value in sorted(set(cats)):
        cat = PitchCategory.parse(value)
        if cat not in indexes:
            raise ConfigError(f"no index for category {cat.value}")
        rows = np.flatnonzero(cats == value)
        counts[rows] = indexes[cat].swing_counts(evaluation_set.iloc[rows], ks)
    y = evaluation_set["label"].to_numpy()
    return [calibration_curve(counts[:, j] / k, y, n_bins, k=k) for j, k in enumerate(ks)]


def calibration_frame(reports: Sequence[CalibrationReport]) -> pd.DataFrame:
    frames = [r.to_frame() for r in reports]
    if not frames:
        return pd.DataFrame(columns=list(CALIBRATION_COLUMNS))
    return pd.concat(frames, ignore_index=True)


def brier_summary(reports: Sequence[CalibrationReport]) -> dict:
    return {
        "n": reports[0].n if reports else 0,
        "brier": {str(r.k): r.brier for r in reports},
        "best_k": min(reports, key=lambda r: (r.brier, r.k)).k if reports else None,
    }
