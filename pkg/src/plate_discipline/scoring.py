"""Per-pitch discipline scores.

All functions accept scalars or numpy arrays and broadcast like ufuncs.
Scalar inputs give Python floats back.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import DomainError

EV_FLOOR = 70.0
EV_BARREL = 98.0
LA_PEAK = 20.0
LA_HALF_WIDTH = 20.0


def _out(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def discipline_score(p_s, r):
    """Discipline score of a batter's decision on a ball.

    ``p_s`` is the league swing probability and ``r`` the decision
    (1 swing, 0 take). Positive for takes, negative for swings; the value
    is exactly ``p_s - r``.
    """
    p = np.asarray(p_s, dtype=np.float64)
    r = np.asarray(r)
    if np.any(~((p >= 0.0) & (p <= 1.0))):
        raise DomainError("swing probability must lie in [0, 1]")
    if np.any((r != 0) & (r != 1)):
        raise DomainError("swing label must be 0 or 1")
    swing = r == 1
    # (-1)^R (R (1 - p) + (1 - R) p)
    return _out(np.where(swing, -(1.0 - p), p))


def ev_score(ev):
    ev = np.asarray(ev, dtype=np.float64)
    return _out(np.minimum(1.0, np.maximum(0.0, (ev - EV_FLOOR) / (EV_BARREL - EV_FLOOR))))


def la_score(la):
    la = np.asarray(la, dtype=np.float64)
    return _out(np.maximum(0.0, 1.0 - np.abs(la - LA_PEAK) / LA_HALF_WIDTH))


@dataclass(frozen=True)
class ContactQuality:
    cq: float | np.ndarray
    ev_score: float | np.ndarray
    la_score: float | np.ndarray
    anomaly: bool | np.ndarray


def contact_quality(ev, la, contact_in_play) -> ContactQuality:
    """Contact quality of a ball put in play.

    Zero unless the batter put the ball in fair play. A ball in play with no
    recorded EV or LA is flagged as an anomaly and scores zero. Component
    scores are NaN where EV or LA is missing.
    """
    ev = np.asarray(ev if ev is not None else np.nan, dtype=np.float64)
    la = np.asarray(la if la is not None else np.nan, dtype=np.float64)
    in_play = np.asarray(contact_in_play, dtype=bool)
    evs = np.asarray(ev_score(ev))
    las = np.asarray(la_score(la))
    measured = np.isfinite(ev) & np.isfinite(la)
    anomaly = in_play & ~measured
    cq = np.where(in_play & measured, evs * las, 0.0)
    scalar = cq.ndim == 0
    return ContactQuality(
        cq=_out(cq),
        ev_score=_out(evs),
        la_score=_out(las),
        anomaly=bool(anomaly) if scalar else anomaly,
    )


def adjusted_discipline_score(ds, cq):
    if isinstance(cq, ContactQuality):
        cq = cq.cq
    return _out(np.asarray(ds, dtype=np.float64) + np.asarray(cq, dtype=np.float64))


def display_round(x, places: int = 3) -> float:
    """Round half away from zero on the shortest decimal repr, for reports only.

    Stored scores keep full precision; 10/28 shows as 0.357 and 0.0005 as 0.001.
    """
    if x is None or not np.isfinite(x):
        return float("nan")
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))
