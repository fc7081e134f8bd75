"""Plate-discipline scores on balls from Statcast pitch tracking data."""

from .estimator import (
    FeatureScaler,
    NeighborIndex,
    build_index,
    build_indexes,
    estimate_swing_probability,
    fit_scaler,
    load_index,
    save_index,
    score_dataset,
)
from .evaluation import brier_score, calibration_curve, k_selection_study
from .ingest import (
    PitchCategory,
    ZoneGeometry,
    build_ball_dataset,
    categorize_pitch,
    classify_ball,
    derive_swing_label,
    normalize_vertical,
    parse_statcast_csv,
)
from .scoring import (
    adjusted_discipline_score,
    contact_quality,
    discipline_score,
    display_round,
    ev_score,
    la_score,
)

__version__ = "0.1.0"
