"""Synthetic pitch data with a known swing-probability surface.

Used to check the estimator against ground truth. Everything is drawn from
one ``numpy.random.Generator`` seeded by the caller, so a seed fixes the
output bit for bit.
"""

from __future__ import annotations

import math

import numpy as np
import pandas as pd

from .ingest import BALL_COLUMNS, CATEGORIES, DEFAULT_GEOMETRY, PitchCategory, ZoneGeometry

# typical zone used to place synthetic pitches, feet
SZ_BOT = 1.55
SZ_TOP = 3.35

# per category: (share, codes, speed mean/sd, spin mean/sd, |pfx_x| mean/sd, pfx_z mean/sd, logit offset)
_PROFILES = {
    PitchCategory.FASTBALL: (0.50, ("FF", "SI", "FC"), (94.0, 2.2), (2280.0, 140.0), (0.7, 0.25), (1.1, 0.35), -0.4),
    PitchCategory.BREAKING_BALL: (0.32, ("SL", "CU", "ST", "KC"), (83.0, 3.5), (2500.0, 260.0), (0.45, 0.3), (-0.2, 0.45), 0.2),
    PitchCategory.OFFSPEED: (0.18, ("CH", "FS"), (85.5, 2.5), (1750.0, 220.0), (0.55, 0.2), (0.45, 0.3), 0.5),
}
RIGHTY_SHARE = 0.7
# logit drop per foot of distance between the pitch and the strike zone
FALLOFF = 2.0


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def distance_outside_zone(plate_x, norm_plate_z, geometry: ZoneGeometry = DEFAULT_GEOMETRY,
                          zone_height: float = SZ_TOP - SZ_BOT):
    """Distance in feet from the pitch center to the strike-zone rectangle."""
    dx = np.maximum(np.abs(plate_x) - geometry.half_width, 0.0)
    dz = np.maximum(np.maximum(norm_plate_z - 1.0, -norm_plate_z), 0.0) * zone_height
    return np.hypot(dx, dz)


def swing_probability_surface(features: np.ndarray, category) -> np.ndarray:
    """Ground-truth league swing probability for synthetic balls.

    Logistic in the distance between the pitch and the zone, shifted per
    category; the four pitch-characteristic features carry no signal.
    """
    offset = _PROFILES[PitchCategory.parse(category)][6]
    f = np.asarray(features, dtype=np.float64)
    return _sigmoid(offset + 0.5 - FALLOFF * distance_outside_zone(f[:, 0], f[:, 1]))


def _draw_features(rng: np.random.Generator, cat: PitchCategory, n: int, geometry: ZoneGeometry):
    _, _, speed, spin, pfx_x, pfx_z, _ = _PROFILES[cat]
    height = SZ_TOP - SZ_BOT
    r = geometry.ball_radius
    xs, zs = [], []
    have = 0
    while have < n:
        m = 2 * (n - have) + 16
        x = rng.normal(0.0, 1.1, m)
        z = rng.normal(0.5, 0.6, m)
        ball = (np.abs(x) > geometry.half_width + r) | (z > 1.0 + r / height) | (z < -r / height)
        xs.append(x[ball])
        zs.append(z[ball])
        have += int(ball.sum())
    x = np.concatenate(xs)[:n]
    z = np.concatenate(zs)[:n]
    # velocity, spin and rise share a pitcher-level factor; arm side sets the sign of run
    arm = rng.normal(size=n)
    hand = np.where(rng.random(n) < RIGHTY_SHARE, -1.0, 1.0)
    return np.column_stack(
        [
            x,
            z,
            speed[0] + speed[1] * (0.8 * arm + 0.6 * rng.normal(size=n)),
            spin[0] + spin[1] * (0.6 * arm + 0.8 * rng.normal(size=n)),
            hand * (pfx_x[0] + pfx_x[1] * rng.normal(size=n)),
            pfx_z[0] + pfx_z[1] * (0.7 * arm + 0.714 * rng.normal(size=n)),
        ]
    )


def synthetic_balls(rng: np.random.Generator, n: int, seasons=(2021, 2023), first_id: int = 0,
                    n_batters: int = 60, n_pitchers: int = 40,
                    geometry: ZoneGeometry = DEFAULT_GEOMETRY) -> pd.DataFrame:
    """``n`` synthetic balls in ball-dataset layout plus a ``p_true`` column."""
    shares = np.array([_PROFILES[c][0] for c in CATEGORIES])
    cat_idx = np.sort(rng.choice(len(CATEGORIES), size=n, p=shares / shares.sum()), kind="stable")
    parts = []
    for ci, cat in enumerate(CATEGORIES):
        m = int((cat_idx == ci).sum())
        feats = _draw_features(rng, cat, m, geometry)
        codes = np.asarray(_PROFILES[cat][1])[rng.integers(0, len(_PROFILES[cat][1]), m)]
        parts.append((cat, feats, codes))
    feats = np.vstack([p[1] for p in parts]) if n else np.zeros((0, 6))
    cats = np.concatenate([[p[0].value] * len(p[1]) for p in parts]) if n else np.array([], dtype=object)
    codes = np.concatenate([p[2] for p in parts]) if n else np.array([], dtype=object)
    p_true = np.concatenate([swing_probability_surface(p[1], p[0]) for p in parts]) if n else np.zeros(0)

    # shuffle so categories interleave, then draw outcomes
    perm = rng.permutation(n)
    feats, cats, codes, p_true = feats[perm], cats[perm], codes[perm], p_true[perm]
    label = (rng.random(n) < p_true).astype(np.int8)
    u = rng.random(n)
    in_play = (label == 1) & (u < 0.3)
    foul = (label == 1) & (u >= 0.3) & (u < 0.65)
    description = np.where(label == 0, "ball", np.where(in_play, "hit_into_play", np.where(foul, "foul", "swinging_strike")))
    ev = np.where(in_play, rng.normal(86.0, 12.0, n), np.nan)
    la = np.where(in_play, rng.normal(12.0, 26.0, n), np.nan)
    season = rng.integers(seasons[0], seasons[1] + 1, n)
    day = rng.integers(0, 180, n)
    game_date = (pd.to_datetime(pd.Series(season).astype(str) + "-04-01") + pd.to_timedelta(day, unit="D")).dt.strftime("%Y-%m-%d")
    game_id = season * 10_000 + day * 15 + rng.integers(0, 15, n)
    return pd.DataFrame(
        {
            "stable_id": np.arange(first_id, first_id + n, dtype=np.int64),
            "season": season.astype(np.int64),
            "game_date": game_date.to_numpy(),
            "game_id": game_id.astype(np.int64),
            "at_bat_number": rng.integers(1, 80, n).astype(np.int64),
            "batter_id": (600_000 + rng.integers(0, n_batters, n)).astype(np.int64),
            "pitcher_id": (500_000 + rng.integers(0, n_pitchers, n)).astype(np.int64),
            "pitch_type": codes,
            "category": cats,
            "description": description,
            "label": label,
            "contact_in_play": in_play,
            "ev": ev,
            "la": la,
            "plate_x": feats[:, 0],
            "norm_plate_z": feats[:, 1],
            "release_speed": feats[:, 2],
            "release_spin_rate": feats[:, 3],
            "pfx_x": feats[:, 4],
            "pfx_z": feats[:, 5],
            "p_true": p_true,
        },
        columns=[*BALL_COLUMNS, "p_true"],
    )


def generate(seed: int, n_train: int = 200_000, n_query: int = 10_000) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Training balls (seasons 2021-2023) and query balls (2024) from one seed."""
    rng = np.random.default_rng(seed)
    train = synthetic_balls(rng, n_train, seasons=(2021, 2023), first_id=0)
    query = synthetic_balls(rng, n_query, seasons=(2024, 2024), first_id=n_train)
    return train, query


def bayes_floor(p_true, outcomes) -> float:
    """Brier score of the true probabilities on the realized outcomes."""
    p = np.asarray(p_true, dtype=np.float64)
    y = np.asarray(outcomes, dtype=np.float64)
    return math.fsum(((y - p) ** 2).tolist()) / len(p)


def statcast_frame(rng: np.random.Generator, n: int, season: int = 2024, untracked_rate: float = 0.004,
                   n_batters: int = 30, n_pitchers: int = 20) -> pd.DataFrame:
    """Raw Statcast-style rows (strikes and balls, a few untracked) for ingest tests."""
    codes = np.array(["FF", "SI", "FC", "SL", "CU", "ST", "CH", "FS", "PO", "KN"])
    code_p = np.array([0.3, 0.15, 0.07, 0.16, 0.08, 0.06, 0.1, 0.04, 0.02, 0.02])
    pitch_type = codes[rng.choice(len(codes), n, p=code_p)]
    sz_bot = rng.normal(1.6, 0.08, n)
    sz_top = sz_bot + rng.normal(1.8, 0.1, n)
    plate_x = rng.normal(0.0, 0.9, n)
    plate_z = rng.normal((sz_bot + sz_top) / 2, 0.8, n)
    swing = rng.random(n) < 0.47
    u = rng.random(n)
    desc = np.where(
        swing,
        np.where(u < 0.35, "hit_into_play", np.where(u < 0.7, "foul", np.where(u < 0.95, "swinging_strike", "foul_tip"))),
        np.where(u < 0.6, "ball", np.where(u < 0.95, "called_strike", np.where(u < 0.98, "blocked_ball", "hit_by_pitch"))),
    )
    in_play = desc == "hit_into_play"
    df = pd.DataFrame(
        {
            "pitch_type": pitch_type,
            "game_date": f"{season}-06-01",
            "release_speed": rng.normal(90.0, 5.0, n).round(1),
            "batter": 600_000 + rng.integers(0, n_batters, n),
            "pitcher": 500_000 + rng.integers(0, n_pitchers, n),
            "description": desc,
            "plate_x": plate_x.round(3),
            "plate_z": plate_z.round(3),
            "sz_top": sz_top.round(3),
            "sz_bot": sz_bot.round(3),
            "pfx_x": rng.normal(0.0, 0.8, n).round(2),
            "pfx_z": rng.normal(0.8, 0.6, n).round(2),
            "release_spin_rate": rng.normal(2250, 300, n).round(0),
            "launch_speed": np.where(in_play, rng.normal(88, 12, n).round(1), np.nan),
            "launch_angle": np.where(in_play, rng.normal(12, 25, n).round(0), np.nan),
            "game_pk": 700_000 + rng.integers(0, 40, n),
            "at_bat_number": rng.integers(1, 75, n),
        }
    )
    lost = rng.random(n) < untracked_rate
    for c in ("plate_x", "plate_z", "release_speed", "release_spin_rate", "pfx_x", "pfx_z"):
        df.loc[lost, c] = np.nan
    return df
