"""Season summaries, qualification and leaderboards from scored balls."""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import pandas as pd

from .errors import JoinError, ParameterError, SchemaError
from .ingest import CATEGORIES, PitchCategory

ROLES = ("batter", "pitcher")
METRICS = ("p_s", "ds", "cq", "ads")
SCOPES = tuple(c.value for c in CATEGORIES) + ("overall",)
DEFAULT_MIN_PA = 150
DEFAULT_MIN_BALLS = 250
EXTERNAL_COLUMNS = ("player_id", "player_name", "bb_pct", "k_pct", "o_swing_pct", "bb_per_k")
EXTERNAL_METRICS = EXTERNAL_COLUMNS[2:]


def summary_columns() -> list[str]:
    cols = ["player_id", "role", "season", "plate_appearances"]
    for scope in SCOPES:
        cols.append(f"{scope}_n")
        cols.extend(f"{scope}_{m}" for m in METRICS)
    return cols


def _check_role(role):
    if role not in ROLES:
        raise ParameterError(f"unknown role {role!r}; expected one of {ROLES}")


def _fsum_mean(values: pd.Series) -> float:
    return math.fsum(values.tolist()) / len(values) if len(values) else math.nan


def summarize_players(scored: pd.DataFrame, role: str = "batter", plate_appearances: pd.DataFrame | None = None
                      ) -> pd.DataFrame:
    """One row per (player, season) with per-category and overall means.

    Means are exactly rounded sums divided by counts, so the result does not
    depend on row order. ``plate_appearances`` is the table written at ingest
    (role, player_id, season, plate_appearances); without it, plate
    appearances are counted from the scored balls alone.
    """
    _check_role(role)
    key = f"{role}_id"
    missing = [c for c in (key, "season", "category", *METRICS) if c not in scored.columns]
    if missing:
        raise SchemaError(f"scored balls missing column(s): {', '.join(missing)}")
    cols = summary_columns()
    if scored.empty:
        return pd.DataFrame(columns=cols)

    groups = scored.groupby([key, "season"], sort=True)
    out = groups.size().rename("overall_n").reset_index().rename(columns={key: "player_id"})
    for m in METRICS:
        out[f"overall_{m}"] = groups[m].agg(_fsum_mean).to_numpy()
    by_cat = scored.groupby([key, "season", "category"], sort=True)
    sizes = by_cat.size()
    means = {m: by_cat[m].agg(_fsum_mean) for m in METRICS}
    for cat in CATEGORIES:
        c = cat.value
        idx = pd.MultiIndex.from_arrays([out["player_id"], out["season"], [c] * len(out)])
        out[f"{c}_n"] = sizes.reindex(idx).fillna(0).astype(np.int64).to_numpy()
        for m in METRICS:
            out[f"{c}_{m}"] = means[m].reindex(idx).to_numpy(dtype=np.float64)

    if plate_appearances is not None:
        pa = plate_appearances[plate_appearances["role"] == role][["player_id", "season", "plate_appearances"]]
        out = out.merge(pa, on=["player_id", "season"], how="left")
        out["plate_appearances"] = out["plate_appearances"].fillna(0).astype(np.int64)
    else:
        pa = (
            scored.drop_duplicates([key, "season", "game_id", "at_bat_number"])
            .groupby([key, "season"]).size()
        )
        out["plate_appearances"] = (
            pa.reindex(pd.MultiIndex.from_arrays([out["player_id"], out["season"]])).fillna(0).astype(np.int64)
            .to_numpy()
        )
    out["role"] = role
    out["player_id"] = out["player_id"].astype(np.int64)
    out["season"] = out["season"].astype(np.int64)
    return out[cols].reset_index(drop=True)


def qualify(summaries: pd.DataFrame, min_pa: int = DEFAULT_MIN_PA, min_balls: int = DEFAULT_MIN_BALLS,
            category=None) -> pd.DataFrame:
    """Keep batters with at least ``min_pa`` plate appearances and pitchers
    with at least ``min_balls`` balls in ``category`` (all balls if None)."""
    if min_pa < 0 or min_balls < 0:
        raise ParameterError("qualification thresholds must be non-negative")
    scope = "overall" if category is None else PitchCategory.parse(category).value
    batters = (summaries["role"] == "batter") & (summaries["plate_appearances"] >= min_pa)
    pitchers = (summaries["role"] == "pitcher") & (summaries[f"{scope}_n"] >= min_balls)
    return summaries[batters | pitchers].reset_index(drop=True)


LEADERBOARD_COLUMNS = ("rank", "player_id", "role", "season", "plate_appearances", "balls", "value")


def leaderboard(summaries: pd.DataFrame, metric: str = "ds", category=None, top_n: int = 5,
                direction: str = "desc") -> pd.DataFrame:
    """Top players by a season-mean metric; ties go to the lower player id."""
    if metric not in METRICS:
        raise ParameterError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if direction not in ("desc", "asc"):
        raise ParameterError("direction must be 'desc' or 'asc'")
    if int(top_n) < 1:
        raise ParameterError("top_n must be at least 1")
    scope = "overall" if category is None else PitchCategory.parse(category).value
    board = summaries[summaries[f"{scope}_n"] > 0]
    board = pd.DataFrame(
        {
            "player_id": board["player_id"].to_numpy(dtype=np.int64),
            "role": board["role"].to_numpy(),
            "season": board["season"].to_numpy(dtype=np.int64),
            "plate_appearances": board["plate_appearances"].to_numpy(dtype=np.int64),
            "balls": board[f"{scope}_n"].to_numpy(dtype=np.int64),
            "value": board[f"{scope}_{metric}"].to_numpy(dtype=np.float64),
        }
    )
    board = board.sort_values(
        ["value", "player_id", "season"], ascending=[direction == "asc", True, True], kind="stable"
    ).head(int(top_n))
    board.insert(0, "rank", np.arange(1, len(board) + 1))
    return board.reset_index(drop=True)


def normalize_name(name) -> str:
    s = unicodedata.normalize("NFKD", str(name))
    s = "".join(ch for ch in s if not unicodedata.combining(ch))
    if "," in s:
        last, _, first = s.partition(",")
        s = f"{first} {last}"
    return " ".join(s.replace(".", " ").casefold().split())


@dataclass
class JoinResult:
    joined: pd.DataFrame
    unmatched_external: pd.DataFrame
    unmatched_players: list[int] = field(default_factory=list)
    correlations: dict = field(default_factory=dict)


def read_external_stats(path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={"player_name": str}, keep_default_na=False, na_values=[""])
    missing = [c for c in EXTERNAL_COLUMNS if c not in df.columns]
    if missing:
        raise SchemaError(f"external stats missing column(s): {', '.join(missing)}")
    return df


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if len(x) < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return math.nan
    return float(np.corrcoef(x, y)[0, 1])


def metric_join(summaries: pd.DataFrame, external: pd.DataFrame, names: Mapping[int, str] | None = None,
                metric: str = "ds", scope: str = "overall") -> JoinResult:
    """Inner-join season summaries with external per-player rate stats.

    Rows are matched on ``player_id``; rows without one fall back to
    ``player_name`` looked up in ``names`` (player id to display name). A
    name that fits several players raises ``JoinError``.
    """
    if metric not in METRICS:
        raise ParameterError(f"unknown metric {metric!r}")
    if summaries["season"].nunique() > 1:
        raise JoinError("summaries span several seasons; join one season at a time")
    value_col = f"{scope}_{metric}"
    external = external.reset_index(drop=True)
    by_name: dict[str, list[int]] = {}
    for pid, name in (names or {}).items():
        by_name.setdefault(normalize_name(name), []).append(int(pid))
    known = set(summaries["player_id"].astype(np.int64))

    resolved = []
    for row in external.itertuples(index=False):
        pid = getattr(row, "player_id")
        if pid is not None and not (isinstance(pid, float) and math.isnan(pid)):
            resolved.append(int(pid))
            continue
        candidates = sorted(set(by_name.get(normalize_name(getattr(row, "player_name")), [])) & known)
        if len(candidates) > 1:
            raise JoinError(f"player name {getattr(row, 'player_name')!r} matches ids {candidates}")
        resolved.append(candidates[0] if candidates else None)
    ext = external.copy()
    ext["resolved_id"] = pd.array(resolved, dtype="Int64")
    dupes = ext["resolved_id"].dropna()
    dupes = sorted(set(dupes[dupes.duplicated()].astype(int)))
    if dupes:
        raise JoinError(f"external stats list player id(s) {dupes} more than once")

    matched = ext["resolved_id"].isin(known).fillna(False).to_numpy(dtype=bool)
    left = summaries[["player_id", "season", "plate_appearances", value_col]].rename(columns={value_col: metric})
    right = ext[matched].drop(columns=["player_id"]).rename(columns={"resolved_id": "player_id"})
    right["player_id"] = right["player_id"].astype(np.int64)
    joined = left.merge(right[["player_id", "player_name", *EXTERNAL_METRICS]], on="player_id", how="inner")
    joined = joined.sort_values("player_id", kind="stable").reset_index(drop=True)
    unmatched_players = sorted(known - set(joined["player_id"]))
    correlations = {
        m: _pearson(joined[metric].to_numpy(dtype=np.float64), joined[m].to_numpy(dtype=np.float64))
        for m in EXTERNAL_METRICS
    }
    return JoinResult(
        joined=joined,
        unmatched_external=external[~matched].reset_index(drop=True),
        unmatched_players=unmatched_players,
        correlations=correlations,
    )
