"""Statcast CSV ingestion and ball classification.

Turns raw pitch-by-pitch exports into the ball dataset consumed by the
estimator: tracked pitches whose ball cross-section misses the strike zone
entirely, with a swing label, a pitch category and a feature vector whose
vertical coordinate is normalized to the batter's zone.
"""

from __future__ import annotations

import enum
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd

from .errors import (
    CategorizationError,
    ClassificationError,
    DegenerateZoneError,
    InvariantError,
    SchemaError,
    UntrackedPitchError,
)

log = logging.getLogger(__name__)


class PitchCategory(str, enum.Enum):
    FASTBALL = "fastball"
    BREAKING_BALL = "breaking_ball"
    OFFSPEED = "offspeed"

    @property
    def display(self) -> str:
        return {"fastball": "Fastball", "breaking_ball": "Breaking Ball", "offspeed": "Offspeed"}[self.value]

    @classmethod
    def parse(cls, value) -> "PitchCategory":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace(" ", "_").replace("-", "_")
        aliases = {"breakingball": "breaking_ball", "breaking": "breaking_ball", "off_speed": "offspeed"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise CategorizationError([value]) from None


CATEGORIES = tuple(PitchCategory)

# plate_z is replaced by norm_plate_z; order is the on-disk and in-index order
FEATURE_COLUMNS = ("plate_x", "norm_plate_z", "release_speed", "release_spin_rate", "pfx_x", "pfx_z")
TRACKING_COLUMNS = ("plate_x", "plate_z", "sz_top", "sz_bot", "release_speed", "release_spin_rate", "pfx_x", "pfx_z")
REQUIRED_COLUMNS = TRACKING_COLUMNS + (
    "pitch_type",
    "description",
    "launch_speed",
    "launch_angle",
    "batter",
    "pitcher",
    "game_pk",
    "at_bat_number",
    "game_date",
)
_ID_COLUMNS = {"batter": "batter_id", "pitcher": "pitcher_id", "game_pk": "game_id", "at_bat_number": "at_bat_number"}

BALL_COLUMNS = (
    "stable_id",
    "season",
    "game_date",
    "game_id",
    "at_bat_number",
    "batter_id",
    "pitcher_id",
    "pitch_type",
    "category",
    "description",
    "label",
    "contact_in_play",
    "ev",
    "la",
) + FEATURE_COLUMNS

SWING_DESCRIPTIONS = frozenset(
    {
        "swinging_strike",
        "swinging_strike_blocked",
        "foul",
        "foul_tip",
        "hit_into_play",
        "missed_bunt",
        "foul_bunt",
        "bunt_foul_tip",
        "swinging_pitchout",
        "foul_pitchout",
        "hit_into_play_no_out",
        "hit_into_play_score",
    }
)
TAKE_DESCRIPTIONS = frozenset(
    {
        "ball",
        "called_strike",
        "blocked_ball",
        "pitchout",
        "hit_by_pitch",
        "intent_ball",
        "automatic_ball",
        "automatic_strike",
    }
)
IN_PLAY_DESCRIPTIONS = frozenset({"hit_into_play", "hit_into_play_no_out", "hit_into_play_score"})

DEFAULT_CATEGORY_TABLE: dict[str, PitchCategory] = {
    **dict.fromkeys(("FF", "SI", "FC", "FA", "FT"), PitchCategory.FASTBALL),
    **dict.fromkeys(("SL", "CU", "KC", "SV", "ST", "SC", "CS"), PitchCategory.BREAKING_BALL),
    **dict.fromkeys(("CH", "FS", "FO", "KN", "EP"), PitchCategory.OFFSPEED),
}


@dataclass(frozen=True)
class ZoneGeometry:
    """Strike-zone constants in feet. Defaults are regulation sizes."""

    half_width: float = 8.5 / 12.0
    ball_radius: float = 1.45 / 12.0

    def __post_init__(self):
        if not (self.half_width > 0 and self.ball_radius > 0):
            raise SchemaError("zone geometry constants must be positive")


DEFAULT_GEOMETRY = ZoneGeometry()


def _scalar_or_array(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def classify_ball(plate_x, plate_z, sz_top, sz_bot, geometry: ZoneGeometry = DEFAULT_GEOMETRY):
    """True where the ball's cross-section does not touch the strike zone.

    Vectorized over numpy arrays. Any missing location raises
    ``UntrackedPitchError``.
    """
    values = [np.asarray(v if v is not None else np.nan, dtype=np.float64) for v in (plate_x, plate_z, sz_top, sz_bot)]
    if any(np.isnan(v).any() for v in values):
        raise UntrackedPitchError("pitch location is missing")
    x, z, top, bot = values
    r = geometry.ball_radius
    out = (np.abs(x) > geometry.half_width + r) | (z > top + r) | (z < bot - r)
    return _scalar_or_array(out)


def normalize_vertical(plate_z, sz_bot, sz_top):
    z, bot, top = (np.asarray(v, dtype=np.float64) for v in (plate_z, sz_bot, sz_top))
    if np.any(~(top > bot)):
        raise DegenerateZoneError("strike zone top must be above its bottom")
    return _scalar_or_array((z - bot) / (top - bot))


def derive_swing_label(description: str, swings=SWING_DESCRIPTIONS, takes=TAKE_DESCRIPTIONS) -> int:
    if description in swings:
        return 1
    if description in takes:
        return 0
    raise ClassificationError([description])


def swing_labels(descriptions: pd.Series, swings=SWING_DESCRIPTIONS, takes=TAKE_DESCRIPTIONS) -> np.ndarray:
    is_swing = descriptions.isin(swings).to_numpy()
    is_take = descriptions.isin(takes).to_numpy()
    unknown = ~(is_swing | is_take)
    if unknown.any():
        raise ClassificationError(descriptions[unknown].astype(str).unique())
    return is_swing.astype(np.int8)


def categorize_pitch(pitch_type: str, table: Mapping[str, PitchCategory] | None = None) -> PitchCategory:
    table = DEFAULT_CATEGORY_TABLE if table is None else table
    try:
        return PitchCategory.parse(table[pitch_type])
    except (KeyError, TypeError):
        raise CategorizationError([pitch_type]) from None


@dataclass
class ParsedPitches:
    """Rows of one or more Statcast files that survived parsing.

    ``pa_keys`` holds one row per distinct plate appearance seen in the input,
    including plate appearances whose pitches were untracked.
    """

    frame: pd.DataFrame
    total_rows: int = 0
    rejects: Counter = field(default_factory=Counter)
    out_of_season: int = 0
    pa_keys: pd.DataFrame | None = None

    def __len__(self):
        return len(self.frame)

    def extend(self, other: "ParsedPitches") -> "ParsedPitches":
        keys = [k for k in (self.pa_keys, other.pa_keys) if k is not None]
        return ParsedPitches(
            frame=pd.concat([self.frame, other.frame], ignore_index=True),
            total_rows=self.total_rows + other.total_rows,
            rejects=self.rejects + other.rejects,
            out_of_season=self.out_of_season + other.out_of_season,
            pa_keys=pd.concat(keys, ignore_index=True).drop_duplicates(ignore_index=True) if keys else None,
        )


def read_header(path) -> list[str]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return list(pd.read_csv(path, nrows=0).columns)


def check_columns(columns) -> None:
    missing = [c for c in REQUIRED_COLUMNS if c not in set(columns)]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")


def _coerce_numeric(col: pd.Series) -> tuple[pd.Series, np.ndarray]:
    """Numeric view of a column plus a mask of present-but-unparseable cells."""
    if pd.api.types.is_numeric_dtype(col):
        return col.astype(np.float64), np.zeros(len(col), dtype=bool)
    num = pd.to_numeric(col, errors="coerce")
    bad = (num.isna() & col.notna() & (col.astype(str).str.strip() != "")).to_numpy()
    return num.astype(np.float64), bad


def _parse_chunk(chunk: pd.DataFrame, first_ordinal: int, seasons) -> ParsedPitches:
    n = len(chunk)
    stable_id = np.arange(first_ordinal, first_ordinal + n, dtype=np.int64)
    reason = np.full(n, "", dtype=object)

    dates = pd.to_datetime(chunk["game_date"], errors="coerce")
    season = dates.dt.year
    malformed = dates.isna().to_numpy()

    ids = {}
    for src, dst in _ID_COLUMNS.items():
        num, bad = _coerce_numeric(chunk[src])
        frac = num.notna() & (num != np.floor(num.fillna(0)))
        malformed |= bad | num.isna().to_numpy() | frac.to_numpy()
        ids[dst] = num

    tracking = {}
    untracked = np.zeros(n, dtype=bool)
    for c in TRACKING_COLUMNS:
        num, bad = _coerce_numeric(chunk[c])
        malformed |= bad
        untracked |= num.isna().to_numpy() & ~bad
        tracking[c] = num
    ev, bad_ev = _coerce_numeric(chunk["launch_speed"])
    la, bad_la = _coerce_numeric(chunk["launch_angle"])
    malformed |= bad_ev | bad_la

    desc = chunk["description"]
    ptype = chunk["pitch_type"]
    malformed |= desc.isna().to_numpy() | (desc.astype(str).str.strip() == "").to_numpy()

    with np.errstate(invalid="ignore"):
        degenerate = ~untracked & ~(tracking["sz_top"].to_numpy() > tracking["sz_bot"].to_numpy())

    in_season = np.ones(n, dtype=bool)
    if seasons is not None:
        lo, hi = seasons
        in_season = ((season >= lo) & (season <= hi)).fillna(True).to_numpy(dtype=bool)

    reason[degenerate] = "degenerate_zone"
    reason[untracked] = "untracked"
    reason[malformed] = "malformed"
    keep = reason == ""

    # plate appearances are counted whether or not the pitch was tracked
    pa_ok = in_season & ~malformed
    pa_keys = pd.DataFrame(
        {
            "batter_id": ids["batter_id"][pa_ok].astype(np.int64),
            "pitcher_id": ids["pitcher_id"][pa_ok].astype(np.int64),
            "season": season[pa_ok].astype(np.int64),
            "game_id": ids["game_id"][pa_ok].astype(np.int64),
            "at_bat_number": ids["at_bat_number"][pa_ok].astype(np.int64),
        }
    ).drop_duplicates(ignore_index=True)

    sel = keep & in_season
    frame = pd.DataFrame(
        {
            "stable_id": stable_id[sel],
            "season": season[sel].astype(np.int64).to_numpy(),
            "game_date": dates[sel].dt.strftime("%Y-%m-%d").to_numpy(),
            **{k: v[sel].astype(np.int64).to_numpy() for k, v in ids.items()},
            "pitch_type": ptype[sel].fillna("").astype(str).str.strip().to_numpy(),
            "description": desc[sel].astype(str).str.strip().to_numpy(),
            "launch_speed": ev[sel].to_numpy(),
            "launch_angle": la[sel].to_numpy(),
            **{c: tracking[c][sel].to_numpy() for c in TRACKING_COLUMNS},
        }
    )
    rejects = Counter(reason[~keep & in_season].tolist())
    return ParsedPitches(
        frame=frame,
        total_rows=int(in_season.sum()),
        rejects=rejects,
        out_of_season=int((~in_season).sum()),
        pa_keys=pa_keys,
    )


def parse_statcast_csv(path, season_filter: tuple[int, int] | None = None, id_offset: int = 0,
                       chunksize: int = 250_000) -> ParsedPitches:
    """Parse a Statcast export.

    Every data row is either returned or counted in ``rejects`` under one of
    ``untracked`` (a tracking field is empty), ``degenerate_zone``
    (``sz_top <= sz_bot``) or ``malformed`` (a required value is unparseable
    or absent). ``stable_id`` is ``id_offset`` plus the 0-based data-row
    ordinal in the file. Rows outside ``season_filter`` (inclusive year range)
    are skipped and counted separately.
    """
    check_columns(read_header(path))
    str_cols = {"pitch_type": str, "description": str, "game_date": str}
    parts = []
    ordinal = id_offset
    reader = pd.read_csv(
        path,
        usecols=list(REQUIRED_COLUMNS),
        dtype=str_cols,
        chunksize=chunksize,
        keep_default_na=False,
        na_values=["", "NA", "NaN", "nan", "null", "NULL", "None"],
        low_memory=False,
    )
    for chunk in reader:
        parts.append(_parse_chunk(chunk, ordinal, season_filter))
        ordinal += len(chunk)
    if not parts:
        return ParsedPitches(frame=_empty_pitch_frame())
    out = parts[0]
    for p in parts[1:]:
        out = out.extend(p)
    if out.rejects:
        log.info("%s: rejected %s", path, dict(out.rejects))
    return out


def parse_statcast_files(paths, season_filter=None) -> ParsedPitches:
    """Parse several exports; stable ids continue across files in the given order."""
    out = None
    offset = 0
    for path in paths:
        part = parse_statcast_csv(path, season_filter, id_offset=offset)
        offset += part.total_rows + part.out_of_season
        out = part if out is None else out.extend(part)
    return out if out is not None else ParsedPitches(frame=_empty_pitch_frame())


def _empty_pitch_frame() -> pd.DataFrame:
    cols = ["stable_id", "season", "game_date", *_ID_COLUMNS.values(), "pitch_type", "description",
            "launch_speed", "launch_angle", *TRACKING_COLUMNS]
    return pd.DataFrame({c: pd.Series(dtype=object) for c in cols})


@dataclass
class IngestReport:
    total_rows: int = 0
    tracked: int = 0
    untracked: int = 0
    rejects: dict = field(default_factory=dict)
    out_of_season: int = 0
    balls: dict = field(default_factory=lambda: {c.value: 0 for c in CATEGORIES})
    non_balls: int = 0
    uncategorizable: int = 0
    uncategorizable_codes: dict = field(default_factory=dict)
    contact_anomalies: int = 0

    @property
    def ball_count(self) -> int:
        return sum(self.balls.values())

    @property
    def tracked_fraction(self) -> float:
        return self.tracked / self.total_rows if self.total_rows else float("nan")

    def check(self) -> None:
        if self.total_rows != self.tracked + self.untracked:
            raise InvariantError("total rows != tracked + untracked")
        if self.tracked != self.ball_count + self.non_balls + self.uncategorizable:
            raise InvariantError("tracked != balls + non-balls + uncategorizable")
        if self.untracked != sum(self.rejects.values()):
            raise InvariantError("reject reasons do not sum to the untracked count")

    def to_dict(self) -> dict:
        return {
            "total_rows": self.total_rows,
            "tracked": self.tracked,
            "untracked": self.untracked,
            "rejects": dict(sorted(self.rejects.items())),
            "out_of_season": self.out_of_season,
            "balls": dict(self.balls),
            "ball_count": self.ball_count,
            "non_balls": self.non_balls,
            "uncategorizable": self.uncategorizable,
            "uncategorizable_codes": dict(sorted(self.uncategorizable_codes.items())),
            "contact_anomalies": self.contact_anomalies,
        }


def build_ball_dataset(
    pitches: ParsedPitches | pd.DataFrame,
    geometry: ZoneGeometry = DEFAULT_GEOMETRY,
    category_table: Mapping[str, PitchCategory] | None = None,
    swings=SWING_DESCRIPTIONS,
    takes=TAKE_DESCRIPTIONS,
) -> tuple[dict[PitchCategory, pd.DataFrame], IngestReport]:
    """Split parsed pitches into per-category ball frames.

    Pitches that are balls but carry a pitch-type code missing from
    ``category_table`` are dropped and counted as uncategorizable. A ball
    whose description is not in either label table aborts the build with
    ``ClassificationError``.
    """
    if isinstance(pitches, pd.DataFrame):
        pitches = ParsedPitches(frame=pitches, total_rows=len(pitches))
    table = DEFAULT_CATEGORY_TABLE if category_table is None else category_table
    df = pitches.frame
    untracked = sum(pitches.rejects.values())
    report = IngestReport(
        total_rows=pitches.total_rows,
        tracked=len(df),
        untracked=untracked,
        rejects=dict(pitches.rejects),
        out_of_season=pitches.out_of_season,
    )
    out = {c: empty_ball_frame() for c in CATEGORIES}
    if df.empty:
        report.check()
        return out, report

    cat_of = {code: PitchCategory.parse(cat).value for code, cat in table.items()}
    category = df["pitch_type"].map(cat_of)
    mappable = category.notna().to_numpy()
    is_ball = np.asarray(classify_ball(df["plate_x"], df["plate_z"], df["sz_top"], df["sz_bot"], geometry))
    report.non_balls = int((~is_ball).sum())
    unmapped = is_ball & ~mappable
    report.uncategorizable = int(unmapped.sum())
    report.uncategorizable_codes = {str(k): int(v) for k, v in Counter(df["pitch_type"][unmapped]).items()}

    balls = df[is_ball & mappable]
    labels = swing_labels(balls["description"], swings, takes)
    in_play = balls["description"].isin(IN_PLAY_DESCRIPTIONS).to_numpy()
    ev = balls["launch_speed"].to_numpy(dtype=np.float64)
    la = balls["launch_angle"].to_numpy(dtype=np.float64)
    report.contact_anomalies = int((in_play & ~(np.isfinite(ev) & np.isfinite(la))).sum())

    frame = pd.DataFrame(
        {
            "stable_id": balls["stable_id"].to_numpy(dtype=np.int64),
            "season": balls["season"].to_numpy(dtype=np.int64),
            "game_date": balls["game_date"].to_numpy(),
            "game_id": balls["game_id"].to_numpy(dtype=np.int64),
            "at_bat_number": balls["at_bat_number"].to_numpy(dtype=np.int64),
            "batter_id": balls["batter_id"].to_numpy(dtype=np.int64),
            "pitcher_id": balls["pitcher_id"].to_numpy(dtype=np.int64),
            "pitch_type": balls["pitch_type"].to_numpy(),
            "category": category[is_ball & mappable].to_numpy(),
            "description": balls["description"].to_numpy(),
            "label": labels,
            "contact_in_play": in_play,
            "ev": ev,
            "la": la,
            "plate_x": balls["plate_x"].to_numpy(dtype=np.float64),
            "norm_plate_z": np.asarray(normalize_vertical(balls["plate_z"], balls["sz_bot"], balls["sz_top"]),
                                       dtype=np.float64),
            **{c: balls[c].to_numpy(dtype=np.float64) for c in FEATURE_COLUMNS[2:]},
        },
        columns=list(BALL_COLUMNS),
    )
    for cat in CATEGORIES:
        part = frame[frame["category"] == cat.value].reset_index(drop=True)
        out[cat] = part
        report.balls[cat.value] = len(part)
    report.check()
    return out, report


def empty_ball_frame() -> pd.DataFrame:
    dtypes = {
        "stable_id": np.int64, "season": np.int64, "game_date": object, "game_id": np.int64,
        "at_bat_number": np.int64, "batter_id": np.int64, "pitcher_id": np.int64, "pitch_type": object,
        "category": object, "description": object, "label": np.int8, "contact_in_play": bool,
        "ev": np.float64, "la": np.float64, **dict.fromkeys(FEATURE_COLUMNS, np.float64),
    }
    return pd.DataFrame({c: pd.Series(dtype=dtypes[c]) for c in BALL_COLUMNS})


def concat_balls(parts: Mapping[PitchCategory, pd.DataFrame]) -> pd.DataFrame:
    """All categories in one frame, ordered by stable id."""
    frames = [f for f in parts.values() if len(f)]
    if not frames:
        return empty_ball_frame()
    return pd.concat(frames, ignore_index=True).sort_values("stable_id", kind="stable").reset_index(drop=True)


def split_categories(frame: pd.DataFrame) -> dict[PitchCategory, pd.DataFrame]:
    return {c: frame[frame["category"] == c.value].reset_index(drop=True) for c in CATEGORIES}


def plate_appearance_counts(pa_keys: pd.DataFrame | None) -> pd.DataFrame:
    """Distinct (game, at-bat) pairs per batter and per pitcher per season."""
    cols = ["role", "player_id", "season", "plate_appearances"]
    if pa_keys is None or pa_keys.empty:
        return pd.DataFrame({c: pd.Series(dtype=object if c == "role" else np.int64) for c in cols})
    out = []
    for role in ("batter", "pitcher"):
        g = (
            pa_keys.drop_duplicates([f"{role}_id", "season", "game_id", "at_bat_number"])
            .groupby([f"{role}_id", "season"], sort=True)
            .size()
            .rename("plate_appearances")
            .reset_index()
            .rename(columns={f"{role}_id": "player_id"})
        )
        g.insert(0, "role", role)
        out.append(g)
    return pd.concat(out, ignore_index=True)[cols]


def write_ball_dataset(frame: pd.DataFrame, path) -> None:
    frame = frame.loc[:, list(BALL_COLUMNS)]
    frame.to_csv(path, index=False, lineterminator="\n")


def read_ball_dataset(path) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    header = read_header(path)
    missing = [c for c in BALL_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"ball dataset {path} is missing column(s): {', '.join(missing)}")
    df = pd.read_csv(
        path,
        dtype={"game_date": str, "pitch_type": str, "category": str, "description": str},
        keep_default_na=False,
        na_values=[""],
        float_precision="round_trip",
    )
    for c in ("stable_id", "season", "game_id", "at_bat_number", "batter_id", "pitcher_id"):
        df[c] = df[c].astype(np.int64)
    df["label"] = df["label"].astype(np.int8)
    df["contact_in_play"] = df["contact_in_play"].astype(str).str.lower().map({"true": True, "false": False, "1": True, "0": False})
    if df["contact_in_play"].isna().any():
        raise SchemaError("contact_in_play must be boolean")
    df["contact_in_play"] = df["contact_in_play"].astype(bool)
    for c in ("ev", "la", *FEATURE_COLUMNS):
        df[c] = df[c].astype(np.float64)
    for c in ("pitch_type", "description"):
        df[c] = df[c].fillna("")
    bad = set(df["category"].unique()) - {c.value for c in CATEGORIES}
    if bad:
        raise SchemaError(f"unknown category value(s) in {path}: {sorted(map(str, bad))}")
    return df
