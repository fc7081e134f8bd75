import csv
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plate_discipline import ingest
from plate_discipline.errors import (
    CategorizationError,
    ClassificationError,
    DegenerateZoneError,
    SchemaError,
    UntrackedPitchError,
)
from plate_discipline.ingest import PitchCategory, ZoneGeometry

GEOM = ingest.DEFAULT_GEOMETRY


def _rows(sample_csv, idx):
    df = pd.read_csv(sample_csv, dtype=str, keep_default_na=False)
    return df.iloc[idx]


def test_parse_three_good_rows(tmp_path, sample_csv):
    path = tmp_path / "three.csv"
    _rows(sample_csv, [0, 1, 2]).to_csv(path, index=False)
    parsed = ingest.parse_statcast_csv(path)
    assert len(parsed) == 3
    assert sum(parsed.rejects.values()) == 0
    assert parsed.frame["stable_id"].tolist() == [0, 1, 2]


def test_parse_counts_untracked_row(tmp_path, sample_csv):
    rows = _rows(sample_csv, [0, 1, 2]).copy()
    rows.iloc[1, rows.columns.get_loc("plate_x")] = ""
    path = tmp_path / "three.csv"
    rows.to_csv(path, index=False)
    parsed = ingest.parse_statcast_csv(path)
    assert len(parsed) == 2
    assert dict(parsed.rejects) == {"untracked": 1}
    assert parsed.frame["stable_id"].tolist() == [0, 2]


def test_parse_counts_malformed_value(tmp_path, sample_csv):
    rows = _rows(sample_csv, [0, 1]).copy()
    rows.iloc[0, rows.columns.get_loc("release_speed")] = "fast"
    path = tmp_path / "bad.csv"
    rows.to_csv(path, index=False)
    parsed = ingest.parse_statcast_csv(path)
    assert len(parsed) == 1 and dict(parsed.rejects) == {"malformed": 1}


def test_parse_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        ingest.parse_statcast_csv(tmp_path / "nope.csv")


def test_parse_missing_column_names_it(tmp_path, sample_csv):
    df = pd.read_csv(sample_csv).drop(columns=["pfx_z"])
    path = tmp_path / "no_pfx.csv"
    df.to_csv(path, index=False)
    with pytest.raises(SchemaError, match="pfx_z"):
        ingest.parse_statcast_csv(path)


def test_header_only_file(tmp_path, sample_csv):
    path = tmp_path / "empty.csv"
    path.write_text(sample_csv.read_text().splitlines()[0] + "\n")
    parsed = ingest.parse_statcast_csv(path)
    balls, report = ingest.build_ball_dataset(parsed)
    assert len(parsed) == 0 and report.total_rows == 0 and report.ball_count == 0


def test_sample_fixture_matches_manifest(sample_csv, sample_manifest):
    parsed = ingest.parse_statcast_csv(sample_csv)
    balls, report = ingest.build_ball_dataset(parsed)
    got = report.to_dict()
    for key in ("total_rows", "tracked", "untracked", "rejects", "out_of_season", "balls", "ball_count",
                "non_balls", "uncategorizable", "uncategorizable_codes", "contact_anomalies"):
        assert got[key] == sample_manifest[key], key
    frame = ingest.concat_balls(balls)
    assert frame["stable_id"].tolist() == sample_manifest["ball_stable_ids"]
    assert frame["label"].tolist() == sample_manifest["ball_labels"]
    np.testing.assert_allclose(frame["norm_plate_z"], sample_manifest["ball_norm_plate_z"], atol=1e-12)
    pa = ingest.plate_appearance_counts(parsed.pa_keys)
    batters = pa[pa["role"] == "batter"]
    for season in (2023, 2024):
        got_pa = {str(r.player_id): r.plate_appearances for r in batters[batters["season"] == season].itertuples()}
        assert got_pa == sample_manifest[f"batter_plate_appearances_{season}"]


def test_sample_fixture_field_values(sample_csv):
    parsed = ingest.parse_statcast_csv(sample_csv)
    row = parsed.frame.set_index("stable_id").loc[2]
    assert row["pitch_type"] == "CH" and row["description"] == "hit_into_play"
    assert row["launch_speed"] == 95.2 and row["launch_angle"] == 18.0
    assert row["batter_id"] == 600001 and row["pitcher_id"] == 500001
    assert row["game_id"] == 745001 and row["season"] == 2024 and row["game_date"] == "2024-04-02"


def test_season_filter(sample_csv):
    parsed = ingest.parse_statcast_csv(sample_csv, season_filter=(2024, 2024))
    balls, report = ingest.build_ball_dataset(parsed)
    assert report.out_of_season == 1
    assert report.total_rows == 13
    assert report.balls["fastball"] == 3
    assert 13 not in ingest.concat_balls(balls)["stable_id"].tolist()


def test_stable_ids_continue_across_files(tmp_path, sample_csv):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    _rows(sample_csv, [0, 1]).to_csv(a, index=False)
    _rows(sample_csv, [2, 3, 4]).to_csv(b, index=False)
    parsed = ingest.parse_statcast_files([a, b])
    assert parsed.frame["stable_id"].tolist() == [0, 1, 2, 3, 4]


@pytest.mark.parametrize("desc", sorted(ingest.SWING_DESCRIPTIONS))
def test_swing_descriptions(desc):
    assert ingest.derive_swing_label(desc) == 1


@pytest.mark.parametrize("desc", sorted(ingest.TAKE_DESCRIPTIONS))
def test_take_descriptions(desc):
    assert ingest.derive_swing_label(desc) == 0


# every description value that occurs in 2021-2024 regular-season Statcast data,
# with its swing/take meaning
OBSERVED_DESCRIPTIONS = {
    "ball": 0, "blocked_ball": 0, "called_strike": 0, "hit_by_pitch": 0, "pitchout": 0,
    "automatic_ball": 0, "automatic_strike": 0,
    "swinging_strike": 1, "swinging_strike_blocked": 1, "foul": 1, "foul_tip": 1, "foul_bunt": 1,
    "missed_bunt": 1, "bunt_foul_tip": 1, "hit_into_play": 1, "foul_pitchout": 1,
}


def test_observed_description_table():
    for desc, r in OBSERVED_DESCRIPTIONS.items():
        assert ingest.derive_swing_label(desc) == r, desc


def test_unknown_description_lists_value():
    with pytest.raises(ClassificationError, match="warp_speed"):
        ingest.derive_swing_label("warp_speed")
    with pytest.raises(ClassificationError) as err:
        ingest.swing_labels(pd.Series(["ball", "mystery", "other", "mystery"]))
    assert err.value.values == ["mystery", "other"]


def test_unknown_description_aborts_build(tmp_path, sample_csv):
    rows = _rows(sample_csv, [0, 1]).copy()
    rows.iloc[0, rows.columns.get_loc("description")] = "mystery"
    path = tmp_path / "x.csv"
    rows.to_csv(path, index=False)
    with pytest.raises(ClassificationError, match="mystery"):
        ingest.build_ball_dataset(ingest.parse_statcast_csv(path))


@pytest.mark.parametrize(
    "code, cat",
    [("FF", PitchCategory.FASTBALL), ("SL", PitchCategory.BREAKING_BALL), ("CH", PitchCategory.OFFSPEED),
     ("SI", PitchCategory.FASTBALL), ("ST", PitchCategory.BREAKING_BALL), ("FS", PitchCategory.OFFSPEED)],
)
def test_categorize(code, cat):
    assert ingest.categorize_pitch(code) is cat


def test_categorize_unmapped():
    with pytest.raises(CategorizationError, match="PO"):
        ingest.categorize_pitch("PO")
    with pytest.raises(CategorizationError):
        ingest.categorize_pitch("")


def test_categorize_override_table():
    table = {"FF": PitchCategory.OFFSPEED}
    assert ingest.categorize_pitch("FF", table) is PitchCategory.OFFSPEED
    with pytest.raises(CategorizationError):
        ingest.categorize_pitch("SL", table)


def test_classify_ball_examples():
    assert ingest.classify_ball(0.0, 2.5, 3.5, 1.5) is False
    assert ingest.classify_ball(2.0, 2.5, 3.5, 1.5) is True
    assert ingest.classify_ball(2.0, -10.0, 3.5, 1.5) is True
    geom = ZoneGeometry(half_width=0.708, ball_radius=0.121)
    assert ingest.classify_ball(0.84, 2.5, 3.5, 1.5, geom) is True
    assert ingest.classify_ball(0.82, 2.5, 3.5, 1.5, geom) is False
    assert ingest.classify_ball(0.84, 2.5, 3.5, 1.5) is True
    assert ingest.classify_ball(0.82, 2.5, 3.5, 1.5) is False


def test_classify_ball_vertical_boundary():
    r = GEOM.ball_radius
    assert ingest.classify_ball(0.0, 3.5 + r + 1e-9, 3.5, 1.5) is True
    assert ingest.classify_ball(0.0, 3.5 + r - 1e-9, 3.5, 1.5) is False
    assert ingest.classify_ball(0.0, 1.5 - r - 1e-9, 3.5, 1.5) is True


def test_classify_ball_untracked():
    with pytest.raises(UntrackedPitchError):
        ingest.classify_ball(None, 2.5, 3.5, 1.5)
    with pytest.raises(UntrackedPitchError):
        ingest.classify_ball(np.array([0.1, np.nan]), 2.5, 3.5, 1.5)


def test_zone_geometry_must_be_positive():
    with pytest.raises(SchemaError):
        ZoneGeometry(half_width=0.0)


zone_bot = st.floats(1.0, 2.0)
zone_h = st.floats(1.2, 2.4)


@settings(max_examples=300, deadline=None)
@given(zone_bot, zone_h, st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_inside_shrunk_zone_is_not_ball(bot, h, fx, fz):
    r = GEOM.ball_radius
    # any point of the zone itself (shrunk rectangle is contained in it)
    x = (2 * fx - 1) * (GEOM.half_width - r)
    z = bot + r + fz * (h - 2 * r)
    assert ingest.classify_ball(x, z, bot + h, bot) is False


@settings(max_examples=300, deadline=None)
@given(zone_bot, zone_h, st.floats(-4, 4), st.floats(-2, 7), st.floats(1e-6, 3))
def test_outside_expanded_zone_is_ball(bot, h, x, z, margin):
    r = GEOM.ball_radius
    top = bot + h
    if abs(x) <= GEOM.half_width + r and bot - r <= z <= top + r:
        x = math.copysign(GEOM.half_width + r + margin, x if x else 1.0)
    assert ingest.classify_ball(x, z, top, bot) is True


def test_normalize_vertical_examples():
    assert ingest.normalize_vertical(1.5, 1.5, 3.5) == 0.0
    assert ingest.normalize_vertical(3.5, 1.5, 3.5) == 1.0
    assert ingest.normalize_vertical(2.5, 1.5, 3.5) == 0.5
    assert ingest.normalize_vertical(0.5, 1.5, 3.5) == -0.5


def test_normalize_vertical_degenerate():
    with pytest.raises(DegenerateZoneError):
        ingest.normalize_vertical(2.0, 3.0, 3.0)
    with pytest.raises(DegenerateZoneError):
        ingest.normalize_vertical(2.0, 3.5, 1.5)


@settings(max_examples=300, deadline=None)
@given(st.floats(-2, 6), zone_bot, zone_h, st.floats(0.1, 10), st.floats(-5, 5))
def test_normalize_vertical_affine_invariant(z, bot, h, a, b):
    top = bot + h
    base = ingest.normalize_vertical(z, bot, top)
    moved = ingest.normalize_vertical(a * z + b, a * bot + b, a * top + b)
    assert moved == pytest.approx(base, abs=1e-9)


def test_empty_input_gives_zero_report():
    balls, report = ingest.build_ball_dataset(ingest.ParsedPitches(frame=ingest._empty_pitch_frame()))
    assert report.total_rows == 0 and report.tracked == 0 and report.ball_count == 0
    assert all(len(f) == 0 for f in balls.values())


def _independent_recount(path):
    """Recount a raw fixture with the csv module and the plain zone inequality."""
    half, r = 8.5 / 12, 1.45 / 12
    fast, breaking, off = {"FF", "SI", "FC", "FA", "FT"}, {"SL", "CU", "KC", "SV", "ST", "SC", "CS"}, {"CH", "FS", "FO", "KN", "EP"}
    tracking = ("plate_x", "plate_z", "sz_top", "sz_bot", "release_speed", "release_spin_rate", "pfx_x", "pfx_z")
    out = {"total_rows": 0, "tracked": 0, "untracked": 0, "non_balls": 0, "uncategorizable": 0,
           "balls": {"fastball": 0, "breaking_ball": 0, "offspeed": 0}, "swings": 0}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out["total_rows"] += 1
            if any(row[c] == "" for c in tracking):
                out["untracked"] += 1
                continue
            v = {c: float(row[c]) for c in tracking}
            if not v["sz_top"] > v["sz_bot"]:
                out["untracked"] += 1
                continue
            out["tracked"] += 1
            ball = abs(v["plate_x"]) > half + r or v["plate_z"] > v["sz_top"] + r or v["plate_z"] < v["sz_bot"] - r
            if not ball:
                out["non_balls"] += 1
                continue
            code = row["pitch_type"]
            cat = "fastball" if code in fast else "breaking_ball" if code in breaking else "offspeed" if code in off else None
            if cat is None:
                out["uncategorizable"] += 1
                continue
            out["balls"][cat] += 1
            out["swings"] += row["description"] in {"swinging_strike", "foul", "foul_tip", "hit_into_play"}
    return out


def test_thousand_row_fixture_matches_recount(statcast_1000):
    expected = _independent_recount(statcast_1000)
    balls, report = ingest.build_ball_dataset(ingest.parse_statcast_csv(statcast_1000))
    got = report.to_dict()
    for key in ("total_rows", "tracked", "untracked", "non_balls", "uncategorizable", "balls"):
        assert got[key] == expected[key], key
    assert int(ingest.concat_balls(balls)["label"].sum()) == expected["swings"]
    assert expected["balls"]["fastball"] > 0 and expected["untracked"] > 0 and expected["uncategorizable"] > 0


def test_report_count_identities(statcast_1000):
    _, report = ingest.build_ball_dataset(ingest.parse_statcast_csv(statcast_1000))
    assert report.total_rows == report.tracked + report.untracked
    assert report.tracked == report.ball_count + report.non_balls + report.uncategorizable


def test_chunked_parse_matches_single_pass(statcast_1000):
    whole = ingest.parse_statcast_csv(statcast_1000)
    chunked = ingest.parse_statcast_csv(statcast_1000, chunksize=97)
    pd.testing.assert_frame_equal(whole.frame, chunked.frame)
    assert whole.rejects == chunked.rejects


def test_ball_dataset_round_trip(tmp_path, statcast_1000):
    balls, _ = ingest.build_ball_dataset(ingest.parse_statcast_csv(statcast_1000))
    frame = ingest.concat_balls(balls)
    path = tmp_path / "balls.csv"
    ingest.write_ball_dataset(frame, path)
    back = ingest.read_ball_dataset(path)
    pd.testing.assert_frame_equal(frame, back, check_dtype=False)
    for c in ingest.FEATURE_COLUMNS:
        assert np.array_equal(frame[c].to_numpy(), back[c].to_numpy())


def test_read_ball_dataset_schema(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("stable_id,label\n1,0\n")
    with pytest.raises(SchemaError, match="plate_x"):
        ingest.read_ball_dataset(path)
