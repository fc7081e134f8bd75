import math

import numpy as np
import pandas as pd
import pytest

from plate_discipline import estimator, synth
from plate_discipline.errors import (
    ConfigError,
    DegenerateScaleError,
    IndexFormatError,
    InsufficientDataError,
    ParameterError,
)
from plate_discipline.ingest import FEATURE_COLUMNS, PitchCategory


def balls_from(features, labels, ids=None, category="fastball"):
    features = np.asarray(features, dtype=float)
    n = len(features)
    df = pd.DataFrame(features, columns=list(FEATURE_COLUMNS))
    df.insert(0, "stable_id", np.arange(n) if ids is None else ids)
    df["label"] = np.asarray(labels, dtype=np.int8)
    df["category"] = category
    return df


def test_fit_scaler_two_points():
    f = np.array([[0.0, 1.0, 2.0, 3.0, 4.0, 5.0], [2.0, 3.0, 6.0, 3.5, 4.2, 9.0]])
    s = estimator.fit_scaler(balls_from(f, [0, 1]))
    np.testing.assert_allclose(s.mean, f.mean(axis=0))
    np.testing.assert_allclose(s.std, np.abs(f[1] - f[0]) / math.sqrt(2))


def test_scaled_training_has_zero_mean_unit_std(small_synth):
    train, _ = small_synth
    fb = train[train["category"] == "fastball"]
    s = estimator.fit_scaler(fb)
    z = s.transform(fb[list(FEATURE_COLUMNS)].to_numpy())
    np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-10)
    np.testing.assert_allclose(z.std(axis=0, ddof=1), 1.0, atol=1e-10)
    # independent recompute with the statistics module formulas
    x = fb["release_speed"].tolist()
    m = math.fsum(x) / len(x)
    sd = math.sqrt(math.fsum((v - m) ** 2 for v in x) / (len(x) - 1))
    j = FEATURE_COLUMNS.index("release_speed")
    assert s.mean[j] == pytest.approx(m, rel=1e-12)
    assert s.std[j] == pytest.approx(sd, rel=1e-12)


def test_fit_scaler_row_order_invariant(small_synth):
    train, _ = small_synth
    fb = train[train["category"] == "fastball"]
    a = estimator.fit_scaler(fb)
    b = estimator.fit_scaler(fb.sample(frac=1.0, random_state=3))
    assert a == b


def test_constant_dimension_is_rejected():
    rng = np.random.default_rng(0)
    f = rng.normal(size=(50, 6))
    f[:, 3] = 2250.0
    with pytest.raises(DegenerateScaleError, match="release_spin_rate"):
        estimator.fit_scaler(balls_from(f, np.zeros(50)))
    # raw mode has nothing to fit
    assert estimator.fit_scaler(balls_from(f, np.zeros(50)), "raw").mode == "raw"


def test_unknown_scaling_mode():
    with pytest.raises(ConfigError):
        estimator.fit_scaler(balls_from(np.eye(6), np.zeros(6)), "minmax")


def test_p_s_is_a_multiple_of_one_over_k(small_synth):
    train, query = small_synth
    idx = estimator.build_index(train[train["category"] == "offspeed"], "offspeed", k_default=40)
    q = query[query["category"] == "offspeed"]
    p = estimator.estimate_swing_probability(idx, q)
    assert ((p >= 0) & (p <= 1)).all()
    np.testing.assert_array_equal(p * 40, np.round(p * 40))


def test_k_range():
    rng = np.random.default_rng(1)
    df = balls_from(rng.normal(size=(30, 6)), rng.integers(0, 2, 30))
    idx = estimator.build_index(df, "fastball", k_default=10)
    with pytest.raises(ParameterError):
        estimator.estimate_swing_probability(idx, np.zeros(6), k=0)
    with pytest.raises(ParameterError):
        estimator.estimate_swing_probability(idx, np.zeros(6), k=31)
    assert 0 <= estimator.estimate_swing_probability(idx, np.zeros(6), k=30) <= 1
    with pytest.raises(InsufficientDataError):
        estimator.build_index(df, "fastball", k_default=31)


def test_all_swings_gives_one():
    rng = np.random.default_rng(2)
    idx = estimator.build_index(balls_from(rng.normal(size=(25, 6)), np.ones(25)), "fastball", k_default=5)
    assert estimator.estimate_swing_probability(idx, rng.normal(size=6)) == 1.0


def test_k_equal_one_copies_nearest_label():
    f = np.zeros((3, 6))
    f[:, 0] = [0.0, 1.0, 5.0]
    f[:, 1:] = np.arange(15).reshape(3, 5) * 1e-3
    idx = estimator.build_index(balls_from(f, [1, 0, 1]), "fastball", k_default=1, scaling="raw")
    q = np.zeros(6)
    q[0] = 0.9
    assert estimator.estimate_swing_probability(idx, q) == 0.0
    q[0] = 0.2
    assert estimator.estimate_swing_probability(idx, q) == 1.0


def test_twenty_point_hand_example():
    # 20 training balls on a line in plate_x; others spread but tiny in raw scale
    x = np.arange(20, dtype=float)
    f = np.zeros((20, 6))
    f[:, 0] = x
    labels = (x % 3 == 0).astype(int)  # swings at 0, 3, 6, 9, 12, 15, 18
    idx = estimator.build_index(balls_from(f, labels, category="breaking_ball"), "breaking_ball", k_default=5, scaling="raw")
    q = np.zeros(6)
    q[0] = 7.2  # neighbors 7, 8, 6, 9, 5 -> swings at 6 and 9
    assert estimator.estimate_swing_probability(idx, q) == 2 / 5
    q[0] = 7.5  # 7 and 8 tie; 6 and 9 tie; then 5 and 10 tie -> 5 by lower id
    d, ids, lab = idx.neighbors(q, 5)
    assert ids.tolist() == [[7, 8, 6, 9, 5]]
    assert lab.sum() == 2


def test_neighbors_ignore_query_category():
    rng = np.random.default_rng(4)
    df = balls_from(rng.normal(size=(40, 6)), rng.integers(0, 2, 40))
    idx = estimator.build_index(df, "fastball", k_default=5)
    q = df.iloc[:3].copy()
    a = estimator.estimate_swing_probability(idx, q)
    q["category"] = "offspeed"
    assert np.array_equal(a, estimator.estimate_swing_probability(idx, q))


def test_build_index_rejects_mixed_categories(small_synth):
    train, _ = small_synth
    with pytest.raises(ParameterError):
        estimator.build_index(train.iloc[:500], "fastball")


def test_save_load_round_trip(tmp_path, small_synth):
    train, query = small_synth
    idx = estimator.build_index(train[train["category"] == "breaking_ball"], "breaking_ball", k_default=50)
    path = tmp_path / "b.idx"
    estimator.save_index(idx, path)
    back = estimator.load_index(path)
    assert back.category is PitchCategory.BREAKING_BALL and back.k_default == 50
    assert back.scaler == idx.scaler
    assert np.array_equal(back.points, idx.points)
    assert np.array_equal(back.stable_ids, idx.stable_ids)
    assert np.array_equal(back.labels, idx.labels)
    q = query[query["category"] == "breaking_ball"]
    assert np.array_equal(estimator.estimate_swing_probability(idx, q), estimator.estimate_swing_probability(back, q))
    estimator.save_index(back, tmp_path / "again.idx")
    assert (tmp_path / "again.idx").read_bytes() == path.read_bytes()


def test_load_index_detects_corruption(tmp_path, small_synth):
    train, _ = small_synth
    idx = estimator.build_index(train[train["category"] == "offspeed"], "offspeed", k_default=10)
    path = tmp_path / "o.idx"
    estimator.save_index(idx, path)
    raw = bytearray(path.read_bytes())
    raw[200] ^= 1
    path.write_bytes(bytes(raw))
    with pytest.raises(IndexFormatError):
        estimator.load_index(path)
    (tmp_path / "junk.idx").write_bytes(b"not an index")
    with pytest.raises(IndexFormatError):
        estimator.load_index(tmp_path / "junk.idx")
    with pytest.raises(FileNotFoundError):
        estimator.load_index(tmp_path / "missing.idx")


def test_batching_does_not_change_results(monkeypatch, small_synth):
    train, query = small_synth
    idx = estimator.build_indexes(train, k_default=100)
    whole = estimator.score_dataset(idx, query)
    monkeypatch.setattr(estimator, "QUERY_CHUNK", 37)
    chunked = estimator.score_dataset(idx, query)
    pd.testing.assert_frame_equal(whole, chunked)
    # and a reversed query order scores each ball the same
    rev = estimator.score_dataset(idx, query.iloc[::-1])
    assert np.array_equal(rev["p_s"].to_numpy()[::-1], whole["p_s"].to_numpy())


def test_training_order_does_not_change_index(small_synth):
    train, query = small_synth
    fb = train[train["category"] == "fastball"]
    a = estimator.build_index(fb, "fastball", k_default=100)
    b = estimator.build_index(fb.sample(frac=1.0, random_state=9), "fastball", k_default=100)
    q = query[query["category"] == "fastball"]
    assert np.array_equal(estimator.estimate_swing_probability(a, q), estimator.estimate_swing_probability(b, q))


def test_score_dataset_columns_and_identity(small_synth):
    train, query = small_synth
    scored = estimator.score_dataset(estimator.build_indexes(train, k_default=200), query)
    assert list(scored.columns[-4:]) == ["p_s", "ds", "cq", "ads"]
    assert len(scored) == len(query)
    assert np.array_equal(scored["ads"], scored["ds"] + scored["cq"])
    assert np.array_equal(scored["stable_id"], query["stable_id"])
    r = scored["label"].to_numpy()
    np.testing.assert_allclose(scored["ds"], np.where(r == 1, scored["p_s"] - 1, scored["p_s"]))


def test_score_dataset_missing_index(small_synth):
    train, query = small_synth
    idx = estimator.build_indexes(train, k_default=10)
    del idx[PitchCategory.OFFSPEED]
    with pytest.raises(ConfigError):
        estimator.score_dataset(idx, query)


def test_error_shrinks_with_more_training_data():
    """Consistency: more training balls at fixed k/n ratio bring p_s closer to the truth."""
    rng = np.random.default_rng(31)
    query = synth.synthetic_balls(rng, 2000, seasons=(2024, 2024), first_id=10**7)
    q = query[query["category"] == "fastball"]
    maes = []
    for n in (4_000, 40_000, 400_000):
        train = synth.synthetic_balls(np.random.default_rng(n), n)
        fb = train[train["category"] == "fastball"]
        k = max(10, int(round(len(fb) ** 0.6)))
        idx = estimator.build_index(fb, "fastball", k_default=k)
        p = estimator.estimate_swing_probability(idx, q)
        maes.append(float(np.mean(np.abs(p - q["p_true"].to_numpy()))))
    assert maes[0] > maes[1] > maes[2]
