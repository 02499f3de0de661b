import math
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risctl.synth import PLT_HEADER, write_corpus
from risctl.trajectory import (DatasetManifest, NormStats, PltParseError, Trajectory,
                               assign_splits, denormalize, heading_change, make_windows,
                               mean_haversine_error, normalize, parse_plt, prepare_dataset,
                               resample, split_windows)
from risctl.geom import GeoPoint

HEADER = PLT_HEADER.rstrip("\n")
SAMPLE = "39.984702,116.318417,0,492,39744.245,2008-10-23,05:53:05"


def record(lat, lon, when):
    return f"{lat:.6f},{lon:.6f},0,100,0,{when:%Y-%m-%d},{when:%H:%M:%S}"


def plt_text(points, start=datetime(2008, 10, 23, 5, 53, 5)):
    return HEADER + "\n" + "\n".join(record(la, lo, start + timedelta(seconds=s))
                                     for la, lo, s in points) + "\n"


def line_traj(n, dt=5.0, dlat=1e-4, dlon=2e-4):
    k = np.arange(n)
    return Trajectory(39.9 + dlat * k, 116.3 + dlon * k, dt * k.astype(float))


def test_header_is_six_lines():
    assert len(PLT_HEADER.splitlines()) == 6


def test_parse_minimal_file():
    t = parse_plt(HEADER + "\n" + SAMPLE + "\n" + SAMPLE.replace("05:53:05", "05:53:10"))
    assert len(t) == 2
    assert t.lat[0] == 39.984702 and t.lon[0] == 116.318417
    ref = datetime(2008, 10, 23, 5, 53, 5, tzinfo=timezone.utc).timestamp()
    assert t.t[0] == ref and t.t[1] == ref + 5


def test_parse_corrupt_line_names_line():
    text = plt_text([(39.9, 116.3, 0), (39.9, 116.3, 5)]).splitlines()
    text.insert(7, "garbage,line")
    with pytest.raises(PltParseError) as exc:
        parse_plt("\n".join(text), "f.plt")
    assert exc.value.line == 8
    assert "line 8" in str(exc.value)


def test_parse_too_few_points():
    with pytest.raises(PltParseError):
        parse_plt(plt_text([(39.9, 116.3, 0)]))


def test_parse_drops_backwards_time():
    t = parse_plt(plt_text([(39.9, 116.3, 0), (39.9, 116.3, 10), (39.9, 116.3, 5), (39.9, 116.3, 15)]))
    assert len(t) == 3 and t.dropped == 1


def test_resample_fixed_point():
    t = line_traj(12)
    (r,) = resample(t, 5.0)
    np.testing.assert_allclose(r.lat, t.lat, rtol=0, atol=1e-12)
    np.testing.assert_allclose(r.lon, t.lon, rtol=0, atol=1e-12)


def test_resample_midpoint():
    t = Trajectory(np.array([39.0, 39.001]), np.array([116.0, 116.002]), np.array([0.0, 10.0]))
    (r,) = resample(t, 5.0)
    assert len(r) == 3
    assert r.lat[1] == pytest.approx(39.0005, abs=1e-12)
    assert r.lon[1] == pytest.approx(116.001, abs=1e-12)


def test_resample_splits_at_gap():
    pts = [(39.9, 116.3, s) for s in (0, 5, 10, 15)] + [(39.91, 116.31, s) for s in (100, 105, 110)]
    segs = resample(parse_plt(plt_text(pts)), 5.0)
    assert [len(s) for s in segs] == [4, 3]
    assert segs[1].t[0] == segs[0].t[0] + 100


def test_resample_too_short():
    with pytest.raises(ValueError):
        resample(line_traj(2, dt=2.0), 5.0)


@pytest.mark.parametrize("n, expected", [(9, 1), (20, 12), (8, 0), (3, 0)])
def test_make_windows_counts(n, expected):
    assert len(make_windows(line_traj(n))) == expected


def test_make_windows_horizon_targets():
    t = line_traj(20)
    w = make_windows(t, 8, 10)
    assert len(w) == 20 - 8 - 10 + 1
    np.testing.assert_array_equal(w.targets[0], t.coords()[17])


def test_normalize_round_trip():
    s = NormStats(39.9, 116.3, 0.01, 0.02)
    np.testing.assert_array_equal(normalize([[39.9, 116.3]], s), [[0, 0]])
    x = np.random.default_rng(0).normal([39.9, 116.3], 0.01, (50, 2))
    np.testing.assert_allclose(denormalize(normalize(x, s), s), x, rtol=0, atol=1e-12)
    with pytest.raises(ValueError):
        NormStats(0, 0, 0, 1)


def test_mean_haversine_error_examples():
    a = [GeoPoint(0, 0), GeoPoint(0, 0)]
    assert mean_haversine_error(a, a) == 0
    assert mean_haversine_error([GeoPoint(0, 1)], [GeoPoint(0, 0)]) == pytest.approx(111194.93, abs=0.1)
    # 0 m and 100 m errors
    dlat = math.degrees(100 / 6_371_000)
    assert mean_haversine_error([[0, 0], [dlat, 0]], [[0, 0], [0, 0]]) == pytest.approx(50.0)
    with pytest.raises(ValueError):
        mean_haversine_error([], [])


def test_heading_change_straight_and_turn():
    t = line_traj(20).coords()
    assert heading_change(t, 8) == pytest.approx(0.0, abs=1e-6)
    bent = t.copy()
    bent[10:, 1] = bent[9, 1]
    bent[10:, 0] = bent[9, 0] + 3e-4 * np.arange(1, 11)
    assert heading_change(bent, 8) > math.radians(30)
    still = np.tile(t[:1], (20, 1))
    assert heading_change(still, 8) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 60), st.floats(0.5, 20))
def test_pipeline_deterministic(n, dt):
    t = line_traj(n, dt=3.0)
    try:
        a = resample(t, dt)
    except ValueError:
        return
    b = resample(t, dt)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(make_windows(x).inputs, make_windows(y).inputs)


def test_assign_splits_deterministic():
    names = [f"{i:03d}.plt" for i in range(71)]
    s = assign_splits(names, 0)
    assert s == assign_splits(list(reversed(names)), 0)
    counts = {k: sum(v == k for v in s.values()) for k in ("train", "val", "test")}
    assert counts == {"train": 57, "val": 7, "test": 7}
    assert s != assign_splits(names, 1)


def test_prepare_dataset_empty_dir(tmp_path):
    with pytest.raises(FileNotFoundError, match="no trajectories"):
        prepare_dataset(tmp_path)


def test_prepare_dataset_71_files(tmp_path):
    write_corpus(tmp_path, n_files=71, seed=3, duration=(300.0, 400.0))
    (tmp_path / "broken.plt").write_text(HEADER + "\nnot,a,record\n")
    m = prepare_dataset(tmp_path)
    assert len(m.files) == 71
    assert m.unreadable == ["broken.plt"]
    assert sum(c["files"] for c in m.counts().values()) == 71
    again = prepare_dataset(tmp_path)
    assert again.to_json() == m.to_json()
    back = DatasetManifest.from_json(m.to_json())
    assert back.to_json() == m.to_json() and back.stats == m.stats
    w = split_windows(m, "train")
    assert len(w) == m.counts()["train"]["windows"]


def test_manifest_version_check(tmp_path):
    write_corpus(tmp_path, n_files=3, seed=0, duration=(300.0, 300.0))
    text = prepare_dataset(tmp_path).to_json().replace('"version": 1', '"version": 99')
    with pytest.raises(ValueError):
        DatasetManifest.from_json(text)
