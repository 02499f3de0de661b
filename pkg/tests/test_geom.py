import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risctl.geom import (EARTH_RADIUS_M, GeoPoint, LocalPoint, from_local, haversine_arrays,
                         haversine_m, separation_angle, to_local)


def law_of_cosines_m(lat1, lon1, lat2, lon2):
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dl = math.radians(lon2 - lon1)
    c = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dl)
    return EARTH_RADIUS_M * math.acos(max(-1.0, min(1.0, c)))


def test_haversine_identical_points():
    p = GeoPoint(39.9, 116.3)
    assert haversine_m(p, p) == 0.0


def test_haversine_one_degree_equator():
    d = haversine_m(GeoPoint(0, 0), GeoPoint(0, 1))
    assert d == pytest.approx(law_of_cosines_m(0, 0, 0, 1), abs=1e-6)
    assert d == pytest.approx(111194.93, abs=0.1)


@settings(max_examples=200, deadline=None)
@given(st.floats(-80, 80), st.floats(-170, 170), st.floats(-80, 80), st.floats(-170, 170))
def test_haversine_matches_law_of_cosines(la1, lo1, la2, lo2):
    d = haversine_m(GeoPoint(la1, lo1), GeoPoint(la2, lo2))
    ref = law_of_cosines_m(la1, lo1, la2, lo2)
    # law of cosines loses precision for tiny separations
    assert d == pytest.approx(ref, rel=1e-6, abs=1.0)
    assert d == pytest.approx(haversine_m(GeoPoint(la2, lo2), GeoPoint(la1, lo1)))


def test_haversine_arrays_broadcast():
    d = haversine_arrays(0.0, 0.0, np.zeros(3), np.array([0.0, 1.0, 2.0]))
    assert d.shape == (3,)
    assert d[0] == 0.0
    assert d[2] == pytest.approx(2 * d[1], rel=1e-12)


def test_geopoint_range_checks():
    with pytest.raises(ValueError):
        GeoPoint(91, 0)
    with pytest.raises(ValueError):
        GeoPoint(0, 181)


def test_to_local_origin_and_east():
    o = GeoPoint(0, 0)
    assert to_local(o, o) == LocalPoint(0.0, 0.0)
    q = to_local(o, GeoPoint(0, 0.001))
    assert q.y == 0.0
    assert q.x == pytest.approx(haversine_m(o, GeoPoint(0, 0.001)), rel=1e-3)
    assert q.x == pytest.approx(111.19, abs=0.01)


def test_to_local_rejects_far_points():
    with pytest.raises(ValueError):
        to_local(GeoPoint(0, 0), GeoPoint(0, 1.5))


@settings(max_examples=100, deadline=None)
@given(st.floats(-60, 60), st.floats(-170, 170), st.floats(-0.05, 0.05), st.floats(-0.05, 0.05))
def test_local_round_trip(lat, lon, dlat, dlon):
    o = GeoPoint(lat, lon)
    p = GeoPoint(lat + dlat, lon + dlon)
    back = from_local(o, to_local(o, p))
    assert back.lat == pytest.approx(p.lat, abs=1e-9)
    assert back.lon == pytest.approx(p.lon, abs=1e-9)


def test_local_distances_match_haversine_at_city_scale():
    o = GeoPoint(39.98, 116.33)
    p = GeoPoint(39.983, 116.334)
    q = to_local(o, p)
    assert math.hypot(q.x, q.y) == pytest.approx(haversine_m(o, p), rel=1e-3)


@pytest.mark.parametrize("b, expected", [((2, 0), 0.0), ((0, 1), math.pi / 2), ((-1, 0), math.pi)])
def test_separation_angle_examples(b, expected):
    assert separation_angle(LocalPoint(0, 0), LocalPoint(1, 0), LocalPoint(*b)) == pytest.approx(expected)


def test_separation_angle_degenerate():
    with pytest.raises(ValueError):
        separation_angle((0, 0), (0, 0), (1, 0))


@settings(max_examples=100, deadline=None)
@given(st.floats(-100, 100), st.floats(-100, 100), st.floats(-100, 100), st.floats(-100, 100))
def test_separation_angle_range_and_symmetry(ax, ay, bx, by):
    if math.hypot(ax, ay) < 1e-3 or math.hypot(bx, by) < 1e-3:
        return
    lam = separation_angle((0, 0), (ax, ay), (bx, by))
    assert 0.0 <= lam <= math.pi
    assert lam == pytest.approx(separation_angle((0, 0), (bx, by), (ax, ay)))
