"""Geographic and planar geometry helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_M = 6_371_000.0

# equirectangular projection is only used inside a small scenario footprint
MAX_PROJECTION_DEG = 1.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float
    t: float | None = None

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class LocalPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("local coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters on a spherical Earth."""
    return float(haversine_arrays(a.lat, a.lon, b.lat, b.lon))


def haversine_arrays(lat1, lon1, lat2, lon2):
    """Vectorised haversine over degree arrays; broadcasts like numpy."""
    phi1 = np.radians(lat1)
    phi2 = np.radians(lat2)
    dphi = phi2 - phi1
    dlmb = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dphi / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def _check_projectable(origin_lat, origin_lon, lat, lon):
    dlat = np.abs(np.asarray(lat) - origin_lat)
    dlon = np.abs(np.asarray(lon) - origin_lon)
    if np.any(dlat >= MAX_PROJECTION_DEG) or np.any(dlon >= MAX_PROJECTION_DEG):
        raise ValueError("point is more than 1 degree from the projection origin")


def to_local(origin: GeoPoint, p: GeoPoint) -> LocalPoint:
    """Equirectangular projection of ``p`` into meters east/north of ``origin``."""
    x, y = to_local_arrays(origin, p.lat, p.lon)
    return LocalPoint(float(x), float(y))


def to_local_arrays(origin: GeoPoint, lat, lon):
    _check_projectable(origin.lat, origin.lon, lat, lon)
    k = EARTH_RADIUS_M * math.cos(math.radians(origin.lat))
    x = k * np.radians(np.asarray(lon, dtype=float) - origin.lon)
    y = EARTH_RADIUS_M * np.radians(np.asarray(lat, dtype=float) - origin.lat)
    return x, y


def from_local(origin: GeoPoint, q: LocalPoint) -> GeoPoint:
    lat, lon = from_local_arrays(origin, q.x, q.y)
    return GeoPoint(float(lat), float(lon))


def from_local_arrays(origin: GeoPoint, x, y):
    k = EARTH_RADIUS_M * math.cos(math.radians(origin.lat))
    lat = origin.lat + np.degrees(np.asarray(y, dtype=float) / EARTH_RADIUS_M)
    lon = origin.lon + np.degrees(np.asarray(x, dtype=float) / k)
    return lat, lon


def separation_angle(vertex, a, b) -> float:
    """Angle in [0, pi] at ``vertex`` between the rays towards ``a`` and ``b``.

    Points may be :class:`LocalPoint` instances or length-2 sequences.
    """
    v = _xy(vertex)
    u = _xy(a) - v
    w = _xy(b) - v
    nu = math.hypot(u[0], u[1])
    nw = math.hypot(w[0], w[1])
    if nu == 0.0 or nw == 0.0:
        raise ValueError("separation angle undefined for a point on the vertex")
    cross = u[0] * w[1] - u[1] * w[0]
    dot = u[0] * w[0] + u[1] * w[1]
    # atan2 form stays accurate near 0 and pi, unlike arccos
    return abs(math.atan2(cross, dot))


def _xy(p) -> np.ndarray:
    if isinstance(p, LocalPoint):
        return p.as_array()
    return np.asarray(p, dtype=float)
