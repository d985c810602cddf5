"""Geodesic helpers: great-circle distance, robust user centroid, Gaussian kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EARTH_RADIUS_KM = 6371.0
MAD_SCALE = 1.4826


@dataclass(frozen=True)
class GeoPoint:
    latitude: float
    longitude: float

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude}")


@dataclass(frozen=True)
class Centroid:
    point: GeoPoint
    n_used: int


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    lat1, lon1 = math.radians(a.latitude), math.radians(a.longitude)
    lat2, lon2 = math.radians(b.latitude), math.radians(b.longitude)
    h = (math.sin((lat2 - lat1) / 2) ** 2
         + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2)
    # rounding can push h a hair above 1 for antipodes
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(min(1.0, h)))


def haversine_matrix(lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    """Pairwise great-circle distances (km) between points given in degrees."""
    phi = np.radians(np.asarray(lat, dtype=float))
    lam = np.radians(np.asarray(lon, dtype=float))
    dphi = phi[:, None] - phi[None, :]
    dlam = lam[:, None] - lam[None, :]
    h = np.sin(dphi / 2) ** 2 + np.cos(phi)[:, None] * np.cos(phi)[None, :] * np.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def haversine_to(point: GeoPoint, lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    phi0, lam0 = math.radians(point.latitude), math.radians(point.longitude)
    phi = np.radians(np.asarray(lat, dtype=float))
    lam = np.radians(np.asarray(lon, dtype=float))
    h = np.sin((phi - phi0) / 2) ** 2 + math.cos(phi0) * np.cos(phi) * np.sin((lam - lam0) / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def centroid_of_interests(points: Sequence[GeoPoint], mad_threshold: float = 3.0) -> Centroid:
    """Mean location of `points` after dropping distance outliers.

    Distances are measured from the component-wise median point; a point is an
    outlier when its robust z-score (MAD scaled by 1.4826) exceeds
    `mad_threshold`. A zero MAD keeps every point.
    """
    if len(points) == 0:
        raise ValueError("centroid_of_interests needs at least one point")
    lat = np.array([p.latitude for p in points], dtype=float)
    lon = np.array([p.longitude for p in points], dtype=float)
    median_point = GeoPoint(float(np.median(lat)), float(np.median(lon)))
    d = haversine_to(median_point, lat, lon)
    dev = np.abs(d - np.median(d))
    mad = float(np.median(dev))
    if mad == 0.0 or math.isinf(mad_threshold):
        keep = np.ones(len(points), dtype=bool)
    else:
        keep = dev <= mad_threshold * MAD_SCALE * mad
    return Centroid(GeoPoint(float(lat[keep].mean()), float(lon[keep].mean())), int(keep.sum()))


def gaussian_kernel(distance_km, sigma_km: float):
    if sigma_km <= 0:
        raise ValueError(f"sigma_km must be positive, got {sigma_km}")
    d = np.asarray(distance_km, dtype=float)
    out = np.exp(-(d ** 2) / (2.0 * sigma_km ** 2))
    return float(out) if out.ndim == 0 else out
