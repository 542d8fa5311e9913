"""Rotation-invariant triangle features for star trios.

Two feature pairs are provided: the planar area/moment of the chord-space
triangle, and the spherical area/moment of the surface triangle.  Both are
invariant under permutation of the three inputs and under rotations, which
is what makes them usable as catalog keys.

Planar area comes from Heron's formula on the chord lengths in the
numerically stable (Kahan) ordering; the planar moment is the polar second
moment of a triangle about its centroid, area * (s1^2 + s2^2 + s3^2) / 36
(adopted from the planar-triangle literature, which states it in exactly
this closed form).  Spherical area is the spherical excess via l'Huilier's
theorem, in steradians; the spherical moment approximates the polar second
moment about the triangle's centroid by recursive midpoint subdivision,
summing sub-triangle area times the squared angular distance (radians)
from the sub-centroid to the root centroid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TrioFeatures",
    "DEFAULT_MOMENT_DEPTH",
    "planar_features",
    "spherical_features",
    "planar_features_arrays",
    "spherical_features_arrays",
]

DEFAULT_MOMENT_DEPTH = 3

_EPS = 1e-15


@dataclass(frozen=True)
class TrioFeatures:
    """Area/moment feature pair of one star trio."""

    area: float
    moment: float


def _separation_rad(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    d = np.clip(np.einsum("...i,...i->...", u, v), -1.0, 1.0)
    return np.arccos(d)


def planar_features_arrays(v1: np.ndarray, v2: np.ndarray, v3: np.ndarray):
    """Planar (area, moment) for each row of three (n, 3) vertex arrays."""
    v1 = np.atleast_2d(np.asarray(v1, dtype=float))
    v2 = np.atleast_2d(np.asarray(v2, dtype=float))
    v3 = np.atleast_2d(np.asarray(v3, dtype=float))
    d1 = np.linalg.norm(v2 - v3, axis=1)
    d2 = np.linalg.norm(v1 - v3, axis=1)
    d3 = np.linalg.norm(v1 - v2, axis=1)
    # Kahan's stable Heron: operate on sides sorted a >= b >= c.
    sides = np.sort(np.stack([d1, d2, d3], axis=1), axis=1)
    c, b, a = sides[:, 0], sides[:, 1], sides[:, 2]
    t = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    area = 0.25 * np.sqrt(np.clip(t, 0.0, None))
    moment = area * (d1 * d1 + d2 * d2 + d3 * d3) / 36.0
    return area, moment


def planar_features(v1: np.ndarray, v2: np.ndarray, v3: np.ndarray) -> TrioFeatures:
    """Planar chord-triangle features of a single trio."""
    area, moment = planar_features_arrays(v1, v2, v3)
    return TrioFeatures(float(area[0]), float(moment[0]))


def _spherical_areas(v1: np.ndarray, v2: np.ndarray, v3: np.ndarray) -> np.ndarray:
    """Spherical excess (steradians) by l'Huilier, batched."""
    a = _separation_rad(v2, v3)
    b = _separation_rad(v1, v3)
    c = _separation_rad(v1, v2)
    s = 0.5 * (a + b + c)
    t = (np.tan(0.5 * s) * np.tan(0.5 * (s - a))
         * np.tan(0.5 * (s - b)) * np.tan(0.5 * (s - c)))
    return 4.0 * np.arctan(np.sqrt(np.clip(t, 0.0, None)))


def _normalized_rows(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(n < _EPS, 1.0, n)


def spherical_features_arrays(v1: np.ndarray, v2: np.ndarray, v3: np.ndarray,
                              depth: int = DEFAULT_MOMENT_DEPTH):
    """Spherical (area, moment) for each row of three (n, 3) vertex arrays.

    depth is the number of midpoint-subdivision levels used for the moment
    (4**depth cells per trio); depth 0 gives a zero moment by construction.
    """
    if depth < 0:
        raise ValueError("subdivision depth must be >= 0")
    v1 = np.atleast_2d(np.asarray(v1, dtype=float))
    v2 = np.atleast_2d(np.asarray(v2, dtype=float))
    v3 = np.atleast_2d(np.asarray(v3, dtype=float))
    area = _spherical_areas(v1, v2, v3)

    root_centroid = _normalized_rows(v1 + v2 + v3)
    # tris: (m, 3 vertices, 3 comps); root: index of the originating trio.
    tris = np.stack([v1, v2, v3], axis=1)
    for _ in range(depth):
        a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
        mab = _normalized_rows(a + b)
        mbc = _normalized_rows(b + c)
        mac = _normalized_rows(a + c)
        tris = np.concatenate([
            np.stack([a, mab, mac], axis=1),
            np.stack([mab, b, mbc], axis=1),
            np.stack([mac, mbc, c], axis=1),
            np.stack([mab, mbc, mac], axis=1),
        ], axis=0)
    n = len(v1)
    cells = 4 ** depth
    root = np.tile(np.arange(n), cells)
    sub_area = _spherical_areas(tris[:, 0], tris[:, 1], tris[:, 2])
    sub_centroid = _normalized_rows(tris.sum(axis=1))
    theta = _separation_rad(sub_centroid, root_centroid[root])
    moment = np.bincount(root, weights=sub_area * theta * theta, minlength=n)
    return area, moment


def spherical_features(v1: np.ndarray, v2: np.ndarray, v3: np.ndarray,
                       depth: int = DEFAULT_MOMENT_DEPTH) -> TrioFeatures:
    """Spherical surface-triangle features of a single trio."""
    area, moment = spherical_features_arrays(v1, v2, v3, depth)
    return TrioFeatures(float(area[0]), float(moment[0]))
