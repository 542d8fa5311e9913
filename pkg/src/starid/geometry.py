"""Spherical geometry and two-observation attitude determination.

All public interfaces take and return angles in degrees; internal
trigonometry works in radians.  Vectors are numpy arrays, shape (3,) for a
single direction or (n, 3) for a batch.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "DegenerateGeometryError",
    "unit",
    "spherical_to_cartesian",
    "angular_separation",
    "separations",
    "separations_pairwise",
    "interior_angle",
    "interior_angles",
    "triad",
    "wahba_loss",
    "find_positive_overlay",
    "rotation_about_axis",
    "random_rotation",
    "random_unit_vector",
    "is_rotation_matrix",
]

_EPS = 1e-12


class DegenerateGeometryError(ValueError):
    """Raised when an operation receives geometrically degenerate inputs."""


def unit(v: np.ndarray) -> np.ndarray:
    """Return v normalized to unit length (raises on a near-zero vector)."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n < _EPS:
        raise DegenerateGeometryError("cannot normalize a near-zero vector")
    return v / n


def spherical_to_cartesian(alpha: float, delta: float, r: float = 1.0) -> np.ndarray:
    """Convert (right ascension, declination, radius) to a Cartesian 3-vector.

    alpha and delta are in degrees.  With r=1 the result is a unit vector.
    """
    a = math.radians(alpha)
    d = math.radians(delta)
    return np.array(
        [r * math.cos(d) * math.cos(a), r * math.cos(d) * math.sin(a), r * math.sin(d)]
    )


def angular_separation(u: np.ndarray, v: np.ndarray) -> float:
    """Great-circle angle between two unit vectors, in degrees.

    The dot product is clamped to [-1, 1] before arccos so floating-point
    overshoot near 0 or 180 degrees cannot produce NaN.
    """
    d = float(np.dot(u, v))
    return math.degrees(math.acos(max(-1.0, min(1.0, d))))


def separations(u: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Angles (degrees) between one unit vector and each row of `vectors`."""
    d = np.clip(np.asarray(vectors) @ np.asarray(u), -1.0, 1.0)
    return np.degrees(np.arccos(d))


def separations_pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-by-row angles (degrees) between two (n, 3) unit-vector arrays."""
    d = np.clip(np.einsum("...i,...i->...", np.asarray(a), np.asarray(b)), -1.0, 1.0)
    return np.degrees(np.arccos(d))


def interior_angle(center: np.ndarray, p: np.ndarray, q: np.ndarray) -> float:
    """Angle at `center` between the directions toward p and q, in degrees.

    The vertex sits at the central star rather than the observer, i.e. the
    angle is measured between the difference vectors (p - center) and
    (q - center).
    """
    u = np.asarray(p, dtype=float) - center
    w = np.asarray(q, dtype=float) - center
    nu = np.linalg.norm(u)
    nw = np.linalg.norm(w)
    if nu < _EPS or nw < _EPS:
        raise DegenerateGeometryError("interior angle undefined: point coincides with vertex")
    d = float(np.dot(u, w) / (nu * nw))
    return math.degrees(math.acos(max(-1.0, min(1.0, d))))


def interior_angles(center: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Vectorized interior_angle over (n, 3) inputs. Degenerate rows yield NaN."""
    u = np.asarray(p, dtype=float) - center
    w = np.asarray(q, dtype=float) - center
    nu = np.linalg.norm(u, axis=-1)
    nw = np.linalg.norm(w, axis=-1)
    denom = nu * nw
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.einsum("...i,...i->...", u, w) / denom
        out = np.degrees(np.arccos(np.clip(d, -1.0, 1.0)))
    out = np.where(denom < _EPS, np.nan, out)
    return out


def triad(b1: np.ndarray, b2: np.ndarray, r1: np.ndarray, r2: np.ndarray) -> np.ndarray:
    """Closed-form two-observation attitude (the triad frame construction).

    b1, b2 are observations in the body frame; r1, r2 the same objects in
    the inertial frame.  Returns the rotation A with A @ r1 == b1 exactly
    and A @ r2 ~= b2 up to measurement inconsistency.
    """
    t1_b = unit(b1)
    c_b = np.cross(b1, b2)
    if np.linalg.norm(c_b) < _EPS:
        raise DegenerateGeometryError("triad: body observations are parallel")
    t2_b = unit(c_b)
    t3_b = np.cross(t1_b, t2_b)

    t1_r = unit(r1)
    c_r = np.cross(r1, r2)
    if np.linalg.norm(c_r) < _EPS:
        raise DegenerateGeometryError("triad: inertial observations are parallel")
    t2_r = unit(c_r)
    t3_r = np.cross(t1_r, t2_r)

    m_body = np.column_stack([t1_b, t2_b, t3_b])
    m_inertial = np.column_stack([t1_r, t2_r, t3_r])
    return m_body @ m_inertial.T


def wahba_loss(attitude: np.ndarray, body: np.ndarray, inertial: np.ndarray,
               weights: np.ndarray | None = None) -> float:
    """Weighted squared alignment loss 0.5 * sum w_j ||I_j - A K_j||^2.

    body is (n, 3) observations I_j, inertial is (n, 3) references K_j.
    """
    body = np.asarray(body, dtype=float)
    inertial = np.asarray(inertial, dtype=float)
    if weights is None:
        weights = np.ones(len(body))
    resid = body - inertial @ np.asarray(attitude).T
    return 0.5 * float(np.sum(weights * np.sum(resid * resid, axis=1)))


def find_positive_overlay(catalog_vectors: np.ndarray, image_vectors: np.ndarray,
                          attitude: np.ndarray, sigma_o: float) -> np.ndarray:
    """Boolean mask over catalog_vectors of stars that overlay the image.

    The image is rotated by `attitude` and compared against the catalog
    vectors in the catalog frame; a catalog star overlays when some rotated
    image star lies strictly within 3*sigma_o degrees of it.
    """
    catalog_vectors = np.atleast_2d(catalog_vectors)
    image_vectors = np.atleast_2d(image_vectors)
    if len(catalog_vectors) == 0 or len(image_vectors) == 0:
        return np.zeros(len(catalog_vectors), dtype=bool)
    rotated = image_vectors @ np.asarray(attitude).T
    cos_tol = math.cos(math.radians(3.0 * sigma_o))
    dots = catalog_vectors @ rotated.T
    return (dots > cos_tol).any(axis=1)


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation matrix turning by `angle` degrees about `axis` (Rodrigues)."""
    a = unit(axis)
    t = math.radians(angle)
    k = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + math.sin(t) * k + (1.0 - math.cos(t)) * (k @ k)


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    """Point drawn uniformly from the unit sphere."""
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > _EPS:
            return v / n


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Rotation matrix drawn uniformly (Haar) via a random unit quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def is_rotation_matrix(m: np.ndarray, tol: float = 1e-9) -> bool:
    """True when m is orthonormal with determinant +1 within tol."""
    m = np.asarray(m)
    if m.shape != (3, 3):
        return False
    ortho = np.abs(m.T @ m - np.eye(3)).max() < tol
    return bool(ortho and abs(np.linalg.det(m) - 1.0) < tol)
