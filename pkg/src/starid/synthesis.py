"""Ground-truth-labeled artificial sky images.

An image is the set of catalog stars within half a field of view of a
boresight, rotated into the body frame by a known true attitude, with each
star carrying its catalog id as a truth label.  Two noise processes mimic
sensing error: Gaussian positional noise applied by spherically
interpolating each star toward a random direction (the interpolation
magnitude is a normal draw divided by the subtended angle, so the angular
displacement itself is N(0, rho^2) degrees), and false stars ("spikes")
drawn uniformly over the field.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import math
import numpy as np

from . import geometry as geom

__all__ = [
    "SPIKE_LABEL",
    "EmptyFieldError",
    "SyntheticImage",
    "generate_image",
    "apply_gaussian_noise",
    "add_spikes",
    "shuffle_image",
    "save_image",
    "load_image",
]

SPIKE_LABEL = -1

_MAX_DRAWS = 10_000


class EmptyFieldError(RuntimeError):
    """No catalog stars fall inside the requested field of view."""


@dataclass(frozen=True)
class SyntheticImage:
    """Body-frame star vectors with truth labels and generation metadata."""

    vectors: np.ndarray        # (n, 3) unit vectors in the body frame
    labels: np.ndarray         # (n,) catalog ids; SPIKE_LABEL marks false stars
    psi: float                 # field of view, degrees
    center_body: np.ndarray    # rotated image center, body frame
    truth_attitude: np.ndarray  # 3x3 rotation, inertial -> body
    seed: int | None = None

    @property
    def star_count(self) -> int:
        return len(self.vectors)

    def in_field(self) -> np.ndarray:
        """Mask of stars strictly within psi/2 of the image center."""
        return geom.separations(self.center_body, self.vectors) < self.psi / 2.0


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def generate_image(store, psi: float, truth_attitude: np.ndarray,
                   boresight: np.ndarray, seed=None) -> SyntheticImage:
    """Rotate every catalog star within psi/2 of `boresight` into the body frame."""
    boresight = geom.unit(boresight)
    rows = store.field_star_indices(boresight, psi / 2.0)
    if len(rows) == 0:
        raise EmptyFieldError("no catalog stars within the field of view")
    attitude = np.asarray(truth_attitude, dtype=float)
    vectors = store.star_vecs[rows] @ attitude.T
    labels = store.star_ids[rows].copy()
    return SyntheticImage(vectors=vectors, labels=labels, psi=float(psi),
                          center_body=attitude @ boresight,
                          truth_attitude=attitude,
                          seed=seed if isinstance(seed, int) else None)


def _random_direction(rng) -> np.ndarray:
    """Normalized U(-1,1)^3 sample; redraws the measure-zero near-null case."""
    for _ in range(_MAX_DRAWS):
        v = rng.uniform(-1.0, 1.0, size=3)
        n = np.linalg.norm(v)
        if n > 1e-9:
            return v / n
    raise RuntimeError("random direction sampling failed to converge")


def apply_gaussian_noise(image: SyntheticImage, rho: float, seed=None) -> SyntheticImage:
    """Displace each star by an angle ~ N(0, rho^2) degrees along a random arc.

    Each star is interpolated along the great circle toward a random unit
    direction b*; with K = N(0, rho^2) / theta(b*, b) the slerp moves the
    star by exactly the normal draw, in degrees.  Stars that leave the
    field are redrawn (fresh b* and fresh normal draw).  rho = 0 returns
    the image unchanged.
    """
    if rho < 0:
        raise ValueError("rho must be >= 0")
    if rho == 0:
        return image
    rng = _as_rng(seed)
    out = image.vectors.copy()
    half = image.psi / 2.0
    for i, b in enumerate(image.vectors):
        for _ in range(_MAX_DRAWS):
            b_star = _random_direction(rng)
            omega = math.acos(max(-1.0, min(1.0, float(np.dot(b_star, b)))))
            if math.sin(omega) < 1e-9:
                continue
            k = rng.normal(0.0, rho) / math.degrees(omega)
            moved = (math.sin((1.0 - k) * omega) * b
                     + math.sin(k * omega) * b_star) / math.sin(omega)
            moved = moved / np.linalg.norm(moved)
            if geom.angular_separation(moved, image.center_body) < half:
                out[i] = moved
                break
        else:
            raise RuntimeError("gaussian noise rejection sampling failed to converge")
    return replace(image, vectors=out,
                   seed=seed if isinstance(seed, int) else image.seed)


def add_spikes(image: SyntheticImage, omega: int, seed=None) -> SyntheticImage:
    """Append `omega` false stars drawn uniformly within the field of view."""
    if omega < 0:
        raise ValueError("omega must be >= 0")
    if omega == 0:
        return image
    rng = _as_rng(seed)
    half = image.psi / 2.0
    spikes = []
    while len(spikes) < omega:
        v = _random_direction(rng)
        if geom.angular_separation(v, image.center_body) < half:
            spikes.append(v)
    vectors = np.vstack([image.vectors, np.array(spikes)])
    labels = np.concatenate([image.labels,
                             np.full(omega, SPIKE_LABEL, dtype=image.labels.dtype)])
    return replace(image, vectors=vectors, labels=labels,
                   seed=seed if isinstance(seed, int) else image.seed)


def shuffle_image(image: SyntheticImage, seed=None) -> SyntheticImage:
    """Permute star order (seeded); labels travel with their vectors.

    Benchmark trials shuffle after adding spikes so false stars occupy
    arbitrary sequence positions rather than always trailing the list.
    """
    rng = _as_rng(seed)
    perm = rng.permutation(image.star_count)
    return replace(image, vectors=image.vectors[perm], labels=image.labels[perm])


def save_image(image: SyntheticImage, path) -> None:
    """Write the line-oriented text format (header lines, then x y z label)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        handle.write("format=starid-image-v1\n")
        handle.write(f"psi={float(image.psi)!r}\n")
        handle.write(f"seed={'' if image.seed is None else image.seed}\n")
        handle.write("attitude=" + ",".join(repr(float(x)) for x in image.truth_attitude.ravel()) + "\n")
        handle.write("center=" + ",".join(repr(float(x)) for x in image.center_body) + "\n")
        for v, label in zip(image.vectors, image.labels):
            name = "SPIKE" if label == SPIKE_LABEL else str(int(label))
            handle.write(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r} {name}\n")


def load_image(path) -> SyntheticImage:
    """Read an image written by save_image (floats round-trip exactly)."""
    path = Path(path)
    header: dict[str, str] = {}
    vectors: list[list[float]] = []
    labels: list[int] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if "=" in line and not line[0].isdigit() and not line[0] in "+-.":
            key, _, value = line.partition("=")
            header[key] = value
            continue
        x, y, z, name = line.split()
        vectors.append([float(x), float(y), float(z)])
        labels.append(SPIKE_LABEL if name == "SPIKE" else int(name))
    attitude = np.array([float(x) for x in header["attitude"].split(",")]).reshape(3, 3)
    center = np.array([float(x) for x in header["center"].split(",")])
    seed_text = header.get("seed", "")
    return SyntheticImage(
        vectors=np.array(vectors, dtype=float).reshape(len(vectors), 3),
        labels=np.array(labels, dtype=np.int64),
        psi=float(header["psi"]),
        center_body=center,
        truth_attitude=attitude,
        seed=int(seed_text) if seed_text else None,
    )
