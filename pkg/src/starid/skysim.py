"""Deterministic synthetic star fields for tests and demos.

No star table ships with this package (catalog sources are user-supplied
assets), so this module fabricates one: isotropic positions and a
magnitude distribution calibrated so the bright-star counts scale like the
real sky (roughly 10^(0.5 m) stars brighter than magnitude m, anchored to
~4,560 below magnitude 6).  Synthetic skies reproduce the statistical
behavior of the identification methods but not snapshot-specific table
sizes, which depend on real galactic clustering.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = ["synthetic_sky", "write_source_csv"]

_COUNT_SLOPE = 0.5  # decades of stars per magnitude


def synthetic_sky(n_stars: int, seed: int = 0, *, mag_limit: float = 6.0):
    """Rows (id, ra_deg, dec_deg, mag) for an isotropic synthetic sky.

    Magnitudes fall in (-inf, mag_limit) with the bright-end power law; ids
    count from 1 in draw order.
    """
    rng = np.random.default_rng(seed)
    ra = rng.uniform(0.0, 360.0, n_stars)
    dec = np.degrees(np.arcsin(rng.uniform(-1.0, 1.0, n_stars)))
    mag = mag_limit + np.log10(rng.uniform(0.0, 1.0, n_stars)) / _COUNT_SLOPE
    rows = []
    for index in range(n_stars):
        rows.append((index + 1, float(ra[index]), float(dec[index]), float(mag[index])))
    return rows


def write_source_csv(path, n_stars: int, seed: int = 0, *,
                     mag_limit: float = 6.0) -> Path:
    """Write a synthetic sky as a csv source table (id, ra, dec, mag)."""
    path = Path(path)
    rows = synthetic_sky(n_stars, seed, mag_limit=mag_limit)
    with path.open("w", encoding="utf-8") as handle:
        handle.write("id,ra,dec,mag\n")
        for star_id, ra, dec, mag in rows:
            handle.write(f"{star_id},{ra!r},{dec!r},{mag!r}\n")
    return path
