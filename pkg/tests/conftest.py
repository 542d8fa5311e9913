"""Shared fixtures: deterministic synthetic skies and cached catalog stores.

Catalog builds are deterministic, so stores are cached on disk across test
sessions (STARID_TEST_CACHE overrides the location).  The small store
backs the unit tests; the acceptance module requests the desk-profile and
dense stores lazily.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from starid import catalog as cat
from starid import skysim

# One synthetic sky serves every profile: ~4,560 stars below magnitude 6,
# matching the scale the catalogs are quoted at.
SKY_SEED = 20260810
SKY_STARS = 8110
SKY_MAG_LIMIT = 6.5

_CACHE_VERSION = "v1"


def cache_root() -> Path:
    root = os.environ.get("STARID_TEST_CACHE", "~/.cache/starid-tests")
    path = Path(root).expanduser() / _CACHE_VERSION
    path.mkdir(parents=True, exist_ok=True)
    return path


def sky_csv_path() -> Path:
    path = cache_root() / "sky.csv"
    if not path.exists():
        skysim.write_source_csv(path, SKY_STARS, seed=SKY_SEED,
                                mag_limit=SKY_MAG_LIMIT)
    return path


def cached_store(name: str, magnitude_cutoff: float, *, n_stars: int | None = None,
                 sky_seed: int = SKY_SEED) -> cat.CatalogStore:
    """Build (once) and open a store for the given brightness profile."""
    out_dir = cache_root() / name
    if not (out_dir / cat.DB_NAME).exists():
        if n_stars is None:
            source = sky_csv_path()
        else:
            source = cache_root() / f"{name}_sky.csv"
            if not source.exists():
                skysim.write_source_csv(source, n_stars, seed=sky_seed,
                                        mag_limit=SKY_MAG_LIMIT)
        stars = cat.parse_source(source, magnitude_cutoff)
        cat.build_store(stars, out_dir, magnitude_cutoff=magnitude_cutoff,
                        source_path=source, overwrite=True)
    return cat.CatalogStore(out_dir)


@pytest.fixture(scope="session")
def sky_csv() -> Path:
    return sky_csv_path()


@pytest.fixture(scope="session")
def small_store() -> cat.CatalogStore:
    """~430 bright stars; fields of roughly 6-9 stars. Fast unit-test store."""
    return cached_store("store_small", 6.0, n_stars=760, sky_seed=7)


@pytest.fixture(scope="session")
def desk_store() -> cat.CatalogStore:
    """Magnitude-5.0 desk profile over the full synthetic sky."""
    return cached_store("store_m50", 5.0)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
