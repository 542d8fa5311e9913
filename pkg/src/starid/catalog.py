"""Bright-star catalog ingestion and the indexed feature tables.

A catalog build turns a delimited source table (id, right ascension,
declination, magnitude) into a directory holding one sqlite database with
four tables (stars, pairs, trios, trio_perms) plus a line-oriented
``manifest.txt``.  The pair table holds every unordered pair of bright
stars within ``psi_max`` degrees keyed by interstar angle; the trio table
holds every mutually-close combination of three with both spherical and
planar area/moment features; the permutation table holds each trio once
per central-star choice, storing the two central separations and the
interior angle, only in the orientation with theta(c1, c) <= theta(c2, c).

The finished store is read-only.  ``CatalogStore`` mirrors the tables into
sorted in-memory arrays at open so range queries cost a binary search; the
sqlite file stays the on-disk source of truth and can be queried directly
with SQL for cross-checking.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import sqlite3
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import features as feat
from . import geometry as geom

__all__ = [
    "CatalogError",
    "CatalogStar",
    "parse_source",
    "build_pair_catalog",
    "build_trio_catalog",
    "build_trio_permutation_catalog",
    "build_store",
    "CatalogStore",
    "read_manifest",
]

log = logging.getLogger(__name__)

DB_NAME = "catalog.sqlite"
MANIFEST_NAME = "manifest.txt"
FORMAT_TAG = "starid-catalog-v1"

_PAIR_DTYPE = np.dtype([("id_a", np.int64), ("id_b", np.int64), ("theta", np.float64)])
_TRIO_DTYPE = np.dtype([("id_a", np.int64), ("id_b", np.int64), ("id_c", np.int64),
                        ("f1", np.float64), ("f2", np.float64)])
_PERM_DTYPE = np.dtype([("id_c", np.int64), ("id_c1", np.int64), ("id_c2", np.int64),
                        ("theta1", np.float64), ("theta2", np.float64), ("phi", np.float64)])


class CatalogError(Exception):
    """Fatal catalog build or read problem."""


@dataclass(frozen=True, eq=False)
class CatalogStar:
    """One inertial-frame star: id, position (degrees), magnitude, unit vector."""

    id: int
    alpha: float
    delta: float
    m: float
    v: np.ndarray


def _parse_float(text) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("non-finite value")
    return value


def parse_source(path, magnitude_cutoff: float = 6.0, *, delimiter: str | None = ",",
                 id_col="id", ra_col="ra", dec_col="dec", mag_col="mag",
                 stats: dict | None = None) -> list[CatalogStar]:
    """Read a delimited star table, keeping stars with m < magnitude_cutoff.

    Column selectors may all be header names (first row is a header) or all
    integer positions (headerless file).  ``delimiter=None`` splits rows on
    any whitespace.  Rows without a usable (ra, dec) position are skipped;
    otherwise-malformed rows are skipped and counted as warnings in
    ``stats`` when a dict is supplied.
    """
    path = Path(path)
    cols = [id_col, ra_col, dec_col, mag_col]
    by_position = all(isinstance(c, int) for c in cols)
    if not by_position and not all(isinstance(c, str) for c in cols):
        raise ValueError("column selectors must be all names or all positions")

    counters = {"rows": 0, "kept": 0, "missing_position": 0, "malformed": 0}
    stars: list[CatalogStar] = []
    try:
        handle = path.open("r", encoding="utf-8", errors="replace")
    except OSError as exc:
        raise CatalogError(f"cannot read catalog source {path}: {exc}") from exc

    with handle:
        if delimiter is None:
            rows = (line.split() for line in handle if line.strip())
        else:
            rows = csv.reader(handle, delimiter=delimiter)
        idx = cols
        if not by_position:
            try:
                header = next(rows)
            except StopIteration:
                _fill_stats(stats, counters)
                return []
            header = [h.strip() for h in header]
            try:
                idx = [header.index(c) for c in cols]
            except ValueError as exc:
                raise CatalogError(f"missing column in {path}: {exc}") from exc
        i_id, i_ra, i_dec, i_mag = idx

        for row in rows:
            if not row or all(not str(f).strip() for f in row):
                continue
            counters["rows"] += 1
            try:
                ra_text = str(row[i_ra]).strip()
                dec_text = str(row[i_dec]).strip()
            except IndexError:
                counters["malformed"] += 1
                continue
            if not ra_text or not dec_text:
                counters["missing_position"] += 1
                continue
            try:
                alpha = _parse_float(ra_text) % 360.0
                delta = _parse_float(dec_text)
                mag = _parse_float(str(row[i_mag]).strip())
                star_id = int(_parse_float(str(row[i_id]).strip()))
            except (ValueError, IndexError):
                counters["malformed"] += 1
                continue
            if not -90.0 <= delta <= 90.0:
                counters["malformed"] += 1
                continue
            if mag < magnitude_cutoff:
                stars.append(CatalogStar(star_id, alpha, delta, mag,
                                         geom.spherical_to_cartesian(alpha, delta, 1.0)))
            counters["kept"] = len(stars)

    if counters["malformed"]:
        log.warning("skipped %d malformed rows in %s", counters["malformed"], path)
    _fill_stats(stats, counters)
    return stars


def _fill_stats(stats, counters):
    if stats is not None:
        stats.update(counters)


def _star_arrays(stars):
    ids = np.array([s.id for s in stars], dtype=np.int64)
    vecs = np.array([s.v for s in stars], dtype=float).reshape(len(stars), 3)
    return ids, vecs


def _pairs_within(vectors: np.ndarray, psi_max: float):
    """Index pairs (i < j) with 0 < separation <= psi_max, plus the angle."""
    n = len(vectors)
    if n < 2:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, float))
    cos_min = math.cos(math.radians(psi_max))
    out_i, out_j, out_t = [], [], []
    block = max(1, int(4_000_000 // max(n, 1)))
    for start in range(0, n, block):
        dots = np.clip(vectors[start:start + block] @ vectors.T, -1.0, 1.0)
        bi, bj = np.nonzero(dots >= cos_min)
        gi = bi + start
        keep = gi < bj
        bi, bj, gi = bi[keep], bj[keep], gi[keep]
        theta = np.degrees(np.arccos(dots[bi, bj]))
        keep = theta > 0.0
        out_i.append(gi[keep])
        out_j.append(bj[keep])
        out_t.append(theta[keep])
    return (np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_t))


def build_pair_catalog(stars, psi_max: float = 20.0) -> np.ndarray:
    """Every unordered close pair as a structured array (id_a, id_b, theta)."""
    if not stars:
        raise CatalogError("cannot build a pair catalog from zero stars")
    ids, vecs = _star_arrays(stars)
    pi, pj, theta = _pairs_within(vecs, psi_max)
    out = np.empty(len(pi), dtype=_PAIR_DTYPE)
    out["id_a"], out["id_b"], out["theta"] = ids[pi], ids[pj], theta
    return out


def _trio_indices(vectors: np.ndarray, psi_max: float) -> np.ndarray:
    """(m, 3) star-index combinations, all three mutually within psi_max."""
    pi, pj, _ = _pairs_within(vectors, psi_max)
    n = len(vectors)
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in zip(pi.tolist(), pj.tolist()):
        adj[a].append(b)
        adj[b].append(a)
    neigh = [np.array(sorted(members), dtype=np.int64) for members in adj]
    chunks = []
    for a, b in zip(pi.tolist(), pj.tolist()):
        common = np.intersect1d(neigh[a], neigh[b], assume_unique=True)
        common = common[common > b]
        if len(common):
            first = np.full(len(common), a, dtype=np.int64)
            second = np.full(len(common), b, dtype=np.int64)
            chunks.append(np.stack([first, second, common], axis=1))
    if not chunks:
        return np.empty((0, 3), dtype=np.int64)
    return np.concatenate(chunks, axis=0)


def _trio_features(vectors, trios, kind, moment_depth, chunk=20_000):
    """Batched (f1, f2) for trio index rows; kind is 'spherical' or 'planar'."""
    f1 = np.empty(len(trios))
    f2 = np.empty(len(trios))
    for start in range(0, len(trios), chunk):
        sel = trios[start:start + chunk]
        v1, v2, v3 = vectors[sel[:, 0]], vectors[sel[:, 1]], vectors[sel[:, 2]]
        if kind == "spherical":
            a, m = feat.spherical_features_arrays(v1, v2, v3, moment_depth)
        elif kind == "planar":
            a, m = feat.planar_features_arrays(v1, v2, v3)
        else:
            raise ValueError(f"unknown feature kind {kind!r}")
        f1[start:start + chunk] = a
        f2[start:start + chunk] = m
    return f1, f2


def build_trio_catalog(stars, psi_max: float = 20.0, feature_kind: str = "spherical",
                       moment_depth: int = feat.DEFAULT_MOMENT_DEPTH) -> np.ndarray:
    """Every mutually-close trio combination with its (f1, f2) features."""
    if not stars:
        raise CatalogError("cannot build a trio catalog from zero stars")
    ids, vecs = _star_arrays(stars)
    trios = _trio_indices(vecs, psi_max)
    f1, f2 = _trio_features(vecs, trios, feature_kind, moment_depth)
    out = np.empty(len(trios), dtype=_TRIO_DTYPE)
    out["id_a"], out["id_b"], out["id_c"] = ids[trios[:, 0]], ids[trios[:, 1]], ids[trios[:, 2]]
    out["f1"], out["f2"] = f1, f2
    return out


def _perm_rows(ids, vecs, trios):
    """Ordered-trio rows: one per central-star choice, theta1 <= theta2.

    Exact theta ties order the two neighbors by ascending catalog id so
    builds stay deterministic.
    """
    blocks = []
    for central in range(3):
        others = [p for p in range(3) if p != central]
        c = trios[:, central]
        p = trios[:, others[0]]
        q = trios[:, others[1]]
        th_p = geom.separations_pairwise(vecs[p], vecs[c])
        th_q = geom.separations_pairwise(vecs[q], vecs[c])
        swap = (th_q < th_p) | ((th_q == th_p) & (ids[q] < ids[p]))
        c1 = np.where(swap, q, p)
        c2 = np.where(swap, p, q)
        th1 = np.where(swap, th_q, th_p)
        th2 = np.where(swap, th_p, th_q)
        phi = geom.interior_angles(vecs[c], vecs[c1], vecs[c2])
        block = np.empty(len(c), dtype=_PERM_DTYPE)
        block["id_c"], block["id_c1"], block["id_c2"] = ids[c], ids[c1], ids[c2]
        block["theta1"], block["theta2"], block["phi"] = th1, th2, phi
        blocks.append(block)
    return np.concatenate(blocks)


def build_trio_permutation_catalog(stars, psi_max: float = 20.0) -> np.ndarray:
    """Central-star-ordered trios keyed by (theta1, theta2, phi)."""
    if not stars:
        raise CatalogError("cannot build a permutation catalog from zero stars")
    ids, vecs = _star_arrays(stars)
    trios = _trio_indices(vecs, psi_max)
    return _perm_rows(ids, vecs, trios)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


ALL_TABLES = ("pairs", "trios", "trio_perms")


def build_store(stars, out_dir, *, psi_max: float = 20.0,
                moment_depth: int = feat.DEFAULT_MOMENT_DEPTH,
                magnitude_cutoff: float | None = None,
                source_path=None, overwrite: bool = False,
                tables=ALL_TABLES) -> Path:
    """Write the catalog directory (sqlite tables + manifest) and return it.

    ``tables`` can drop feature tables from the build (the permutation
    table dominates storage at full scale and only the Interior Angle
    method uses it); methods backed by a missing table raise at query
    time.
    """
    if not stars:
        raise CatalogError("cannot build a store from zero stars")
    unknown = set(tables) - set(ALL_TABLES)
    if unknown:
        raise ValueError(f"unknown tables {sorted(unknown)}")
    out_dir = Path(out_dir)
    db_path = out_dir / DB_NAME
    if db_path.exists() and not overwrite:
        raise CatalogError(f"{db_path} already exists (pass overwrite=True)")
    out_dir.mkdir(parents=True, exist_ok=True)
    if db_path.exists():
        db_path.unlink()

    ids, vecs = _star_arrays(stars)
    if len(np.unique(ids)) != len(ids):
        raise CatalogError("duplicate star ids in source")

    conn = sqlite3.connect(db_path)
    try:
        conn.executescript(
            """
            PRAGMA journal_mode=OFF;
            PRAGMA synchronous=OFF;
            CREATE TABLE stars (id INTEGER PRIMARY KEY, alpha REAL, delta REAL,
                                mag REAL, x REAL, y REAL, z REAL);
            CREATE TABLE pairs (id_a INTEGER, id_b INTEGER, theta REAL);
            CREATE TABLE trios (id_a INTEGER, id_b INTEGER, id_c INTEGER,
                                sph_area REAL, sph_moment REAL,
                                pln_area REAL, pln_moment REAL);
            CREATE TABLE trio_perms (id_c INTEGER, id_c1 INTEGER, id_c2 INTEGER,
                                     theta1 REAL, theta2 REAL, phi REAL);
            """
        )
        conn.executemany(
            "INSERT INTO stars VALUES (?,?,?,?,?,?,?)",
            [(s.id, s.alpha, s.delta, s.m, s.v[0], s.v[1], s.v[2]) for s in stars],
        )

        n_pairs = 0
        if "pairs" in tables:
            pi, pj, theta = _pairs_within(vecs, psi_max)
            conn.executemany(
                "INSERT INTO pairs VALUES (?,?,?)",
                zip(ids[pi].tolist(), ids[pj].tolist(), theta.tolist()),
            )
            n_pairs = len(pi)

        trios = np.empty((0, 3), dtype=np.int64)
        if "trios" in tables or "trio_perms" in tables:
            trios = _trio_indices(vecs, psi_max)
        if "trios" in tables:
            chunk = 20_000
            for start in range(0, len(trios), chunk):
                sel = trios[start:start + chunk]
                v1, v2, v3 = vecs[sel[:, 0]], vecs[sel[:, 1]], vecs[sel[:, 2]]
                sa, sm = feat.spherical_features_arrays(v1, v2, v3, moment_depth)
                pa, pm = feat.planar_features_arrays(v1, v2, v3)
                conn.executemany(
                    "INSERT INTO trios VALUES (?,?,?,?,?,?,?)",
                    zip(ids[sel[:, 0]].tolist(), ids[sel[:, 1]].tolist(),
                        ids[sel[:, 2]].tolist(), sa.tolist(), sm.tolist(),
                        pa.tolist(), pm.tolist()),
                )

        n_perms = 0
        if "trio_perms" in tables:
            chunk = 200_000
            for start in range(0, len(trios), chunk):
                perms = _perm_rows(ids, vecs, trios[start:start + chunk])
                conn.executemany(
                    "INSERT INTO trio_perms VALUES (?,?,?,?,?,?)",
                    zip(perms["id_c"].tolist(), perms["id_c1"].tolist(),
                        perms["id_c2"].tolist(), perms["theta1"].tolist(),
                        perms["theta2"].tolist(), perms["phi"].tolist()),
                )
                n_perms += len(perms)

        conn.executescript(
            """
            CREATE INDEX pairs_theta ON pairs(theta);
            CREATE INDEX trios_sph ON trios(sph_area);
            CREATE INDEX trios_pln ON trios(pln_area);
            CREATE INDEX perms_theta1 ON trio_perms(theta1);
            """
        )
        conn.commit()
    finally:
        conn.close()

    manifest = {
        "format": FORMAT_TAG,
        "source_sha256": _sha256(Path(source_path)) if source_path else "",
        "magnitude_cutoff": "" if magnitude_cutoff is None else repr(float(magnitude_cutoff)),
        "psi_max_deg": repr(float(psi_max)),
        "fov_deg": repr(float(psi_max)),
        "moment_depth": str(moment_depth),
        "tables": ",".join(t for t in ALL_TABLES if t in tables),
        "n_stars": str(len(stars)),
        "n_pairs": str(n_pairs),
        "n_trios": str(len(trios) if "trios" in tables else 0),
        "n_trio_perms": str(n_perms),
    }
    with (out_dir / MANIFEST_NAME).open("w", encoding="utf-8") as handle:
        for key, value in manifest.items():
            handle.write(f"{key}={value}\n")
    return out_dir


def read_manifest(catalog_dir) -> dict:
    """Parse the key=value manifest of a catalog directory."""
    path = Path(catalog_dir) / MANIFEST_NAME
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CatalogError(f"cannot read manifest {path}: {exc}") from exc
    out = {}
    for line in lines:
        line = line.strip()
        if line and "=" in line:
            key, _, value = line.partition("=")
            out[key] = value
    return out


def _fetch_array(conn, table: str, columns: str, chunk: int = 500_000) -> np.ndarray:
    """Read a whole table into a float array without a giant tuple list."""
    n = conn.execute(f"SELECT COUNT(*) FROM {table}").fetchone()[0]
    width = len(columns.split(","))
    out = np.empty((n, width), dtype=float)
    cursor = conn.execute(f"SELECT {columns} FROM {table} ORDER BY rowid")
    row = 0
    while True:
        block = cursor.fetchmany(chunk)
        if not block:
            break
        out[row:row + len(block)] = block
        row += len(block)
    return out


class _Table:
    """One in-memory table: column arrays plus a sort index on the query key."""

    def __init__(self, columns: dict[str, np.ndarray], sort_key: str):
        self.columns = columns
        self.sort_key = sort_key
        order = np.argsort(columns[sort_key], kind="stable")
        self.order = order
        self.sorted_key = columns[sort_key][order]
        self.n = len(self.sorted_key)

    def range_indices(self, intervals: dict) -> np.ndarray:
        """Row indices (stored order) whose columns fall in the closed intervals."""
        if self.sort_key in intervals:
            lo, hi = intervals[self.sort_key]
            left = np.searchsorted(self.sorted_key, lo, side="left")
            right = np.searchsorted(self.sorted_key, hi, side="right")
            idx = self.order[left:right]
        else:
            idx = np.arange(self.n)
        for name, (lo, hi) in intervals.items():
            if name == self.sort_key:
                continue
            col = self.columns[name][idx]
            idx = idx[(col >= lo) & (col <= hi)]
        return np.sort(idx)


class CatalogStore:
    """Read-only view of a built catalog with counted range queries.

    Every feature-table range query increments ``feature_accesses`` by one
    regardless of result size; ``stars_near`` increments
    ``spatial_accesses``.  The store is immutable after open and safe to
    share across readers.
    """

    def __init__(self, catalog_dir):
        self.path = Path(catalog_dir)
        db_path = self.path / DB_NAME
        if not db_path.exists():
            raise CatalogError(f"no catalog database at {db_path}")
        self.manifest = read_manifest(self.path)
        self.moment_depth = int(self.manifest.get("moment_depth", feat.DEFAULT_MOMENT_DEPTH))
        self.psi_max = float(self.manifest.get("psi_max_deg", 20.0))

        built = self.manifest.get("tables", ",".join(ALL_TABLES))
        self._built = set(t for t in built.split(",") if t)

        conn = sqlite3.connect(f"file:{db_path}?mode=ro", uri=True)
        try:
            star_arr = _fetch_array(conn, "stars",
                                    "id, alpha, delta, mag, x, y, z")
            self.star_ids = star_arr[:, 0].astype(np.int64)
            self.star_mags = star_arr[:, 3]
            self.star_vecs = np.ascontiguousarray(star_arr[:, 4:7])
            self._id_to_row = {int(i): k for k, i in enumerate(self.star_ids)}
            self._tables: dict[str, _Table] = {}

            if "pairs" in self._built:
                pairs = _fetch_array(conn, "pairs", "id_a, id_b, theta")
                self._pair_ids = pairs[:, :2].astype(np.int64)
                self._tables["pairs"] = _Table(
                    {"id_a": self._pair_ids[:, 0], "id_b": self._pair_ids[:, 1],
                     "theta": pairs[:, 2]}, "theta")
            if "trios" in self._built:
                trios = _fetch_array(
                    conn, "trios",
                    "id_a, id_b, id_c, sph_area, sph_moment, pln_area, pln_moment")
                self._trio_ids = trios[:, :3].astype(np.int64)
                self._tables["trios_sph"] = _Table(
                    {"id_a": self._trio_ids[:, 0], "id_b": self._trio_ids[:, 1],
                     "id_c": self._trio_ids[:, 2], "area": trios[:, 3],
                     "moment": trios[:, 4]}, "area")
                self._tables["trios_pln"] = _Table(
                    {"id_a": self._trio_ids[:, 0], "id_b": self._trio_ids[:, 1],
                     "id_c": self._trio_ids[:, 2], "area": trios[:, 5],
                     "moment": trios[:, 6]}, "area")
            if "trio_perms" in self._built:
                perms = _fetch_array(conn, "trio_perms",
                                     "id_c, id_c1, id_c2, theta1, theta2, phi")
                self._perm_ids = perms[:, :3].astype(np.int64)
                self._tables["trio_perms"] = _Table(
                    {"id_c": self._perm_ids[:, 0], "id_c1": self._perm_ids[:, 1],
                     "id_c2": self._perm_ids[:, 2], "theta1": perms[:, 3],
                     "theta2": perms[:, 4], "phi": perms[:, 5]}, "theta1")
        finally:
            conn.close()

        self.feature_accesses = 0
        self.spatial_accesses = 0

    # -- accounting ---------------------------------------------------------

    @property
    def total_accesses(self) -> int:
        return self.feature_accesses + self.spatial_accesses

    def reset_counters(self) -> None:
        self.feature_accesses = 0
        self.spatial_accesses = 0

    # -- table introspection -------------------------------------------------

    @property
    def table_names(self):
        return tuple(self._tables)

    def table_columns(self, table: str) -> dict[str, np.ndarray]:
        """Stored-order column arrays (the linear-scan ground truth)."""
        return dict(self._tables[table].columns)

    def table_size(self, table: str) -> int:
        return self._tables[table].n

    # -- queries -------------------------------------------------------------

    def _range_indices(self, table: str, intervals: dict) -> np.ndarray:
        tab = self._tables.get(table)
        if tab is None:
            raise CatalogError(f"table {table!r} not present in this catalog build")
        self.feature_accesses += 1
        return tab.range_indices(intervals)

    def query_range(self, table: str, intervals: dict) -> list[tuple]:
        """Rows whose every named column lies in its closed [lo, hi] interval.

        Counts as exactly one catalog access.  Returns full rows as tuples
        in stored order; ids come back as ints, features as floats.
        """
        tab = self._tables[table]
        idx = self._range_indices(table, intervals)
        names = list(tab.columns)
        cols = [tab.columns[name][idx] for name in names]
        out = []
        for k in range(len(idx)):
            out.append(tuple(int(c[k]) if c.dtype.kind == "i" else float(c[k]) for c in cols))
        return out

    def query_pairs(self, lo: float, hi: float) -> list[tuple[int, int]]:
        idx = self._range_indices("pairs", {"theta": (lo, hi)})
        return [(int(a), int(b)) for a, b in self._pair_ids[idx]]

    def query_trios(self, kind: str, area_window, moment_window) -> list[tuple[int, int, int]]:
        table = "trios_sph" if kind == "spherical" else "trios_pln"
        idx = self._range_indices(table, {"area": tuple(area_window),
                                          "moment": tuple(moment_window)})
        return [(int(a), int(b), int(c)) for a, b, c in self._trio_ids[idx]]

    def query_trio_perms(self, theta1_window, theta2_window, phi_window) -> list[tuple[int, int, int]]:
        idx = self._range_indices("trio_perms", {"theta1": tuple(theta1_window),
                                                 "theta2": tuple(theta2_window),
                                                 "phi": tuple(phi_window)})
        return [(int(c), int(c1), int(c2)) for c, c1, c2 in self._perm_ids[idx]]

    # -- stars ----------------------------------------------------------------

    def star_vector(self, star_id: int) -> np.ndarray:
        return self.star_vecs[self._id_to_row[int(star_id)]]

    def star_vectors(self, star_ids) -> np.ndarray:
        rows = [self._id_to_row[int(i)] for i in star_ids]
        return self.star_vecs[rows]

    def stars_near(self, center: np.ndarray, radius: float):
        """Catalog stars strictly within `radius` degrees of a unit vector.

        Counts as one (spatial) catalog access; used by the direct match
        test to fetch the neighborhood of a candidate set.
        """
        self.spatial_accesses += 1
        cos_min = math.cos(math.radians(radius))
        mask = self.star_vecs @ np.asarray(center) > cos_min
        return self.star_ids[mask], self.star_vecs[mask]

    def field_star_indices(self, center: np.ndarray, radius: float) -> np.ndarray:
        """Row indices within radius; synthesis-side helper, not counted."""
        cos_min = math.cos(math.radians(radius))
        return np.nonzero(self.star_vecs @ np.asarray(center) > cos_min)[0]
