"""Source parsing, feature-table builds, and the indexed store."""

import itertools
import sqlite3

import numpy as np
import pytest

from starid import catalog as cat
from starid import features as feat
from starid import geometry as geom


def _star(star_id, alpha, delta, m=3.0):
    return cat.CatalogStar(star_id, alpha, delta, m,
                           geom.spherical_to_cartesian(alpha, delta, 1.0))


@pytest.fixture()
def close_trio():
    # Three stars within a few degrees of each other.
    return [_star(1, 10.0, 5.0), _star(2, 12.0, 6.0), _star(3, 11.0, 4.0)]


class TestParseSource:
    def _write(self, tmp_path, text, name="cat.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_header_columns_and_cutoff(self, tmp_path):
        path = self._write(tmp_path, "id,ra,dec,mag\n1,10.0,5.0,2.5\n2,20.0,-5.0,6.0\n3,30.0,0.0,5.9\n")
        stats = {}
        stars = cat.parse_source(path, 6.0, stats=stats)
        # m < cutoff is strict: the 6.0 row is excluded.
        assert [s.id for s in stars] == [1, 3]
        assert stats["malformed"] == 0

    def test_positional_columns_whitespace(self, tmp_path):
        path = self._write(tmp_path, "7   10.0   5.0  1.0\n8   20.0  -5.0  1.5\n")
        stars = cat.parse_source(path, 6.0, delimiter=None,
                                 id_col=0, ra_col=1, dec_col=2, mag_col=3)
        assert [s.id for s in stars] == [7, 8]

    def test_missing_position_skipped(self, tmp_path):
        path = self._write(tmp_path, "id,ra,dec,mag\n1,,5.0,2.0\n2,20.0,,2.0\n3,30.0,0.0,2.0\n")
        stats = {}
        stars = cat.parse_source(path, 6.0, stats=stats)
        assert [s.id for s in stars] == [3]
        assert stats["missing_position"] == 2
        assert stats["malformed"] == 0

    def test_malformed_rows_counted(self, tmp_path):
        path = self._write(tmp_path,
                           "id,ra,dec,mag\n1,abc,5.0,2.0\n2,20.0,95.0,2.0\n3,30.0,0.0,2.0\n")
        stats = {}
        stars = cat.parse_source(path, 6.0, stats=stats)
        assert [s.id for s in stars] == [3]
        assert stats["malformed"] == 2

    def test_empty_file(self, tmp_path):
        path = self._write(tmp_path, "")
        stats = {}
        assert cat.parse_source(path, 6.0, stats=stats) == []
        assert stats.get("malformed", 0) == 0

    def test_unreadable_file_fatal(self, tmp_path):
        with pytest.raises(cat.CatalogError):
            cat.parse_source(tmp_path / "absent.csv", 6.0)

    def test_unit_vector_invariant(self, tmp_path):
        path = self._write(tmp_path, "id,ra,dec,mag\n1,123.4,-56.7,1.0\n")
        star = cat.parse_source(path, 6.0)[0]
        assert abs(np.linalg.norm(star.v) - 1.0) < 1e-12
        np.testing.assert_allclose(
            star.v, geom.spherical_to_cartesian(star.alpha, star.delta, 1.0), atol=0)

    def test_alpha_wrapped(self, tmp_path):
        path = self._write(tmp_path, "id,ra,dec,mag\n1,370.0,0.0,1.0\n")
        star = cat.parse_source(path, 6.0)[0]
        assert star.alpha == pytest.approx(10.0)


class TestPairCatalog:
    def test_far_pair_excluded(self):
        stars = [_star(1, 0.0, 0.0), _star(2, 30.0, 0.0)]
        assert len(cat.build_pair_catalog(stars, 20.0)) == 0

    def test_three_close_stars_match_brute_force(self, close_trio):
        table = cat.build_pair_catalog(close_trio, 20.0)
        assert len(table) == 3
        by_ids = {(int(r["id_a"]), int(r["id_b"])): float(r["theta"]) for r in table}
        for a, b in itertools.combinations(close_trio, 2):
            key = (min(a.id, b.id), max(a.id, b.id))
            assert by_ids[key] == pytest.approx(
                geom.angular_separation(a.v, b.v), abs=1e-12)

    def test_boundary_inclusive_zero_excluded(self):
        stars = [_star(1, 0.0, 0.0), _star(2, 20.0, 0.0), _star(3, 0.0, 0.0)]
        table = cat.build_pair_catalog(stars, 20.0)
        pairs = {(int(r["id_a"]), int(r["id_b"])) for r in table}
        assert (1, 2) in pairs           # separation exactly psi_max kept
        assert (1, 3) not in pairs       # coincident pair (theta = 0) dropped
        for r in table:
            assert 0.0 < r["theta"] <= 20.0
            assert r["id_a"] < r["id_b"]


class TestTrioCatalogs:
    def test_single_combination(self, close_trio):
        table = cat.build_trio_catalog(close_trio, 20.0, "spherical")
        assert len(table) == 1

    def test_features_rederivable(self, close_trio):
        for kind in ("spherical", "planar"):
            table = cat.build_trio_catalog(close_trio, 20.0, kind)
            row = table[0]
            vec = {s.id: s.v for s in close_trio}
            v1, v2, v3 = vec[int(row["id_a"])], vec[int(row["id_b"])], vec[int(row["id_c"])]
            if kind == "spherical":
                expected = feat.spherical_features(v1, v2, v3)
            else:
                expected = feat.planar_features(v1, v2, v3)
            assert row["f1"] == pytest.approx(expected.area, abs=1e-12)
            assert row["f2"] == pytest.approx(expected.moment, abs=1e-12)

    def test_permutation_rows_per_combination(self, close_trio):
        table = cat.build_trio_permutation_catalog(close_trio, 20.0)
        assert len(table) == 3
        assert sorted(table["id_c"].tolist()) == [1, 2, 3]

    def test_permutation_ordering_constraint(self, close_trio):
        # Every stored row orders the neighbors by separation from the center.
        table = cat.build_trio_permutation_catalog(close_trio, 20.0)
        vec = {s.id: s.v for s in close_trio}
        for row in table:
            t1 = geom.angular_separation(vec[int(row["id_c1"])], vec[int(row["id_c"])])
            t2 = geom.angular_separation(vec[int(row["id_c2"])], vec[int(row["id_c"])])
            assert row["theta1"] == pytest.approx(t1, abs=1e-12)
            assert row["theta2"] == pytest.approx(t2, abs=1e-12)
            assert row["theta1"] <= row["theta2"]
            phi = geom.interior_angle(vec[int(row["id_c"])], vec[int(row["id_c1"])],
                                      vec[int(row["id_c2"])])
            assert row["phi"] == pytest.approx(phi, abs=1e-10)

    def test_permutation_tie_breaks_by_id(self):
        # Neighbors at identical separations order by ascending catalog id.
        stars = [_star(5, 0.0, 0.0), _star(9, 4.0, 0.0), _star(2, -4.0, 0.0)]
        table = cat.build_trio_permutation_catalog(stars, 20.0)
        central = {int(r["id_c"]): r for r in table}
        assert int(central[5]["id_c1"]) == 2 and int(central[5]["id_c2"]) == 9

    def test_empty_input_rejected(self):
        with pytest.raises(cat.CatalogError):
            cat.build_pair_catalog([], 20.0)


class TestStore:
    def test_manifest_counts(self, small_store):
        m = small_store.manifest
        assert int(m["n_pairs"]) == small_store.table_size("pairs")
        assert int(m["n_trios"]) == small_store.table_size("trios_sph")
        assert int(m["n_trio_perms"]) == small_store.table_size("trio_perms")
        assert int(m["n_stars"]) == len(small_store.star_ids)

    def test_full_domain_interval_returns_all(self, small_store):
        rows = small_store.query_range("pairs", {"theta": (-1e9, 1e9)})
        assert len(rows) == small_store.table_size("pairs")

    def test_zero_width_absent_value_is_empty(self, small_store):
        thetas = small_store.table_columns("pairs")["theta"]
        probe = 10.123456789
        assert probe not in thetas
        assert small_store.query_range("pairs", {"theta": (probe, probe)}) == []

    def test_counter_increments_once_per_query(self, small_store):
        small_store.reset_counters()
        small_store.query_range("pairs", {"theta": (-1e9, 1e9)})
        small_store.query_range("pairs", {"theta": (5.0, 5.0)})
        assert small_store.feature_accesses == 2
        small_store.query_trios("spherical", (0.0, 1.0), (0.0, 1.0))
        small_store.query_trio_perms((0, 20), (0, 20), (0, 180))
        assert small_store.feature_accesses == 4
        small_store.stars_near(np.array([0.0, 0.0, 1.0]), 10.0)
        assert small_store.spatial_accesses == 1
        assert small_store.total_accesses == 5

    @pytest.mark.parametrize("table,cols", [
        ("pairs", ("theta",)),
        ("trios_sph", ("area", "moment")),
        ("trios_pln", ("area", "moment")),
        ("trio_perms", ("theta1", "theta2", "phi")),
    ])
    def test_indexed_query_equals_linear_scan(self, small_store, table, cols, rng):
        columns = small_store.table_columns(table)
        n = small_store.table_size(table)
        for _ in range(25):
            intervals = {}
            for col in cols:
                values = columns[col]
                lo, hi = np.sort(rng.choice(values, size=2))
                pad = rng.uniform(-0.1, 0.1) * max(abs(hi - lo), 1e-9)
                intervals[col] = (float(lo - pad), float(hi + pad))
            got = small_store.query_range(table, intervals)
            mask = np.ones(n, dtype=bool)
            for col, (lo, hi) in intervals.items():
                mask &= (columns[col] >= lo) & (columns[col] <= hi)
            expected_rows = np.nonzero(mask)[0]
            assert len(got) == len(expected_rows)
            names = list(columns)
            for row, idx in zip(got, expected_rows):
                for value, name in zip(row, names):
                    assert value == pytest.approx(columns[name][idx], abs=0)

    def test_query_matches_direct_sql(self, small_store, rng):
        # The RAM path and the on-disk index must agree row for row.
        conn = sqlite3.connect(f"file:{small_store.path / cat.DB_NAME}?mode=ro", uri=True)
        try:
            thetas = small_store.table_columns("pairs")["theta"]
            for _ in range(10):
                lo, hi = np.sort(rng.choice(thetas, size=2))
                got = {tuple(p) for p in small_store.query_pairs(float(lo), float(hi))}
                rows = conn.execute(
                    "SELECT id_a, id_b FROM pairs WHERE theta BETWEEN ? AND ?",
                    (float(lo), float(hi))).fetchall()
                assert got == {tuple(r) for r in rows}
        finally:
            conn.close()

    def test_stars_near_strict_radius(self, small_store):
        center = small_store.star_vecs[0]
        ids, vecs = small_store.stars_near(center, 5.0)
        seps = geom.separations(center, vecs)
        assert (seps < 5.0).all()
        others = np.setdiff1d(small_store.star_ids, ids)
        other_seps = geom.separations(center, small_store.star_vectors(others))
        assert (other_seps >= 5.0).all()

    def test_stored_features_rederivable(self, small_store):
        # Every trio row's features recompute from its member vectors.
        columns = small_store.table_columns("trios_sph")
        pl = small_store.table_columns("trios_pln")
        take = np.arange(0, small_store.table_size("trios_sph"),
                         max(1, small_store.table_size("trios_sph") // 200))
        for idx in take:
            ids = (int(columns["id_a"][idx]), int(columns["id_b"][idx]),
                   int(columns["id_c"][idx]))
            v1, v2, v3 = small_store.star_vectors(ids)
            sph = feat.spherical_features(v1, v2, v3, small_store.moment_depth)
            pln = feat.planar_features(v1, v2, v3)
            assert columns["area"][idx] == pytest.approx(sph.area, abs=1e-12)
            assert columns["moment"][idx] == pytest.approx(sph.moment, abs=1e-12)
            assert pl["area"][idx] == pytest.approx(pln.area, abs=1e-12)
            assert pl["moment"][idx] == pytest.approx(pln.moment, abs=1e-12)

    def test_partial_build_rejects_missing_table(self, tmp_path, close_trio):
        out = cat.build_store(close_trio, tmp_path / "partial", tables=("pairs",))
        store = cat.CatalogStore(out)
        assert store.query_pairs(0.0, 20.0)
        with pytest.raises(cat.CatalogError):
            store.query_trios("spherical", (0, 1), (0, 1))

    def test_existing_store_not_overwritten(self, tmp_path, close_trio):
        out = cat.build_store(close_trio, tmp_path / "dup")
        with pytest.raises(cat.CatalogError):
            cat.build_store(close_trio, out)
        cat.build_store(close_trio, out, overwrite=True)

    def test_pair_trio_uniqueness(self, small_store):
        pairs = small_store.table_columns("pairs")
        keys = set(zip(pairs["id_a"].tolist(), pairs["id_b"].tolist()))
        assert len(keys) == small_store.table_size("pairs")
        trios = small_store.table_columns("trios_sph")
        tkeys = set(zip(trios["id_a"].tolist(), trios["id_b"].tolist(),
                        trios["id_c"].tolist()))
        assert len(tkeys) == small_store.table_size("trios_sph")
        # Permutation table: one row per (combination, central) choice.
        perms = small_store.table_columns("trio_perms")
        pkeys = set()
        for c, c1, c2 in zip(perms["id_c"].tolist(), perms["id_c1"].tolist(),
                             perms["id_c2"].tolist()):
            pkeys.add((c, frozenset((c1, c2))))
        assert len(pkeys) == small_store.table_size("trio_perms")
        assert small_store.table_size("trio_perms") == 3 * small_store.table_size("trios_sph")
