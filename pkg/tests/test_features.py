"""Triangle feature computations: planar and spherical area/moment."""

import itertools
import math

import numpy as np
import pytest

from starid import features as feat
from starid import geometry as geom

OCTANT = (np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]))


class TestPlanarFeatures:
    def test_octant_closed_form(self):
        # Chords are all sqrt(2): Heron gives sqrt(3)/2, moment A*(3*2)/36.
        f = feat.planar_features(*OCTANT)
        assert f.area == pytest.approx(math.sqrt(3.0) / 2.0, abs=1e-12)
        assert f.moment == pytest.approx(math.sqrt(3.0) / 12.0, abs=1e-12)

    def test_degenerate_repeated_point(self):
        v = np.array([1.0, 0.0, 0.0])
        w = np.array([0.0, 1.0, 0.0])
        f = feat.planar_features(v, v, w)
        assert f.area == 0.0 and f.moment == 0.0

    def test_collinear_points(self):
        # Planar features accept raw points; a 3D-collinear trio is flat.
        f = feat.planar_features(np.array([0.0, 0, 1]), np.array([0.0, 0, 2]),
                                 np.array([0.0, 0, 3]))
        assert f.area == pytest.approx(0.0, abs=1e-12)
        assert f.moment == pytest.approx(0.0, abs=1e-12)

    def test_permutation_invariance(self, rng):
        v = [geom.random_unit_vector(rng) for _ in range(3)]
        base = feat.planar_features(*v)
        for p in itertools.permutations(v):
            f = feat.planar_features(*p)
            assert f.area == pytest.approx(base.area, abs=1e-12)
            assert f.moment == pytest.approx(base.moment, abs=1e-12)


class TestSphericalFeatures:
    def test_octant_area_is_half_pi(self):
        f = feat.spherical_features(*OCTANT)
        assert f.area == pytest.approx(math.pi / 2.0, abs=1e-9)

    def test_great_circle_trio_is_degenerate(self):
        # Catastrophic cancellation in the excess leaves ~1e-8 residue.
        v3 = geom.unit(np.array([1.0, 1.0, 0.0]))
        f = feat.spherical_features(np.array([1.0, 0, 0]), np.array([0.0, 1, 0]), v3)
        assert f.area == pytest.approx(0.0, abs=1e-7)
        assert f.moment == pytest.approx(0.0, abs=1e-7)

    def test_small_triangle_matches_planar_within_1pct(self, rng):
        # Max side below half a degree: surface and chord triangles agree.
        for _ in range(20):
            center = geom.random_unit_vector(rng)
            pts = []
            for _ in range(3):
                axis = np.cross(center, geom.random_unit_vector(rng))
                axis /= np.linalg.norm(axis)
                angle = rng.uniform(0.05, 0.2)
                pts.append(geom.rotation_about_axis(axis, angle) @ center)
            sides = [geom.angular_separation(pts[a], pts[b])
                     for a, b in ((0, 1), (0, 2), (1, 2))]
            if max(sides) > 0.5 or min(sides) < 0.02:
                continue
            sph = feat.spherical_features(*pts)
            pln = feat.planar_features(*pts)
            if pln.area > 1e-12:
                assert sph.area == pytest.approx(pln.area, rel=0.01)

    def test_permutation_invariance(self, rng):
        v = [geom.random_unit_vector(rng) for _ in range(3)]
        base = feat.spherical_features(*v)
        for p in itertools.permutations(v):
            f = feat.spherical_features(*p)
            assert f.area == pytest.approx(base.area, abs=1e-12)
            assert f.moment == pytest.approx(base.moment, abs=1e-11)

    def test_rotation_invariance(self, rng):
        v1, v2, v3 = (geom.random_unit_vector(rng) for _ in range(3))
        base_s = feat.spherical_features(v1, v2, v3)
        base_p = feat.planar_features(v1, v2, v3)
        for _ in range(10):
            r = geom.random_rotation(rng)
            fs = feat.spherical_features(r @ v1, r @ v2, r @ v3)
            fp = feat.planar_features(r @ v1, r @ v2, r @ v3)
            assert fs.area == pytest.approx(base_s.area, abs=1e-10)
            assert fs.moment == pytest.approx(base_s.moment, abs=1e-10)
            assert fp.area == pytest.approx(base_p.area, abs=1e-10)
            assert fp.moment == pytest.approx(base_p.moment, abs=1e-10)

    def test_moment_subdivision_converges(self):
        # Step sizes between successive depths shrink strictly.
        v1 = geom.unit(np.array([1.0, 0.05, 0.02]))
        v2 = geom.unit(np.array([1.0, -0.1, 0.12]))
        v3 = geom.unit(np.array([1.0, 0.08, -0.11]))
        moments = [feat.spherical_features(v1, v2, v3, depth=d).moment
                   for d in range(6)]
        steps = [abs(moments[d + 1] - moments[d]) for d in range(5)]
        assert all(steps[k + 1] < steps[k] for k in range(4))

    def test_depth_zero_moment_is_zero(self):
        f = feat.spherical_features(*OCTANT, depth=0)
        assert f.moment == 0.0

    def test_negative_depth_rejected(self):
        with pytest.raises(ValueError):
            feat.spherical_features(*OCTANT, depth=-1)


class TestBatchConsistency:
    def test_batch_equals_scalar(self, rng):
        v1 = np.array([geom.random_unit_vector(rng) for _ in range(30)])
        v2 = np.array([geom.random_unit_vector(rng) for _ in range(30)])
        v3 = np.array([geom.random_unit_vector(rng) for _ in range(30)])
        sa, sm = feat.spherical_features_arrays(v1, v2, v3)
        pa, pm = feat.planar_features_arrays(v1, v2, v3)
        for k in range(30):
            fs = feat.spherical_features(v1[k], v2[k], v3[k])
            fp = feat.planar_features(v1[k], v2[k], v3[k])
            assert sa[k] == pytest.approx(fs.area, abs=1e-14)
            assert sm[k] == pytest.approx(fs.moment, abs=1e-14)
            assert pa[k] == pytest.approx(fp.area, abs=1e-14)
            assert pm[k] == pytest.approx(fp.moment, abs=1e-14)
