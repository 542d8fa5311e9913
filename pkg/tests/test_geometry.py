"""Geometry and attitude primitives."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starid import geometry as geom

SQRT2_2 = math.sqrt(2.0) / 2.0


def _unit(rng):
    return geom.random_unit_vector(rng)


class TestSphericalToCartesian:
    def test_axis_cases(self):
        np.testing.assert_allclose(geom.spherical_to_cartesian(0, 0, 1), [1, 0, 0], atol=1e-12)
        np.testing.assert_allclose(geom.spherical_to_cartesian(90, 0, 1), [0, 1, 0], atol=1e-12)

    def test_closed_form_45_45(self):
        np.testing.assert_allclose(geom.spherical_to_cartesian(45, 45, 1),
                                   [0.5, 0.5, SQRT2_2], atol=1e-12)

    def test_radius_scales(self):
        np.testing.assert_allclose(geom.spherical_to_cartesian(45, 45, 2),
                                   [1.0, 1.0, math.sqrt(2.0)], atol=1e-12)

    def test_unit_norm_for_r1(self, rng):
        for _ in range(50):
            alpha = rng.uniform(0, 360)
            delta = rng.uniform(-90, 90)
            v = geom.spherical_to_cartesian(alpha, delta, 1.0)
            assert abs(np.linalg.norm(v) - 1.0) < 1e-12


class TestAngularSeparation:
    def test_identity_is_zero(self, rng):
        u = _unit(rng)
        # arccos of a not-quite-1 self-dot can yield ~1e-6 degrees.
        assert geom.angular_separation(u, u) == pytest.approx(0.0, abs=1e-5)

    def test_orthogonal_is_90(self):
        assert geom.angular_separation(np.array([1.0, 0, 0]),
                                       np.array([0.0, 1, 0])) == pytest.approx(90.0)

    def test_60_degree_case(self):
        # arccos(0.5): the second vector is unit with x-component 1/2.
        v = np.array([0.5, 0.5, SQRT2_2])
        assert geom.angular_separation(np.array([1.0, 0, 0]), v) == pytest.approx(60.0, abs=1e-9)

    def test_clamp_handles_overshoot(self):
        u = np.array([1.0, 0.0, 0.0]) * (1 + 1e-16)
        assert geom.angular_separation(u, u) == 0.0

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_symmetry(self, seed):
        r = np.random.default_rng(seed)
        u, v = _unit(r), _unit(r)
        assert geom.angular_separation(u, v) == pytest.approx(
            geom.angular_separation(v, u), abs=1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_triangle_inequality(self, seed):
        r = np.random.default_rng(seed)
        u, v, w = _unit(r), _unit(r), _unit(r)
        assert geom.angular_separation(u, w) <= (geom.angular_separation(u, v)
                                                 + geom.angular_separation(v, w) + 1e-9)

    def test_separations_matches_scalar(self, rng):
        u = _unit(rng)
        vectors = np.array([_unit(rng) for _ in range(20)])
        batch = geom.separations(u, vectors)
        for k in range(20):
            assert batch[k] == pytest.approx(geom.angular_separation(u, vectors[k]), abs=1e-12)


class TestInteriorAngle:
    def test_opposite_points_through_vertex(self):
        c = np.array([1.0, 0.0, 0.0])
        t = np.array([0.0, 1.0, 0.0])
        assert geom.interior_angle(c, c + t, c - t) == pytest.approx(180.0, abs=1e-9)

    def test_coincident_directions_zero(self):
        c = np.array([1.0, 0.0, 0.0])
        p = np.array([0.9, 0.1, 0.0])
        assert geom.interior_angle(c, p, p) == pytest.approx(0.0, abs=1e-5)

    def test_right_angle_construction(self):
        c = np.array([1.0, 0.0, 0.0])
        a = np.array([0.0, 0.2, 0.0])
        b = np.array([0.0, 0.0, 0.3])
        assert geom.interior_angle(c, c + a, c + b) == pytest.approx(90.0, abs=1e-9)

    def test_point_on_vertex_raises(self):
        c = np.array([1.0, 0.0, 0.0])
        with pytest.raises(geom.DegenerateGeometryError):
            geom.interior_angle(c, c + 1e-14, c + np.array([0.0, 1.0, 0.0]))

    def test_batch_matches_scalar(self, rng):
        c = np.array([_unit(rng) for _ in range(10)])
        p = np.array([_unit(rng) for _ in range(10)])
        q = np.array([_unit(rng) for _ in range(10)])
        batch = geom.interior_angles(c, p, q)
        for k in range(10):
            assert batch[k] == pytest.approx(geom.interior_angle(c[k], p[k], q[k]), abs=1e-10)


class TestTriad:
    def test_identical_frames_give_identity(self):
        b1 = np.array([1.0, 0.0, 0.0])
        b2 = np.array([0.0, 1.0, 0.0])
        np.testing.assert_allclose(geom.triad(b1, b2, b1, b2), np.eye(3), atol=1e-12)

    def test_recovers_known_z_rotation(self):
        rotation = geom.rotation_about_axis(np.array([0.0, 0.0, 1.0]), 90.0)
        r1 = geom.unit(np.array([1.0, 0.2, 0.1]))
        r2 = geom.unit(np.array([0.1, 1.0, 0.3]))
        recovered = geom.triad(rotation @ r1, rotation @ r2, r1, r2)
        np.testing.assert_allclose(recovered, rotation, atol=1e-9)

    def test_first_observation_aligned_exactly(self, rng):
        for _ in range(20):
            r1, r2 = _unit(rng), _unit(rng)
            rotation = geom.random_rotation(rng)
            a = geom.triad(rotation @ r1, rotation @ r2, r1, r2)
            assert np.abs(a @ r1 - rotation @ r1).max() < 1e-12

    def test_output_is_rotation(self, rng):
        for _ in range(50):
            b1, b2, r1, r2 = (_unit(rng) for _ in range(4))
            if abs(np.dot(b1, b2)) > 0.99 or abs(np.dot(r1, r2)) > 0.99:
                continue
            assert geom.is_rotation_matrix(geom.triad(b1, b2, r1, r2), tol=1e-9)

    def test_round_trip_1000_rotations(self):
        # Round trip within 1e-9 max-norm over 1,000 random rotations.
        r = np.random.default_rng(777)
        worst = 0.0
        for _ in range(1000):
            rotation = geom.random_rotation(r)
            r1, r2 = _unit(r), _unit(r)
            if abs(np.dot(r1, r2)) > 0.999:
                continue
            recovered = geom.triad(rotation @ r1, rotation @ r2, r1, r2)
            worst = max(worst, float(np.abs(recovered - rotation).max()))
        assert worst < 1e-9

    def test_parallel_pair_raises(self):
        u = np.array([1.0, 0.0, 0.0])
        v = np.array([0.0, 1.0, 0.0])
        with pytest.raises(geom.DegenerateGeometryError):
            geom.triad(u, u, u, v)


class TestWahbaLoss:
    def test_truth_scores_zero(self, rng):
        rotation = geom.random_rotation(rng)
        inertial = np.array([_unit(rng) for _ in range(5)])
        body = inertial @ rotation.T
        assert geom.wahba_loss(rotation, body, inertial) <= 1e-18

    def test_identity_on_equal_frames(self, rng):
        vectors = np.array([_unit(rng) for _ in range(4)])
        assert geom.wahba_loss(np.eye(3), vectors, vectors) == 0.0

    def test_perturbation_strictly_increases_loss(self, rng):
        rotation = geom.random_rotation(rng)
        inertial = np.array([_unit(rng) for _ in range(3)])
        body = inertial @ rotation.T
        for _ in range(25):
            axis = _unit(rng)
            perturbed = geom.rotation_about_axis(axis, 0.1) @ rotation
            assert geom.wahba_loss(perturbed, body, inertial) > geom.wahba_loss(
                rotation, body, inertial)

    def test_weights_scale(self, rng):
        rotation = geom.random_rotation(rng)
        inertial = np.array([_unit(rng) for _ in range(3)])
        body = inertial @ geom.random_rotation(rng).T
        base = geom.wahba_loss(rotation, body, inertial)
        doubled = geom.wahba_loss(rotation, body, inertial, weights=np.full(3, 2.0))
        assert doubled == pytest.approx(2 * base, rel=1e-12)


class TestFindPositiveOverlay:
    def test_truth_attitude_overlays_all(self, rng):
        rotation = geom.random_rotation(rng)
        catalog = np.array([_unit(rng) for _ in range(8)])
        image = catalog @ rotation.T
        # Rotate the image back into the catalog frame with the inverse.
        mask = geom.find_positive_overlay(catalog, image, rotation.T, sigma_o=1e-4)
        assert mask.all()

    def test_disjoint_region_overlays_nothing(self):
        catalog = np.array([[0.0, 0.0, 1.0], [0.0, 1e-3, 1.0]])
        catalog = catalog / np.linalg.norm(catalog, axis=1, keepdims=True)
        image = np.array([[0.0, 0.0, -1.0]])
        mask = geom.find_positive_overlay(catalog, image, np.eye(3), sigma_o=1.0)
        assert not mask.any()

    def test_matches_brute_force(self, rng):
        catalog = np.array([_unit(rng) for _ in range(10)])
        image = np.array([_unit(rng) for _ in range(6)])
        attitude = geom.random_rotation(rng)
        sigma_o = 5.0
        mask = geom.find_positive_overlay(catalog, image, attitude, sigma_o)
        rotated = image @ attitude.T
        for pi, p in enumerate(catalog):
            expected = any(geom.angular_separation(r, p) < 3 * sigma_o for r in rotated)
            assert mask[pi] == expected

    def test_strict_inequality(self):
        p = np.array([[1.0, 0.0, 0.0]])
        exact = geom.rotation_about_axis(np.array([0.0, 0.0, 1.0]), 3.0) @ p[0]
        mask = geom.find_positive_overlay(p, np.array([exact]), np.eye(3), sigma_o=1.0)
        assert not mask.any()  # separation exactly 3*sigma_o is not an overlay


class TestRotationHelpers:
    def test_random_rotation_is_rotation(self, rng):
        for _ in range(100):
            assert geom.is_rotation_matrix(geom.random_rotation(rng), tol=1e-12)

    def test_rotation_about_axis(self):
        r = geom.rotation_about_axis(np.array([0.0, 0.0, 1.0]), 90.0)
        np.testing.assert_allclose(r @ np.array([1.0, 0, 0]), [0, 1, 0], atol=1e-12)

    def test_unit_rejects_null(self):
        with pytest.raises(geom.DegenerateGeometryError):
            geom.unit(np.zeros(3))
