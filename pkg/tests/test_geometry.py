import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stereovision.errors import InvariantViolation
from stereovision.geometry import (Pose, compose, cross_via_skew, is_rotation, pose_inverse,
                                   rotation_about_axis, skew, transform_point)

from conftest import random_rotation

finite = st.floats(-1e3, 1e3, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


def test_skew_pattern():
    expected = [[0, -3, 2], [3, 0, -1], [-2, 1, 0]]
    np.testing.assert_array_equal(skew([1, 2, 3]), expected)
    np.testing.assert_array_equal(skew([0, 0, 0]), np.zeros((3, 3)))


@given(vec3)
def test_skew_antisymmetric_and_annihilates(a):
    S = skew(a)
    np.testing.assert_array_equal(S.T, -S)
    scale = max(np.linalg.norm(a), 1.0)
    assert np.max(np.abs(S @ a)) <= 1e-12 * scale ** 2
    assert np.max(np.abs(a @ S)) <= 1e-12 * scale ** 2


@given(vec3, vec3)
def test_cross_matches_numpy_and_anticommutes(a, b):
    c = cross_via_skew(a, b)
    np.testing.assert_allclose(c, np.cross(a, b), atol=1e-9)
    # BLAS may fuse multiply-adds, so equality holds up to one rounding
    tol = 1e-15 * (np.linalg.norm(a) * np.linalg.norm(b) + 1e-300)
    assert np.max(np.abs(c + cross_via_skew(b, a))) <= tol
    assert np.max(np.abs(skew(a) @ b + skew(b) @ a)) <= tol


def test_cross_basis():
    np.testing.assert_array_equal(cross_via_skew([1, 0, 0], [0, 1, 0]), [0, 0, 1])
    np.testing.assert_array_equal(cross_via_skew([4, 5, 6], [4, 5, 6]), np.zeros(3))


def test_skew_rejects_bad_input():
    with pytest.raises(ValueError):
        skew([1, 2])
    with pytest.raises(ValueError):
        skew([1, np.nan, 0])


def test_is_rotation_examples():
    assert is_rotation(np.eye(3))
    assert is_rotation(rotation_about_axis([0, 0, 1], np.radians(30)))
    assert not is_rotation(np.diag([2.0, 1.0, 1.0]))
    assert not is_rotation(np.eye(3) + 1e-6)
    with pytest.raises(ValueError):
        is_rotation(np.eye(3), tol=0)


def test_is_rotation_closed_under_composition(rng):
    for _ in range(100):
        A, B = random_rotation(rng), random_rotation(rng)
        assert is_rotation(A) and is_rotation(B)
        assert is_rotation(A @ B, tol=1e-8)


def test_transform_point_examples():
    P = Pose(np.eye(3), [1, 2, 3])
    np.testing.assert_array_equal(transform_point(P, [0, 0, 0]), [1, 2, 3])
    x = np.array([0.3, -2.0, 7.0])
    np.testing.assert_array_equal(transform_point(Pose(), x), x)


def test_pose_inverse_examples():
    assert pose_inverse(Pose()) == Pose()
    inv = pose_inverse(Pose(np.eye(3), [1, 0, 0]))
    np.testing.assert_array_equal(inv.translation, [-1, 0, 0])


def test_se3_round_trips(rng):
    for _ in range(200):
        P = Pose(random_rotation(rng), rng.normal(size=3) * 5)
        x = rng.normal(size=3) * 10
        np.testing.assert_allclose(transform_point(compose(P, pose_inverse(P)), x), x, atol=1e-12 * 50)
        np.testing.assert_allclose(transform_point(pose_inverse(P), transform_point(P, x)), x, atol=1e-12 * 50)
        homog = P.matrix @ np.append(x, 1.0)
        np.testing.assert_allclose(homog[:3], transform_point(P, x), atol=1e-12 * 50)


def test_compose_order(rng):
    A = Pose(random_rotation(rng), rng.normal(size=3))
    B = Pose(random_rotation(rng), rng.normal(size=3))
    x = rng.normal(size=3)
    np.testing.assert_allclose(transform_point(A @ B, x), transform_point(A, transform_point(B, x)), atol=1e-12)


def test_pose_validation_and_immutability():
    with pytest.raises(InvariantViolation, match="rotation check failed"):
        Pose(np.diag([2.0, 1.0, 1.0]), np.zeros(3))
    P = Pose(np.eye(3), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        P.translation[0] = 5.0
    with pytest.raises(Exception):
        P.rotation = np.eye(3)


def test_transform_batch_matches_single(rng):
    P = Pose(random_rotation(rng), rng.normal(size=3))
    pts = rng.normal(size=(10, 3))
    batch = transform_point(P, pts)
    for p, q in zip(pts, batch):
        np.testing.assert_allclose(transform_point(P, p), q, rtol=0, atol=1e-14)


@settings(max_examples=50)
@given(st.floats(-np.pi, np.pi), vec3.filter(lambda a: np.linalg.norm(a) > 1e-3))
def test_rodrigues_is_rotation(angle, axis):
    assert is_rotation(rotation_about_axis(axis, angle))
