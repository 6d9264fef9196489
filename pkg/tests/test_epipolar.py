import numpy as np
import pytest

from stereovision.camera import Intrinsics, normalize, project
from stereovision.epipolar import (apply_homography, enforce_rank2, epipolar_residual, epipoles,
                                   essential_from_pose, estimate_fundamental_8pt,
                                   estimate_homography_4pt, fundamental_from_essential,
                                   homography_from_plane, isotropic_normalization, normalize_scale)
from stereovision.errors import (DegenerateConfiguration, DegenerateTranslation, InsufficientPoints,
                                 PointAtInfinity, ZeroPlaneOffset)
from stereovision.geometry import Pose, transform_point

from conftest import correspondences, points_in_front, random_rig_pose

K64 = Intrinsics(100.0, 100.0, 64.0, 64.0)
KI = Intrinsics(1.0, 1.0, 0.0, 0.0)


def true_F(pose, KL, KR):
    return fundamental_from_essential(essential_from_pose(pose.rotation, pose.translation), KL, KR)


def test_essential_examples():
    np.testing.assert_array_equal(essential_from_pose(np.eye(3), [1, 0, 0]),
                                  [[0, 0, 0], [0, 0, -1], [0, 1, 0]])
    np.testing.assert_array_equal(essential_from_pose(np.eye(3), [0, 0, 1]),
                                  [[0, -1, 0], [1, 0, 0], [0, 0, 0]])
    with pytest.raises(DegenerateTranslation):
        essential_from_pose(np.eye(3), [0, 0, 0])


def test_essential_constraint_on_random_rigs(rng):
    for _ in range(20):
        pose = random_rig_pose(rng)
        E = essential_from_pose(pose.rotation, pose.translation)
        pts = points_in_front(rng, 100, pose)
        pr = transform_point(pose, pts)
        hl = pts / pts[:, 2:3]
        hr = pr / pr[:, 2:3]
        res = np.einsum("ni,ij,nj->n", hr, E, hl)
        assert np.max(np.abs(res)) < 1e-10 * np.linalg.norm(E)
        assert np.linalg.matrix_rank(E, tol=1e-10 * np.linalg.norm(E)) == 2


def test_fundamental_identity_intrinsics():
    E = essential_from_pose(np.eye(3), [-0.5, 0.1, 0.02])
    np.testing.assert_allclose(fundamental_from_essential(E, KI, KI), normalize_scale(E), atol=1e-15)


def test_fundamental_residuals_and_rank(rng):
    pose = random_rig_pose(rng)
    F = true_F(pose, K64, K64)
    pl, pr = correspondences(pose, K64, K64, points_in_front(rng, 100, pose))
    assert np.max(np.abs(epipolar_residual(F, pl, pr))) < 1e-9
    assert abs(np.linalg.det(F)) < 1e-9
    assert np.max(np.abs(F)) == 1.0 and F.flat[np.argmax(np.abs(F))] == 1.0


def test_residual_invariant_along_epipolar_line(rng):
    pose = random_rig_pose(rng)
    F = true_F(pose, K64, K64)
    pl, pr = correspondences(pose, K64, K64, points_in_front(rng, 10, pose))
    for a, b in zip(pl, pr):
        line = F @ np.append(a, 1.0)
        direction = np.array([-line[1], line[0]])
        moved = b + 7.5 * direction / np.linalg.norm(direction)
        assert abs(epipolar_residual(F, a, moved) - epipolar_residual(F, a, b)) < 1e-9


def test_zero_F_residual():
    assert epipolar_residual(np.zeros((3, 3)), [1.0, 2.0], [3.0, 4.0]) == 0.0


def test_epipoles_are_null_vectors(rng):
    pose = random_rig_pose(rng)
    F = true_F(pose, K64, K64)
    eL, eR = epipoles(F)
    assert np.max(np.abs(F @ eL)) < 1e-12
    assert np.max(np.abs(eR @ F)) < 1e-12
    # the left epipole is the image of the right camera centre
    centre = -pose.rotation.T @ pose.translation
    img = K64.matrix @ centre
    assert np.linalg.norm(np.cross(img / np.linalg.norm(img), eL)) < 1e-9


def test_isotropic_normalization(rng):
    pts = rng.uniform(0, 640, size=(50, 2))
    T = isotropic_normalization(pts)
    q = (np.column_stack([pts, np.ones(50)]) @ T.T)[:, :2]
    np.testing.assert_allclose(q.mean(axis=0), 0.0, atol=1e-12)
    assert np.mean(np.linalg.norm(q, axis=1)) == pytest.approx(np.sqrt(2))


def test_eight_point_recovers_F(rng):
    for _ in range(10):
        pose = random_rig_pose(rng)
        F = true_F(pose, K64, K64)
        pl, pr = correspondences(pose, K64, K64, points_in_front(rng, 20, pose))
        est = estimate_fundamental_8pt(pl, pr)
        assert np.max(np.abs(est - F)) < 1e-6
        assert abs(np.linalg.det(est)) < 1e-9


def test_eight_point_exactly_eight(rng):
    pose = random_rig_pose(rng)
    pl, pr = correspondences(pose, K64, K64, points_in_front(rng, 8, pose))
    est = estimate_fundamental_8pt(pl, pr)
    assert np.max(np.abs(est - true_F(pose, K64, K64))) < 1e-6


def test_eight_point_errors(rng):
    pose = random_rig_pose(rng)
    pl, pr = correspondences(pose, K64, K64, points_in_front(rng, 20, pose))
    with pytest.raises(InsufficientPoints):
        estimate_fundamental_8pt(pl[:7], pr[:7])
    # all points on one plane
    plane = np.column_stack([rng.uniform(-2, 2, 20), rng.uniform(-2, 2, 20), np.full(20, 8.0)])
    pl, pr = correspondences(pose, K64, K64, plane)
    with pytest.raises(DegenerateConfiguration):
        estimate_fundamental_8pt(pl, pr)


def test_eight_point_scale_invariance(rng):
    # noisy data so the estimate is a genuine least-squares fit
    pose = random_rig_pose(rng)
    pl, pr = correspondences(pose, K64, K64, points_in_front(rng, 40, pose))
    pl = pl + rng.normal(scale=0.5, size=pl.shape)
    pr = pr + rng.normal(scale=0.5, size=pr.shape)
    F = estimate_fundamental_8pt(pl, pr)
    s = 3.7
    Fs = estimate_fundamental_8pt(pl * s, pr * s)
    S = np.diag([s, s, 1.0])
    assert np.max(np.abs(normalize_scale(S.T @ Fs @ S) - F)) < 1e-6


def test_rank2_residual_change_bounded(rng):
    pose = random_rig_pose(rng)
    pl, pr = correspondences(pose, K64, K64, points_in_front(rng, 30, pose))
    noisy = true_F(pose, K64, K64) + rng.normal(scale=1e-3, size=(3, 3))
    # residuals on unit-normalized points so the bound is on the right scale
    hl = normalize(K64, pl)
    hr = normalize(K64, pr)
    hl /= np.linalg.norm(hl, axis=1, keepdims=True)
    hr /= np.linalg.norm(hr, axis=1, keepdims=True)
    F2, sigma = enforce_rank2(noisy)
    before = np.einsum("ni,ij,nj->n", hr, noisy, hl)
    after = np.einsum("ni,ij,nj->n", hr, F2, hl)
    assert np.all(np.abs(after - before) <= sigma + 1e-15)
    assert abs(np.linalg.det(F2)) < 1e-15


def test_plane_homography_rectified_shift():
    f, Tc, z0 = 400.0, 0.3, 6.0
    K = Intrinsics(f, f, 320.0, 240.0)
    H = homography_from_plane(np.eye(3), [-Tc, 0, 0], [0, 0, 1], -z0, K, K)
    p = np.array([[100.0, 50.0], [400.0, 300.0]])
    q = apply_homography(H, p)
    np.testing.assert_allclose(q - p, [[-f * Tc / z0, 0.0]] * 2, atol=1e-9)


def test_plane_homography_without_translation():
    KR = Intrinsics(200.0, 210.0, 30.0, 40.0)
    H = homography_from_plane(np.eye(3), [0, 0, 0], [0.1, 0.2, 1.0], -5.0, K64, KR)
    np.testing.assert_allclose(H, KR.matrix @ K64.inverse, atol=1e-12)
    with pytest.raises(ZeroPlaneOffset):
        homography_from_plane(np.eye(3), [1, 0, 0], [0, 0, 1], 0.0, K64, KR)


def test_plane_homography_on_plane_points(rng):
    for _ in range(10):
        pose = random_rig_pose(rng)
        n = np.array([rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 1.0])
        b = -rng.uniform(5, 10)
        xy = rng.uniform(-1, 1, size=(30, 2))
        z = -(b + xy @ n[:2]) / n[2]
        pts = np.column_stack([xy, z])
        pl, pr = correspondences(pose, K64, K64, pts)
        H = homography_from_plane(pose.rotation, pose.translation, n, b, K64, K64)
        hl = np.column_stack([pl, np.ones(30)])
        hr = np.column_stack([pr, np.ones(30)])
        mapped = hl @ H.T
        mapped /= np.linalg.norm(mapped, axis=1, keepdims=True)
        hr /= np.linalg.norm(hr, axis=1, keepdims=True)
        assert np.max(np.linalg.norm(np.cross(mapped, hr), axis=1)) < 1e-9


def test_homography_4pt_examples():
    sq = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    H = estimate_homography_4pt(sq, sq + [3.0, -2.0])
    np.testing.assert_allclose(H, [[1, 0, 3], [0, 1, -2], [0, 0, 1]] / np.float64(3.0), atol=1e-9)
    np.testing.assert_allclose(estimate_homography_4pt(sq, sq), np.eye(3), atol=1e-9)
    with pytest.raises(InsufficientPoints):
        estimate_homography_4pt(sq[:3], sq[:3])
    with pytest.raises(DegenerateConfiguration):
        estimate_homography_4pt(np.array([[0, 0], [1, 1], [2, 2], [0, 1.0]]), sq)


def random_homography(rng):
    H = np.eye(3) + rng.normal(scale=0.1, size=(3, 3))
    H[2, :2] *= 1e-3
    H[:2, 2] = rng.uniform(-20, 20, 2)
    return H


def test_homography_minimal_exact(rng):
    for _ in range(20):
        H = random_homography(rng)
        p = rng.uniform(0, 100, size=(4, 2))
        q = apply_homography(H, p)
        est = estimate_homography_4pt(p, q)
        np.testing.assert_allclose(est, normalize_scale(H), atol=1e-9)


def test_homography_many_points(rng):
    H = random_homography(rng)
    p = rng.uniform(0, 640, size=(12, 2))
    q = apply_homography(H, p)
    est = estimate_homography_4pt(p, q)
    assert np.max(np.abs(apply_homography(est, p) - q)) < 1e-6


def test_apply_homography(rng):
    p = rng.uniform(0, 100, size=(5, 2))
    np.testing.assert_array_equal(apply_homography(np.eye(3), p), p)
    T = np.array([[1, 0, 4.0], [0, 1, -1.0], [0, 0, 1]])
    np.testing.assert_allclose(apply_homography(T, p), p + [4, -1])
    H = random_homography(rng)
    np.testing.assert_allclose(apply_homography(np.linalg.inv(H), apply_homography(H, p)), p, atol=1e-9)
    with pytest.raises(PointAtInfinity):
        apply_homography(np.array([[1, 0, 0], [0, 1, 0], [1, 0, 0.0]]), [0.0, 5.0])
