"""Stereo rectification and rectified-rig depth/disparity relations.

World frame convention for a rectified rig: origin at the baseline midpoint,
z forward, left camera at x = -Tc/2, right camera at x = +Tc/2.
"""

from dataclasses import dataclass, field

import numpy as np

from .camera import (ROW_BLOCKS, Distortion, Intrinsics, RemapField, invert_correction)
from .errors import DegenerateBaseline, InvariantViolation, NonPositiveDepth, NonPositiveDisparity
from .geometry import Pose, _vec3
from .parallel import chunks, serial_for

RECTIFIED_TOL = 1e-9


@dataclass(frozen=True)
class StereoRig:
    """Two cameras and the left-to-right pose p_R = R p_L + t."""

    KL: Intrinsics
    KR: Intrinsics
    pose: Pose
    Tc: float
    rectified: bool = False
    dist_left: Distortion = field(default_factory=Distortion)
    dist_right: Distortion = field(default_factory=Distortion)

    def __post_init__(self):
        if not (np.isfinite(self.Tc) and self.Tc > 0):
            raise InvariantViolation(f"baseline Tc must be positive, got {self.Tc}")
        if self.rectified:
            if np.max(np.abs(self.pose.rotation - np.eye(3))) > RECTIFIED_TOL:
                raise InvariantViolation("rectified rig must have identity rotation")
            if np.max(np.abs(self.pose.translation - [-self.Tc, 0.0, 0.0])) > RECTIFIED_TOL:
                raise InvariantViolation("rectified rig must have translation (-Tc, 0, 0)")
            if self.KL != self.KR:
                raise InvariantViolation("rectified rig must share one intrinsic matrix")

    @classmethod
    def rectified_from(cls, K, Tc):
        return cls(K, K, Pose(np.eye(3), [-Tc, 0.0, 0.0]), Tc, rectified=True)


@dataclass(frozen=True)
class RectificationResult:
    R_rect: np.ndarray
    R_right: np.ndarray
    K_new: Intrinsics
    left_map: RemapField
    right_map: RemapField
    rig: StereoRig


def compute_rectifying_rotation(t):
    """Rotation whose first row is t/|t|, second row orthogonal to t and the
    old optical axis, third row completing a right-handed frame."""
    t = _vec3(t)
    norm = np.linalg.norm(t)
    if norm == 0:
        raise DegenerateBaseline("baseline vector is zero")
    e1 = t / norm
    e2 = np.cross([0.0, 0.0, 1.0], e1)
    n2 = np.linalg.norm(e2)
    if n2 < RECTIFIED_TOL:
        raise DegenerateBaseline("baseline is parallel to the optical axis")
    e2 = e2 / n2
    e3 = np.cross(e1, e2)
    return np.vstack([e1, e2, e3])


def _warp_map(K_src, dist, R_src_from_out, K_out, width, height, parallel_for):
    """Inverse map: output pixel -> ray in the output frame -> source camera frame
    -> distorted source pixel."""
    u_src = np.empty((height, width))
    v_src = np.empty((height, width))
    valid = np.empty((height, width), dtype=bool)
    Kinv = K_out.inverse
    M = R_src_from_out @ Kinv
    us = np.arange(width, dtype=float)

    def rows(block):
        r0, r1 = block
        vv, uu = np.meshgrid(np.arange(r0, r1, dtype=float), us, indexing="ij")
        pix = np.stack([uu, vv, np.ones_like(uu)], axis=-1)
        ray = pix @ M.T
        z = ray[..., 2]
        front = z > 0
        zs = np.where(front, z, 1.0)
        x = ray[..., 0] / zs
        y = ray[..., 1] / zs
        ok = front
        if not dist.is_zero:
            x, y, conv = invert_correction(dist, x, y)
            ok = ok & conv
        u_src[r0:r1] = K_src.fx * x + K_src.u0
        v_src[r0:r1] = K_src.fy * y + K_src.v0
        valid[r0:r1] = ok

    parallel_for(rows, chunks(height, ROW_BLOCKS))
    return RemapField(u_src, v_src, valid)


def rectify_rig(rig, out_width, out_height, recenter=False, parallel_for=None):
    """Four-step rectification.

    1. rotate the left camera by R_rect so its x axis follows the baseline;
    2-3. rotate the right camera by R_rect R^-1;
    4. give both cameras the same intrinsics K_new.

    K_new is KL; with ``recenter`` its principal point moves to the center of
    the output image. The returned maps are output -> input for ``remap``.
    """
    parallel_for = parallel_for or serial_for
    R = rig.pose.rotation
    t = rig.pose.translation
    if abs(np.linalg.norm(t) - rig.Tc) > 1e-6:
        raise InvariantViolation(f"Tc={rig.Tc} disagrees with |t|={np.linalg.norm(t)}")
    # right camera center expressed in the left frame
    baseline = -R.T @ t
    R_rect = compute_rectifying_rotation(baseline)
    R_right = R_rect @ R.T
    K = rig.KL
    if recenter:
        K = Intrinsics(K.fx, K.fy, (out_width - 1) / 2.0, (out_height - 1) / 2.0)
    left_map = _warp_map(rig.KL, rig.dist_left, R_rect.T, K, out_width, out_height, parallel_for)
    right_map = _warp_map(rig.KR, rig.dist_right, R_right.T, K, out_width, out_height, parallel_for)
    new_rig = StereoRig.rectified_from(K, rig.Tc)
    return RectificationResult(R_rect, R_right, K, left_map, right_map, new_rig)


def rectify_points(result, K_src, R_cam, pts):
    """Forward-map undistorted pixels of one camera into the rectified image.

    ``R_cam`` is result.R_rect for the left camera, result.R_right for the right.
    """
    pts = np.asarray(pts, dtype=float)
    h = np.concatenate([pts, np.ones(pts.shape[:-1] + (1,))], axis=-1)
    M = result.K_new.matrix @ R_cam @ K_src.inverse
    q = h @ M.T
    return q[..., :2] / q[..., 2:3]


def project_to_stereo(rig, pW):
    """Project world point(s) into a rectified rig. Returns (pL, pR)."""
    if not rig.rectified:
        raise InvariantViolation("project_to_stereo requires a rectified rig")
    pW = np.asarray(pW, dtype=float)
    x, y, z = pW[..., 0], pW[..., 1], pW[..., 2]
    if np.any(z <= 0):
        raise NonPositiveDepth("world point must have z > 0")
    K = rig.KL
    half = K.fx * rig.Tc / (2.0 * z)
    u = K.fx * x / z + K.u0
    v = K.fy * y / z + K.v0
    return np.stack([u + half, v], axis=-1), np.stack([u - half, v], axis=-1)


def depth_from_disparity(rig, d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise NonPositiveDisparity("disparity must be positive")
    return rig.KL.fx * rig.Tc / d


def disparity_from_depth(rig, z):
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise NonPositiveDepth("depth must be positive")
    return rig.KL.fx * rig.Tc / z
