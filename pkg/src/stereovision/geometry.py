"""Small 3D algebra: skew-symmetric matrices, rotations and rigid transforms."""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolation

ROTATION_TOL = 1e-9


def _vec3(a):
    a = np.asarray(a, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("vector has non-finite components")
    return a


def _mat3(m):
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def skew(a):
    """Return the 3x3 matrix [a]x such that [a]x @ b == cross(a, b)."""
    a1, a2, a3 = _vec3(a)
    return np.array([[0.0, -a3, a2],
                     [a3, 0.0, -a1],
                     [-a2, a1, 0.0]])


def cross_via_skew(a, b):
    return skew(a) @ _vec3(b)


def is_rotation(R, tol=ROTATION_TOL):
    """True iff R is orthogonal with |det R| = 1, both within ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    ortho = np.max(np.abs(R.T @ R - np.eye(3)))
    return bool(ortho <= tol and abs(abs(np.linalg.det(R)) - 1.0) <= tol)


def rotation_about_axis(axis, angle):
    """Rodrigues rotation about ``axis`` by ``angle`` radians."""
    k = _vec3(axis)
    k = k / np.linalg.norm(k)
    K = skew(k)
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


@dataclass(frozen=True)
class Pose:
    """Rigid transform x2 = R x1 + t (an element of SE(3))."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = _mat3(self.rotation).copy()
        t = _vec3(self.translation).copy()
        if not is_rotation(R, ROTATION_TOL):
            ortho = np.max(np.abs(R.T @ R - np.eye(3)))
            det = np.linalg.det(R)
            raise InvariantViolation(
                f"rotation check failed: orthogonality residual {ortho:.3g}, det {det:.12g} "
                f"(tolerance {ROTATION_TOL:g})")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @property
    def matrix(self):
        """4x4 homogeneous form."""
        P = np.eye(4)
        P[:3, :3] = self.rotation
        P[:3, 3] = self.translation
        return P

    def __matmul__(self, other):
        return compose(self, other)

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return bool(np.array_equal(self.rotation, other.rotation)
                    and np.array_equal(self.translation, other.translation))

    __hash__ = None


def transform_point(pose, x):
    """Apply ``pose`` to a point or an (N, 3) array of points."""
    x = np.asarray(x, dtype=float)
    return x @ pose.rotation.T + pose.translation


def pose_inverse(pose):
    Rt = pose.rotation.T
    return Pose(Rt, -Rt @ pose.translation)


def compose(a, b):
    """Pose equivalent to applying ``b`` first, then ``a``."""
    return Pose(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)
