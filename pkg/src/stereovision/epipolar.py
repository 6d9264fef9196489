"""Essential, fundamental and homography matrices.

Pixel correspondences are passed as two (N, 2) arrays ``pts_left`` and
``pts_right`` with rows (u, v).
"""

import numpy as np

from .errors import (DegenerateConfiguration, DegenerateTranslation, InsufficientPoints,
                     PointAtInfinity, ZeroPlaneOffset)
from .geometry import _mat3, _vec3, skew

# ratio of the second-smallest to the largest singular value of a design
# matrix below which its null space is treated as more than one-dimensional
RANK_TOL = 1e-9


def _homogeneous(p):
    p = np.asarray(p, dtype=float)
    return np.concatenate([p, np.ones(p.shape[:-1] + (1,))], axis=-1)


def essential_from_pose(R, t):
    """E = [t]x R for the left-to-right pose p_R = R p_L + t."""
    t = _vec3(t)
    if np.linalg.norm(t) < 1e-12:
        raise DegenerateTranslation("essential matrix undefined for zero translation")
    return skew(t) @ _mat3(R)


def normalize_scale(F):
    """Scale a 3x3 matrix so its largest-magnitude entry equals +1."""
    F = np.asarray(F, dtype=float)
    k = np.argmax(np.abs(F))
    m = F.flat[k]
    if m == 0:
        return F.copy()
    return F / m


def fundamental_from_essential(E, KL, KR):
    """F = KR^-T E KL^-1, scale-normalized."""
    return normalize_scale(KR.inverse.T @ _mat3(E) @ KL.inverse)


def epipolar_residual(F, pts_left, pts_right):
    """Signed algebraic residual p~R^T F p~L, per correspondence."""
    hl = _homogeneous(pts_left)
    hr = _homogeneous(pts_right)
    return np.einsum("...i,ij,...j->...", hr, np.asarray(F, dtype=float), hl)


def epipoles(F):
    """Left and right epipoles as the null spaces of F and F^T (unit 3-vectors)."""
    _, _, Vt = np.linalg.svd(F)
    _, _, Ut = np.linalg.svd(np.asarray(F).T)
    return Vt[-1], Ut[-1]


def isotropic_normalization(pts):
    """Similarity T moving the centroid to the origin with mean distance sqrt(2)."""
    pts = np.asarray(pts, dtype=float)
    c = pts.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(pts - c, axis=1))
    if mean_dist < 1e-12:
        raise DegenerateConfiguration("all points coincide")
    s = np.sqrt(2.0) / mean_dist
    return np.array([[s, 0.0, -s * c[0]],
                     [0.0, s, -s * c[1]],
                     [0.0, 0.0, 1.0]])


def _apply(T, pts):
    return (_homogeneous(pts) @ T.T)[:, :2]


def _null_vector(A, expected_rank, what):
    # pad so that a minimal system still exposes its full spectrum
    if A.shape[0] < A.shape[1]:
        A = np.vstack([A, np.zeros((A.shape[1] - A.shape[0], A.shape[1]))])
    _, s, Vt = np.linalg.svd(A)
    if s[expected_rank - 1] <= RANK_TOL * s[0]:
        raise DegenerateConfiguration(
            f"{what} design matrix is rank deficient "
            f"(sigma[{expected_rank - 1}]/sigma[0] = {s[expected_rank - 1] / s[0]:.3g})")
    return Vt[-1]


def enforce_rank2(F):
    """Zero the smallest singular value. Returns (F_rank2, zeroed_sigma)."""
    U, s, Vt = np.linalg.svd(F)
    return U @ np.diag([s[0], s[1], 0.0]) @ Vt, s[2]


def estimate_fundamental_8pt(pts_left, pts_right):
    """Normalized eight-point estimate of F from >= 8 correspondences.

    Points are isotropically normalized, the unit-norm algebraic least-squares
    solution is taken from the SVD of the design matrix, rank 2 is enforced,
    the normalization is undone and the result is scaled so its largest
    entry is 1.
    """
    pl = np.asarray(pts_left, dtype=float)
    pr = np.asarray(pts_right, dtype=float)
    if pl.shape != pr.shape or pl.ndim != 2 or pl.shape[1] != 2:
        raise ValueError("expected two (N, 2) arrays of equal shape")
    if len(pl) < 8:
        raise InsufficientPoints(f"eight-point algorithm needs >= 8 correspondences, got {len(pl)}")
    Tl = isotropic_normalization(pl)
    Tr = isotropic_normalization(pr)
    nl = _apply(Tl, pl)
    nr = _apply(Tr, pr)
    ul, vl = nl[:, 0], nl[:, 1]
    ur, vr = nr[:, 0], nr[:, 1]
    one = np.ones(len(pl))
    A = np.column_stack([ur * ul, ur * vl, ur, vr * ul, vr * vl, vr, ul, vl, one])
    f = _null_vector(A, 8, "eight-point")
    F, _ = enforce_rank2(f.reshape(3, 3))
    return normalize_scale(Tr.T @ F @ Tl)


def homography_from_plane(R, t, n, b, KL, KR, depth_ratio=1.0):
    """Plane-induced homography for the plane n . p + b = 0 in the left frame.

    ``depth_ratio`` is z_L / z_R; 1 for a typical calibrated rig.
    """
    R = _mat3(R)
    t = _vec3(t)
    n = _vec3(n)
    if b == 0:
        raise ZeroPlaneOffset("plane passes through the left camera center (b = 0)")
    if not np.any(n):
        raise ValueError("plane normal must be nonzero")
    return depth_ratio * (KR.matrix @ (R - np.outer(t, n) / b) @ KL.inverse)


def _collinear(a, b, c, tol=1e-9):
    area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    scale = max(np.linalg.norm(b - a) * np.linalg.norm(c - a), 1e-300)
    return abs(area) <= tol * scale


def estimate_homography_4pt(pts_left, pts_right):
    """Normalized DLT homography with p~R ~ H p~L from >= 4 correspondences."""
    pl = np.asarray(pts_left, dtype=float)
    pr = np.asarray(pts_right, dtype=float)
    if pl.shape != pr.shape or pl.ndim != 2 or pl.shape[1] != 2:
        raise ValueError("expected two (N, 2) arrays of equal shape")
    n = len(pl)
    if n < 4:
        raise InsufficientPoints(f"homography needs >= 4 correspondences, got {n}")
    if n == 4:
        for pts in (pl, pr):
            for i in range(4):
                a, b, c = (pts[j] for j in range(4) if j != i)
                if _collinear(a, b, c):
                    raise DegenerateConfiguration("three of the four points are collinear")
    Tl = isotropic_normalization(pl)
    Tr = isotropic_normalization(pr)
    nl = _apply(Tl, pl)
    nr = _apply(Tr, pr)
    rows = []
    for (x, y), (xp, yp) in zip(nl, nr):
        rows.append([-x, -y, -1.0, 0.0, 0.0, 0.0, xp * x, xp * y, xp])
        rows.append([0.0, 0.0, 0.0, -x, -y, -1.0, yp * x, yp * y, yp])
    h = _null_vector(np.asarray(rows), 8, "homography")
    H = np.linalg.inv(Tr) @ h.reshape(3, 3) @ Tl
    return normalize_scale(H)


def apply_homography(H, p):
    """Map pixel(s) (..., 2) through H with perspective division."""
    q = _homogeneous(p) @ np.asarray(H, dtype=float).T
    w = q[..., 2]
    if np.any(np.abs(w) < 1e-12):
        raise PointAtInfinity("homography maps the point to infinity")
    return q[..., :2] / w[..., None]
