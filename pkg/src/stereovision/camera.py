"""Pinhole camera, lens distortion and dense remapping."""

from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation, NonPositiveDepth, SizeMismatch
from .parallel import chunks, serial_for

# work is always split into this many row blocks, whatever the worker count
ROW_BLOCKS = 16

UNDISTORT_MAX_ITER = 50
UNDISTORT_STEP_TOL = 1e-8
UNDISTORT_RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    u0: float
    v0: float

    def __post_init__(self):
        vals = [self.fx, self.fy, self.u0, self.v0]
        if not all(np.isfinite(vals)):
            raise InvariantViolation("intrinsics must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise InvariantViolation(f"focal lengths must be positive (fx={self.fx}, fy={self.fy})")

    @property
    def matrix(self):
        return np.array([[self.fx, 0.0, self.u0],
                         [0.0, self.fy, self.v0],
                         [0.0, 0.0, 1.0]])

    @property
    def inverse(self):
        return np.array([[1.0 / self.fx, 0.0, -self.u0 / self.fx],
                         [0.0, 1.0 / self.fy, -self.v0 / self.fy],
                         [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Distortion:
    """Radial (k1, k2, k3) and tangential (p1, p2) coefficients.

    The forward model maps distorted normalized coordinates to undistorted
    ones: radial correction first, then tangential.
    """

    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite([self.k1, self.k2, self.k3, self.p1, self.p2])):
            raise InvariantViolation("distortion coefficients must be finite")

    @property
    def is_zero(self):
        return self.k1 == self.k2 == self.k3 == self.p1 == self.p2 == 0.0


def project(K, pC):
    """Project camera-frame point(s) ``pC`` (..., 3) to pixels (..., 2)."""
    pC = np.asarray(pC, dtype=float)
    z = pC[..., 2]
    if np.any(z <= 0):
        raise NonPositiveDepth("point on or behind the camera plane (z <= 0)")
    u = K.fx * pC[..., 0] / z + K.u0
    v = K.fy * pC[..., 1] / z + K.v0
    return np.stack([u, v], axis=-1)


def normalize(K, p):
    """Pixel(s) (..., 2) to normalized homogeneous coordinates (..., 3) with z = 1."""
    p = np.asarray(p, dtype=float)
    x = (p[..., 0] - K.u0) / K.fx
    y = (p[..., 1] - K.v0) / K.fy
    return np.stack([x, y, np.ones_like(x)], axis=-1)


def correct_radial(d, x, y):
    r2 = x * x + y * y
    factor = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3))
    return x * factor, y * factor


def _tangential_delta(d, x, y):
    r2 = x * x + y * y
    dx = 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x)
    dy = d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y
    return dx, dy


def correct_tangential(d, x, y):
    dx, dy = _tangential_delta(d, x, y)
    return x + dx, y + dy


def correct(d, x, y):
    """Full forward correction: distorted -> undistorted normalized coordinates."""
    return correct_tangential(d, *correct_radial(d, x, y))


def invert_correction(d, xt, yt):
    """Find distorted coordinates whose corrected position is (xt, yt).

    Fixed-point iteration, frozen per element once its step falls below
    the threshold, so each element's result is independent of its
    neighbours. Returns (x, y, ok).
    """
    xt = np.asarray(xt, dtype=float)
    yt = np.asarray(yt, dtype=float)
    x = xt.copy()
    y = yt.copy()
    active = np.ones(xt.shape, dtype=bool)
    for _ in range(UNDISTORT_MAX_ITER):
        if not active.any():
            break
        xa, ya = x[active], y[active]
        # radial-corrected intermediate, used by the tangential term
        xr, yr = correct_radial(d, xa, ya)
        tx, ty = _tangential_delta(d, xr, yr)
        r2 = xa * xa + ya * ya
        factor = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3))
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = (xt[active] - tx) / factor
            yn = (yt[active] - ty) / factor
        step = np.maximum(np.abs(xn - xa), np.abs(yn - ya))
        x[active] = xn
        y[active] = yn
        done = step < UNDISTORT_STEP_TOL
        idx = np.flatnonzero(active)
        active.flat[idx[done | ~np.isfinite(step)]] = False
    xf, yf = correct(d, x, y)
    err = np.maximum(np.abs(xf - xt), np.abs(yf - yt))
    ok = np.isfinite(err) & (err < UNDISTORT_RESIDUAL_TOL) & ~active
    return x, y, ok


@dataclass(frozen=True)
class RemapField:
    """Per output pixel source location (u_src, v_src); ``valid`` False marks
    entries with no source (treated as out of bounds)."""

    u: np.ndarray
    v: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        if not (self.u.shape == self.v.shape == self.valid.shape) or self.u.ndim != 2:
            raise SizeMismatch("remap field components must share one 2D shape")

    @property
    def shape(self):
        return self.u.shape

    @classmethod
    def identity(cls, width, height):
        v, u = np.mgrid[0:height, 0:width].astype(float)
        return cls(u, v, np.ones((height, width), dtype=bool))


def build_undistort_map(K, dist, width, height, parallel_for=None):
    """Map each undistorted output pixel to its location in the distorted image."""
    if width < 1 or height < 1:
        raise ValueError("width and height must be >= 1")
    if dist.is_zero:
        return RemapField.identity(width, height)
    parallel_for = parallel_for or serial_for
    u_src = np.empty((height, width))
    v_src = np.empty((height, width))
    valid = np.empty((height, width), dtype=bool)
    us = np.arange(width, dtype=float)

    def rows(block):
        r0, r1 = block
        vv, uu = np.meshgrid(np.arange(r0, r1, dtype=float), us, indexing="ij")
        xt = (uu - K.u0) / K.fx
        yt = (vv - K.v0) / K.fy
        x, y, ok = invert_correction(dist, xt, yt)
        u_src[r0:r1] = K.fx * x + K.u0
        v_src[r0:r1] = K.fy * y + K.v0
        valid[r0:r1] = ok

    parallel_for(rows, chunks(height, ROW_BLOCKS))
    return RemapField(u_src, v_src, valid)


def remap(img, field, nearest=False, parallel_for=None):
    """Resample ``img`` at the field's source locations.

    Bilinear by default. Sources outside the image or flagged invalid give 0.
    Integer images come back rounded in their own dtype.
    """
    img = np.asarray(img)
    H, W = img.shape
    src = img.astype(float)
    out = np.zeros(field.shape)
    parallel_for = parallel_for or serial_for

    def rows(block):
        r0, r1 = block
        u = field.u[r0:r1]
        v = field.v[r0:r1]
        ok = field.valid[r0:r1] & (u >= 0) & (u <= W - 1) & (v >= 0) & (v <= H - 1)
        u = np.where(ok, u, 0.0)
        v = np.where(ok, v, 0.0)
        if nearest:
            res = src[np.floor(v + 0.5).astype(int), np.floor(u + 0.5).astype(int)]
        else:
            u0 = np.floor(u).astype(int)
            v0 = np.floor(v).astype(int)
            u1 = np.minimum(u0 + 1, W - 1)
            v1 = np.minimum(v0 + 1, H - 1)
            a = u - u0
            b = v - v0
            top = src[v0, u0] * (1.0 - a) + src[v0, u1] * a
            bot = src[v1, u0] * (1.0 - a) + src[v1, u1] * a
            res = top * (1.0 - b) + bot * b
        out[r0:r1] = np.where(ok, res, 0.0)

    parallel_for(rows, chunks(field.shape[0], ROW_BLOCKS))
    if np.issubdtype(img.dtype, np.integer):
        info = np.iinfo(img.dtype)
        return np.clip(np.floor(out + 0.5), info.min, info.max).astype(img.dtype)
    return out


def undistort_image(img, K, dist, parallel_for=None):
    H, W = np.asarray(img).shape
    return remap(img, build_undistort_map(K, dist, W, H, parallel_for), parallel_for=parallel_for)
