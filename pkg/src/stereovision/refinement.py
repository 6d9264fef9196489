"""Disparity post-processing: left-right check, subpixel fit, median filling."""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvariantViolation, SizeMismatch
from .matching import INVALID, INVALID_COST
from .parallel import chunks, serial_for

ROW_BLOCKS = 16


@dataclass(frozen=True)
class RefineParams:
    lr_check: bool = True
    lr_threshold: float = 1.0
    subpixel: bool = True
    median: bool = True
    median_window: int = 3

    def __post_init__(self):
        if self.lr_threshold < 0:
            raise InvariantViolation("lr_threshold must be >= 0")
        if self.median_window < 3 or self.median_window % 2 == 0:
            raise InvariantViolation("median window must be an odd integer >= 3")


def _round_half_up(x):
    return np.floor(x + 0.5)


def lr_consistency_check(D_L, D_R, tau=1.0):
    """Keep D_L(u, v) only where |D_L(u, v) - D_R(u - round(D_L(u, v)), v)| <= tau."""
    D_L = np.asarray(D_L, dtype=np.float32)
    D_R = np.asarray(D_R, dtype=np.float32)
    if D_L.shape != D_R.shape:
        raise SizeMismatch(f"disparity shapes differ: {D_L.shape} vs {D_R.shape}")
    H, W = D_L.shape
    valid = ~np.isnan(D_L)
    uu = np.arange(W)[None, :] - _round_half_up(np.where(valid, D_L, 0.0)).astype(int)
    inside = valid & (uu >= 0) & (uu < W)
    vv = np.broadcast_to(np.arange(H)[:, None], (H, W))
    other = np.full((H, W), np.nan, dtype=np.float32)
    other[inside] = D_R[vv[inside], uu[inside]]
    with np.errstate(invalid="ignore"):
        keep = inside & (np.abs(D_L - other) <= tau)
    return np.where(keep, D_L, INVALID).astype(np.float32)


def subpixel_offset(c_minus, c0, c_plus):
    """Vertex of the parabola through three equally spaced costs, clamped to
    [-0.5, 0.5]; 0 where the curvature is not positive."""
    c_minus, c0, c_plus = (np.asarray(x, dtype=float) for x in (c_minus, c0, c_plus))
    curv = c_minus - 2.0 * c0 + c_plus
    with np.errstate(divide="ignore", invalid="ignore"):
        off = (c_minus - c_plus) / (2.0 * curv)
    off = np.where(curv > 0, off, 0.0)
    return np.clip(off, -0.5, 0.5)


def subpixel_refine(vol, D):
    vol = np.asarray(vol)
    D = np.asarray(D, dtype=np.float32)
    H, W, Dn = vol.shape
    d_max = Dn - 1
    out = D.copy()
    valid = ~np.isnan(D)
    di = np.where(valid, D, 0).astype(int)
    interior = valid & (di > 0) & (di < d_max) & (D == di)
    vv, uu = np.nonzero(interior)
    d0 = di[vv, uu]
    cm = vol[vv, uu, d0 - 1].astype(float)
    c0 = vol[vv, uu, d0].astype(float)
    cp = vol[vv, uu, d0 + 1].astype(float)
    finite = (cm < INVALID_COST) & (c0 < INVALID_COST) & (cp < INVALID_COST)
    off = np.where(finite, subpixel_offset(cm, c0, np.where(finite, cp, 0.0)), 0.0)
    out[vv, uu] = (d0 + off).astype(np.float32)
    return out


def median_fill(D, window=3, parallel_for=None):
    """Median of the valid values in each window.

    Valid pixels take the windowed median. Invalid pixels are filled only
    when at least half the window is valid. For an even count the lower of
    the two middle values is used. Out-of-image positions count as invalid.
    """
    if window < 3 or window % 2 == 0:
        raise InvariantViolation("median window must be an odd integer >= 3")
    D = np.asarray(D, dtype=np.float32)
    H, W = D.shape
    r = window // 2
    padded = np.pad(D, r, constant_values=np.nan)
    out = np.empty_like(D)

    def rows(block):
        r0, r1 = block
        win = sliding_window_view(padded[r0:r1 + 2 * r], (window, window))
        vals = np.sort(win.reshape(r1 - r0, W, window * window), axis=-1)  # NaN sorts last
        n = np.sum(~np.isnan(vals), axis=-1)
        k = np.maximum(n - 1, 0) // 2
        med = np.take_along_axis(vals, k[..., None], axis=-1)[..., 0]
        centre_valid = ~np.isnan(D[r0:r1])
        fill = ~centre_valid & (2 * n >= window * window)
        out[r0:r1] = np.where(centre_valid | fill, med, INVALID)

    (parallel_for or serial_for)(rows, chunks(H, ROW_BLOCKS))
    return out


def refine_disparity(D_L, D_R, vol_L, params, parallel_for=None):
    """Apply the enabled steps in order: LR check, subpixel, median."""
    D = np.asarray(D_L, dtype=np.float32)
    if params.lr_check:
        D = lr_consistency_check(D, D_R, params.lr_threshold)
    if params.subpixel:
        D = subpixel_refine(vol_L, D)
    if params.median:
        D = median_fill(D, params.median_window, parallel_for)
    return D
