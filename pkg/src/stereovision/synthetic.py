"""Random-dot stereo pairs with exact ground truth."""

import numpy as np

from .errors import InvalidDisparityField

_NEAR_EPS = 1e-9


def _row_candidates(d, W):
    """Surface pieces of one left row as mapped into the right image.

    Returns (start, end, u_a, u_b): piece i spans right x in [start, end] and
    interpolates between left pixels u_a and u_b. Every pixel is a point
    piece; neighbours whose disparities differ by at most 1 also form a
    continuous piece.
    """
    u = np.arange(W)
    x = u - d
    cont = np.flatnonzero(np.abs(np.diff(d)) <= 1.0)
    start = np.concatenate([x, x[cont]])
    end = np.concatenate([x, x[cont + 1]])
    ua = np.concatenate([u, cont])
    ub = np.concatenate([u, cont + 1])
    return start, end, ua, ub


def _interp(start, end, X):
    length = end - start
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(length > 0, (X - start) / np.where(length > 0, length, 1.0), 0.0)
    return np.clip(t, 0.0, 1.0)


def generate_random_dot_pair(width, height, disparity_field, seed=0):
    """Render a right view of a random-dot left image under ``disparity_field``.

    ``disparity_field`` is (height, width), left-referenced, values in
    [0, width). Right pixel x shows the nearest surface piece covering it
    (largest disparity wins); pixels covered by nothing get fresh dots.

    Returns (left, right, gt, occluded): uint8 images, float32 ground truth
    with NaN at occluded left pixels, and the boolean occlusion mask (left
    pixels hidden in, or projecting outside, the right view).
    """
    field = np.asarray(disparity_field, dtype=float)
    if field.shape != (height, width):
        raise InvalidDisparityField(f"disparity field shape {field.shape} != {(height, width)}")
    if not np.all(np.isfinite(field)) or field.min() < 0 or field.max() >= width:
        raise InvalidDisparityField("disparities must be finite and within [0, width)")
    rng = np.random.default_rng(seed)
    left = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
    fill = rng.integers(0, 256, size=(height, width), dtype=np.uint8)
    right = np.empty_like(left)
    occluded = np.zeros((height, width), dtype=bool)
    X = np.arange(width, dtype=float)

    for v in range(height):
        d = field[v]
        row = left[v].astype(float)
        start, end, ua, ub = _row_candidates(d, width)
        # right image: candidates covering each integer x
        cover = (start[None, :] <= X[:, None] + _NEAR_EPS) & (X[:, None] - _NEAR_EPS <= end[None, :])
        t = _interp(start[None, :], end[None, :], X[:, None])
        depth = d[ua][None, :] * (1.0 - t) + d[ub][None, :] * t
        depth = np.where(cover, depth, -np.inf)
        best = np.argmax(depth, axis=1)
        hit = np.isfinite(depth[np.arange(width), best])
        tb = t[np.arange(width), best]
        val = row[ua[best]] * (1.0 - tb) + row[ub[best]] * tb
        right[v] = np.where(hit, np.clip(np.floor(val + 0.5), 0, 255), fill[v]).astype(np.uint8)
        # left occlusion: some piece covering x_u is strictly nearer
        xu = X - d
        cover_l = (start[None, :] <= xu[:, None] + _NEAR_EPS) & (xu[:, None] - _NEAR_EPS <= end[None, :])
        tl = _interp(start[None, :], end[None, :], xu[:, None])
        depth_l = d[ua][None, :] * (1.0 - tl) + d[ub][None, :] * tl
        hidden = np.any(cover_l & (depth_l > d[:, None] + _NEAR_EPS), axis=1)
        occluded[v] = hidden | (xu < 0) | (xu > width - 1)

    gt = field.astype(np.float32)
    gt[occluded] = np.nan
    return left, right, gt, occluded


def ramp_field(width, height, d_start, d_end):
    """Disparity growing linearly from ``d_start`` (u = 0) to ``d_end`` (u = width-1)."""
    row = np.linspace(d_start, d_end, width)
    return np.tile(row, (height, 1))


def step_field(width, height, d_left, d_right, step_u):
    f = np.full((height, width), float(d_left))
    f[:, step_u:] = d_right
    return f


def add_occluder(field, u0, v0, size, offset):
    """Raise a square patch of the field by ``offset`` pixels (a nearer object)."""
    out = np.array(field, dtype=float)
    out[v0:v0 + size, u0:u0 + size] += offset
    return out
