"""Matching costs, cost aggregation, winner-take-all and semi-global matching.

Images are 2D arrays indexed ``img[v, u]``; pixels are given as ``(u, v)``.
A cost volume is a float32 array of shape (H, W, d_max + 1) where lower is
better. Entries whose support window or disparity would read outside either
image hold ``INVALID_COST``. Disparity images are float32 with NaN marking
invalid pixels.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ImageSizeMismatch, InvariantViolation, OutOfBounds, VolumeTooLarge
from .parallel import chunks, serial_for

INVALID_COST = np.float32(np.finfo(np.float32).max)
INVALID = np.float32(np.nan)

COST_KINDS = ("ad", "sd", "sad", "ssd", "ncc", "fbs")
NCC_FLAT_EPS = 1e-12
# NCC volumes hold scale * (1 - similarity); 127.5 spreads [0, 2] over the
# 8-bit range so one set of SGM penalties serves every cost kind
NCC_COST_SCALE = 127.5
DEFAULT_MAX_VOLUME_BYTES = 2 << 30
# disparities are split into this many chunks, independent of worker count
DISPARITY_BLOCKS = 16

PATHS_4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
PATHS_8 = PATHS_4 + ((1, 1), (-1, -1), (-1, 1), (1, -1))


@dataclass(frozen=True)
class MatchParams:
    d_max: int = 64
    block_radius: int = 2
    cost_kind: str = "sad"
    fbs_sigma_s: float = 3.0
    fbs_sigma_r: float = 10.0
    ncc_cost_scale: float = NCC_COST_SCALE
    max_volume_bytes: int = DEFAULT_MAX_VOLUME_BYTES

    def __post_init__(self):
        object.__setattr__(self, "cost_kind", self.cost_kind.lower())
        if self.cost_kind not in COST_KINDS:
            raise InvariantViolation(f"unknown cost kind {self.cost_kind!r}")
        if self.d_max < 1:
            raise InvariantViolation("d_max must be >= 1")
        if self.block_radius < 0:
            raise InvariantViolation("block_radius must be >= 0")
        if not self.ncc_cost_scale > 0:
            raise InvariantViolation("ncc_cost_scale must be positive")
        if self.cost_kind == "fbs" and not (self.fbs_sigma_s > 0 and self.fbs_sigma_r > 0):
            raise InvariantViolation("bilateral sigmas must be positive")

    @property
    def radius(self):
        """Effective window radius; pixel-wise kinds use no window."""
        return 0 if self.cost_kind in ("ad", "sd") else self.block_radius


@dataclass(frozen=True)
class SgmParams:
    lambda1: float = 8.0
    lambda2: float = 32.0
    paths: int = 8

    def __post_init__(self):
        if not 0 <= self.lambda1 <= self.lambda2:
            raise InvariantViolation("SGM penalties must satisfy 0 <= lambda1 <= lambda2")
        if self.paths not in (4, 8):
            raise InvariantViolation("SGM supports 4 or 8 paths")


# -- point operations ------------------------------------------------------
# Direct per-pixel definitions. The vectorized volume builder is tested
# against these.

def _check_window(img, u, v, r):
    H, W = img.shape
    if u - r < 0 or u + r >= W or v - r < 0 or v + r >= H:
        raise OutOfBounds(f"window of radius {r} at ({u}, {v}) leaves the {W}x{H} image")


def cost_pixel(left, right, p, d, kind="ad"):
    u, v = p
    H, W = left.shape
    if not (0 <= u < W and 0 <= v < H) or u - d < 0 or u - d >= W:
        raise OutOfBounds(f"pixel ({u}, {v}) at disparity {d} is out of bounds")
    diff = float(left[v, u]) - float(right[v, u - d])
    if kind == "ad":
        return abs(diff)
    if kind == "sd":
        return diff * diff
    raise ValueError(f"pixel-wise cost kind must be 'ad' or 'sd', got {kind!r}")


def aggregate_box(left, right, p, d, radius, kind="sad"):
    """SAD or SSD over the (2r+1)^2 window centred at p."""
    u, v = p
    _check_window(left, u, v, radius)
    _check_window(right, u - d, v, radius)
    pix = {"sad": "ad", "ssd": "sd"}[kind]
    total = 0.0
    for dv in range(-radius, radius + 1):
        for du in range(-radius, radius + 1):
            total += cost_pixel(left, right, (u + du, v + dv), d, pix)
    return total


def similarity_ncc(left, right, p, d, radius):
    u, v = p
    _check_window(left, u, v, radius)
    _check_window(right, u - d, v, radius)
    bl = np.asarray(left[v - radius:v + radius + 1, u - radius:u + radius + 1], dtype=float)
    br = np.asarray(right[v - radius:v + radius + 1, u - d - radius:u - d + radius + 1], dtype=float)
    n = bl.size
    sl = np.sqrt(np.sum((bl - bl.mean()) ** 2) / n)
    sr = np.sqrt(np.sum((br - br.mean()) ** 2) / n)
    if sl * sr < NCC_FLAT_EPS:
        return 0.0
    return float(np.sum((bl - bl.mean()) * (br - br.mean())) / (n * sl * sr))


def aggregate_bilateral(costs, intensities, p, radius, sigma_s, sigma_r):
    """Bilateral weighted mean of ``costs`` (one disparity slice) around p."""
    u, v = p
    _check_window(costs, u, v, radius)
    centre = float(intensities[v, u])
    num = 0.0
    den = 0.0
    for dv in range(-radius, radius + 1):
        for du in range(-radius, radius + 1):
            wd = np.exp(-(du * du + dv * dv) / (2.0 * sigma_s ** 2))
            wr = np.exp(-(float(intensities[v + dv, u + du]) - centre) ** 2 / (2.0 * sigma_r ** 2))
            num += wd * wr * float(costs[v + dv, u + du])
            den += wd * wr
    return num / den


# -- cost volume -----------------------------------------------------------

def _box_valid(a, r):
    """Sum over every full (2r+1)^2 window; output shape (H-2r, W-2r).

    Each output is the same fixed sequence of additions, so results do not
    depend on how the image was partitioned.
    """
    k = 2 * r + 1
    H, W = a.shape
    h, w = H - k + 1, W - k + 1
    if h <= 0 or w <= 0:
        return np.zeros((max(h, 0), max(w, 0)))
    s = a[0:h].copy()
    for i in range(1, k):
        s += a[i:i + h]
    t = s[:, 0:w].copy()
    for j in range(1, k):
        t += s[:, j:j + w]
    return t


def _bilateral_weights(ref, r, sigma_s, sigma_r):
    """Per-offset weights at every window centre: shape ((2r+1)^2, H-2r, W-2r)."""
    H, W = ref.shape
    h, w = H - 2 * r, W - 2 * r
    centre = ref[r:r + h, r:r + w]
    out = np.empty(((2 * r + 1) ** 2, h, w))
    i = 0
    for dv in range(-r, r + 1):
        for du in range(-r, r + 1):
            nb = ref[r + dv:r + dv + h, r + du:r + du + w]
            wd = np.exp(-(du * du + dv * dv) / (2.0 * sigma_s ** 2))
            out[i] = wd * np.exp(-(nb - centre) ** 2 / (2.0 * sigma_r ** 2))
            i += 1
    return out


def _cost_slice(left, right, d, params, weights):
    """Aggregated costs for disparity d, (H, W), INVALID_COST where undefined."""
    H, W = left.shape
    r = params.radius
    out = np.full((H, W), INVALID_COST, dtype=np.float32)
    if d + 2 * r >= W or 2 * r >= H:
        return out
    L = left[:, d:]
    R = right[:, :W - d]
    kind = params.cost_kind
    if kind in ("ad", "sad"):
        c = np.abs(L - R)
    elif kind in ("sd", "ssd"):
        c = (L - R) ** 2
    if kind in ("ad", "sd"):
        out[:, d:] = c
    elif kind in ("sad", "ssd"):
        out[r:H - r, d + r:W - r] = _box_valid(c, r)
    elif kind == "ncc":
        n = (2 * r + 1) ** 2
        sl = _box_valid(L, r)
        sr = _box_valid(R, r)
        sll = _box_valid(L * L, r)
        srr = _box_valid(R * R, r)
        slr = _box_valid(L * R, r)
        num = n * slr - sl * sr
        var = np.maximum(n * sll - sl * sl, 0.0) * np.maximum(n * srr - sr * sr, 0.0)
        # sigma_L * sigma_R = sqrt(var) / n^2
        flat = np.sqrt(var) < NCC_FLAT_EPS * n * n
        with np.errstate(divide="ignore", invalid="ignore"):
            ncc = np.where(flat, 0.0, num / np.sqrt(np.where(flat, 1.0, var)))
        out[r:H - r, d + r:W - r] = params.ncc_cost_scale * (1.0 - np.clip(ncc, -1.0, 1.0))
    elif kind == "fbs":
        c = np.zeros((H, W))
        c[:, d:] = np.abs(L - R)
        h, w = H - 2 * r, W - 2 * r
        num = np.zeros((h, w))
        den = np.zeros((h, w))
        i = 0
        for dv in range(-r, r + 1):
            for du in range(-r, r + 1):
                num += weights[i] * c[r + dv:r + dv + h, r + du:r + du + w]
                den += weights[i]
                i += 1
        agg = num / den
        out[r:H - r, d + r:W - r] = agg[:, d:]
    return out


def build_cost_volume(left, right, params, parallel_for=None):
    """Left-referenced cost volume: cost(v, u, d) compares left(u, v) with right(u - d, v)."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    if left.shape != right.shape or left.ndim != 2:
        raise ImageSizeMismatch(f"image shapes differ: {left.shape} vs {right.shape}")
    H, W = left.shape
    D = params.d_max + 1
    if W <= params.d_max + 2 * params.radius:
        raise InvariantViolation(f"width {W} must exceed d_max + 2*radius = {params.d_max + 2 * params.radius}")
    nbytes = H * W * D * 4
    if nbytes > params.max_volume_bytes:
        raise VolumeTooLarge(f"cost volume needs {nbytes} bytes, cap is {params.max_volume_bytes}")
    weights = None
    if params.cost_kind == "fbs":
        weights = _bilateral_weights(left, params.radius, params.fbs_sigma_s, params.fbs_sigma_r)
    vol = np.empty((H, W, D), dtype=np.float32)

    def work(block):
        for d in range(*block):
            vol[:, :, d] = _cost_slice(left, right, d, params, weights)

    (parallel_for or serial_for)(work, chunks(D, DISPARITY_BLOCKS))
    return vol


def build_cost_volume_right(left, right, params, parallel_for=None):
    """Right-referenced volume: cost(v, u, d) compares right(u, v) with left(u + d, v)."""
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    vol = build_cost_volume(right[:, ::-1], left[:, ::-1], params, parallel_for)
    return np.ascontiguousarray(vol[:, ::-1, :])


# -- disparity optimization ------------------------------------------------

def wta(vol):
    """Per-pixel argmin over d, ties to the smallest d; all-invalid pixels -> NaN."""
    vol = np.asarray(vol)
    d = np.argmin(vol, axis=2).astype(np.float32)
    d[np.all(vol >= INVALID_COST, axis=2)] = INVALID
    return d


def _path_step(prev, p1, p2):
    """Penalty term of the SGM recursion, already reduced by min_k prev(k)."""
    m = prev.min(axis=-1, keepdims=True)
    best = np.minimum(prev, m + p2)
    best[..., 1:] = np.minimum(best[..., 1:], prev[..., :-1] + p1)
    best[..., :-1] = np.minimum(best[..., :-1], prev[..., 1:] + p1)
    return best - m


def path_cost(costs, direction, lambda1, lambda2, out_dtype=np.float32):
    """Directional SGM path cost L_r for ``direction`` = (du, dv).

    L_r(p, d) = c(p, d) + min(L_r(p-r, d), L_r(p-r, d+-1) + lambda1,
                              min_k L_r(p-r, k) + lambda2) - min_k L_r(p-r, k)

    The recursion runs in float64; only the stored result uses ``out_dtype``.
    """
    c = np.asarray(costs, dtype=np.float64)
    H, W, _ = c.shape
    du, dv = direction
    L = np.empty(c.shape, dtype=out_dtype)
    if dv == 0:
        cols = range(W) if du > 0 else range(W - 1, -1, -1)
        prev = None
        for u in cols:
            cur = c[:, u] if prev is None else c[:, u] + _path_step(prev, lambda1, lambda2)
            L[:, u] = cur
            prev = cur
        return L
    rows = range(H) if dv > 0 else range(H - 1, -1, -1)
    prev = None
    for v in rows:
        if prev is None:
            cur = c[v].copy()
        elif du == 0:
            cur = c[v] + _path_step(prev, lambda1, lambda2)
        else:
            cur = c[v].copy()
            # predecessor of (u, v) is (u - du, v - dv)
            if du > 0:
                cur[1:] += _path_step(prev[:-1], lambda1, lambda2)
            else:
                cur[:-1] += _path_step(prev[1:], lambda1, lambda2)
        L[v] = cur
        prev = cur
    return L


def sgm_aggregate(vol, params, parallel_for=None):
    """Sum of directional path costs; entries invalid in ``vol`` stay invalid.

    Invalid costs are replaced by a finite ceiling (largest valid cost plus
    lambda2) while aggregating so that no sum overflows.
    """
    vol = np.asarray(vol, dtype=np.float32)
    invalid = vol >= INVALID_COST
    if invalid.all():
        return vol.copy()
    ceiling = float(vol[~invalid].max()) + params.lambda2
    c = np.where(invalid, ceiling, vol.astype(np.float64))
    dirs = PATHS_8 if params.paths == 8 else PATHS_4
    parts = (parallel_for or serial_for)(
        lambda r: path_cost(c, r, params.lambda1, params.lambda2), dirs)
    total = np.zeros(vol.shape, dtype=np.float64)
    for part in parts:
        total += part
    out = total.astype(np.float32)
    out[invalid] = INVALID_COST
    return out


def match_stereo(left, right, params, sgm=None, parallel_for=None, return_costs=False):
    """Left and right disparity images of a rectified pair.

    With ``return_costs`` the (possibly SGM-aggregated) left and right
    volumes are returned as well: (D_L, D_R, vol_L, vol_R).
    """
    vol_l = build_cost_volume(left, right, params, parallel_for)
    vol_r = build_cost_volume_right(left, right, params, parallel_for)
    if sgm is not None:
        vol_l = sgm_aggregate(vol_l, sgm, parallel_for)
        vol_r = sgm_aggregate(vol_r, sgm, parallel_for)
    D_L = wta(vol_l)
    D_R = wta(vol_r)
    if return_costs:
        return D_L, D_R, vol_l, vol_r
    return D_L, D_R
