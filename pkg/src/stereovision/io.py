"""File formats: PGM/PNG images, 16-bit disparity files, calibration text,
correspondence lists and evaluation reports."""

import re
from pathlib import Path

import numpy as np

from .camera import Distortion, Intrinsics
from .errors import DisparityOverflow, InvariantViolation, ParseError
from .geometry import Pose
from .rectification import StereoRig

DISPARITY_SCALE = 256
DISTORTION_ORDER = "radial,tangential"


# -- images ----------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _pgm_tokens(data):
    """Yield (token, end_offset) for the PGM header, skipping # comments."""
    pos = 0
    count = 0
    while count < 4:
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise ParseError("truncated PGM header")
        pos = m.end()
        count += 1
        yield m.group(1), pos


def read_pgm(path):
    data = Path(path).read_bytes()
    tokens = list(_pgm_tokens(data))
    magic = tokens[0][0]
    if magic != b"P5":
        raise ParseError(f"{path}: not a binary PGM (magic {magic!r})")
    try:
        width, height, maxval = (int(t[0]) for t in tokens[1:])
    except ValueError as exc:
        raise ParseError(f"{path}: bad PGM header ({exc})") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ParseError(f"{path}: bad PGM dimensions or maxval")
    start = tokens[-1][1] + 1  # single whitespace after maxval
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    n = width * height * dtype.itemsize
    raw = data[start:start + n]
    if len(raw) != n:
        raise ParseError(f"{path}: PGM pixel data truncated")
    img = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    return img.astype(np.uint8 if maxval < 256 else np.uint16)


def write_pgm(path, img):
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("PGM images must be 2D")
    if img.dtype == np.uint8:
        maxval, raw = 255, img.tobytes()
    elif img.dtype == np.uint16:
        maxval, raw = 65535, img.astype(">u2").tobytes()
    else:
        raise ValueError(f"PGM writer takes uint8 or uint16, got {img.dtype}")
    H, W = img.shape
    Path(path).write_bytes(f"P5\n{W} {H}\n{maxval}\n".encode() + raw)


def read_image(path):
    """Read a grayscale PGM or PNG image."""
    if str(path).lower().endswith(".png"):
        from PIL import Image

        with Image.open(path) as im:
            if im.mode in ("I;16", "I;16B", "I"):
                return np.asarray(im, dtype=np.uint16)
            return np.asarray(im.convert("L"), dtype=np.uint8)
    return read_pgm(path)


def write_image(path, img):
    img = np.asarray(img)
    if str(path).lower().endswith(".png"):
        from PIL import Image

        if img.dtype == np.uint16:
            Image.fromarray(img.astype(np.uint16)).save(path)
        else:
            Image.fromarray(img.astype(np.uint8)).save(path)
    else:
        write_pgm(path, img)


def to_uint8(img):
    return np.clip(np.floor(np.asarray(img, dtype=float) + 0.5), 0, 255).astype(np.uint8)


# -- disparity files ------------------------------------------------------

def encode_disparity(D):
    """Fixed-point 16-bit encoding: round(d * 256), 0 marks invalid."""
    D = np.asarray(D, dtype=float)
    valid = ~np.isnan(D)
    if np.any(D[valid] < 0):
        raise DisparityOverflow("negative disparities cannot be encoded")
    if np.any(D[valid] >= 256):
        raise DisparityOverflow(f"disparity {D[valid].max()} >= 256 cannot be encoded")
    out = np.zeros(D.shape, dtype=np.uint16)
    out[valid] = np.floor(D[valid] * DISPARITY_SCALE + 0.5).astype(np.uint16)
    return out


def decode_disparity(stored):
    stored = np.asarray(stored)
    D = stored.astype(np.float32) / DISPARITY_SCALE
    D[stored == 0] = np.nan
    return D


def write_disparity(path, D):
    write_image(path, encode_disparity(D))


def read_disparity(path):
    stored = read_image(path)
    if stored.dtype != np.uint16:
        raise ParseError(f"{path}: disparity files must be 16-bit")
    return decode_disparity(stored)


def write_mask(path, mask):
    write_image(path, np.where(np.asarray(mask), 255, 0).astype(np.uint8))


# -- calibration ----------------------------------------------------------

_CAMERA_KEYS = ("fx", "fy", "u0", "v0", "k1", "k2", "k3", "p1", "p2")
_RIG_KEYS = ("R", "t", "Tc", "rectified", "distortion_order")


def format_calibration(rig):
    lines = ["# stereo calibration; distortion correction order: radial then tangential",
             f"distortion_order = {DISTORTION_ORDER}"]
    for side, K, d in (("left", rig.KL, rig.dist_left), ("right", rig.KR, rig.dist_right)):
        for key, value in zip(_CAMERA_KEYS, (K.fx, K.fy, K.u0, K.v0, d.k1, d.k2, d.k3, d.p1, d.p2)):
            lines.append(f"{side}.{key} = {float(value)!r}")
    lines.append("R = " + " ".join(repr(float(x)) for x in rig.pose.rotation.ravel()))
    lines.append("t = " + " ".join(repr(float(x)) for x in rig.pose.translation))
    lines.append(f"Tc = {float(rig.Tc)!r}")
    lines.append(f"rectified = {'true' if rig.rectified else 'false'}")
    return "\n".join(lines) + "\n"


def write_calibration(path, rig):
    Path(path).write_text(format_calibration(rig))


def _floats(text, n, key, line):
    parts = text.split()
    if len(parts) != n:
        raise ParseError(f"{key} expects {n} numbers, got {len(parts)}", line)
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ParseError(f"{key}: non-numeric value {text!r}", line) from None


def parse_calibration(path):
    return parse_calibration_text(Path(path).read_text())


def parse_calibration_text(text):
    """Parse calibration text into a StereoRig.

    Intrinsics fx, fy, u0, v0 are required for both cameras; distortion terms
    default to 0, Tc defaults to |t|. Unknown keys are rejected.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        side, _, name = key.partition(".")
        known = key in _RIG_KEYS or (side in ("left", "right") and name in _CAMERA_KEYS)
        if not known:
            raise ParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno)
        values[key] = (value, lineno)

    def number(key, default=None):
        if key not in values:
            if default is None:
                raise ParseError(f"missing required key {key!r}")
            return default
        return _floats(values[key][0], 1, key, values[key][1])[0]

    if "distortion_order" in values and values["distortion_order"][0] != DISTORTION_ORDER:
        raise ParseError(f"unsupported distortion_order {values['distortion_order'][0]!r}; "
                         f"only {DISTORTION_ORDER!r}", values["distortion_order"][1])
    cams = {}
    for side in ("left", "right"):
        K = Intrinsics(*(number(f"{side}.{k}") for k in ("fx", "fy", "u0", "v0")))
        d = Distortion(*(number(f"{side}.{k}", 0.0) for k in ("k1", "k2", "k3", "p1", "p2")))
        cams[side] = (K, d)
    if "R" in values:
        R = np.array(_floats(values["R"][0], 9, "R", values["R"][1])).reshape(3, 3)
    else:
        R = np.eye(3)
    if "t" not in values:
        raise ParseError("missing required key 't'")
    t = np.array(_floats(values["t"][0], 3, "t", values["t"][1]))
    Tc = number("Tc", float(np.linalg.norm(t)))
    rectified = False
    if "rectified" in values:
        flag, lineno = values["rectified"]
        if flag.lower() not in ("true", "false"):
            raise ParseError(f"rectified must be true or false, got {flag!r}", lineno)
        rectified = flag.lower() == "true"
    try:
        pose = Pose(R, t)
    except InvariantViolation as exc:
        line = values["R"][1] if "R" in values else None
        raise InvariantViolation(f"R (line {line}): {exc}") from None
    return StereoRig(cams["left"][0], cams["right"][0], pose, Tc, rectified,
                     cams["left"][1], cams["right"][1])


# -- correspondences ------------------------------------------------------

def read_correspondences(path):
    """Read ``uL vL uR vR`` lines; returns (pts_left, pts_right) as (N, 2) arrays."""
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(_floats(line, 4, "correspondence", lineno))
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    return arr[:, :2], arr[:, 2:]


def write_correspondences(path, pts_left, pts_right):
    arr = np.hstack([np.asarray(pts_left, dtype=float), np.asarray(pts_right, dtype=float)])
    lines = ["# uL vL uR vR"] + [" ".join(repr(float(x)) for x in row) for row in arr]
    Path(path).write_text("\n".join(lines) + "\n")


# -- reports --------------------------------------------------------------

def parse_report(text):
    """Inverse of EvalReport.to_text for numeric fields."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            out[key] = int(value) if re.fullmatch(r"-?\d+", value) else float(value)
        except ValueError:
            out[key] = value
    return out
