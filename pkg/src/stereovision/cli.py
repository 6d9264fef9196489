"""Batch command line: synth, undistort, rectify, match, refine, evaluate, bench.

Exit codes: 0 ok, 2 usage, 3 parse, 4 invariant, 5 runtime. Failures print a
single ``ErrorClass: message`` line on stderr.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .camera import undistort_image
from .camera import remap
from .errors import StereoError, UsageError
from .evaluation import evaluate, mde_per_s
from .matching import (MatchParams, SgmParams, build_cost_volume, build_cost_volume_right,
                       sgm_aggregate, wta)
from .parallel import fork_join, resolve_workers
from .rectification import rectify_rig
from .refinement import RefineParams, lr_consistency_check, median_fill, refine_disparity
from .synthetic import add_occluder, generate_random_dot_pair, ramp_field, step_field

DEFAULTS = {
    "cost": "ncc", "radius": 2, "dmax": 64, "sgm": False, "l1": 8.0, "l2": 32.0, "paths": 8,
    "lr_check": False, "tau": 1.0, "subpixel": False, "median": False, "window": 3,
    "workers": 1, "seed": 0, "camera": "left", "delta": 1.0, "all_pixels": False,
    "width": 256, "height": 256, "scene": "ramp-occluder", "d0": 2.0, "d1": 10.0,
    "recenter": False, "sigma_s": 3.0, "sigma_r": 10.0, "repeat": 1,
}
# per-command overrides of DEFAULTS
COMMAND_DEFAULTS = {"bench": {"width": 512, "height": 512}}

_TYPES = {
    "radius": int, "dmax": int, "paths": int, "window": int, "workers": int, "seed": int,
    "width": int, "height": int, "repeat": int,
    "l1": float, "l2": float, "tau": float, "delta": float, "d0": float, "d1": float,
    "sigma_s": float, "sigma_r": float, "wall_time": float,
}
_BOOLS = {"sgm", "lr_check", "subpixel", "median", "all_pixels", "recenter"}


def read_config(path):
    """``key = value`` lines; keys are flag names without the leading dashes."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise io.ParseError(f"{path}: expected 'key = value'", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        try:
            if key in _BOOLS:
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(value)
                cfg[key] = value.lower() in ("true", "1", "yes")
            else:
                cfg[key] = _TYPES.get(key, str)(value)
        except ValueError:
            raise io.ParseError(f"{path}: bad value for {key!r}: {value!r}", lineno) from None
    return cfg


def _match_params(o):
    return MatchParams(d_max=o.dmax, block_radius=o.radius, cost_kind=o.cost,
                       fbs_sigma_s=o.sigma_s, fbs_sigma_r=o.sigma_r)


def _sgm_params(o):
    return SgmParams(o.l1, o.l2, o.paths) if o.sgm else None


def _refine_params(o):
    return RefineParams(lr_check=o.lr_check, lr_threshold=o.tau, subpixel=o.subpixel,
                        median=o.median, median_window=o.window)


def _require(o, *names):
    missing = [n for n in names if getattr(o, n, None) is None]
    if missing:
        raise UsageError(f"{o.command} needs " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _gray(path):
    img = io.read_image(path)
    if img.ndim != 2:
        raise UsageError(f"{path}: expected a grayscale image")
    return img


def run_stereo(left, right, mp, sgm, refine, parallel_for):
    """Cost volumes, optional SGM, WTA and refinement. Returns (D_L, D_R, timings)."""
    t0 = time.perf_counter()
    vol_l = build_cost_volume(left, right, mp, parallel_for)
    need_right = refine.lr_check
    vol_r = build_cost_volume_right(left, right, mp, parallel_for) if need_right else None
    t1 = time.perf_counter()
    if sgm is not None:
        vol_l = sgm_aggregate(vol_l, sgm, parallel_for)
        if need_right:
            vol_r = sgm_aggregate(vol_r, sgm, parallel_for)
    t2 = time.perf_counter()
    D_L = wta(vol_l)
    D_R = wta(vol_r) if need_right else None
    D = refine_disparity(D_L, D_R, vol_l, refine, parallel_for)
    t3 = time.perf_counter()
    timings = {"cost_volume_s": t1 - t0, "sgm_s": t2 - t1, "wta_refine_s": t3 - t2, "wall_time_s": t3 - t0}
    return D, D_R, timings


# -- commands -------------------------------------------------------------

def cmd_synth(o, pfor):
    _require(o, "out")
    W, H = o.width, o.height
    if o.scene == "constant":
        field = np.full((H, W), o.d0)
    elif o.scene == "ramp":
        field = ramp_field(W, H, o.d0, o.d1)
    elif o.scene == "step":
        field = step_field(W, H, o.d0, o.d1, W // 2)
    else:
        field = add_occluder(ramp_field(W, H, o.d0, o.d1), (3 * W) // 8, (3 * H) // 8, W // 4, 8.0)
    left, right, gt, occ = generate_random_dot_pair(W, H, field, o.seed)
    out = Path(o.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_image(out / "left.pgm", left)
    io.write_image(out / "right.pgm", right)
    io.write_disparity(out / "gt.pgm", gt)
    io.write_mask(out / "occlusion.pgm", occ)
    print(f"wrote {out}/left.pgm right.pgm gt.pgm occlusion.pgm")


def cmd_undistort(o, pfor):
    _require(o, "left", "calib", "out")
    rig = io.parse_calibration(o.calib)
    K, d = (rig.KL, rig.dist_left) if o.camera == "left" else (rig.KR, rig.dist_right)
    io.write_image(o.out, undistort_image(_gray(o.left), K, d, pfor))


def cmd_rectify(o, pfor):
    _require(o, "left", "right", "calib", "out")
    rig = io.parse_calibration(o.calib)
    left, right = _gray(o.left), _gray(o.right)
    H, W = left.shape
    res = rectify_rig(rig, W, H, recenter=o.recenter, parallel_for=pfor)
    out = Path(o.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_image(out / "left_rect.pgm", remap(left, res.left_map, parallel_for=pfor))
    io.write_image(out / "right_rect.pgm", remap(right, res.right_map, parallel_for=pfor))
    io.write_calibration(out / "rectified.calib", res.rig)
    print(f"wrote {out}/left_rect.pgm right_rect.pgm rectified.calib")


def cmd_match(o, pfor):
    _require(o, "left", "right", "out")
    left, right = _gray(o.left), _gray(o.right)
    D, D_R, timings = run_stereo(left, right, _match_params(o), _sgm_params(o), _refine_params(o), pfor)
    io.write_disparity(o.out, D)
    if o.out_right is not None and D_R is not None:
        io.write_disparity(o.out_right, D_R)
    H, W = left.shape
    timings["mde_per_s"] = mde_per_s(W, H, o.dmax, timings["wall_time_s"])
    for k, v in timings.items():
        print(f"{k} = {v!r}")


def cmd_refine(o, pfor):
    _require(o, "disp", "out")
    if o.subpixel:
        raise UsageError("subpixel refinement needs the cost volume; use `match --subpixel`")
    D = io.read_disparity(o.disp)
    if o.lr_check:
        _require(o, "disp_right")
        D = lr_consistency_check(D, io.read_disparity(o.disp_right), o.tau)
    if o.median:
        D = median_fill(D, o.window, pfor)
    io.write_disparity(o.out, D)


def cmd_evaluate(o, pfor):
    _require(o, "disp", "gt")
    D = io.read_disparity(o.disp)
    G = io.read_disparity(o.gt)
    report = evaluate(D, G, o.delta, wall_time_s=o.wall_time, d_max=o.dmax,
                      count_invalid_estimate=o.all_pixels)
    text = report.to_text()
    if o.out is not None:
        Path(o.out).write_text(text + report.to_record() + "\n")
    sys.stdout.write(text)
    print(report.to_record())


def cmd_bench(o, pfor):
    if o.left is not None and o.right is not None:
        left, right = _gray(o.left), _gray(o.right)
    else:
        W, H = o.width, o.height
        field = ramp_field(W, H, 2.0, min(o.dmax - 1, 40.0))
        left, right, _, _ = generate_random_dot_pair(W, H, field, o.seed)
    H, W = left.shape
    mp, sgm, refine = _match_params(o), _sgm_params(o), _refine_params(o)
    counts = o.worker_counts or list(range(1, resolve_workers(o.workers) + 1))
    rows = []
    for k in counts:
        best = None
        for _ in range(max(1, o.repeat)):
            with fork_join(k) as pf:
                D, _, timings = run_stereo(left, right, mp, sgm, refine, pf)
            if best is None or timings["wall_time_s"] < best[1]["wall_time_s"]:
                best = (D, timings)
        D, timings = best
        digest = hashlib.sha256(io.encode_disparity(D).tobytes()).hexdigest()
        rows.append({"workers": k, **timings,
                     "mde_per_s": mde_per_s(W, H, o.dmax, timings["wall_time_s"]),
                     "cost_volume_mde_per_s": mde_per_s(W, H, o.dmax, timings["cost_volume_s"]),
                     "sha256": digest})
        if o.out is not None and k == counts[0]:
            io.write_disparity(o.out, D)
    base = rows[0]["cost_volume_s"]
    for r in rows:
        r["cost_volume_speedup"] = base / r["cost_volume_s"]
    identical = len({r["sha256"] for r in rows}) == 1
    summary = {"width": W, "height": H, "d_max": o.dmax, "disparity_levels": o.dmax + 1,
               "cores": os.cpu_count(), "identical_outputs": identical, "runs": rows}
    for r in rows:
        print(" ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()))
    print(f"identical_outputs = {identical}")
    if o.report is not None:
        Path(o.report).write_text(json.dumps(summary, indent=2) + "\n")
    if not identical:
        raise StereoError("outputs differ across worker counts")


COMMANDS = {
    "synth": cmd_synth, "undistort": cmd_undistort, "rectify": cmd_rectify, "match": cmd_match,
    "refine": cmd_refine, "evaluate": cmd_evaluate, "bench": cmd_bench,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="stereovision", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="key = value file; explicit flags win")
        p.add_argument("--workers", type=int, help="worker threads, 0 = one per CPU (default 1)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")

    def matching(p):
        p.add_argument("--left")
        p.add_argument("--right")
        p.add_argument("--cost", choices=["ad", "sd", "sad", "ssd", "ncc", "fbs"])
        p.add_argument("--radius", type=int)
        p.add_argument("--dmax", type=int)
        p.add_argument("--sigma-s", type=float)
        p.add_argument("--sigma-r", type=float)
        p.add_argument("--sgm", action="store_true", default=None)
        p.add_argument("--l1", type=float)
        p.add_argument("--l2", type=float)
        p.add_argument("--paths", type=int, choices=[4, 8])
        p.add_argument("--lr-check", action="store_true", default=None)
        p.add_argument("--tau", type=float)
        p.add_argument("--subpixel", action="store_true", default=None)
        p.add_argument("--median", action="store_true", default=None)
        p.add_argument("--window", type=int)

    p = sub.add_parser("synth", help="write a random-dot stereo pair with ground truth")
    common(p)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--scene", choices=["constant", "ramp", "step", "ramp-occluder"])
    p.add_argument("--d0", type=float)
    p.add_argument("--d1", type=float)

    p = sub.add_parser("undistort", help="remove lens distortion from one image")
    common(p)
    p.add_argument("--left", help="input image")
    p.add_argument("--calib")
    p.add_argument("--camera", choices=["left", "right"])

    p = sub.add_parser("rectify", help="rectify a stereo pair")
    common(p)
    p.add_argument("--left")
    p.add_argument("--right")
    p.add_argument("--calib")
    p.add_argument("--recenter", action="store_true", default=None)

    p = sub.add_parser("match", help="estimate a disparity image")
    common(p)
    matching(p)
    p.add_argument("--out-right")

    p = sub.add_parser("refine", help="post-process disparity files")
    common(p)
    p.add_argument("--disp")
    p.add_argument("--disp-right")
    p.add_argument("--lr-check", action="store_true", default=None)
    p.add_argument("--tau", type=float)
    p.add_argument("--subpixel", action="store_true", default=None)
    p.add_argument("--median", action="store_true", default=None)
    p.add_argument("--window", type=int)

    p = sub.add_parser("evaluate", help="compare a disparity file with ground truth")
    common(p)
    p.add_argument("--disp")
    p.add_argument("--gt")
    p.add_argument("--delta", type=float, help="error tolerance in pixels (default 1)")
    p.add_argument("--all-pixels", action="store_true", default=None,
                   help="evaluate every valid ground-truth pixel; missing estimates count as errors")
    p.add_argument("--wall-time", type=float)
    p.add_argument("--dmax", type=int)

    p = sub.add_parser("bench", help="time matching for 1..N workers and check determinism")
    common(p)
    matching(p)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--worker-counts", type=lambda s: [int(x) for x in s.split(",")],
                   help="comma-separated worker counts (default 1..--workers)")
    p.add_argument("--repeat", type=int)
    p.add_argument("--report", help="write a JSON summary here")
    return parser


def parse_options(argv):
    args = build_parser().parse_args(argv)
    cfg = read_config(args.config) if args.config else {}
    opts = dict(DEFAULTS)
    opts.update(COMMAND_DEFAULTS.get(args.command, {}))
    opts.update(cfg)
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    for key in ("left", "right", "calib", "out", "out_right", "disp", "disp_right", "gt",
                "wall_time", "worker_counts", "report"):
        opts.setdefault(key, None)
    return argparse.Namespace(**opts)


def main(argv=None):
    try:
        o = parse_options(sys.argv[1:] if argv is None else argv)
        with fork_join(o.workers) as pfor:
            COMMANDS[o.command](o, pfor)
    except StereoError as exc:
        print(f"{type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"{type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return 5
    return 0


if __name__ == "__main__":
    sys.exit(main())
