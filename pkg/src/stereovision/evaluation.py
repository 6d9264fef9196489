"""Disparity accuracy metrics and throughput."""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyEvaluationSet, NonPositiveTime, SizeMismatch


@dataclass
class EvalReport:
    rms: float
    pep: float
    delta_d: float
    n_evaluated: int
    mde_per_s: float = 0.0
    wall_time_s: float = 0.0
    width: int = 0
    height: int = 0
    d_max: int = 0

    def to_text(self):
        return "".join(f"{k} = {v!r}\n" for k, v in asdict(self).items())

    def to_record(self):
        return json.dumps(asdict(self), sort_keys=True)


def _evaluation_set(D_E, D_G, count_invalid_estimate=False):
    D_E = np.asarray(D_E, dtype=float)
    D_G = np.asarray(D_G, dtype=float)
    if D_E.shape != D_G.shape:
        raise SizeMismatch(f"disparity shapes differ: {D_E.shape} vs {D_G.shape}")
    gt_ok = ~np.isnan(D_G)
    mask = gt_ok if count_invalid_estimate else gt_ok & ~np.isnan(D_E)
    if not mask.any():
        raise EmptyEvaluationSet("no pixel is valid in both disparity images")
    return D_E, D_G, mask


def rms_error(D_E, D_G):
    """Root mean squared difference over pixels valid in both maps."""
    D_E, D_G, mask = _evaluation_set(D_E, D_G)
    diff = D_E[mask] - D_G[mask]
    return float(np.sqrt(np.sum(diff * diff) / diff.size))


def pep(D_E, D_G, delta_d=1.0, count_invalid_estimate=False):
    """Percentage of evaluated pixels with |D_E - D_G| > delta_d.

    By default only pixels valid in both maps are evaluated. With
    ``count_invalid_estimate`` every valid ground-truth pixel is evaluated and
    a missing estimate counts as an error.
    """
    if delta_d < 0:
        raise ValueError("delta_d must be >= 0")
    D_E, D_G, mask = _evaluation_set(D_E, D_G, count_invalid_estimate)
    e = D_E[mask]
    g = D_G[mask]
    with np.errstate(invalid="ignore"):
        bad = np.isnan(e) | (np.abs(e - g) > delta_d)
    return float(100.0 * np.count_nonzero(bad) / e.size)


def mde_per_s(width, height, d_max, wall_time_s):
    """Millions of disparity evaluations per second: width*height*d_max*1e-6 / t."""
    if not wall_time_s > 0:
        raise NonPositiveTime(f"wall time must be positive, got {wall_time_s}")
    return width * height * d_max * 1e-6 / wall_time_s


def evaluate(D_E, D_G, delta_d=1.0, wall_time_s=None, d_max=0, count_invalid_estimate=False):
    H, W = np.asarray(D_G).shape
    _, _, mask = _evaluation_set(D_E, D_G, count_invalid_estimate)
    report = EvalReport(
        rms=rms_error(D_E, D_G),
        pep=pep(D_E, D_G, delta_d, count_invalid_estimate),
        delta_d=float(delta_d),
        n_evaluated=int(np.count_nonzero(mask)),
        width=W, height=H, d_max=int(d_max),
    )
    if wall_time_s is not None:
        report.wall_time_s = float(wall_time_s)
        report.mde_per_s = mde_per_s(W, H, d_max, wall_time_s)
    return report
