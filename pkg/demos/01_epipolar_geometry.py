"""
Epipolar geometry of a calibrated rig
=====================================

Build a stereo rig, derive its essential and fundamental matrices, then
recover F again from point correspondences alone.
"""

import numpy as np

from stereovision.camera import Intrinsics, project
from stereovision.epipolar import (epipolar_residual, epipoles, essential_from_pose,
                                   estimate_fundamental_8pt, fundamental_from_essential)
from stereovision.geometry import Pose, rotation_about_axis, transform_point

rng = np.random.default_rng(0)

# a 12 cm rig whose right camera is turned 3 degrees inwards
K = Intrinsics(500.0, 500.0, 320.0, 240.0)
R = rotation_about_axis([0, 1, 0], np.radians(-3.0))
t = -R @ np.array([0.12, 0.0, 0.0])
pose = Pose(R, t)

E = essential_from_pose(R, t)
F = fundamental_from_essential(E, K, K)
print("F (largest entry scaled to 1):\n", np.array_str(F, precision=6))

# scene points between 2 and 10 m, seen by both cameras
pts = np.column_stack([rng.uniform(-1, 1, 50), rng.uniform(-1, 1, 50), rng.uniform(2, 10, 50)])
pl = project(K, pts)
pr = project(K, transform_point(pose, pts))
print("max |pR^T F pL| on true matches:", np.abs(epipolar_residual(F, pl, pr)).max())

# the eight-point estimate from 20 matches reproduces F
est = estimate_fundamental_8pt(pl[:20], pr[:20])
print("max entry difference of the estimate:", np.abs(est - F).max())

# with one pixel of noise the estimate is no longer exact but stays close
noisy = estimate_fundamental_8pt(pl + rng.normal(size=pl.shape), pr + rng.normal(size=pr.shape))
print("mean |residual| with 1 px noise:", np.abs(epipolar_residual(noisy, pl, pr)).mean())

# the baseline is parallel to the left image plane, so the left epipole lies
# at infinity: its homogeneous third component vanishes
eL, eR = epipoles(F)
print("left epipole (homogeneous):", np.array_str(eL, precision=6))
