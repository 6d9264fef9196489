"""
Rectifying a converging rig
===========================

Rotate both cameras of a slightly misaligned rig so that matching points
end up on the same image row.
"""

import numpy as np

from stereovision.camera import Intrinsics, project
from stereovision.geometry import Pose, rotation_about_axis, transform_point
from stereovision.rectification import StereoRig, depth_from_disparity, rectify_points, rectify_rig

rng = np.random.default_rng(1)
K = Intrinsics(500.0, 500.0, 320.0, 240.0)

# right camera yawed by 2 degrees and mounted 1 cm higher
R = rotation_about_axis([0, 1, 0], np.radians(2.0))
centre = np.array([0.12, 0.01, 0.0])
t = -R @ centre
rig = StereoRig(K, K, Pose(R, t), float(np.linalg.norm(t)))

pts = np.column_stack([rng.uniform(-2, 2, 200), rng.uniform(-1, 1, 200), rng.uniform(3, 15, 200)])
pl = project(K, pts)
pr = project(K, transform_point(rig.pose, pts))
print("row offset before rectification: max %.2f px" % np.abs(pl[:, 1] - pr[:, 1]).max())

res = rectify_rig(rig, 640, 480)
ql = rectify_points(res, K, res.R_rect, pl)
qr = rectify_points(res, K, res.R_right, pr)
print("row offset after rectification:  max %.2e px" % np.abs(ql[:, 1] - qr[:, 1]).max())

# in the rectified frame depth follows from disparity alone
d = ql[:, 0] - qr[:, 0]
z = (pts @ res.R_rect.T)[:, 2]
print("max relative depth error from disparity: %.1e"
      % np.max(np.abs(depth_from_disparity(res.rig, d) - z) / z))

# the remap fields are what an image pipeline would use
print("valid fraction of the left map: %.3f" % res.left_map.valid.mean())
