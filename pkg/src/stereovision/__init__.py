"""Binocular stereo vision: camera geometry, rectification, dense matching and evaluation."""

from .camera import Distortion, Intrinsics, build_undistort_map, project, remap, undistort_image
from .epipolar import (essential_from_pose, estimate_fundamental_8pt, estimate_homography_4pt,
                       fundamental_from_essential, homography_from_plane)
from .errors import StereoError
from .evaluation import EvalReport, evaluate, mde_per_s, pep, rms_error
from .geometry import Pose, is_rotation, skew
from .matching import MatchParams, SgmParams, build_cost_volume, match_stereo, sgm_aggregate, wta
from .parallel import fork_join, serial_for
from .rectification import StereoRig, depth_from_disparity, disparity_from_depth, rectify_rig
from .refinement import RefineParams, refine_disparity
from .synthetic import generate_random_dot_pair

__version__ = "0.1.0"
