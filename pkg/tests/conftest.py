import numpy as np
import pytest

from stereovision.camera import Intrinsics, project
from stereovision.geometry import Pose, rotation_about_axis, transform_point


def random_rotation(rng, max_angle=np.pi):
    axis = rng.normal(size=3)
    return rotation_about_axis(axis, rng.uniform(-max_angle, max_angle))


def random_rig_pose(rng):
    """Left-to-right pose of a plausible stereo rig: mostly horizontal baseline."""
    R = random_rotation(rng, max_angle=0.2)
    t = np.array([-rng.uniform(0.2, 1.0), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)])
    return Pose(R, t)


def points_in_front(rng, n, pose, zmin=4.0, zmax=20.0, spread=2.0):
    """Points visible (z > 0.5) in both the left frame and, through ``pose``, the right frame."""
    out = []
    while len(out) < n:
        z = rng.uniform(zmin, zmax, size=n)
        p = np.column_stack([rng.uniform(-spread, spread, n), rng.uniform(-spread, spread, n), z])
        pr = transform_point(pose, p)
        out.extend(p[pr[:, 2] > 0.5])
    return np.array(out[:n])


def correspondences(pose, KL, KR, pts):
    return project(KL, pts), project(KR, transform_point(pose, pts))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def K640():
    return Intrinsics(500.0, 500.0, 320.0, 240.0)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_RESULTS = {}


_SETUP_TIME = {}


def pytest_runtest_logreport(report):
    if report.when == "setup":
        _SETUP_TIME[report.nodeid] = report.duration
    if report.when != "call" and not (report.when == "setup" and report.skipped):
        return
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    duration = report.duration + (_SETUP_TIME.get(report.nodeid, 0.0) if report.when == "call" else 0.0)
    ACCEPTANCE_RESULTS.setdefault(crit, []).append((status, report.nodeid, duration))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE_RESULTS):
        rows = ACCEPTANCE_RESULTS[crit]
        statuses = {s for s, _, _ in rows}
        overall = "FAIL" if "FAIL" in statuses else ("PASS" if "PASS" in statuses else "SKIP")
        total = sum(d for _, _, d in rows)
        parts = ", ".join(f"{n.split('::')[-1]} {s}" for s, n, _ in rows)
        terminalreporter.write_line(f"criterion {crit}: {overall} ({total:.2f} s) [{parts}]")
