"""
Fork-join parallelism and determinism
=====================================

Library functions take a ``parallel_for`` from the caller. The same work is
run with a growing pool; the disparity maps are compared byte for byte.
"""

import hashlib
import os
import time

from stereovision import io
from stereovision.evaluation import mde_per_s
from stereovision.matching import MatchParams, SgmParams, match_stereo
from stereovision.parallel import fork_join
from stereovision.synthetic import generate_random_dot_pair, ramp_field

W, H, d_max = 384, 256, 48
left, right, _, _ = generate_random_dot_pair(W, H, ramp_field(W, H, 2.0, 40.0), seed=2)
params = MatchParams(d_max=d_max, block_radius=2, cost_kind="sad")

print(f"{os.cpu_count()} CPU(s) available")
digests = set()
for workers in (1, 2, 4):
    with fork_join(workers) as parallel_for:
        t0 = time.perf_counter()
        D, _ = match_stereo(left, right, params, SgmParams(), parallel_for)
        dt = time.perf_counter() - t0
    digest = hashlib.sha256(io.encode_disparity(D).tobytes()).hexdigest()
    digests.add(digest)
    print(f"workers={workers}  {dt:6.2f} s  {mde_per_s(W, H, d_max, dt):6.2f} Mde/s  sha256 {digest[:16]}")

print("identical outputs:", len(digests) == 1)
