"""Fork-join helpers.

Library functions never create workers. They take an optional
``parallel_for`` callable with the signature ``parallel_for(fn, items)``
that returns ``[fn(item) for item in items]`` in order. The caller (the CLI,
a benchmark, a test) decides whether that runs serially or on a pool.

Work items always write disjoint output regions and each item's result
depends only on its own inputs, so outputs are byte-identical for any
worker count.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager


def serial_for(fn, items):
    return [fn(item) for item in items]


def resolve_workers(workers):
    if workers < 0:
        raise ValueError("worker count must be >= 0")
    if workers == 0:
        return os.cpu_count() or 1
    return workers


@contextmanager
def fork_join(workers=1):
    """Yield a ``parallel_for`` backed by a thread pool of ``workers`` threads.

    ``workers=0`` picks the CPU count. Each call forks the items onto the
    pool and joins all of them before returning.
    """
    n = resolve_workers(workers)
    if n == 1:
        yield serial_for
        return
    with ThreadPoolExecutor(max_workers=n) as pool:
        def parallel_for(fn, items):
            return list(pool.map(fn, items))
        yield parallel_for


def chunks(n, parts):
    """Split range(n) into at most ``parts`` contiguous (start, stop) ranges."""
    parts = max(1, min(parts, n)) if n > 0 else 1
    bounds = [round(i * n / parts) for i in range(parts + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(parts) if bounds[i + 1] > bounds[i]]
