"""Deterministic worker-thread helpers.

Work is split into disjoint index partitions whose results land in disjoint
output slices, so the output is byte-identical for any worker count. The
env var D3STEREO_THREADS caps the pool size (default 1).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable


def thread_count() -> int:
    raw = os.environ.get("D3STEREO_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def map_indices(fn: Callable[[int], None], n: int, threads: int | None = None) -> None:
    """Run fn(i) for i in range(n), optionally on a thread pool.

    fn must write only to slices owned by its index; results are then
    independent of scheduling.
    """
    workers = thread_count() if threads is None else max(1, threads)
    if workers <= 1 or n <= 1:
        for i in range(n):
            fn(i)
        return
    with ThreadPoolExecutor(max_workers=min(workers, n)) as pool:
        list(pool.map(fn, range(n)))
