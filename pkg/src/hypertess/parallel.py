"""Replicate-level parallelism with scheduling-independent results."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_jobs(jobs) -> int:
    if jobs is None or jobs == 0:
        return 1
    if jobs < 0:
        return os.cpu_count() or 1
    return int(jobs)


def pmap(func, items, jobs=1, chunksize=None):
    """Ordered map; with jobs > 1 the work is spread over processes.

    Every item carries its own sub-seed, so the output does not depend on
    which worker ran it.
    """
    items = list(items)
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(items) < 2:
        return [func(it) for it in items]
    cs = chunksize or max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(func, items, chunksize=cs))
