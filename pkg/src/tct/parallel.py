"""Thread control.

BLAS is always run single-threaded while tct computes: multi-threaded
reductions change the last bits of results with the thread count, and
this build of OpenBLAS cannot grow its pool after start-up. Parallelism
instead comes from a worker pool over independent units (CV folds,
bootstrap trees, datasets) whose results are gathered in submission
order, so output bytes do not depend on ``TCT_THREADS``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from threadpoolctl import threadpool_limits

from .exceptions import ConfigurationError

ENV_VAR = "TCT_THREADS"


def worker_count(value=None) -> int:
    """Workers requested through ``TCT_THREADS`` (0 or unset: one per CPU)."""
    raw = os.environ.get(ENV_VAR, "0") if value is None else value
    try:
        n = int(str(raw).strip() or 0)
    except ValueError:
        raise ConfigurationError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigurationError(f"{ENV_VAR} must be >= 0")
    return n or (os.cpu_count() or 1)


def serial_blas():
    return threadpool_limits(limits=1)


def ordered_map(fn, items, workers=None) -> list:
    items = list(items)
    n = worker_count() if workers is None else workers
    if n <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
