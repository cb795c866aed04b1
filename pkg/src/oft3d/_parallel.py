import logging
import os
from contextlib import contextmanager

import numba

logger = logging.getLogger(__name__)

THREADS_ENV = "OFT3D_THREADS"


def max_threads() -> int:
    return int(numba.config.NUMBA_NUM_THREADS)


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    if value:
        return int(value)
    return max_threads()


def set_threads(n: int | None) -> int:
    """Bound the kernel worker count; returns the count actually in effect."""
    if n is None:
        n = default_threads()
    n = int(n)
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    limit = max_threads()
    if n > limit:
        # the pool size is fixed at import; raise NUMBA_NUM_THREADS for more
        logger.warning("requested %d threads, numba pool holds %d; using %d", n, limit, limit)
        n = limit
    numba.set_num_threads(n)
    return n


@contextmanager
def threads(n: int | None):
    previous = numba.get_num_threads()
    try:
        yield set_threads(n)
    finally:
        numba.set_num_threads(previous)
