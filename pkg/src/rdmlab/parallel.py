"""Ordered parallel map over a thread pool.

The compiled kernels release the GIL, so threads give real parallelism for
the counting loops.  Results are always collected in input order.
"""
import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "RDMLAB_THREADS"


def default_threads():
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def pmap(fn, items, threads=None):
    items = list(items)
    threads = default_threads() if threads is None else int(threads)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
