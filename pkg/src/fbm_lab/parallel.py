"""Deterministic replica-parallel map.

Replicas are cut into fixed-size chunks that do not depend on the thread
count, each chunk is processed independently and results are merged in
chunk order. Thread counts therefore change wall time only.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")

ENV_THREADS = "FBM_LAB_THREADS"
_threads: int | None = None


def set_threads(n: int | None) -> None:
    """Set the process-wide worker count (``None`` restores the default)."""
    global _threads
    if n is not None and n < 1:
        raise ValueError("thread count must be >= 1")
    _threads = n


def get_threads() -> int:
    if _threads is not None:
        return _threads
    env = os.environ.get(ENV_THREADS)
    if env:
        try:
            n = int(env)
        except ValueError:
            n = 0
        if n >= 1:
            return n
    return 1


def chunk_ranges(start: int, stop: int, chunk: int) -> list[tuple[int, int]]:
    return [(a, min(a + chunk, stop)) for a in range(start, stop, chunk)]


def map_chunks(fn: Callable[[int, int], T], start: int, stop: int, chunk: int) -> list[T]:
    """Apply ``fn(a, b)`` to consecutive ranges of ``[start, stop)``, results in order."""
    ranges = chunk_ranges(start, stop, chunk)
    n = min(get_threads(), len(ranges))
    if n <= 1:
        return [fn(a, b) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=n) as ex:
        futures = [ex.submit(fn, a, b) for a, b in ranges]
        return [f.result() for f in futures]


def map_items(fn: Callable[[T], object], items: Sequence[T]) -> list:
    n = min(get_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
