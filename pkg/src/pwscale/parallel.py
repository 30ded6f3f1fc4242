"""Order-preserving process pool map with a serial fast path."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")

THREADS_ENV = "PWSCALE_THREADS"


def default_threads() -> int:
    value = os.environ.get(THREADS_ENV, "").strip()
    if not value:
        return 1
    if value in ("max", "0"):
        return os.cpu_count() or 1
    return max(1, int(value))


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        return default_threads()
    if threads <= 0:
        return os.cpu_count() or 1
    return threads


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """``list(map(fn, items))``, spread over worker processes when ``threads > 1``.

    Results come back in input order, so callers that derive their random
    streams from the item index get identical output for any worker count.
    """
    items = list(items)
    workers = min(resolve_threads(threads), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
