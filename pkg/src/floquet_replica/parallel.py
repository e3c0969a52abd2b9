"""Order-preserving thread map used by the sweeps.

LAPACK and FFT calls release the GIL, so threads give real concurrency; results are
always returned in input order, keeping every reduction independent of thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_default_threads: int | None = None


def set_default_threads(threads: int | None) -> None:
    global _default_threads
    _default_threads = threads


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = _default_threads
    if threads is None:
        threads = os.cpu_count() or 1
    return max(1, int(threads))


def ordered_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    items = list(items)
    workers = min(resolve_threads(threads), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def tree_sum(values) -> complex | float:
    """Pairwise summation in a fixed order."""
    vals = list(values)
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]
