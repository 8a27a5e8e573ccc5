"""Ordered worker pool for restarts, fuzz batches and probes."""

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

from entroscope.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def thread_map(
    func: Callable[[T], R], items: Iterable[T], threads: int | None = None
) -> list[R]:
    """Apply func to every item; results come back in submission order."""
    items = list(items)
    workers = min(threads or settings.threads, max(1, len(items)))
    if workers <= 1:
        return [func(item) for item in items]
    logger.debug(f"Mapping {len(items)} tasks over {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def argmin_first(values: Iterable[float]) -> int:
    """Index of the smallest value, lowest index on ties."""
    best_index, best_value = -1, float("inf")
    for i, value in enumerate(values):
        if value < best_value:
            best_index, best_value = i, value
    return best_index
