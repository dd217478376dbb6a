# Shared/workflow.py
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

logger = logging.getLogger(__name__)

P = TypeVar("P")
R = TypeVar("R")


def ordered_map(
    fn: Callable[[P], R],
    params: Sequence[P],
    max_workers: int = 1,
) -> List[R]:
    """Apply ``fn`` to every parameter and return results in parameter order.

    Args:
      fn: pure function of one parameter.
      params: parameter list; output index i always belongs to params[i].
      max_workers: >1 runs rows on a thread pool (numpy/scipy release the GIL).

    Returns:
      List of results, same length and order as ``params``.
    """
    if max_workers <= 1 or len(params) <= 1:
        return [fn(p) for p in params]

    logger.info("ordered_map(): %d rows on %d workers", len(params), max_workers)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        # Executor.map yields in submission order regardless of completion order
        return list(pool.map(fn, params))
