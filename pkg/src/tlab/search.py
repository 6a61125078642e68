"""Derivative-free compass search and chunked multistart refinement."""

from __future__ import annotations

from typing import Callable

import numpy as np


def pattern_search(f: Callable[[np.ndarray], float], x0: np.ndarray, step: float,
                   min_step: float, max_evals: int = 600, on_accept=None):
    """Minimize ``f`` by compass search over the 2n signed axis directions.

    The step halves whenever no direction improves. ``f`` may return ``inf``
    for infeasible points. Returns ``(x, fx, evals)``.
    """
    x = np.array(x0, dtype=np.float64)
    fx = f(x)
    evals = 1
    n = x.size
    while step >= min_step and evals < max_evals:
        improved = False
        for i in range(n):
            for sgn in (1.0, -1.0):
                y = x.copy()
                y[i] += sgn * step
                fy = f(y)
                evals += 1
                if fy < fx:
                    x, fx, improved = y, fy, True
                    if on_accept is not None:
                        on_accept(y)
                    break
            if evals >= max_evals:
                break
        if not improved:
            step *= 0.5
    return x, fx, evals


def chunk_starts(values: np.ndarray, chunk: int) -> list[int]:
    """Index of the best finite value in each consecutive block of ``chunk`` entries.

    Blocks depend only on position, so the starts for a sample of size ``n``
    are a prefix of the starts for any longer sample drawn from the same stream.
    """
    starts = []
    for lo in range(0, len(values), chunk):
        block = values[lo:lo + chunk]
        if block.size and np.isfinite(block).any():
            starts.append(lo + int(np.nanargmin(np.where(np.isfinite(block), block, np.inf))))
    return starts
