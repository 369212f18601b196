"""Trial statistics and parallel-run accounting."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import EvaluationLog, UsageError


@dataclass(frozen=True)
class TrialStats:
    max: float
    min: float
    mean: float
    median: float
    std: float

    def as_tuple(self):
        return (self.max, self.min, self.mean, self.median, self.std)


def trial_stats(bests) -> TrialStats:
    """Max, min, mean, median and sample standard deviation (``n - 1`` denominator)."""
    x = np.asarray(list(bests), dtype=float)
    if x.size == 0:
        raise UsageError("statistics need at least one trial")
    std = float(np.std(x, ddof=1)) if x.size > 1 else math.nan
    return TrialStats(float(np.max(x)), float(np.min(x)), float(np.mean(x)), float(np.median(x)), std)


def _sizes(batches) -> list[int]:
    if isinstance(batches, EvaluationLog):
        return batches.batch_sizes()
    return [int(b) for b in batches]


def parallel_runs(batches, processors) -> int:
    """Number of synchronous dispatches: ``sum over batches of ceil(size / P)``.

    ``batches`` is an :class:`EvaluationLog` or a list of batch sizes;
    ``processors`` may be ``math.inf``.
    """
    if not processors >= 1:
        raise UsageError("processor count must be at least 1")
    sizes = _sizes(batches)
    if processors == math.inf:
        return len(sizes)
    p = int(processors)
    return sum(-(-n // p) for n in sizes)


def runs_curve(batch_ids, values, processors) -> list[tuple[int, int, float]]:
    """Best-so-far value after each run as ``(run, evaluations, best)``.

    Evaluations are grouped by consecutive batch id and each batch is split
    into chunks of ``processors`` in logged order.
    """
    if not processors >= 1:
        raise UsageError("processor count must be at least 1")
    out = []
    best = -math.inf
    run = 0
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j < n and batch_ids[j] == batch_ids[i]:
            j += 1
        size = j - i
        chunk = size if processors == math.inf else int(processors)
        for start in range(i, j, chunk):
            stop = min(start + chunk, j)
            for v in values[start:stop]:
                if v > best:
                    best = float(v)
            run += 1
            out.append((run, stop, best))
        i = j
    return out
