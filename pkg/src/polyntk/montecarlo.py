"""Deterministic chunked Monte-Carlo averaging.

The sample budget is split into fixed-size chunks. Chunk ``i`` draws from its
own stream seeded by ``SeedSequence(seed, spawn_key=(i,))``, so an estimate
depends only on ``(seed, samples, CHUNK_SIZE)`` and not on how many workers
evaluate the chunks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

CHUNK_SIZE = 1 << 16


@dataclass(frozen=True)
class McEstimate:
    """Scalar estimate, or arrays of per-column estimates for vector draws."""

    value: float | np.ndarray
    std_error: float | np.ndarray
    samples: int

    def within(self, target, n_se=3.0, floor=0.0):
        """True when ``|value - target| <= n_se * std_error + floor``."""
        return np.abs(self.value - target) <= n_se * self.std_error + floor


def substream(seed, index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def chunked_mean(draw, samples, seed, workers=1, chunk_size=CHUNK_SIZE):
    """Mean and standard error of ``draw(rng, count)`` over ``samples`` draws.

    ``draw`` must return ``count`` i.i.d. samples along axis 0; extra axes
    are averaged independently.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    sizes = [chunk_size] * (samples // chunk_size)
    if samples % chunk_size:
        sizes.append(samples % chunk_size)

    def run(i):
        vals = np.asarray(draw(substream(seed, i), sizes[i]), dtype=float)
        mean = vals.mean(axis=0)
        return vals.shape[0], mean, np.sum((vals - mean) ** 2, axis=0)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]

    # Chan et al. pairwise merge, always in chunk order.
    count, mean, m2 = parts[0]
    for n_b, mean_b, m2_b in parts[1:]:
        total = count + n_b
        delta = mean_b - mean
        mean = mean + delta * n_b / total
        m2 = m2 + m2_b + delta * delta * count * n_b / total
        count = total
    var = m2 / (count - 1) if count > 1 else 0.0 * m2
    se = np.sqrt(var / count)
    if np.ndim(mean) == 0:
        return McEstimate(float(mean), float(se), count)
    return McEstimate(mean, se, count)
