"""Counter-derived random streams for reproducible (parallel) Monte Carlo.

Every stochastic routine in the package consumes a ``numpy.random.Generator``.
Parallel work is split into fixed-size chunks, each chunk drawing from its own
child stream derived from ``(seed, chunk index)``; gathered results therefore
do not depend on the number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np


def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for stream ``key`` of the family rooted at ``seed``.

    Streams with distinct keys are statistically independent; the mapping
    (seed, key) -> stream is stable across platforms and worker counts.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(total: int, chunk: int) -> list[int]:
    """Split ``total`` into chunks of size ``chunk`` (last one possibly short)."""
    if total < 0:
        raise ValueError("total must be nonnegative")
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes


def map_chunks(
    worker: Callable[[int, int, np.random.Generator], np.ndarray],
    total: int,
    seed: int,
    *,
    chunk: int = 4096,
    threads: int = 1,
    key_prefix: Sequence[int] = (),
) -> np.ndarray:
    """Run ``worker(chunk_index, chunk_count, rng)`` over chunks and concatenate.

    The output is identical for every ``threads`` value: chunk i always uses
    the stream ``child_rng(seed, *key_prefix, i)`` and results are concatenated
    in chunk order.
    """
    sizes = chunk_sizes(total, chunk)
    if not sizes:
        return np.empty(0)

    def run(i: int) -> np.ndarray:
        rng = child_rng(seed, *key_prefix, i)
        return worker(i, sizes[i], rng)

    if threads <= 1 or len(sizes) == 1:
        parts = [run(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, range(len(sizes))))
    return np.concatenate(parts, axis=0)
