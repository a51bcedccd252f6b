"""Counter-based Gaussian noise for walker ensembles.

Walkers are cut into fixed blocks of ``BLOCK`` consecutive ids.  The normals
of block j at a given step come from a Philox generator whose counter starts
at (0, j, step, stream) under the master seed as key, so every draw is a pure
function of (seed, stream, step, walker id).  Threads only decide which
blocks they fill, never what goes into them.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 4096
_MASK64 = 0xFFFFFFFFFFFFFFFF


def threads_from_env(default: int = 1) -> int:
    raw = os.environ.get("NELSON_LAB_THREADS")
    if not raw:
        return default
    n = int(raw)
    if n < 1:
        raise ValueError("NELSON_LAB_THREADS must be >= 1")
    return n


def _generator(seed: int, block: int, step: int, stream: int) -> np.random.Generator:
    # the first counter word is consumed inside a block; blocks differ in the second
    return np.random.Generator(np.random.Philox(counter=[0, block, step, stream],
                                                key=[seed & _MASK64, 0]))


def standard_normal(seed: int, step: int, n: int, stream: int = 0,
                    threads: int | None = None) -> np.ndarray:
    """n standard normals for one step, bit-identical for any thread count."""
    threads = threads_from_env() if threads is None else threads
    out = np.empty(n)
    starts = range(0, n, BLOCK)

    def fill(a: int) -> None:
        m = min(BLOCK, n - a)
        out[a:a + m] = _generator(seed, a // BLOCK, step, stream).standard_normal(m)

    if threads <= 1 or n <= BLOCK:
        for a in starts:
            fill(a)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, starts))
    return out


def uniform(seed: int, n: int, stream: int) -> np.ndarray:
    """n uniforms in [0, 1) for initial sampling, from a stream no step ever uses."""
    return np.random.Generator(np.random.Philox(counter=[0, 0, 0, 0],
                                                key=[seed & _MASK64, stream + 1])).random(n)
