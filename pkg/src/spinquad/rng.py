"""Seeded random streams.

Every parallel unit of work (an angle, a block of shots, a block of
benchmark amplitudes) gets its own child stream spawned from one root, so
results never depend on how the work is scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

# Fixed block length for shot generation; independent of thread count.
BLOCK = 8192


def root_sequence(rng: int | np.random.SeedSequence | np.random.Generator | None) -> np.random.SeedSequence:
    if isinstance(rng, np.random.SeedSequence):
        return rng
    if isinstance(rng, np.random.Generator):
        return rng.bit_generator.seed_seq.spawn(1)[0]
    if rng is None:
        raise ValueError("a seed is required; wall-clock seeding is not supported")
    return np.random.SeedSequence(int(rng))


def seed_of(rng) -> int:
    """The integer seed when one was given, else -1."""
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    if isinstance(rng, np.random.SeedSequence) and isinstance(rng.entropy, int):
        return rng.entropy
    return -1


def spawn(rng, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in root_sequence(rng).spawn(n)]


def blocks(total: int, size: int = BLOCK) -> list[int]:
    full, rest = divmod(total, size)
    return [size] * full + ([rest] if rest else [])


def parallel_map(fn: Callable[..., T], args: Sequence[tuple], threads: int = 1) -> list[T]:
    """``[fn(*a) for a in args]``, optionally on a thread pool; order preserved."""
    if threads <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda a: fn(*a), args))
