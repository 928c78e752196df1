"""Shared plumbing: errors, seeded RNG substreams, thread pools, angle folding."""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "InputError",
    "EstimatorFailure",
    "ResourceLimitError",
    "EXIT_CODES",
    "norm_angle",
    "fold_planar_angle",
    "substream",
    "spawn_rng",
    "parallel_map",
    "resolve_threads",
    "json_dumps",
]


class InputError(ValueError):
    """Malformed or out-of-contract input (CLI exit code 2)."""


class EstimatorFailure(RuntimeError):
    """Estimator produced a nonpositive mean inside a log (CLI exit code 3).

    Carries the raw means so callers can inspect the failing statistics.
    """

    def __init__(self, message: str, k4_mean: float | None = None, k2_mean: float | None = None):
        super().__init__(message)
        self.k4_mean = k4_mean
        self.k2_mean = k2_mean


class ResourceLimitError(RuntimeError):
    """Problem size beyond a documented simulator limit (CLI exit code 4)."""


EXIT_CODES = {InputError: 2, EstimatorFailure: 3, ResourceLimitError: 4}


def norm_angle(a: float) -> float:
    """Fold an angle into (-pi, pi].

    Uses IEEE remainder, which is exact and leaves in-range values untouched.
    """
    if not math.isfinite(a):
        raise InputError(f"angle must be finite, got {a!r}")
    r = math.remainder(a, 2.0 * math.pi)
    if r <= -math.pi:  # remainder may return exactly -pi
        r += 2.0 * math.pi
    return r


def fold_planar_angle(a: float) -> float:
    """Fold a planar measurement angle into [0, pi/4] using its symmetries.

    The single-qubit measurement magic is even in the angle and pi/2-periodic,
    so every angle has a representative in [0, pi/4]; equal-magic angles fold
    to bit-identical floats (e.g. ``pi/2**k`` and ``-pi/2**k``).
    """
    a = abs(norm_angle(a))
    a = math.fmod(a, math.pi / 2.0)  # exact for a < pi/2
    if a > math.pi / 4.0:
        a = math.pi / 2.0 - a
    return a


def _tag_to_int(tag: Any) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    digest = hashlib.sha256(str(tag).encode()).digest()
    return int.from_bytes(digest[:4], "big")


def substream(seed: int, *tags: Any) -> np.random.SeedSequence:
    """Named, collision-resistant child of a root seed.

    Tags may be ints or strings; strings are hashed so the mapping is stable
    across runs and platforms.
    """
    return np.random.SeedSequence(seed, spawn_key=tuple(_tag_to_int(t) for t in tags))


def spawn_rng(seed: int, *tags: Any) -> np.random.Generator:
    """Generator on the named substream of ``seed``."""
    return np.random.default_rng(substream(seed, *tags))


def resolve_threads(threads: int | str | None) -> int:
    if threads in (None, "auto"):
        return min(32, os.cpu_count() or 1)
    t = int(threads)
    if t < 1:
        raise InputError(f"thread count must be >= 1, got {threads!r}")
    return t


def parallel_map(fn: Callable, items: Iterable, threads: int | str | None = None) -> list:
    """Map ``fn`` over ``items``, collecting results in submission order.

    The result is identical for any thread count; ``threads=1`` short-circuits
    to a plain loop.
    """
    items = list(items)
    n = resolve_threads(threads)
    if n == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        futures = [pool.submit(fn, x) for x in items]
        return [f.result() for f in futures]


def json_dumps(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, shortest round-trip floats."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def check_range(name: str, value: float, lo: float | None = None, hi: float | None = None) -> None:
    if lo is not None and value < lo:
        raise InputError(f"{name} must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        raise InputError(f"{name} must be <= {hi}, got {value}")


def bits_of(x: int, n: int) -> np.ndarray:
    """Big-endian bit vector of ``x`` on ``n`` bits (qubit 1 first)."""
    return np.array([(x >> (n - 1 - i)) & 1 for i in range(n)], dtype=np.int64)


def popcount_weights(n: int, base: float = 3.0) -> np.ndarray:
    """Vector ``base**popcount(A)`` for all A in [0, 2**n)."""
    w = np.ones(1, dtype=np.float64)
    for _ in range(n):
        w = np.concatenate([w, w * base])
    return w


def as_seq(x: Any) -> Sequence:
    return x if isinstance(x, (list, tuple)) else [x]
