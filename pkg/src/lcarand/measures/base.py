"""Shared pieces for measure models: result type, errors, alphabets and RNG streams."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from ..characters import Character, root_of_unity


class ResourceCapError(RuntimeError):
    """An exact computation would exceed its configured size or error budget."""


class ConfigurationError(ValueError):
    """Inconsistent or insufficient parameters for an operation."""


@dataclass(frozen=True)
class SpectralValue:
    """An expectation ``<chi, mu>`` together with how it was obtained.

    ``provenance`` is one of ``exact``, ``monte-carlo`` or ``truncated-exact``.
    """

    value: complex
    provenance: str = "exact"
    stderr: float | None = None
    samples: int | None = None
    error_bound: float | None = None

    @property
    def abs(self) -> float:
        return abs(self.value)

    @property
    def error(self) -> float:
        if self.stderr is not None:
            return self.stderr
        if self.error_bound is not None:
            return self.error_bound
        return 0.0


CHUNK = 1 << 16


def make_rng(seed: int, stream: int = 0, chunk: int = 0) -> np.random.Generator:
    """Counter-based generator for block ``chunk`` of stream ``stream``.

    Sample ``i`` of a stream always lives in chunk ``i // CHUNK``, so results do
    not depend on how the work is split or ordered.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(chunk)))
    return np.random.Generator(np.random.Philox(ss))


def chunked(n: int, seed: int, stream: int, fn: Callable[[np.random.Generator, int], np.ndarray]) -> np.ndarray:
    """Concatenate ``fn(rng, size)`` over fixed-size counter chunks covering ``n`` samples."""
    parts = []
    for c in range(math.ceil(n / CHUNK)):
        size = min(CHUNK, n - c * CHUNK)
        parts.append(fn(make_rng(seed, stream, c), size))
    return np.concatenate(parts) if parts else np.empty(0)


@lru_cache(maxsize=None)
def symbol_vectors(p: int, s: int) -> np.ndarray:
    """Row ``a`` is the vector of symbol index ``a``; component ``c`` is digit ``c`` base ``p``."""
    idx = np.arange(p**s)
    return np.stack([(idx // p**c) % p for c in range(s)], axis=1).astype(np.int64)


def symbol_index(vec, p: int) -> int:
    return sum(int(x) * p**c for c, x in enumerate(vec))


def nonzero_frequencies(p: int, s: int) -> np.ndarray:
    return symbol_vectors(p, s)[1:]


def phase_tables(chi: Character) -> tuple[list[int], np.ndarray]:
    """Sites of ``chi`` and, per site, the angle index of every alphabet symbol."""
    vecs = symbol_vectors(chi.p, chi.s)
    sites = list(chi.sites)
    if not sites:
        return sites, np.zeros((0, len(vecs)), dtype=np.int64)
    U = np.array([u for _, u in chi.freqs], dtype=np.int64)
    return sites, (U @ vecs.T) % chi.p


def roots(p: int) -> np.ndarray:
    return np.array([root_of_unity(i, p) for i in range(p)], dtype=complex)


def mc_summary(angles: np.ndarray, p: int) -> SpectralValue:
    """Mean and standard error of ``omega**angles``."""
    vals = roots(p)[angles]
    n = len(vals)
    mean = complex(vals.mean())
    if n > 1:
        var = float(np.mean(np.abs(vals - mean) ** 2)) * n / (n - 1)
        se = math.sqrt(var / n)
    else:
        se = float("inf")
    return SpectralValue(mean, "monte-carlo", stderr=se, samples=n)
