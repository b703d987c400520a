"""Independent random dyadic increments (binary alphabet).

Write a site ``M = sum_n m_n 2**n``.  The limiting sequence is
``a_M = sum_n m_n r^n_{M mod 2**n}`` over Z/2, where the ``r^n_j`` are
independent with ``P(r^n_j = 1) = alpha**n``.  Level 0 is deterministic
(``alpha**0 = 1``).  The stationary version truncated at ``n_max`` levels is
``2**n_max``-periodic; its character expectations are averaged exactly over
all offsets ``k`` in ``[0, 2**n_max)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..characters import Character
from .base import ResourceCapError, SpectralValue


@dataclass(frozen=True)
class IrdiMeasure:
    alpha: float
    n_max: int = 24
    name: str = "irdi"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if not 1 <= self.n_max <= 60:
            raise ValueError("n_max must be between 1 and 60")

    p = 2
    s = 1

    @property
    def kind(self) -> str:
        return "irdi"

    @property
    def alphabet_size(self) -> int:
        return 2

    def level_signs(self, n: int | None = None) -> np.ndarray:
        """``E[(-1)^{r^i}] = 1 - 2 alpha**i`` for ``i < n``."""
        n = self.n_max if n is None else n
        return 1.0 - 2.0 * self.alpha ** np.arange(n, dtype=float)

    def truncation_bound(self, span: int) -> float:
        return span * 2.0 * self.alpha**self.n_max / (1.0 - self.alpha)

    def sample_symbols(self, length: int, n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_truncated(self.alpha, self.n_max, length, n, rng)


def site_variables(M: int) -> list[tuple[int, int]]:
    """Variables ``(n, M mod 2**n)`` summed at site ``M`` of the limiting sequence."""
    if M < 0:
        raise ValueError("sites of the limiting sequence are non-negative")
    out = []
    n = 0
    while M >> n:
        if (M >> n) & 1:
            out.append((n, M % (1 << n)))
        n += 1
    return out


def infinite_expectation(alpha: float, chi: Character) -> complex:
    """``<chi, mu_inf>`` for the non-stationary limiting measure (sites >= 0)."""
    odd: set[tuple[int, int]] = set()
    for site in chi.sites:
        for v in site_variables(site):
            odd ^= {v}
    return complex(math.prod(1.0 - 2.0 * alpha**n for n, _ in odd))


def expectation_dp(sites, alpha: float, n_max: int) -> float:
    """Exact ``E[(-1)^{sum_k a_{X+k}}]`` over uniform ``X`` mod ``2**n_max``.

    Sites are shifted to start at 0 (stationarity) and have span ``W``.  With
    ``L = ceil(log2 W)``, the low ``L`` bits of ``X`` are enumerated; within a
    level ``i < L`` a variable is shared by sites in one residue class mod
    ``2**(i+1)`` and only classes of odd size survive.  Above ``L`` the window
    crosses at most one carry, which a small state machine tracks.
    """
    pts = sorted(set(sites))
    if not pts:
        return 1.0
    base = pts[0]
    s = np.array([x - base for x in pts], dtype=np.int64)
    W = int(s[-1]) + 1
    c = 1.0 - 2.0 * alpha ** np.arange(n_max, dtype=float)
    L = max(0, (W - 1).bit_length())
    low = min(L, n_max)
    T = 1 << low
    t = np.arange(T)
    factor = np.ones(T)
    for i in range(low):
        P = 1 << (i + 1)
        odd = np.bincount(s % P, minlength=P) & 1
        ext = np.concatenate([odd, odd])
        cs = np.concatenate([[0], np.cumsum(ext)])
        lo = (P // 2 - np.arange(P)) % P
        # classes rho with (t + rho) mod P in the upper half have bit i set
        cnt = cs[lo + P // 2] - cs[lo]
        factor = factor * c[i] ** cnt[t % P]
    if n_max <= L:
        return float(factor.mean())
    # e = sites (relative) from which the carry into bit L has happened
    e = np.minimum((1 << L) - t, W)
    w = np.bincount(e, weights=factor, minlength=W + 1) / T
    below = np.searchsorted(s, np.arange(W + 1), side="left")
    above = len(s) - below
    for i in range(L, n_max):
        new = np.zeros(W + 1)
        new[W] += 0.5 * float((w * c[i] ** above).sum())
        new += 0.5 * w * c[i] ** below
        w = new
    return float(w.sum())


def char_expectation_irdi(mu: IrdiMeasure, chi: Character, tol: float | None = None) -> SpectralValue:
    if chi.p != 2 or chi.s != 1:
        raise ValueError("the IRDI measure lives on the binary alphabet")
    if chi.is_trivial:
        return SpectralValue(1.0 + 0j, "exact")
    bound = mu.truncation_bound(chi.span)
    if tol is not None and bound > tol:
        need = mu.n_max
        while chi.span * 2.0 * mu.alpha**need / (1.0 - mu.alpha) > tol:
            need += 1
        raise ResourceCapError(f"truncation bound {bound:.3g} exceeds {tol}; use n_max >= {need}")
    v = expectation_dp(chi.sites, mu.alpha, mu.n_max)
    return SpectralValue(complex(v), "truncated-exact", error_bound=bound)


# ---------------------------------------------------------------- increments


@dataclass(frozen=True)
class IncrementLaw:
    """Law of ``a_{M + 2**N} - a_M`` for the limiting sequence at ``M = k + m``."""

    N: int
    M: int
    variables: tuple[tuple[int, int], ...]
    prob_one: float

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(n for n, _ in self.variables)


def increment_variables(M: int, N: int) -> tuple[tuple[int, int], ...]:
    """Variables with odd multiplicity in ``a_{M+2**N} + a_M``, sorted by level."""
    return tuple(sorted(set(site_variables(M)) ^ set(site_variables(M + (1 << N)))))


def fold_parity(levels, alpha: float) -> float:
    """Probability that a sum of independent ``r^{n_j}`` is odd, folded from the top level down."""
    if not levels:
        return 0.0
    P = alpha ** levels[-1]
    for n in reversed(levels[:-1]):
        q = alpha**n
        P = (1 - q) * P + q * (1 - P)
    return P


def irdi_increment_prob(mu: IrdiMeasure | float, N: int, m: int, k: int = 0) -> IncrementLaw:
    alpha = mu.alpha if isinstance(mu, IrdiMeasure) else float(mu)
    if N < 0 or not 0 <= m < (1 << N):
        raise ValueError("need N >= 0 and 0 <= m < 2**N")
    if k < 0:
        raise ValueError("offset k must be non-negative")
    M = k + m
    var = increment_variables(M, N)
    return IncrementLaw(N, M, var, fold_parity([n for n, _ in var], alpha))


def sample_infinite(alpha: float, positions, n: int, rng: np.random.Generator) -> np.ndarray:
    """Joint samples of the limiting sequence at fixed non-negative ``positions``."""
    pos = np.asarray(positions, dtype=np.int64)
    out = np.zeros((n, len(pos)), dtype=np.int64)
    top = int(pos.max()).bit_length() if len(pos) else 0
    for lev in range(top):
        on = ((pos >> lev) & 1).astype(bool)
        if not on.any():
            continue
        keys = pos[on] % (1 << lev)
        uniq, inv = np.unique(keys, return_inverse=True)
        draws = rng.random((n, len(uniq))) < alpha**lev
        out[:, on] ^= draws[:, inv]
    return out


def sample_truncated(alpha: float, n_max: int, length: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Windows of the stationary truncated sequence, shape ``(n, length)``."""
    k = rng.integers(0, 1 << n_max, size=n, dtype=np.int64)
    X = k[:, None] + np.arange(length, dtype=np.int64)[None, :]
    X &= (1 << n_max) - 1
    out = np.zeros((n, length), dtype=np.int64)
    for lev in range(n_max):
        bit = (X >> lev) & 1
        q = alpha**lev
        if length <= (1 << (lev + 1)):
            # no two sites of the window can share a level-lev variable
            draws = rng.random((n, length)) < q
        else:
            pool = rng.random((n, 1 << lev)) < q
            draws = np.take_along_axis(pool, X & ((1 << lev) - 1), axis=1)
        out ^= bit & draws
    return out


# ------------------------------------------------------------------ entropy


def binary_entropy(q: np.ndarray) -> np.ndarray:
    q = np.clip(np.asarray(q, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -q * np.log2(q) - (1 - q) * np.log2(1 - q)
    return np.nan_to_num(h, nan=0.0)


def _parity_entropy(x: np.ndarray) -> np.ndarray:
    # entropy of a bit whose sign has mean x
    return binary_entropy((1.0 - x) / 2.0)


def _subset_products(c: np.ndarray) -> np.ndarray:
    out = np.ones(1)
    for v in c:
        out = np.concatenate([out, out * v])
    return out


def _mean_entropy_over_subsets(bases: np.ndarray, factors: np.ndarray, split: int = 12) -> np.ndarray:
    """For each base ``b``: mean over subsets ``X`` of ``factors`` of ``H(b * prod X)``."""
    lo, hi = factors[:split], factors[split:]
    top = _subset_products(hi)
    low = _subset_products(lo)
    out = np.zeros(len(bases))
    for j, b in enumerate(bases):
        acc = 0.0
        for chunk in np.array_split(low, max(1, len(low) // 256)):
            acc += _parity_entropy(b * np.outer(chunk, top)).sum()
        out[j] = acc / (len(low) * len(top))
    return out


def increment_entropies(mu: IrdiMeasure, n_levels: int) -> np.ndarray:
    """``T_n = E_M H(d^n_M)`` for ``n < n_levels`` under the stationary truncated law.

    With ``M`` uniform mod ``2**n_max`` the increment ``a_{M+2**n} - a_M``
    involves levels ``n..N1`` once (``N1`` the first zero bit of ``M`` at or
    above ``n``) and each higher level whose bit is set twice.  ``N1`` is
    geometric and the higher bits are fair coins, which gives the average in
    closed form up to a sum over subsets.
    """
    n_max = mu.n_max
    c = mu.level_signs()
    c2 = c * c
    out = np.zeros(n_levels)
    for n in range(min(n_levels, n_max)):
        total = 0.0
        for j in range(n_max - n):
            N1 = n + j
            b = float(np.prod(c[n : N1 + 1]))
            total += 2.0 ** -(j + 1) * _mean_entropy_over_subsets(np.array([b]), c2[N1 + 1 :])[0]
        # bits n..n_max-1 all set: the carry leaves the period
        total += 2.0 ** -(n_max - n) * float(_parity_entropy(np.prod(c[n:])))
        out[n] = total
    return out


def site_entropy(mu: IrdiMeasure) -> float:
    """``E_k H(a_k)``: site entropy given the offset."""
    return float(_mean_entropy_over_subsets(np.array([1.0]), mu.level_signs())[0])


def irdi_entropy_profile(mu: IrdiMeasure, levels) -> list[tuple[int, float]]:
    """Per-symbol increment bound on ``H(a_[0, 2**N)) / 2**N`` for each ``N`` in ``levels``.

    The block is determined by ``a_0`` and the increments ``a_{m+2**n} - a_m``
    (``n < N``, ``m < 2**n``); subadditivity bounds its entropy by the sum of
    their entropies, each averaged over the offset.
    """
    levels = sorted(set(int(N) for N in levels))
    if not levels:
        return []
    T = increment_entropies(mu, max(levels))
    H0 = site_entropy(mu)
    out = []
    for N in levels:
        acc = H0 + sum(2.0**n * T[n] for n in range(N))
        out.append((N, float(acc / 2.0**N)))
    return out


__all__ = [
    "IncrementLaw",
    "IrdiMeasure",
    "char_expectation_irdi",
    "expectation_dp",
    "fold_parity",
    "increment_entropies",
    "increment_variables",
    "infinite_expectation",
    "irdi_entropy_profile",
    "irdi_increment_prob",
    "sample_infinite",
    "sample_truncated",
    "site_entropy",
    "site_variables",
]
