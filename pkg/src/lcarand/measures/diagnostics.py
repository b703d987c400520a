"""Structural diagnostics: local freeness, conditional harmonic constant,
Markov words, harmonic-bound scans and block entropies."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..characters import Character
from ..lucas import PreconditionError
from .base import nonzero_frequencies, roots, symbol_vectors
from .irdi import IrdiMeasure, binary_entropy
from .markov import MarkovChain, MarkovMeasure


@dataclass(frozen=True)
class LocalFreeness:
    free: bool
    witness: tuple[int, int] | None = None
    min_paths: int = 0

    def __bool__(self) -> bool:
        return self.free


def _chain_of(mu) -> MarkovChain:
    if isinstance(mu, MarkovMeasure):
        return mu.chain
    if isinstance(mu, MarkovChain):
        return mu
    return MarkovChain.build(mu)


def is_locally_free(mu) -> LocalFreeness:
    """Every ``(a, b)`` is joined by at least two two-step paths.

    Accepts a measure, a chain or a bare matrix.
    """
    Q = _chain_of(mu).Q
    P = (Q > 0).astype(np.int64)
    P2 = P @ P
    lo = int(P2.min())
    if lo >= 2:
        return LocalFreeness(True, None, lo)
    a, b = np.unravel_index(int(P2.argmin()), P2.shape)
    return LocalFreeness(False, (int(a), int(b)), lo)


def mrf_harmonic_constant(mu: MarkovMeasure) -> float:
    """``max |<chi, mu_0^(b)>|`` over boundary pairs and nontrivial single-site characters.

    ``mu_0^(b)`` is the law of ``a_0`` given ``a_{-1}, a_1``, proportional to
    ``Q[a_{-1}, .] * Q[., a_1]``.
    """
    lf = is_locally_free(mu)
    if not lf:
        raise PreconditionError(f"chain is not locally free (pair {lf.witness} has {lf.min_paths} paths)")
    Q, pi = mu.Q, mu.pi
    vecs = symbol_vectors(mu.p, mu.s)
    phases = roots(mu.p)[(nonzero_frequencies(mu.p, mu.s) @ vecs.T) % mu.p]  # (|A|-1, |A|)
    best = 0.0
    for left in range(len(pi)):
        if pi[left] <= 0:
            continue
        for right in range(len(pi)):
            w = Q[left] * Q[:, right]
            z = w.sum()
            if z <= 0:
                continue
            best = max(best, float(np.abs(phases @ (w / z)).max()))
    if best >= 1 - 1e-9:
        raise RuntimeError("conditional constant is not below 1 for a locally free chain")
    return best


def word_probability(mu, word) -> float:
    return mu.engine().cylinder(list(word))


def markov_word_test(mu, v, k: int, tol: float = 1e-9) -> bool:
    """Does the word ``v`` make every past of length ``<= k`` independent of every future?"""
    if k < 1:
        raise ValueError("context length must be at least 1")
    if isinstance(mu, IrdiMeasure):
        raise TypeError("word probabilities need a Markov or quasi-Markov model")
    v = list(v)
    eng = mu.engine()
    pv = eng.cylinder(v)
    if pv <= 0:
        raise ValueError(f"word {v} has probability zero")
    A = mu.alphabet_size
    ctx = [list(w) for L in range(k + 1) for w in itertools.product(range(A), repeat=L)]
    left = {tuple(u): eng.cylinder(u + v) for u in ctx}
    right = {tuple(w): eng.cylinder(v + w) for w in ctx}
    for u in ctx:
        puv = left[tuple(u)]
        for w in ctx:
            if abs(eng.cylinder(u + v + w) * pv - puv * right[tuple(w)]) > tol * pv * pv:
                return False
    return True


@dataclass(frozen=True)
class HarmonicBound:
    value: float
    argmax: Character | None
    scanned: int
    exhaustive: bool
    coverage: float


def _support_sets(span_max: int, rank_max: int):
    for r in range(1, rank_max + 1):
        for rest in itertools.combinations(range(1, span_max), r - 1):
            yield (0,) + rest


def character_count(alphabet: int, span_max: int, rank_max: int) -> int:
    return sum(math.comb(span_max - 1, r - 1) * (alphabet - 1) ** r for r in range(1, rank_max + 1))


def _freq_assignments(p: int, s: int, r: int):
    vecs = [tuple(int(x) for x in v) for v in nonzero_frequencies(p, s)]
    return itertools.product(vecs, repeat=r)


def iter_characters(p: int, s: int, span_max: int, rank_max: int):
    """Characters with site 0 in the support, sites in ``[0, span_max)``, rank ``<= rank_max``."""
    for sites in _support_sets(span_max, rank_max):
        for fr in _freq_assignments(p, s, len(sites)):
            yield Character(p, s, tuple(zip(sites, fr)))


def batch_expectations(mu, chars: list[Character], span: int) -> np.ndarray:
    """Exact expectations for characters supported in ``[0, span)``."""
    from . import expectation

    if isinstance(mu, IrdiMeasure) or not chars:
        return np.array([expectation(mu, c).value for c in chars], dtype=complex)
    vecs = symbol_vectors(mu.p, mu.s)
    tables = np.zeros((len(chars), span, len(vecs)), dtype=np.int64)
    for i, c in enumerate(chars):
        for k, u in c.freqs:
            tables[i, k] = (vecs @ np.array(u)) % mu.p
    return mu.engine().batch(tables, mu.p)


def harmonic_bound_estimate(
    mu, rank_max: int, span_max: int, budget: int = 200_000, seed: int = 0, batch: int = 4096
) -> HarmonicBound:
    """``max |<chi, mu>|`` over nontrivial characters anchored at site 0.

    Exhaustive when the character count fits ``budget``; otherwise ``budget``
    characters are drawn at random and the covered fraction is reported.
    """
    A = mu.alphabet_size
    total = character_count(A, span_max, rank_max)
    if total <= budget:
        source = iter_characters(mu.p, mu.s, span_max, rank_max)
        exhaustive, count = True, total
    else:
        rng = np.random.default_rng(seed)
        vecs = [tuple(int(x) for x in v) for v in nonzero_frequencies(mu.p, mu.s)]

        def draw():
            for _ in range(budget):
                r = int(rng.integers(1, rank_max + 1))
                rest = sorted(rng.choice(np.arange(1, span_max), size=r - 1, replace=False).tolist())
                sites = [0] + rest
                fr = [vecs[int(i)] for i in rng.integers(0, len(vecs), size=r)]
                yield Character(mu.p, mu.s, tuple(zip(sites, fr)))

        source = draw()
        exhaustive, count = False, budget
    best, arg = -1.0, None
    while True:
        chunk = list(itertools.islice(source, batch))
        if not chunk:
            break
        vals = np.abs(batch_expectations(mu, chunk, span_max))
        i = int(vals.argmax())
        if vals[i] > best:
            best, arg = float(vals[i]), chunk[i]
    return HarmonicBound(best, arg, count, exhaustive, min(1.0, count / total))


# ------------------------------------------------------------------ entropy


def entropy_rate(mu: MarkovMeasure) -> float:
    """``-sum_ij pi_i Q_ij log2 Q_ij`` in bits per symbol."""
    Q, pi = mu.Q, mu.pi
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(Q > 0, Q * np.log2(np.where(Q > 0, Q, 1.0)), 0.0)
    return float(-(pi[:, None] * terms).sum())


def _shannon(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def block_entropy(mu, N: int, max_words: int = 1 << 22) -> float:
    """Shannon entropy in bits of the block ``a_[0, N)``."""
    if N < 0:
        raise ValueError("block length must be non-negative")
    if N == 0:
        return 0.0
    if isinstance(mu, MarkovMeasure):
        return _shannon(np.asarray(mu.pi)) + (N - 1) * entropy_rate(mu)
    if isinstance(mu, IrdiMeasure):
        raise TypeError("use irdi_entropy_profile for the IRDI measure")
    A = mu.alphabet_size
    if A**N > max_words:
        raise ValueError(f"{A ** N} words exceed the enumeration limit")
    eng = mu.engine()
    T = eng.T if eng.dense else eng.T.toarray()
    masks = np.stack([(eng.obs == a).astype(float) for a in range(A)])  # (A, states)
    F = np.real(eng.init)[None, :] * masks  # forward vectors per word
    for _ in range(N - 1):
        F = ((F @ T)[:, None, :] * masks[None, :, :]).reshape(-1, T.shape[0])
    return _shannon(F.sum(axis=1))


def entropy_profile(mu, Ns) -> list[tuple[int, float]]:
    """Per-symbol block entropies ``H(N) / N``."""
    return [(N, block_entropy(mu, N) / N) for N in Ns]


def conditional_entropy(mu, N: int) -> float:
    """``H(a_N | a_[0, N))`` as a difference of block entropies."""
    return block_entropy(mu, N + 1) - block_entropy(mu, N)


__all__ = [
    "HarmonicBound",
    "LocalFreeness",
    "batch_expectations",
    "binary_entropy",
    "block_entropy",
    "character_count",
    "conditional_entropy",
    "entropy_profile",
    "entropy_rate",
    "harmonic_bound_estimate",
    "is_locally_free",
    "iter_characters",
    "markov_word_test",
    "mrf_harmonic_constant",
    "word_probability",
]
