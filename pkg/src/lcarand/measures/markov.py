"""Markov and quasi-Markov (hidden Markov, sofic) measures on ((Z/p)^s)^Z.

Expectations of characters are twisted transfer products
``pi D_0 Q^g1 D_1 ... 1`` where ``D_k`` is the diagonal of character values
at site ``k``.  A quasi-Markov measure is handled through the chain of
sliding hidden windows, so both cases share one engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ..characters import Character
from .base import (
    ResourceCapError,
    phase_tables,
    roots,
    symbol_vectors,
)

ROW_TOL = 1e-12
PI_TOL = 1e-10
QUASI_STATE_CAP = 200_000
DENSE_LIMIT = 512


def as_matrix(Q) -> np.ndarray:
    """Accept nested sequences of floats, ints, Fractions or strings like ``'2/3'``."""
    rows = [[float(Fraction(x)) if isinstance(x, str) else float(x) for x in row] for row in Q]
    M = np.array(rows, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"transition matrix must be square, got shape {M.shape}")
    return M


def stationary_vector(Q: np.ndarray, tol: float = 1e-13, max_iter: int = 1_000_000) -> np.ndarray:
    """Left Perron vector by power iteration on the lazy chain ``(I + Q) / 2``.

    The lazy chain has the same stationary vectors and is aperiodic, so the
    iteration converges for periodic ``Q`` too.
    """
    n = Q.shape[0]
    P = 0.5 * (np.eye(n) + Q)
    v = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        v = v @ P
        v /= v.sum()
        if np.abs(v @ Q - v).max() < tol:
            return v
        # repeated squaring gives v0 P^(2^k); only worth it for small chains
        if n <= DENSE_LIMIT:
            P = P @ P
            P /= P.sum(axis=1, keepdims=True)
    raise RuntimeError("power iteration did not converge")


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """Row-stochastic chain on states ``0..n-1`` with a stationary vector."""

    Q: np.ndarray
    pi: np.ndarray

    @classmethod
    def build(cls, Q, pi=None) -> MarkovChain:
        Qm = as_matrix(Q)
        if (Qm < 0).any():
            raise ValueError("transition probabilities must be non-negative")
        bad = np.abs(Qm.sum(axis=1) - 1.0)
        if bad.max() > ROW_TOL:
            i = int(bad.argmax())
            raise ValueError(f"row {i} of Q sums to {Qm[i].sum()!r}, not 1")
        if pi is None:
            piv = stationary_vector(Qm)
        else:
            piv = np.array([float(Fraction(x)) if isinstance(x, str) else float(x) for x in pi])
            if piv.shape != (Qm.shape[0],) or (piv < 0).any() or abs(piv.sum() - 1) > PI_TOL:
                raise ValueError("pi must be a probability vector matching Q")
            if np.abs(piv @ Qm - piv).max() > PI_TOL:
                raise ValueError("supplied pi is not stationary for Q")
        Qm.setflags(write=False)
        piv.setflags(write=False)
        return cls(Qm, piv)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MarkovChain)
            and self.Q.shape == other.Q.shape
            and np.array_equal(self.Q, other.Q)
            and np.allclose(self.pi, other.pi, atol=PI_TOL)
        )

    __hash__ = None  # type: ignore[assignment]


class _Engine:
    """Twisted transfer products for a stationary chain observed through ``obs``."""

    def __init__(self, init: np.ndarray, T, obs: np.ndarray):
        self.init = init
        self.obs = obs
        self.dense = not sp.issparse(T)
        self.T = T
        self.TT = None if self.dense else T.T.tocsr()
        self._pow: dict[int, np.ndarray] = {}

    def step(self, v: np.ndarray, gap: int) -> np.ndarray:
        if gap == 0:
            return v
        if self.dense:
            P = self._pow.get(gap)
            if P is None:
                P = np.linalg.matrix_power(self.T, gap)
                if len(self._pow) < 4096:
                    self._pow[gap] = P
            return v @ P
        for _ in range(gap):
            v = self.TT @ v
        return v

    def twisted(self, sites: Sequence[int], diag: np.ndarray) -> complex:
        """``init D_0 T^g ... D_last 1`` with ``diag[i]`` the per-state factor at ``sites[i]``."""
        if not len(sites):
            return 1.0 + 0j
        v = self.init * diag[0]
        for i in range(1, len(sites)):
            v = self.step(v, sites[i] - sites[i - 1]) * diag[i]
        return complex(v.sum())

    def character(self, chi: Character) -> complex:
        sites, table = phase_tables(chi)
        if not sites:
            return 1.0 + 0j
        w = roots(chi.p)
        diag = w[table[:, self.obs]]
        return self.twisted(sites, diag)

    def cylinder(self, word: Sequence[int]) -> float:
        """Probability that sites ``0..len-1`` read ``word`` (symbol indices)."""
        if not len(word):
            return 1.0
        diag = np.array([(self.obs == a).astype(float) for a in word])
        return float(self.twisted(range(len(word)), diag).real)

    def batch(self, tables: np.ndarray, p: int) -> np.ndarray:
        """Expectations for many characters at once.

        ``tables`` has shape ``(n_chars, span, |A|)`` of angle indices, with
        zero rows where a character has no site.
        """
        w = roots(p)
        diag = w[tables[:, :, self.obs]]
        V = self.init[None, :] * diag[:, 0, :]
        for t in range(1, tables.shape[1]):
            V = (V @ self.T if self.dense else (self.T.T @ V.T).T) * diag[:, t, :]
        return V.sum(axis=1)


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Stationary Markov measure on the alphabet ``(Z/p)^s`` (``p**s`` symbols)."""

    p: int
    s: int
    chain: MarkovChain
    name: str = "markov"
    _engine: _Engine = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.chain.n != self.p**self.s:
            raise ValueError(f"chain has {self.chain.n} states but the alphabet has {self.p ** self.s}")
        eng = _Engine(np.asarray(self.chain.pi, dtype=complex), self.chain.Q, np.arange(self.chain.n))
        object.__setattr__(self, "_engine", eng)

    @property
    def Q(self) -> np.ndarray:
        return self.chain.Q

    @property
    def pi(self) -> np.ndarray:
        return self.chain.pi

    @property
    def alphabet_size(self) -> int:
        return self.p**self.s

    @property
    def kind(self) -> str:
        return "markov"

    def engine(self) -> _Engine:
        return self._engine

    def __eq__(self, other) -> bool:
        return isinstance(other, MarkovMeasure) and (self.p, self.s) == (other.p, other.s) and self.chain == other.chain

    __hash__ = None  # type: ignore[assignment]

    def sample_symbols(self, length: int, n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_chain(self.chain, length, n, rng)


def markov(Q, p: int = 2, s: int = 1, pi=None, name: str = "markov") -> MarkovMeasure:
    return MarkovMeasure(p, s, MarkovChain.build(Q, pi), name)


def bernoulli(probs=None, p: int = 2, s: int = 1) -> MarkovMeasure:
    """I.i.d. measure; uniform (Haar) when ``probs`` is omitted."""
    n = p**s
    if probs is None:
        probs = [1.0 / n] * n
    probs = [float(Fraction(x)) if isinstance(x, str) else float(x) for x in probs]
    if len(probs) != n:
        raise ValueError(f"need {n} symbol probabilities")
    return MarkovMeasure(p, s, MarkovChain.build([probs] * n, probs), "bernoulli")


def point_mass_zero(p: int = 2, s: int = 1) -> MarkovMeasure:
    n = p**s
    row = [1.0] + [0.0] * (n - 1)
    return MarkovMeasure(p, s, MarkovChain.build([row] * n, row), "point-mass")


def sample_chain(chain: MarkovChain, length: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent stationary paths of the given length, shape ``(n, length)``."""
    cdf0 = np.cumsum(chain.pi)
    cdf = np.cumsum(chain.Q, axis=1)
    cdf0[-1] = 1.0
    cdf[:, -1] = 1.0
    out = np.empty((n, length), dtype=np.int32)
    cur = np.searchsorted(cdf0, rng.random(n), side="right")
    out[:, 0] = cur
    for t in range(1, length):
        cur = (rng.random(n)[:, None] >= cdf[cur]).sum(axis=1)
        out[:, t] = cur
    return out


@dataclass(frozen=True, eq=False)
class QuasiMarkovMeasure:
    """Image of a stationary hidden chain under a sliding block map.

    ``psi[code]`` is the output symbol index for the hidden window
    ``(b_{m-left}, ..., b_{m+right})`` whose code is its base-``|B|`` value
    read with the leftmost state most significant.
    """

    p: int
    s: int
    hidden: MarkovChain
    psi: tuple[int, ...]
    left: int = 0
    right: int = 0
    name: str = "quasi"
    state_cap: int = QUASI_STATE_CAP

    def __post_init__(self):
        w = self.left + self.right + 1
        if self.left < 0 or self.right < 0:
            raise ValueError("radii must be non-negative")
        if len(self.psi) != self.hidden.n**w:
            raise ValueError(f"block map needs {self.hidden.n ** w} entries, got {len(self.psi)}")
        if any(not 0 <= a < self.p**self.s for a in self.psi):
            raise ValueError("block map values must be symbol indices")
        object.__setattr__(self, "_engine_cache", None)

    @property
    def width(self) -> int:
        return self.left + self.right + 1

    @property
    def alphabet_size(self) -> int:
        return self.p**self.s

    @property
    def kind(self) -> str:
        return "quasi"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QuasiMarkovMeasure)
            and (self.p, self.s, self.psi, self.left, self.right) == (other.p, other.s, other.psi, other.left, other.right)
            and self.hidden == other.hidden
        )

    __hash__ = None  # type: ignore[assignment]

    def lifted(self):
        """Admissible hidden windows as a chain: ``(states, init, T)``.

        Raises :class:`ResourceCapError` when more than ``state_cap`` windows
        carry positive probability.
        """
        Q, pi, B, w = self.hidden.Q, self.hidden.pi, self.hidden.n, self.width
        probs = {(b,): pi[b] for b in range(B) if pi[b] > 0}
        for _ in range(w - 1):
            nxt = {}
            for win, pr in probs.items():
                for b in np.nonzero(Q[win[-1]] > 0)[0]:
                    nxt[win + (int(b),)] = pr * Q[win[-1], b]
                    if len(nxt) > self.state_cap:
                        raise ResourceCapError(
                            f"window lift exceeds {self.state_cap} states; use Monte Carlo instead"
                        )
            probs = nxt
        states = sorted(probs)
        index = {st: i for i, st in enumerate(states)}
        rows, cols, vals = [], [], []
        for i, st in enumerate(states):
            for b in np.nonzero(Q[st[-1]] > 0)[0]:
                j = index.get(st[1:] + (int(b),))
                if j is not None:
                    rows.append(i)
                    cols.append(j)
                    vals.append(Q[st[-1], b])
        n = len(states)
        T = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        if n <= DENSE_LIMIT:
            T = T.toarray()
        init = np.array([probs[st] for st in states])
        return states, init, T

    def engine(self) -> _Engine:
        eng = getattr(self, "_engine_cache")
        if eng is None:
            states, init, T = self.lifted()
            B = self.hidden.n
            codes = [sum(b * B ** (len(st) - 1 - i) for i, b in enumerate(st)) for st in states]
            obs = np.array([self.psi[c] for c in codes], dtype=np.int64)
            eng = _Engine(init.astype(complex), T, obs)
            object.__setattr__(self, "_engine_cache", eng)
        return eng

    def sample_symbols(self, length: int, n: int, rng: np.random.Generator) -> np.ndarray:
        w = self.width
        hid = sample_chain(self.hidden, length + w - 1, n, rng)
        B = self.hidden.n
        code = np.zeros((n, length), dtype=np.int64)
        for j in range(w):
            code = code * B + hid[:, j : j + length]
        return np.asarray(self.psi, dtype=np.int32)[code]


def n_step_markov(kernel, N: int, p: int = 2, s: int = 1, pi=None) -> QuasiMarkovMeasure:
    """An ``N``-step chain given by ``kernel[context, next]`` lifted to blocks of length ``N``.

    ``context`` is the base-``|A|`` code of the previous ``N`` symbols, oldest
    most significant.  The result observes the newest symbol of each block.
    """
    A = p**s
    K = as_matrix_rect(kernel, A**N, A)
    n = A**N
    Q = np.zeros((n, n))
    for ctx in range(n):
        for a in range(A):
            Q[ctx, (ctx * A + a) % n] = K[ctx, a]
    hidden = MarkovChain.build(Q, pi)
    psi = tuple(code % A for code in range(n))
    return QuasiMarkovMeasure(p, s, hidden, psi, 0, 0, name=f"{N}-step-markov")


def as_matrix_rect(K, rows: int, cols: int) -> np.ndarray:
    M = np.array([[float(Fraction(x)) if isinstance(x, str) else float(x) for x in r] for r in K], dtype=float)
    if M.shape != (rows, cols):
        raise ValueError(f"kernel must have shape {(rows, cols)}, got {M.shape}")
    return M


def even_shift() -> QuasiMarkovMeasure:
    """Sofic even shift as the image of a three-state chain.

    The hidden chain follows the 0/1 matrix with rows ``[1,0,1], [1,0,1],
    [0,1,0]`` read column-wise (entry ``(i, j)`` allows ``j -> i``), with every
    allowed move taken with probability 1/2 where there is a choice.  State 0
    maps to symbol 0, states 1 and 2 to symbol 1.
    """
    P = np.array([[0.5, 0.0, 0.5], [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]])
    return QuasiMarkovMeasure(2, 1, MarkovChain.build(P.T), (0, 1, 1), 0, 0, name="even-shift")


def symbol_vectors_of(model, symbols: np.ndarray) -> np.ndarray:
    return symbol_vectors(model.p, model.s)[symbols]


__all__ = [
    "MarkovChain",
    "MarkovMeasure",
    "QuasiMarkovMeasure",
    "bernoulli",
    "even_shift",
    "markov",
    "n_step_markov",
    "point_mass_zero",
    "sample_chain",
    "stationary_vector",
]
