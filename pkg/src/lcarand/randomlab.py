"""Randomization diagnostics for automata acting on measures.

The central object is the spectral trajectory ``j -> <chi o Phi^j, mu>``.
Asymptotic statements become finite-horizon verdicts: a threshold ``eps``, a
target density and a horizon, all recorded alongside the result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .characters import Character, dilate, ldm, pullback
from .lca import LcaPolynomial, power_fast, s_rank
from .lucas import DensityReport, PreconditionError, density_report
from .measures import (
    ConfigurationError,
    IrdiMeasure,
    MarkovMeasure,
    QuasiMarkovMeasure,
    SpectralValue,
    expectation,
    harmonic_bound_estimate,
    is_locally_free,
    monte_carlo_image_expectation,
    mrf_harmonic_constant,
)
from .measures.base import CHUNK, make_rng, symbol_vectors
from .measures.diagnostics import batch_expectations, iter_characters

DEFAULT_EPS = 0.05
DEFAULT_TARGET = 0.9


def model_id(mu) -> str:
    if isinstance(mu, IrdiMeasure):
        return f"{mu.name}(alpha={mu.alpha!r},nmax={mu.n_max})"
    return f"{getattr(mu, 'name', type(mu).__name__)}(p={mu.p},s={mu.s})"


def _pmap(fn: Callable, items: Sequence, threads: int):
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class SpectralTrajectory:
    entries: tuple[tuple[int, SpectralValue], ...]
    chi: Character
    phi: LcaPolynomial
    model: str
    parameters: dict = field(default_factory=dict, compare=False)

    @property
    def indices(self) -> list[int]:
        return [j for j, _ in self.entries]

    @property
    def values(self) -> np.ndarray:
        return np.array([v.value for _, v in self.entries], dtype=complex)

    @property
    def methods(self) -> list[str]:
        return [v.provenance for _, v in self.entries]

    def rows(self) -> list[tuple]:
        """``(j, re, im, abs, method, stderr)`` rows for CSV output."""
        out = []
        for j, v in self.entries:
            err = v.stderr if v.stderr is not None else (v.error_bound if v.error_bound is not None else 0.0)
            out.append((j, v.value.real, v.value.imag, abs(v.value), v.provenance, err))
        return out


def _has_exact(mu) -> bool:
    return isinstance(mu, (MarkovMeasure, QuasiMarkovMeasure, IrdiMeasure))


def spectral_trajectory(
    mu,
    phi: LcaPolynomial,
    chi: Character,
    j_max: int,
    method: str = "auto",
    samples: int = 0,
    seed: int = 0,
    threads: int = 1,
    j_min: int = 0,
) -> SpectralTrajectory:
    """``<pullback(chi, Phi^j), mu>`` for ``j_min <= j <= j_max``.

    ``method`` is ``exact``, ``monte-carlo`` or ``auto`` (exact when the model
    has an exact backend).  Monte Carlo entries sample a window, apply
    ``Phi^j`` and evaluate ``chi``; entry ``j`` uses stream ``j``.
    """
    if phi.p != chi.p:
        raise ValueError(f"mismatched moduli {phi.p} and {chi.p}")
    if j_max < max(1, j_min):
        raise ValueError("need j_max >= 1 and j_max >= j_min")
    if method not in ("auto", "exact", "monte-carlo"):
        raise ConfigurationError(f"unknown method {method!r}")
    use_exact = method == "exact" or (method == "auto" and _has_exact(mu))
    if use_exact and not _has_exact(mu):
        raise ConfigurationError("no exact backend for this model")
    if not use_exact and samples <= 0:
        raise ConfigurationError("Monte Carlo needs samples > 0")

    def entry(j: int) -> tuple[int, SpectralValue]:
        pj = power_fast(phi, j)
        if use_exact:
            return j, expectation(mu, pullback(chi, pj))
        return j, monte_carlo_image_expectation(mu, pj, chi, samples, seed, stream=j)

    entries = _pmap(entry, list(range(j_min, j_max + 1)), threads)
    params = {"j_min": j_min, "j_max": j_max, "method": "exact" if use_exact else "monte-carlo",
              "samples": samples, "seed": seed}
    return SpectralTrajectory(tuple(entries), chi, phi, model_id(mu), params)


@dataclass(frozen=True)
class RandomizationVerdict:
    epsilon: float
    density_below: DensityReport
    target: float
    passed: bool

    @property
    def density(self) -> float:
        return float(self.density_below.density)


def cesaro_report(traj: SpectralTrajectory, eps: float = DEFAULT_EPS, target: float = DEFAULT_TARGET) -> RandomizationVerdict:
    """Density of ``{j : |value_j| < eps}`` along the trajectory."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    rep = density_report(abs(v.value) < eps for _, v in traj.entries)
    return RandomizationVerdict(eps, rep, target, float(rep.density) >= target)


def lucas_mixing_test(mu, chi: Character, h_max: int, threads: int = 1, h_min: int = 0) -> SpectralTrajectory:
    """``<chi^[h], mu>`` for ``h_min <= h <= h_max``, the automaton being ``1 + x``."""
    if chi.p != mu.p:
        raise ValueError("character and model use different moduli")

    def entry(h: int):
        return h, expectation(mu, dilate(chi, h))

    entries = _pmap(entry, list(range(h_min, h_max + 1)), threads)
    one_plus = LcaPolynomial.from_terms({0: 1, 1: 1}, chi.p)
    return SpectralTrajectory(tuple(entries), chi, one_plus, model_id(mu), {"h_min": h_min, "h_max": h_max, "ldm": ldm(chi)})


@dataclass(frozen=True)
class DispersionResult:
    S: int
    ranks: tuple[tuple[int, int], ...]
    reports: dict

    def report(self, R: int) -> DensityReport:
        return self.reports[R]


def dispersion_trajectory(
    phi: LcaPolynomial, chi: Character, S: int, j_max: int, ladder: Sequence[int] = (1, 2, 4, 8, 16)
) -> DispersionResult:
    """``s_rank_S(chi o Phi^j)`` for ``0 <= j < j_max`` plus, per ``R``, the density of rank ``> R``."""
    if S < 1:
        raise ValueError("S must be at least 1")
    ranks = []
    for j in range(j_max):
        c = pullback(chi, power_fast(phi, j))
        ranks.append((j, s_rank(c.sites, S) if not c.is_trivial else 0))
    reports = {R: density_report(r > R for _, r in ranks) for R in ladder}
    return DispersionResult(S, tuple(ranks), reports)


# ------------------------------------------------------------ empirical TV


@dataclass(frozen=True)
class EmpiricalRandomization:
    w: int
    cells: int
    samples: int
    indices: tuple[int, ...]
    tv: tuple[float, ...]

    @property
    def noise_floor(self) -> float:
        return math.sqrt(self.cells / self.samples)

    @property
    def cesaro_tv(self) -> np.ndarray:
        t = np.asarray(self.tv)
        return np.cumsum(t) / np.arange(1, len(t) + 1)


def _binary_counts(sym: np.ndarray, powers, lo: int, w: int, counts: np.ndarray) -> None:
    # samples packed 8 per byte along axis 1, so each term is one XOR of rows
    size = sym.shape[0]
    packed = np.packbits(sym.T.astype(np.uint8), axis=1)  # (length, size/8)
    for i, pj in enumerate(powers):
        acc = np.zeros((w, packed.shape[1]), dtype=np.uint8)
        for e, _ in pj.terms:
            acc ^= packed[e - lo : e - lo + w]
        bits = np.unpackbits(acc, axis=1, count=size).astype(np.int64)
        code = np.zeros(size, dtype=np.int64)
        for t in range(w):
            code = code * 2 + bits[t]
        counts[i] += np.bincount(code, minlength=counts.shape[1])


def empirical_randomization(
    mu, phi: LcaPolynomial, w: int, j_max: int, samples: int, seed: int = 0, j_min: int = 0
) -> EmpiricalRandomization:
    """Total variation between the empirical law of ``Phi^j(a)`` on ``w`` sites and uniform.

    One batch of long windows is drawn and reused for every ``j``; each
    output uses only sites where ``Phi^j`` needs no wraparound.
    """
    if w < 1 or w > 8:
        raise ConfigurationError("window width must be between 1 and 8")
    if samples < 10_000:
        raise ConfigurationError("need at least 10^4 samples")
    A = mu.p**mu.s
    cells = A**w
    if cells > samples:
        raise ConfigurationError(f"{cells} cells cannot be estimated from {samples} samples")
    lo = min(0, phi.terms[0][0]) * j_max
    hi = max(0, phi.terms[-1][0]) * j_max
    length = w + hi - lo
    js = list(range(j_min, j_max + 1))
    powers = [power_fast(phi, j) for j in js]
    counts = np.zeros((len(js), cells), dtype=np.int64)
    vecs = symbol_vectors(mu.p, mu.s).astype(np.int64)
    weights = mu.p ** np.arange(mu.s)
    for c in range(math.ceil(samples / CHUNK)):
        size = min(CHUNK, samples - c * CHUNK)
        sym = mu.sample_symbols(length, size, make_rng(seed, 0, c))
        if mu.p == 2 and mu.s == 1:
            _binary_counts(sym, powers, lo, w, counts)
            continue
        base = vecs[sym]  # (size, length, s)
        for i, pj in enumerate(powers):
            out = np.zeros((size, w, mu.s), dtype=np.int64)
            for e, coef in pj.terms:
                start = e - lo
                out += coef * base[:, start : start + w]
            out %= mu.p
            code = np.zeros(size, dtype=np.int64)
            for t in range(w):
                code = code * A + (out[:, t] * weights).sum(axis=1)
            counts[i] += np.bincount(code, minlength=cells)
    tvs = [0.5 * float(np.abs(row / samples - 1.0 / cells).sum()) for row in counts]
    return EmpiricalRandomization(w, cells, samples, tuple(js), tuple(tvs))


# ------------------------------------------------------------ demonstrations


def even_shift_demo(N_max: int, mu: QuasiMarkovMeasure | None = None) -> list[tuple[int, float, int]]:
    """Rows ``(N, <chi_N, nu>, rank chi_N)`` with ``chi_N`` the parity of sites ``0..N``."""
    from .measures import even_shift

    if N_max < 1:
        raise ValueError("N_max must be at least 1")
    nu = mu if mu is not None else even_shift()
    eng = nu.engine()
    sign = np.where(eng.obs == 1, -1.0, 1.0)
    v = np.real(eng.init) * sign
    rows = [(0, float(v.sum()), 1)]
    for N in range(1, N_max + 1):
        v = eng.step(v, 1) * sign
        rows.append((N, float(v.sum()), N + 1))
    return rows


def even_shift_limit(mu: QuasiMarkovMeasure | None = None) -> float:
    """``r0^2 + 2 r1 r2 - r1^2 - r2^2`` from the hidden stationary vector."""
    from .measures import even_shift

    nu = mu if mu is not None else even_shift()
    r0, r1, r2 = (float(x) for x in nu.hidden.pi)
    return r0 * r0 + 2 * r1 * r2 - r1 * r1 - r2 * r2


def mrf_hm_demo(
    mu: MarkovMeasure, ranks: Sequence[int] = tuple(range(1, 9)), span: int = 16, budget: int = 200_000
) -> list[tuple[int, float, float, int]]:
    """Rows ``(K, max |<chi, mu>| over rank-K characters, c**ceil(K/3), count)``.

    Characters are anchored at site 0 with support inside ``[0, span)``; the
    scan is exhaustive when the count fits ``budget``.
    """
    lf = is_locally_free(mu)
    if not lf:
        raise PreconditionError(f"chain is not locally free (pair {lf.witness})")
    c = mrf_harmonic_constant(mu)
    rows = []
    for K in ranks:
        chars = [ch for ch in iter_characters(mu.p, mu.s, span, K) if ch.rank == K]
        if len(chars) > budget:
            rng = np.random.default_rng(K)
            chars = [chars[i] for i in rng.choice(len(chars), size=budget, replace=False)]
        worst = 0.0
        for i in range(0, len(chars), 4096):
            vals = np.abs(batch_expectations(mu, chars[i : i + 4096], span))
            worst = max(worst, float(vals.max()))
        rows.append((K, worst, c ** math.ceil(K / 3), len(chars)))
    return rows


def irdi_demo(alpha: float = 0.8, levels: Sequence[int] = range(4, 11), h_max: int = 256, n_max: int = 24):
    """Entropy profile and Lucas-mixing trajectory for the IRDI measure."""
    from .measures import irdi_entropy_profile

    mu = IrdiMeasure(alpha, n_max)
    profile = irdi_entropy_profile(mu, levels)
    traj = lucas_mixing_test(mu, Character.parity([0]), h_max)
    return profile, traj


__all__ = [
    "DispersionResult",
    "EmpiricalRandomization",
    "RandomizationVerdict",
    "SpectralTrajectory",
    "cesaro_report",
    "dispersion_trajectory",
    "empirical_randomization",
    "even_shift_demo",
    "even_shift_limit",
    "harmonic_bound_estimate",
    "irdi_demo",
    "lucas_mixing_test",
    "model_id",
    "mrf_hm_demo",
    "spectral_trajectory",
]
