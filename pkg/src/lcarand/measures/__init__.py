"""Measure models with exact character expectations and reproducible samplers."""

from __future__ import annotations

import numpy as np

from ..characters import Character
from ..lca import LcaPolynomial, Window, apply_array
from .base import (
    CHUNK,
    ConfigurationError,
    ResourceCapError,
    SpectralValue,
    chunked,
    make_rng,
    mc_summary,
    phase_tables,
    symbol_vectors,
)
from .diagnostics import (
    HarmonicBound,
    LocalFreeness,
    batch_expectations,
    block_entropy,
    conditional_entropy,
    entropy_profile,
    entropy_rate,
    harmonic_bound_estimate,
    is_locally_free,
    markov_word_test,
    mrf_harmonic_constant,
)
from .irdi import (
    IncrementLaw,
    IrdiMeasure,
    char_expectation_irdi,
    infinite_expectation,
    irdi_entropy_profile,
    irdi_increment_prob,
    sample_infinite,
    site_variables,
)
from .markov import (
    MarkovChain,
    MarkovMeasure,
    QuasiMarkovMeasure,
    bernoulli,
    even_shift,
    markov,
    n_step_markov,
    point_mass_zero,
)

MeasureModel = MarkovMeasure | QuasiMarkovMeasure | IrdiMeasure


def _check_alphabet(mu, chi: Character) -> None:
    if (chi.p, chi.s) != (mu.p, mu.s):
        raise ValueError(f"character over (Z/{chi.p})^{chi.s} does not match the model's (Z/{mu.p})^{mu.s}")


def char_expectation_markov(mu: MarkovMeasure, chi: Character) -> SpectralValue:
    _check_alphabet(mu, chi)
    return SpectralValue(mu.engine().character(chi), "exact")


def char_expectation_quasi(nu: QuasiMarkovMeasure, chi: Character) -> SpectralValue:
    _check_alphabet(nu, chi)
    return SpectralValue(nu.engine().character(chi), "exact")


def expectation(mu, chi: Character, tol: float | None = None) -> SpectralValue:
    """Exact (or truncated-exact) ``<chi, mu>`` for any supported model."""
    if isinstance(mu, MarkovMeasure):
        return char_expectation_markov(mu, chi)
    if isinstance(mu, QuasiMarkovMeasure):
        return char_expectation_quasi(mu, chi)
    if isinstance(mu, IrdiMeasure):
        return char_expectation_irdi(mu, chi, tol)
    raise TypeError(f"unsupported model {type(mu).__name__}")


def sample_batch(mu, length: int, n: int, seed: int = 0, stream: int = 0) -> np.ndarray:
    """``n`` stationary windows of symbol indices, shape ``(n, length)``.

    Sample ``i`` is drawn from counter block ``i // CHUNK`` of ``(seed, stream)``.
    """
    if length < 1:
        raise ValueError("window must be non-empty")
    return chunked(n, seed, stream, lambda rng, size: mu.sample_symbols(length, size, rng)).reshape(n, length)


def sample(mu, a: int, b: int, seed: int = 0, stream: int = 0) -> Window:
    """One configuration on sites ``[a, b)``."""
    if b <= a:
        raise ValueError("need b > a")
    sym = mu.sample_symbols(b - a, 1, make_rng(seed, stream, 0))[0]
    return Window(symbol_vectors(mu.p, mu.s)[sym], a, mu.p)


def monte_carlo_expectation(mu, chi: Character, samples: int, seed: int = 0, stream: int = 0) -> SpectralValue:
    """Sample mean of ``chi`` with its standard error."""
    _check_alphabet(mu, chi)
    if samples < 1:
        raise ConfigurationError("Monte Carlo needs at least one sample")
    if chi.is_trivial:
        return SpectralValue(1.0 + 0j, "monte-carlo", stderr=0.0, samples=samples)
    sites, table = phase_tables(chi)
    rel = np.array(sites) - sites[0]

    def angles(rng, size):
        win = mu.sample_symbols(int(rel[-1]) + 1, size, rng)
        return table[np.arange(len(sites))[None, :], win[:, rel]].sum(axis=1) % mu.p

    return mc_summary(chunked(samples, seed, stream, angles).astype(np.int64), mu.p)


def monte_carlo_image_expectation(
    mu, phi: LcaPolynomial, chi: Character, samples: int, seed: int = 0, stream: int = 0
) -> SpectralValue:
    """Sample mean of ``chi(Phi(a))``: sample, apply the automaton, evaluate."""
    _check_alphabet(mu, chi)
    if samples < 1:
        raise ConfigurationError("Monte Carlo needs at least one sample")
    if chi.is_trivial:
        return SpectralValue(1.0 + 0j, "monte-carlo", stderr=0.0, samples=samples)
    sites, table = phase_tables(chi)
    span = sites[-1] - sites[0] + 1
    length = span + phi.diam
    rel = np.array(sites) - sites[0]
    vecs = symbol_vectors(mu.p, mu.s)
    weights = mu.p ** np.arange(mu.s)

    def angles(rng, size):
        win = vecs[mu.sample_symbols(length, size, rng)]  # (size, length, s)
        out, _ = apply_array(phi, win, axis=1)
        sym = (out * weights).sum(axis=2)
        return table[np.arange(len(sites))[None, :], sym[:, rel]].sum(axis=1) % mu.p

    return mc_summary(chunked(samples, seed, stream, angles).astype(np.int64), mu.p)


__all__ = [
    "CHUNK",
    "ConfigurationError",
    "HarmonicBound",
    "IncrementLaw",
    "IrdiMeasure",
    "LocalFreeness",
    "MarkovChain",
    "MarkovMeasure",
    "MeasureModel",
    "QuasiMarkovMeasure",
    "ResourceCapError",
    "SpectralValue",
    "batch_expectations",
    "bernoulli",
    "block_entropy",
    "char_expectation_irdi",
    "char_expectation_markov",
    "char_expectation_quasi",
    "conditional_entropy",
    "entropy_profile",
    "entropy_rate",
    "even_shift",
    "expectation",
    "harmonic_bound_estimate",
    "infinite_expectation",
    "irdi_entropy_profile",
    "irdi_increment_prob",
    "is_locally_free",
    "make_rng",
    "markov",
    "markov_word_test",
    "monte_carlo_expectation",
    "monte_carlo_image_expectation",
    "mrf_harmonic_constant",
    "n_step_markov",
    "point_mass_zero",
    "sample",
    "sample_batch",
    "sample_infinite",
    "site_variables",
]
