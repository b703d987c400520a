import itertools

import numpy as np
import pytest

from lcarand.characters import Character, root_of_unity
from lcarand.lca import LcaPolynomial
from lcarand.measures import (
    CHUNK,
    ConfigurationError,
    MarkovChain,
    QuasiMarkovMeasure,
    ResourceCapError,
    bernoulli,
    even_shift,
    expectation,
    markov,
    monte_carlo_expectation,
    monte_carlo_image_expectation,
    n_step_markov,
    point_mass_zero,
    sample,
    sample_batch,
)
from lcarand.measures.base import make_rng, symbol_vectors
from lcarand.measures.markov import stationary_vector


def brute_markov(Q, pi, chi, p, s):
    """Sum over every path on the character's span."""
    Q = np.asarray(Q, float)
    vecs = symbol_vectors(p, s)
    lo, hi = chi.sites[0], chi.sites[-1]
    freqs = chi.as_dict()
    total = 0j
    for path in itertools.product(range(len(pi)), repeat=hi - lo + 1):
        pr = pi[path[0]]
        for a, b in zip(path, path[1:]):
            pr *= Q[a, b]
        if pr == 0:
            continue
        ang = sum(int(np.dot(freqs[k], vecs[path[k - lo]])) for k in freqs)
        total += pr * root_of_unity(ang, p)
    return total


def brute_quasi(nu, chi):
    """Enumerate hidden paths and push them through the block map."""
    Q, pi, B = nu.hidden.Q, nu.hidden.pi, nu.hidden.n
    vecs = symbol_vectors(nu.p, nu.s)
    lo, hi = chi.sites[0], chi.sites[-1]
    L = hi - lo + 1
    w = nu.width
    freqs = chi.as_dict()
    total = 0j
    for path in itertools.product(range(B), repeat=L + w - 1):
        pr = pi[path[0]]
        for a, b in zip(path, path[1:]):
            pr *= Q[a, b]
        if pr == 0:
            continue
        ang = 0
        for k, u in freqs.items():
            win = path[k - lo : k - lo + w]
            code = 0
            for b in win:
                code = code * B + b
            ang += int(np.dot(u, vecs[nu.psi[code]]))
        total += pr * root_of_unity(ang, nu.p)
    return total


def random_stochastic(rng, n, zeros=False):
    M = rng.random((n, n))
    if zeros:
        M[rng.random((n, n)) < 0.3] = 0
        M[np.arange(n), rng.integers(0, n, n)] += 0.1
    return M / M.sum(axis=1, keepdims=True)


def random_char(rng, p, s, span=5, k=3):
    sites = sorted(rng.choice(span, size=min(k, span), replace=False).tolist())
    return Character.from_map({int(x): tuple(int(v) for v in rng.integers(0, p, s)) for x in sites}, p, s)


def test_stationary_vector():
    Q = np.array([[0.9, 0.1], [0.4, 0.6]])
    pi = stationary_vector(Q)
    assert np.allclose(pi, [0.8, 0.2], atol=1e-12)
    # periodic chain converges through the lazy version
    pi = stationary_vector(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(pi, [0.5, 0.5], atol=1e-12)


def test_chain_validation():
    with pytest.raises(ValueError, match="row 1"):
        MarkovChain.build([[0.5, 0.5], [0.3, 0.6]])
    with pytest.raises(ValueError):
        MarkovChain.build([[1.5, -0.5], [0.5, 0.5]])
    with pytest.raises(ValueError, match="stationary"):
        MarkovChain.build([[0.9, 0.1], [0.4, 0.6]], pi=[0.5, 0.5])
    with pytest.raises(ValueError):
        MarkovChain.build([[1.0, 0.0, 0.0], [0, 1, 0]])
    c = MarkovChain.build([["2/3", "1/3"], ["1/3", "2/3"]])
    assert np.allclose(c.pi, [0.5, 0.5])
    with pytest.raises(ValueError, match="alphabet"):
        markov([[1.0]], p=2)


@pytest.mark.parametrize("p,s", [(2, 1), (3, 1), (2, 2)])
def test_markov_matches_path_enumeration(p, s):
    rng = np.random.default_rng(10 * p + s)
    n = p**s
    for trial in range(6):
        Q = random_stochastic(rng, n, zeros=trial % 2 == 1)
        mu = markov(Q, p, s)
        for _ in range(4):
            chi = random_char(rng, p, s, span=5 if n <= 3 else 4)
            if chi.is_trivial:
                continue
            got = expectation(mu, chi).value
            assert abs(got - brute_markov(mu.Q, mu.pi, chi, p, s)) < 1e-12


def test_markov_long_gaps_match_matrix_powers():
    Q = np.array([[0.7, 0.3], [0.2, 0.8]])
    mu = markov(Q)
    for g in (1, 5, 40, 300):
        chi = Character.parity([0, g])
        Pg = np.linalg.matrix_power(Q, g)
        d = np.array([1, -1])
        expect = (mu.pi * d) @ Pg @ d
        assert abs(expectation(mu, chi).value - expect) < 1e-12


def test_haar_and_point_mass():
    haar = bernoulli(p=3, s=2)
    rng = np.random.default_rng(0)
    for _ in range(20):
        chi = random_char(rng, 3, 2, span=8, k=4)
        v = expectation(haar, chi).value
        assert abs(v - (1.0 if chi.is_trivial else 0.0)) < 1e-12
    pm = point_mass_zero(5)
    assert abs(expectation(pm, Character.from_map({0: 2, 9: 4}, 5)).value - 1) < 1e-12


def test_bernoulli_single_site_closed_form():
    mu = bernoulli([0.2, 0.5, 0.3], p=3)
    w = root_of_unity(1, 3)
    expect = 0.2 + 0.5 * w + 0.3 * w**2
    chi = Character.from_map({0: 1, 4: 1}, 3)
    assert abs(expectation(mu, chi).value - expect**2) < 1e-12


def test_alphabet_mismatch():
    with pytest.raises(ValueError, match="match"):
        expectation(bernoulli(p=2), Character.parity([0], 3))


def test_quasi_matches_hidden_enumeration():
    rng = np.random.default_rng(5)
    for left, right in [(0, 0), (1, 0), (0, 1), (1, 1)]:
        B = 3
        Q = random_stochastic(rng, B, zeros=True)
        hidden = MarkovChain.build(Q)
        psi = tuple(int(x) for x in rng.integers(0, 2, B ** (left + right + 1)))
        nu = QuasiMarkovMeasure(2, 1, hidden, psi, left, right)
        for _ in range(5):
            chi = random_char(rng, 2, 1, span=4)
            if chi.is_trivial:
                continue
            assert abs(expectation(nu, chi).value - brute_quasi(nu, chi)) < 1e-12


def test_quasi_with_identity_map_is_markov():
    Q = np.array([[0.6, 0.4], [0.1, 0.9]])
    nu = QuasiMarkovMeasure(2, 1, MarkovChain.build(Q), (0, 1))
    mu = markov(Q)
    for sites in ([0], [0, 1], [0, 3, 4], [2, 9, 30]):
        chi = Character.parity(sites)
        assert abs(expectation(nu, chi).value - expectation(mu, chi).value) < 1e-12


def test_even_shift_structure():
    nu = even_shift()
    assert np.allclose(nu.hidden.pi, [1 / 3, 1 / 3, 1 / 3])
    # runs of ones between zeros have even length
    sym = sample_batch(nu, 400, 50, seed=3)
    for row in sym:
        s = "".join(map(str, row)).strip("1")
        for run in s.split("0"):
            assert len(run) % 2 == 0
    assert abs(expectation(nu, Character.parity([0])).value - (-1 / 3)) < 1e-12


def test_n_step_markov():
    # 2-step chain: next symbol depends on the previous two
    K = [[0.9, 0.1], [0.5, 0.5], [0.3, 0.7], [0.2, 0.8]]
    nu = n_step_markov(K, 2)
    sym = sample_batch(nu, 200, 2000, seed=1)
    ctx = sym[:, :-2] * 2 + sym[:, 1:-1]
    nxt = sym[:, 2:]
    for c in range(4):
        freq = nxt[ctx == c].mean()
        assert abs(freq - K[c][1]) < 0.02
    with pytest.raises(ValueError):
        n_step_markov([[1, 0]], 2)


def test_quasi_state_cap():
    rng = np.random.default_rng(0)
    hidden = MarkovChain.build(random_stochastic(rng, 6))
    nu = QuasiMarkovMeasure(2, 1, hidden, tuple([0, 1] * (6**4 // 2)), 2, 1, state_cap=500)
    with pytest.raises(ResourceCapError):
        expectation(nu, Character.parity([0]))


def test_sparse_engine_path():
    rng = np.random.default_rng(2)
    hidden = MarkovChain.build(random_stochastic(rng, 9))
    psi = tuple(int(x) for x in rng.integers(0, 2, 9**3))
    nu = QuasiMarkovMeasure(2, 1, hidden, psi, 1, 1)
    assert not nu.engine().dense
    chi = Character.parity([0, 2])
    assert abs(expectation(nu, chi).value - brute_quasi(nu, chi)) < 1e-10


def test_sampler_marginals_match_exact():
    Q = np.array([[0.7, 0.2, 0.1], [0.1, 0.6, 0.3], [0.3, 0.3, 0.4]])
    mu = markov(Q, p=3)
    chi = Character.from_map({0: 1, 2: 2}, 3)
    mc = monte_carlo_expectation(mu, chi, 200_000, seed=4)
    ex = expectation(mu, chi).value
    assert abs(mc.value - ex) < 5 * mc.stderr
    sym = sample_batch(mu, 3, 100_000, seed=9)
    freq = np.bincount(sym[:, 0], minlength=3) / len(sym)
    assert np.allclose(freq, mu.pi, atol=0.01)


def test_image_expectation_matches_pullback():
    from lcarand.characters import pullback

    mu = markov([[0.8, 0.2], [0.3, 0.7]])
    phi = LcaPolynomial.from_terms({0: 1, 1: 1, 3: 1}, 2)
    chi = Character.parity([0, 2])
    mc = monte_carlo_image_expectation(mu, phi, chi, 200_000, seed=2)
    ex = expectation(mu, pullback(chi, phi)).value
    assert abs(mc.value - ex) < 5 * mc.stderr + 1e-3


def test_sampling_reproducible_and_chunk_stable():
    mu = markov([[0.8, 0.2], [0.3, 0.7]])
    a = sample_batch(mu, 8, CHUNK + 100, seed=7, stream=1)
    b = sample_batch(mu, 8, CHUNK + 100, seed=7, stream=1)
    assert np.array_equal(a, b)
    # whole chunks do not depend on how many samples follow them
    c = sample_batch(mu, 8, CHUNK, seed=7, stream=1)
    assert np.array_equal(a[:CHUNK], c)
    d = sample_batch(mu, 8, 50, seed=7, stream=2)
    assert not np.array_equal(c, d)
    assert make_rng(1, 0, 0).random() != make_rng(1, 0, 1).random()


def test_sample_window():
    w = sample(bernoulli(p=3, s=2), -4, 6, seed=1)
    assert w.offset == -4 and len(w) == 10 and w.values.shape == (10, 2)
    assert w.values.max() < 3
    with pytest.raises(ValueError):
        sample(bernoulli(), 3, 3)
    with pytest.raises(ConfigurationError):
        monte_carlo_expectation(bernoulli(), Character.parity([0]), 0)
