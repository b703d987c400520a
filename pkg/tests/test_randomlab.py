import math

import numpy as np
import pytest

from lcarand.characters import Character, dilate, ldm, pullback
from lcarand.lca import LcaPolynomial, power_fast, s_rank
from lcarand.measures import (
    ConfigurationError,
    IrdiMeasure,
    bernoulli,
    even_shift,
    expectation,
    markov,
    point_mass_zero,
)
from lcarand.measures.base import make_rng
from lcarand.measures.modelfile import mrf_demo_chain
from lcarand.randomlab import (
    cesaro_report,
    dispersion_trajectory,
    empirical_randomization,
    even_shift_demo,
    even_shift_limit,
    irdi_demo,
    lucas_mixing_test,
    model_id,
    mrf_hm_demo,
    spectral_trajectory,
)

ONE_X = LcaPolynomial.from_terms({0: 1, 1: 1}, 2)


def test_trajectory_haar_and_point_mass():
    chi = Character.parity([0, 3])
    t = spectral_trajectory(bernoulli(), ONE_X, chi, 40)
    assert t.indices == list(range(41))
    assert np.abs(t.values).max() < 1e-12
    assert set(t.methods) == {"exact"}
    t = spectral_trajectory(point_mass_zero(), ONE_X, chi, 20)
    assert np.allclose(t.values, 1.0)
    assert cesaro_report(spectral_trajectory(bernoulli(), ONE_X, chi, 64)).passed


def test_trajectory_entries_are_pullbacks():
    mu = markov([[0.8, 0.2], [0.3, 0.7]])
    phi = LcaPolynomial.from_terms({-1: 1, 0: 1, 2: 1}, 2)
    chi = Character.parity([0, 1])
    t = spectral_trajectory(mu, phi, chi, 12, j_min=3)
    assert t.indices[0] == 3 and t.indices[-1] == 12
    for j, v in t.entries:
        assert v.value == expectation(mu, pullback(chi, power_fast(phi, j))).value


def test_exact_and_monte_carlo_agree():
    mu = markov([[0.8, 0.2], [0.3, 0.7]])
    chi = Character.parity([0, 2])
    ex = spectral_trajectory(mu, ONE_X, chi, 6)
    mc = spectral_trajectory(mu, ONE_X, chi, 6, method="monte-carlo", samples=100_000, seed=5)
    assert set(mc.methods) == {"monte-carlo"}
    for (j, a), (_, b) in zip(ex.entries, mc.entries):
        assert abs(a.value - b.value) < 5 * b.stderr + 1e-3


def test_threads_do_not_change_results():
    mu = markov([[0.6, 0.4], [0.1, 0.9]])
    chi = Character.parity([0, 1, 4])
    a = spectral_trajectory(mu, ONE_X, chi, 30, threads=1)
    b = spectral_trajectory(mu, ONE_X, chi, 30, threads=4)
    assert a == b
    a = spectral_trajectory(mu, ONE_X, chi, 5, method="monte-carlo", samples=20_000, seed=2, threads=1)
    b = spectral_trajectory(mu, ONE_X, chi, 5, method="monte-carlo", samples=20_000, seed=2, threads=3)
    assert np.array_equal(a.values, b.values)


def test_trajectory_argument_errors():
    chi = Character.parity([0])
    with pytest.raises(ValueError):
        spectral_trajectory(bernoulli(), LcaPolynomial.from_terms({0: 1, 1: 1}, 3), chi, 4)
    with pytest.raises(ValueError):
        spectral_trajectory(bernoulli(), ONE_X, chi, 0)
    with pytest.raises(ConfigurationError):
        spectral_trajectory(bernoulli(), ONE_X, chi, 4, method="monte-carlo")
    with pytest.raises(ConfigurationError):
        spectral_trajectory(bernoulli(), ONE_X, chi, 4, method="magic")


def test_cesaro_report_threshold():
    mu = point_mass_zero()
    t = spectral_trajectory(mu, ONE_X, Character.parity([0]), 31)
    v = cesaro_report(t, eps=0.5, target=0.5)
    assert not v.passed and v.density == 0.0
    with pytest.raises(ValueError):
        cesaro_report(t, eps=0)


def test_lucas_mixing_matches_powers():
    mu = markov([[0.7, 0.3], [0.4, 0.6]])
    chi = Character.parity([0, 2, 3])
    q = ldm(chi)
    t = lucas_mixing_test(mu, chi, 20)
    assert t.parameters["ldm"] == q
    for h, v in t.entries:
        direct = expectation(mu, pullback(chi, power_fast(ONE_X, q * h))).value
        assert abs(v.value - direct) < 1e-12
        assert abs(v.value - expectation(mu, dilate(chi, h)).value) < 1e-15


def test_dispersion():
    chi = Character.parity([0])
    res = dispersion_trajectory(ONE_X, chi, 2, 64, ladder=(1, 4))
    assert res.ranks[0] == (0, 1)
    for j, r in res.ranks:
        assert r == s_rank(pullback(chi, power_fast(ONE_X, j)).sites, 2)
    # 1 + x: the support of Phi^j is the Lucas set of j, rank > 1 unless j is a power of two or 0
    assert res.report(1).count == 64 - sum(1 for j in range(64) if j & (j - 1) == 0)
    with pytest.raises(ValueError):
        dispersion_trajectory(ONE_X, chi, 0, 10)


def test_empirical_randomization_haar_and_point_mass():
    er = empirical_randomization(bernoulli(), ONE_X, 3, 8, 40_000, seed=1)
    assert er.indices == tuple(range(9))
    assert max(er.tv) < 2 * er.noise_floor
    er = empirical_randomization(point_mass_zero(), ONE_X, 2, 4, 10_000)
    assert np.allclose(er.tv, 0.75)
    assert len(er.cesaro_tv) == 5
    er3 = empirical_randomization(bernoulli(p=3), LcaPolynomial.from_terms({0: 1, 1: 2}, 3), 2, 3, 30_000)
    assert max(er3.tv) < 2 * er3.noise_floor


def test_empirical_randomization_binary_fast_path_matches_generic():
    # the bit-packed path against a direct count on the same samples
    mu = markov([[0.9, 0.1], [0.2, 0.8]])
    er = empirical_randomization(mu, ONE_X, 2, 3, 20_000, seed=4)
    sym = mu.sample_symbols(2 + 3, 20_000, make_rng(4, 0, 0))
    for i, j in enumerate(er.indices):
        pj = power_fast(ONE_X, j)
        out = np.zeros((20_000, 2), dtype=np.int64)
        for e, _ in pj.terms:
            out ^= sym[:, e : e + 2]
        code = out[:, 0] * 2 + out[:, 1]
        freq = np.bincount(code, minlength=4) / 20_000
        assert er.tv[i] == pytest.approx(0.5 * np.abs(freq - 0.25).sum(), abs=1e-12)


def test_empirical_randomization_errors():
    with pytest.raises(ConfigurationError):
        empirical_randomization(bernoulli(), ONE_X, 9, 2, 20_000)
    with pytest.raises(ConfigurationError):
        empirical_randomization(bernoulli(), ONE_X, 2, 2, 100)
    with pytest.raises(ConfigurationError):
        empirical_randomization(bernoulli(p=5), LcaPolynomial.from_terms({0: 1, 1: 1}, 5), 7, 2, 20_000)


def test_even_shift_demo_rows():
    rows = even_shift_demo(12)
    nu = even_shift()
    for N, val, r in rows:
        assert r == N + 1
        assert val == pytest.approx(expectation(nu, Character.parity(range(N + 1))).value.real, abs=1e-12)
    assert rows[0][1] == pytest.approx(-1 / 3)
    long = even_shift_demo(200)
    assert abs(long[-1][1] - even_shift_limit()) < 1e-9
    assert even_shift_limit() == pytest.approx(1 / 9)


def test_mrf_hm_demo_rows():
    mu = mrf_demo_chain()
    rows = mrf_hm_demo(mu, ranks=(1, 2, 3), span=8)
    c = 0.6
    for K, observed, bound, count in rows:
        assert bound == pytest.approx(c ** math.ceil(K / 3))
        assert count == math.comb(7, K - 1)
    # symmetric chain: odd-rank characters vanish, pairs give (1/3)^gap
    assert rows[0][1] == pytest.approx(0.0, abs=1e-12)
    assert rows[1][1] == pytest.approx(1 / 3)
    with pytest.raises(Exception):
        mrf_hm_demo(markov([[1.0, 0.0], [0.5, 0.5]]))


def test_irdi_demo_and_model_id():
    profile, traj = irdi_demo(0.8, levels=[4, 5], h_max=8, n_max=16)
    assert [N for N, _ in profile] == [4, 5]
    assert traj.indices == list(range(9))
    assert model_id(IrdiMeasure(0.8, 16)) == "irdi(alpha=0.8,nmax=16)"
    assert model_id(bernoulli(p=3)) == "bernoulli(p=3,s=1)"
