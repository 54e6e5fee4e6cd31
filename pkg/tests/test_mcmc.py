import math

import numpy as np
import pytest
from scipy import stats
from scipy.special import gammaln

from gigmix.mcmc import TARGET_ACCEPT, adaptive_metropolis, parallel_tempering
from gigmix.model_select import _stepping_stone, _thermodynamic
from gigmix.sampling import make_rng

KS_1PCT = 1.6276


def gamma_toy(n=60, seed=0):
    """Log posterior of gamma (ln shape, ln rate) from raw data, flat prior on a box."""
    x = np.random.default_rng(seed).gamma(3.0, 1 / 2.0, n)
    s, sl = x.sum(), np.log(x).sum()
    lo, hi = np.array([-3.0, -3.0]), np.array([4.0, 4.0])

    def log_post(z):
        z = np.atleast_2d(z)
        a, b = np.exp(z[:, 0]), np.exp(z[:, 1])
        val = n * a * np.log(b) - n * gammaln(a) + (a - 1) * sl - b * s
        inside = np.all((z >= lo) & (z <= hi), axis=1)
        return np.where(inside, val, -np.inf)

    return log_post, lo, hi


def grid_marginals(log_post, lo, hi, n=1201):
    g0 = np.linspace(lo[0], hi[0], n)
    g1 = np.linspace(lo[1], hi[1], n)
    zz = np.stack(np.meshgrid(g0, g1, indexing="ij"), axis=-1).reshape(-1, 2)
    lp = log_post(zz).reshape(n, n)
    p = np.exp(lp - lp.max())
    out = []
    for axis, g in ((1, g0), (0, g1)):
        m = p.sum(axis=axis)
        c = np.concatenate([[0.0], np.cumsum(0.5 * (m[1:] + m[:-1]))])
        c /= c[-1]
        out.append(lambda v, g=g, c=c: np.interp(v, g, c))
    return out


def test_detailed_balance_smoke():
    log_post, lo, hi = gamma_toy()
    rng = make_rng(17)
    # thin 200 leaves draws close to independent; thin 50 visibly does not
    walkers, burn, thin, keep = 250, 2000, 200, 400
    x0 = np.array([1.1, 0.7]) + 0.05 * rng.standard_normal((walkers, 2))

    def target(z):
        lp = log_post(z)
        return lp, lp

    run = adaptive_metropolis(target, x0, burn + keep * thin, burn, thin, rng)
    draws = run.samples.reshape(-1, 2)
    assert len(draws) == 100_000
    assert 0.15 < run.acceptance_rate < 0.40
    crit = KS_1PCT / math.sqrt(len(draws))
    for j, cdf in enumerate(grid_marginals(log_post, lo, hi)):
        assert stats.kstest(draws[:, j], cdf).statistic < crit


def test_adaptation_reaches_target_rate():
    rng = make_rng(3)

    def target(z):
        lp = -0.5 * np.sum((z / np.array([1.0, 100.0, 0.01])) ** 2, axis=1)
        return lp, lp

    run = adaptive_metropolis(target, np.zeros((4, 3)), 6000, 3000, 1, rng)
    assert abs(run.acceptance_rate - TARGET_ACCEPT) < 0.08
    np.testing.assert_allclose(np.sqrt(np.diag(run.cov)), [1.0, 100.0, 0.01], rtol=0.3)


def test_infinite_proposals_never_accepted():
    rng = make_rng(4)

    def target(z):
        lp = np.where(z[:, 0] > 0, -np.inf, -0.5 * z[:, 0] ** 2)
        return lp, lp

    run = adaptive_metropolis(target, -np.ones((8, 1)), 3000, 500, 1, rng)
    assert np.all(run.samples <= 0)
    assert np.all(np.isfinite(run.log_target))


def test_frozen_after_burn_in_and_reproducible():
    def target(z):
        lp = -0.5 * np.sum(z**2, axis=1)
        return lp, lp

    a = adaptive_metropolis(target, np.zeros((3, 2)), 800, 400, 2, make_rng(9))
    b = adaptive_metropolis(target, np.zeros((3, 2)), 800, 400, 2, make_rng(9))
    assert a.samples.tobytes() == b.samples.tobytes()
    assert a.samples.shape == (200, 3, 2)
    assert a.aux.shape == a.log_target.shape


def test_parallel_tempering_gaussian_evidence():
    sigma, half = 0.05, 10.0
    exact = math.log(sigma * math.sqrt(2 * math.pi) / (2 * half))

    def evaluate(z):
        inside = np.abs(z[:, 0]) <= half
        lpz = np.where(inside, -math.log(2 * half), -np.inf)
        ll = -0.5 * (z[:, 0] / sigma) ** 2
        return lpz, ll

    def draw(n, rng):
        return rng.uniform(-half, half, (n, 1))

    temps = (np.arange(24) / 23.0) ** 5
    rng = make_rng(5)
    m = 16
    x0 = np.zeros((len(temps), m, 1))
    cov = np.array([[[min(sigma**2 / max(t, 1e-300), (2 * half) ** 2 / 12)]] for t in temps])
    scale = np.full(len(temps), 2.38)
    run = parallel_tempering(evaluate, draw, temps, x0, 6000, 2000, 1, rng, cov=cov, scale=scale)
    rungs = [run.log_likelihood[:, j, :] for j in range(len(temps))]
    ss, se, _ = _stepping_stone(temps, rungs)
    ti, ti_se, _ = _thermodynamic(temps, rungs)
    assert abs(ss - exact) < 3 * se
    assert abs(ti - exact) < 0.1
    assert np.all(run.swap_rate > 0.1)
    # the t = 1 rung holds N(0, sigma^2): E[ln L] = -1/2
    assert rungs[-1].mean() == pytest.approx(-0.5, abs=0.05)
