import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import digamma

from gigmix.errors import DomainError
from gigmix.pythagorean import (
    FamilyMember,
    GigParams,
    Kind,
    family_log_pdf,
    family_means,
    gig_entropy,
    gig_from_multipliers,
    gig_log_pdf,
    gig_means,
    multipliers_from_gig,
)
from gigmix.special_fn import log_bessel_k, log_gamma_fn

from oracles import expect

GRID = list(itertools.product([-2.0, 0.0, 3.0], [0.1, 1.0, 10.0], [0.5, 2.0, 20.0]))


def test_value_at_alpha():
    p = GigParams(1.0, 1.0, 2.0)
    assert gig_log_pdf(p, 1.0) == pytest.approx(-math.log(2) - log_bessel_k(1, 2) - 2, abs=1e-14)
    p = GigParams(-0.5, 1.0, 1.0)
    assert gig_log_pdf(p, 1.0) == pytest.approx(-math.log(2) - log_bessel_k(-0.5, 1) - 1, abs=1e-14)


def test_direct_formula_off_mode():
    lam, a, b, x = 0.7, 2.3, 1.4, 0.9
    ref = -math.log(2 * a) - log_bessel_k(lam, b) + (lam - 1) * math.log(x / a) - b / 2 * (x / a + a / x)
    assert gig_log_pdf(GigParams(lam, a, b), x) == pytest.approx(ref, abs=1e-14)
    assert expect(lambda x: gig_log_pdf(GigParams(lam, a, b), x)) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("lam,alpha,beta", GRID)
def test_normalization_grid(lam, alpha, beta):
    p = GigParams(lam, alpha, beta)
    assert expect(lambda x: gig_log_pdf(p, x)) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("lam,alpha,beta", GRID)
def test_means_against_quadrature(lam, alpha, beta):
    p = GigParams(lam, alpha, beta)
    m = gig_means(p)

    def f(x):
        return gig_log_pdf(p, x)

    assert m.mu == pytest.approx(expect(f, lambda x: x), rel=1e-6)
    assert m.eta == pytest.approx(1.0 / expect(f, lambda x: 1.0 / x), rel=1e-6)
    assert m.gamma_mean == pytest.approx(math.exp(expect(f, math.log)), rel=1e-6)
    assert m.eta <= m.gamma_mean <= m.mu


def test_means_example_triple():
    p = GigParams(2.0, 1.5, 0.8)
    m = gig_means(p)
    f = lambda x: gig_log_pdf(p, x)  # noqa: E731
    assert m.mu == pytest.approx(expect(f, lambda x: x), rel=1e-6)
    assert m.eta == pytest.approx(1.0 / expect(f, lambda x: 1.0 / x), rel=1e-6)
    assert math.log(m.gamma_mean) == pytest.approx(expect(f, math.log), abs=1e-6)


def test_order_zero_means():
    m = gig_means(GigParams(0.0, 1.0, 3.3))
    assert m.mu * m.eta == pytest.approx(1.0, rel=1e-12)
    assert m.gamma_mean == pytest.approx(1.0, abs=1e-9)


def test_inverse_gaussian_harmonic_mean():
    m = gig_means(GigParams(-0.5, 1.0, 1.0))
    # K_{1/2}(1) / K_{3/2}(1) = 1 / (1 + 1/x) at x = 1
    assert m.eta == pytest.approx(0.5, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-15, 15), st.floats(1e-2, 1e2), st.floats(1e-2, 300))
def test_am_gm_hm(lam, alpha, beta):
    m = gig_means(GigParams(lam, alpha, beta))
    assert m.eta <= m.gamma_mean * (1 + 1e-9)
    assert m.gamma_mean <= m.mu * (1 + 1e-9)


@pytest.mark.parametrize("lam,alpha", [(-2.0, 0.3), (0.4, 1.0), (3.0, 5.0)])
def test_reciprocal_symmetry(lam, alpha):
    beta = 1.7
    x = np.geomspace(1e-2, 1e2, 41) * alpha
    lhs = gig_log_pdf(GigParams(lam, alpha, beta), x)
    # density of Y = alpha^2 / X evaluated at y = alpha^2 / x, times |dy/dx|
    rhs = gig_log_pdf(GigParams(-lam, alpha, beta), alpha**2 / x) + 2 * np.log(alpha / x)
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)


def test_gamma_reduction_pointwise():
    a, b = 2.5, 1.7
    x = np.geomspace(1e-3, 20, 50)
    direct = a * math.log(b) - math.lgamma(a) + (a - 1) * np.log(x) - b * x
    got = family_log_pdf(FamilyMember.gamma(a, b), x)
    np.testing.assert_allclose(got, direct, rtol=1e-12, atol=1e-12)
    # maximum-entropy form with lambda2 = 0: q = 1, lambda3 = a, lambda1 = b
    lambda0 = log_gamma_fn(a) - a * math.log(b)
    np.testing.assert_allclose(got, -lambda0 + (a - 1) * np.log(x) - b * x, rtol=1e-12, atol=1e-12)


def test_inverse_gamma_reduction_pointwise():
    a, s = 3.0, 0.6
    x = np.geomspace(1e-2, 50, 50)
    direct = a * math.log(s) - math.lgamma(a) - (a + 1) * np.log(x) - s / x
    got = family_log_pdf(FamilyMember.inverse_gamma(a, s), x)
    np.testing.assert_allclose(got, direct, rtol=1e-12, atol=1e-12)
    assert family_log_pdf(FamilyMember.inverse_gamma(2.0, 1.0), 1.0) == pytest.approx(-1.0, abs=1e-15)


def test_exponential_limit():
    member = FamilyMember.gamma(1.0, 1.0)
    assert family_log_pdf(member, 1e-12) == pytest.approx(0.0, abs=1e-11)
    assert family_log_pdf(member, 3.0) == pytest.approx(-3.0, abs=1e-15)


def test_hyperbolic_member():
    h = FamilyMember.subclass(Kind.HYPERBOLIC, 1.0, 1.0)
    assert family_log_pdf(h, 1.0) == pytest.approx(-math.log(2 * 0.42102443824070834) - 1, abs=1e-12)


def test_subclass_orders():
    assert FamilyMember.subclass("inverse_gaussian", 1, 1).params.lam == -0.5
    assert FamilyMember.subclass("reciprocal_inverse_gaussian", 1, 1).params.lam == 0.5
    with pytest.raises(DomainError):
        FamilyMember(Kind.HYPERBOLIC, GigParams(0.5, 1.0, 1.0))


def test_family_means_gamma_and_inverse_gamma():
    m = family_means(FamilyMember.gamma(3.0, 2.0))
    assert m.mu == 1.5
    assert math.log(m.gamma_mean) == pytest.approx(digamma(3.0) - math.log(2.0))
    assert m.eta == pytest.approx(1.0)
    m = family_means(FamilyMember.inverse_gamma(3.0, 2.0))
    assert m.mu == pytest.approx(1.0)
    assert m.eta == pytest.approx(2.0 / 3.0)


@pytest.mark.parametrize("bad", [(0.0, 0.0, 1.0), (0.0, 1.0, -1.0), (math.nan, 1.0, 1.0)])
def test_invalid_params(bad):
    with pytest.raises(DomainError):
        GigParams(*bad)


def test_density_domain():
    with pytest.raises(DomainError):
        gig_log_pdf(GigParams(0, 1, 1), 0.0)
    with pytest.raises(DomainError):
        family_log_pdf(FamilyMember.gamma(1, 1), np.array([1.0, -1.0]))


def test_multipliers_examples():
    m = multipliers_from_gig(GigParams(0.0, 1.0, 2.0))
    assert (m.lambda1, m.lambda2, m.lambda3) == (1.0, 1.0, 0.0)
    assert m.lambda0 == pytest.approx(math.log(2) + log_bessel_k(0, 2), abs=1e-15)
    m = multipliers_from_gig(GigParams(3.0, 4.0, 2.0))
    assert (m.lambda1, m.lambda2, m.lambda3) == (0.25, 4.0, 3.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-20, 20), st.floats(1e-3, 1e3), st.floats(1e-3, 600))
def test_multiplier_round_trip(lam, alpha, beta):
    back = gig_from_multipliers(multipliers_from_gig(GigParams(lam, alpha, beta)))
    assert back.lam == lam
    assert back.alpha == pytest.approx(alpha, rel=1e-14)
    assert back.beta == pytest.approx(beta, rel=1e-14)


def test_log_partition_normalizes_multiplier_form():
    p = GigParams(1.3, 2.0, 0.9)
    m = multipliers_from_gig(p)
    x = np.geomspace(0.01, 30, 20)
    form = -m.lambda0 + (m.lambda3 - 1) * np.log(x) - m.lambda1 * x - m.lambda2 / x
    np.testing.assert_allclose(form, gig_log_pdf(p, x), atol=1e-12)


@pytest.mark.parametrize("p", [GigParams(0.5, 1.0, 1.0), GigParams(-2.0, 0.3, 5.0), GigParams(4.0, 7.0, 0.2)])
def test_entropy_against_quadrature(p):
    f = lambda x: gig_log_pdf(p, x)  # noqa: E731
    ref = -expect(f, f)
    assert gig_entropy(p) == pytest.approx(ref, abs=1e-6)


def test_entropy_orderings():
    assert gig_entropy(GigParams(1, 1, 10)) > gig_entropy(GigParams(1, 1, 100))
    base = gig_entropy(GigParams(0.7, 1.3, 2.0))
    assert gig_entropy(GigParams(0.7, 1.3 * 5, 2.0)) == pytest.approx(base + math.log(5), abs=1e-10)


def test_entropy_rejects_tabulated_flag():
    with pytest.raises(DomainError):
        gig_entropy(GigParams(0, 1, 1), prior_is_uniform=False)
