import itertools
import math

import mpmath
import numpy as np
import pytest

from gigmix.data import build_histogram
from gigmix.errors import DomainError
from gigmix.inference import PriorBox, log_likelihood, log_posterior
from gigmix.mixture import (
    MixtureModel,
    batched_log_pdf,
    batched_means,
    canonical_order,
    canonicalize,
    member_from_vector,
    member_vector,
    mixture_log_pdf,
)
from gigmix.pythagorean import FamilyMember, Kind, family_log_pdf, family_means
from gigmix.sampling import sample_mixture


def test_single_component_matches_family():
    c = FamilyMember.gig(2.0, 3.0, 2.0)
    x = np.geomspace(0.05, 40, 30)
    np.testing.assert_allclose(mixture_log_pdf(MixtureModel((1.0,), (c,)), x), family_log_pdf(c, x), atol=1e-14)


def test_identical_components_collapse():
    c = FamilyMember.gig(-0.5, 0.8, 3.0)
    model = MixtureModel((0.3, 0.7), (c, c))
    x = np.geomspace(0.05, 10, 30)
    np.testing.assert_allclose(mixture_log_pdf(model, x), family_log_pdf(c, x), atol=1e-14)


def test_demo_against_extended_precision(demo_model):
    mpmath.mp.dps = 50
    x = mpmath.mpf(1)
    total = mpmath.mpf(0)
    for w, c in zip(demo_model.weights, demo_model.components):
        lam, a, b = (mpmath.mpf(v) for v in (c.params.lam, c.params.alpha, c.params.beta))
        f = (x / a) ** (lam - 1) * mpmath.exp(-b / 2 * (x / a + a / x)) / (2 * a * mpmath.besselk(lam, b))
        total += mpmath.mpf(w) * f
    assert mixture_log_pdf(demo_model, 1.0) == pytest.approx(float(mpmath.log(total)), abs=1e-12)


def test_zero_weight_component_ignored():
    a, b = FamilyMember.gamma(2.0, 1.0), FamilyMember.gamma(50.0, 1.0)
    m = MixtureModel((1.0, 0.0), (a, b))
    assert mixture_log_pdf(m, 1.5) == pytest.approx(family_log_pdf(a, 1.5), abs=1e-15)


def test_domain():
    with pytest.raises(DomainError):
        mixture_log_pdf(MixtureModel((1.0,), (FamilyMember.gamma(1, 1),)), 0.0)


def test_model_validation():
    c = FamilyMember.gamma(1, 1)
    with pytest.raises(DomainError):
        MixtureModel((0.5, 0.6), (c, c))
    with pytest.raises(DomainError):
        MixtureModel((1.0,), (c, c))


@pytest.mark.parametrize(
    "member",
    [
        FamilyMember.gig(1.5, 2.0, 0.3),
        FamilyMember.gamma(2.5, 0.7),
        FamilyMember.inverse_gamma(3.0, 2.0),
        FamilyMember.subclass("inverse_gaussian", 1.2, 0.8),
        FamilyMember.subclass("reciprocal_inverse_gaussian", 1.2, 0.8),
        FamilyMember.subclass("hyperbolic", 1.2, 0.8),
    ],
)
def test_batched_forms_agree_with_scalar(member):
    x = np.geomspace(0.01, 30, 25)
    theta = member_vector(member)[None, None, :]
    got = batched_log_pdf(member.kind, theta, x)[0, 0]
    np.testing.assert_allclose(got, family_log_pdf(member, x), rtol=1e-13, atol=1e-13)
    assert batched_means(member.kind, theta)[0, 0] == pytest.approx(family_means(member).mu, rel=1e-12)
    assert member_from_vector(member.kind, member_vector(member)) == member


def test_canonical_order_by_mean_then_beta_then_lam():
    theta = np.array([[1.0, 3.0, 2.0], [0.0, 1.0, 1.0], [1.0, 3.0, 2.0]])
    assert list(canonical_order(Kind.GIG, theta)) == [1, 0, 2]
    # the narrower order-0 member has the smaller mean
    a = FamilyMember.gig(0.0, 1.0, 5.0)
    b = FamilyMember.gig(0.0, 1.0, 0.5)
    m = canonicalize(MixtureModel((0.2, 0.8), (a, b)))
    assert family_means(m.components[0]).mu <= family_means(m.components[1]).mu
    assert m.weights == (0.2, 0.8)


def test_canonical_tie_breaks_on_beta_then_lam(monkeypatch):
    import gigmix.mixture as mixture

    monkeypatch.setattr(mixture, "batched_means", lambda kind, theta: np.ones(theta.shape[:-1]))
    theta = np.array([[2.0, 1.0, 4.0], [1.0, 1.0, 4.0], [0.0, 1.0, 0.5]])
    assert list(mixture.canonical_order(Kind.GIG, theta)) == [2, 1, 0]


def test_gamma_ties_break_on_parameters():
    theta = np.array([[4.0, 2.0], [2.0, 1.0]])
    assert list(canonical_order(Kind.GAMMA, theta)) == [1, 0]


def test_label_invariance(demo_model):
    values, _ = sample_mixture(demo_model, 3000, 8)
    h = build_histogram(values, bins=40)
    prior = PriorBox.default(h)
    ref_pdf = mixture_log_pdf(demo_model, h.centers)
    ref_ll = log_likelihood(demo_model, h)
    ref_lp = log_posterior(demo_model, h, prior)
    for perm in itertools.permutations(range(3)):
        m = MixtureModel(
            tuple(demo_model.weights[j] for j in perm), tuple(demo_model.components[j] for j in perm)
        )
        np.testing.assert_allclose(mixture_log_pdf(m, h.centers), ref_pdf, rtol=0, atol=1e-12)
        assert log_likelihood(m, h) == pytest.approx(ref_ll, abs=1e-8)
        assert log_posterior(m, h, prior) == pytest.approx(ref_lp, abs=1e-8)
        assert canonicalize(m) == canonicalize(demo_model)
    assert canonicalize(demo_model) == demo_model
    assert math.isfinite(ref_lp)
