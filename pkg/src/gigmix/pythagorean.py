r"""
Densities of the Pythagorean family on the positive half-line.

The generalized inverse Gaussian (GIG) density is parameterized by order
``lam``, scale ``alpha`` and concentration ``beta``:

.. math::
    f(x) = \frac{1}{2\alpha K_\lambda(\beta)}\left(\frac{x}{\alpha}\right)^{\lambda-1}
           \exp\left\{-\frac{\beta}{2}\left(\frac{x}{\alpha}+\frac{\alpha}{x}\right)\right\}

It is the maximum-entropy density on ``(0, inf)`` when the arithmetic,
geometric and harmonic means are all fixed. Dropping the harmonic mean gives
the gamma density and dropping the arithmetic mean the inverse gamma.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .special_fn import dlog_bessel_k_dorder, log_bessel_k, log_gamma_fn


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class GigParams:
    lam: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise DomainError(f"lam must be finite, got {self.lam!r}")
        _positive("alpha", self.alpha)
        _positive("beta", self.beta)


@dataclass(frozen=True)
class GammaParams:
    shape: float
    rate: float

    def __post_init__(self):
        _positive("shape", self.shape)
        _positive("rate", self.rate)


@dataclass(frozen=True)
class InverseGammaParams:
    shape: float
    scale: float

    def __post_init__(self):
        _positive("shape", self.shape)
        _positive("scale", self.scale)


@dataclass(frozen=True)
class PythagoreanMeans:
    """Arithmetic (``mu``), geometric (``gamma_mean``) and harmonic (``eta``) means."""

    mu: float
    gamma_mean: float
    eta: float


@dataclass(frozen=True)
class Multipliers:
    """
    Lagrange multipliers of the maximum-entropy density

        f(x) = q(x) exp(-lambda0) x**(lambda3 - 1) exp(-lambda1 x - lambda2 / x)

    ``lambda0`` is the log partition function.
    """

    lambda0: float
    lambda1: float
    lambda2: float
    lambda3: float


class Kind(str, enum.Enum):
    GIG = "gig"
    GAMMA = "gamma"
    INVERSE_GAMMA = "inverse_gamma"
    INVERSE_GAUSSIAN = "inverse_gaussian"
    RECIPROCAL_INVERSE_GAUSSIAN = "reciprocal_inverse_gaussian"
    HYPERBOLIC = "hyperbolic"


# orders of the named GIG sub-classes
FIXED_ORDER = {
    Kind.INVERSE_GAUSSIAN: -0.5,
    Kind.RECIPROCAL_INVERSE_GAUSSIAN: 0.5,
    Kind.HYPERBOLIC: 0.0,
}


@dataclass(frozen=True)
class FamilyMember:
    kind: Kind
    params: object

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        expected = {Kind.GAMMA: GammaParams, Kind.INVERSE_GAMMA: InverseGammaParams}.get(kind, GigParams)
        if not isinstance(self.params, expected):
            raise DomainError(f"{kind.value} requires {expected.__name__}")
        if kind in FIXED_ORDER and self.params.lam != FIXED_ORDER[kind]:
            raise DomainError(f"{kind.value} has order fixed at {FIXED_ORDER[kind]}")

    @classmethod
    def gig(cls, lam, alpha, beta):
        return cls(Kind.GIG, GigParams(lam, alpha, beta))

    @classmethod
    def gamma(cls, shape, rate):
        return cls(Kind.GAMMA, GammaParams(shape, rate))

    @classmethod
    def inverse_gamma(cls, shape, scale):
        return cls(Kind.INVERSE_GAMMA, InverseGammaParams(shape, scale))

    @classmethod
    def subclass(cls, kind, alpha, beta):
        kind = Kind(kind)
        return cls(kind, GigParams(FIXED_ORDER[kind], alpha, beta))


def _as_positive_array(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("density is supported on x > 0 only")
    return arr


def _scalar_or_array(value, like):
    return float(value) if np.ndim(like) == 0 else value


def gig_log_norm(params):
    """ln(2 alpha K_lam(beta)), the normalizer of the density in its (x/alpha) form."""
    return math.log(2.0 * params.alpha) + log_bessel_k(params.lam, params.beta)


def gig_log_pdf(params, x):
    x_arr = _as_positive_array(x)
    r = x_arr / params.alpha
    out = -gig_log_norm(params) + (params.lam - 1.0) * np.log(r) - 0.5 * params.beta * (r + 1.0 / r)
    return _scalar_or_array(out, x)


def gamma_log_pdf(params, x):
    x_arr = _as_positive_array(x)
    a, b = params.shape, params.rate
    out = a * math.log(b) - log_gamma_fn(a) + (a - 1.0) * np.log(x_arr) - b * x_arr
    return _scalar_or_array(out, x)


def inverse_gamma_log_pdf(params, x):
    x_arr = _as_positive_array(x)
    a, s = params.shape, params.scale
    out = a * math.log(s) - log_gamma_fn(a) - (a + 1.0) * np.log(x_arr) - s / x_arr
    return _scalar_or_array(out, x)


def family_log_pdf(member, x):
    if member.kind is Kind.GAMMA:
        return gamma_log_pdf(member.params, x)
    if member.kind is Kind.INVERSE_GAMMA:
        return inverse_gamma_log_pdf(member.params, x)
    return gig_log_pdf(member.params, x)


def gig_means(params):
    """
    Closed-form Pythagorean means of a GIG density.

    Uses E[X^r] = alpha^r K_{lam+r}(beta) / K_lam(beta) for r = +1, -1 and
    E[ln X] = ln alpha + d/dnu ln K_nu(beta) at nu = lam.
    """
    lam, alpha, beta = params.lam, params.alpha, params.beta
    lk = log_bessel_k(np.array([lam - 1.0, lam, lam + 1.0]), beta)
    mu = alpha * math.exp(lk[2] - lk[1])
    eta = alpha * math.exp(lk[1] - lk[0])
    log_gamma = math.log(alpha) + float(dlog_bessel_k_dorder(lam, beta))
    return PythagoreanMeans(mu, math.exp(log_gamma), eta)


def family_means(member):
    """Pythagorean means of any family member (infinite where they do not exist)."""
    p = member.params
    if member.kind is Kind.GAMMA:
        from scipy.special import digamma

        return PythagoreanMeans(
            p.shape / p.rate,
            math.exp(digamma(p.shape) - math.log(p.rate)),
            (p.shape - 1.0) / p.rate if p.shape > 1 else 0.0,
        )
    if member.kind is Kind.INVERSE_GAMMA:
        from scipy.special import digamma

        return PythagoreanMeans(
            p.scale / (p.shape - 1.0) if p.shape > 1 else math.inf,
            math.exp(math.log(p.scale) - digamma(p.shape)),
            p.scale / p.shape,
        )
    return gig_means(p)


def multipliers_from_gig(params):
    lam, alpha, beta = params.lam, params.alpha, params.beta
    lambda0 = math.log(2.0) + lam * math.log(alpha) + log_bessel_k(lam, beta)
    return Multipliers(lambda0, beta / (2.0 * alpha), beta * alpha / 2.0, lam)


def gig_from_multipliers(m):
    """Map (lambda1, lambda2, lambda3) with lambda1, lambda2 > 0 back to GIG parameters."""
    if not (m.lambda1 > 0 and m.lambda2 > 0):
        raise DomainError("GIG form requires lambda1 > 0 and lambda2 > 0")
    return GigParams(m.lambda3, math.sqrt(m.lambda2 / m.lambda1), 2.0 * math.sqrt(m.lambda1 * m.lambda2))


def gig_entropy(params, prior_is_uniform=True):
    """Differential entropy -int f ln f dx, from the multipliers and the means."""
    if not prior_is_uniform:
        raise DomainError("tabulated priors are handled by gigmix.maxent.maxent_entropy")
    m = multipliers_from_gig(params)
    means = gig_means(params)
    return (
        m.lambda0
        + m.lambda1 * means.mu
        + m.lambda2 / means.eta
        - (m.lambda3 - 1.0) * math.log(means.gamma_mean)
    )
