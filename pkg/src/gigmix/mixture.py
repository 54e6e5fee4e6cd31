"""
Finite mixture models over Pythagorean-family components.

Besides the record type, this module holds the array form of a family used
by the samplers: a component is a row of natural parameters in the order of
``PARAM_NAMES[kind]``, and batched log-densities broadcast over leading axes.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .pythagorean import (
    FIXED_ORDER,
    FamilyMember,
    GammaParams,
    GigParams,
    InverseGammaParams,
    Kind,
    family_log_pdf,
    family_means,
)
from .sampling import check_weights
from .special_fn import log_bessel_k

PARAM_NAMES = {
    Kind.GIG: ("lam", "alpha", "beta"),
    Kind.GAMMA: ("shape", "rate"),
    Kind.INVERSE_GAMMA: ("shape", "scale"),
    Kind.INVERSE_GAUSSIAN: ("alpha", "beta"),
    Kind.RECIPROCAL_INVERSE_GAUSSIAN: ("alpha", "beta"),
    Kind.HYPERBOLIC: ("alpha", "beta"),
}

# parameters that live on the real line; all others are positive and sampled in log scale
UNBOUNDED = {"lam"}


@dataclass(frozen=True)
class MixtureModel:
    weights: tuple
    components: tuple

    def __post_init__(self):
        w = check_weights(self.weights)
        comps = tuple(self.components)
        if len(comps) != len(w):
            raise DomainError("one weight per component is required")
        if not all(isinstance(c, FamilyMember) for c in comps):
            raise DomainError("components must be FamilyMember records")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))
        object.__setattr__(self, "components", comps)

    @property
    def k(self):
        return len(self.weights)


def member_vector(member):
    """Natural parameters of ``member`` in ``PARAM_NAMES`` order."""
    return np.array([getattr(member.params, name) for name in PARAM_NAMES[member.kind]], dtype=float)


def member_from_vector(kind, values):
    kind = Kind(kind)
    v = [float(x) for x in values]
    if kind is Kind.GIG:
        return FamilyMember(kind, GigParams(*v))
    if kind is Kind.GAMMA:
        return FamilyMember(kind, GammaParams(*v))
    if kind is Kind.INVERSE_GAMMA:
        return FamilyMember(kind, InverseGammaParams(*v))
    return FamilyMember(kind, GigParams(FIXED_ORDER[kind], *v))


def batched_log_pdf(kind, theta, x, log_x=None):
    """
    Component log-densities for stacked parameters.

    Parameters
    ----------
    theta : ndarray, shape (..., p)
        Natural parameters, last axis in ``PARAM_NAMES[kind]`` order.
    x : ndarray, shape (n,)
        Positive evaluation points.

    Returns
    -------
    ndarray, shape (..., n)
    """
    kind = Kind(kind)
    if log_x is None:
        log_x = np.log(x)
    if kind is Kind.GAMMA:
        a, b = theta[..., 0:1], theta[..., 1:2]
        return a * np.log(b) - gammaln(a) + (a - 1.0) * log_x - b * x
    if kind is Kind.INVERSE_GAMMA:
        a, s = theta[..., 0:1], theta[..., 1:2]
        return a * np.log(s) - gammaln(a) - (a + 1.0) * log_x - s / x
    if kind is Kind.GIG:
        lam, alpha, beta = theta[..., 0:1], theta[..., 1:2], theta[..., 2:3]
    else:
        alpha, beta = theta[..., 0:1], theta[..., 1:2]
        lam = np.full_like(alpha, FIXED_ORDER[kind])
    log_alpha = np.log(alpha)
    norm = math.log(2.0) + log_alpha + log_bessel_k(lam, beta)
    return -norm + (lam - 1.0) * (log_x - log_alpha) - 0.5 * beta * (x / alpha + alpha / x)


def batched_means(kind, theta):
    """Arithmetic means for stacked parameters, shape ``theta.shape[:-1]``."""
    kind = Kind(kind)
    if kind is Kind.GAMMA:
        return theta[..., 0] / theta[..., 1]
    if kind is Kind.INVERSE_GAMMA:
        a, s = theta[..., 0], theta[..., 1]
        with np.errstate(divide="ignore"):
            return np.where(a > 1, s / np.where(a > 1, a - 1.0, 1.0), np.inf)
    if kind is Kind.GIG:
        lam, alpha, beta = theta[..., 0], theta[..., 1], theta[..., 2]
    else:
        alpha, beta = theta[..., 0], theta[..., 1]
        lam = np.full_like(alpha, FIXED_ORDER[kind])
    return alpha * np.exp(log_bessel_k(lam + 1.0, beta) - log_bessel_k(lam, beta))


def canonical_order(kind, theta):
    """
    Permutation sorting components by ascending arithmetic mean.

    Ties are broken by ascending beta then lam for GIG kinds, and by the
    remaining parameters in order otherwise. ``theta`` has shape (..., k, p);
    the result has shape (..., k).
    """
    kind = Kind(kind)
    names = PARAM_NAMES[kind]
    mean = batched_means(kind, theta)
    if "beta" in names:
        keys = [theta[..., names.index("beta")]]
        if "lam" in names:
            keys.append(theta[..., names.index("lam")])
    else:
        keys = [theta[..., i] for i in range(len(names))]
    # np.lexsort sorts by the last key first
    keys = [mean] + keys
    flat = [np.reshape(kk, (-1, kk.shape[-1])) for kk in keys]
    order = np.array([np.lexsort([f[r] for f in reversed(flat)]) for r in range(flat[0].shape[0])])
    return order.reshape(theta.shape[:-1])


def canonicalize(model):
    """Copy of ``model`` with components in canonical order."""
    kinds = {c.kind for c in model.components}
    if len(kinds) != 1:
        means = [family_means(c).mu for c in model.components]
        order = sorted(range(model.k), key=lambda j: means[j])
    else:
        kind = kinds.pop()
        theta = np.stack([member_vector(c) for c in model.components])
        order = canonical_order(kind, theta)
    return MixtureModel(
        tuple(model.weights[j] for j in order), tuple(model.components[j] for j in order)
    )


def mixture_log_pdf(model, x):
    """ln sum_j pi_j f_j(x), by log-sum-exp."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr > 0)):
        raise DomainError("density is supported on x > 0 only")
    flat = np.atleast_1d(x_arr)
    with np.errstate(divide="ignore"):
        terms = np.stack([
            math.log(w) + np.atleast_1d(family_log_pdf(c, flat)) if w > 0 else np.full(flat.shape, -np.inf)
            for w, c in zip(model.weights, model.components)
        ])
    top = terms.max(axis=0)
    safe = np.where(np.isfinite(top), top, 0.0)
    out = safe + np.log(np.exp(terms - safe).sum(axis=0))
    return float(out[0]) if x_arr.ndim == 0 else out.reshape(x_arr.shape)
