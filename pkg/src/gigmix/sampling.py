"""
Seeded variate generation for GIG components and finite mixtures.

GIG variates use the ratio-of-uniforms method with mode relocation on the
standardized density ``x**(lam-1) * exp(-omega/2 * (x + 1/x))``: a point
``(u, v)`` uniform on ``[0, u+] x [v-, v+]`` yields the candidate
``y = v/u + mode``, accepted when ``u**2 <= g(y)``. Negative orders are
sampled through ``X ~ GIG(lam) => 1/X ~ GIG(-lam)``.

All generators are Philox (counter-based) streams derived from a
``numpy.random.SeedSequence``; substreams are split, never shared.
"""

import math

import numpy as np

from .errors import DomainError
from .pythagorean import GigParams, Kind


def make_rng(seed):
    """Counter-based generator for an integer seed or an existing SeedSequence."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(_check_seed(seed))
    return np.random.Generator(np.random.Philox(ss))


def split_seed(seed, n):
    """``n`` independent child SeedSequences of ``seed``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(_check_seed(seed))
    return ss.spawn(n)


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    return seed


def _log_kernel(y, lam, omega):
    return (lam - 1.0) * np.log(y) - 0.5 * omega * (y + 1.0 / y)


def _mode(lam, omega):
    if lam >= 1.0:
        return ((lam - 1.0) + math.sqrt((lam - 1.0) ** 2 + omega**2)) / omega
    return omega / ((1.0 - lam) + math.sqrt((1.0 - lam) ** 2 + omega**2))


def rou_box(lam, omega):
    """
    Bounding box of the mode-shifted ratio-of-uniforms region, kernel scaled to 1 at the mode.

    The extremes of ``(y - m) * sqrt(g(y))`` sit at the roots of
    ``y^3 - ((2 lam + 2)/omega + m) y^2 + (2 (lam - 1) m / omega - 1) y + m``
    lying below and above the mode.

    Returns
    -------
    mode, v_minus, v_plus : float
    """
    m = _mode(lam, omega)
    coeffs = [1.0, -((2.0 * lam + 2.0) / omega + m), 2.0 * (lam - 1.0) * m / omega - 1.0, m]
    roots = np.roots(coeffs)
    roots = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots.real))].real
    below = roots[(roots > 0) & (roots < m)]
    above = roots[roots > m]
    log_gm = _log_kernel(m, lam, omega)
    if len(below) == 0 or len(above) == 0:
        # fall back to a dense search; only reached through rounding at extreme parameters
        ys = m * np.exp(np.linspace(-40.0, 40.0, 200001))
        h = (ys - m) * np.exp(0.5 * (_log_kernel(ys, lam, omega) - log_gm))
        return m, float(h.min()) * 1.0001, float(h.max()) * 1.0001
    y_lo, y_hi = below.max(), above.min()
    v_minus = (y_lo - m) * math.exp(0.5 * (_log_kernel(y_lo, lam, omega) - log_gm))
    v_plus = (y_hi - m) * math.exp(0.5 * (_log_kernel(y_hi, lam, omega) - log_gm))
    return m, v_minus, v_plus


def _standard_gig(lam, omega, n, rng):
    m, v_minus, v_plus = rou_box(lam, omega)
    log_gm = _log_kernel(m, lam, omega)
    out = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        batch = max(64, int(need * 1.6) + 16)
        u = rng.random(batch)
        v = v_minus + (v_plus - v_minus) * rng.random(batch)
        with np.errstate(divide="ignore", invalid="ignore"):
            y = v / u + m
            ok = y > 0
            accept = np.zeros(batch, dtype=bool)
            accept[ok] = 2.0 * np.log(u[ok]) <= _log_kernel(y[ok], lam, omega) - log_gm
        got = y[accept][:need]
        out[filled:filled + len(got)] = got
        filled += len(got)
    return out


def sample_gig(params, n, seed):
    """
    ``n`` exact draws from GIG(lam, alpha, beta).

    ``seed`` is an integer, a SeedSequence or a ``numpy.random.Generator``.
    """
    if not isinstance(params, GigParams):
        raise DomainError("sample_gig expects GigParams")
    n = int(n)
    if n < 1:
        raise DomainError("n must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    lam = params.lam
    y = _standard_gig(abs(lam), params.beta, n, rng)
    if lam < 0:
        y = 1.0 / y
    return params.alpha * y


def sample_member(member, n, seed):
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    p = member.params
    if member.kind is Kind.GAMMA:
        return rng.gamma(p.shape, 1.0 / p.rate, size=n)
    if member.kind is Kind.INVERSE_GAMMA:
        return p.scale / rng.gamma(p.shape, 1.0, size=n)
    return sample_gig(p, n, rng)


def check_weights(weights):
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) == 0 or np.any(~np.isfinite(w)) or np.any(w < 0):
        raise DomainError("weights must be a nonempty list of nonnegative numbers")
    if abs(w.sum() - 1.0) > 1e-12:
        raise DomainError("weights must sum to 1")
    return w


def sample_mixture(model, n, seed):
    """
    ``n`` draws from a finite mixture together with their generating labels.

    The label stream and each component stream are separate substreams of
    ``seed``, so component ``j`` always consumes the same random numbers for
    the same label counts.

    Returns
    -------
    values : ndarray of float
    labels : ndarray of int
    """
    weights = check_weights(model.weights)
    n = int(n)
    if n < 1:
        raise DomainError("n must be at least 1")
    k = len(weights)
    streams = split_seed(seed, k + 1)
    labels = make_rng(streams[0]).choice(k, size=n, p=weights)
    values = np.empty(n)
    for j, member in enumerate(model.components):
        idx = np.flatnonzero(labels == j)
        if len(idx):
            values[idx] = sample_member(member, len(idx), make_rng(streams[j + 1]))
    return values, labels


__all__ = [
    "check_weights",
    "make_rng",
    "rou_box",
    "sample_gig",
    "sample_member",
    "sample_mixture",
    "split_seed",
]
