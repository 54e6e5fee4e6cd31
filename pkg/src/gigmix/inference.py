"""
Bayesian fitting of Pythagorean-family mixtures to histogram counts.

The likelihood is multinomial over the occupied bins, with bin masses from
per-bin Gauss-Legendre quadrature done in log space. Mass falling outside
the histogram range forms an extra cell with zero count, so it enters only
through the normalization of the in-range cells. The multinomial
coefficient is dropped throughout.

The prior is uniform on a box over the sampled coordinates (log scale for
positive parameters, raw ``lam``) with a symmetric Dirichlet on the
weights. MCMC runs in unconstrained coordinates: the sampled parameters
plus stick-breaking logits for the weights.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from .errors import DomainError, InitializationError, NoSolutionError, NonNormalizableError
from .maxent import ConstraintSet, PriorSpec, solve_multipliers
from .mcmc import adaptive_metropolis
from .mixture import (
    PARAM_NAMES,
    UNBOUNDED,
    MixtureModel,
    batched_log_pdf,
    canonical_order,
    member_from_vector,
    member_vector,
)
from .pythagorean import FIXED_ORDER, Kind
from .sampling import make_rng
from .special_fn import ARG_MAX

log = logging.getLogger(__name__)

INIT_DRAWS = 1000
POLISH_TOL = 1e-8


def _logsumexp(a, axis):
    top = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - safe), axis=axis, keepdims=True)) + safe
    return np.squeeze(out, axis=axis)


# ---------------------------------------------------------------- prior


@dataclass(frozen=True)
class PriorBox:
    """
    Box prior over component parameters, shared by every component.

    ``bounds`` maps parameter names to inclusive ``(lower, upper)`` pairs on
    the natural scale; ``fixed`` pins parameters to constants (they are then
    not sampled). The prior is uniform in log scale for positive parameters.
    """

    kind: Kind
    bounds: dict
    fixed: dict = field(default_factory=dict)
    concentration: float = 1.0

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        names = PARAM_NAMES[kind]
        bounds = {k: (float(v[0]), float(v[1])) for k, v in dict(self.bounds).items()}
        fixed = {k: float(v) for k, v in dict(self.fixed).items()}
        for name in list(bounds) + list(fixed):
            if name not in names:
                raise DomainError(f"{kind.value} has no parameter {name!r}")
        for name in names:
            if name in fixed:
                continue
            if name not in bounds:
                raise DomainError(f"missing bounds for {name!r}")
            lo, hi = bounds[name]
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise DomainError(f"bounds for {name!r} need lower < upper")
            if name not in UNBOUNDED and lo <= 0:
                raise DomainError(f"bounds for {name!r} must be positive")
        if not (math.isfinite(self.concentration) and self.concentration > 0):
            raise DomainError("Dirichlet concentration must be positive")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "fixed", fixed)
        object.__setattr__(self, "concentration", float(self.concentration))

    @classmethod
    def default(cls, h, kind=Kind.GIG, *, bounds=None, fixed=None, concentration=1.0):
        """
        Scale-aware default box around the histogram median.

        ``beta`` stops at the Bessel-evaluation envelope (700).
        """
        kind = Kind(kind)
        med = h.median()
        table = {
            "lam": (-20.0, 20.0),
            "alpha": (1e-3 * med, 1e3 * med),
            "beta": (1e-4, ARG_MAX),
            "shape": (1e-2, 1e3),
            "rate": (1e-3 / med, 1e6 / med),
            "scale": (1e-3 * med, 1e6 * med),
        }
        chosen = {name: table[name] for name in PARAM_NAMES[kind]}
        chosen.update(bounds or {})
        fixed = dict(fixed or {})
        for name in fixed:
            chosen.pop(name, None)
        return cls(kind, chosen, fixed, concentration)

    @property
    def free(self):
        return tuple(n for n in PARAM_NAMES[self.kind] if n not in self.fixed)

    def transformed_bounds(self):
        lo = np.array([self._t(n, self.bounds[n][0]) for n in self.free])
        hi = np.array([self._t(n, self.bounds[n][1]) for n in self.free])
        return lo, hi

    @staticmethod
    def _t(name, value):
        return value if name in UNBOUNDED else math.log(value)

    def log_box_density(self):
        """Log density of one component's parameters inside the box."""
        lo, hi = self.transformed_bounds()
        return -float(np.sum(np.log(hi - lo)))

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "bounds": {k: list(v) for k, v in self.bounds.items()},
            "fixed": dict(self.fixed),
            "concentration": self.concentration,
        }


def log_dirichlet(weights, concentration):
    """Symmetric Dirichlet log density; rows of ``weights`` are points on the simplex."""
    w = np.asarray(weights, dtype=float)
    k = w.shape[-1]
    if k == 1:
        return np.zeros(w.shape[:-1])
    c = concentration
    with np.errstate(divide="ignore"):
        body = (c - 1.0) * np.log(w).sum(axis=-1) if c != 1.0 else np.zeros(w.shape[:-1])
    return gammaln(k * c) - k * gammaln(c) + body


# ---------------------------------------------------------------- coordinates


class Layout:
    """
    Map between unconstrained vectors and (weights, parameter) arrays.

    A vector holds ``k - 1`` stick-breaking logits followed by the free
    parameters of each component in sampled scale. Logits are offset so the
    zero vector means equal weights.
    """

    def __init__(self, prior, k):
        self.prior = prior
        self.k = int(k)
        if self.k < 1:
            raise DomainError("k must be positive")
        self.kind = prior.kind
        self.names = PARAM_NAMES[self.kind]
        self.free = prior.free
        self.free_idx = [self.names.index(n) for n in self.free]
        self.log_idx = [i for i, n in enumerate(self.free) if n not in UNBOUNDED]
        self.lo, self.hi = prior.transformed_bounds()
        self.n_logit = self.k - 1
        self.dim = self.n_logit + self.k * len(self.free)
        self._offset = np.log(self.k - np.arange(1, self.k))

    def decode(self, z):
        """
        Returns
        -------
        weights : (m, k)
        theta : (m, k, p) natural parameters, fixed ones filled in
        log_jac : (m,) log Jacobian of the stick-breaking map
        in_box : (m,) bool
        """
        z = np.atleast_2d(z)
        m = z.shape[0]
        weights = np.empty((m, self.k))
        log_jac = np.zeros(m)
        rem = np.ones(m)
        for j in range(self.n_logit):
            s = z[:, j] - self._offset[j]
            v = 1.0 / (1.0 + np.exp(-s))
            weights[:, j] = rem * v
            with np.errstate(divide="ignore"):
                log_jac += np.log(rem) - np.logaddexp(0.0, -s) - np.logaddexp(0.0, s)
            rem = rem * (1.0 - v)
        weights[:, -1] = rem

        u = z[:, self.n_logit:].reshape(m, self.k, len(self.free))
        in_box = np.all((u >= self.lo) & (u <= self.hi), axis=(1, 2))
        theta = np.empty((m, self.k, len(self.names)))
        nat = u.copy()
        nat[..., self.log_idx] = np.exp(u[..., self.log_idx])
        theta[..., self.free_idx] = nat
        for name, value in self.prior.fixed.items():
            theta[..., self.names.index(name)] = value
        return weights, theta, log_jac, in_box

    def encode(self, weights, theta):
        """Inverse of :meth:`decode` for arrays of shape (m, k) and (m, k, p)."""
        weights = np.atleast_2d(np.asarray(weights, dtype=float))
        theta = np.asarray(theta, dtype=float).reshape(weights.shape[0], self.k, len(self.names))
        m = weights.shape[0]
        z = np.empty((m, self.dim))
        z[:, : self.n_logit] = self._logits(weights)
        u = theta[..., self.free_idx].copy()
        u[..., self.log_idx] = np.log(u[..., self.log_idx])
        z[:, self.n_logit:] = u.reshape(m, -1)
        return z

    def _logits(self, weights):
        out = np.empty((len(weights), self.n_logit))
        rem = np.ones(len(weights))
        for j in range(self.n_logit):
            with np.errstate(divide="ignore", invalid="ignore"):
                v = np.clip(weights[:, j] / rem, 1e-300, 1.0 - 1e-16)
            out[:, j] = np.log(v) - np.log1p(-v) + self._offset[j]
            rem = np.maximum(rem - weights[:, j], 1e-300)
        return out

    def encode_model(self, model):
        check_model(model, self.prior)
        theta = np.stack([member_vector(c) for c in model.components])
        return self.encode(np.array(model.weights)[None, :], theta[None])[0]

    def model(self, weights, theta):
        comps = tuple(member_from_vector(self.kind, row) for row in theta)
        w = np.asarray(weights, dtype=float)
        return MixtureModel(tuple(w / w.sum()), comps)

    def sample_prior(self, n, rng):
        """``n`` exact prior draws as unconstrained vectors."""
        u = self.lo + (self.hi - self.lo) * rng.random((n, self.k, len(self.free)))
        if self.k > 1:
            weights = rng.dirichlet(np.full(self.k, self.prior.concentration), size=n)
        else:
            weights = np.ones((n, 1))
        z = np.empty((n, self.dim))
        z[:, self.n_logit:] = u.reshape(n, -1)
        z[:, : self.n_logit] = self._logits(weights)
        return z


def check_model(model, prior):
    kinds = {c.kind for c in model.components}
    if kinds != {prior.kind}:
        raise DomainError(f"model components must all be {prior.kind.value}")


# ---------------------------------------------------------------- likelihood


# Widest quadrature panel in ln x. Inside the default box no component is
# narrower than about 1/sqrt(700) in ln x, so 8 nodes per panel resolve it.
PANEL_WIDTH = 0.1


class BinnedLikelihood:
    """
    Multinomial log-likelihood of histogram counts, vectorized over parameter sets.

    Bin masses are integrated in ``u = ln x``: each occupied bin is cut into
    panels no wider than ``panel_width`` with ``nodes`` Gauss-Legendre points
    each, so a narrow component cannot slip between nodes.
    """

    def __init__(self, h, kind, nodes=8, panel_width=PANEL_WIDTH):
        self.h = h
        self.kind = Kind(kind)
        occupied = np.flatnonzero(h.counts > 0)
        self.counts = h.counts[occupied].astype(float)
        hi = np.log(h.edges[occupied + 1])
        with np.errstate(divide="ignore"):
            lo = np.log(h.edges[occupied])
        # a zero left edge is cut far below the bin; the mass lost there is negligible
        lo = np.where(np.isfinite(lo), lo, hi - 30.0)
        n_panels = np.maximum(1, np.ceil((hi - lo) / panel_width).astype(int))
        t, w = np.polynomial.legendre.leggauss(nodes)
        u, log_w, starts = [], [], []
        pos = 0
        for a, b, n in zip(lo, hi, n_panels):
            edges = np.linspace(a, b, n + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[:-1] + edges[1:])
            u.append((mid[:, None] + half[:, None] * t).ravel())
            log_w.append(np.log(half[:, None] * w).ravel())
            starts.append(pos)
            pos += n * nodes
        self.log_x = np.concatenate(u)
        self.x = np.exp(self.log_x)
        # the ln x integrand is f(x) * x
        self.log_w = np.concatenate(log_w) + self.log_x
        self.starts = np.array(starts)

    def log_bin_mass(self, weights, theta):
        """Log mixture mass of every occupied bin, shape (m, bins)."""
        weights = np.atleast_2d(weights)
        theta = np.asarray(theta, dtype=float).reshape(weights.shape + (-1,))
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            comp = batched_log_pdf(self.kind, theta, self.x, self.log_x)
            comp = comp + np.log(weights)[..., None]
            terms = _logsumexp(comp, axis=1) + self.log_w
            top = np.maximum.reduceat(terms, self.starts, axis=1)
            safe = np.where(np.isfinite(top), top, 0.0)
            spread = np.repeat(safe, np.diff(np.append(self.starts, terms.shape[1])), axis=1)
            return np.log(np.add.reduceat(np.exp(terms - spread), self.starts, axis=1)) + safe

    def __call__(self, weights, theta):
        """Log-likelihood for weights (m, k) and natural parameters (m, k, p)."""
        with np.errstate(invalid="ignore", over="ignore"):
            out = self.log_bin_mass(weights, theta) @ self.counts
        return np.where(np.isnan(out), -np.inf, out)


class Posterior:
    """
    Log posterior on model arrays and on unconstrained vectors.

    ``tempered(z, t)`` is the density the samplers target: prior in the
    unconstrained coordinates (Jacobian included) times ``L ** t``.
    """

    def __init__(self, h, k, prior, nodes=8):
        self.h = h
        self.prior = prior
        self.layout = Layout(prior, k)
        self.loglik = BinnedLikelihood(h, prior.kind, nodes)
        self._box = prior.log_box_density() * self.layout.k

    def log_prior_arrays(self, weights, in_box):
        lp = self._box + log_dirichlet(weights, self.prior.concentration)
        return np.where(in_box, lp, -np.inf)

    def evaluate(self, z):
        """(log prior incl. Jacobian, log posterior without Jacobian, log-likelihood)."""
        weights, theta, log_jac, in_box = self.layout.decode(z)
        prior = self.log_prior_arrays(weights, in_box)
        ll = np.full(len(weights), -np.inf)
        if in_box.any():
            ll[in_box] = self.loglik(weights[in_box], theta[in_box])
        return prior + log_jac, prior + ll, ll

    def tempered(self, t):
        def target(z):
            lp_z, _, ll = self.evaluate(z)
            with np.errstate(invalid="ignore"):
                val = lp_z + (t * ll if t != 0 else 0.0)
            val = np.where(np.isfinite(lp_z) & (np.isfinite(ll) | (t == 0)), val, -np.inf)
            return val, ll

        return target


def _model_arrays(model, prior):
    check_model(model, prior)
    weights = np.array(model.weights)[None, :]
    theta = np.stack([member_vector(c) for c in model.components])[None]
    return weights, theta


def log_likelihood(model, h, nodes=8):
    """Multinomial log-likelihood of ``h`` (constant term dropped); -inf when excluded."""
    kinds = {c.kind for c in model.components}
    if len(kinds) != 1:
        raise DomainError("mixtures must use a single family")
    kind = kinds.pop()
    weights = np.array(model.weights)[None, :]
    theta = np.stack([member_vector(c) for c in model.components])[None]
    return float(BinnedLikelihood(h, kind, nodes)(weights, theta)[0])


def log_prior(model, prior):
    weights, theta = _model_arrays(model, prior)
    names = PARAM_NAMES[prior.kind]
    inside = True
    for i, name in enumerate(names):
        col = theta[0, :, i]
        if name in prior.fixed:
            inside &= bool(np.all(col == prior.fixed[name]))
        else:
            lo, hi = prior.bounds[name]
            inside &= bool(np.all((col >= lo) & (col <= hi)))
    if not inside:
        return -math.inf
    return prior.log_box_density() * model.k + float(log_dirichlet(weights, prior.concentration)[0])


def log_posterior(model, h, prior, nodes=8):
    lp = log_prior(model, prior)
    if lp == -math.inf:
        return lp
    return lp + log_likelihood(model, h, nodes)


# ---------------------------------------------------------------- chains


@dataclass(frozen=True)
class ChainConfig:
    iterations: int = 50000
    burn_in: float = 0.2
    thin: int = 5
    walkers: int = 1
    nodes: int = 8

    def __post_init__(self):
        if self.iterations < 1 or self.thin < 1 or self.walkers < 1 or self.nodes < 2:
            raise DomainError("iterations, thin, walkers must be >= 1 and nodes >= 2")
        if not 0 <= self.burn_in < 1:
            raise DomainError("burn_in is a fraction in [0, 1)")

    @property
    def burn_in_steps(self):
        return int(round(self.burn_in * self.iterations))


@dataclass
class Chain:
    """
    Retained draws in canonical component order.

    Arrays are pooled over walkers: ``weights`` (n, k), ``theta`` (n, k, p),
    ``log_posterior`` and ``log_likelihood`` (n,).
    """

    kind: Kind
    weights: np.ndarray
    theta: np.ndarray
    log_posterior: np.ndarray
    log_likelihood: np.ndarray
    acceptance_rate: float
    seed: int

    @property
    def k(self):
        return self.weights.shape[1]

    def __len__(self):
        return len(self.log_posterior)

    def model(self, i):
        comps = tuple(member_from_vector(self.kind, row) for row in self.theta[i])
        w = self.weights[i]
        return MixtureModel(tuple(w / w.sum()), comps)

    @property
    def draws(self):
        return [(self.model(i), float(self.log_posterior[i])) for i in range(len(self))]

    def columns(self):
        names = PARAM_NAMES[self.kind]
        cols = [f"w{j + 1}" for j in range(self.k)]
        cols += [f"{n}{j + 1}" for j in range(self.k) for n in names]
        return cols + ["log_posterior"]

    def table(self):
        n = len(self)
        return np.column_stack([self.weights, self.theta.reshape(n, -1), self.log_posterior])


def canonical_arrays(kind, weights, theta):
    order = canonical_order(kind, theta)
    w = np.take_along_axis(weights, order, axis=-1)
    th = np.take_along_axis(theta, order[..., None], axis=-2)
    return w, th


def _slice_start(h, k, prior):
    """
    Starting point from the histogram: split it into ``k`` quantile slices and
    fit each slice with the maximum-entropy member matching its means.
    """
    x = h.centers
    c = h.counts.astype(float)
    cum = (np.cumsum(c) - 0.5 * c) / c.sum()
    slot = np.minimum((cum * k).astype(int), k - 1)
    names = PARAM_NAMES[prior.kind]
    weights = np.empty(k)
    theta = np.empty((k, len(names)))
    for j in range(k):
        sel = slot == j
        cj = c[sel]
        xj = x[sel]
        weights[j] = max(cj.sum(), 1.0)
        if cj.sum() > 0:
            mu = float(np.sum(cj * xj) / cj.sum())
            lg = float(np.sum(cj * np.log(xj)) / cj.sum())
            inv_eta = float(np.sum(cj / xj) / cj.sum())
        else:
            mu = float(np.median(x))
            lg, inv_eta = math.log(mu), 1.0 / mu
        theta[j] = _member_for_means(prior.kind, mu, lg, inv_eta)
    return weights / weights.sum(), theta


def _member_for_means(kind, mu, lg, inv_eta):
    try:
        if kind is Kind.GAMMA:
            m = solve_multipliers(PriorSpec(), ConstraintSet(mu, lg, None))
            return [m.lambda3, m.lambda1]
        if kind is Kind.INVERSE_GAMMA:
            m = solve_multipliers(PriorSpec(), ConstraintSet(None, lg, inv_eta))
            return [-m.lambda3, m.lambda2]
        m = solve_multipliers(PriorSpec(), ConstraintSet(mu, lg, inv_eta))
        alpha = math.sqrt(m.lambda2 / m.lambda1)
        beta = 2.0 * math.sqrt(m.lambda1 * m.lambda2)
        lam = m.lambda3
    except (NoSolutionError, NonNormalizableError, DomainError, ArithmeticError):
        # a slice too narrow to resolve its spread: a tight unit-order member at its mean
        if kind is Kind.GAMMA:
            return [100.0, 100.0 / mu]
        if kind is Kind.INVERSE_GAMMA:
            return [100.0, 100.0 / inv_eta]
        lam, alpha, beta = 1.0, mu, 100.0
    if kind is Kind.GIG:
        return [lam, alpha, beta]
    return [alpha, beta]


def _clip_into_box(layout, z):
    z = z.copy()
    u = z[:, layout.n_logit:].reshape(len(z), layout.k, -1)
    margin = 1e-6 * (layout.hi - layout.lo)
    u = np.clip(u, layout.lo + margin, layout.hi - margin)
    z[:, layout.n_logit:] = u.reshape(len(z), -1)
    return z


def initial_points(post, walkers, rng):
    """
    Finite-posterior starting vectors: the histogram-slice start jittered per
    walker, falling back to prior draws.
    """
    layout = post.layout
    w0, th0 = _slice_start(post.h, layout.k, post.prior)
    for name, value in post.prior.fixed.items():
        th0[:, layout.names.index(name)] = value
    base = _clip_into_box(layout, layout.encode(w0[None], th0[None]))
    z = base + 1e-3 * rng.standard_normal((walkers, layout.dim))
    z[0] = base[0]
    z = _clip_into_box(layout, z)
    bad = ~np.isfinite(post.evaluate(z)[1])
    tries = 0
    while bad.any():
        if tries >= INIT_DRAWS:
            raise InitializationError(
                f"no finite-posterior start after {INIT_DRAWS} prior draws"
            )
        n = min(int(bad.sum()) * 4, INIT_DRAWS - tries)
        cand = layout.sample_prior(n, rng)
        tries += n
        good = cand[np.isfinite(post.evaluate(cand)[1])]
        idx = np.flatnonzero(bad)[: len(good)]
        z[idx] = good[: len(idx)]
        bad[idx] = False
    return z


def _fd_hessian(f, z, step=1e-4):
    d = len(z)
    f0 = f(z)
    hess = np.empty((d, d))
    eye = np.eye(d) * step
    for i in range(d):
        for j in range(i, d):
            if i == j:
                v = (f(z + eye[i]) - 2.0 * f0 + f(z - eye[i])) / step**2
            else:
                v = (
                    f(z + eye[i] + eye[j]) - f(z + eye[i] - eye[j])
                    - f(z - eye[i] + eye[j]) + f(z - eye[i] - eye[j])
                ) / (4.0 * step**2)
            hess[i, j] = hess[j, i] = v
    return hess


def locate_mode(post, z, t=1.0):
    """
    Local maximum of the tempered target near ``z`` and a Gaussian proposal
    covariance from the curvature there (diagonal fallback when the
    curvature is not positive definite).
    """
    target = post.tempered(t)

    def neg(v):
        val = target(v[None])[0][0]
        return -val if np.isfinite(val) else 1e300

    res = minimize(neg, z, method="L-BFGS-B")
    z = res.x if res.fun <= neg(z) else z
    hess = _fd_hessian(neg, z)
    try:
        cov = np.linalg.inv(hess)
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        diag = np.abs(np.diag(hess))
        cov = np.diag(1.0 / np.where(diag > 0, diag, 1e4))
    return z, cov


def _spread(post, z, cov, walkers, rng):
    """Walkers drawn around ``z`` from N(z, cov), keeping ``z`` itself first."""
    out = np.repeat(z[None], walkers, axis=0)
    if walkers > 1:
        chol = np.linalg.cholesky(cov + 1e-12 * np.eye(len(z)))
        cand = z + rng.standard_normal((walkers - 1, len(z))) @ chol.T
        ok = np.isfinite(post.evaluate(cand)[1])
        out[1:][ok] = cand[ok]
    return out


def run_mcmc(h, k, prior, config=None, seed=0):
    """
    Adaptive random-walk Metropolis for a k-component mixture fitted to ``h``.

    Walkers start near a local mode found from the histogram-slice start,
    with the proposal covariance seeded from the curvature there.
    """
    config = config or ChainConfig()
    post = Posterior(h, k, prior, config.nodes)
    rng = make_rng(seed)
    z0 = initial_points(post, 1, rng)[0]
    mode, cov = locate_mode(post, z0)
    z_start = _spread(post, mode, cov, config.walkers, rng)
    target = post.tempered(1.0)
    run = adaptive_metropolis(
        target, z_start, config.iterations, config.burn_in_steps, config.thin, rng, cov=cov
    )
    z = run.samples.reshape(-1, post.layout.dim)
    weights, theta, _, _ = post.layout.decode(z)
    _, log_post, ll = post.evaluate(z)
    weights, theta = canonical_arrays(prior.kind, weights, theta)
    log.info("chain k=%d: acceptance %.3f, %d draws", k, run.acceptance_rate, len(z))
    return Chain(prior.kind, weights, theta, log_post, ll, run.acceptance_rate, seed)


def map_estimate(chain, h, prior, nodes=8):
    """
    Best chain draw polished by Nelder-Mead restarts on the log posterior.

    Restarts continue until one improves the log posterior by less than
    ``POLISH_TOL``.
    """
    if len(chain) == 0:
        raise DomainError("chain holds no draws")
    post = Posterior(h, chain.k, prior, nodes)
    best = int(np.argmax(chain.log_posterior))
    z = post.layout.encode(chain.weights[best][None], chain.theta[best][None])[0]
    return polish(post, z)


def polish(post, z):
    def objective(v):
        val = post.evaluate(v[None])[1][0]
        return -val if np.isfinite(val) else np.inf

    current = objective(z)
    for _ in range(50):
        res = minimize(
            objective,
            z,
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-9, "maxfev": 400 * len(z) + 2000, "adaptive": True},
        )
        gain = current - res.fun
        if res.fun < current:
            z, current = res.x, res.fun
        if not gain > POLISH_TOL:
            break
    weights, theta, _, _ = post.layout.decode(z[None])
    weights, theta = canonical_arrays(post.prior.kind, weights, theta)
    return post.layout.model(weights[0], theta[0])
