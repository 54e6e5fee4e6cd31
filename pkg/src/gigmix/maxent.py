"""
Maximum-entropy densities under conserved Pythagorean means.

Given a prior ``q`` on ``(0, inf)`` and any subset of the targets
``E[X] = mu``, ``E[ln X] = ln gamma`` and ``E[1/X] = 1/eta``, the entropy
maximizer is

    f(x) = q(x) exp(-lambda0) x**(lambda3 - 1) exp(-lambda1 x - lambda2 / x).

The multipliers minimize the convex dual

    D = lambda0 + lambda1 mu + lambda2 / eta - (lambda3 - 1) ln gamma,

whose gradient is the moment mismatch and whose Hessian is the covariance
of ``(-x, -1/x, ln x)`` under ``f``. Absent targets pin their multiplier:
``lambda1 = 0`` without ``mu``, ``lambda2 = 0`` without ``eta`` and
``lambda3 = 1`` without ``gamma``.
"""

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .errors import DomainError, NonNormalizableError, NoSolutionError, RangeError
from .pythagorean import Multipliers
from .special_fn import ARG_MAX, ARG_MIN, ORDER_MAX, log_bessel_k

__all__ = [
    "ConstraintSet",
    "MaxEntSolution",
    "Multipliers",
    "PriorKind",
    "PriorSpec",
    "check_feasible",
    "log_partition",
    "maxent_entropy",
    "maxent_log_pdf",
    "maxent_moments",
    "solve_multipliers",
    "solve_multipliers_detail",
]

log = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-12
MOMENT_RTOL = 1e-12
MAX_ITER = 100
_DAMPED = 1.0 / 32
# below this residual the quadratic model is trusted without a line search
_LOCAL = 1e-6
# residual accepted when rounding prevents reaching MOMENT_RTOL
_ACCEPT = 1e-9


class PriorKind(str, enum.Enum):
    UNIFORM = "uniform"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class PriorSpec:
    """
    Prior ``q`` of the relative entropy.

    A tabulated prior is linear between knots and zero outside them.
    """

    kind: PriorKind = PriorKind.UNIFORM
    x: tuple = ()
    q: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", PriorKind(self.kind))
        if self.kind is PriorKind.TABULATED:
            x = np.asarray(self.x, dtype=float)
            q = np.asarray(self.q, dtype=float)
            if x.ndim != 1 or x.shape != q.shape or len(x) < 2:
                raise DomainError("tabulated prior needs at least two (x, q) knots")
            if np.any(np.diff(x) <= 0) or x[0] < 0:
                raise DomainError("prior knots must be nonnegative and strictly increasing")
            if np.any(q < 0) or not np.any(q > 0) or not np.all(np.isfinite(q)):
                raise DomainError("prior values must be finite, nonnegative and not all zero")
            object.__setattr__(self, "x", tuple(x.tolist()))
            object.__setattr__(self, "q", tuple(q.tolist()))

    @classmethod
    def uniform(cls):
        return cls(PriorKind.UNIFORM)

    @classmethod
    def tabulated(cls, x, q):
        return cls(PriorKind.TABULATED, tuple(np.asarray(x, float)), tuple(np.asarray(q, float)))

    @property
    def is_uniform(self):
        return self.kind is PriorKind.UNIFORM

    def log_q(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_uniform:
            return np.zeros_like(x)
        q = np.interp(x, self.x, self.q, left=0.0, right=0.0)
        with np.errstate(divide="ignore"):
            return np.log(q)

    def breakpoints_u(self):
        if self.is_uniform:
            return np.array([])
        knots = np.asarray(self.x)
        return np.log(knots[knots > 0])


@dataclass(frozen=True)
class ConstraintSet:
    target_mu: float = None
    target_log_gamma: float = None
    target_inv_eta: float = None

    def __post_init__(self):
        if self.target_mu is None and self.target_log_gamma is None and self.target_inv_eta is None:
            raise DomainError("at least one target mean is required")
        for name in ("target_mu", "target_inv_eta"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite")
        if self.target_log_gamma is not None and not math.isfinite(self.target_log_gamma):
            raise DomainError("target_log_gamma must be finite")

    @classmethod
    def from_means(cls, mu=None, gamma_mean=None, eta=None):
        return cls(
            target_mu=mu,
            target_log_gamma=None if gamma_mean is None else math.log(gamma_mean),
            target_inv_eta=None if eta is None else 1.0 / eta,
        )

    @property
    def free(self):
        """Indices (0, 1, 2 for lambda1..lambda3) of the multipliers being solved for."""
        return tuple(
            i for i, v in enumerate((self.target_mu, self.target_inv_eta, self.target_log_gamma)) if v is not None
        )


def check_feasible(constraints):
    """Reject targets violating harmonic <= geometric <= arithmetic mean (Jensen)."""
    c = constraints
    log_mu = None if c.target_mu is None else math.log(c.target_mu)
    log_eta = None if c.target_inv_eta is None else -math.log(c.target_inv_eta)
    lg = c.target_log_gamma
    pairs = [
        (log_eta, lg, "harmonic mean must be below the geometric mean"),
        (lg, log_mu, "geometric mean must be below the arithmetic mean"),
        (log_eta, log_mu, "harmonic mean must be below the arithmetic mean"),
    ]
    for low, high, msg in pairs:
        if low is not None and high is not None and not low < high - FEASIBILITY_TOL:
            raise NoSolutionError(f"infeasible targets (AM-GM-HM inequality): {msg}")


def _uniform_normalizable(l1, l2, l3):
    return (l1 > 0 and l2 > 0) or (l1 > 0 and l2 == 0 and l3 > 0) or (l1 == 0 and l2 > 0 and l3 < 0)


def _log_weight(prior, l1, l2, l3):
    """log of q(e^u) e^{l3 u} exp(-l1 e^u - l2 e^-u): the integrand in u = ln x."""

    def f(u):
        out = l3 * u + prior.log_q(np.exp(u)) if not prior.is_uniform else l3 * u
        if l1 != 0:
            out = out - l1 * np.exp(u)
        if l2 != 0:
            out = out - l2 * np.exp(-u)
        return out

    return f


def _integrals(prior, l1, l2, l3):
    """log Z and raw moments of (x, 1/x, ln x) and their products."""
    if prior.is_uniform and not _uniform_normalizable(l1, l2, l3):
        raise NonNormalizableError(f"multipliers ({l1}, {l2}, {l3}) are not normalizable on (0, inf)")
    logw = _log_weight(prior, l1, l2, l3)
    lo, hi, peak_u, peak = quadrature.log_window(logw, extra=prior.breakpoints_u())
    inner = prior.breakpoints_u()
    inner = inner[(inner > lo) & (inner < hi)]
    breaks = np.unique(np.concatenate([[lo, hi, peak_u], inner, np.linspace(lo, hi, 9)]))

    def integrand(u):
        with np.errstate(over="ignore", under="ignore"):
            w = np.exp(logw(u) - peak)
            x = np.exp(u)
            ix = np.exp(-u)
        return np.vstack([w, w * x, w * ix, w * u, w * x * x, w * ix * ix, w * u * u, w * x * u, w * ix * u])

    vals, _ = quadrature.integrate(integrand, breaks, rtol=1e-12)
    if not (vals[0] > 0 and np.all(np.isfinite(vals))):
        raise NonNormalizableError("partition integral is not finite and positive")
    return peak + math.log(vals[0]), vals[1:] / vals[0]


@dataclass(frozen=True)
class Moments:
    log_z: float
    mean_x: float
    mean_inv_x: float
    mean_log_x: float
    covariance: np.ndarray = field(repr=False)
    """Covariance of (-x, -1/x, ln x)."""


def maxent_moments(prior, lambda1, lambda2, lambda3):
    log_z, r = _integrals(prior, lambda1, lambda2, lambda3)
    ex, eix, eu, exx, eixix, euu, exu, eixu = r
    cov = np.array([
        [exx - ex * ex, 1.0 - ex * eix, -(exu - ex * eu)],
        [1.0 - ex * eix, eixix - eix * eix, -(eixu - eix * eu)],
        [-(exu - ex * eu), -(eixu - eix * eu), euu - eu * eu],
    ])
    return Moments(log_z, ex, eix, eu, cov)


def log_partition(prior, lambda1, lambda2, lambda3):
    """
    lambda0 = ln int q(x) x^(lambda3 - 1) exp(-lambda1 x - lambda2 / x) dx.

    Uses the Bessel closed form for the uniform prior when both lambda1 and
    lambda2 are positive and the Bessel argument lies in its supported range.
    """
    if prior.is_uniform and lambda1 > 0 and lambda2 > 0:
        beta = 2.0 * math.sqrt(lambda1 * lambda2)
        if ARG_MIN <= beta <= ARG_MAX and abs(lambda3) <= ORDER_MAX:
            return math.log(2.0) + 0.5 * lambda3 * math.log(lambda2 / lambda1) + log_bessel_k(lambda3, beta)
    return _integrals(prior, lambda1, lambda2, lambda3)[0]


def maxent_log_pdf(prior, m, x):
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(x_arr > 0)):
        raise DomainError("density is supported on x > 0 only")
    if not prior.is_uniform and (np.any(x_arr < prior.x[0]) or np.any(x_arr > prior.x[-1])):
        raise DomainError("x lies outside the support of the tabulated prior")
    out = prior.log_q(x_arr) - m.lambda0 + (m.lambda3 - 1.0) * np.log(x_arr) - m.lambda1 * x_arr
    if m.lambda2 != 0:
        out = out - m.lambda2 / x_arr
    return float(out) if np.ndim(x) == 0 else out


def maxent_entropy(prior, m):
    """Relative entropy S[f, q] = -int f ln(f / q) dx of the density with multipliers ``m``."""
    mom = maxent_moments(prior, m.lambda1, m.lambda2, m.lambda3)
    return mom.log_z + m.lambda1 * mom.mean_x + m.lambda2 * mom.mean_inv_x - (m.lambda3 - 1.0) * mom.mean_log_x


@dataclass(frozen=True)
class MaxEntSolution:
    multipliers: Multipliers
    iterations: int
    dual_history: tuple
    moments: Moments = field(repr=False)


def _hyperbolic_guess(c):
    """Order-0 GIG reproducing the arithmetic and harmonic targets exactly."""
    from scipy.optimize import brentq

    ratio = c.target_mu * c.target_inv_eta

    def excess(log_beta):
        beta = math.exp(log_beta)
        lk = log_bessel_k(np.array([0.0, 1.0]), beta)
        return 2.0 * (lk[1] - lk[0]) - math.log(ratio)

    lo, hi = math.log(ARG_MIN), math.log(ARG_MAX)
    if excess(lo) <= 0:
        beta = ARG_MIN
    elif excess(hi) >= 0:
        beta = ARG_MAX
    else:
        beta = math.exp(brentq(excess, lo, hi, xtol=1e-6))
    alpha = math.sqrt(c.target_mu / c.target_inv_eta)
    return np.array([beta / (2.0 * alpha), beta * alpha / 2.0, 0.0])


def _initial_guess(prior, c):
    l = np.array([0.0, 0.0, 1.0])
    if not prior.is_uniform:
        return l
    free = set(c.free)
    if free == {0, 1, 2}:
        return _hyperbolic_guess(c)
    if 0 in free:
        l[0] = 1.0 / c.target_mu
        if 1 in free:
            l[1] = 0.1 / c.target_inv_eta
    elif 1 in free and 2 in free:
        # inverse gamma with shape 1 at the harmonic scale
        l[1] = 1.0 / c.target_inv_eta
        l[2] = -1.0
    else:
        raise NoSolutionError(
            "with a uniform prior on (0, inf) the arithmetic mean, or the harmonic and geometric "
            "means together, must be conserved for the density to be normalizable"
        )
    return l


def _backtrack(evaluate, lam, free, step, g, dual):
    """Armijo backtracking; returns (t, point, dual, moments) or None."""
    slope = float(g @ step)
    t = 1.0
    for _ in range(60):
        trial = lam.copy()
        trial[free] += t * step
        tdual, tmom = evaluate(trial)
        if tdual <= dual + 1e-4 * t * slope and tdual < dual:
            return t, trial, tdual, tmom
        t *= 0.5
    return None


def solve_multipliers_detail(prior, constraints, init=None, max_iter=MAX_ITER):
    """
    Minimize the dual by safeguarded Newton iteration.

    Far from the optimum, steps are backtracked until the dual decreases
    (non-normalizable trial points count as +inf) and a diagonally scaled
    gradient step is tried whenever Newton is heavily damped. Close to the
    optimum the dual is flat to rounding, so full Newton steps are accepted
    while they reduce the moment residual.
    """
    check_feasible(constraints)
    c = constraints
    free = list(c.free)
    target = np.array([
        c.target_mu if c.target_mu is not None else 0.0,
        c.target_inv_eta if c.target_inv_eta is not None else 0.0,
        c.target_log_gamma if c.target_log_gamma is not None else 0.0,
    ])
    scale = np.array([target[0], target[1], 1.0])[free]

    if init is not None:
        lam = np.array([init.lambda1, init.lambda2, init.lambda3], dtype=float)
        for i, pinned in enumerate((0.0, 0.0, 1.0)):
            if i not in free:
                lam[i] = pinned
    else:
        lam = _initial_guess(prior, c)

    def evaluate(l):
        try:
            mom = maxent_moments(prior, *l)
        except (NonNormalizableError, RangeError):
            return math.inf, None
        dual = mom.log_z + l[0] * target[0] + l[1] * target[1] - (l[2] - 1.0) * target[2]
        return dual, mom

    def gradient(mom):
        return np.array([target[0] - mom.mean_x, target[1] - mom.mean_inv_x, mom.mean_log_x - target[2]])[free]

    def done(it, lam, mom):
        return MaxEntSolution(Multipliers(mom.log_z, *lam.tolist()), it, tuple(history), mom)

    dual, mom = evaluate(lam)
    if mom is None:
        raise NonNormalizableError("initial multipliers are not normalizable for this prior")
    history = [dual]
    for it in range(max_iter):
        g = gradient(mom)
        resid = np.max(np.abs(g) / scale)
        if resid <= MOMENT_RTOL:
            return done(it, lam, mom)
        log.debug("iter %d multipliers %s dual %.16g residual %.3g", it, lam, dual, resid)
        h = mom.covariance[np.ix_(free, free)]
        steepest = -g / np.maximum(np.abs(np.diag(h)), 1e-300)
        try:
            chol = np.linalg.cholesky(h)
            newton = -np.linalg.solve(chol.T, np.linalg.solve(chol, g))
        except np.linalg.LinAlgError:
            newton = steepest
        if float(g @ newton) >= 0:
            newton = steepest

        if resid < _LOCAL:
            trial = lam.copy()
            trial[free] += newton
            tdual, tmom = evaluate(trial)
            if tmom is not None and np.max(np.abs(gradient(tmom)) / scale) < resid:
                lam, dual, mom = trial, min(tdual, dual), tmom
                history.append(dual)
                continue
            if resid <= _ACCEPT:
                return done(it, lam, mom)
            raise NoSolutionError(f"Newton iteration stalled at relative residual {resid:.3g}")

        best = _backtrack(evaluate, lam, free, newton, g, dual)
        if best is None or best[0] < _DAMPED:
            # Newton steps that run into the normalizability boundary stall
            alt = _backtrack(evaluate, lam, free, steepest, g, dual)
            if alt is not None and (best is None or alt[2] < best[2]):
                best = alt
        if best is None:
            raise NoSolutionError("line search failed; targets are not attainable under this prior")
        _, lam, dual, mom = best
        history.append(dual)
        if np.max(np.abs(lam)) > 1e12:
            raise NoSolutionError("multipliers diverge; targets are not attainable under this prior")
    resid = np.max(np.abs(gradient(mom)) / scale)
    if resid <= _ACCEPT:
        return done(max_iter, lam, mom)
    raise NoSolutionError(f"no convergence after {max_iter} iterations (relative residual {resid:.3g})")


def solve_multipliers(prior, constraints, init=None):
    return solve_multipliers_detail(prior, constraints, init).multipliers
