"""
Evidence estimation along a ladder of power posteriors and the resulting
posterior over the number of mixture components.

Rung ``j`` targets ``prior * L**t_j`` with ``t_j = (j / (T - 1))**5``. All
rungs are sampled together by parallel tempering, started at a posterior
mode; the ``t = 0`` rung draws exactly from the prior, and swaps carry
those draws up the ladder. Stepping stone multiplies the ratios
``Z(t_{j+1}) / Z(t_j)``, each bridged at the midpoint from both rungs;
thermodynamic integration applies the trapezoid rule to ``E_t[ln L]`` on
the same samples.
"""

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .inference import Posterior, _spread, initial_points, locate_mode
from .mcmc import parallel_tempering
from .sampling import make_rng

log = logging.getLogger(__name__)


class Method(str, enum.Enum):
    STEPPING_STONE = "stepping_stone"
    THERMODYNAMIC = "thermodynamic_integration"


@dataclass(frozen=True)
class LadderConfig:
    temperatures: int = 32
    samples: int = 10000
    walkers: int = 8
    burn_in: float = 0.5
    thin: int = 1
    exponent: float = 5.0
    nodes: int = 8
    method: Method = Method.STEPPING_STONE

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.temperatures < 2:
            raise DomainError("a ladder needs at least 2 temperatures")
        if self.samples < self.walkers or self.walkers < 2:
            raise DomainError("need at least 2 walkers and one sample per walker")
        if not 0 <= self.burn_in < 1 or self.thin < 1 or self.exponent <= 0:
            raise DomainError("invalid burn-in, thinning or ladder exponent")

    def ladder(self):
        j = np.arange(self.temperatures)
        return (j / (self.temperatures - 1)) ** self.exponent


@dataclass(frozen=True)
class EvidenceEstimate:
    k: int
    log_evidence: float
    standard_error: float
    method: Method
    ladder_size: int
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)


def _log_mean_exp(a):
    """log of the mean of exp(a) over draws, and each walker's relative deviation."""
    top = a.max()
    w = np.exp(a - top)
    mean = w.mean()
    return top + math.log(mean), w.mean(axis=0) / mean - 1.0


def _ratio_terms(lo, hi, dt):
    """
    Log of Z(t + dt) / Z(t) by the midpoint bridge
    E_t[L**(dt/2)] / E_{t+dt}[L**(-dt/2)], with per-walker error terms.

    The one-sided ratio E_t[L**dt] has infinite variance once the next
    temperature exceeds twice the current one, which the power ladder does
    at its low end; both halves of the bridge have finite variance.
    """
    fwd, dev_f = _log_mean_exp(0.5 * dt * lo)
    bwd, dev_b = _log_mean_exp(-0.5 * dt * hi)
    return fwd - bwd, dev_f - dev_b


def _stepping_stone(ladder, rungs):
    """
    Sum of the per-rung log ratios. Swaps correlate rungs within a walker
    column, while columns are independent, so the standard error comes
    from the spread of per-column contributions summed over rungs.
    """
    total = 0.0
    per_walker = 0.0
    parts = []
    for j in range(len(ladder) - 1):
        lr, dev = _ratio_terms(rungs[j], rungs[j + 1], ladder[j + 1] - ladder[j])
        total += lr
        per_walker = per_walker + dev
        parts.append(lr)
    m = len(per_walker)
    return total, math.sqrt(per_walker.var(ddof=1) / m), parts


def _thermodynamic(ladder, rungs):
    """
    Trapezoid rule on E_t[ln L] with the end correction that uses
    d/dt E_t[ln L] = Var_t[ln L]; standard error from per-column estimates.
    """
    means = np.array([r.mean() for r in rungs])
    variances = np.array([r.var() for r in rungs])
    dt = np.diff(ladder)
    coef = np.zeros(len(ladder))
    coef[:-1] += 0.5 * dt
    coef[1:] += 0.5 * dt
    correction = float(np.sum(dt**2 / 12.0 * np.diff(variances)))
    columns = coef @ np.stack([r.mean(axis=0) for r in rungs])
    se = float(columns.std(ddof=1) / math.sqrt(len(columns)))
    return float(coef @ means) - correction, se, means


def _rung_covariances(layout, cov, ladder):
    """Mode curvature scaled by 1/t, capped per coordinate at the prior variance."""
    prior_var = np.concatenate([
        np.full(layout.n_logit, np.pi**2 / 3.0),
        np.tile((layout.hi - layout.lo) ** 2 / 12.0, layout.k),
    ])
    sd = np.sqrt(np.diag(cov))
    corr = cov / np.outer(sd, sd)
    out = []
    for t in ladder:
        var = np.minimum(sd**2 / max(t, 1e-300), prior_var)
        out.append(corr * np.sqrt(np.outer(var, var)))
    return np.stack(out)


def sample_ladder(h, k, prior, config=None, seed=0):
    """
    Sample every rung of the ladder jointly by parallel tempering.

    Returns the temperatures, the retained log-likelihoods with shape
    (draws, temperatures, walkers), per-rung acceptance and swap rates.
    """
    config = config or LadderConfig()
    post = Posterior(h, k, prior, config.nodes)
    layout = post.layout
    rng = make_rng(seed)
    ladder = config.ladder()
    m = config.walkers
    per_walker = -(-config.samples // m)
    burn = max(200, int(round(config.burn_in * per_walker * config.thin / (1 - config.burn_in))))
    n_iter = burn + per_walker * config.thin

    z0 = initial_points(post, 1, rng)[0]
    mode, cov = locate_mode(post, z0)
    x0 = np.repeat(_spread(post, mode, cov, m, rng)[None], len(ladder), axis=0)
    covs = _rung_covariances(layout, cov, ladder)
    scale = np.full(len(ladder), 2.38 / np.sqrt(layout.dim))

    def evaluate(z):
        lp_z, _, ll = post.evaluate(z)
        return lp_z, ll

    run = parallel_tempering(
        evaluate, layout.sample_prior, ladder, x0, n_iter, burn, config.thin, rng, cov=covs, scale=scale
    )
    return ladder, run


def estimate_evidence(h, k, prior, config=None, seed=0):
    """
    Log marginal likelihood of a k-component mixture for histogram ``h``.

    The multinomial coefficient is left out, as in the likelihood, so values
    are comparable across k but not absolute.
    """
    config = config or LadderConfig()
    ladder, run = sample_ladder(h, k, prior, config, seed)
    rungs = [run.log_likelihood[:, j, :] for j in range(len(ladder))]
    if not all(np.all(np.isfinite(r)) for r in rungs[1:]):
        raise DomainError("a tempered chain holds a draw with zero likelihood")
    ss, ss_se, parts = _stepping_stone(ladder, rungs)
    ti, ti_se, means = _thermodynamic(ladder, rungs)
    diagnostics = {
        "temperatures": [float(t) for t in ladder],
        "log_ratios": [float(p) for p in parts],
        "mean_log_likelihood": [float(v) for v in means],
        "acceptance": [float(a) for a in run.acceptance],
        "swap_rate": [float(a) for a in run.swap_rate],
        "stepping_stone": {"log_evidence": ss, "standard_error": ss_se},
        "thermodynamic_integration": {"log_evidence": ti, "standard_error": ti_se},
    }
    if config.method is Method.STEPPING_STONE:
        value, se = ss, ss_se
    else:
        value, se = ti, ti_se
    return EvidenceEstimate(int(k), float(value), float(se), config.method, len(ladder), diagnostics)


def k_seed(seed, k):
    """Seed for candidate ``k``, independent of which other candidates run."""
    return np.random.SeedSequence([int(seed), int(k)])


def normalize_over_k(log_evidence, k_prior=None):
    """p(k | h) from log evidences and an optional prior over the candidates."""
    le = np.asarray(log_evidence, dtype=float)
    if k_prior is None:
        lp = np.zeros(len(le))
    else:
        p = np.asarray(k_prior, dtype=float)
        if len(p) != len(le) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise DomainError("k_prior must hold one probability per candidate and sum to 1")
        with np.errstate(divide="ignore"):
            lp = np.log(p)
    a = le + lp
    a = a - a.max()
    w = np.exp(a)
    return w / w.sum()


def posterior_over_k(h, k_values, prior, k_prior=None, config=None, seed=0, threads=1):
    """
    Returns
    -------
    list of (k, probability, EvidenceEstimate), in the order of ``k_values``.
    """
    k_values = [int(k) for k in k_values]
    if not k_values or any(k < 1 for k in k_values):
        raise DomainError("k_values must be a nonempty list of positive integers")
    config = config or LadderConfig()

    def one(k):
        return estimate_evidence(h, k, prior, config, k_seed(seed, k))

    if threads > 1 and len(k_values) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            estimates = list(pool.map(one, k_values))
    else:
        estimates = [one(k) for k in k_values]
    probs = normalize_over_k([e.log_evidence for e in estimates], k_prior)
    return [(k, float(p), e) for k, p, e in zip(k_values, probs, estimates)]


def selection_report(results):
    """Plain-data report of a :func:`posterior_over_k` result."""
    best = max(results, key=lambda r: r[1])
    return {
        "argmax_k": best[0],
        "candidates": [
            {
                "k": k,
                "posterior_probability": p,
                "log_evidence": e.log_evidence,
                "standard_error": e.standard_error,
                "method": e.method.value,
                "ladder_size": e.ladder_size,
                "diagnostics": e.diagnostics,
            }
            for k, p, e in results
        ],
    }
