"""
Adaptive random-walk Metropolis over a batch of independent walkers.

During burn-in the proposal covariance is re-estimated from recent pooled
history and a global scale is tuned toward a target acceptance rate by a
Robbins-Monro recursion with diminishing gain. Both are frozen afterward,
so the retained part of the run is an ordinary Metropolis chain.
"""

from dataclasses import dataclass

import numpy as np

TARGET_ACCEPT = 0.234
_COV_EVERY = 100
_JITTER = 1e-12


@dataclass
class SamplerRun:
    samples: np.ndarray  # (n_keep, walkers, d)
    log_target: np.ndarray  # (n_keep, walkers)
    aux: np.ndarray  # (n_keep, walkers)
    acceptance_rate: float
    cov: np.ndarray
    scale: float
    state: np.ndarray
    state_log_target: np.ndarray
    state_aux: np.ndarray


def _chol(cov):
    d = cov.shape[0]
    bump = _JITTER * max(1.0, float(np.trace(cov)) / d)
    for _ in range(20):
        try:
            return np.linalg.cholesky(cov + bump * np.eye(d))
        except np.linalg.LinAlgError:
            bump *= 10.0
    return np.diag(np.sqrt(np.maximum(np.diag(cov), bump)))


def adaptive_metropolis(
    log_target,
    x0,
    n_iter,
    burn_in,
    thin,
    rng,
    *,
    cov=None,
    scale=None,
    adapt=True,
    initial=None,
):
    """
    Run ``n_iter`` Metropolis steps for every walker in ``x0``.

    ``log_target`` maps an (m, d) array to ``(log_density, aux)``, both of
    shape (m,); ``aux`` is stored alongside each retained draw (the
    samplers in this package keep the log-likelihood there). Steps with
    index ``>= burn_in`` whose offset from ``burn_in`` is a multiple of
    ``thin`` are retained. ``initial`` may carry the already-evaluated
    ``(log_density, aux)`` of ``x0``.
    """
    x = np.array(x0, dtype=float, copy=True)
    m, d = x.shape
    lp, aux = initial if initial is not None else log_target(x)
    lp, aux = np.array(lp, dtype=float), np.array(aux, dtype=float)
    cov = np.eye(d) * 1e-4 if cov is None else np.array(cov, dtype=float)
    log_scale = np.log(2.38 / np.sqrt(d)) if scale is None else np.log(scale)
    chol = _chol(cov)

    n_keep = max(0, (n_iter - burn_in + thin - 1) // thin)
    samples = np.empty((n_keep, m, d))
    kept_lp = np.empty((n_keep, m))
    kept_aux = np.empty((n_keep, m))
    history = np.empty((burn_in if adapt else 0, m, d))
    accepted = 0
    kept = 0
    # the last quarter of burn-in tunes only the scale, against the final covariance
    cov_until = int(0.75 * burn_in)

    for it in range(n_iter):
        step = rng.standard_normal((m, d)) @ chol.T
        prop = x + np.exp(log_scale) * step
        lp_prop, aux_prop = log_target(prop)
        log_u = np.log(rng.random(m))
        with np.errstate(invalid="ignore"):
            ok = np.isfinite(lp_prop) & (log_u < lp_prop - lp)
        x[ok] = prop[ok]
        lp[ok] = lp_prop[ok]
        aux[ok] = aux_prop[ok]

        if it < burn_in:
            if adapt:
                history[it] = x
                gain = 1.0 / (1.0 + it / 10.0) ** 0.6
                log_scale += gain * (ok.mean() - TARGET_ACCEPT)
                if (it + 1) % _COV_EVERY == 0 and 2 * _COV_EVERY <= it + 1 <= cov_until:
                    recent = history[(it + 1) // 2 : it + 1].reshape(-1, d)
                    fresh = np.atleast_2d(np.cov(recent, rowvar=False))
                    if np.all(np.diag(fresh) > 0):
                        cov = fresh
                        chol = _chol(cov)
        else:
            accepted += int(ok.sum())
            if (it - burn_in) % thin == 0:
                samples[kept] = x
                kept_lp[kept] = lp
                kept_aux[kept] = aux
                kept += 1

    post = max(1, (n_iter - burn_in) * m)
    return SamplerRun(
        samples, kept_lp, kept_aux, accepted / post, cov, float(np.exp(log_scale)), x, lp, aux
    )


@dataclass
class TemperedRun:
    log_likelihood: np.ndarray  # (n_keep, temps, walkers)
    acceptance: np.ndarray  # (temps,)
    swap_rate: np.ndarray  # (temps - 1,)
    state: np.ndarray


def parallel_tempering(
    evaluate, draw_reference, temps, x0, n_iter, burn_in, thin, rng, *, cov, scale
):
    """
    Replica-exchange Metropolis over the power posteriors ``prior * L**t``.

    ``evaluate`` maps an (n, d) array to ``(log_prior, log_likelihood)``;
    ``draw_reference(n, rng)`` returns exact prior draws, used as an
    independence proposal at ``t = 0`` (always accepted). ``x0`` has shape
    (temps, walkers, d); ``cov`` (temps, d, d) and ``scale`` (temps,) seed
    the per-temperature proposals, adapted during burn-in as in
    :func:`adaptive_metropolis`. Adjacent temperatures swap states within
    each walker column, alternating even and odd pairs.
    """
    temps = np.asarray(temps, dtype=float)
    x = np.array(x0, dtype=float, copy=True)
    n_t, m, d = x.shape
    reference = temps[0] == 0.0
    if reference:
        x[0] = draw_reference(m, rng)
    lpz, ll = (a.reshape(n_t, m) for a in evaluate(x.reshape(-1, d)))
    cov = np.array(cov, dtype=float)
    chol = np.stack([_chol(c) for c in cov])
    log_scale = np.log(np.asarray(scale, dtype=float)).copy()

    def tempered(lp, lik):
        with np.errstate(invalid="ignore"):
            val = lp + temps[:, None] * lik
        return np.where(temps[:, None] == 0.0, lp, np.where(np.isfinite(lik), val, -np.inf))

    target = tempered(lpz, ll)
    n_keep = max(0, (n_iter - burn_in + thin - 1) // thin)
    kept = np.empty((n_keep, n_t, m))
    history = np.empty((burn_in, n_t, m, d))
    accepted = np.zeros(n_t)
    swaps = np.zeros(n_t - 1)
    swap_tries = np.zeros(n_t - 1)
    cov_until = int(0.75 * burn_in)
    k = 0

    for it in range(n_iter):
        eps = rng.standard_normal((n_t, m, d))
        prop = x + np.exp(log_scale)[:, None, None] * np.einsum("tmd,ted->tme", eps, chol)
        if reference:
            prop[0] = draw_reference(m, rng)
        lpz_p, ll_p = (a.reshape(n_t, m) for a in evaluate(prop.reshape(-1, d)))
        target_p = tempered(lpz_p, ll_p)
        log_u = np.log(rng.random((n_t, m)))
        with np.errstate(invalid="ignore"):
            ok = np.isfinite(target_p) & (log_u < target_p - target)
        if reference:
            ok[0] = True
        x[ok], lpz[ok], ll[ok], target[ok] = prop[ok], lpz_p[ok], ll_p[ok], target_p[ok]

        # swaps between rungs j and j+1 for j of the current parity
        pairs = np.arange(it % 2, n_t - 1, 2)
        if len(pairs):
            dt = (temps[pairs + 1] - temps[pairs])[:, None]
            with np.errstate(invalid="ignore"):
                log_a = dt * (ll[pairs] - ll[pairs + 1])
            log_v = np.log(rng.random((len(pairs), m)))
            swap = np.nan_to_num(log_a, nan=-np.inf) > log_v
            for arr in (x, lpz, ll):
                lo, hi = arr[pairs].copy(), arr[pairs + 1].copy()
                mask = swap.reshape(swap.shape + (1,) * (arr.ndim - 2))
                arr[pairs] = np.where(mask, hi, lo)
                arr[pairs + 1] = np.where(mask, lo, hi)
            target = tempered(lpz, ll)
            swaps[pairs] += swap.sum(axis=1)
            swap_tries[pairs] += m

        if it < burn_in:
            history[it] = x
            gain = 1.0 / (1.0 + it / 10.0) ** 0.6
            log_scale += gain * (ok.mean(axis=1) - TARGET_ACCEPT)
            if (it + 1) % _COV_EVERY == 0 and 2 * _COV_EVERY <= it + 1 <= cov_until:
                recent = history[(it + 1) // 2 : it + 1]
                for j in range(n_t):
                    fresh = np.atleast_2d(np.cov(recent[:, j].reshape(-1, d), rowvar=False))
                    if np.all(np.diag(fresh) > 0):
                        cov[j] = fresh
                        chol[j] = _chol(fresh)
        else:
            accepted += ok.sum(axis=1)
            if (it - burn_in) % thin == 0:
                kept[k] = ll
                k += 1

    post = max(1, (n_iter - burn_in) * m)
    rate = swaps / np.maximum(swap_tries, 1)
    return TemperedRun(kept, accepted / post, rate, x)
