"""
Adaptive Gauss-Kronrod (7/15) quadrature for vector-valued integrands.

Integrals over (0, inf) are taken in ``u = ln x``. The caller supplies the log
of a positive weight ``phi(u)`` (including the Jacobian) together with a set of
moment functions; all of them share one adaptive panel set.
"""

import numpy as np

from .errors import NonNormalizableError

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes
GAUSS_W = np.zeros(15)
GAUSS_W[1::2] = np.concatenate([_WG[:-1], _WG[::-1]])

U_LIMIT = 700.0


def _panel_sums(f, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    u = mid[:, None] + half[:, None] * NODES
    vals = f(u.ravel()).reshape(-1, len(a), 15)
    kron = (vals * KRONROD_W).sum(axis=-1) * half
    gauss = (vals * GAUSS_W).sum(axis=-1) * half
    return kron, np.abs(kron - gauss)


def integrate(f, breaks, rtol=1e-11, atol=0.0, max_panels=4000):
    """
    Integrate a vector-valued function over ``[breaks[0], breaks[-1]]``.

    ``f`` maps a 1-D array of abscissae to an array of shape ``(m, n)``.
    Panels whose error estimate exceeds their share of the tolerance are
    bisected until every component meets ``rtol * |I| + atol``.

    Returns
    -------
    value, error : ndarray of shape (m,)
    """
    breaks = np.asarray(breaks, dtype=float)
    a, b = breaks[:-1], breaks[1:]
    val, err = _panel_sums(f, a, b)
    while True:
        total = val.sum(axis=1)
        tol = rtol * np.abs(total) + atol
        total_err = err.sum(axis=1)
        if np.all(total_err <= tol) or len(a) >= max_panels:
            return total, total_err
        share = tol[:, None] * (b - a) / (breaks[-1] - breaks[0])
        split = np.any(err > share, axis=0)
        if not split.any():
            split = np.any(err >= err.max(axis=1, keepdims=True), axis=0)
        mid = 0.5 * (a[split] + b[split])
        na = np.concatenate([a[split], mid])
        nb = np.concatenate([mid, b[split]])
        nval, nerr = _panel_sums(f, na, nb)
        keep = ~split
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        val = np.concatenate([val[:, keep], nval], axis=1)
        err = np.concatenate([err[:, keep], nerr], axis=1)


def log_window(log_weight, cutoff=60.0, extra=(), step=0.25, limit=U_LIMIT):
    """
    Locate the region of ``u`` where ``log_weight(u) > max - cutoff``.

    The scan runs over ``[-limit, limit]`` on a grid of spacing ``step`` plus
    any ``extra`` points. Raises :class:`NonNormalizableError` when the weight
    is still above the cutoff at the edge of the scan.

    Returns
    -------
    lo, hi, peak_u, peak_value : float
    """
    grid = np.arange(-limit, limit + step / 2, step)
    if len(extra):
        grid = np.unique(np.concatenate([grid, np.clip(extra, -limit, limit)]))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        vals = log_weight(grid)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    top = int(np.argmax(vals))
    peak = vals[top]
    if not np.isfinite(peak):
        raise NonNormalizableError("integrand vanishes or diverges everywhere on the scan")
    above = np.flatnonzero(vals > peak - cutoff)
    first, last = above[0], above[-1]
    if first == 0 or last == len(grid) - 1:
        raise NonNormalizableError("integrand does not decay within the supported range")
    return grid[first - 1], grid[last + 1], grid[top], peak
