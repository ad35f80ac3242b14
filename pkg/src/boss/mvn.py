"""Multivariate normal rectangle probabilities P(l <= Z <= u).

The integrator uses the separation-of-variables transform: a singularity-
tolerant Cholesky factorization (with Genz-Bretz dynamic variable reordering
by conditional truncation mass) maps the rectangle probability onto the unit
cube, which is integrated by randomized quasi-Monte Carlo under 12
independent scrambles. Points double adaptively until the requested
tolerance or the point budget is reached. Everything is deterministic given
the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

from .errors import InputError, NumericError

_N_SHIFTS = 12
_MAX_POINTS = 2 ** 22
_FIRST_BATCH = 1024
_UNIT_EPS = 1e-15
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class MvnResult:
    """Rectangle probability with its Monte Carlo error bound (3.5 sigma)."""

    probability: float
    error_estimate: float
    points_used: int
    tol_met: bool


def _npdf(x: float) -> float:
    if not math.isfinite(x):
        return 0.0
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def _reordered_cholesky(corr: np.ndarray, lo: np.ndarray, up: np.ndarray):
    """Lower Cholesky factor with variables pivoted so the one with the
    smallest conditional truncation mass comes first; tolerates exactly
    singular PSD input (a vanished pivot zeroes its column).

    The conditioning uses the running conditional expectations of the
    transformed variables, following the standard reordering for this
    transform.
    """
    k = corr.shape[0]
    a = corr.copy()
    l = lo.copy()
    u = up.copy()
    c = np.zeros((k, k))
    y = np.zeros(k)
    for i in range(k):
        best_j, best_p = i, math.inf
        for j in range(i, k):
            djj = a[j, j] - c[j, :i] @ c[j, :i]
            if djj <= 1e-12:
                continue
            s = c[j, :i] @ y[:i]
            sq = math.sqrt(djj)
            p = ndtr((u[j] - s) / sq) - ndtr((l[j] - s) / sq)
            if p < best_p:
                best_p, best_j = p, j
        if best_j != i:
            a[[i, best_j], :] = a[[best_j, i], :]
            a[:, [i, best_j]] = a[:, [best_j, i]]
            c[[i, best_j], :i] = c[[best_j, i], :i]
            l[[i, best_j]] = l[[best_j, i]]
            u[[i, best_j]] = u[[best_j, i]]
        dii = a[i, i] - c[i, :i] @ c[i, :i]
        if dii < -1e-8:
            raise NumericError("covariance is not positive semi-definite")
        if dii <= 1e-12:
            continue
        c[i, i] = math.sqrt(dii)
        if i + 1 < k:
            c[i + 1:, i] = (a[i + 1:, i] - c[i + 1:, :i] @ c[i, :i]) / c[i, i]
        s = float(c[i, :i] @ y[:i])
        lt = (l[i] - s) / c[i, i]
        ut = (u[i] - s) / c[i, i]
        den = ndtr(ut) - ndtr(lt)
        y[i] = (_npdf(lt) - _npdf(ut)) / den if den > 1e-300 else 0.0
    return c, l, u


def _cube_integrand(lo, up, chol, w):
    """Probability contribution of each cube point. ``w`` is (points, k-1)."""
    k = lo.size
    npts = w.shape[0]
    d = np.full(npts, ndtr(lo[0]))
    e = np.full(npts, ndtr(up[0]))
    prob = e - d
    y = np.empty((k - 1, npts))
    for i in range(1, k):
        u = np.clip(d + w[:, i - 1] * (e - d), _UNIT_EPS, 1.0 - _UNIT_EPS)
        y[i - 1] = ndtri(u)
        shift = chol[i, :i] @ y[:i]
        cii = chol[i, i]
        if cii > 0.0:
            d = ndtr((lo[i] - shift) / cii)
            e = ndtr((up[i] - shift) / cii)
        else:
            # degenerate coordinate: the sample sits exactly at ``shift``
            e = (shift <= up[i]).astype(float)
            d = (shift < lo[i]).astype(float)
        prob = prob * (e - d)
    return prob


def mvn_rectangle(lower, upper, sigma, tol: float = 1e-5, seed=0,
                  max_points: int = _MAX_POINTS) -> MvnResult:
    """P(lower <= Z <= upper) for Z ~ N(0, sigma), with an error bound.

    Infinite bounds are allowed; k = 1 is evaluated analytically. The result
    carries ``tol_met=False`` when the point budget ran out before the
    requested tolerance was reached.
    """
    sig = np.asarray(getattr(sigma, "values", sigma), dtype=float)
    if sig.ndim == 0:
        sig = sig.reshape(1, 1)
    lo = np.atleast_1d(np.asarray(lower, dtype=float))
    up = np.atleast_1d(np.asarray(upper, dtype=float))
    k = lo.size
    if up.size != k or sig.shape != (k, k):
        raise InputError("bounds and covariance dimensions disagree")
    if np.any(lo >= up):
        raise InputError("lower bounds must be strictly below upper bounds")
    if tol <= 0:
        raise InputError("tol must be positive")
    diag = np.diag(sig)
    if np.any(diag <= 0):
        raise NumericError("covariance diagonal must be positive")

    # standardize to a correlation matrix
    s = np.sqrt(diag)
    corr = sig / np.outer(s, s)
    lo = lo / s
    up = up / s

    if k == 1:
        p = float(ndtr(up[0]) - ndtr(lo[0]))
        return MvnResult(min(max(p, 0.0), 1.0), 1e-15, 0, True)

    chol, lo, up = _reordered_cholesky(corr, lo, up)

    rng = np.random.default_rng(seed)
    engines = [qmc.Sobol(d=k - 1, scramble=True, seed=int(sd))
               for sd in rng.integers(0, 2 ** 63 - 1, size=_N_SHIFTS)]

    per_shift_cap = max(max_points // _N_SHIFTS, _FIRST_BATCH)
    sums = np.zeros(_N_SHIFTS)
    n_done = 0
    err = math.inf
    est = 0.0
    while True:
        # double the total each stage so every prefix stays a balanced 2^m set
        take = min(_FIRST_BATCH if n_done == 0 else n_done, per_shift_cap - n_done)
        w = np.concatenate([eng.random(take) for eng in engines], axis=0)
        vals = _cube_integrand(lo, up, chol, w)
        sums += vals.reshape(_N_SHIFTS, take).sum(axis=1)
        n_done += take
        means = sums / n_done
        est = float(means.mean())
        err = 3.5 * float(means.std(ddof=1)) / math.sqrt(_N_SHIFTS)
        if err <= tol or n_done >= per_shift_cap:
            break

    return MvnResult(min(max(est, 0.0), 1.0), err, n_done * _N_SHIFTS, err <= tol)
