"""Per-cutoff model fits: OLS for quantitative outcomes, Cox for survival.

Both fitters return a :class:`~boss.core.CutoffTest` holding the coefficient
of the binary group indicator, its standard error and the Wald Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .core import CutoffTest, Survival
from .errors import FitError, InputError

_SEPARATION_BOUND = 50.0


@dataclass(frozen=True)
class FitConfig:
    """Fitting options. ``ties`` and the iteration controls apply to Cox only."""

    model: str = "linear"
    max_iter: int = 50
    tol: float = 1e-9
    ties: str = "efron"

    def __post_init__(self):
        if self.model not in ("linear", "cox"):
            raise InputError(f"unknown model '{self.model}'")
        if self.ties not in ("efron", "breslow"):
            raise InputError(f"unknown tie correction '{self.ties}'")
        if self.tol <= 0:
            raise InputError("tol must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be at least 1")


# ---------------------------------------------------------------------------
# Linear model
# ---------------------------------------------------------------------------

def _ols(design: np.ndarray, y: np.ndarray):
    """QR-based least squares. Returns (coef, ssr, r_inverse)."""
    n, q = design.shape
    if n <= q:
        raise FitError("design has no residual degrees of freedom")
    qmat, rmat = np.linalg.qr(design)
    rdiag = np.abs(np.diag(rmat))
    if rdiag.min() <= 1e-10 * max(rdiag.max(), 1.0):
        raise FitError("collinear design")
    coef = solve_triangular(rmat, qmat.T @ y, lower=False)
    resid = y - design @ coef
    ssr = float(resid @ resid)
    rinv = solve_triangular(rmat, np.eye(q), lower=False)
    return coef, ssr, rinv


def fit_linear(y, x, covariates=None, cutoff_index: int = 0,
               cutoff: float = math.nan) -> CutoffTest:
    """OLS fit of outcome on [intercept, group indicator, covariates].

    The standard error uses the unbiased residual variance with
    n - p - 2 degrees of freedom. Never forms an explicit inverse of the
    normal equations; everything flows through one QR factorization.
    """
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    n = y.size
    if x.size != n:
        raise InputError("outcome and group indicator differ in length")
    cov = np.empty((n, 0)) if covariates is None else np.asarray(covariates, dtype=float)
    if cov.ndim == 1:
        cov = cov[:, None]
    design = np.column_stack([np.ones(n), x, cov])
    coef, ssr, rinv = _ols(design, y)
    df = n - design.shape[1]
    sst = float(np.sum((y - y.mean()) ** 2))
    # a constant outcome has sst ~ 0, so anchor the floor on the raw scale
    if ssr <= 1e-12 * max(sst, 1e-12 * float(y @ y)):
        raise FitError("degenerate outcome")
    s2 = ssr / df
    se = math.sqrt(s2 * float(rinv[1] @ rinv[1]))
    beta = float(coef[1])
    n_high = int(round(float(x.sum())))
    return CutoffTest(cutoff_index, beta, se, beta / se, n_high, n - n_high, cutoff)


# ---------------------------------------------------------------------------
# Cox proportional hazards
# ---------------------------------------------------------------------------

class _CoxData:
    """Preprocessed survival data: sorted by time, tie groups flattened for
    the Efron/Breslow denominators."""

    def __init__(self, time, event, design, ties):
        order = np.argsort(time, kind="stable")
        self.time = time[order]
        self.event = event[order].astype(bool)
        self.m = design[order]
        self.n, self.q = self.m.shape

        # unique times; group g spans sorted rows [starts[g], starts[g+1])
        _, starts = np.unique(self.time, return_index=True)
        self.starts = starts
        counts = np.diff(np.append(starts, self.n))
        # events per tie group
        ev_cum = np.concatenate([[0], np.cumsum(self.event)])
        ends = starts + counts
        d = ev_cum[ends] - ev_cum[starts]
        keep = d > 0
        self.g_start = starts[keep]
        self.g_end = ends[keep]
        self.d = d[keep]
        # one denominator term per (group, event-within-group); Breslow uses
        # fraction 0 with multiplicity d, Efron fractions l/d for l = 0..d-1
        self.flat_group = np.repeat(np.arange(self.d.size), self.d)
        if ties == "efron":
            self.flat_frac = np.concatenate(
                [np.arange(di) / di for di in self.d]) if self.d.size else np.empty(0)
        else:
            self.flat_frac = np.zeros(self.flat_group.size)

    def loglik(self, beta):
        return self._eval(beta, want_derivs=False)[0]

    def loglik_grad_hess(self, beta):
        return self._eval(beta, want_derivs=True)

    def _eval(self, beta, want_derivs):
        # center the linear predictor so exp() cannot overflow; the constant
        # cancels exactly because it is subtracted from both terms
        eta = self.m @ beta
        eta = eta - eta.max()
        w = np.exp(eta)
        ev = self.event

        # suffix sums over the risk sets
        s0_suffix = np.cumsum(w[::-1])[::-1]
        s0 = s0_suffix[self.g_start]
        wm = w[:, None] * self.m
        s1 = np.cumsum(wm[::-1], axis=0)[::-1][self.g_start]

        # within-tie-group sums over events only
        wm_ev = np.where(ev[:, None], wm, 0.0)
        w_ev = np.where(ev, w, 0.0)
        cw = np.concatenate([[0.0], np.cumsum(w_ev)])
        cwm = np.vstack([np.zeros(self.q), np.cumsum(wm_ev, axis=0)])
        e0 = cw[self.g_end] - cw[self.g_start]
        e1 = cwm[self.g_end] - cwm[self.g_start]

        fg, fr = self.flat_group, self.flat_frac
        d0 = s0[fg] - fr * e0[fg]
        ll = float(eta[ev].sum() - np.log(d0).sum())
        if not want_derivs:
            return ll, None, None

        d1 = s1[fg] - fr[:, None] * e1[fg]
        mu = d1 / d0[:, None]
        grad = self.m[ev].sum(axis=0) - mu.sum(axis=0)

        outer = w[:, None, None] * (self.m[:, :, None] * self.m[:, None, :])
        s2 = np.cumsum(outer[::-1], axis=0)[::-1][self.g_start]
        outer_ev = np.where(ev[:, None, None], outer, 0.0)
        cwm2 = np.concatenate([np.zeros((1, self.q, self.q)), np.cumsum(outer_ev, axis=0)])
        e2 = cwm2[self.g_end] - cwm2[self.g_start]
        d2 = s2[fg] - fr[:, None, None] * e2[fg]
        info = (d2 / d0[:, None, None] - mu[:, :, None] * mu[:, None, :]).sum(axis=0)
        return ll, grad, info


def fit_cox(time, event, x, covariates=None, cfg: FitConfig | None = None,
            cutoff_index: int = 0, cutoff: float = math.nan) -> CutoffTest:
    """Maximum partial-likelihood Cox fit via Newton iterations.

    Convergence is declared on the coefficient change; the step is halved
    whenever the partial likelihood would decrease. The standard error comes
    from the inverse observed information at the optimum.
    """
    cfg = cfg or FitConfig(model="cox")
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=float)
    x = np.asarray(x, dtype=float)
    n = time.size
    if event.size != n or x.size != n:
        raise InputError("time, event and group indicator differ in length")
    if event.sum() < 2:
        raise FitError("fewer than 2 events")
    cov = np.empty((n, 0)) if covariates is None else np.asarray(covariates, dtype=float)
    if cov.ndim == 1:
        cov = cov[:, None]
    design = np.column_stack([x, cov])
    q = design.shape[1]

    # rank check on the centered design: a constant column carries no
    # information in a partial likelihood
    centered = design - design.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    if sv.min() <= 1e-10 * max(sv.max(), 1.0) or centered.shape[0] <= q:
        raise FitError("collinear design")

    data = _CoxData(time, event, design, cfg.ties)
    beta = np.zeros(q)
    ll, grad, info = data.loglik_grad_hess(beta)
    converged = False
    for _ in range(cfg.max_iter):
        try:
            delta = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            raise FitError("collinear design", last_beta=beta) from None
        # step halving on likelihood decrease
        for _ in range(30):
            cand = beta + delta
            ll_new = data.loglik(cand)
            if ll_new >= ll - 1e-10:
                break
            delta = 0.5 * delta
        else:
            raise FitError("step halving failed to improve the partial likelihood",
                           last_beta=beta)
        beta = cand
        if np.abs(beta).max() > _SEPARATION_BOUND:
            raise FitError("infinite coefficient", last_beta=beta)
        step = float(np.abs(delta).max())
        ll, grad, info = data.loglik_grad_hess(beta)
        if step < cfg.tol:
            converged = True
            break
    if np.abs(beta).max() > 5.0:
        # monotone likelihood shows up as an improvement when the coefficient
        # is pushed further out along its ray
        if data.loglik(1.5 * beta) >= ll - 1e-8:
            raise FitError("infinite coefficient", last_beta=beta)
    if not converged:
        raise FitError(f"no convergence in {cfg.max_iter} iterations", last_beta=beta)

    try:
        cov_beta = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise FitError("collinear design", last_beta=beta) from None
    var = float(cov_beta[0, 0])
    if var <= 0 or not math.isfinite(var):
        raise FitError("degenerate information matrix", last_beta=beta)
    se = math.sqrt(var)
    b0 = float(beta[0])
    n_high = int(round(float(x.sum())))
    return CutoffTest(cutoff_index, b0, se, b0 / se, n_high, n - n_high, cutoff)


def fit_outcome(outcome, x, covariates, cfg: FitConfig,
                cutoff_index: int = 0, cutoff: float = math.nan) -> CutoffTest:
    """Dispatch on the configured model family."""
    if cfg.model == "cox":
        if not isinstance(outcome, Survival):
            raise InputError("cox model requires a survival outcome")
        return fit_cox(outcome.time, outcome.event, x, covariates, cfg,
                       cutoff_index, cutoff)
    if isinstance(outcome, Survival):
        raise InputError("linear model requires a quantitative outcome")
    return fit_linear(outcome.values, x, covariates, cutoff_index, cutoff)
