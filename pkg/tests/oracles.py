"""Independent reference implementations used only by the test suite.

These deliberately take the dumbest correct route (explicit normal-equation
inverses, scalar loops over risk sets, golden-section search, plain Monte
Carlo) so that agreement with the package is meaningful.
"""

import numpy as np


def ols_oracle(y, x, covariates=None):
    """Closed-form OLS via explicit normal equations: returns (beta_x, se_x, z)."""
    y = np.asarray(y, dtype=float)
    n = y.size
    cols = [np.ones(n), np.asarray(x, dtype=float)]
    if covariates is not None and np.size(covariates):
        c = np.asarray(covariates, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        cols.extend(c[:, j] for j in range(c.shape[1]))
    d = np.column_stack(cols)
    xtx = d.T @ d
    beta = np.linalg.solve(xtx, d.T @ y)
    resid = y - d @ beta
    s2 = float(resid @ resid) / (n - d.shape[1])
    e1 = np.zeros(d.shape[1])
    e1[1] = 1.0
    g11 = float(np.linalg.solve(xtx, e1)[1])
    se = np.sqrt(s2 * g11)
    return float(beta[1]), float(se), float(beta[1] / se)


def cox_loglik_1d(beta, time, event, x):
    """Log partial likelihood for one binary covariate, Efron tie handling,
    written as plain loops over risk sets."""
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=int)
    x = np.asarray(x, dtype=float)
    ll = 0.0
    for t in np.unique(time[event == 1]):
        at_risk = time >= t
        dead = (time == t) & (event == 1)
        d = int(dead.sum())
        risk_sum = float(np.exp(beta * x[at_risk]).sum())
        dead_sum = float(np.exp(beta * x[dead]).sum())
        ll += beta * float(x[dead].sum())
        for l in range(d):
            ll -= np.log(risk_sum - (l / d) * dead_sum)
    return ll


def cox_oracle_1d(time, event, x, lo=-20.0, hi=20.0, tol=1e-12):
    """Golden-section maximizer of the 1-D partial likelihood plus a central
    finite-difference standard error. Returns (beta, se, z)."""
    invphi = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = cox_loglik_1d(c, time, event, x)
    fd = cox_loglik_1d(d, time, event, x)
    while abs(b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = cox_loglik_1d(c, time, event, x)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = cox_loglik_1d(d, time, event, x)
    beta = 0.5 * (a + b)
    # h balances truncation (h^2) against roundoff (eps/h^2) in the
    # second difference
    h = 1e-3
    f0 = cox_loglik_1d(beta, time, event, x)
    fp = cox_loglik_1d(beta + h, time, event, x)
    fm = cox_loglik_1d(beta - h, time, event, x)
    info = -(fp - 2 * f0 + fm) / (h * h)
    se = 1.0 / np.sqrt(info)
    return beta, se, beta / se


def mvn_mc_oracle(lower, upper, sigma, n_draws=10_000_000, seed=0, chunk=1_000_000):
    """Plain Monte Carlo estimate of P(lower <= Z <= upper): returns (p, se)."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    sigma = np.asarray(getattr(sigma, "values", sigma), dtype=float)
    chol = np.linalg.cholesky(sigma)
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < n_draws:
        take = min(chunk, n_draws - done)
        z = rng.standard_normal((take, sigma.shape[0])) @ chol.T
        hits += int(np.all((z >= lower) & (z <= upper), axis=1).sum())
        done += take
    p = hits / n_draws
    se = np.sqrt(max(p * (1 - p), 1e-300) / n_draws)
    return p, se


def bh_oracle(p):
    """Step-up adjustment by direct definition: q_(i) = min_{j>=i} p_(j)*m/j."""
    p = np.asarray(p, dtype=float)
    m = p.size
    order = np.argsort(p, kind="stable")
    q = np.empty(m)
    for rank_pos, idx in enumerate(order):
        candidates = [p[order[j]] * m / (j + 1) for j in range(rank_pos, m)]
        q[idx] = min(1.0, min(candidates))
    return q
