"""Correlation of the per-cutoff Z statistics from the dichotomized designs.

With covariates the (i, j) entry is the cosine of the group indicators after
projecting out the covariate column space; without covariates this collapses
to a closed form in the group sizes alone. The same formula is applied to
both linear and Cox fits (the Cox case is validated empirically in the test
suite rather than derived).
"""

from __future__ import annotations

import numpy as np

from .core import CorrelationMatrix
from .errors import NumericError


def cov_no_covariates(group_sizes, n: int) -> CorrelationMatrix:
    """Closed-form correlation for nested splits with no covariates.

    For high-group sizes m_i <= m_j out of n samples the correlation is
    sqrt((n - m_j) * m_i) / sqrt((n - m_i) * m_j).
    """
    m = np.asarray(group_sizes, dtype=float)
    if m.ndim != 1 or m.size < 1:
        raise NumericError("group sizes must form a nonempty vector")
    if np.any(m <= 0) or np.any(m >= n):
        raise NumericError("degenerate cutoff")
    lo = np.minimum.outer(m, m)
    hi = np.maximum.outer(m, m)
    corr = np.sqrt((n - hi) * lo) / np.sqrt((n - lo) * hi)
    return CorrelationMatrix.from_values(corr)


def cov_with_covariates(x_vectors, covariates: np.ndarray) -> CorrelationMatrix:
    """Correlation after projecting out the covariate span.

    ``covariates`` must already contain the intercept column. Each group
    indicator is orthogonalized against an orthonormal basis of the covariate
    columns; the projection matrix itself is never materialized.
    """
    x = np.column_stack([np.asarray(v, dtype=float) for v in x_vectors])
    c = np.asarray(covariates, dtype=float)
    if c.ndim != 2 or c.shape[0] != x.shape[0]:
        raise NumericError("covariate matrix rows must match the design length")
    q, _ = np.linalg.qr(c)
    resid = x - q @ (q.T @ x)
    gram = resid.T @ resid
    norms2 = np.diag(gram).copy()
    if np.any(norms2 <= 1e-10 * x.shape[0]):
        raise NumericError("zero projected norm")
    scale = np.sqrt(norms2)
    return CorrelationMatrix.from_values(gram / np.outer(scale, scale))


def residual_correlation(x_vectors, masks, covariates: np.ndarray) -> CorrelationMatrix:
    """Correlation for designs observed on differing sample subsets.

    Used by the two-biomarker analysis. Each test's design is residualized
    against the covariates restricted to its own inclusion mask, normalized,
    and zero-padded back to the full sample space; the correlation matrix is
    the Gram matrix of those vectors (so cross terms only involve mask
    intersections, and the result is positive semi-definite by construction).
    With all-true masks this coincides with :func:`cov_with_covariates`.
    """
    n = covariates.shape[0]
    k = len(x_vectors)
    c = np.asarray(covariates, dtype=float)
    padded = np.zeros((n, k))
    for i in range(k):
        mask = np.asarray(masks[i], dtype=bool)
        sub = c[mask]
        if sub.shape[0] <= sub.shape[1]:
            raise NumericError(f"test {i + 1} retains too few samples")
        qb, _ = np.linalg.qr(sub)
        xi = np.asarray(x_vectors[i], dtype=float)[mask]
        ri = xi - qb @ (qb.T @ xi)
        nrm2 = float(ri @ ri)
        if nrm2 <= 1e-10 * mask.sum():
            raise NumericError("zero projected norm")
        padded[mask, i] = ri / np.sqrt(nrm2)
    return CorrelationMatrix.from_values(padded.T @ padded)
