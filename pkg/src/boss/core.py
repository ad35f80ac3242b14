"""Domain types and cutoff operations shared by every other module.

All containers are frozen dataclasses wrapping read-only numpy arrays, so
instances can be shared freely across workers. Construction validates the
invariants; downstream code may assume them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import InputError, NumericError


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _as_vector(values, name: str, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim != 1:
        raise InputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def default_min_group(n_covariates: int) -> int:
    """Smallest admissible per-arm group size: max(5, p + 2)."""
    return max(5, int(n_covariates) + 2)


# ---------------------------------------------------------------------------
# Outcomes and datasets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Quantitative:
    """Continuous outcome vector."""

    values: np.ndarray

    def __post_init__(self):
        v = _as_vector(self.values, "outcome values")
        if v.size < 1:
            raise InputError("outcome must contain at least one value")
        if not np.all(np.isfinite(v)):
            raise InputError("outcome contains non-finite values")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class Survival:
    """Right-censored survival outcome: observed time and event indicator."""

    time: np.ndarray
    event: np.ndarray

    def __post_init__(self):
        t = _as_vector(self.time, "survival time")
        e = _as_vector(self.event, "event indicator")
        if t.size != e.size:
            raise InputError("time and event vectors differ in length")
        if t.size < 1:
            raise InputError("survival outcome must contain at least one sample")
        if not np.all(np.isfinite(t)) or np.any(t <= 0):
            raise InputError("survival times must be strictly positive and finite")
        if not np.all(np.isin(e, (0.0, 1.0))):
            raise InputError("event indicator must contain only 0 (censored) and 1 (event)")
        object.__setattr__(self, "time", _freeze(t))
        object.__setattr__(self, "event", _freeze(e.astype(np.int64)))

    @property
    def n(self) -> int:
        return self.time.size

    @property
    def n_events(self) -> int:
        return int(self.event.sum())


Outcome = Union[Quantitative, Survival]


@dataclass(frozen=True)
class Dataset:
    """Samples with one outcome, a continuous biomarker, optional covariates.

    ``covariates`` is an n x p matrix WITHOUT an intercept column; modules
    that need one prepend it. A second biomarker may be attached for the
    two-biomarker analysis.
    """

    outcome: Outcome
    biomarker: np.ndarray
    covariates: Optional[np.ndarray] = None
    covariate_names: tuple = ()
    sample_ids: tuple = ()
    biomarker2: Optional[np.ndarray] = None

    def __post_init__(self):
        b = _as_vector(self.biomarker, "biomarker")
        n = self.outcome.n
        if b.size != n:
            raise InputError(f"biomarker length {b.size} does not match outcome length {n}")
        if not np.all(np.isfinite(b)):
            raise InputError("biomarker contains missing or non-finite values; drop rows at ingestion")
        object.__setattr__(self, "biomarker", _freeze(b))

        cov = self.covariates
        if cov is None:
            cov = np.empty((n, 0), dtype=float)
        cov = np.asarray(cov, dtype=float)
        if cov.ndim == 1:
            cov = cov[:, None]
        if cov.shape[0] != n:
            raise InputError(f"covariate matrix has {cov.shape[0]} rows, expected {n}")
        if cov.size and not np.all(np.isfinite(cov)):
            raise InputError("covariates contain missing or non-finite values; drop rows at ingestion")
        object.__setattr__(self, "covariates", _freeze(cov))

        names = tuple(self.covariate_names) or tuple(f"c{j + 1}" for j in range(cov.shape[1]))
        if len(names) != cov.shape[1]:
            raise InputError("covariate_names length does not match covariate columns")
        object.__setattr__(self, "covariate_names", names)

        ids = tuple(self.sample_ids) or tuple(str(i) for i in range(n))
        if len(ids) != n:
            raise InputError("sample_ids length does not match sample count")
        object.__setattr__(self, "sample_ids", ids)

        b2 = self.biomarker2
        if b2 is not None:
            b2 = _as_vector(b2, "second biomarker")
            if b2.size != n:
                raise InputError("second biomarker length does not match sample count")
            if not np.all(np.isfinite(b2)):
                raise InputError("second biomarker contains missing or non-finite values")
            object.__setattr__(self, "biomarker2", _freeze(b2))

    @property
    def n(self) -> int:
        return self.outcome.n

    @property
    def n_covariates(self) -> int:
        return self.covariates.shape[1]


# ---------------------------------------------------------------------------
# Cutoffs
# ---------------------------------------------------------------------------

def dichotomize(biomarker, cutoff: float) -> np.ndarray:
    """Split at a cutoff: 1 where the biomarker exceeds it, 0 at or below."""
    b = _as_vector(biomarker, "biomarker")
    if b.size == 0:
        raise InputError("cannot dichotomize an empty biomarker vector")
    if not np.all(np.isfinite(b)):
        raise InputError("biomarker contains non-finite values")
    return (b > cutoff).astype(np.int64)


def dichotomize_pair(b1, cutoff1: float, b2, cutoff2: float, min_group: int = 1):
    """Joint split of two biomarkers into double-positive vs double-negative.

    Samples high on both are labeled 1, low on both 0; samples that disagree
    are masked out of the analysis. Returns ``(labels, mask)``; labels are
    only meaningful where the mask is True.
    """
    v1 = _as_vector(b1, "first biomarker")
    v2 = _as_vector(b2, "second biomarker")
    if v1.size != v2.size:
        raise InputError("biomarker vectors differ in length")
    hi1 = v1 > cutoff1
    hi2 = v2 > cutoff2
    mask = hi1 == hi2
    labels = np.where(mask & hi1, 1, 0).astype(np.int64)
    n_pos = int((labels[mask] == 1).sum())
    n_neg = int(mask.sum()) - n_pos
    if n_pos < min_group or n_neg < min_group:
        raise InputError(
            f"pair split at ({cutoff1:g}, {cutoff2:g}) leaves groups "
            f"{n_pos}/{n_neg}, below the minimum of {min_group}"
        )
    return labels, mask


@dataclass(frozen=True)
class CutoffGrid:
    """Ordered candidate cutoffs with the per-cutoff high-group sizes."""

    cutoffs: np.ndarray
    group_sizes: np.ndarray
    n: int
    warnings: tuple = ()

    def __post_init__(self):
        c = _as_vector(self.cutoffs, "cutoffs")
        m = _as_vector(self.group_sizes, "group sizes", dtype=np.int64)
        if c.size != m.size or c.size < 1:
            raise InputError("grid needs matching, nonempty cutoff and group-size vectors")
        if np.any(np.diff(c) <= 0):
            raise InputError("cutoffs must be strictly increasing")
        if np.any(np.diff(m) >= 0):
            raise InputError("group sizes must be strictly decreasing over the grid")
        if np.any(m <= 0) or np.any(m >= self.n):
            raise InputError("every cutoff must leave both groups nonempty")
        object.__setattr__(self, "cutoffs", _freeze(c))
        object.__setattr__(self, "group_sizes", _freeze(m))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def k(self) -> int:
        return self.cutoffs.size

    def subset(self, indices) -> "CutoffGrid":
        """Grid restricted to the given cutoff indices (kept in order)."""
        idx = sorted(int(i) for i in indices)
        if not idx:
            raise InputError("no admissible cutoffs")
        return CutoffGrid(self.cutoffs[idx], self.group_sizes[idx], self.n,
                          self.warnings)


def _admissible_grid(biomarker: np.ndarray, candidates: np.ndarray, min_group: int,
                     label: str) -> CutoffGrid:
    n = biomarker.size
    m_all = (biomarker[None, :] > candidates[:, None]).sum(axis=1)
    kept_c, kept_m = [], []
    n_dup = n_small = 0
    for tau, m in zip(candidates, m_all):
        if kept_m and m == kept_m[-1]:
            n_dup += 1
            continue
        if m < min_group or (n - m) < min_group:
            n_small += 1
            continue
        kept_c.append(float(tau))
        kept_m.append(int(m))
    if not kept_c:
        raise InputError("no admissible cutoffs")
    warns = []
    if n_dup:
        warns.append(f"{label}: merged {n_dup} duplicate dichotomization(s)")
    if n_small:
        warns.append(f"{label}: dropped {n_small} cutoff(s) below minimum group size {min_group}")
    return CutoffGrid(np.array(kept_c), np.array(kept_m, dtype=np.int64), n, tuple(warns))


def build_grid(biomarker, k: int, min_group: int = 5) -> CutoffGrid:
    """Candidate cutoffs at the k equally spaced interior quantiles.

    Quantile levels are i/(k+1) for i = 1..k under the linear-interpolation
    (type 7) convention. Cutoffs whose split violates ``min_group`` on either
    arm are dropped; duplicate dichotomizations collapse to one test.
    """
    b = _as_vector(biomarker, "biomarker")
    if k < 1:
        raise InputError("k must be at least 1")
    if min_group < 1:
        raise InputError("min_group must be at least 1")
    if b.size < 2 * min_group:
        raise InputError("no admissible cutoffs")
    levels = np.arange(1, k + 1) / (k + 1)
    candidates = np.quantile(b, levels)
    return _admissible_grid(b, np.asarray(candidates, dtype=float), min_group, f"grid(k={k})")


def grid_from_cutoffs(biomarker, cutoffs, min_group: int = 5) -> CutoffGrid:
    """Grid from explicit cutoff values, filtered like :func:`build_grid`."""
    b = _as_vector(biomarker, "biomarker")
    c = np.unique(_as_vector(cutoffs, "cutoffs"))
    if c.size == 0:
        raise InputError("no cutoff values supplied")
    return _admissible_grid(b, c, min_group, "explicit cutoffs")


# ---------------------------------------------------------------------------
# Test results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffTest:
    """Wald test at one cutoff: coefficient, standard error, Z, group sizes."""

    cutoff_index: int
    beta_hat: float
    se: float
    z: float
    n_high: int
    n_low: int
    cutoff: float = math.nan

    def __post_init__(self):
        if self.se <= 0 or not math.isfinite(self.se):
            raise NumericError(f"standard error must be positive, got {self.se}")
        if abs(self.z - self.beta_hat / self.se) > 1e-12 * max(1.0, abs(self.z)):
            raise NumericError("z must equal beta_hat / se")


@dataclass(frozen=True)
class CorrelationMatrix:
    """Correlation of the per-cutoff Z statistics; validated and PSD-repaired."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(np.asarray(self.values, dtype=float)))

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_values(cls, values, repair_floor: float = -1e-8) -> "CorrelationMatrix":
        """Validate symmetry, unit diagonal and bounds, then repair rounding-level
        PSD violations by clipping eigenvalues at zero and renormalizing.

        Eigenvalues below ``repair_floor`` are treated as a real failure.
        """
        a = np.asarray(values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise NumericError("correlation matrix must be square")
        if not np.all(np.isfinite(a)):
            raise NumericError("correlation matrix contains non-finite entries")
        if np.max(np.abs(a - a.T)) > 1e-8:
            raise NumericError("correlation matrix is not symmetric")
        a = 0.5 * (a + a.T)
        if np.max(np.abs(np.diag(a) - 1.0)) > 1e-8:
            raise NumericError("correlation matrix diagonal must be 1")
        if np.max(np.abs(a)) > 1.0 + 1e-8:
            raise NumericError("correlation entries must lie in [-1, 1]")
        np.fill_diagonal(a, 1.0)
        a = np.clip(a, -1.0, 1.0)
        if a.shape[0] > 1:
            w = np.linalg.eigvalsh(a)
            if w[0] < repair_floor:
                raise NumericError(
                    f"correlation matrix is not positive semi-definite (min eigenvalue {w[0]:.3e})"
                )
            if w[0] < 0:
                w2, v = np.linalg.eigh(a)
                a = (v * np.clip(w2, 0.0, None)) @ v.T
                d = np.sqrt(np.diag(a))
                a = a / np.outer(d, d)
                a = 0.5 * (a + a.T)
                np.fill_diagonal(a, 1.0)
        return cls(a)


@dataclass(frozen=True)
class BossResult:
    """Outcome of the maximally selected cutoff test."""

    optimal_index: int
    optimal_cutoff: float
    z_star: float
    fwer: float
    fwer_mc_error: float
    reject: bool
    alpha: float
    sidedness: str
    per_cutoff: tuple
    warnings: tuple = ()
    metadata: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        """Number of cutoff tests that entered the adjustment."""
        return len(self.per_cutoff)
