"""End-to-end cutoff selection and significance testing.

``boss_test`` runs the whole pipeline for one biomarker: dichotomize at each
candidate cutoff, fit the configured model, pick the cutoff with the largest
|Z|, build the correlation of the Z statistics, and turn the maximal
statistic into an exact family-wise error rate through a multivariate normal
rectangle probability. ``boss_test_pair`` does the same over a lattice of
cutoff pairs for two biomarkers.
"""

from __future__ import annotations

import math

import numpy as np

from .core import (
    BossResult,
    CorrelationMatrix,
    CutoffGrid,
    Dataset,
    default_min_group,
    dichotomize,
    dichotomize_pair,
)
from .covariance import cov_no_covariates, cov_with_covariates, residual_correlation
from .errors import FitError, InputError
from .mvn import mvn_rectangle
from .regress import FitConfig, fit_outcome

_TIE_EPS = 1e-12
_SIDEDNESS = ("two-sided", "one-sided")

# survival fits need events, not just bodies: Wald z tails degrade visibly
# below ~15 events in an arm, inflating the family-wise error
DEFAULT_MIN_ARM_EVENTS = 15


def survival_admissible(grid: CutoffGrid, data: Dataset,
                        min_events: int = DEFAULT_MIN_ARM_EVENTS):
    """Split a survival grid into (admissible cutoff indices, warnings).

    A cutoff qualifies when each arm's expected event count (arm size times
    the overall event fraction) reaches ``min_events``. The rule deliberately
    uses only the total event count, never the realized per-arm counts:
    selecting cutoffs on the realized pairing of events with the biomarker
    would itself distort the null distribution. Callers comparing against a
    permutation baseline should filter the grid once, up front, so both
    methods test the same cutoff family.
    """
    from .core import Survival

    if not isinstance(data.outcome, Survival):
        return list(range(grid.k)), []
    event_fraction = float(data.outcome.event.mean())
    keep, warns = [], []
    for i, tau in enumerate(grid.cutoffs):
        m = int(grid.group_sizes[i])
        expected = min(m, grid.n - m) * event_fraction
        if expected < min_events:
            warns.append(
                f"cutoff {i + 1} (tau={tau:.6g}) dropped: smaller arm expects "
                f"{expected:.1f} events, below the minimum of {min_events}")
        else:
            keep.append(i)
    return keep, warns


def _argmax_abs_z(tests):
    """Index of the largest |z|; ties within 1e-12 go to the smallest index."""
    zabs = np.array([abs(t.z) for t in tests])
    return int(np.flatnonzero(zabs >= zabs.max() - _TIE_EPS)[0])


def _fwer_from_rectangle(z_star: float, sigma, sidedness: str, tol: float, seed):
    za = abs(z_star)
    k = sigma.k if isinstance(sigma, CorrelationMatrix) else len(sigma)
    if sidedness == "two-sided":
        lower = np.full(k, -za)
        upper = np.full(k, za)
    else:
        lower = np.full(k, -math.inf)
        upper = np.full(k, za)
    res = mvn_rectangle(lower, upper, sigma, tol=tol, seed=seed)
    fwer = min(max(1.0 - res.probability, 0.0), 1.0)
    return fwer, res


def _with_intercept(covariates: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(covariates.shape[0]), covariates])


def boss_test(data: Dataset, grid: CutoffGrid, cfg: FitConfig | None = None,
              alpha: float = 0.05, sidedness: str = "two-sided", seed=0,
              mvn_tol: float = 1e-4,
              min_arm_events: int = DEFAULT_MIN_ARM_EVENTS) -> BossResult:
    """Select the optimal cutoff and test it with exact FWER control.

    Cutoffs whose fit fails are dropped with a warning, as are survival
    cutoffs leaving fewer than ``min_arm_events`` events in an arm; the run
    errors only when every cutoff fails. The result is bit-reproducible for
    fixed inputs and seed. The default FWER tolerance sits an order below
    the 0.001 granularity of a 1000-permutation estimate; tighten
    ``mvn_tol`` when more digits matter than latency.
    """
    cfg = cfg or FitConfig()
    if sidedness not in _SIDEDNESS:
        raise InputError(f"sidedness must be one of {_SIDEDNESS}")
    if not 0.0 < alpha < 1.0:
        raise InputError("alpha must lie strictly between 0 and 1")

    warnings = list(grid.warnings)
    if cfg.model == "cox":
        keep, event_warns = survival_admissible(grid, data, min_arm_events)
        warnings.extend(event_warns)
    else:
        keep = list(range(grid.k))
    tests, xs = [], []
    for i in keep:
        tau = grid.cutoffs[i]
        x = dichotomize(data.biomarker, tau)
        try:
            t = fit_outcome(data.outcome, x, data.covariates, cfg,
                            cutoff_index=i + 1, cutoff=float(tau))
        except FitError as exc:
            warnings.append(f"cutoff {i + 1} (tau={tau:.6g}) dropped: {exc}")
            continue
        tests.append(t)
        xs.append(x)
    if not tests:
        raise FitError("all cutoffs failed to fit: " + "; ".join(warnings))

    if len(tests) == 1:
        sigma = CorrelationMatrix(np.eye(1))
    elif data.n_covariates == 0:
        sigma = cov_no_covariates([t.n_high for t in tests], data.n)
    else:
        sigma = cov_with_covariates(xs, _with_intercept(data.covariates))

    idx = _argmax_abs_z(tests)
    star = tests[idx]
    fwer, mvn_res = _fwer_from_rectangle(star.z, sigma, sidedness, mvn_tol, seed)
    if not mvn_res.tol_met:
        warnings.append(
            f"MVN tolerance not reached: achieved {mvn_res.error_estimate:.2e}")

    return BossResult(
        optimal_index=star.cutoff_index,
        optimal_cutoff=star.cutoff,
        z_star=star.z,
        fwer=fwer,
        fwer_mc_error=mvn_res.error_estimate,
        reject=bool(fwer < alpha),
        alpha=alpha,
        sidedness=sidedness,
        per_cutoff=tuple(tests),
        warnings=tuple(warnings),
        metadata={
            "model": cfg.model,
            "n": data.n,
            "k_tested": len(tests),
            "mvn_points": mvn_res.points_used,
            "tie_break": "smallest-index",
        },
    )


def boss_test_pair(data: Dataset, grid1: CutoffGrid, grid2: CutoffGrid,
                   cfg: FitConfig | None = None, alpha: float = 0.05,
                   sidedness: str = "two-sided", seed=0, min_group: int | None = None,
                   pairing: str = "lattice", mvn_tol: float = 1e-4) -> BossResult:
    """Two-biomarker variant over cutoff pairs.

    Each pair splits samples into double-positive vs double-negative, masking
    out discordant samples. ``pairing="lattice"`` enumerates the full product
    of the two grids; ``pairing="matched"`` walks the grids in step (requires
    equal lengths). Correlations between tests with differing masks are
    computed on the mask intersections, which is recorded in the metadata.
    """
    cfg = cfg or FitConfig()
    if data.biomarker2 is None:
        raise InputError("dataset has no second biomarker")
    if sidedness not in _SIDEDNESS:
        raise InputError(f"sidedness must be one of {_SIDEDNESS}")
    if pairing not in ("lattice", "matched"):
        raise InputError("pairing must be 'lattice' or 'matched'")
    if min_group is None:
        min_group = default_min_group(data.n_covariates)

    if pairing == "matched":
        if grid1.k != grid2.k:
            raise InputError("matched pairing requires grids of equal size")
        pair_list = list(zip(range(grid1.k), range(grid2.k)))
    else:
        pair_list = [(a, b) for a in range(grid1.k) for b in range(grid2.k)]

    warnings = list(grid1.warnings) + list(grid2.warnings)
    tests, labels_list, masks, seen = [], [], [], {}
    for a, b in pair_list:
        t1 = float(grid1.cutoffs[a])
        t2 = float(grid2.cutoffs[b])
        try:
            labels, mask = dichotomize_pair(data.biomarker, t1, data.biomarker2, t2,
                                            min_group=min_group)
        except InputError as exc:
            warnings.append(f"pair ({t1:.6g}, {t2:.6g}) dropped: {exc}")
            continue
        key = (labels.tobytes(), mask.tobytes())
        if key in seen:
            continue
        seen[key] = True
        sub_out = _subset_outcome(data.outcome, mask)
        sub_cov = data.covariates[mask]
        try:
            t = fit_outcome(sub_out, labels[mask], sub_cov, cfg,
                            cutoff_index=len(tests) + 1, cutoff=t1)
        except FitError as exc:
            warnings.append(f"pair ({t1:.6g}, {t2:.6g}) dropped: {exc}")
            continue
        tests.append((t, t1, t2))
        labels_list.append(labels.astype(float))
        masks.append(mask)
    if not tests:
        raise FitError("all cutoff pairs failed to fit: " + "; ".join(warnings))

    flat_tests = [t for t, _, _ in tests]
    if len(flat_tests) == 1:
        sigma = CorrelationMatrix(np.eye(1))
    else:
        sigma = residual_correlation(labels_list, masks,
                                     _with_intercept(data.covariates))

    idx = _argmax_abs_z(flat_tests)
    star, tau1, tau2 = tests[idx]
    fwer, mvn_res = _fwer_from_rectangle(star.z, sigma, sidedness, mvn_tol, seed)
    if not mvn_res.tol_met:
        warnings.append(
            f"MVN tolerance not reached: achieved {mvn_res.error_estimate:.2e}")

    return BossResult(
        optimal_index=star.cutoff_index,
        optimal_cutoff=tau1,
        z_star=star.z,
        fwer=fwer,
        fwer_mc_error=mvn_res.error_estimate,
        reject=bool(fwer < alpha),
        alpha=alpha,
        sidedness=sidedness,
        per_cutoff=tuple(flat_tests),
        warnings=tuple(warnings),
        metadata={
            "model": cfg.model,
            "n": data.n,
            "k_tested": len(flat_tests),
            "pairing": pairing,
            "optimal_pair": (tau1, tau2),
            "pair_covariance": "zero-padded residual gram",
            "mvn_points": mvn_res.points_used,
            "tie_break": "smallest-index",
        },
    )


def _subset_outcome(outcome, mask):
    from .core import Quantitative, Survival

    if isinstance(outcome, Survival):
        return Survival(outcome.time[mask], outcome.event[mask])
    return Quantitative(outcome.values[mask])
