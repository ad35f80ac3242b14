"""Genome-scale runner: one cutoff test per biomarker column, FDR across them.

Each biomarker's exact FWER is treated as that biomarker's p-value and the
whole collection is adjusted with the Benjamini-Hochberg step-up. A failing
biomarker carries an error code instead of aborting the batch. Results are
deterministic and input-ordered regardless of worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from .core import Dataset, Outcome, build_grid, default_min_group, grid_from_cutoffs
from .engine import boss_test
from .errors import BossError, InputError
from .regress import FitConfig

_COLUMNS = ["gene", "optimal_cutoff", "n_high", "n_low", "beta", "z",
            "fwer", "q", "significant", "error_code"]


def bh_adjust(p) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted values, in the input order.

    q_(i) = min over j >= i of p_(j) * m / j, capped at 1.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise InputError("p-values must form a vector")
    if p.size == 0:
        return p.copy()
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise InputError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    q_sorted = np.minimum(np.minimum.accumulate(scaled[::-1])[::-1], 1.0)
    out = np.empty(m)
    out[order] = q_sorted
    return out


@dataclass(frozen=True)
class GridSpec:
    """How to build the per-biomarker cutoff grid."""

    k: int = 10
    min_group: Optional[int] = None
    cutoffs: Optional[tuple] = None

    def resolve_min_group(self, n_covariates: int) -> int:
        return self.min_group if self.min_group is not None \
            else default_min_group(n_covariates)


@dataclass(frozen=True)
class Clinical:
    """Outcome and covariates shared by every biomarker in a batch."""

    sample_ids: tuple
    outcome: Outcome
    covariates: np.ndarray
    covariate_names: tuple = ()

    @property
    def n(self) -> int:
        return self.outcome.n


def _subset_outcome(outcome, rows):
    from .core import Quantitative, Survival

    if isinstance(outcome, Survival):
        return Survival(outcome.time[rows], outcome.event[rows])
    return Quantitative(outcome.values[rows])


def _run_one(args):
    (name, values, clinical, cfg, grid_spec, seed_tuple) = args
    finite = np.isfinite(values)
    row = {c: None for c in _COLUMNS}
    row["gene"] = name
    row["error_code"] = ""
    try:
        if finite.sum() < 2:
            raise InputError("fewer than 2 non-missing values")
        outcome = _subset_outcome(clinical.outcome, finite) if not finite.all() \
            else clinical.outcome
        cov = clinical.covariates[finite] if not finite.all() else clinical.covariates
        data = Dataset(outcome=outcome, biomarker=values[finite], covariates=cov,
                       covariate_names=clinical.covariate_names)
        min_group = grid_spec.resolve_min_group(data.n_covariates)
        if grid_spec.cutoffs is not None:
            grid = grid_from_cutoffs(data.biomarker, grid_spec.cutoffs, min_group)
        else:
            grid = build_grid(data.biomarker, grid_spec.k, min_group)
        res = boss_test(data, grid, cfg, seed=seed_tuple)
    except BossError as exc:
        row["error_code"] = str(exc)
        return row
    row.update(optimal_cutoff=res.optimal_cutoff,
               n_high=_star(res).n_high, n_low=_star(res).n_low,
               beta=_star(res).beta_hat, z=res.z_star, fwer=res.fwer)
    return row


def _star(res):
    for t in res.per_cutoff:
        if t.cutoff_index == res.optimal_index:
            return t
    raise BossError("optimal cutoff missing from per-cutoff table")


def run_batch(expression: pd.DataFrame, clinical: Clinical,
              cfg: FitConfig | None = None, grid_spec: GridSpec | None = None,
              alpha_fdr: float = 0.05, seed=0, threads: int = 1,
              block: int = 256):
    """Cutoff test for every expression column, BH-adjusted across columns.

    ``expression`` holds samples as rows (index = sample id) and biomarkers
    as columns. Rows are inner-joined with the clinical table; mismatched ids
    are reported in the metadata. Returns ``(table, metadata)``.
    """
    cfg = cfg or FitConfig()
    grid_spec = grid_spec or GridSpec()
    if expression.shape[1] == 0:
        raise InputError("expression matrix has no biomarker columns")

    expr_ids = [str(i) for i in expression.index]
    clin_index = {sid: i for i, sid in enumerate(clinical.sample_ids)}
    keep_expr, keep_clin = [], []
    for i, sid in enumerate(expr_ids):
        j = clin_index.get(sid)
        if j is not None:
            keep_expr.append(i)
            keep_clin.append(j)
    if not keep_expr:
        raise InputError("no sample ids shared between expression and clinical tables")
    rows = np.asarray(keep_clin)
    joined = Clinical(
        sample_ids=tuple(clinical.sample_ids[j] for j in keep_clin),
        outcome=_subset_outcome(clinical.outcome, rows),
        covariates=clinical.covariates[rows],
        covariate_names=clinical.covariate_names,
    )
    values = expression.to_numpy(dtype=float)[keep_expr, :]

    base = seed if isinstance(seed, (tuple, list)) else (seed,)
    genes = [str(c) for c in expression.columns]
    tasks = [(genes[g], values[:, g], joined, cfg, grid_spec, tuple(base) + (g,))
             for g in range(len(genes))]

    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        results = [None] * len(tasks)
        with ProcessPoolExecutor(max_workers=threads) as pool:
            # column blocks bound the size of any one submission
            for start in range(0, len(tasks), block):
                chunk = tasks[start:start + block]
                for off, row in enumerate(pool.map(_run_one, chunk)):
                    results[start + off] = row
    else:
        results = [_run_one(t) for t in tasks]

    table = pd.DataFrame(results, columns=_COLUMNS)
    ok = table["error_code"] == ""
    qs = bh_adjust(table.loc[ok, "fwer"].to_numpy(dtype=float))
    table.loc[ok, "q"] = qs
    table.loc[ok, "significant"] = table.loc[ok, "q"] < alpha_fdr
    metadata = {
        "n_biomarkers": len(genes),
        "n_failed": int((~ok).sum()),
        "n_samples_joined": joined.n,
        "n_expression_only": len(expr_ids) - len(keep_expr),
        "n_clinical_only": len(clinical.sample_ids) - len(set(keep_clin)),
        "model": cfg.model,
        "k": grid_spec.k,
        "alpha_fdr": alpha_fdr,
        "seed": list(base),
    }
    return table, metadata
