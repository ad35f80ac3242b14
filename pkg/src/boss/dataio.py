"""CSV ingestion: clinical tables, single-biomarker datasets, expression
matrices. Rows with missing values in any used column are dropped listwise
and the count is reported."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .batch import Clinical
from .core import Dataset, Quantitative, Survival
from .errors import InputError


def read_table(path: str) -> pd.DataFrame:
    try:
        df = pd.read_csv(path)
    except FileNotFoundError:
        raise InputError(f"file not found: {path}") from None
    except Exception as exc:
        raise InputError(f"could not parse CSV file {path}: {exc}") from None
    if df.shape[1] == 0:
        raise InputError(f"{path}: no columns found (header row required)")
    return df


def _require_columns(df: pd.DataFrame, cols, path: str):
    missing = [c for c in cols if c not in df.columns]
    if missing:
        raise InputError(f"{path}: unknown column(s) {', '.join(missing)}")


def _numeric(df: pd.DataFrame, col: str, path: str) -> np.ndarray:
    vals = pd.to_numeric(df[col], errors="coerce").to_numpy(dtype=float)
    if np.all(~np.isfinite(vals)):
        raise InputError(f"{path}: column '{col}' has no numeric values")
    return vals


def _build_outcome(df, outcome_col, event_col, model, path):
    y = _numeric(df, outcome_col, path)
    if model == "cox":
        if event_col is None:
            raise InputError("cox model needs an event column: use OUTCOME,EVENT")
        e = _numeric(df, event_col, path)
        return y, e
    return y, None


def load_clinical(path: str, outcome_col: str, event_col: str | None = None,
                  covariate_cols=(), model: str = "linear",
                  id_col: str | None = None):
    """Clinical table for batch runs. Returns (Clinical, n_dropped)."""
    df = read_table(path)
    id_col = id_col or df.columns[0]
    used = [id_col, outcome_col] + ([event_col] if event_col else []) + list(covariate_cols)
    _require_columns(df, used, path)

    y, e = _build_outcome(df, outcome_col, event_col, model, path)
    cov = np.column_stack([_numeric(df, c, path) for c in covariate_cols]) \
        if covariate_cols else np.empty((len(df), 0))
    keep = np.isfinite(y)
    if e is not None:
        keep &= np.isfinite(e)
    if cov.size:
        keep &= np.all(np.isfinite(cov), axis=1)
    n_dropped = int((~keep).sum())

    ids = tuple(str(v) for v in df.loc[keep, id_col])
    outcome = Survival(y[keep], e[keep]) if e is not None else Quantitative(y[keep])
    clinical = Clinical(sample_ids=ids, outcome=outcome,
                        covariates=cov[keep], covariate_names=tuple(covariate_cols))
    return clinical, n_dropped


def load_dataset(path: str, biomarker_col: str, outcome_col: str,
                 event_col: str | None = None, covariate_cols=(),
                 model: str = "linear", biomarker2_col: str | None = None,
                 id_col: str | None = None):
    """Single-biomarker dataset from one CSV. Returns (Dataset, n_dropped)."""
    df = read_table(path)
    used = [biomarker_col, outcome_col] + ([event_col] if event_col else []) \
        + list(covariate_cols) + ([biomarker2_col] if biomarker2_col else [])
    _require_columns(df, used, path)

    b = _numeric(df, biomarker_col, path)
    b2 = _numeric(df, biomarker2_col, path) if biomarker2_col else None
    y, e = _build_outcome(df, outcome_col, event_col, model, path)
    cov = np.column_stack([_numeric(df, c, path) for c in covariate_cols]) \
        if covariate_cols else np.empty((len(df), 0))

    keep = np.isfinite(b) & np.isfinite(y)
    if e is not None:
        keep &= np.isfinite(e)
    if b2 is not None:
        keep &= np.isfinite(b2)
    if cov.size:
        keep &= np.all(np.isfinite(cov), axis=1)
    n_dropped = int((~keep).sum())
    if keep.sum() == 0:
        raise InputError(f"{path}: no complete rows after dropping missing values")

    outcome = Survival(y[keep], e[keep]) if e is not None else Quantitative(y[keep])
    id_col = id_col or df.columns[0]
    ids = tuple(str(v) for v in df.loc[keep, id_col]) if id_col in df.columns else ()
    data = Dataset(outcome=outcome, biomarker=b[keep], covariates=cov[keep],
                   covariate_names=tuple(covariate_cols), sample_ids=ids,
                   biomarker2=b2[keep] if b2 is not None else None)
    return data, n_dropped


def load_expression(path: str, transpose: bool = False) -> pd.DataFrame:
    """Expression matrix: first column sample id, remaining columns numeric.

    With ``transpose`` the file is genes-as-rows (first column gene id) and
    is flipped so samples index the rows.
    """
    df = read_table(path)
    df = df.set_index(df.columns[0])
    df.index = df.index.astype(str)
    df = df.apply(pd.to_numeric, errors="coerce")
    if transpose:
        df = df.T
        df.index = df.index.astype(str)
    if df.shape[1] == 0:
        raise InputError(f"{path}: expression matrix has no biomarker columns")
    return df
