"""Blueprint-model data generation and the power / type-I / timing harness.

A blueprint captures a generative model for outcomes given a biomarker: a
step effect at the selected cutoff plus either Gaussian noise (quantitative)
or a proportional-hazards model over a randomly generated piecewise baseline
hazard (survival). Positive data keep the fitted effect; negative data zero
it out while reusing the exact same noise draws for a given seed.

Experiments run self-contained on synthetic "pseudo-gene" biomarkers; real
expression data can be plugged in through the batch module instead.
"""

from __future__ import annotations

import json
import time as _time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .core import Dataset, Quantitative, Survival, build_grid, default_min_group
from .engine import boss_test, survival_admissible
from .errors import BossError, InputError
from .permutation import permute_fwer
from .regress import FitConfig, _ols

_HAZARD_FLOOR = 1e-8


# ---------------------------------------------------------------------------
# Baseline hazards
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PiecewiseHazard:
    """Piecewise-constant hazard; the last rate extends beyond the grid, so
    the implied survival function always decays to zero."""

    edges: np.ndarray   # length M+1, starting at 0
    rates: np.ndarray   # length M, all >= _HAZARD_FLOOR

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        r = np.asarray(self.rates, dtype=float)
        if e.ndim != 1 or r.size != e.size - 1 or e[0] != 0 or np.any(np.diff(e) <= 0):
            raise InputError("hazard needs increasing edges starting at 0")
        if np.any(r < _HAZARD_FLOOR):
            raise InputError("hazard rates fall below the positivity floor")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "rates", r)
        cum = np.concatenate([[0.0], np.cumsum(r * np.diff(e))])
        object.__setattr__(self, "_cum_edges", cum)

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        inside = np.interp(t, self.edges, self._cum_edges)
        tail = np.clip(t - self.edges[-1], 0.0, None) * self.rates[-1]
        return inside + tail

    def inverse(self, h):
        h = np.asarray(h, dtype=float)
        inside = np.interp(h, self._cum_edges, self.edges)
        tail = np.clip(h - self._cum_edges[-1], 0.0, None) / self.rates[-1]
        return inside + tail

    @classmethod
    def random_spline(cls, rng: np.random.Generator, duration: float = 100.0,
                      n_knots: int = 6, n_cells: int = 100,
                      total_cumhaz: float = 2.0) -> "PiecewiseHazard":
        """Hazard sampled as an interpolating cubic through random points,
        evaluated on a fine grid, floored, and scaled to a target cumulative
        hazard over the duration."""
        knots = np.sort(rng.uniform(0.0, duration, n_knots))
        knots = np.concatenate([[0.0], knots, [duration]])
        knots = np.unique(knots)
        values = np.exp(rng.normal(0.0, 0.7, knots.size))
        spline = CubicSpline(knots, values)
        edges = np.linspace(0.0, duration, n_cells + 1)
        mids = 0.5 * (edges[:-1] + edges[1:])
        rates = np.clip(spline(mids), _HAZARD_FLOOR, None)
        mass = float(np.sum(rates * np.diff(edges)))
        rates = np.clip(rates * (total_cumhaz / mass), _HAZARD_FLOOR, None)
        return cls(edges, rates)


# ---------------------------------------------------------------------------
# Blueprints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Blueprint:
    """Generative model for outcomes at a fixed cutoff."""

    model: str
    beta: float
    cutoff: float
    intercept: float = 0.0
    noise_sd: float = 1.0
    baseline: Optional[PiecewiseHazard] = None
    censor_rate: float = 0.0

    def __post_init__(self):
        if self.model not in ("linear", "cox"):
            raise InputError(f"unknown model '{self.model}'")
        if self.model == "linear" and self.noise_sd <= 0:
            raise InputError("noise_sd must be positive")
        if self.model == "cox" and self.baseline is None:
            raise InputError("cox blueprint needs a baseline hazard")
        if not 0.0 <= self.censor_rate < 1.0:
            raise InputError("censor rate must lie in [0, 1)")


def build_blueprint(data: Dataset, grid, cfg: FitConfig | None = None,
                    seed=0) -> Blueprint:
    """Fit the cutoff test, then freeze the winning cutoff and effect into a
    generative blueprint.

    Linear blueprints take the refit intercept and residual standard
    deviation; survival blueprints pair the fitted effect with a freshly
    drawn random-spline baseline and the observed censoring fraction.
    """
    cfg = cfg or FitConfig()
    result = boss_test(data, grid, cfg, seed=seed)
    tau = result.optimal_cutoff
    beta = _star_beta(result)
    if cfg.model == "linear":
        x = (data.biomarker > tau).astype(float)
        design = np.column_stack([np.ones(data.n), x, data.covariates])
        coef, ssr, _ = _ols(design, data.outcome.values)
        df = data.n - design.shape[1]
        return Blueprint(model="linear", beta=float(coef[1]), cutoff=tau,
                         intercept=float(coef[0]),
                         noise_sd=float(np.sqrt(ssr / df)))
    rng = np.random.default_rng(seed)
    baseline = PiecewiseHazard.random_spline(rng)
    censor = 1.0 - float(np.mean(data.outcome.event))
    return Blueprint(model="cox", beta=beta, cutoff=tau, intercept=0.0,
                     baseline=baseline, censor_rate=min(censor, 0.95))


def _star_beta(result) -> float:
    for t in result.per_cutoff:
        if t.cutoff_index == result.optimal_index:
            return float(t.beta_hat)
    raise BossError("optimal cutoff missing from per-cutoff table")


def _calibrate_censor_cap(event_times: np.ndarray, target: float) -> float:
    """Upper bound c of the Uniform(0, c) censoring law hitting the target
    expected censoring fraction for the drawn event times."""
    def rate(c):
        return float(np.mean(np.minimum(event_times / c, 1.0)))

    lo, hi = np.min(event_times) * 1e-3 + 1e-12, np.max(event_times) * 2 + 1.0
    while rate(hi) > target:
        hi *= 2
        if hi > 1e12:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rate(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def simulate_outcome(blueprint: Blueprint, biomarker, zero_effect: bool = False,
                     seed=0):
    """Draw one outcome vector from the blueprint for the given biomarker.

    With ``zero_effect`` the association parameter is set to zero; all other
    randomness is identical for the same seed, so positive and negative
    datasets differ only through the effect term.
    """
    b = np.asarray(biomarker, dtype=float)
    rng = np.random.default_rng(seed)
    high = (b > blueprint.cutoff).astype(float)
    beta = 0.0 if zero_effect else blueprint.beta

    if blueprint.model == "linear":
        eps = rng.standard_normal(b.size)
        return Quantitative(blueprint.intercept + beta * high
                            + blueprint.noise_sd * eps)

    u_event = np.clip(rng.random(b.size), 1e-12, 1.0 - 1e-12)
    u_censor = rng.random(b.size)
    eta = beta * high + blueprint.intercept
    target = -np.log(u_event) * np.exp(-eta)
    t_event = np.maximum(blueprint.baseline.inverse(target), 1e-9)
    if blueprint.censor_rate <= 0.0:
        return Survival(t_event, np.ones(b.size, dtype=int))
    cap = _calibrate_censor_cap(t_event, blueprint.censor_rate)
    t_censor = np.maximum(u_censor * cap, 1e-12)
    observed = np.minimum(t_event, t_censor)
    event = (t_event <= t_censor).astype(int)
    return Survival(observed, event)


# ---------------------------------------------------------------------------
# Synthetic biomarkers and scenario harness
# ---------------------------------------------------------------------------

def pseudo_gene(n: int, rng: np.random.Generator) -> np.ndarray:
    """Expression-like biomarker: a two-component log-normal mixture."""
    low = rng.lognormal(mean=0.0, sigma=0.5, size=n)
    high = rng.lognormal(mean=1.2, sigma=0.7, size=n)
    pick = rng.random(n) < 0.3
    return np.where(pick, high, low)


# effect sizes chosen so "strong" sits near 80% power and "weak" well below
# it at the default n=500, mirroring the strong/weak biomarker split
_EFFECTS = {
    ("linear", "strong"): 0.32,
    ("linear", "weak"): 0.18,
    ("linear", "null"): 0.0,
    ("cox", "strong"): 0.42,
    ("cox", "weak"): 0.24,
    ("cox", "null"): 0.0,
}


@dataclass(frozen=True)
class Scenario:
    """One cell of the experiment grid."""

    model: str = "linear"
    k: int = 10
    effect: str = "strong"
    n_scale: float = 1.0
    n: int = 500
    alpha: float = 0.05
    n_perm: int = 1000
    censor_rate: float = 0.3
    run_permutation: bool = True

    def __post_init__(self):
        if (self.model, self.effect) not in _EFFECTS:
            raise InputError(f"unknown scenario ({self.model}, {self.effect})")
        if self.n_scale <= 0:
            raise InputError("n_scale must be positive")


def scenario_blueprint(scenario: Scenario, seed=0) -> Blueprint:
    """Synthetic blueprint for a scenario: effect size by strength class,
    cutoff at the median of the pseudo-gene law."""
    rng = np.random.default_rng((_entropy(seed), 9999))
    reference = pseudo_gene(200_000, rng)
    tau = float(np.quantile(reference, 0.5))
    beta = _EFFECTS[(scenario.model, scenario.effect)]
    if scenario.model == "linear":
        return Blueprint(model="linear", beta=beta, cutoff=tau, intercept=1.0,
                         noise_sd=1.0)
    baseline = PiecewiseHazard.random_spline(rng)
    return Blueprint(model="cox", beta=beta, cutoff=tau, baseline=baseline,
                     censor_rate=scenario.censor_rate)


def _entropy(seed) -> int:
    if isinstance(seed, (tuple, list)):
        return int(seed[0])
    return int(seed)


@dataclass
class ExperimentResult:
    scenario: dict
    replicates: int
    n_failed: int
    boss_rejection_rate: float
    boss_mean_time: float
    boss_time_se: float
    perm_rejection_rate: Optional[float] = None
    perm_mean_time: Optional[float] = None
    perm_time_se: Optional[float] = None
    disagreements: Optional[int] = None

    def to_row(self) -> dict:
        row = dict(self.scenario)
        row.update(
            replicates=self.replicates,
            n_failed=self.n_failed,
            boss_rejection_rate=self.boss_rejection_rate,
            boss_mean_time=self.boss_mean_time,
            boss_time_se=self.boss_time_se,
            perm_rejection_rate=self.perm_rejection_rate,
            perm_mean_time=self.perm_mean_time,
            perm_time_se=self.perm_time_se,
            disagreements=self.disagreements,
        )
        return row


def simulate_replicate(scenario: Scenario, blueprint: Blueprint, seed, index: int):
    """One replicate's dataset: fresh biomarker, optional resampling to the
    scaled size, then outcome simulation from the blueprint."""
    rng = np.random.default_rng((_entropy(seed), index, 0))
    b = pseudo_gene(scenario.n, rng)
    if scenario.n_scale != 1.0:
        n_new = max(int(round(scenario.n * scenario.n_scale)), 10)
        b = b[rng.integers(0, scenario.n, size=n_new)]
    outcome = simulate_outcome(blueprint, b,
                               zero_effect=(scenario.effect == "null"),
                               seed=(_entropy(seed), index, 1))
    return Dataset(outcome=outcome, biomarker=b)


def run_experiment(scenario: Scenario, replicates: int = 100, seed=0) -> ExperimentResult:
    """Rejection rates and wall times for the exact test (and optionally the
    permutation baseline) over independent replicates."""
    if replicates < 1:
        raise InputError("replicates must be at least 1")
    blueprint = scenario_blueprint(scenario, seed)
    cfg = FitConfig(model=scenario.model)
    min_group = default_min_group(0)

    boss_rej, perm_rej = [], []
    boss_t, perm_t = [], []
    disagreements = 0
    n_failed = 0
    for r in range(replicates):
        try:
            data = simulate_replicate(scenario, blueprint, seed, r)
            grid = build_grid(data.biomarker, scenario.k, min_group)
            if scenario.model == "cox":
                # both methods must test the same surviving cutoff family
                keep, _ = survival_admissible(grid, data)
                grid = grid.subset(keep)
            t0 = _time.perf_counter()
            res = boss_test(data, grid, cfg, alpha=scenario.alpha,
                            seed=(_entropy(seed), r, 2))
            boss_elapsed = _time.perf_counter() - t0
            if scenario.run_permutation:
                t0 = _time.perf_counter()
                perm = permute_fwer(data, grid, cfg, n_perm=scenario.n_perm,
                                    seed=(_entropy(seed), r, 3))
                perm_elapsed = _time.perf_counter() - t0
        except BossError:
            n_failed += 1
            continue
        boss_rej.append(res.fwer < scenario.alpha)
        boss_t.append(boss_elapsed)
        if scenario.run_permutation:
            perm_rej.append(perm.fwer < scenario.alpha)
            perm_t.append(perm_elapsed)
            if perm_rej[-1] != boss_rej[-1]:
                disagreements += 1

    done = len(boss_rej)
    if done == 0:
        raise BossError("all replicates failed")

    def _mean_se(xs):
        arr = np.asarray(xs)
        se = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        return float(arr.mean()), se

    bt, bse = _mean_se(boss_t)
    result = ExperimentResult(
        scenario={"model": scenario.model, "k": scenario.k,
                  "effect": scenario.effect, "n_scale": scenario.n_scale,
                  "n": scenario.n, "alpha": scenario.alpha,
                  "n_perm": scenario.n_perm if scenario.run_permutation else None},
        replicates=done,
        n_failed=n_failed,
        boss_rejection_rate=float(np.mean(boss_rej)),
        boss_mean_time=bt,
        boss_time_se=bse,
    )
    if scenario.run_permutation:
        pt, pse = _mean_se(perm_t)
        result.perm_rejection_rate = float(np.mean(perm_rej))
        result.perm_mean_time = pt
        result.perm_time_se = pse
        result.disagreements = disagreements
    return result


# ---------------------------------------------------------------------------
# Timing benchmark
# ---------------------------------------------------------------------------

def run_bench(ks=(6, 8, 10, 12, 14), n: int = 500, n_perm: int = 1000,
              replicates: int = 3, model: str = "both", seed=0) -> list[dict]:
    """Exact test vs permutation baseline wall times per grid size.

    The baseline refits the model on every permutation (method="refit"),
    which is the cost profile a permutation user actually pays; the fast
    vectorized path would not generalize to covariates or survival models.
    ``model="both"`` pools quantitative and survival analyses per grid size,
    mirroring how timing is usually reported across outcome types.
    """
    if replicates < 1:
        raise InputError("replicates must be at least 1")
    if model not in ("linear", "cox", "both"):
        raise InputError("model must be 'linear', 'cox' or 'both'")
    models = ("linear", "cox") if model == "both" else (model,)
    rows = []
    for k in ks:
        boss_times, perm_times = [], []
        for mdl in models:
            cfg = FitConfig(model=mdl)
            scenario = Scenario(model=mdl, k=int(k), effect="null", n=n,
                                n_perm=n_perm, run_permutation=False)
            blueprint = scenario_blueprint(scenario, seed)
            for r in range(replicates):
                data = simulate_replicate(scenario, blueprint, seed, r)
                grid = build_grid(data.biomarker, int(k), default_min_group(0))
                if mdl == "cox":
                    keep, _ = survival_admissible(grid, data)
                    grid = grid.subset(keep)
                t0 = _time.perf_counter()
                boss_test(data, grid, cfg, seed=(_entropy(seed), k, r))
                boss_times.append(_time.perf_counter() - t0)
                t0 = _time.perf_counter()
                permute_fwer(data, grid, cfg, n_perm=n_perm,
                             seed=(_entropy(seed), k, r), method="refit")
                perm_times.append(_time.perf_counter() - t0)
        bt = float(np.mean(boss_times))
        pt = float(np.mean(perm_times))
        rows.append({
            "k": int(k),
            "n": n,
            "n_perm": n_perm,
            "model": model,
            "replicates": replicates,
            "boss_mean_time": bt,
            "perm_mean_time": pt,
            "speedup": pt / bt if bt > 0 else float("inf"),
        })
    return rows


# ---------------------------------------------------------------------------
# Output writers
# ---------------------------------------------------------------------------

def rows_to_csv(rows: list[dict], path: str) -> None:
    import csv

    if not rows:
        raise InputError("nothing to write")
    keys = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys)
        writer.writeheader()
        writer.writerows(rows)


def rows_to_json(rows: list[dict], path: str, schema: str = "boss.metrics/1") -> None:
    with open(path, "w") as fh:
        json.dump({"schema": schema, "rows": rows}, fh, indent=2)
        fh.write("\n")


def write_xy_series(path: str, x, series: dict) -> None:
    """Plot-ready data: one x column followed by one column per named series."""
    import csv

    x = list(x)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x"] + list(series.keys()))
        for i, xv in enumerate(x):
            writer.writerow([xv] + [series[name][i] for name in series])
