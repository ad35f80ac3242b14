"""Benjamini-Hochberg adjustment and the genome-scale batch runner."""

import numpy as np
import pandas as pd
import pytest

from boss import (
    Clinical,
    FitConfig,
    GridSpec,
    InputError,
    Quantitative,
    Survival,
    bh_adjust,
    boss_test,
    build_grid,
    pseudo_gene,
    run_batch,
)
from boss.core import Dataset
from oracles import bh_oracle


class TestBhAdjust:
    def test_hand_computed_four_values(self):
        q = bh_adjust([0.01, 0.02, 0.03, 0.5])
        assert np.allclose(q, [0.04, 0.04, 0.04, 0.5])

    def test_hand_computed_two_values(self):
        assert np.allclose(bh_adjust([0.01, 0.04]), [0.02, 0.04])

    def test_constant_input_unchanged(self):
        assert np.allclose(bh_adjust([0.2, 0.2, 0.2]), 0.2)

    def test_sorted_input_gives_nondecreasing_output(self):
        rng = np.random.default_rng(0)
        p = np.sort(rng.random(50))
        q = bh_adjust(p)
        assert np.all(np.diff(q) >= -1e-15)

    def test_never_below_p_and_capped(self):
        rng = np.random.default_rng(1)
        p = rng.random(200)
        q = bh_adjust(p)
        assert np.all(q >= p - 1e-15)
        assert np.all(q <= 1.0)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(2)
        p = rng.random(30)
        perm = rng.permutation(30)
        assert np.allclose(bh_adjust(p)[perm], bh_adjust(p[perm]))

    def test_matches_direct_definition(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            p = rng.random(int(rng.integers(1, 40)))
            assert np.allclose(bh_adjust(p), bh_oracle(p))

    def test_single_value_identity(self):
        assert bh_adjust([0.37])[0] == pytest.approx(0.37)

    def test_rejects_out_of_range(self):
        with pytest.raises(InputError):
            bh_adjust([0.5, 1.5])
        with pytest.raises(InputError):
            bh_adjust([-0.1])


def _toy_batch(rng, n=80, genes=5, model="linear"):
    ids = tuple(f"s{i}" for i in range(n))
    if model == "linear":
        outcome = Quantitative(rng.standard_normal(n))
    else:
        time = rng.exponential(size=n)
        censor = rng.exponential(scale=3.0, size=n)
        outcome = Survival(np.minimum(time, censor), (time <= censor).astype(int))
    clinical = Clinical(sample_ids=ids, outcome=outcome,
                        covariates=np.empty((n, 0)))
    expr = pd.DataFrame({f"g{j}": pseudo_gene(n, rng) for j in range(genes)},
                        index=ids)
    return clinical, expr


class TestRunBatch:
    def test_single_gene_q_equals_fwer(self):
        rng = np.random.default_rng(4)
        clinical, expr = _toy_batch(rng, genes=1)
        table, meta = run_batch(expr, clinical, grid_spec=GridSpec(k=5), seed=1)
        assert len(table) == 1
        assert table.loc[0, "q"] == pytest.approx(table.loc[0, "fwer"])

    def test_matches_direct_engine_call(self):
        rng = np.random.default_rng(5)
        clinical, expr = _toy_batch(rng, genes=3)
        table, _ = run_batch(expr, clinical, grid_spec=GridSpec(k=5), seed=7)
        g0 = expr["g0"].to_numpy()
        data = Dataset(outcome=clinical.outcome, biomarker=g0)
        grid = build_grid(g0, 5, 5)
        res = boss_test(data, grid, FitConfig(), seed=(7, 0))
        assert table.loc[0, "fwer"] == pytest.approx(res.fwer)
        assert table.loc[0, "z"] == pytest.approx(res.z_star)

    def test_failed_gene_isolated(self):
        rng = np.random.default_rng(6)
        clinical, expr = _toy_batch(rng, genes=3)
        expr["g1"] = 1.0  # constant biomarker: no admissible cutoffs
        table, meta = run_batch(expr, clinical, grid_spec=GridSpec(k=5), seed=2)
        assert meta["n_failed"] == 1
        failed = table[table["gene"] == "g1"].iloc[0]
        assert "no admissible cutoffs" in failed["error_code"]
        assert pd.isna(failed["fwer"]) or failed["fwer"] is None
        ok = table[table["error_code"] == ""]
        assert len(ok) == 2
        assert ok["q"].notna().all()

    def test_inner_join_reports_mismatches(self):
        rng = np.random.default_rng(7)
        clinical, expr = _toy_batch(rng, n=60, genes=2)
        expr_extra = expr.copy()
        expr_extra.index = [f"s{i}" if i < 50 else f"zz{i}" for i in range(60)]
        table, meta = run_batch(expr_extra, clinical, grid_spec=GridSpec(k=4), seed=3)
        assert meta["n_samples_joined"] == 50
        assert meta["n_expression_only"] == 10
        assert meta["n_clinical_only"] == 10

    def test_no_shared_ids_errors(self):
        rng = np.random.default_rng(8)
        clinical, expr = _toy_batch(rng, n=40, genes=2)
        expr.index = [f"other{i}" for i in range(40)]
        with pytest.raises(InputError, match="no sample ids shared"):
            run_batch(expr, clinical, seed=0)

    def test_thread_count_does_not_change_results(self):
        rng = np.random.default_rng(9)
        clinical, expr = _toy_batch(rng, n=70, genes=6)
        t1, _ = run_batch(expr, clinical, grid_spec=GridSpec(k=4), seed=5, threads=1)
        t2, _ = run_batch(expr, clinical, grid_spec=GridSpec(k=4), seed=5,
                          threads=2, block=2)
        pd.testing.assert_frame_equal(t1, t2)

    def test_significance_flag_respects_alpha(self):
        rng = np.random.default_rng(10)
        n = 120
        ids = tuple(f"s{i}" for i in range(n))
        b = pseudo_gene(n, rng)
        y = 1.2 * (b > np.median(b)) + rng.standard_normal(n)
        clinical = Clinical(sample_ids=ids, outcome=Quantitative(y),
                            covariates=np.empty((n, 0)))
        expr = pd.DataFrame({"hit": b, "noise": pseudo_gene(n, rng)}, index=ids)
        table, _ = run_batch(expr, clinical, grid_spec=GridSpec(k=6),
                             alpha_fdr=0.05, seed=11)
        hit = table[table["gene"] == "hit"].iloc[0]
        assert bool(hit["significant"])

    def test_cox_batch_runs(self):
        rng = np.random.default_rng(11)
        clinical, expr = _toy_batch(rng, n=100, genes=3, model="cox")
        table, meta = run_batch(expr, clinical, FitConfig(model="cox"),
                                GridSpec(k=4), seed=12)
        assert meta["model"] == "cox"
        assert (table["error_code"] == "").all()
