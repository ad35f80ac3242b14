"""CLI surface: flags, formats, exit codes, determinism."""

import json

import numpy as np
import pandas as pd
import pytest

from boss import pseudo_gene
from boss.cli import main


@pytest.fixture
def linear_csv(tmp_path):
    rng = np.random.default_rng(0)
    n = 120
    b = pseudo_gene(n, rng)
    age = rng.normal(60, 8, size=n)
    y = 0.8 * (b > np.median(b)) + 0.02 * age + rng.standard_normal(n)
    df = pd.DataFrame({"sample": [f"s{i}" for i in range(n)],
                       "expr": b, "expr2": b + 0.4 * rng.normal(size=n),
                       "age": age, "score": y})
    path = tmp_path / "data.csv"
    df.to_csv(path, index=False)
    return str(path)


@pytest.fixture
def survival_csv(tmp_path):
    rng = np.random.default_rng(1)
    n = 130
    b = pseudo_gene(n, rng)
    t = rng.exponential(scale=np.exp(-0.5 * (b > np.median(b))))
    c = rng.exponential(scale=3.0, size=n)
    df = pd.DataFrame({"sample": [f"s{i}" for i in range(n)],
                       "expr": b,
                       "time": np.minimum(t, c),
                       "status": (t <= c).astype(int)})
    path = tmp_path / "surv.csv"
    df.to_csv(path, index=False)
    return str(path)


class TestTestCommand:
    def test_text_report(self, linear_csv, capsys):
        code = main(["test", "--data", linear_csv, "--outcome", "score",
                     "--biomarker", "expr", "--k", "6", "--seed", "1"])
        out = capsys.readouterr().out
        assert code == 0
        assert "FWER" in out and "optimal cutoff" in out

    def test_exit_zero_even_without_rejection(self, linear_csv, tmp_path):
        rng = np.random.default_rng(9)
        df = pd.read_csv(linear_csv)
        df["score"] = rng.standard_normal(len(df))  # null outcome
        null_csv = tmp_path / "null.csv"
        df.to_csv(null_csv, index=False)
        code = main(["test", "--data", str(null_csv), "--outcome", "score",
                     "--biomarker", "expr", "--k", "6", "--seed", "1"])
        assert code == 0

    def test_unknown_column_exits_2(self, linear_csv, capsys):
        code = main(["test", "--data", linear_csv, "--outcome", "nope",
                     "--biomarker", "expr"])
        assert code == 2
        assert "nope" in capsys.readouterr().err

    def test_missing_file_exits_2(self):
        assert main(["test", "--data", "/no/such/file.csv", "--outcome", "y",
                     "--biomarker", "b"]) == 2

    def test_inadmissible_grid_exits_2(self, tmp_path, capsys):
        df = pd.DataFrame({"sample": ["a", "b", "c", "d"],
                           "b": [1.0, 1.0, 1.0, 1.0],
                           "y": [0.1, 0.2, 0.3, 0.4]})
        path = tmp_path / "flat.csv"
        df.to_csv(path, index=False)
        code = main(["test", "--data", str(path), "--outcome", "y",
                     "--biomarker", "b", "--min-group", "1"])
        assert code == 2
        assert "no admissible cutoffs" in capsys.readouterr().err

    def test_explicit_cutoffs_override_k(self, linear_csv, capsys):
        code = main(["test", "--data", linear_csv, "--outcome", "score",
                     "--biomarker", "expr", "--k", "9",
                     "--cutoffs", "1.0,2.0", "--format", "json", "--seed", "0"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        cutoffs = [t["cutoff"] for t in payload["result"]["per_cutoff"]]
        assert cutoffs == [1.0, 2.0]

    def test_json_reruns_byte_identical(self, linear_csv, capsys):
        argv = ["test", "--data", linear_csv, "--outcome", "score",
                "--biomarker", "expr", "--k", "8", "--seed", "42",
                "--format", "json"]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        second = capsys.readouterr().out
        assert first == second
        assert json.loads(first)["schema"] == "boss.test/1"

    def test_covariates_and_cox(self, survival_csv, capsys):
        code = main(["test", "--data", survival_csv, "--outcome", "time,status",
                     "--biomarker", "expr", "--model", "cox", "--k", "5",
                     "--format", "json", "--seed", "3"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["result"]["metadata"]["model"] == "cox"

    def test_cox_without_event_column_exits_2(self, survival_csv):
        assert main(["test", "--data", survival_csv, "--outcome", "time",
                     "--biomarker", "expr", "--model", "cox"]) == 2

    def test_out_flag_writes_file(self, linear_csv, tmp_path):
        dest = tmp_path / "report.json"
        code = main(["test", "--data", linear_csv, "--outcome", "score",
                     "--biomarker", "expr", "--k", "5", "--format", "json",
                     "--out", str(dest), "--seed", "2"])
        assert code == 0
        assert json.loads(dest.read_text())["schema"] == "boss.test/1"


class TestOtherCommands:
    def test_pair_runs(self, linear_csv, capsys):
        code = main(["pair", "--data", linear_csv, "--outcome", "score",
                     "--biomarker", "expr,expr2", "--k", "3",
                     "--format", "json", "--seed", "1"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["schema"] == "boss.pair/1"
        assert payload["result"]["metadata"]["pairing"] == "lattice"

    def test_permute_matches_engine_shape(self, linear_csv, capsys):
        code = main(["permute", "--data", linear_csv, "--outcome", "score",
                     "--biomarker", "expr", "--k", "6", "--n-perm", "199",
                     "--format", "json", "--seed", "5"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["result"]["n_perm"] == 199
        assert 0.0 < payload["result"]["fwer"] <= 1.0

    def test_bench_row_per_k(self, capsys):
        code = main(["bench", "--ks", "4,5", "--n", "70", "--n-perm", "25",
                     "--replicates", "1", "--format", "json", "--seed", "0"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert [r["k"] for r in payload["rows"]] == [4, 5]
        assert all("speedup" in r for r in payload["rows"])

    def test_simulate_smoke(self, capsys):
        code = main(["simulate", "--effect", "null", "--k", "4", "--n", "80",
                     "--replicates", "5", "--n-perm", "50", "--format", "json",
                     "--seed", "1"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["rows"][0]["replicates"] == 5


class TestBatchCommand:
    @pytest.fixture
    def batch_files(self, tmp_path):
        rng = np.random.default_rng(2)
        n = 90
        ids = [f"s{i}" for i in range(n)]
        b = pseudo_gene(n, rng)
        y = 1.0 * (b > np.median(b)) + rng.standard_normal(n)
        clin = pd.DataFrame({"sample": ids, "score": y})
        expr = pd.DataFrame({"sample": ids, "geneA": b,
                             "geneB": pseudo_gene(n, rng)})
        cpath, epath = tmp_path / "clin.csv", tmp_path / "expr.csv"
        clin.to_csv(cpath, index=False)
        expr.to_csv(epath, index=False)
        return str(epath), str(cpath), tmp_path

    def test_batch_writes_tables(self, batch_files, capsys):
        epath, cpath, tmp = batch_files
        out = tmp / "results"
        code = main(["batch", "--expression", epath, "--clinical", cpath,
                     "--outcome", "score", "--k", "5", "--threads", "1",
                     "--seed", "4", "--out", str(out)])
        assert code == 0
        table = pd.read_csv(str(out) + ".csv")
        assert list(table.columns) == ["gene", "optimal_cutoff", "n_high",
                                       "n_low", "beta", "z", "fwer", "q",
                                       "significant", "error_code"]
        meta = json.loads((tmp / "results.json").read_text())
        assert meta["schema"] == "boss.batch/1"
        assert "tested 2 biomarkers" in capsys.readouterr().out

    def test_single_gene_batch_agrees_with_test_command(self, batch_files, capsys):
        epath, cpath, tmp = batch_files
        expr = pd.read_csv(epath)[["sample", "geneA"]]
        single = tmp / "one.csv"
        expr.to_csv(single, index=False)
        out = tmp / "one_results"
        assert main(["batch", "--expression", str(single), "--clinical", cpath,
                     "--outcome", "score", "--k", "5", "--threads", "1",
                     "--seed", "6", "--out", str(out)]) == 0
        capsys.readouterr()
        table = pd.read_csv(str(out) + ".csv")

        clin = pd.read_csv(cpath)
        merged = clin.merge(pd.read_csv(str(single)), on="sample")
        data_csv = tmp / "merged.csv"
        merged.to_csv(data_csv, index=False)
        assert main(["test", "--data", str(data_csv), "--outcome", "score",
                     "--biomarker", "geneA", "--k", "5", "--seed", "6",
                     "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        # batch derives per-gene seeds from (seed, column); gene 0 matches
        assert table.loc[0, "q"] == pytest.approx(table.loc[0, "fwer"])
        assert table.loc[0, "fwer"] == pytest.approx(
            payload["result"]["fwer"], abs=5e-5)

    def test_env_var_thread_fallback(self, batch_files, monkeypatch, capsys):
        epath, cpath, tmp = batch_files
        monkeypatch.setenv("BOSS_THREADS", "1")
        assert main(["batch", "--expression", epath, "--clinical", cpath,
                     "--outcome", "score", "--k", "4", "--seed", "1"]) == 0
        monkeypatch.setenv("BOSS_THREADS", "zebra")
        assert main(["batch", "--expression", epath, "--clinical", cpath,
                     "--outcome", "score", "--k", "4", "--seed", "1"]) == 2
