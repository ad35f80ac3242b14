"""Command-line surface: test, pair, permute, batch, simulate, bench.

Exit codes: 0 = computed (regardless of the statistical decision),
2 = input error, 3 = numeric failure. Every subcommand takes --seed and
emits schema-versioned JSON on request; statistical outputs are fully
deterministic for a fixed seed (wall-time fields naturally are not).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .batch import GridSpec, run_batch
from .core import build_grid, default_min_group, grid_from_cutoffs
from .dataio import load_clinical, load_dataset, load_expression
from .engine import (
    DEFAULT_MIN_ARM_EVENTS,
    boss_test,
    boss_test_pair,
    survival_admissible,
)
from .errors import FitError, InputError, NumericError
from .permutation import permute_fwer
from .regress import FitConfig
from .simulate import Scenario, rows_to_csv, run_bench, run_experiment

_SCHEMA = {
    "test": "boss.test/1",
    "pair": "boss.pair/1",
    "permute": "boss.permute/1",
    "batch": "boss.batch/1",
    "simulate": "boss.metrics/1",
    "bench": "boss.bench/1",
}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _threads(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("BOSS_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            raise InputError(f"BOSS_THREADS is not an integer: {env!r}") from None
    return os.cpu_count() or 1


def _split_outcome(spec: str):
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) == 1:
        return parts[0], None
    if len(parts) == 2:
        return parts[0], parts[1]
    raise InputError("--outcome takes COL or COL,EVENTCOL")


def _parse_float_list(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise InputError(f"could not parse number list: {text!r}") from None


def _covariates(args):
    if not args.covariates:
        return ()
    return tuple(c.strip() for c in args.covariates.split(",") if c.strip())


def _result_dict(res) -> dict:
    return {
        "optimal_index": res.optimal_index,
        "optimal_cutoff": res.optimal_cutoff,
        "z_star": res.z_star,
        "fwer": res.fwer,
        "fwer_mc_error": res.fwer_mc_error,
        "reject": res.reject,
        "alpha": res.alpha,
        "sidedness": res.sidedness,
        "per_cutoff": [
            {
                "index": t.cutoff_index,
                "cutoff": t.cutoff,
                "beta": t.beta_hat,
                "se": t.se,
                "z": t.z,
                "n_high": t.n_high,
                "n_low": t.n_low,
            }
            for t in res.per_cutoff
        ],
        "warnings": list(res.warnings),
        "metadata": {k: (list(v) if isinstance(v, tuple) else v)
                     for k, v in res.metadata.items()},
    }


def _emit(payload: dict, fmt: str, out: str | None, text_renderer):
    if fmt == "json":
        body = json.dumps(payload, indent=2, sort_keys=False) + "\n"
    elif fmt == "csv":
        body = _csv_body(payload)
    else:
        body = text_renderer(payload)
    if out:
        with open(out, "w") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)


def _csv_body(payload: dict) -> str:
    import csv
    import io

    rows = payload.get("rows")
    if rows is None:
        result = payload["result"]
        summary = {k: result[k] for k in
                   ("optimal_index", "optimal_cutoff", "z_star", "fwer",
                    "fwer_mc_error", "reject", "alpha", "sidedness")}
        rows = []
        for t in result["per_cutoff"]:
            row = dict(t)
            row["is_optimal"] = t["index"] == result["optimal_index"]
            row.update(summary)
            rows.append(row)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _render_test_text(payload: dict) -> str:
    r = payload["result"]
    k = len(r["per_cutoff"])
    lines = [
        f"model: {payload['params']['model']}   samples: {r['metadata'].get('n', '?')}   "
        f"cutoffs tested: k'={k}",
        f"optimal cutoff: index {r['optimal_index']}, tau = {_fmt(r['optimal_cutoff'])}, "
        f"z = {_fmt(r['z_star'])}",
        f"FWER = {_fmt(r['fwer'])} (mc error {_fmt(r['fwer_mc_error'])}, "
        f"{r['sidedness']})",
        f"decision at alpha={_fmt(r['alpha'])}: "
        + ("reject: the cutoff segments the outcome" if r["reject"]
           else "fail to reject"),
        "",
        f"{'idx':>4} {'cutoff':>12} {'beta':>12} {'se':>12} {'z':>12} "
        f"{'n_high':>7} {'n_low':>7}",
    ]
    for t in r["per_cutoff"]:
        mark = "*" if t["index"] == r["optimal_index"] else " "
        lines.append(
            f"{t['index']:>3}{mark} {_fmt(t['cutoff']):>12} {_fmt(t['beta']):>12} "
            f"{_fmt(t['se']):>12} {_fmt(t['z']):>12} {t['n_high']:>7} {t['n_low']:>7}")
    if k == 1:
        lines.insert(4, "single surviving cutoff: FWER equals the unadjusted p-value")
    for w in r["warnings"]:
        lines.append(f"warning: {w}")
    return "\n".join(lines) + "\n"


def _load_for_test(args, need_pair=False):
    outcome_col, event_col = _split_outcome(args.outcome)
    model = args.model
    if model == "cox" and event_col is None:
        raise InputError("cox model needs --outcome COL,EVENTCOL")
    biomarkers = [b.strip() for b in args.biomarker.split(",")]
    if need_pair:
        if len(biomarkers) != 2:
            raise InputError("pair analysis needs --biomarker COL1,COL2")
        b1, b2 = biomarkers
    else:
        if len(biomarkers) != 1:
            raise InputError("--biomarker takes a single column (use 'pair' for two)")
        b1, b2 = biomarkers[0], None
    data, n_dropped = load_dataset(
        args.data, b1, outcome_col, event_col, _covariates(args), model,
        biomarker2_col=b2)
    return data, n_dropped


def _make_grid(args, biomarker, n_covariates):
    min_group = args.min_group or default_min_group(n_covariates)
    if getattr(args, "cutoffs", None):
        return grid_from_cutoffs(biomarker, _parse_float_list(args.cutoffs), min_group)
    return build_grid(biomarker, args.k, min_group)


def _params_dict(args, extra=None):
    skip = {"func", "out", "format"}
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in skip and not k.startswith("_") and v is not None
              and k != "command"}
    if extra:
        params.update(extra)
    return params


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_test(args) -> int:
    data, n_dropped = _load_for_test(args)
    cfg = FitConfig(model=args.model)
    grid = _make_grid(args, data.biomarker, data.n_covariates)
    sided = "two-sided" if args.sided == "two" else "one-sided"
    res = boss_test(data, grid, cfg, alpha=args.alpha, sidedness=sided,
                    seed=args.seed, min_arm_events=args.min_events)
    payload = {
        "schema": _SCHEMA["test"],
        "params": _params_dict(args, {"model": args.model, "rows_dropped": n_dropped}),
        "result": _result_dict(res),
    }
    _emit(payload, args.format, args.out, _render_test_text)
    return 0


def cmd_pair(args) -> int:
    data, n_dropped = _load_for_test(args, need_pair=True)
    cfg = FitConfig(model=args.model)
    min_group = args.min_group or default_min_group(data.n_covariates)
    grid1 = build_grid(data.biomarker, args.k, min_group)
    grid2 = build_grid(data.biomarker2, args.k, min_group)
    sided = "two-sided" if args.sided == "two" else "one-sided"
    res = boss_test_pair(data, grid1, grid2, cfg, alpha=args.alpha,
                         sidedness=sided, seed=args.seed, min_group=min_group,
                         pairing=args.pairing)
    payload = {
        "schema": _SCHEMA["pair"],
        "params": _params_dict(args, {"rows_dropped": n_dropped}),
        "result": _result_dict(res),
    }
    _emit(payload, args.format, args.out, _render_test_text)
    return 0


def cmd_permute(args) -> int:
    data, n_dropped = _load_for_test(args)
    cfg = FitConfig(model=args.model)
    grid = _make_grid(args, data.biomarker, data.n_covariates)
    if args.model == "cox":
        keep, _ = survival_admissible(grid, data, args.min_events)
        grid = grid.subset(keep)
    res = permute_fwer(data, grid, cfg, n_perm=args.n_perm, seed=args.seed,
                       method=args.method)
    payload = {
        "schema": _SCHEMA["permute"],
        "params": _params_dict(args, {"rows_dropped": n_dropped}),
        "result": {
            "fwer": res.fwer,
            "se": res.se,
            "t_obs": res.t_obs,
            "n_perm": res.n_perm,
            "n_degenerate": res.n_degenerate,
        },
    }

    def text(p):
        r = p["result"]
        return (f"permutation FWER = {_fmt(r['fwer'])} +/- {_fmt(r['se'])} "
                f"({r['n_perm']} permutations, T_obs = {_fmt(r['t_obs'])}, "
                f"{r['n_degenerate']} degenerate)\n")

    _emit(payload, args.format, args.out, text)
    return 0


def cmd_batch(args) -> int:
    outcome_col, event_col = _split_outcome(args.outcome)
    if args.model == "cox" and event_col is None:
        raise InputError("cox model needs --outcome COL,EVENTCOL")
    clinical, n_dropped = load_clinical(args.clinical, outcome_col, event_col,
                                        _covariates(args), args.model)
    expression = load_expression(args.expression, transpose=args.transpose)
    cfg = FitConfig(model=args.model)
    spec = GridSpec(k=args.k, min_group=args.min_group)
    table, meta = run_batch(expression, clinical, cfg, spec,
                            alpha_fdr=args.alpha_fdr, seed=args.seed,
                            threads=_threads(args))
    meta["clinical_rows_dropped"] = n_dropped

    if args.out:
        table.to_csv(args.out + ".csv", index=False)
        with open(args.out + ".json", "w") as fh:
            json.dump({"schema": _SCHEMA["batch"], "metadata": meta,
                       "results": table.to_dict(orient="records")}, fh, indent=2)
            fh.write("\n")
    n_sig = int((table["significant"] == True).sum())  # noqa: E712 (column holds None for failures)
    sys.stdout.write(
        f"tested {meta['n_biomarkers']} biomarkers on {meta['n_samples_joined']} samples: "
        f"{n_sig} significant at FDR {_fmt(args.alpha_fdr)}, "
        f"{meta['n_failed']} failed\n")
    if args.format == "json" and not args.out:
        sys.stdout.write(json.dumps({"schema": _SCHEMA["batch"], "metadata": meta,
                                     "results": table.to_dict(orient="records")},
                                    indent=2) + "\n")
    return 0


def cmd_simulate(args) -> int:
    scenario = Scenario(model=args.model, k=args.k, effect=args.effect,
                        n_scale=args.n_scale, n=args.n, alpha=args.alpha,
                        n_perm=args.n_perm,
                        run_permutation=not args.no_permutation)
    result = run_experiment(scenario, replicates=args.replicates, seed=args.seed)
    rows = [result.to_row()]
    payload = {"schema": _SCHEMA["simulate"], "params": _params_dict(args),
               "rows": rows}

    def text(p):
        r = p["rows"][0]
        lines = [
            f"scenario: model={r['model']} k={r['k']} effect={r['effect']} "
            f"n={r['n']} n_scale={r['n_scale']}",
            f"replicates: {r['replicates']} (failed {r['n_failed']})",
            f"boss rejection rate: {_fmt(r['boss_rejection_rate'])} "
            f"(mean time {_fmt(r['boss_mean_time'])}s)",
        ]
        if r["perm_rejection_rate"] is not None:
            lines.append(
                f"permutation rejection rate: {_fmt(r['perm_rejection_rate'])} "
                f"(mean time {_fmt(r['perm_mean_time'])}s, "
                f"{r['disagreements']} disagreements)")
        return "\n".join(lines) + "\n"

    _emit(payload, args.format, args.out, text)
    if args.csv:
        rows_to_csv(rows, args.csv)
    return 0


def cmd_bench(args) -> int:
    ks = [int(v) for v in _parse_float_list(args.ks)]
    rows = run_bench(ks=ks, n=args.n, n_perm=args.n_perm,
                     replicates=args.replicates, model=args.model,
                     seed=args.seed)
    payload = {"schema": _SCHEMA["bench"], "params": _params_dict(args),
               "rows": rows}

    def text(p):
        lines = [f"{'k':>4} {'boss_s':>12} {'perm_s':>12} {'speedup':>9}"]
        for r in p["rows"]:
            lines.append(f"{r['k']:>4} {_fmt(r['boss_mean_time']):>12} "
                         f"{_fmt(r['perm_mean_time']):>12} "
                         f"{r['speedup']:>9.1f}")
        return "\n".join(lines) + "\n"

    _emit(payload, args.format, args.out, text)
    if args.csv:
        rows_to_csv(rows, args.csv)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(p, model=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv", "text"), default="text")
    p.add_argument("--out", help="write the report to this path instead of stdout")
    if model:
        p.add_argument("--model", choices=("linear", "cox"), default="linear")


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="CSV file with header row")
    p.add_argument("--outcome", required=True, metavar="COL[,EVENTCOL]")
    p.add_argument("--biomarker", required=True)
    p.add_argument("--covariates", default="", metavar="COLS")
    p.add_argument("--k", type=int, default=10, help="quantile grid size")
    p.add_argument("--min-group", type=int, default=None, dest="min_group")
    p.add_argument("--min-events", type=int, default=DEFAULT_MIN_ARM_EVENTS,
                   dest="min_events",
                   help="survival cutoffs need this many events per arm")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--sided", choices=("two", "one"), default="two")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boss",
        description="Optimal biomarker cutoff selection with exact FWER control.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="single-biomarker cutoff test")
    _add_data_flags(p)
    p.add_argument("--cutoffs", help="explicit cutoff values, overrides --k")
    _add_common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("pair", help="two-biomarker double-positive/negative test")
    _add_data_flags(p)
    p.add_argument("--pairing", choices=("lattice", "matched"), default="lattice")
    _add_common(p)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("permute", help="permutation estimate of the FWER")
    _add_data_flags(p)
    p.add_argument("--cutoffs", help="explicit cutoff values, overrides --k")
    p.add_argument("--n-perm", type=int, default=1000, dest="n_perm")
    p.add_argument("--method", choices=("auto", "fast", "refit"), default="auto")
    _add_common(p)
    p.set_defaults(func=cmd_permute)

    p = sub.add_parser("batch", help="run every biomarker column of a matrix")
    p.add_argument("--expression", required=True)
    p.add_argument("--transpose", action="store_true",
                   help="expression file has genes as rows")
    p.add_argument("--clinical", required=True)
    p.add_argument("--outcome", required=True, metavar="COL[,EVENTCOL]")
    p.add_argument("--covariates", default="", metavar="COLS")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--min-group", type=int, default=None, dest="min_group")
    p.add_argument("--alpha-fdr", type=float, default=0.05, dest="alpha_fdr")
    p.add_argument("--threads", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("simulate", help="power / type-I-error experiment")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--effect", choices=("strong", "weak", "null"), default="null")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--n-scale", type=float, default=1.0, dest="n_scale")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--n-perm", type=int, default=1000, dest="n_perm")
    p.add_argument("--no-permutation", action="store_true")
    p.add_argument("--csv", help="also write the metrics row(s) to this CSV")
    p.add_argument("--threads", type=int, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="exact test vs permutation timing")
    p.add_argument("--ks", default="6,8,10,12,14")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--n-perm", type=int, default=1000, dest="n_perm")
    p.add_argument("--replicates", type=int, default=3)
    p.add_argument("--csv", help="also write the timing rows to this CSV")
    _add_common(p, model=False)
    p.add_argument("--model", choices=("linear", "cox", "both"), default="both")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FitError, NumericError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())
