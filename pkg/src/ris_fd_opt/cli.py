"""Command-line entry point: ``ris-fd-opt <command> [options]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex


def _load(args) -> ex.Experiment:
    exp = ex.Experiment.from_file(args.config) if args.config else ex.Experiment()
    return exp.with_overrides(seed=args.seed, drops=args.drops)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    exp = _load(args)
    out = _out(args)
    res = ex.run_batch(exp, args.workers)
    rows = [r["row"] for r in res]
    ex.write_csv(out / "results.csv", rows)
    record = ex.config_record(exp)
    record["results"] = [r["result"] for r in res]
    ex.write_json(out / "result.json", record)
    m, se, n = ex.mean_se([r["dl_sum"] for r in rows])
    print(f"{n}/{len(rows)} feasible drops, mean DL sum rate {m:.3f} +- {se:.3f} bit/s/Hz")
    print(f"wrote {out / 'results.csv'} and {out / 'result.json'}")
    return 0


def _sweep(args, fn, keys, values, fig) -> int:
    exp = _load(args)
    out = _out(args)
    rows = fn(exp, args.workers)
    ex.write_csv(out / "results.csv", rows)
    summary = ex.summarize(rows, keys, values[0])
    for v in values[1:]:
        extra = ex.summarize(rows, keys, v)
        for s, e in zip(summary, extra):
            s.update({k: e[k] for k in e if k.startswith(v)})
    ex.write_csv(out / "summary.csv", summary)
    record = ex.config_record(exp)
    record["summary"] = summary
    ex.write_json(out / "result.json", record)
    ex.write_plot(out, fig)
    for s in summary:
        label = " ".join(f"{k}={s[k]}" for k in keys)
        print(f"{label}: " + " ".join(f"{v}={s[v + '_mean']:.3f}" for v in values))
    return 0


def cmd_sweep_users(args) -> int:
    return _sweep(args, ex.sweep_users, ["sweep", "gamma_U_db", "M", "N"], ["dl_sum", "ul_aggregate"], "fig2")


def cmd_sweep_distance(args) -> int:
    return _sweep(args, ex.sweep_distance, ["K", "d_m"], ["dl_sum"], "fig3")


def cmd_benchmark(args) -> int:
    exp = _load(args)
    out = _out(args)
    rows = ex.benchmark(exp, args.workers)
    ex.write_csv(out / "results.csv", rows)
    summary = []
    for ratio in dict.fromkeys(r["ratio"] for r in rows):
        sub = [r for r in rows if r["ratio"] == ratio]
        summary.append({"ratio": ratio, **{s: float(np.nanmean([r[s] for r in sub])) for s in ex.SCHEMES}})
    ex.write_csv(out / "summary.csv", summary)
    record = ex.config_record(exp)
    record["summary"] = summary
    record["overall"] = ex.benchmark_summary(rows)
    ex.write_json(out / "result.json", record)
    ex.write_plot(out, "fig4")
    overall = record["overall"]
    for s, m in overall["means"].items():
        print(f"{s:>14}: {m:.3f}")
    for k, v in overall["improvements"].items():
        print(f"{k}: {100 * v:+.1f}%")
    return 0


def cmd_selftest(args) -> int:
    from .selftest import run_selftest
    return run_selftest(fault=args.inject_fault)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ris-fd-opt", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, help_ in [("run", cmd_run, "run FRIS on a batch of drops"),
                            ("sweep-users", cmd_sweep_users, "rates vs number of DL/UL users"),
                            ("sweep-distance", cmd_sweep_distance, "rates vs BS-RIS distance and RIS size"),
                            ("benchmark", cmd_benchmark, "FRIS against the baseline schemes")]:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON config file (defaults are used for missing fields)")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--drops", type=int, help="number of drops per point")
        p.add_argument("--workers", type=int,
                       help="worker processes (default: $RIS_FD_OPT_WORKERS or 1)")
        p.add_argument("--out", default="out", help="output directory")
        p.set_defaults(func=fn)
    p = sub.add_parser("selftest", help="check the numerical invariants")
    p.add_argument("--inject-fault", choices=["omega-sign"], default=None,
                   help="corrupt a fixture to confirm the checks can fail")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ex.ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
