"""Command-line entry point.

    mlaucb simulate       --config fig4d --out results/
    mlaucb sweep          --config fig4a --out results/
    mlaucb coverage       --out results/
    mlaucb quantile-table --out results/
    mlaucb selftest

Exit codes: 0 success, 1 runtime failure (or a failed check), 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

from .config import SimulationConfig, load_config
from .environments import GaussianArmSpec
from .errors import ConfigurationError
from .harness import (
    coverage_tolerance,
    miscoverage_rates,
    run_replications,
    sweep,
    write_results_csv,
    write_summary_json,
    write_trace_csv,
)
from .stats_core import RandomStream, chk_quantile_bound, significance_level, t_quantile

log = logging.getLogger("mlaucb")

MIN_COVERAGE_REPS = 1000


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="config file, or the name of a bundled config (e.g. fig4d)")
    common.add_argument("--seed", type=_seed, metavar="U64", help="base seed (overrides run.seed)")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value, e.g. --set run.horizon=500 (repeatable)")
    common.add_argument("--threads", type=int, default=1, metavar="N",
                        help="worker processes for replications")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mlaucb", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run replications of each configured policy")
    sub.add_parser("sweep", parents=[common], help="sweep one parameter (N, rho2 or Delta)")
    sub.add_parser("coverage", parents=[common], help="empirical miscoverage of the upper bound")
    sub.add_parser("quantile-table", parents=[common],
                   help="t quantile versus its closed-form upper bound")
    sub.add_parser("selftest", parents=[common], help="run the built-in property checks")
    return parser


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args, values) -> int:
    config = SimulationConfig.from_values(values)
    result = run_replications(config, threads=args.threads, keep_traces=config.trace)
    out = _out_dir(args)
    write_results_csv(out / "results.csv", result.summaries, config.horizon)
    write_summary_json(out / "summary.json", config, result.summaries)
    if config.trace:
        write_trace_csv(out / "trace.csv", result.traces)
    for s in result.summaries:
        print(f"{s.policy}: mean final regret {s.mean:.3f} (sd {s.sd:.3f}, ci95 +/-{s.ci95:.3f}, R={s.replications})")
    return 0


def cmd_sweep(args, values) -> int:
    config = SimulationConfig.from_values(values)
    axis = values["sweep"]["axis"]
    summaries = sweep(config, axis, values["sweep"]["grid"], threads=args.threads)
    out = _out_dir(args)
    write_results_csv(out / "results.csv", summaries, config.horizon)
    write_summary_json(out / "summary.json", config, summaries, {"sweep": {"axis": axis}})
    for s in summaries:
        print(f"{axis}={s.param_value:g} {s.policy}: {s.mean:.3f} +/-{s.ci95:.3f}")
    return 0


def cmd_coverage(args, values) -> int:
    cov = values["coverage"]
    if cov["reps"] < MIN_COVERAGE_REPS:
        raise ConfigurationError(f"need at least {MIN_COVERAGE_REPS} replications, got {cov['reps']}",
                                 "coverage.reps")
    if any(n < 4 for n in cov["n"]):
        raise ConfigurationError("every n must be >= 4", "coverage.n")
    if any(m < 0 for m in cov["offline"]):
        raise ConfigurationError("offline sizes must be >= 0", "coverage.offline")
    if any(not 0 < d < 0.5 for d in cov["delta"]):
        raise ConfigurationError("every delta must lie in (0, 1/2)", "coverage.delta")
    if not cov["n"] or not cov["offline"] or not cov["rho"] or not cov["delta"]:
        raise ConfigurationError("coverage grid is empty", "coverage")
    specs = {}
    for rho in cov["rho"]:
        try:
            specs[rho] = GaussianArmSpec(cov["mu"], cov["mu_tilde"], cov["sigma"], cov["sigma_tilde"], rho)
        except ConfigurationError as exc:
            raise ConfigurationError(str(exc).split(": ", 1)[-1], f"coverage.{exc.field}") from None

    seed = values["run"]["seed"]
    reps = cov["reps"]
    rows, ok = [], True
    for n in cov["n"]:
        for big_n in cov["offline"]:
            for rho in cov["rho"]:
                stream = RandomStream.for_role(seed, "coverage", n, big_n, rho)
                rates = miscoverage_rates(specs[rho], n, big_n, cov["delta"], reps, stream)
                for delta, rate in zip(cov["delta"], rates):
                    limit = coverage_tolerance(delta, reps)
                    passed = rate <= limit
                    ok &= passed
                    rows.append([n, big_n, rho, delta, reps, rate, limit, passed])
                    print(f"n={n} N={big_n} rho={rho:g} delta={delta:g}: miscoverage {rate:.5f} "
                          f"(limit {limit:.5f}) {'ok' if passed else 'FAIL'}")
    with open(_out_dir(args) / "coverage.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "N", "rho", "delta", "reps", "miscoverage", "limit", "pass"])
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return 0 if ok else 1


def quantile_rows(s_grid, d_values=()):
    """Rows (s, d, bound, quantile, gap); d defaults to floor(log s) per s."""
    rows = []
    for s in s_grid:
        if not s > 1:
            raise ConfigurationError(f"every s must exceed 1, got {s}", "quantile_table.s")
        ds = d_values or [math.floor(math.log(s))]
        for d in ds:
            if d < 2:
                raise ConfigurationError(f"the bound needs d >= 2, got d={d} at s={s:g}",
                                         "quantile_table.d")
            bound = chk_quantile_bound(d, s)
            quantile = t_quantile(d, significance_level(s))
            rows.append((s, d, bound, quantile, bound - quantile))
    return rows


def cmd_quantile_table(args, values) -> int:
    qt = values["quantile_table"]
    rows = quantile_rows(qt["s"], qt["d"])
    with open(_out_dir(args) / "quantile_table.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "d", "bound", "quantile", "gap"])
        for s, d, bound, q, gap in rows:
            w.writerow([repr(float(s)), d, repr(bound), repr(q), repr(gap)])
    bad = [r for r in rows if not r[4] >= 0]
    for s, d, bound, q, gap in bad:
        print(f"negative gap at s={s:g}, d={d}: bound {bound:.6f} < quantile {q:.6f}")
    print(f"{len(rows)} rows, {len(bad)} negative gaps")
    return 0 if not bad else 1


def cmd_selftest(args, values) -> int:
    from .selftest import run_all

    return 0 if run_all(values["run"]["seed"]) else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "coverage": cmd_coverage,
    "quantile-table": cmd_quantile_table,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigurationError("must be >= 1", "--threads")
        values = load_config(args.config, args.overrides, args.seed)
        return COMMANDS[args.command](args, values)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
