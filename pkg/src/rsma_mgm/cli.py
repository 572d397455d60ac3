"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 solver did not converge,
4 file I/O error.  Comparison outcomes (e.g. a scheme ordering that differs
from the expected one) are reported, never turned into a failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .allocation import McsTriple
from .experiment.campaign import (CampaignError, CampaignSpec, prepare_case, run_campaign, solve_precoders,
                                  sound_csit)
from .experiment.compare import CaseResult, compare_schemes, default_workers, ordering_summary
from .experiment.config import ConfigError, dumps_campaign, load_campaign
from .experiment.report import RESULTS_SCHEMA_VERSION, ReportError, emit_report, load_results
from .precoding import solve_maxmin
from .scenario import (ScenarioError, build_nine_cases, channel_metrics, default_scenario, dumps_scenario,
                       generate_channels, load_scenario, true_wideband)
from .schemes import Scheme

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

log = logging.getLogger("rsma_mgm")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {path}: {exc.strerror}") from None
    return path


def _existing(path: str, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise CliError(EXIT_IO, f"{what} not found: {p}")
    return p


def _load_scenario(path: str):
    p = _existing(path, "scenario file")
    try:
        return load_scenario(p)
    except ScenarioError as exc:
        raise CliError(EXIT_CONFIG, f"{p}: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {p}: {exc.strerror}") from None


def _load_campaign(path: str, seed=None):
    p = _existing(path, "campaign file")
    try:
        spec = load_campaign(p)
    except ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"{p}: {exc}") from None
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {p}: {exc.strerror}") from None
    if seed is not None:
        spec = replace(spec, seed=seed)
    return spec


def _parse_triple(text: str) -> McsTriple:
    parts = text.split(",")
    if len(parts) != 3:
        raise CliError(EXIT_CONFIG, f"--mcs expects 'c,p1,p2' (use '-' for an inactive stream), got {text!r}")
    try:
        return McsTriple(*[None if p.strip() in ("-", "") else int(p) for p in parts])
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, f"--mcs: {exc}") from None


def _metrics_table(cases) -> str:
    lines = [f"{'case':<8} {'alpha mean dB':>14} {'alpha range dB':>18} {'rho mean':>9} {'rho range':>14}"]
    for sc in cases:
        m = channel_metrics(true_wideband(generate_channels(sc)))
        a0, a1 = m["alpha_range"]
        r0, r1 = m["rho_range"]
        lines.append(f"{sc.name:<8} {m['alpha_mean']:>14.2f} {f'[{a0:.2f}, {a1:.2f}]':>18} "
                     f"{m['rho_mean']:>9.3f} {f'[{r0:.2f}, {r1:.2f}]':>14}")
    return "\n".join(lines) + "\n"


def cmd_gen_cases(args) -> int:
    base = _load_scenario(args.base) if args.base else default_scenario()
    try:
        cases = build_nine_cases(base)
    except ScenarioError as exc:
        raise CliError(EXIT_CONFIG, f"base scenario: {exc}") from None
    out = Path(args.out)
    for i, sc in enumerate(cases, start=1):
        name = f"case{i}.json"
        _write(out / name, dumps_scenario(sc))
        spec = CampaignSpec(sc, runs=args.runs, seed=args.seed if args.seed is not None else 0, case_index=i)
        _write(out / f"campaign{i}.json", dumps_campaign(spec, scenario_ref=name))
    table = _metrics_table(cases)
    _write(out / "preview.txt", table)
    print(table, end="")
    return EXIT_OK


def cmd_solve(args) -> int:
    sc = _load_scenario(args.scenario)
    csit = true_wideband(generate_channels(sc))
    if args.campaign_style:
        spec = CampaignSpec(sc, seed=args.seed or 0)
        csit = sound_csit(spec, generate_channels(sc), 1)
        res = solve_precoders(spec, csit, args.scheme)
    else:
        res = solve_maxmin(csit, sc.tx_power, sc.noise_variance, args.scheme)
    rates = res.rates.to_dict()
    print(f"scheme      {Scheme.parse(args.scheme).value}")
    print(f"status      {res.status} after {res.iterations} iterations (start: {res.start})")
    print(f"objective   {res.objective:.6f} bit/s/Hz")
    print(f"rates       common {rates['r_c']:.6f}  private {rates['r_p'][0]:.6f} {rates['r_p'][1]:.6f}  "
          f"net {rates['r_net'][0]:.6f} {rates['r_net'][1]:.6f}")
    pw = res.precoders.powers
    print(f"powers      |p_c|^2 {pw[0]:.6f}  |p_1|^2 {pw[1]:.6f}  |p_2|^2 {pw[2]:.6f}  "
          f"total {sum(pw):.6f} / P_t {sc.tx_power:.6f}")
    trace = list(res.trace)
    shown = trace if args.verbose else trace[-5:]
    print("trace       " + " ".join(f"{v:.6f}" for v in shown))
    if args.out:
        payload = {"schema_version": 1, "scenario": sc.name, "precoders": res.precoders.to_dict(),
                   "rates": rates, "objective": res.objective, "status": res.status,
                   "trace": [float(v) for v in trace]}
        _write(Path(args.out), json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if res.status != "converged":
        print(f"warning: solver did not converge ({res.status})", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_run(args) -> int:
    spec = _load_campaign(args.campaign, args.seed)
    if args.runs is not None:
        spec = replace(spec, runs=args.runs)
    triple = _parse_triple(args.mcs)
    ctx = prepare_case(spec)
    try:
        counts = run_campaign(spec, triple, args.scheme, ctx)
    except CampaignError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from None
    rep = counts.report()
    print(f"{rep.scheme.value} {triple.label()}  D_c={counts.d_c} D_1={counts.d_1} D_2={counts.d_2} "
          f"of {counts.runs}  min {rep.min_throughput / 1e6:.3f} Mbps  sum {rep.sum_throughput / 1e6:.3f} Mbps")
    if args.out:
        _write(Path(args.out), json.dumps({"schema_version": 1, "counts": counts.to_dict(),
                                           "report": rep.to_dict()}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _sweep_one(spec):
    return compare_schemes(spec).to_dict()


def cmd_sweep(args) -> int:
    specs = [_load_campaign(p, args.seed) for p in args.campaigns]
    if args.runs is not None:
        specs = [replace(s, runs=args.runs) for s in specs]
    workers = args.workers or default_workers()
    out = Path(args.out)
    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(specs))) as pool:
            dicts = list(pool.map(_sweep_one, specs))
    else:
        dicts = [_sweep_one(s) for s in specs]
    for spec, d in zip(specs, dicts):
        r = CaseResult.from_dict(d)
        doc = {"schema_version": RESULTS_SCHEMA_VERSION, "campaign": json.loads(dumps_campaign(spec)),
               "result": r.to_dict()}
        path = _write(out / f"case{spec.case_index}" / "case_result.json",
                      json.dumps(doc, indent=2, sort_keys=True) + "\n")
        best = {k: v.report.mcs.label() for k, v in sorted(r.schemes.items())}
        print(f"case {spec.case_index}: {best} -> {path}")
    return EXIT_OK


def _collect_case_results(dirs) -> list[CaseResult]:
    results = []
    for d in dirs:
        d = _existing(d, "case directory")
        files = [d] if d.is_file() else sorted(d.glob("**/case_result.json"))
        if not files:
            raise CliError(EXIT_IO, f"no case_result.json under {d} (run 'sweep' first)")
        for f in files:
            try:
                doc = json.loads(f.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise CliError(EXIT_IO, f"cannot read {f}: {exc}") from None
            if doc.get("schema_version") != RESULTS_SCHEMA_VERSION:
                raise CliError(EXIT_CONFIG, f"{f}: unsupported schema_version {doc.get('schema_version')!r}")
            results.append(CaseResult.from_dict(doc["result"]))
    return sorted(results, key=lambda r: r.case_index)


def _print_ordering(results) -> None:
    summ = ordering_summary(results)
    print(f"RSMA min-throughput >= max(SDMA, NOMA): {summ['rsma_wins']}/{summ['cases']} cases")
    if summ["sdma_dominated"]:
        dom = ", ".join(f"{k}:{'yes' if v else 'no'}" for k, v in sorted(summ["sdma_dominated"].items()))
        print(f"SDMA strictly dominated by RSMA: {dom}")
    if summ["common_power_fraction"]:
        fr = ", ".join(f"{k}:{v:.3f}" for k, v in sorted(summ["common_power_fraction"].items()))
        print(f"RSMA common power fraction: {fr}")


def cmd_compare(args) -> int:
    results = _collect_case_results(args.case_dirs)
    try:
        paths = emit_report(results, args.out)
    except ReportError as exc:
        raise CliError(EXIT_IO, str(exc)) from None
    print(paths["summary"].read_text(), end="")
    _print_ordering(results)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        results, meta = load_results(args.results)
        paths = emit_report(results, args.out, meta)
    except ReportError as exc:
        raise CliError(EXIT_IO, str(exc)) from None
    except (ValueError, KeyError) as exc:
        raise CliError(EXIT_CONFIG, f"{args.results}: {exc}") from None
    for kind, p in paths.items():
        print(f"{kind:<14} {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rsma-mgm",
        description="Link-level RSMA/SDMA/NOMA multi-group multicast simulator.",
        epilog="exit codes: 0 ok, 2 configuration error, 3 solver did not converge, 4 I/O error",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    p.add_argument("--seed", type=int, default=None, help="override the root seed")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    g = sub.add_parser("gen-cases", help="write the nine case scenarios and campaign files")
    g.add_argument("out", help="output directory")
    g.add_argument("--base", help="base scenario file (default: built-in calibration)")
    g.add_argument("--runs", type=int, default=100, help="runs per campaign in the generated campaign files")
    g.set_defaults(func=cmd_gen_cases)

    s = sub.add_parser("solve", help="max-min precoders for one scenario")
    s.add_argument("scenario", help="scenario file")
    s.add_argument("--scheme", default="RSMA", type=str.upper, choices=[x.value for x in Scheme])
    s.add_argument("--out", help="write the precoders and rates as JSON")
    s.add_argument("--campaign-style", action="store_true",
                   help="use sounded CSIT and the mismatch-aware design, as campaigns do")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("run", help="one campaign of a fixed MCS triple")
    r.add_argument("campaign", help="campaign file")
    r.add_argument("--scheme", required=True, type=str.upper, choices=[x.value for x in Scheme])
    r.add_argument("--mcs", required=True, help="c,p1,p2 MCS indices, '-' for inactive streams (write --mcs=-,4,5 when the first is inactive)")
    r.add_argument("--runs", type=int, help="override the number of runs")
    r.add_argument("--out", help="write counts and throughputs as JSON")
    r.set_defaults(func=cmd_run)

    w = sub.add_parser("sweep", help="MCS search and scheme comparison for one or more cases")
    w.add_argument("campaigns", nargs="+", help="campaign files")
    w.add_argument("--out", required=True, help="output directory (one subdirectory per case)")
    w.add_argument("--runs", type=int, help="override the number of runs")
    w.add_argument("--workers", type=int, default=None, help="parallel cases (default: available cores)")
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="summary table and plot data from sweep outputs")
    c.add_argument("case_dirs", nargs="+", help="sweep output directories or case_result.json files")
    c.add_argument("--out", required=True, help="report directory")
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("report", help="regenerate report files from results.json")
    e.add_argument("results", help="results.json written by compare")
    e.add_argument("--out", required=True, help="report directory")
    e.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
