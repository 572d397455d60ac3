"""Result files: versioned JSON, a text summary and plot-ready CSV tables."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

from ..allocation import ThroughputReport
from .compare import CaseResult

RESULTS_SCHEMA_VERSION = 1
MBPS = 1e6


class ReportError(OSError):
    """Failure to read or write a report file (message carries the path)."""


def results_to_dict(results: Sequence[CaseResult], meta: dict | None = None) -> dict:
    return {"schema_version": RESULTS_SCHEMA_VERSION, "meta": meta or {},
            "cases": [r.to_dict() for r in sorted(results, key=lambda r: r.case_index)]}


def results_from_dict(d: dict) -> tuple[list[CaseResult], dict]:
    if d.get("schema_version") != RESULTS_SCHEMA_VERSION:
        raise ValueError(f"unsupported results schema_version {d.get('schema_version')!r}")
    return [CaseResult.from_dict(c) for c in d["cases"]], d.get("meta", {})


def dumps_results(results: Sequence[CaseResult], meta: dict | None = None) -> str:
    return json.dumps(results_to_dict(results, meta), indent=2, sort_keys=True) + "\n"


def load_results(path) -> tuple[list[CaseResult], dict]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ReportError(f"cannot read results file {path}: {exc.strerror}") from exc
    return results_from_dict(json.loads(text))


def _rows_to_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _iter(results: Sequence[CaseResult]):
    for r in sorted(results, key=lambda r: r.case_index):
        for name in sorted(r.schemes):
            yield r, name, r.schemes[name]


def scatter_csv(results: Sequence[CaseResult]) -> str:
    """One (min, sum) point per case and scheme, in Mbps."""
    rows = [(r.case_index, name, _fmt(s.min_throughput / MBPS), _fmt(s.sum_throughput / MBPS))
            for r, name, s in _iter(results)]
    return _rows_to_csv(("case", "scheme", "min_mbps", "sum_mbps"), rows)


def fairness_line_csv(results: Sequence[CaseResult], points: int = 2) -> str:
    """Reference line sum = 2 * min spanning the scatter's range."""
    top = max([s.min_throughput / MBPS for _, _, s in _iter(results)] + [1.0])
    rows = [(_fmt(top * i / (points - 1)), _fmt(2 * top * i / (points - 1))) for i in range(points)]
    return _rows_to_csv(("min_mbps", "sum_mbps"), rows)


def bars_csv(results: Sequence[CaseResult]) -> str:
    """Per-group throughput split into the common share and the private part."""
    rows = []
    for r, name, s in _iter(results):
        rep = s.report
        for g, t_p in ((1, rep.t_p1), (2, rep.t_p2)):
            common = rep.split.fraction(g) * rep.t_c
            rows.append((r.case_index, name, g, _fmt(common / MBPS), _fmt(t_p / MBPS),
                         _fmt(rep.t_group[g - 1] / MBPS)))
    return _rows_to_csv(("case", "scheme", "group", "common_mbps", "private_mbps", "total_mbps"), rows)


def mcs_bler_csv(results: Sequence[CaseResult]) -> str:
    """MCS index and BLER of every stream of the selected triples ("--" for inactive streams)."""
    rows = []
    for r, name, s in _iter(results):
        row = [r.case_index, name]
        for idx, b in zip(s.report.mcs.as_tuple(), s.report.bler):
            row += ["--", "--"] if idx is None else [idx, f"{b:.2f}"]
        rows.append(row)
    return _rows_to_csv(("case", "scheme", "common_mcs", "common_bler", "private1_mcs", "private1_bler",
                         "private2_mcs", "private2_bler"), rows)


def summary_table(results: Sequence[CaseResult]) -> str:
    head = (f"{'case':>4}  {'scheme':<6} {'mcs (c,p1,p2)':<14} {'min Mbps':>9} {'sum Mbps':>9}  "
            f"{'|pc|^2':>7} {'|p1|^2':>7} {'|p2|^2':>7}  {'alpha dB':>8} {'rho':>5}")
    lines = [head, "-" * len(head)]
    for r, name, s in _iter(results):
        lines.append(f"{r.case_index:>4}  {name:<6} {s.report.mcs.label():<14} {s.min_throughput / MBPS:>9.3f} "
                     f"{s.sum_throughput / MBPS:>9.3f}  {s.powers[0]:>7.4f} {s.powers[1]:>7.4f} {s.powers[2]:>7.4f}  "
                     f"{r.metrics['alpha_mean']:>8.2f} {r.metrics['rho_mean']:>5.2f}")
    return "\n".join(lines) + "\n"


def recompute_report(rep: ThroughputReport) -> ThroughputReport:
    """Throughputs rebuilt from the stored raw counts only."""
    return ThroughputReport.from_dict(rep.to_dict())


def emit_report(results: Sequence[CaseResult], out_dir, meta: dict | None = None) -> dict:
    """Write every report file under ``out_dir``; returns {kind: path}."""
    out_dir = Path(out_dir)
    files = {
        "results": ("results.json", dumps_results(results, meta)),
        "summary": ("summary.txt", summary_table(results)),
        "scatter": ("scatter.csv", scatter_csv(results)),
        "fairness_line": ("fairness_line.csv", fairness_line_csv(results)),
        "bars": ("bars.csv", bars_csv(results)),
        "mcs_bler": ("mcs_bler.csv", mcs_bler_csv(results)),
    }
    written = {}
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportError(f"cannot create output directory {out_dir}: {exc.strerror}") from exc
    for kind, (name, text) in files.items():
        path = out_dir / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise ReportError(f"cannot write {path}: {exc.strerror}") from exc
        written[kind] = path
    return written
