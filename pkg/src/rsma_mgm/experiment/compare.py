"""Three-way scheme comparison of one case, and a parallel driver over cases."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from ..allocation import ThroughputReport
from ..schemes import Scheme
from .campaign import CampaignSpec, CaseContext, prepare_case
from .search import brute_force_mcs


@dataclass
class SchemeResult:
    """Best MCS triple of one scheme plus everything needed to audit it."""

    report: ThroughputReport
    powers: tuple                       # (|p_c|^2, |p_1|^2, |p_2|^2)
    predicted: dict                     # rate report of the solved precoders on the CSIT
    solver_status: str
    n_evaluated: int = 0
    n_runs: int = 0

    @property
    def min_throughput(self) -> float:
        return self.report.min_throughput

    @property
    def sum_throughput(self) -> float:
        return self.report.sum_throughput

    @property
    def common_power_fraction(self) -> float:
        total = sum(self.powers)
        return self.powers[0] / total if total > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "report": self.report.to_dict(),
            "min_throughput": self.min_throughput,
            "sum_throughput": self.sum_throughput,
            "powers": [float(p) for p in self.powers],
            "predicted": self.predicted,
            "solver_status": self.solver_status,
            "n_evaluated": self.n_evaluated,
            "n_runs": self.n_runs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SchemeResult":
        return cls(ThroughputReport.from_dict(d["report"]), tuple(d["powers"]), d["predicted"],
                   d["solver_status"], int(d.get("n_evaluated", 0)), int(d.get("n_runs", 0)))


@dataclass
class CaseResult:
    name: str
    case_index: int
    metrics: dict
    schemes: dict = field(default_factory=dict)       # scheme value -> SchemeResult

    def get(self, scheme) -> SchemeResult:
        return self.schemes[Scheme.parse(scheme).value]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "case_index": self.case_index,
            "metrics": self.metrics,
            "schemes": {k: v.to_dict() for k, v in sorted(self.schemes.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaseResult":
        return cls(d["name"], int(d["case_index"]), d["metrics"],
                   {k: SchemeResult.from_dict(v) for k, v in d["schemes"].items()})


def _metrics_summary(ctx: CaseContext) -> dict:
    m = ctx.metrics()
    return {
        "alpha_db": [float(x) for x in m["alpha"]],
        "rho": [float(x) for x in m["rho"]],
        "alpha_mean": float(m["alpha_mean"]),
        "rho_mean": float(m["rho_mean"]),
        "rho_intra": [float(x) for x in m["rho_intra"]],
    }


def compare_schemes(spec: CampaignSpec, ctx: Optional[CaseContext] = None, prune: bool = True,
                    progress: Optional[Callable] = None) -> CaseResult:
    """Best MCS triple of every requested scheme on the same channels, CSIT and noise."""
    ctx = ctx or prepare_case(spec)
    out = CaseResult(spec.scenario.name, spec.case_index, _metrics_summary(ctx))
    for scheme in spec.schemes:
        res = brute_force_mcs(spec, scheme, ctx, prune=prune, progress=progress)
        sol = ctx.solution(scheme)
        out.schemes[scheme.value] = SchemeResult(
            res.best, tuple(float(p) for p in sol.precoders.powers),
            sol.rates.to_dict(), sol.status, len(res.evaluated), res.n_runs())
    return out


def _compare_job(spec: CampaignSpec) -> dict:
    return compare_schemes(spec).to_dict()


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1))


def run_cases(specs: Sequence[CampaignSpec], workers: Optional[int] = None) -> list[CaseResult]:
    """Compare schemes on every case, one worker process per case at a time.

    Results come back in input order whatever the completion order.
    """
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1 or len(specs) == 1:
        return [compare_schemes(s) for s in specs]
    with ProcessPoolExecutor(max_workers=min(workers, len(specs))) as pool:
        dicts = list(pool.map(_compare_job, specs))
    return [CaseResult.from_dict(d) for d in dicts]


def case_specs(cases, runs: int = 100, seed: int = 0, **kwargs) -> list[CampaignSpec]:
    """One campaign spec per scenario, numbered from 1."""
    return [CampaignSpec(sc, runs=runs, seed=seed, case_index=i, **kwargs) for i, sc in enumerate(cases, start=1)]


def ordering_summary(results: Sequence[CaseResult]) -> dict:
    """Scheme-ordering checks (RSMA wins, SDMA dominance, common power) on a set of case results."""
    rsma_wins, sdma_dominated, fractions = [], {}, []
    for r in results:
        schemes = r.schemes
        if "RSMA" not in schemes:
            continue
        rs = schemes["RSMA"]
        others = [schemes[k].min_throughput for k in ("SDMA", "NOMA") if k in schemes]
        rsma_wins.append(bool(not others or rs.min_throughput >= max(others)))
        if "SDMA" in schemes:
            sd = schemes["SDMA"]
            sdma_dominated[r.case_index] = bool(rs.min_throughput > sd.min_throughput
                                                and rs.sum_throughput > sd.sum_throughput)
        fractions.append((r.case_index, rs.common_power_fraction))
    return {"rsma_wins": int(np.sum(rsma_wins)), "cases": len(rsma_wins),
            "sdma_dominated": sdma_dominated, "common_power_fraction": dict(fractions)}
