"""Brute-force search of the MCS triple maximizing the minimum group throughput.

Triples are visited in decreasing order of their error-free throughput.  Two
exact rules skip work without changing the result:

* the visit stops once the error-free bound of the next triple cannot beat
  the incumbent;
* a running campaign is abandoned as soon as even all-successful remaining
  runs could not beat the incumbent.

One heuristic rule (optional) saves most of the cost at high MCS: a stream
that fails every one of the first ``probe_runs`` runs is declared dead at
that level, and every triple using that level or a higher one for the stream
(same common MCS for private streams) is skipped.  A stream at its lowest
candidate level is never declared dead, so its triple still competes with a
zero contribution from that stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from ..allocation import McsTriple, ThroughputReport, triples_for_scheme
from ..schemes import Scheme
from .campaign import CampaignCounts, CampaignSpec, CaseContext, prepare_case, run_campaign

Runner = Callable[[McsTriple, Callable[[CampaignCounts], Optional[str]]], CampaignCounts]


def ranking_key(rep: ThroughputReport) -> tuple:
    """Larger is better: min throughput, then sum, then lower MCS indices."""
    idx = tuple(-1 if i is None else i for i in rep.mcs.as_tuple())
    return (rep.min_throughput, rep.sum_throughput, tuple(-i for i in idx))


def error_free_report(scheme: Scheme, triple: McsTriple, runs: int, noma_common_group: int = 2) -> ThroughputReport:
    return ThroughputReport(scheme, triple, runs, runs, runs, runs, noma_common_group=noma_common_group)


@dataclass
class SearchResult:
    scheme: Scheme
    best: Optional[ThroughputReport]
    best_counts: Optional[CampaignCounts]
    evaluated: list = field(default_factory=list)       # every CampaignCounts, complete or not
    skipped: list = field(default_factory=list)         # (triple, reason)

    @property
    def complete(self) -> list[CampaignCounts]:
        return [c for c in self.evaluated if c.abandoned is None]

    def n_runs(self) -> int:
        return sum(c.completed for c in self.evaluated)


class _DeadLevels:
    """Stream levels observed to fail every probe run."""

    def __init__(self, lowest: Sequence[Optional[int]]):
        self.lowest = lowest
        self.common: Optional[int] = None
        self.private: dict = {}             # (g, common index) -> lowest dead level

    def mark(self, triple: McsTriple, stream: int) -> bool:
        idx = triple.as_tuple()
        level = idx[stream]
        if level is None or level == self.lowest[stream]:
            return False
        if stream == 0:
            self.common = level if self.common is None else min(self.common, level)
        else:
            key = (stream, idx[0])
            self.private[key] = min(self.private.get(key, level), level)
        return True

    def blocks(self, triple: McsTriple) -> Optional[str]:
        c, p1, p2 = triple.as_tuple()
        if c is not None and self.common is not None and c >= self.common:
            return f"common dead at MCS {self.common}"
        for g, p in ((1, p1), (2, p2)):
            dead = self.private.get((g, c))
            if p is not None and dead is not None and p >= dead:
                return f"private{g} dead at MCS {dead}"
        return None


def search_triples(scheme, triples: Sequence[McsTriple], runs: int, runner: Runner,
                   noma_common_group: int = 2, prune: bool = True, probe_runs: int = 20) -> SearchResult:
    """Argmax of the min group throughput over ``triples``.

    ``runner(triple, stop)`` performs one campaign and must honour ``stop``.
    With ``prune=False`` every triple is run in full (exhaustive reference).
    """
    scheme = Scheme.parse(scheme)
    bounds = {t: error_free_report(scheme, t, runs, noma_common_group) for t in triples}
    order = sorted(triples, key=lambda t: ranking_key(bounds[t]), reverse=True)
    lowest = []
    for s in range(3):
        vals = [t.as_tuple()[s] for t in triples if t.as_tuple()[s] is not None]
        lowest.append(min(vals) if vals else None)
    dead = _DeadLevels(lowest)
    result = SearchResult(scheme, None, None)
    best_key = None

    for t in order:
        if prune and best_key is not None and ranking_key(bounds[t]) < best_key:
            result.skipped.append((t, "bound"))
            continue
        if prune:
            reason = dead.blocks(t)
            if reason:
                result.skipped.append((t, reason))
                continue

        def stop(counts: CampaignCounts, _t=t) -> Optional[str]:
            if not prune:
                return None
            if counts.completed == probe_runs:
                died = [s for s, (d, i) in enumerate(zip(counts.counts, _t.as_tuple()))
                        if i is not None and d == 0 and dead.mark(_t, s)]
                if died:
                    return "dead stream " + ",".join(str(s) for s in died)
            if best_key is not None and ranking_key(counts.optimistic_report()) < best_key:
                return "bound"
            return None

        counts = runner(t, stop)
        result.evaluated.append(counts)
        if counts.abandoned is not None:
            continue
        rep = counts.report()
        key = ranking_key(rep)
        if best_key is None or key > best_key:
            best_key, result.best, result.best_counts = key, rep, counts
    return result


IDLE_COMMON_FRACTION = 1e-6


def brute_force_mcs(spec: CampaignSpec, scheme, ctx: Optional[CaseContext] = None, prune: bool = True,
                    probe_runs: int = 20, progress: Optional[Callable[[CampaignCounts], None]] = None) -> SearchResult:
    """MCS-limited max-min search of one scheme on one case."""
    scheme = Scheme.parse(scheme)
    ctx = ctx or prepare_case(spec)
    sol = ctx.solution(scheme)
    ncg = sol.precoders.noma_common_group or 2
    triples = triples_for_scheme(scheme, spec.mcs_search_space, ncg)
    if scheme is Scheme.RSMA and sol.precoders.powers[0] <= IDLE_COMMON_FRACTION * sum(sol.precoders.powers):
        # no power on p_c: the common stream is switched off rather than sent at zero power
        triples = sorted({McsTriple(None, t.private1, t.private2) for t in triples}, key=lambda t: t.as_tuple()[1:])

    def runner(t, stop):
        counts = run_campaign(spec, t, scheme, ctx, stop)
        if progress is not None:
            progress(counts)
        return counts

    return search_triples(scheme, triples, spec.runs, runner, ncg, prune, probe_runs)
