import dataclasses
import itertools
import json
import zlib

import numpy as np
import pytest

from rsma_mgm.allocation import McsTriple, ThroughputReport, triples_for_scheme
from rsma_mgm.experiment import (CampaignCounts, CampaignError, CampaignSpec, CaseResult, SchemeResult,
                                 build_run_frame, dumps_results, emit_report, load_results, ordering_summary,
                                 prepare_case, ranking_key, results_from_dict, rng_for, run_campaign,
                                 search_triples, seed_sequence)
from rsma_mgm.experiment.config import (ConfigError, campaign_from_dict, dumps_campaign, load_campaign)
from rsma_mgm.experiment.report import (ReportError, bars_csv, fairness_line_csv, mcs_bler_csv,
                                        recompute_report, scatter_csv, summary_table)
from rsma_mgm.experiment.search import IDLE_COMMON_FRACTION, brute_force_mcs, error_free_report
from rsma_mgm.precoding import SolverConfig
from rsma_mgm.schemes import Scheme

FAST = SolverConfig(multistart=("mrt-weakest", "random", "sdma", "noma"))
LEVELS = {"common": [0, 1, 2], "private1": [0, 1, 2], "private2": [0, 1, 2]}


# ---------------------------------------------------------------- seeds

def test_rng_for_reproducible_and_separated():
    a = rng_for(1, 2, 3, "noise").standard_normal(4)
    np.testing.assert_array_equal(a, rng_for(1, 2, 3, "noise").standard_normal(4))
    for other in (rng_for(1, 2, 3, "payload"), rng_for(1, 2, 4, "noise"), rng_for(1, 3, 3, "noise"),
                  rng_for(2, 2, 3, "noise"), rng_for(1, 2, 3, "noise", stream=1)):
        assert not np.array_equal(a, other.standard_normal(4))
    with pytest.raises(ValueError):
        rng_for(1, 1, 1, "bogus")


def test_seed_sequence_entropy():
    ss = seed_sequence(5, 1, 2, "channel", 0)
    assert list(ss.entropy) == [5, 1, 2, zlib.crc32(b"channel"), 0]


# ---------------------------------------------------------------- search with a model runner

def _model_runner(scheme, thresholds, runs, seed):
    """Stream s at level l succeeds always below thresholds[s], with prob 0.9 at it, never above."""
    log = []

    def runner(t, stop):
        counts = CampaignCounts(scheme, t, runs)
        rng = np.random.default_rng([seed] + [(-1 if i is None else i) + 1 for i in t.as_tuple()])
        draws = rng.random((runs, 3))
        for r in range(runs):
            ok = []
            for s, idx in enumerate(t.as_tuple()):
                if idx is None:
                    ok.append(False)
                elif idx < thresholds[s]:
                    ok.append(True)
                elif idx == thresholds[s]:
                    ok.append(draws[r, s] < 0.9)
                else:
                    ok.append(False)
            counts.d_c += ok[0]
            counts.d_1 += ok[1]
            counts.d_2 += ok[2]
            counts.completed = r + 1
            counts.outcomes.append(tuple(ok))
            if r + 1 < runs:
                reason = stop(counts)
                if reason:
                    counts.abandoned = reason
                    break
        log.append(counts)
        return counts
    return runner, log


@pytest.mark.parametrize("thresholds", [(0, 1, 2), (2, 2, 2), (1, 0, 3), (3, 3, 3), (2, 0, 1)])
@pytest.mark.parametrize("scheme", [Scheme.RSMA, Scheme.SDMA, Scheme.NOMA])
def test_pruned_search_matches_exhaustive(scheme, thresholds):
    triples = triples_for_scheme(scheme, LEVELS, 2)
    runs = 60
    run_p, log_p = _model_runner(scheme, thresholds, runs, 7)
    run_x, log_x = _model_runner(scheme, thresholds, runs, 7)
    pruned = search_triples(scheme, triples, runs, run_p, prune=True, probe_runs=20)
    full = search_triples(scheme, triples, runs, run_x, prune=False)
    assert len(log_x) == len(triples)
    assert pruned.best.mcs == full.best.mcs
    assert ranking_key(pruned.best) == ranking_key(full.best)
    assert sum(c.completed for c in log_p) <= sum(c.completed for c in log_x)


def test_search_skips_by_bound():
    triples = triples_for_scheme(Scheme.SDMA, LEVELS)
    runner, log = _model_runner(Scheme.SDMA, (0, 9, 9), 20, 1)
    res = search_triples(Scheme.SDMA, triples, 20, runner)
    assert res.best.mcs == McsTriple(None, 2, 2)
    assert len(log) == 1 and len(res.skipped) == len(triples) - 1


def test_ranking_key_prefers_min_then_sum_then_lower_mcs():
    a = error_free_report(Scheme.SDMA, McsTriple(None, 4, 4), 10)
    b = error_free_report(Scheme.SDMA, McsTriple(None, 4, 5), 10)
    assert ranking_key(b) > ranking_key(a)           # same min, larger sum
    c = ThroughputReport(Scheme.SDMA, McsTriple(None, 5, 5), 10, 0, 10, 8)     # 36 and 28.8
    d = ThroughputReport(Scheme.SDMA, McsTriple(None, 5, 6), 10, 0, 10, 6)     # same throughputs
    assert ranking_key(c) > ranking_key(d)           # tie: lower MCS wins


def test_campaign_counts_reports():
    c = CampaignCounts(Scheme.SDMA, McsTriple(None, 4, 4), 10, 0, 4, 5, completed=5)
    with pytest.raises(CampaignError):
        c.report()
    opt = c.optimistic_report()
    assert (opt.d_1, opt.d_2) == (9, 10)
    assert c.bler[1] == pytest.approx(0.2)


# ---------------------------------------------------------------- campaigns on the simulated link

@pytest.fixture(scope="module")
def case1(nine_cases):
    spec = CampaignSpec(nine_cases[0], runs=3, seed=3, case_index=1, solver=FAST)
    return spec, prepare_case(spec)


def test_easy_triple_always_decodes(case1):
    spec, ctx = case1
    for scheme, t in ((Scheme.RSMA, McsTriple(0, 0, 0)), (Scheme.SDMA, McsTriple(None, 0, 0))):
        c = run_campaign(spec, t, scheme, ctx)
        assert c.counts == (3 if t.common is not None else 0, 3, 3)


def test_absurd_triple_never_decodes(case1):
    spec, ctx = case1
    c = run_campaign(spec, McsTriple(9, 9, 9), Scheme.RSMA, ctx)
    assert c.counts == (0, 0, 0)
    assert c.report().min_throughput == 0.0


def test_campaign_is_reproducible(case1):
    spec, ctx = case1
    a = run_campaign(spec, McsTriple(None, 5, 5), Scheme.SDMA, ctx)
    b = run_campaign(spec, McsTriple(None, 5, 5), Scheme.SDMA, prepare_case(spec))
    assert a.outcomes == b.outcomes


def test_decode_counts_monotone_in_mcs(case1):
    spec, ctx = case1
    d = [run_campaign(spec, McsTriple(None, i, 0), Scheme.SDMA, ctx).d_1 for i in (0, 5, 9)]
    assert d[0] >= d[1] >= d[2]


def test_paired_payloads_across_schemes(case1):
    spec, ctx = case1
    P_r = ctx.solution(Scheme.RSMA).precoders.matrix
    P_s = ctx.solution(Scheme.SDMA).precoders.matrix
    fr = build_run_frame(spec, P_r, McsTriple(3, 4, 5), 2)
    fs = build_run_frame(spec, P_s, McsTriple(None, 4, 5), 2)
    np.testing.assert_array_equal(fr.payloads[1].bits, fs.payloads[1].bits)
    np.testing.assert_array_equal(fr.payloads[2].bits, fs.payloads[2].bits)
    other_run = build_run_frame(spec, P_s, McsTriple(None, 4, 5), 3)
    assert not np.array_equal(other_run.payloads[1].bits, fs.payloads[1].bits)


def test_run_campaign_rejects_wrong_triple(case1):
    spec, ctx = case1
    with pytest.raises(CampaignError):
        run_campaign(spec, McsTriple(1, 1, 1), Scheme.SDMA, ctx)


def test_stop_callback_abandons(case1):
    spec, ctx = case1
    c = run_campaign(spec, McsTriple(None, 0, 0), Scheme.SDMA, ctx, stop=lambda counts: "enough")
    assert c.completed == 1 and c.abandoned == "enough"


def test_brute_force_small_space(nine_cases):
    spec = CampaignSpec(nine_cases[0], runs=2, seed=1, solver=FAST,
                        mcs_search_space={"private1": [0, 9], "private2": [0, 9]})
    res = brute_force_mcs(spec, Scheme.SDMA)
    assert res.best.mcs == McsTriple(None, 0, 0)
    assert res.best.min_throughput == 6e6


def test_idle_common_stream_switched_off(nine_cases):
    # case 3: the designed RSMA precoder puts no power on p_c
    spec = CampaignSpec(nine_cases[2], runs=1, solver=FAST, mcs_search_space={k: [0] for k in LEVELS})
    ctx = prepare_case(spec)
    powers = ctx.solution(Scheme.RSMA).precoders.powers
    assert powers[0] <= IDLE_COMMON_FRACTION * sum(powers)
    res = brute_force_mcs(spec, Scheme.RSMA, ctx)
    assert res.best.mcs == McsTriple(None, 0, 0)


def test_spec_validation(nine_cases):
    with pytest.raises(CampaignError):
        CampaignSpec(nine_cases[0], runs=0)
    with pytest.raises(CampaignError):
        CampaignSpec(nine_cases[0], mcs_search_space={"common": [10]})
    with pytest.raises(CampaignError):
        CampaignSpec(nine_cases[0], mcs_search_space={"extra": [1]})
    with pytest.raises(ValueError):
        CampaignSpec(nine_cases[0], schemes=("OFDMA",))


# ---------------------------------------------------------------- config files

def test_campaign_file_round_trip(nine_cases, tmp_path):
    spec = CampaignSpec(nine_cases[4], runs=7, seed=9, case_index=5, solver=FAST,
                        mcs_search_space={"common": [1, 2]}, phase_error=0.1)
    p = tmp_path / "c.json"
    p.write_text(dumps_campaign(spec))
    assert load_campaign(p) == spec


def test_campaign_scenario_by_reference(nine_cases, tmp_path):
    from rsma_mgm.scenario import save_scenario
    save_scenario(nine_cases[1], tmp_path / "case2.json")
    spec = CampaignSpec(nine_cases[1], case_index=2)
    (tmp_path / "c.json").write_text(dumps_campaign(spec, "case2.json"))
    assert load_campaign(tmp_path / "c.json").scenario == nine_cases[1]


@pytest.mark.parametrize("mutate,match", [
    (lambda d: d.update(color=1), "color: unknown"),
    (lambda d: d["solver"].update(tolerance=1), "solver.tolerance"),
    (lambda d: d["receiver"].update(fps="x", bogus=1), "receiver.bogus"),
    (lambda d: d.update(schema_version=9), "schema_version"),
    (lambda d: d.update(scenario="missing.json"), "file not found"),
    (lambda d: d.update(runs=0), "runs"),
])
def test_campaign_file_errors(nine_cases, mutate, match):
    d = json.loads(dumps_campaign(CampaignSpec(nine_cases[0])))
    mutate(d)
    with pytest.raises(ConfigError, match=match):
        campaign_from_dict(d)


# ---------------------------------------------------------------- reports

def _result(case_index, rsma, sdma, noma, pc=(0.1, 0.05, 0.05)):
    def sr(rep, powers):
        return SchemeResult(rep, powers, {}, "converged", 3, 300)
    return CaseResult(f"case{case_index}", case_index, {"alpha_mean": -1.0, "rho_mean": 0.5}, {
        "RSMA": sr(rsma, pc),
        "SDMA": sr(sdma, (0.0, 0.1, 0.1)),
        "NOMA": sr(noma, (0.15, 0.0, 0.05)),
    })


@pytest.fixture
def results():
    r1 = _result(1, ThroughputReport(Scheme.RSMA, McsTriple(5, 3, 4), 100, 88, 100, 100),
                 ThroughputReport(Scheme.SDMA, McsTriple(None, 4, 4), 100, 0, 100, 100),
                 ThroughputReport(Scheme.NOMA, McsTriple(4, 9, None), 100, 100, 50, 0, noma_common_group=2))
    r2 = _result(2, ThroughputReport(Scheme.RSMA, McsTriple(None, 5, 5), 100, 0, 100, 100),
                 ThroughputReport(Scheme.SDMA, McsTriple(None, 5, 5), 100, 0, 100, 100),
                 ThroughputReport(Scheme.NOMA, McsTriple(4, 5, None), 100, 100, 100, 0), pc=(0.0, 0.1, 0.1))
    return [r2, r1]


def test_results_round_trip_bit_exact(results):
    text = dumps_results(results, {"seed": 1})
    back, meta = results_from_dict(json.loads(text))
    assert meta == {"seed": 1}
    assert dumps_results(back, meta) == text
    for r in back:
        for s in r.schemes.values():
            assert recompute_report(s.report).t_group == s.report.t_group


def test_results_schema_version(results):
    d = json.loads(dumps_results(results))
    d["schema_version"] = 99
    with pytest.raises(ValueError):
        results_from_dict(d)


def test_load_results_missing(tmp_path):
    with pytest.raises(ReportError):
        load_results(tmp_path / "none.json")


def test_report_tables(results):
    scatter = scatter_csv(results).splitlines()
    assert scatter[0] == "case,scheme,min_mbps,sum_mbps"
    assert scatter[1].startswith("1,NOMA,")
    bars = bars_csv(results).splitlines()
    assert len(bars) == 1 + 2 * 3 * 2
    mb = mcs_bler_csv(results).splitlines()
    assert "2,SDMA,--,--,5,0.00,5,0.00" in mb
    line = fairness_line_csv(results).splitlines()
    lo, hi = (tuple(map(float, row.split(","))) for row in line[1:])
    assert lo == (0.0, 0.0) and hi[1] == pytest.approx(2 * hi[0])
    assert "case" in summary_table(results).splitlines()[0]


def test_emit_report_writes_all_files(results, tmp_path):
    written = emit_report(results, tmp_path / "out", {"note": "x"})
    assert set(written) == {"results", "summary", "scatter", "fairness_line", "bars", "mcs_bler"}
    back, meta = load_results(written["results"])
    assert [r.case_index for r in back] == [1, 2] and meta == {"note": "x"}


def test_emit_report_unwritable(results, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ReportError):
        emit_report(results, blocker / "sub")


def test_ordering_summary(results):
    s = ordering_summary(results)
    # case 1: RSMA 33.84 beats 24 / 18; case 2 ties SDMA
    assert s["rsma_wins"] == 2 and s["cases"] == 2
    assert s["sdma_dominated"] == {1: True, 2: False}
    assert s["common_power_fraction"][1] == pytest.approx(0.5)
    assert s["common_power_fraction"][2] == 0.0
