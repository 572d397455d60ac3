"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``; the slow criteria
(solver, FEC, SIC, FPS and the nine-case campaign) take tens of minutes in total.
"""

import dataclasses
import math
from fractions import Fraction

import numpy as np
import pytest

from rsma_mgm.allocation import (MCS_TABLE, McsTriple, ThroughputReport, allocate_common, effective_bandwidth,
                                 net_rates, stream_throughput, sweep_best_split)
from rsma_mgm.experiment import CampaignSpec, prepare_case, run_campaign, run_cases
from rsma_mgm.experiment.compare import case_specs, ordering_summary
from rsma_mgm.experiment.report import recompute_report
from rsma_mgm.fec import construct, decode_scl, design_snr_for_rate, encode
from rsma_mgm.phy import ReceiverConfig
from rsma_mgm.precoding import group_rates, oracle_objective, solve_maxmin
from rsma_mgm.precoding.rates import scalar_rates
from rsma_mgm.schemes import Scheme

# first-build Monte-Carlo baseline: Eb/N0 at which SCL-2 (512, 256+8) crosses BLER 1e-3
FEC_BASELINE_DB = 3.0
CAMPAIGN_SEED = 7


def verdict(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _channels(rng, n_tx=2):
    return (rng.standard_normal((4, n_tx)) + 1j * rng.standard_normal((4, n_tx))) / math.sqrt(2)


# ---------------------------------------------------------------- 1

def test_criterion_01_mcs_table(capsys):
    rows = [(1, "1/2", 6), (1, "3/4", 9), (2, "1/2", 12), (2, "3/4", 18), (4, "1/2", 24),
            (4, "3/4", 36), (6, "2/3", 48), (6, "3/4", 54), (8, "3/4", 72), (8, "5/6", 80)]
    b = effective_bandwidth(20e6, 64, 16, 48)
    ok = b == 12e6 and len(MCS_TABLE) == 10
    for lvl, (m, r, mbps) in zip(MCS_TABLE, rows):
        ok &= lvl.m == m and lvl.r == Fraction(r) and lvl.data_rate == mbps * 1e6
        ok &= lvl.data_rate == float(Fraction(b) * lvl.m * lvl.r)
    verdict(capsys, 1, ok, f"10 rows match, B = {b / 1e6:g} MHz, index 5 -> {MCS_TABLE[5].data_rate / 1e6:g} Mbps")


# ---------------------------------------------------------------- 2

def test_criterion_02_rate_formulas(capsys):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(1000):
        n_tx = int(rng.integers(1, 5))
        H = _channels(rng, n_tx) * 10 ** rng.uniform(-1, 1)
        P = rng.standard_normal((n_tx, 3)) + 1j * rng.standard_normal((n_tx, 3))
        P *= math.sqrt(rng.uniform(0.01, 10) / np.sum(np.abs(P) ** 2))
        sigma2 = 10 ** rng.uniform(-3, 1)
        got = np.array(group_rates(H, P, sigma2))
        ref = np.array(scalar_rates(list(H), P[:, 0], P[:, 1], P[:, 2], sigma2))
        worst = max(worst, float(np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-300))))
    verdict(capsys, 2, worst <= 1e-12, f"max relative error {worst:.2e} over 1000 instances")


# ---------------------------------------------------------------- 3

def test_criterion_03_solver(capsys):
    rng = np.random.default_rng(3)
    p_t = 1.0
    worst_drop, worst_power, worst_gap = 0.0, 0.0, -np.inf
    for _ in range(100):
        H = _channels(rng)
        sigma2 = 10 ** rng.uniform(-2, 0)
        res = {m: solve_maxmin(H, p_t, sigma2, m) for m in Scheme}
        for r in res.values():
            if len(r.trace) > 1:
                worst_drop = max(worst_drop, float(-np.min(np.diff(r.trace))))
            worst_power = max(worst_power, max(r.power_trace) / p_t - 1.0)
        others = max(res[Scheme.SDMA].objective, res[Scheme.NOMA].objective)
        worst_gap = max(worst_gap, others - res[Scheme.RSMA].objective)
    ok_a, ok_b, ok_c = worst_drop <= 1e-6, worst_power <= 1e-9, worst_gap <= 1e-6

    # (d) SDMA and NOMA against the grid at resolution 32; the RSMA grid is only
    # tractable at resolution 8, so RSMA is held to the best of that grid and the
    # resolution-32 grids of its two special cases
    worst_ratio = np.inf
    for _ in range(20):
        H = _channels(rng)
        sigma2 = 10 ** rng.uniform(-2, 0)
        ref = {m: oracle_objective(H, p_t, sigma2, m, 32) for m in (Scheme.SDMA, Scheme.NOMA)}
        ref[Scheme.RSMA] = max(oracle_objective(H, p_t, sigma2, Scheme.RSMA, 8), *ref.values())
        for m, v in ref.items():
            worst_ratio = min(worst_ratio, solve_maxmin(H, p_t, sigma2, m).objective / v)
    ok_d = worst_ratio >= 0.95
    verdict(capsys, 3, ok_a and ok_b and ok_c and ok_d,
            f"(a) worst trace drop {worst_drop:.1e}  (b) worst power excess {worst_power:.1e}  "
            f"(c) worst SDMA/NOMA excess over RSMA {worst_gap:.1e}  (d) worst solver/oracle {worst_ratio:.4f}")


# ---------------------------------------------------------------- 4

def test_criterion_04_common_split(capsys):
    rng = np.random.default_rng(4)
    worst_sweep, worst_eq = 0.0, 0.0
    for _ in range(10_000):
        r_p1, r_p2, r_c = rng.uniform(0, 8, 3)
        split = allocate_common(r_p1, r_p2, r_c)
        value = min(net_rates(r_p1, r_p2, r_c, split))
        _, sweep_value = sweep_best_split(r_p1, r_p2, r_c, 1000)
        # the sweep can only be worse, by at most one grid step on f1
        worst_sweep = max(worst_sweep, (sweep_value - value), (value - sweep_value) - r_c / 1000)
        if abs(r_p1 - r_p2) <= r_c:
            a, b = net_rates(r_p1, r_p2, r_c, split)
            worst_eq = max(worst_eq, abs(a - b))
    ok = worst_sweep <= 1e-12 and worst_eq <= 1e-9
    verdict(capsys, 4, ok, f"sweep excess {worst_sweep:.1e} (beyond quantization), S1 net-rate gap {worst_eq:.1e}")


# ---------------------------------------------------------------- 5

def _bler(spec, ebn0_db, frames, rng):
    k = spec.k
    sigma = math.sqrt(1.0 / (2.0 * 10 ** (ebn0_db / 10) * k / spec.n))
    fails = 0
    for _ in range(frames):
        msg = rng.integers(0, 2, k).astype(np.int8)
        y = 1.0 - 2.0 * encode(spec, msg) + sigma * rng.standard_normal(spec.n)
        out = decode_scl(spec, 2.0 * y / sigma ** 2, 2)
        fails += out is None or not np.array_equal(out, msg)
    return fails / frames


def test_criterion_05_fec(capsys):
    rng = np.random.default_rng(5)
    spec = construct(512, 256, design_snr_for_rate(Fraction(1, 2)))
    frames = 10_000
    at_target = _bler(spec, 4.5, frames, rng)
    upper = _bler(spec, FEC_BASELINE_DB + 0.5, frames, rng)
    lower = _bler(spec, FEC_BASELINE_DB - 0.5, frames, rng)
    accepts = sum(decode_scl(spec, 2.0 * rng.standard_normal(512), 2) is not None for _ in range(frames))
    ok = at_target < 1e-3 and upper < 1e-3 < lower and accepts / frames < 0.01
    verdict(capsys, 5, ok, f"BLER {at_target:.1e} at 4.5 dB; 1e-3 crossing within +-0.5 dB of {FEC_BASELINE_DB} dB "
            f"(BLER {lower:.1e} / {upper:.1e}); garbage accepted {accepts / frames:.4f}")


# ---------------------------------------------------------------- 6

SMOKE = [McsTriple(0, 0, 0), McsTriple(2, 1, 3), McsTriple(3, 2, 2)]


def _for_scheme(t: McsTriple, scheme: Scheme, ncg: int = 2) -> McsTriple:
    c, p1, p2 = t.as_tuple()
    if scheme is Scheme.SDMA:
        return McsTriple(None, p1, p2)
    if scheme is Scheme.NOMA:
        return McsTriple(c, None, p2) if ncg == 1 else McsTriple(c, p1, None)
    return t


def test_criterion_06_noiseless_identity(nine_cases, capsys):
    sc = dataclasses.replace(nine_cases[0], noise_variance=1e-18)
    spec = CampaignSpec(sc, runs=3, seed=6)
    ctx = prepare_case(spec)
    bad = []
    for scheme in Scheme:
        ncg = ctx.solution(scheme).precoders.noma_common_group or 2
        for t in SMOKE:
            t = _for_scheme(t, scheme, ncg)
            counts = run_campaign(spec, t, scheme, ctx)
            want = tuple(0 if i is None else spec.runs for i in t.as_tuple())
            if counts.counts != want:
                bad.append(f"{scheme.value} {t.label()} {counts.counts}")
    verdict(capsys, 6, not bad, "all users decode every stream" if not bad else "; ".join(bad))


# ---------------------------------------------------------------- 7 and 8

PILOT_TRIPLE = McsTriple(4, 3, 4)


@pytest.fixture(scope="module")
def pilot(nine_cases):
    spec = CampaignSpec(nine_cases[0], runs=1000, seed=11, case_index=1)
    return spec, prepare_case(spec)


def test_criterion_07_sic_vs_genie(pilot, capsys):
    spec, ctx = pilot
    sic = run_campaign(spec, PILOT_TRIPLE, Scheme.RSMA, ctx)
    genie = run_campaign(spec, PILOT_TRIPLE, Scheme.RSMA, ctx, genie_common=True)
    gap = max(abs(sic.bler[g] - genie.bler[g]) for g in (1, 2))
    ok = sic.bler[0] <= 0.05 and gap <= 0.01
    verdict(capsys, 7, ok, f"common BLER {sic.bler[0]:.3f}; private BLER SIC {sic.bler[1]:.3f}/{sic.bler[2]:.3f} "
            f"vs genie {genie.bler[1]:.3f}/{genie.bler[2]:.3f} over {spec.runs} paired frames")


def test_criterion_08_fps(pilot, capsys):
    spec, ctx = pilot
    spec = dataclasses.replace(spec, runs=300)
    ref = run_campaign(spec, PILOT_TRIPLE, Scheme.RSMA, ctx).bler
    shifted = dataclasses.replace(spec, phase_error=0.3)
    on = run_campaign(shifted, PILOT_TRIPLE, Scheme.RSMA, ctx).bler
    off = run_campaign(dataclasses.replace(shifted, receiver=ReceiverConfig(fps=False)),
                       PILOT_TRIPLE, Scheme.RSMA, ctx).bler
    match = max(abs(a - b) for a, b in zip(on, ref))
    # the threshold stream is the one with BLER strictly between 0 and 1 without phase error
    thr = [i for i, b in enumerate(ref) if 0 < b < 1] or [int(np.argmax(ref))]
    degrade = min(off[i] - ref[i] for i in thr)
    ok = match <= 0.01 and degrade >= 0.05
    verdict(capsys, 8, ok, f"BLER no error {_fmt(ref)}, 0.3 rad with FPS {_fmt(on)}, without FPS {_fmt(off)}")


def _fmt(b):
    return "(" + ",".join(f"{x:.3f}" for x in b) + ")"


# ---------------------------------------------------------------- 9 and 10

@pytest.fixture(scope="module")
def campaign(nine_cases):
    return run_cases(case_specs(nine_cases, runs=100, seed=CAMPAIGN_SEED), workers=1)


def test_criterion_09_scheme_ordering(campaign, capsys):
    s = ordering_summary(campaign)
    dominated = [s["sdma_dominated"][i] for i in (1, 4, 7)]
    lines = []
    for r in campaign:
        lines.append(f"case {r.case_index}: " + " ".join(
            f"{k} {v.min_throughput / 1e6:.2f}/{v.sum_throughput / 1e6:.2f}" for k, v in sorted(r.schemes.items())))
    with capsys.disabled():
        print("\n" + "\n".join(lines))
    ok = s["rsma_wins"] >= 8 and all(dominated)
    verdict(capsys, 9, ok, f"RSMA >= max(SDMA, NOMA) in {s['rsma_wins']}/9 cases; "
            f"SDMA strictly dominated in cases 1/4/7: {dominated}")


def test_criterion_10_common_power_trend(campaign, capsys):
    frac = ordering_summary(campaign)["common_power_fraction"]
    trends = []
    for first in (1, 4, 7):
        f = [frac[first + i] for i in range(3)]
        trends.append(f[0] > f[1] > f[2] or (f[0] > f[1] and f[1] == f[2] == 0.0))
    detail = "  ".join(f"{i}:{frac[i]:.3f}" for i in sorted(frac))
    verdict(capsys, 10, all(trends), f"common power fraction {detail}")


# ---------------------------------------------------------------- 11

def test_criterion_11_throughput_arithmetic(capsys):
    worked = stream_throughput(88, 100, MCS_TABLE[5])
    ok = worked == 31.68e6
    rng = np.random.default_rng(11)
    for _ in range(2000):
        scheme = Scheme(rng.choice([s.value for s in Scheme]))
        idx = [int(i) for i in rng.integers(0, 10, 3)]
        if scheme is Scheme.SDMA:
            idx[0] = None
        elif scheme is Scheme.NOMA:
            idx[2] = None
        runs = int(rng.integers(1, 500))
        d = [0 if i is None else int(rng.integers(0, runs + 1)) for i in idx]
        rep = ThroughputReport(scheme, McsTriple(*idx), runs, *d)
        back = recompute_report(ThroughputReport.from_dict(rep.to_dict()))
        ok &= back.t_group == rep.t_group and back.to_dict() == rep.to_dict()
    verdict(capsys, 11, ok, f"0.88 x 36 Mbps = {worked / 1e6:.2f} Mbps; 2000 stored reports recompute bit-exactly")
