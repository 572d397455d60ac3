"""Monte-Carlo campaigns: one (case, scheme, MCS triple) evaluated over many runs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..allocation import MCS_TABLE, McsTriple, ThroughputReport
from ..phy.channel import RxObservation, apply_channel, awgn, convolve
from ..phy.frame import DEFAULT_FRAME, FrameConfig
from ..phy.receiver import ReceiverConfig, receive_user, stage1_csit
from ..phy.transmitter import ROLES, TxFrame, build_stage1, build_stage2, make_payload
from ..precoding import SolverConfig, SolveResult, rate_report, solve_maxmin
from ..scenario import (ScenarioConfig, UserChannel, WidebandCsit, channel_metrics, design_csit,
                        generate_channels)
from ..schemes import STREAMS, Scheme, active_streams
from .seeds import rng_for

ALL_SCHEMES = (Scheme.RSMA, Scheme.SDMA, Scheme.NOMA)


class CampaignError(ValueError):
    """Invalid campaign specification or scheme/MCS combination."""


@dataclass(frozen=True)
class CampaignSpec:
    """Everything needed to reproduce the campaigns of one case.

    Attributes:
        scenario: Channel scenario of the case.
        schemes: Schemes to evaluate.
        runs: Measurement runs per MCS triple.
        mcs_search_space: Candidate MCS indices per stream name
            (``common``, ``private1``, ``private2``); missing names mean the full table.
        seed: Root seed of all run-level randomness.
        case_index: Case number used to key the random streams.
        per_run_csit: Re-sound and re-solve precoders every run instead of once.
        static_channels: Keep the channel fixed across runs (lab channel); otherwise
            redraw the multipath per run.
        phase_error: Common phase offset (rad) applied to the payload.
        mismatch_aware: Design precoders for noise plus the reported wideband
            mismatch instead of the noise alone.
        solver: Precoder solver settings.
        receiver: Receiver settings.
    """

    scenario: ScenarioConfig
    schemes: tuple = ALL_SCHEMES
    runs: int = 100
    mcs_search_space: dict = field(default_factory=dict)
    seed: int = 0
    case_index: int = 1
    per_run_csit: bool = False
    static_channels: bool = True
    phase_error: float = 0.0
    mismatch_aware: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)
    receiver: ReceiverConfig = field(default_factory=ReceiverConfig)

    def __post_init__(self):
        if self.runs < 1:
            raise CampaignError("runs must be >= 1")
        object.__setattr__(self, "schemes", tuple(Scheme.parse(s) for s in self.schemes))
        if not self.schemes:
            raise CampaignError("at least one scheme is required")
        space = {}
        for name, cand in self.mcs_search_space.items():
            if name not in STREAMS:
                raise CampaignError(f"unknown stream {name!r} in mcs_search_space")
            cand = tuple(sorted({int(i) for i in cand}))
            if not cand:
                raise CampaignError(f"empty MCS candidate set for {name}")
            if any(not 0 <= i < len(MCS_TABLE) for i in cand):
                raise CampaignError(f"MCS candidates for {name} outside the table: {list(cand)}")
            space[name] = cand
        object.__setattr__(self, "mcs_search_space", space)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "schemes": [s.value for s in self.schemes],
            "runs": self.runs,
            "mcs_search_space": {k: sorted(int(i) for i in v) for k, v in sorted(self.mcs_search_space.items())},
            "seed": self.seed,
            "case_index": self.case_index,
            "per_run_csit": self.per_run_csit,
            "static_channels": self.static_channels,
            "phase_error": self.phase_error,
            "mismatch_aware": self.mismatch_aware,
            "solver": {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.solver.__dict__.items()},
            "receiver": dict(self.receiver.__dict__),
        }


@dataclass
class CaseContext:
    """Per-case state shared by all campaigns of that case."""

    spec: CampaignSpec
    channels: tuple
    csit: list
    solutions: dict = field(default_factory=dict)     # Scheme -> SolveResult

    def solution(self, scheme) -> SolveResult:
        scheme = Scheme.parse(scheme)
        if scheme not in self.solutions:
            self.solutions[scheme] = solve_precoders(self.spec, self.csit, scheme)
        return self.solutions[scheme]

    def metrics(self) -> dict:
        return channel_metrics(self.csit)


def solve_precoders(spec: CampaignSpec, csit: Sequence[WidebandCsit], scheme) -> SolveResult:
    """Max-min precoders for the reported CSIT (rates in the result are the design rates)."""
    sc = spec.scenario
    if spec.mismatch_aware:
        return solve_maxmin(design_csit(csit, sc.noise_variance, sc.tx_power), sc.tx_power, 1.0, scheme, spec.solver)
    return solve_maxmin(csit, sc.tx_power, sc.noise_variance, scheme, spec.solver)


def channels_for_run(spec: CampaignSpec, run: int) -> tuple:
    if spec.static_channels:
        return generate_channels(spec.scenario)
    seed = int(rng_for(spec.seed, spec.case_index, run, "channel").integers(2 ** 63))
    return generate_channels(spec.scenario, rng_seed=seed)


def sound_csit(spec: CampaignSpec, channels: Sequence[UserChannel], run: int,
               frame: FrameConfig = DEFAULT_FRAME) -> list[WidebandCsit]:
    """Stage-1 sounding of one run; returns the wideband CSIT fed back by every user."""
    sc = spec.scenario
    s1 = build_stage1(sc.n_tx, sc.tx_power, frame)
    rng = rng_for(spec.seed, spec.case_index, run, "sounding")
    out = []
    for ch in channels:
        y = convolve(ch.taps, s1) + awgn(rng, s1.shape[1], sc.noise_variance)
        obs = RxObservation(ch.group, ch.user, y, np.zeros(0, dtype=complex))
        out.append(stage1_csit(obs, sc.n_tx, sc.tx_power, frame))
    return out


def prepare_case(spec: CampaignSpec, frame: FrameConfig = DEFAULT_FRAME) -> CaseContext:
    channels = channels_for_run(spec, 1)
    return CaseContext(spec, channels, sound_csit(spec, channels, 1, frame))


@dataclass
class CampaignCounts:
    """Raw decode counts of one campaign.

    ``outcomes`` holds one row per completed run: (common ok at all users,
    group-1 private ok at both users, group-2 private ok at both users).
    """

    scheme: Scheme
    mcs: McsTriple
    runs: int
    d_c: int = 0
    d_1: int = 0
    d_2: int = 0
    completed: int = 0
    abandoned: Optional[str] = None
    noma_common_group: int = 2
    outcomes: list = field(default_factory=list)

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.d_c, self.d_1, self.d_2

    def report(self) -> ThroughputReport:
        """Throughputs of a finished campaign (raises if it was cut short)."""
        if self.completed != self.runs:
            raise CampaignError(f"campaign {self.mcs.label()} stopped after {self.completed}/{self.runs} runs")
        return ThroughputReport(self.scheme, self.mcs, self.runs, self.d_c, self.d_1, self.d_2,
                                noma_common_group=self.noma_common_group)

    def optimistic_report(self) -> ThroughputReport:
        """Throughputs if every remaining run succeeded on every stream."""
        left = self.runs - self.completed
        return ThroughputReport(self.scheme, self.mcs, self.runs, self.d_c + left, self.d_1 + left,
                                self.d_2 + left, noma_common_group=self.noma_common_group)

    @property
    def bler(self) -> tuple:
        n = max(self.completed, 1)
        return tuple(None if i is None else 1.0 - d / n for d, i in zip(self.counts, self.mcs.as_tuple()))

    def to_dict(self) -> dict:
        return {"scheme": self.scheme.value, "mcs": list(self.mcs.as_tuple()), "runs": self.runs,
                "d_c": self.d_c, "d_1": self.d_1, "d_2": self.d_2, "completed": self.completed,
                "abandoned": self.abandoned, "noma_common_group": self.noma_common_group}


def _check_triple(scheme: Scheme, triple: McsTriple, ncg: int) -> None:
    try:
        triple.check_scheme(scheme, ncg)
    except ValueError as exc:
        raise CampaignError(str(exc)) from None


def build_run_frame(spec: CampaignSpec, P: np.ndarray, triple: McsTriple, run: int,
                    frame: FrameConfig = DEFAULT_FRAME) -> TxFrame:
    """Transmit frame of one run; each stream draws its bits from its own generator,
    so a stream with the same MCS carries the same bits under every scheme."""
    payloads = tuple(None if idx is None else
                     make_payload(role, idx, rng_for(spec.seed, spec.case_index, run, "payload", s), frame)
                     for s, (role, idx) in enumerate(zip(ROLES, triple.as_tuple())))
    s1 = build_stage1(P.shape[0], spec.scenario.tx_power, frame)
    s2, X = build_stage2(P, payloads, triple, frame)
    return TxFrame(s1, s2, np.asarray(P, dtype=complex), triple, payloads, X)


def run_once(spec: CampaignSpec, ctx: CaseContext, scheme: Scheme, triple: McsTriple, run: int,
             frame: FrameConfig = DEFAULT_FRAME, genie_common: bool = False) -> tuple[bool, bool, bool]:
    """One measurement run; returns (common ok, private-1 ok, private-2 ok) over the relevant users."""
    sc = spec.scenario
    channels = ctx.channels if spec.static_channels else channels_for_run(spec, run)
    if spec.per_run_csit:
        csit = sound_csit(spec, channels, run, frame)
        sol = solve_precoders(spec, csit, scheme)
    else:
        sol = ctx.solution(scheme)
    P = sol.precoders.matrix
    ncg = sol.precoders.noma_common_group or 2
    active = active_streams(scheme, ncg)
    if triple.common is None:
        active = (False,) + active[1:]
    tx = build_run_frame(spec, P, triple, run, frame)
    obs = apply_channel(tx, channels, sc.noise_variance, rng_for(spec.seed, spec.case_index, run, "noise"),
                        phase_error=spec.phase_error, frame=frame)
    rcfg = spec.receiver
    ok_c, ok_p = True, {1: True, 2: True}
    for o in obs:
        res = receive_user(o, triple, rcfg, frame, genie_common=tx.payloads[0] if genie_common else None)
        if active[0]:
            ok_c &= res.common is not None and np.array_equal(res.common, tx.payloads[0].bits)
        if active[o.group]:
            ok_p[o.group] &= res.private is not None and np.array_equal(res.private, tx.payloads[o.group].bits)
    return (ok_c and active[0], ok_p[1] and active[1], ok_p[2] and active[2])


def run_campaign(spec: CampaignSpec, mcs_triple: McsTriple, scheme, ctx: Optional[CaseContext] = None,
                 stop: Optional[Callable[[CampaignCounts], Optional[str]]] = None,
                 frame: FrameConfig = DEFAULT_FRAME, genie_common: bool = False) -> CampaignCounts:
    """Decode counts (D_c, D_1, D_2) of ``mcs_triple`` over ``spec.runs`` runs.

    D_c counts runs in which every user decoded the common message, D_g runs
    in which both group-g users decoded their private message.  ``stop`` is
    called after each run; a non-empty return value abandons the campaign
    and is stored as the reason.
    """
    scheme = Scheme.parse(scheme)
    ctx = ctx or prepare_case(spec, frame)
    ncg = ctx.solution(scheme).precoders.noma_common_group or 2
    _check_triple(scheme, mcs_triple, ncg)
    out = CampaignCounts(scheme, mcs_triple, spec.runs, noma_common_group=ncg)
    for run in range(1, spec.runs + 1):
        c, p1, p2 = run_once(spec, ctx, scheme, mcs_triple, run, frame, genie_common)
        out.d_c += c
        out.d_1 += p1
        out.d_2 += p2
        out.completed = run
        out.outcomes.append((c, p1, p2))
        if stop is not None and run < spec.runs:
            reason = stop(out)
            if reason:
                out.abandoned = reason
                break
    return out


def precoder_power_breakdown(sol: SolveResult) -> list[float]:
    return [float(x) for x in sol.precoders.powers]


def predicted_rates(ctx: CaseContext, scheme) -> dict:
    """Rates of the solved precoders on the raw CSIT with the plain noise variance."""
    sc = ctx.spec.scenario
    return rate_report(ctx.csit, ctx.solution(scheme).precoders, sc.noise_variance).to_dict()
