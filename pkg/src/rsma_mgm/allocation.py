"""Common-stream allocation and MCS-limited throughput accounting.

Throughputs are in bits/s, bandwidths in Hz.  The MCS table follows the
802.11g-style set with the data-rate column equal to ``B * m * r`` for the
effective bandwidth ``B`` (12 MHz with the default OFDM numerology).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .schemes import Scheme, active_streams

SPLIT_TOL = 1e-12


def effective_bandwidth(total_bw: float, n_fft: int, cp_len: int, n_data: int) -> float:
    """Bandwidth left for data after CP and pilot/guard overhead.

    ``total_bw * n_fft / (n_fft + cp_len) * n_data / n_fft``.
    """
    if total_bw <= 0 or n_fft <= 0 or cp_len < 0 or n_data <= 0:
        raise ValueError("effective_bandwidth needs positive bandwidth/FFT/data sizes and cp_len >= 0")
    value = Fraction(total_bw) * Fraction(n_fft, n_fft + cp_len) * Fraction(n_data, n_fft)
    return float(value)


DEFAULT_BANDWIDTH = effective_bandwidth(20e6, 64, 16, 48)

_MODULATION_NAMES = {1: "BPSK", 2: "QPSK", 4: "16QAM", 6: "64QAM", 8: "256QAM"}


@dataclass(frozen=True)
class McsLevel:
    index: int
    m: int
    r: Fraction
    bandwidth: float = DEFAULT_BANDWIDTH

    @property
    def modulation(self) -> str:
        return _MODULATION_NAMES[self.m]

    @property
    def data_rate(self) -> float:
        return float(Fraction(self.bandwidth) * self.m * self.r)

    def info_bits(self, n_symbols: int, n_data_subcarriers: int = 48) -> int:
        """Information bits carried by one stream of ``n_symbols`` OFDM symbols."""
        bits = Fraction(n_symbols * n_data_subcarriers * self.m) * self.r
        if bits.denominator != 1:
            raise ValueError(f"MCS {self.index}: payload of {n_symbols} symbols is not an integer bit count")
        return int(bits)

    def coded_bits(self, n_symbols: int, n_data_subcarriers: int = 48) -> int:
        return n_symbols * n_data_subcarriers * self.m


_TABLE_ROWS = [
    (0, 1, Fraction(1, 2)),
    (1, 1, Fraction(3, 4)),
    (2, 2, Fraction(1, 2)),
    (3, 2, Fraction(3, 4)),
    (4, 4, Fraction(1, 2)),
    (5, 4, Fraction(3, 4)),
    (6, 6, Fraction(2, 3)),
    (7, 6, Fraction(3, 4)),
    (8, 8, Fraction(3, 4)),
    (9, 8, Fraction(5, 6)),
]

MCS_TABLE: tuple[McsLevel, ...] = tuple(McsLevel(i, m, r) for i, m, r in _TABLE_ROWS)


def mcs(index: int) -> McsLevel:
    if not 0 <= index < len(MCS_TABLE):
        raise ValueError(f"MCS index {index} outside 0..{len(MCS_TABLE) - 1}")
    return MCS_TABLE[index]


def mcs_table_csv(table: Sequence[McsLevel] = MCS_TABLE) -> str:
    """Render the MCS table as CSV (index, modulation, m, r, data_rate_bps)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "modulation", "m", "r", "data_rate_bps"])
    for lvl in table:
        writer.writerow([lvl.index, lvl.modulation, lvl.m, f"{lvl.r.numerator}/{lvl.r.denominator}",
                         int(Fraction(lvl.bandwidth) * lvl.m * lvl.r)])
    return buf.getvalue()


def load_mcs_table_csv(text: str, bandwidth: float = DEFAULT_BANDWIDTH) -> tuple[McsLevel, ...]:
    rows = list(csv.DictReader(io.StringIO(text)))
    table = []
    for row in rows:
        lvl = McsLevel(int(row["index"]), int(row["m"]), Fraction(row["r"]), bandwidth)
        if lvl.modulation != row["modulation"]:
            raise ValueError(f"row {row['index']}: modulation {row['modulation']} does not match m={lvl.m}")
        if int(row["data_rate_bps"]) != lvl.data_rate:
            raise ValueError(f"row {row['index']}: data rate {row['data_rate_bps']} != B*m*r")
        table.append(lvl)
    return tuple(table)


def write_mcs_table(path: "str | Path") -> Path:
    path = Path(path)
    path.write_text(mcs_table_csv())
    return path


@dataclass(frozen=True)
class McsTriple:
    """MCS indices for (common, private1, private2); ``None`` marks an inactive stream."""

    common: Optional[int]
    private1: Optional[int]
    private2: Optional[int]

    def __post_init__(self):
        for idx in self.as_tuple():
            if idx is not None:
                mcs(idx)

    def as_tuple(self) -> tuple[Optional[int], Optional[int], Optional[int]]:
        return (self.common, self.private1, self.private2)

    def levels(self) -> tuple[Optional[McsLevel], ...]:
        return tuple(None if i is None else mcs(i) for i in self.as_tuple())

    def check_scheme(self, scheme: Scheme, noma_common_group: int = 2) -> None:
        active = active_streams(scheme, noma_common_group)
        for name, on, idx in zip(("common", "private1", "private2"), active, self.as_tuple()):
            if name == "common" and scheme is Scheme.RSMA and idx is None:
                continue                # idle common stream: RSMA reduces to SDMA
            if on and idx is None:
                raise ValueError(f"{scheme.value}: stream {name} is active but has no MCS")
            if not on and idx is not None:
                raise ValueError(f"{scheme.value}: stream {name} is inactive but was given MCS {idx}")

    def label(self) -> str:
        return "(" + ",".join("-" if i is None else str(i) for i in self.as_tuple()) + ")"


@dataclass(frozen=True)
class CommonSplit:
    f1: float
    f2: float

    def __post_init__(self):
        if not (-SPLIT_TOL <= self.f1 <= 1 + SPLIT_TOL and -SPLIT_TOL <= self.f2 <= 1 + SPLIT_TOL):
            raise ValueError(f"split fractions must lie in [0, 1], got ({self.f1}, {self.f2})")
        if abs(self.f1 + self.f2 - 1.0) > SPLIT_TOL:
            raise ValueError(f"split fractions must sum to 1, got {self.f1 + self.f2}")

    def fraction(self, g: int) -> float:
        if g == 1:
            return self.f1
        if g == 2:
            return self.f2
        raise ValueError("group must be 1 or 2")


def allocate_common(r_p1: float, r_p2: float, r_c: float) -> CommonSplit:
    """Split the common stream between the two groups for max-min fairness.

    If the private-rate gap can be closed by the common stream, split it so
    that both net rates are equal; otherwise give all of it to the group with
    the smaller private rate.
    """
    if r_p1 < 0 or r_p2 < 0 or r_c < 0:
        raise ValueError("rates must be non-negative")
    if r_c == 0:
        return CommonSplit(0.5, 0.5)
    if abs(r_p1 - r_p2) <= r_c:
        f1 = (r_c + r_p2 - r_p1) / (2.0 * r_c)
        f1 = min(1.0, max(0.0, f1))
        return CommonSplit(f1, 1.0 - f1)
    if r_p1 < r_p2:
        return CommonSplit(1.0, 0.0)
    return CommonSplit(0.0, 1.0)


def net_rates(r_p1: float, r_p2: float, r_c: float, split: CommonSplit) -> tuple[float, float]:
    # 0 * 0 = 0 convention when the common stream is off
    return (split.f1 * r_c + r_p1, split.f2 * r_c + r_p2)


def maxmin_common_value(r_p1: float, r_p2: float, r_c: float) -> float:
    """Closed form of max over splits of min_g(r_p_g + f_g r_c)."""
    return min(r_p1 + r_c, r_p2 + r_c, 0.5 * (r_c + r_p1 + r_p2))


def scheme_split(scheme: Scheme, r_p1: float, r_p2: float, r_c: float,
                 noma_common_group: int = 2) -> CommonSplit:
    """Common-stream split used by each scheme.

    RSMA applies the S1/S2 rule; NOMA hands the whole common stream to the
    group without a private stream; SDMA has no common stream.
    """
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.RSMA:
        return allocate_common(r_p1, r_p2, r_c)
    if scheme is Scheme.NOMA:
        return CommonSplit(1.0, 0.0) if noma_common_group == 1 else CommonSplit(0.0, 1.0)
    return CommonSplit(0.5, 0.5)


def group_throughput(t_c: float, t_p_g: float, split: CommonSplit, g: int) -> float:
    if t_c < 0 or t_p_g < 0:
        raise ValueError("throughputs must be non-negative")
    return split.fraction(g) * t_c + t_p_g


def stream_throughput(d: int, runs: int, level: Optional[McsLevel], b_eff: float = DEFAULT_BANDWIDTH) -> float:
    """``(d / runs) * B * m * r`` evaluated in exact rationals, rounded once."""
    if runs <= 0:
        raise ValueError("runs must be positive")
    if not 0 <= d <= runs:
        raise ValueError(f"decode count {d} outside [0, {runs}]")
    if level is None:
        return 0.0
    return float(Fraction(d, runs) * Fraction(b_eff) * level.m * level.r)


@dataclass
class ThroughputReport:
    scheme: Scheme
    mcs: McsTriple
    runs: int
    d_c: int
    d_1: int
    d_2: int
    b_eff: float = DEFAULT_BANDWIDTH
    noma_common_group: int = 2
    t_c: float = field(init=False)
    t_p1: float = field(init=False)
    t_p2: float = field(init=False)
    split: CommonSplit = field(init=False)
    t_group: tuple[float, float] = field(init=False)

    def __post_init__(self):
        self.scheme = Scheme.parse(self.scheme)
        lc, l1, l2 = self.mcs.levels()
        self.t_c = stream_throughput(self.d_c, self.runs, lc, self.b_eff)
        self.t_p1 = stream_throughput(self.d_1, self.runs, l1, self.b_eff)
        self.t_p2 = stream_throughput(self.d_2, self.runs, l2, self.b_eff)
        self.split = scheme_split(self.scheme, self.t_p1, self.t_p2, self.t_c, self.noma_common_group)
        self.t_group = (group_throughput(self.t_c, self.t_p1, self.split, 1),
                        group_throughput(self.t_c, self.t_p2, self.split, 2))

    @property
    def bler(self) -> tuple[Optional[float], Optional[float], Optional[float]]:
        out = []
        for d, idx in zip((self.d_c, self.d_1, self.d_2), self.mcs.as_tuple()):
            out.append(None if idx is None else 1.0 - d / self.runs)
        return tuple(out)

    @property
    def min_throughput(self) -> float:
        return min(self.t_group)

    @property
    def sum_throughput(self) -> float:
        return self.t_group[0] + self.t_group[1]

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "mcs": list(self.mcs.as_tuple()),
            "runs": self.runs,
            "d_c": self.d_c,
            "d_1": self.d_1,
            "d_2": self.d_2,
            "b_eff": self.b_eff,
            "noma_common_group": self.noma_common_group,
            "t_c": self.t_c,
            "t_p1": self.t_p1,
            "t_p2": self.t_p2,
            "split": [self.split.f1, self.split.f2],
            "t_group": list(self.t_group),
            "bler": list(self.bler),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThroughputReport":
        """Rebuild from raw counts; derived fields are recomputed, not trusted."""
        return cls(Scheme.parse(d["scheme"]), McsTriple(*d["mcs"]), int(d["runs"]),
                   int(d["d_c"]), int(d["d_1"]), int(d["d_2"]), float(d["b_eff"]),
                   int(d.get("noma_common_group", 2)))


def empirical_throughputs(d_c: int, d_1: int, d_2: int, runs: int, mcs_triple: McsTriple,
                          b_eff: float = DEFAULT_BANDWIDTH, scheme: Scheme = Scheme.RSMA,
                          noma_common_group: int = 2) -> ThroughputReport:
    return ThroughputReport(scheme, mcs_triple, runs, d_c, d_1, d_2, b_eff, noma_common_group)


def sweep_best_split(r_p1: float, r_p2: float, r_c: float, points: int = 1000) -> tuple[float, float]:
    """Brute-force max over a uniform grid of f1; returns (f1, value)."""
    best_f, best_v = 0.0, -1.0
    for i in range(points + 1):
        f1 = i / points
        v = min(r_p1 + f1 * r_c, r_p2 + (1 - f1) * r_c)
        if v > best_v:
            best_f, best_v = f1, v
    return best_f, best_v


def triples_for_scheme(scheme: Scheme, candidates: "dict[str, Iterable[int]] | None" = None,
                       noma_common_group: int = 2) -> list[McsTriple]:
    """All MCS triples valid for ``scheme`` over the per-stream candidate sets."""
    full = list(range(len(MCS_TABLE)))
    candidates = candidates or {}
    active = active_streams(scheme, noma_common_group)
    axes = []
    for name, on in zip(("common", "private1", "private2"), active):
        axes.append(sorted(set(candidates.get(name, full))) if on else [None])
    return [McsTriple(c, p1, p2) for c in axes[0] for p1 in axes[1] for p2 in axes[2]]
