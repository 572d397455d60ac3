"""Stream encoding and two-stage frame assembly.

Stage 1 sounds each TX antenna alone (STF + LTF at full power, one antenna
after the other).  Stage 2 carries an STF, three LTFs precoded with
``p_c``, ``p_1``, ``p_2``, one SERVICE symbol and the payload symbols in
which every data subcarrier holds ``p_c s_c + p_1 s_1 + p_2 s_2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from ..allocation import McsLevel, McsTriple, mcs
from ..fec import polar
from .frame import (DEFAULT_FRAME, PILOT_VALUES, FrameConfig, ltf_freq, ofdm_modulate, pilot_precoder_index,
                    stf_freq, training_field)
from .modulation import modulate

ROLES = ("common", "private1", "private2")
SERVICE_MCS = 0
SERVICE_INACTIVE = 0xF
SERVICE_BITS = 16       # 3 x 4-bit MCS index + 4 reserved


@dataclass(frozen=True)
class StreamCode:
    """Polar code and interleaver for one stream at one MCS level."""

    level: McsLevel
    spec: polar.PolarCodeSpec
    n_symbols: int
    n_subcarriers: int

    @property
    def info_bits(self) -> int:
        return self.spec.k

    @property
    def coded_bits(self) -> int:
        return self.spec.n_transmitted

    @property
    def interleaver(self) -> np.ndarray:
        return bit_interleaver(self.coded_bits)


@lru_cache(maxsize=64)
def stream_code(index: int, n_symbols: int = 50, n_subcarriers: int = 48) -> StreamCode:
    level = mcs(index)
    k = level.info_bits(n_symbols, n_subcarriers)
    coded = level.coded_bits(n_symbols, n_subcarriers)
    spec = polar.construct_for_payload(k, coded, polar.design_snr_for_rate(level.r))
    return StreamCode(level, spec, n_symbols, n_subcarriers)


@lru_cache(maxsize=1)
def service_code() -> polar.PolarCodeSpec:
    # one BPSK rate-1/2 symbol: 48 coded bits from a length-64 mother code
    return polar.construct(64, SERVICE_BITS, polar.design_snr_for_rate(mcs(SERVICE_MCS).r), 48)


@lru_cache(maxsize=16)
def bit_interleaver(n: int) -> np.ndarray:
    """Fixed pseudo-random permutation spreading coded bits over subcarriers and bit levels."""
    perm = np.random.Generator(np.random.PCG64(0x5EED + n)).permutation(n)
    perm.setflags(write=False)
    return perm


def encode_bits(code: StreamCode, msg: np.ndarray) -> np.ndarray:
    cw = polar.rate_match(code.spec, polar.encode(code.spec, msg))
    return cw[code.interleaver]


def bits_to_grid(code: StreamCode, coded: np.ndarray) -> np.ndarray:
    """Modulated symbols laid out as (n_symbols, n_subcarriers), subcarrier-major within a symbol."""
    return modulate(coded, code.level.m).reshape(code.n_symbols, code.n_subcarriers)


@dataclass(frozen=True)
class StreamPayload:
    role: str
    mcs: McsLevel
    bits: np.ndarray            # message bits
    symbols: np.ndarray         # (n_symbols, n_data)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown stream role {self.role!r}")


def make_payload(role: str, index: int, rng: np.random.Generator, frame: FrameConfig = DEFAULT_FRAME,
                 bits: Optional[np.ndarray] = None) -> StreamPayload:
    code = stream_code(index, frame.payload_symbols, frame.n_data)
    if bits is None:
        bits = rng.integers(0, 2, code.info_bits, dtype=np.int8)
    bits = np.asarray(bits, dtype=np.int8)
    if bits.size != code.info_bits:
        raise ValueError(f"{role}: expected {code.info_bits} bits for MCS {index}, got {bits.size}")
    return StreamPayload(role, code.level, bits, bits_to_grid(code, encode_bits(code, bits)))


def service_message(triple: McsTriple) -> np.ndarray:
    bits = []
    for idx in triple.as_tuple():
        v = SERVICE_INACTIVE if idx is None else idx
        bits.extend((v >> (3 - b)) & 1 for b in range(4))
    bits.extend([0, 0, 0, 0])
    return np.array(bits, dtype=np.int8)


def parse_service(bits: np.ndarray) -> McsTriple:
    vals = []
    for i in range(3):
        v = int("".join(str(int(b)) for b in bits[4 * i:4 * i + 4]), 2)
        vals.append(None if v == SERVICE_INACTIVE else v)
    return McsTriple(*vals)


def service_symbols(triple: McsTriple) -> np.ndarray:
    spec = service_code()
    cw = polar.rate_match(spec, polar.encode(spec, service_message(triple)))
    return modulate(cw, 1)


def broadcast_precoder(P: np.ndarray) -> np.ndarray:
    """Precoder for fields every user must receive (STF, SERVICE)."""
    return P.sum(axis=1) / math.sqrt(3.0)


@dataclass
class TxFrame:
    stage1: np.ndarray                  # (n_tx, stage1 samples)
    stage2: np.ndarray                  # (n_tx, stage2 samples)
    precoders: np.ndarray               # (n_tx, 3)
    mcs: Optional[McsTriple] = None
    payloads: tuple = ()
    payload_freq: Optional[np.ndarray] = None   # (n_tx, n_symbols, n_fft)
    meta: dict = field(default_factory=dict)


def build_stage1(n_tx: int, tx_power: float, frame: FrameConfig = DEFAULT_FRAME) -> np.ndarray:
    """Per-antenna STF + LTF in disjoint time slots."""
    stf = training_field(stf_freq(frame.n_fft), frame.training_len)
    ltf = training_field(ltf_freq(frame.n_fft), frame.training_len)
    slot = np.concatenate([stf, ltf]) * math.sqrt(tx_power)
    out = np.zeros((n_tx, frame.stage1_len(n_tx)), dtype=complex)
    for a in range(n_tx):
        out[a, a * slot.size:(a + 1) * slot.size] = slot
    return out


def payload_grid(P: np.ndarray, payloads: Sequence[Optional[StreamPayload]],
                 frame: FrameConfig = DEFAULT_FRAME, pilots: bool = True) -> np.ndarray:
    """Frequency-domain payload, shape (n_tx, n_symbols, n_fft)."""
    n_tx = P.shape[0]
    X = np.zeros((n_tx, frame.payload_symbols, frame.n_fft), dtype=complex)
    data = frame.data_bins
    for s, pl in enumerate(payloads):
        if pl is None:
            continue
        if pl.symbols.shape != (frame.payload_symbols, frame.n_data):
            raise ValueError(f"{pl.role}: symbol grid has shape {pl.symbols.shape}")
        X[:, :, data] += P[:, s, None, None] * pl.symbols[None, :, :]
    if pilots:
        pb = frame.pilot_bins
        for t in range(1, frame.payload_symbols + 1):
            X[:, t - 1, pb] = P[:, pilot_precoder_index(t), None] * PILOT_VALUES[None, :]
    return X


def build_stage2(P: np.ndarray, payloads: Sequence[Optional[StreamPayload]], triple: McsTriple,
                 frame: FrameConfig = DEFAULT_FRAME) -> tuple[np.ndarray, np.ndarray]:
    """Stage-2 samples (n_tx, stage2_len) and the payload grid."""
    P = np.asarray(P, dtype=complex)
    if len(payloads) != 3:
        raise ValueError("need one (possibly None) payload per stream")
    for s, (pl, idx) in enumerate(zip(payloads, triple.as_tuple())):
        if (pl is None) != (idx is None):
            raise ValueError(f"stream {ROLES[s]}: payload and MCS triple disagree")
        if pl is not None:
            code = stream_code(idx, frame.payload_symbols, frame.n_data)
            if pl.bits.size != code.info_bits:
                raise ValueError(f"stream {ROLES[s]}: {pl.bits.size} bits, budget is {code.info_bits}")
    n_tx = P.shape[0]
    pb = broadcast_precoder(P)
    stf = training_field(stf_freq(frame.n_fft), frame.training_len)
    ltf = training_field(ltf_freq(frame.n_fft), frame.training_len)
    parts = [pb[:, None] * stf[None, :]]
    for i in range(3):
        parts.append(P[:, i, None] * ltf[None, :])
    svc = np.zeros(frame.n_fft, dtype=complex)
    svc[frame.data_bins] = service_symbols(triple)
    parts.append(pb[:, None] * ofdm_modulate(svc, frame.cp_len)[None, :])
    X = payload_grid(P, payloads, frame)
    parts.append(ofdm_modulate(X, frame.cp_len).reshape(n_tx, -1))
    out = np.concatenate(parts, axis=1)
    assert out.shape[1] == frame.stage2_len
    return out, X


def build_frame(P: np.ndarray, triple: McsTriple, rng: np.random.Generator, tx_power: float,
                frame: FrameConfig = DEFAULT_FRAME) -> TxFrame:
    """Random payloads for the active streams and both stages."""
    payloads = tuple(None if idx is None else make_payload(role, idx, rng, frame)
                     for role, idx in zip(ROLES, triple.as_tuple()))
    s1 = build_stage1(P.shape[0], tx_power, frame)
    s2, X = build_stage2(P, payloads, triple, frame)
    return TxFrame(s1, s2, np.asarray(P, dtype=complex), triple, payloads, X)
