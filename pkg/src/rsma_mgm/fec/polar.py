"""Polar code construction, encoding and shortening.

Bit ordering is natural (no bit reversal): the codeword of a length-N
node is ``[x_left ^ x_right, x_right]`` where the halves are the
codewords of the first and second half of ``u``.  The generator matrix is
lower triangular, so freezing the last ``s`` input bits forces the last
``s`` codeword bits to zero; that is how shortening works here.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .crc import CRC_BITS, crc8_attach, crc8_check
from . import scl

SHORTENED_LLR = 1e9
MAX_CHANNEL_LLR = 1e6

# Design Es/N0 (dB, BPSK-equivalent per coded bit) per code rate.
DESIGN_SNR_DB = {
    (1, 2): 1.0,
    (2, 3): 3.0,
    (3, 4): 4.0,
    (5, 6): 5.0,
}


def design_snr_for_rate(r) -> float:
    key = (r.numerator, r.denominator)
    if key not in DESIGN_SNR_DB:
        raise ValueError(f"no design SNR for code rate {r}")
    return DESIGN_SNR_DB[key]


def _phi(x: np.ndarray) -> np.ndarray:
    """Chung's approximation of the Gaussian check-node function."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 10.0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out[small] = np.exp(-0.4527 * np.power(x[small], 0.86) + 0.0218)
        big = x[~small]
        out[~small] = np.sqrt(np.pi / big) * np.exp(-big / 4.0) * (1.0 - 10.0 / (7.0 * big))
    out[np.isinf(x)] = 0.0
    return np.clip(out, 0.0, 1.0)


_PHI_SPLIT = 10.0


def _phi_inv(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    y_split = float(_phi(np.array([_PHI_SPLIT]))[0])
    # closed-form inverse on the small-argument branch
    small = y > y_split
    with np.errstate(divide="ignore", invalid="ignore"):
        out[small] = np.power(np.maximum(0.0218 - np.log(y[small]), 0.0) / 0.4527, 1.0 / 0.86)
    big = ~small
    if np.any(big):
        yb = y[big]
        lo = np.full_like(yb, _PHI_SPLIT)
        hi = np.full_like(yb, 1e4)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            go_right = _phi(mid) > yb     # phi is decreasing
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
        out[big] = 0.5 * (lo + hi)
    out[y <= 0.0] = np.inf
    out[y >= 1.0] = 0.0
    return out


def gaussian_approx_reliabilities(channel_means: np.ndarray) -> np.ndarray:
    """Mean LLR of each synthetic bit channel under the Gaussian approximation.

    ``channel_means`` holds the mean LLR per codeword position (``inf`` for
    known bits).  Returns the means for u-positions 0..N-1.
    """
    mu = np.asarray(channel_means, dtype=float).reshape(1, -1)
    n = mu.shape[1]
    while mu.shape[1] > 1:
        h = mu.shape[1] // 2
        a, b = mu[:, :h], mu[:, h:]
        left = _phi_inv(1.0 - (1.0 - _phi(a)) * (1.0 - _phi(b)))
        right = a + b
        mu = np.stack([left, right], axis=1).reshape(-1, h)
    return mu.reshape(n)


@dataclass(frozen=True)
class PolarCodeSpec:
    n: int
    k: int
    design_param: float
    frozen: np.ndarray          # bool mask over u-positions, True = frozen
    n_transmitted: int          # codeword bits actually sent (n minus shortened)
    crc_bits: int = CRC_BITS

    @property
    def frozen_set(self) -> frozenset:
        return frozenset(np.flatnonzero(self.frozen).tolist())

    @property
    def info_positions(self) -> np.ndarray:
        return np.flatnonzero(~self.frozen)

    @property
    def n_shortened(self) -> int:
        return self.n - self.n_transmitted


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=256)
def _construct_cached(n: int, k: int, design_param: float, n_transmitted: int) -> PolarCodeSpec:
    n_info = k + CRC_BITS
    s = n - n_transmitted
    es_n0 = 10.0 ** (design_param / 10.0)
    means = np.full(n, 4.0 * es_n0)
    means[n_transmitted:] = np.inf
    rel = gaussian_approx_reliabilities(means)
    rel[n_transmitted:] = -np.inf            # shortened u-positions are always frozen
    # stable ordering so ties resolve to the lower index being less reliable
    order = np.lexsort((np.arange(n), rel))
    frozen = np.ones(n, dtype=bool)
    frozen[order[n - n_info:]] = False
    assert frozen[n_transmitted:].all() and s >= 0
    frozen.setflags(write=False)
    return PolarCodeSpec(n, k, design_param, frozen, n_transmitted)


def construct(n: int, k: int, design_param: float, n_transmitted: int | None = None) -> PolarCodeSpec:
    """Build a CRC-aided polar code of length ``n`` carrying ``k`` message bits.

    ``design_param`` is the design Es/N0 in dB.  ``n_transmitted`` (default
    ``n``) shortens the code to that many transmitted bits.
    """
    if not _is_pow2(n):
        raise ValueError(f"polar length {n} is not a power of two")
    if k < 0:
        raise ValueError("k must be non-negative")
    n_transmitted = n if n_transmitted is None else int(n_transmitted)
    if not (n // 2 <= n_transmitted <= n) and n > 1:
        raise ValueError(f"shortened length {n_transmitted} outside [{n // 2}, {n}]")
    if k + CRC_BITS > n_transmitted:
        raise ValueError(f"k={k} plus {CRC_BITS} CRC bits does not fit in {n_transmitted} bits")
    return _construct_cached(int(n), int(k), float(design_param), n_transmitted)


def construct_for_payload(info_bits: int, coded_bits: int, design_param: float) -> PolarCodeSpec:
    """Smallest power-of-two mother code shortened to ``coded_bits``."""
    n = 1
    while n < coded_bits:
        n *= 2
    return construct(n, info_bits, design_param, coded_bits)


def polar_transform(u: np.ndarray) -> np.ndarray:
    """Apply the (involutive) polar transform along the last axis."""
    x = np.array(u, dtype=np.int8, copy=True)
    n = x.shape[-1]
    lead = x.shape[:-1]
    h = 1
    while h < n:
        v = x.reshape(lead + (n // (2 * h), 2, h))
        v[..., 0, :] ^= v[..., 1, :]
        h *= 2
    return x


def encode(spec: PolarCodeSpec, msg_bits) -> np.ndarray:
    """Encode ``k`` message bits; returns the ``n`` bit mother codeword."""
    msg_bits = np.asarray(msg_bits, dtype=np.int8)
    if msg_bits.shape != (spec.k,):
        raise ValueError(f"expected {spec.k} message bits, got {msg_bits.shape}")
    u = np.zeros(spec.n, dtype=np.int8)
    u[spec.info_positions] = crc8_attach(msg_bits)
    return polar_transform(u)


def rate_match(spec: PolarCodeSpec, codeword: np.ndarray, target_bits: int | None = None) -> np.ndarray:
    """Drop the shortened tail of the mother codeword."""
    target = spec.n_transmitted if target_bits is None else target_bits
    if target != spec.n_transmitted:
        raise ValueError(f"code was built for {spec.n_transmitted} transmitted bits, not {target}")
    codeword = np.asarray(codeword)
    if codeword.shape[-1] != spec.n:
        raise ValueError("codeword length does not match the mother code")
    return codeword[..., :target]


def rate_recover(spec: PolarCodeSpec, llrs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rate_match` for LLRs: shortened bits are known zeros."""
    llrs = np.asarray(llrs, dtype=float)
    if llrs.shape[-1] != spec.n_transmitted:
        raise ValueError(f"expected {spec.n_transmitted} LLRs, got {llrs.shape[-1]}")
    out = np.full(llrs.shape[:-1] + (spec.n,), SHORTENED_LLR)
    out[..., :spec.n_transmitted] = llrs
    return out


def decode_scl(spec: PolarCodeSpec, llrs, list_size: int = 2):
    """CRC-aided SCL decoding of a mother-length LLR block.

    Returns the ``k`` message bits of the most likely surviving path whose
    CRC passes, or ``None`` on decode failure.  Positive LLR means bit 0.
    """
    llrs = np.ascontiguousarray(llrs, dtype=np.float64)
    if llrs.shape != (spec.n,):
        raise ValueError(f"expected {spec.n} LLRs, got {llrs.shape}")
    if not np.all(np.isfinite(llrs)):
        raise ValueError("LLRs must be finite")
    codewords, order = scl.scl_decode(llrs, spec.frozen, list_size)
    info = spec.info_positions
    for path in order:
        u = polar_transform(codewords[path])
        word = u[info]
        if crc8_check(word):
            return word[:spec.k].copy()
    return None


def decode_sc(spec: PolarCodeSpec, llrs):
    """Plain successive cancellation (list size 1) with CRC check."""
    return decode_scl(spec, llrs, list_size=1)


def hard_decisions(llrs) -> np.ndarray:
    return (np.asarray(llrs) < 0).astype(np.int8)
