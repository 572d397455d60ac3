"""Gray-labelled square QAM with unit average energy and max-log LLRs.

Bit 0 maps to the positive half of each axis, so BPSK sends +1 for bit 0
and -1 for bit 1, and a positive LLR favours bit 0.  For m >= 2 the first
m/2 bits of a symbol select the in-phase level and the rest the
quadrature level.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

SUPPORTED_ORDERS = (1, 2, 4, 6, 8)


def _check_order(m: int) -> None:
    if m not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported bits per symbol {m}; expected one of {SUPPORTED_ORDERS}")


@lru_cache(maxsize=None)
def pam_levels(bits_per_axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis amplitudes (ascending) and their Gray labels as bit rows (MSB first)."""
    n = 1 << bits_per_axis
    amps = 2.0 * np.arange(n) - (n - 1)
    labels = np.empty((n, bits_per_axis), dtype=np.int8)
    for i in range(n):
        j = n - 1 - i
        g = j ^ (j >> 1)
        labels[i] = [(g >> (bits_per_axis - 1 - b)) & 1 for b in range(bits_per_axis)]
    return amps, labels


def qam_scale(m: int) -> float:
    _check_order(m)
    if m == 1:
        return 1.0
    big_m = 1 << m
    return 1.0 / np.sqrt(2.0 * (big_m - 1) / 3.0)


@lru_cache(maxsize=None)
def constellation(m: int) -> np.ndarray:
    """All 2**m points indexed by the integer whose MSB-first bits label them."""
    _check_order(m)
    pts = np.empty(1 << m, dtype=complex)
    for v in range(1 << m):
        bits = np.array([(v >> (m - 1 - b)) & 1 for b in range(m)], dtype=np.int8)
        pts[v] = modulate(bits, m)[0]
    return pts


def _axis_amplitude(bits: np.ndarray, bits_per_axis: int) -> np.ndarray:
    # bits: (..., bits_per_axis)
    n = 1 << bits_per_axis
    weights = 1 << np.arange(bits_per_axis - 1, -1, -1)
    gray = (bits.astype(np.int64) * weights).sum(axis=-1)
    # invert Gray code
    j = gray.copy()
    shift = gray >> 1
    while np.any(shift):
        j ^= shift
        shift >>= 1
    i = n - 1 - j
    return 2.0 * i - (n - 1)


def modulate(bits, m: int) -> np.ndarray:
    _check_order(m)
    bits = np.asarray(bits, dtype=np.int8)
    if bits.size % m:
        raise ValueError(f"bit count {bits.size} not divisible by {m}")
    if m == 1:
        return (1.0 - 2.0 * bits).astype(complex)
    groups = bits.reshape(-1, m)
    h = m // 2
    re = _axis_amplitude(groups[:, :h], h)
    im = _axis_amplitude(groups[:, h:], h)
    return qam_scale(m) * (re + 1j * im)


def _axis_llr(y: np.ndarray, inv_var: np.ndarray, bits_per_axis: int, scale: float) -> np.ndarray:
    amps, labels = pam_levels(bits_per_axis)
    amps = amps * scale
    d2 = (y[:, None] - amps[None, :]) ** 2            # (N, levels)
    out = np.empty((y.size, bits_per_axis))
    for b in range(bits_per_axis):
        zero = labels[:, b] == 0
        out[:, b] = d2[:, ~zero].min(axis=1) - d2[:, zero].min(axis=1)
    return out * inv_var[:, None]


def demap_llr(symbols, m: int, noise_var) -> np.ndarray:
    """Max-log LLRs (natural log, positive favours 0) for equalised symbols.

    ``noise_var`` is the complex noise variance after equalisation, scalar or
    one value per symbol.
    """
    _check_order(m)
    sym = np.asarray(symbols, dtype=complex)
    var = np.broadcast_to(np.asarray(noise_var, dtype=float), sym.shape).ravel()
    y = sym.ravel()
    if np.any(var <= 0):
        raise ValueError("noise variance must be positive")
    inv = 1.0 / var
    if m == 1:
        return 4.0 * y.real * inv
    h = m // 2
    s = qam_scale(m)
    li = _axis_llr(y.real, inv, h, s)
    lq = _axis_llr(y.imag, inv, h, s)
    return np.concatenate([li, lq], axis=1).ravel()
