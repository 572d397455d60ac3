"""Multipath convolution, AWGN and optional common phase error."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .frame import DEFAULT_FRAME, FrameConfig
from .transmitter import TxFrame

if TYPE_CHECKING:
    from ..scenario import UserChannel


@dataclass(frozen=True)
class RxObservation:
    group: int
    user: int
    stage1: np.ndarray
    stage2: np.ndarray
    noise_seed: object = None


def convolve(taps: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Sum over antennas of ``taps[a] * x[a]`` (linear convolution, truncated to ``x``'s length)."""
    n = x.shape[1]
    y = np.zeros(n, dtype=complex)
    for a in range(x.shape[0]):
        for d, g in enumerate(taps[a]):
            if g != 0:
                y[d:] += g * x[a, :n - d]
    return y


def awgn(rng: np.random.Generator, n: int, sigma2: float) -> np.ndarray:
    return np.sqrt(sigma2 / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def payload_phase(n_samples: int, phase: float = 0.0, frame: FrameConfig = DEFAULT_FRAME,
                  drift_per_symbol: float = 0.0) -> np.ndarray:
    """Unit-modulus rotation applied to the payload part of stage 2."""
    rot = np.ones(n_samples, dtype=complex)
    off = frame.payload_offset
    n_pay = n_samples - off
    if phase or drift_per_symbol:
        sym = np.arange(n_pay) // frame.symbol_len
        rot[off:] = np.exp(1j * (phase + drift_per_symbol * sym))
    return rot


def apply_channel(frame_tx: TxFrame, channels: Sequence[UserChannel], sigma2: float,
                  rng: np.random.Generator, phase_error: float = 0.0, drift_per_symbol: float = 0.0,
                  frame: FrameConfig = DEFAULT_FRAME, noise_seed=None) -> list[RxObservation]:
    """Received samples of every user; noise is CN(0, sigma2) per sample (sigma2 = 0 allowed)."""
    if sigma2 < 0:
        raise ValueError("noise variance must be non-negative")
    out = []
    rot = payload_phase(frame_tx.stage2.shape[1], phase_error, frame, drift_per_symbol)
    for ch in channels:
        y1 = convolve(ch.taps, frame_tx.stage1)
        y2 = convolve(ch.taps, frame_tx.stage2) * rot
        if sigma2 > 0:
            y1 = y1 + awgn(rng, y1.size, sigma2)
            y2 = y2 + awgn(rng, y2.size, sigma2)
        out.append(RxObservation(ch.group, ch.user, y1, y2, noise_seed))
    return out


def frequency_equivalent(ch: UserChannel, X: np.ndarray) -> np.ndarray:
    """Noise-free ``h[k]^H x[k]`` for a frequency grid X of shape (n_tx, ..., n_fft)."""
    hH = np.conj(ch.h).T                         # (n_tx, n_fft)
    shape = (hH.shape[0],) + (1,) * (X.ndim - 2) + (hH.shape[1],)
    return (hH.reshape(shape) * X).sum(axis=0)
