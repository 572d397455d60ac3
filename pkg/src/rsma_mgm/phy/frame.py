"""802.11a/g-style OFDM numerology and training sequences.

Subcarrier indices are FFT bins 0..63; logical index ``k`` in -32..31 maps
to bin ``k % 64``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_FFT = 64
CP_LEN = 16
SAMPLE_RATE = 20e6

# L-LTF values on logical subcarriers -26..26 (DC = 0)
_LTF_LOGICAL = np.array([
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1,
    0,
    1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
], dtype=float)

# L-STF: nonzero on every fourth subcarrier
_STF_LOGICAL = np.sqrt(13 / 6) * np.array([
    0, 0, 1 + 1j, 0, 0, 0, -1 - 1j, 0, 0, 0, 1 + 1j, 0, 0, 0, -1 - 1j, 0, 0, 0, -1 - 1j, 0, 0, 0, 1 + 1j, 0, 0, 0,
    0,
    0, 0, 0, -1 - 1j, 0, 0, 0, -1 - 1j, 0, 0, 0, 1 + 1j, 0, 0, 0, 1 + 1j, 0, 0, 0, 1 + 1j, 0, 0, 0, 1 + 1j, 0, 0,
])

PILOT_LOGICAL = (-21, -7, 7, 21)
# known BPSK values carried by the FPS pilots (before precoding)
PILOT_VALUES = np.array([1.0, 1.0, 1.0, -1.0])


def _bins(logical) -> np.ndarray:
    return np.array([k % N_FFT for k in logical], dtype=int)


def _logical_to_bins(values_m26_26: np.ndarray) -> np.ndarray:
    out = np.zeros(N_FFT, dtype=complex)
    for i, k in enumerate(range(-26, 27)):
        out[k % N_FFT] = values_m26_26[i]
    return out


@dataclass(frozen=True)
class FrameConfig:
    n_fft: int = N_FFT
    cp_len: int = CP_LEN
    payload_symbols: int = 50
    sample_rate: float = SAMPLE_RATE
    data_subcarriers: tuple = field(default_factory=lambda: tuple(
        int(b) for b in _bins([k for k in range(-26, 27) if k != 0 and k not in PILOT_LOGICAL])))
    fps_subcarriers: tuple = field(default_factory=lambda: tuple(int(b) for b in _bins(PILOT_LOGICAL)))
    guard_subcarriers: tuple = field(default_factory=lambda: tuple(
        int(b) for b in _bins([0] + list(range(-32, -26)) + list(range(27, 32)))))

    def __post_init__(self):
        sets = [set(self.data_subcarriers), set(self.fps_subcarriers), set(self.guard_subcarriers)]
        total = sum(len(s) for s in sets)
        union = set().union(*sets)
        if total != len(union):
            raise ValueError("data, FPS and guard subcarrier sets overlap")
        if union != set(range(self.n_fft)):
            raise ValueError("subcarrier sets must cover all FFT bins")
        if self.cp_len < 0 or self.payload_symbols < 1:
            raise ValueError("bad CP length or payload symbol count")

    @property
    def occupied_subcarriers(self) -> np.ndarray:
        return np.array(sorted(self.data_subcarriers + self.fps_subcarriers), dtype=int)

    @property
    def data_bins(self) -> np.ndarray:
        return np.array(self.data_subcarriers, dtype=int)

    @property
    def pilot_bins(self) -> np.ndarray:
        return np.array(self.fps_subcarriers, dtype=int)

    @property
    def n_data(self) -> int:
        return len(self.data_subcarriers)

    @property
    def symbol_len(self) -> int:
        return self.n_fft + self.cp_len

    @property
    def training_len(self) -> int:
        """One STF or LTF field: 8 us."""
        return int(round(8e-6 * self.sample_rate))

    @property
    def stage1_len_per_antenna(self) -> int:
        return 2 * self.training_len

    def stage1_len(self, n_tx: int) -> int:
        return n_tx * self.stage1_len_per_antenna

    @property
    def stage2_preamble_len(self) -> int:
        return 4 * self.training_len   # STF + three precoded LTFs

    @property
    def service_offset(self) -> int:
        return self.stage2_preamble_len

    @property
    def payload_offset(self) -> int:
        return self.stage2_preamble_len + self.symbol_len

    @property
    def stage2_len(self) -> int:
        return self.payload_offset + self.payload_symbols * self.symbol_len

    def ltf_offset(self, i: int) -> int:
        """Start of precoded LTF ``i`` (0 = common, 1 = private 1, 2 = private 2)."""
        return self.training_len * (1 + i)


DEFAULT_FRAME = FrameConfig()


def ltf_freq(n_fft: int = N_FFT) -> np.ndarray:
    if n_fft != N_FFT:
        raise ValueError("training sequences are defined for a 64-point FFT")
    return _logical_to_bins(_LTF_LOGICAL)


def stf_freq(n_fft: int = N_FFT) -> np.ndarray:
    if n_fft != N_FFT:
        raise ValueError("training sequences are defined for a 64-point FFT")
    return _logical_to_bins(_STF_LOGICAL)


def ofdm_modulate(freq: np.ndarray, cp_len: int = CP_LEN) -> np.ndarray:
    """IFFT (unitary) plus cyclic prefix along the last axis."""
    t = np.fft.ifft(freq, axis=-1, norm="ortho")
    if cp_len == 0:
        return t
    return np.concatenate([t[..., -cp_len:], t], axis=-1)


def ofdm_demodulate(samples: np.ndarray, n_fft: int = N_FFT, cp_len: int = CP_LEN) -> np.ndarray:
    """Strip the cyclic prefix and FFT (unitary); ``samples`` is (..., n_sym * (n_fft + cp_len))."""
    sym_len = n_fft + cp_len
    shaped = samples.reshape(samples.shape[:-1] + (-1, sym_len))
    return np.fft.fft(shaped[..., cp_len:], axis=-1, norm="ortho")


def training_field(freq: np.ndarray, length: int = 160) -> np.ndarray:
    """Time-domain STF/LTF field: cyclic extension of one IFFT period to ``length`` samples.

    For the LTF this yields a 32-sample guard followed by two full periods.
    """
    period = np.fft.ifft(freq, norm="ortho")
    n = period.size
    start = (-(length - 2 * n)) % n if length >= 2 * n else 0
    idx = (np.arange(length) + start) % n
    return period[idx]


def ltf_periods(field_samples: np.ndarray, n_fft: int = N_FFT) -> np.ndarray:
    """The two LTF periods (after the guard) of a received 160-sample field, in frequency."""
    guard = field_samples.shape[-1] - 2 * n_fft
    a = field_samples[..., guard:guard + n_fft]
    b = field_samples[..., guard + n_fft:guard + 2 * n_fft]
    return np.stack([np.fft.fft(a, axis=-1, norm="ortho"), np.fft.fft(b, axis=-1, norm="ortho")], axis=-2)


def pilot_precoder_index(t: int) -> int:
    """Stream whose precoder carries the FPS pilots in payload symbol ``t`` (1-indexed).

    Cycles common, private 1, private 2.
    """
    if t < 1:
        raise ValueError("payload symbols are 1-indexed")
    return {1: 0, 2: 1, 0: 2}[t % 3]
