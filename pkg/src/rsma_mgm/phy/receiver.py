"""Per-user receiver: sounding-based CSI, precoded-LTF estimation, FPS tracking and SIC decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..allocation import McsTriple
from ..fec import polar
from ..scenario import WidebandCsit, estimate_csi_ls, wideband_average
from .channel import RxObservation
from .frame import DEFAULT_FRAME, PILOT_VALUES, FrameConfig, ltf_freq, ltf_periods, ofdm_demodulate, pilot_precoder_index
from .modulation import demap_llr
from .transmitter import (StreamPayload, bits_to_grid, encode_bits, parse_service, service_code, stream_code)

_MIN_GAIN = 1e-30
# summed pilot SNR of one symbol needed to trust its phase estimate (about 0.1 rad rms)
FPS_MIN_PILOT_SNR = 50.0


@dataclass(frozen=True)
class ReceiverConfig:
    fps: bool = True
    list_size: int = 2
    sic: bool = True
    use_service: bool = False           # take the MCS triple from the decoded SERVICE symbol
    noma_common_group: Optional[int] = None


@dataclass
class RxResult:
    group: int
    user: int
    common: Optional[np.ndarray]        # decoded common bits; None on failure or when not decoded
    private: Optional[np.ndarray]
    diagnostics: dict = field(default_factory=dict)


def estimate_stage1(stage1: np.ndarray, n_tx: int, tx_power: float,
                    frame: FrameConfig = DEFAULT_FRAME) -> np.ndarray:
    """Per-subcarrier CSI (n_fft, n_tx) in the ``y = h^H x`` convention; zero off the occupied bins."""
    slot = frame.stage1_len_per_antenna
    known = ltf_freq(frame.n_fft) * math.sqrt(tx_power)
    est = np.zeros((frame.n_fft, n_tx), dtype=complex)
    for a in range(n_tx):
        field_ = stage1[a * slot + frame.training_len:(a + 1) * slot]
        Y = ltf_periods(field_, frame.n_fft).mean(axis=0)
        est[:, a] = np.conj(estimate_csi_ls(Y, known))
    return est


def stage1_csit(obs: RxObservation, n_tx: int, tx_power: float, frame: FrameConfig = DEFAULT_FRAME) -> WidebandCsit:
    est = estimate_stage1(obs.stage1, n_tx, tx_power, frame)
    w = wideband_average(est, frame.occupied_subcarriers)
    return WidebandCsit(w.h_hat, obs.group, obs.user, w.spread)


def precoded_estimates(stage2: np.ndarray, frame: FrameConfig = DEFAULT_FRAME):
    """LS estimates of ``h^H p_s`` per bin (3, n_fft) and a noise-variance estimate."""
    known = ltf_freq(frame.n_fft)
    occ = frame.occupied_subcarriers
    est = np.zeros((3, frame.n_fft), dtype=complex)
    diffs = []
    for i in range(3):
        off = frame.ltf_offset(i)
        periods = ltf_periods(stage2[off:off + frame.training_len], frame.n_fft)
        est[i] = estimate_csi_ls(periods.mean(axis=0), known)
        diffs.append(np.abs(periods[0, occ] - periods[1, occ]) ** 2 / 2.0)
    return est, float(np.mean(diffs))


def effective_noise_variance(noise_var, interference_gains=(), residual=None):
    """Noise plus interference power used to scale LLRs.

    With ``residual`` (samples left after removing the wanted signal) the
    measured mean power is returned; otherwise ``noise_var`` plus the sum of
    ``|g|**2`` over the interfering effective channels, per subcarrier.
    """
    if residual is not None:
        r = np.asarray(residual)
        return float(np.mean(np.abs(r) ** 2))
    total = np.asarray(noise_var, dtype=float)
    for g in interference_gains:
        total = total + np.abs(np.asarray(g)) ** 2
    return total


def fps_phases(Y: np.ndarray, est: np.ndarray, noise_var: float, frame: FrameConfig = DEFAULT_FRAME) -> np.ndarray:
    """Common phase of each payload symbol from its FPS pilots.

    Symbols whose pilots ride on a weak (e.g. idle or other-group) precoder
    reuse the last estimate; leading ones take the first usable estimate.
    A precoder is usable when its summed pilot SNR reaches
    ``FPS_MIN_PILOT_SNR``, or when it is the strongest one.
    """
    pb = frame.pilot_bins
    snr = np.sum(np.abs(est[:, pb]) ** 2, axis=1) / noise_var
    usable = (snr >= FPS_MIN_PILOT_SNR) | (snr == snr.max())
    phases = np.zeros(Y.shape[0])
    first = None
    last = 0.0
    for t in range(1, Y.shape[0] + 1):
        k = pilot_precoder_index(t)
        ref = est[k, pb] * PILOT_VALUES
        if usable[k] and snr[k] > 0:
            last = float(np.angle(np.sum(Y[t - 1, pb] * np.conj(ref))))
            if first is None:
                first = t - 1
                phases[:first] = last
        phases[t - 1] = last
    return phases


def _llrs(Y: np.ndarray, e: np.ndarray, nu: np.ndarray, m: int) -> np.ndarray:
    gain = np.abs(e) ** 2
    ok = gain > _MIN_GAIN
    safe = np.where(ok, e, 1.0)
    z = Y / safe[None, :]
    var = np.where(ok, nu / np.where(ok, gain, 1.0), 1.0)
    llr = demap_llr(z, m, np.broadcast_to(var, Y.shape)).reshape(Y.shape[0], Y.shape[1], m)
    llr[:, ~ok, :] = 0.0
    return np.clip(llr.reshape(-1), -polar.MAX_CHANNEL_LLR, polar.MAX_CHANNEL_LLR)


def decode_stream(Y: np.ndarray, e: np.ndarray, nu: np.ndarray, index: int, frame: FrameConfig = DEFAULT_FRAME,
                  list_size: int = 2) -> Optional[np.ndarray]:
    code = stream_code(index, frame.payload_symbols, frame.n_data)
    rx = _llrs(Y, e, nu, code.level.m)
    cw = np.empty_like(rx)
    cw[code.interleaver] = rx
    return polar.decode_scl(code.spec, polar.rate_recover(code.spec, cw), list_size)


def reencode(bits: np.ndarray, index: int, frame: FrameConfig = DEFAULT_FRAME) -> np.ndarray:
    code = stream_code(index, frame.payload_symbols, frame.n_data)
    return bits_to_grid(code, encode_bits(code, bits))


def decode_service(stage2: np.ndarray, est: np.ndarray, noise_var: float,
                   frame: FrameConfig = DEFAULT_FRAME) -> Optional[McsTriple]:
    seg = stage2[frame.service_offset:frame.service_offset + frame.symbol_len]
    Y = ofdm_demodulate(seg, frame.n_fft, frame.cp_len)[0, frame.data_bins]
    e = est.sum(axis=0)[frame.data_bins] / math.sqrt(3.0)
    spec = service_code()
    rx = _llrs(Y[None, :], e, np.full(e.shape, noise_var), 1)
    bits = polar.decode_scl(spec, polar.rate_recover(spec, rx))
    if bits is None:
        return None
    try:
        return parse_service(bits)
    except ValueError:
        return None


def receive_user(obs: RxObservation, triple: Optional[McsTriple], config: ReceiverConfig = ReceiverConfig(),
                 frame: FrameConfig = DEFAULT_FRAME, genie_common: Optional[StreamPayload] = None) -> RxResult:
    """Decode the common stream and then, after SIC, this user's private stream.

    ``genie_common`` replaces the decoded common message by the transmitted
    one when building the SIC signal (reference runs only).
    """
    g = obs.group
    if obs.stage2.shape[-1] != frame.stage2_len:
        raise ValueError(f"stage-2 observation has {obs.stage2.shape[-1]} samples, expected {frame.stage2_len}")
    est, nvar = precoded_estimates(obs.stage2, frame)
    # floor for (near) noiseless links keeps LLRs finite
    nvar = max(nvar, 1e-12 * float(np.mean(np.abs(est) ** 2)), 1e-300)
    diag = {"noise_var": nvar, "sic_applied": False, "common_ok": None, "private_ok": None}
    if config.use_service or triple is None:
        decoded = decode_service(obs.stage2, est, nvar, frame)
        diag["service_ok"] = decoded is not None
        if decoded is None:
            return RxResult(g, obs.user, None, None, diag)
        triple = decoded
    idx = triple.as_tuple()
    active = [i is not None for i in idx]
    est = est * np.array(active, dtype=float)[:, None]

    pay = obs.stage2[frame.payload_offset:]
    Yf = ofdm_demodulate(pay, frame.n_fft, frame.cp_len)
    if config.fps:
        ph = fps_phases(Yf, est, nvar, frame)
        Yf = Yf * np.exp(-1j * ph)[:, None]
        diag["phases"] = ph
    data = frame.data_bins
    Y = Yf[:, data]
    e = est[:, data]
    nu0 = np.full(data.size, nvar)

    common_bits = None
    if active[0]:
        nu = effective_noise_variance(nu0, [e[1], e[2]])
        common_bits = decode_stream(Y, e[0], nu, idx[0], frame, config.list_size)
        diag["common_ok"] = common_bits is not None

    private_bits = None
    if active[g]:
        Yp = Y
        interf = [e[3 - g]]
        sic_bits = genie_common.bits if genie_common is not None else common_bits
        if active[0]:
            if config.sic and sic_bits is not None:
                Yp = Y - e[0][None, :] * reencode(sic_bits, idx[0], frame)
                diag["sic_applied"] = True
            else:
                interf.append(e[0])
        nu = effective_noise_variance(nu0, interf)
        private_bits = decode_stream(Yp, e[g], nu, idx[g], frame, config.list_size)
        diag["private_ok"] = private_bits is not None
    return RxResult(g, obs.user, common_bits, private_bits, diag)
