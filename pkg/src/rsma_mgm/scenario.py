"""Synthetic two-group channels, CSI estimation and channel metrics.

Each user sees a line-of-sight ray from every TX antenna (amplitude
``10**(-excess_loss_db/20) / d``, phase ``-2*pi*d/lambda``) plus optional
Rayleigh taps at integer sample delays, drawn independently per user and
antenna.  The downlink model is ``y[k] = h[k]^H x[k] + n[k]``, so the
stored vector ``h[k]`` is the conjugate of the physical frequency
response.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


SCHEMA_VERSION = 1
SPEED_OF_LIGHT = 299_792_458.0
USER_ORDER = ((1, 1), (1, 2), (2, 1), (2, 2))   # (group, user)


class ScenarioError(ValueError):
    """Invalid scenario configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class Geometry:
    tx_positions: tuple          # ((x, y), ...) meters
    user_positions: tuple        # 4 positions ordered as USER_ORDER
    wavelength: float
    excess_loss_db: tuple = (0.0, 0.0, 0.0, 0.0)

    @property
    def aperture(self) -> float:
        pts = np.asarray(self.tx_positions, dtype=float)
        diff = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((diff ** 2).sum(-1)).max())

    @property
    def fraunhofer_distance(self) -> float:
        return 2.0 * self.aperture ** 2 / self.wavelength

    @property
    def tx_center(self) -> np.ndarray:
        return np.asarray(self.tx_positions, dtype=float).mean(axis=0)

    def distances(self) -> np.ndarray:
        """(4 users, n_tx) antenna-to-user distances."""
        tx = np.asarray(self.tx_positions, dtype=float)
        us = np.asarray(self.user_positions, dtype=float)
        return np.sqrt(((us[:, None, :] - tx[None, :, :]) ** 2).sum(-1))


@dataclass(frozen=True)
class Multipath:
    n_taps: int = 0
    tap_powers: tuple = ()       # linear, relative to the user's LOS power
    delay_spread: int = 0        # samples; taps evenly spaced on 1..delay_spread

    def delays(self) -> np.ndarray:
        if self.n_taps == 0:
            return np.zeros(0, dtype=int)
        return np.array([max(1, int(round((i + 1) * self.delay_spread / self.n_taps)))
                         for i in range(self.n_taps)], dtype=int)


def exponential_profile(n_taps: int, total_power: float, delay_spread: int) -> Multipath:
    """Exponentially decaying taps whose powers sum to ``total_power``."""
    if n_taps == 0:
        return Multipath()
    mp = Multipath(n_taps, tuple([1.0] * n_taps), delay_spread)
    d = mp.delays().astype(float)
    w = np.exp(-d / max(delay_spread, 1) * 2.0)
    w = total_power * w / w.sum()
    return Multipath(n_taps, tuple(float(x) for x in w), delay_spread)


@dataclass(frozen=True)
class ScenarioConfig:
    n_tx: int
    n_subcarriers: int
    noise_variance: float
    tx_power: float
    geometry: Geometry
    multipath: Multipath = field(default_factory=Multipath)
    seed: int = 0
    name: str = ""
    n_groups: int = 2
    users_per_group: int = 2
    cp_len: int = 16

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["geometry"] = {
            "tx_positions": [list(p) for p in self.geometry.tx_positions],
            "user_positions": [list(p) for p in self.geometry.user_positions],
            "wavelength": self.geometry.wavelength,
            "excess_loss_db": list(self.geometry.excess_loss_db),
        }
        d["multipath"] = {
            "n_taps": self.multipath.n_taps,
            "tap_powers": list(self.multipath.tap_powers),
            "delay_spread": self.multipath.delay_spread,
        }
        return {"schema_version": SCHEMA_VERSION, **d}


def validate(cfg: ScenarioConfig) -> None:
    if not isinstance(cfg.n_tx, int) or cfg.n_tx < 2:
        raise ScenarioError("n_tx", "need at least 2 transmit antennas")
    n = cfg.n_subcarriers
    if not isinstance(n, int) or n < 1 or n & (n - 1):
        raise ScenarioError("n_subcarriers", "must be a power of two")
    if cfg.n_groups != 2:
        raise ScenarioError("n_groups", "only two groups are supported")
    if cfg.users_per_group != 2:
        raise ScenarioError("users_per_group", "only two users per group are supported")
    if not (cfg.noise_variance > 0 and math.isfinite(cfg.noise_variance)):
        raise ScenarioError("noise_variance", "must be a positive finite power")
    if not (cfg.tx_power > 0 and math.isfinite(cfg.tx_power)):
        raise ScenarioError("tx_power", "must be a positive finite power")
    g = cfg.geometry
    if len(g.tx_positions) != cfg.n_tx:
        raise ScenarioError("geometry.tx_positions", f"expected {cfg.n_tx} antenna positions")
    if len(g.user_positions) != 4:
        raise ScenarioError("geometry.user_positions", "expected 4 user positions")
    if len(g.excess_loss_db) != 4:
        raise ScenarioError("geometry.excess_loss_db", "expected 4 entries")
    dims = {len(p) for p in tuple(g.tx_positions) + tuple(g.user_positions)}
    if len(dims) != 1 or dims.pop() not in (2, 3):
        raise ScenarioError("geometry", "positions must all be 2-D or all 3-D")
    if not g.wavelength > 0:
        raise ScenarioError("geometry.wavelength", "must be positive")
    if any(not math.isfinite(x) or x < 0 for x in g.excess_loss_db):
        raise ScenarioError("geometry.excess_loss_db", "must be finite and non-negative")
    center = g.tx_center
    ff = g.fraunhofer_distance
    for i, p in enumerate(g.user_positions):
        dist = float(np.linalg.norm(np.asarray(p, dtype=float) - center))
        if dist <= ff:
            raise ScenarioError(f"geometry.user_positions[{i}]",
                                f"distance {dist:.3f} m is inside the Fraunhofer distance {ff:.3f} m")
    mp = cfg.multipath
    if mp.n_taps < 0:
        raise ScenarioError("multipath.n_taps", "must be >= 0")
    if len(mp.tap_powers) != mp.n_taps:
        raise ScenarioError("multipath.tap_powers", "length must equal n_taps")
    if any(p <= 0 for p in mp.tap_powers):
        raise ScenarioError("multipath.tap_powers", "powers must be positive")
    if mp.n_taps and not (mp.n_taps <= mp.delay_spread <= cfg.cp_len):
        raise ScenarioError("multipath.delay_spread", "must lie in [n_taps, cp_len] samples")


@dataclass(frozen=True)
class UserChannel:
    group: int
    user: int
    h: np.ndarray                # (n_subcarriers, n_tx): y = h[k]^H x[k]
    taps: np.ndarray             # (n_tx, max_delay + 1) physical impulse response

    def __post_init__(self):
        if not np.all(np.isfinite(self.h)):
            raise ValueError("channel has non-finite entries")
        self.h.setflags(write=False)
        self.taps.setflags(write=False)


@dataclass(frozen=True)
class WidebandCsit:
    h_hat: np.ndarray            # (n_tx,)
    group: int = 0
    user: int = 0
    spread: float = 0.0          # mean ||h[k] - h_hat||^2 over the averaged subcarriers


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def los_gains(geometry: Geometry) -> np.ndarray:
    """(4, n_tx) complex physical LOS gains."""
    d = geometry.distances()
    amp = 10.0 ** (-np.asarray(geometry.excess_loss_db, dtype=float)[:, None] / 20.0) / d
    return amp * np.exp(-2j * np.pi * d / geometry.wavelength)


def frequency_response(taps: np.ndarray, n_subcarriers: int) -> np.ndarray:
    """(n_subcarriers, n_tx) physical response ``G[k] = sum_t g_t exp(-2j pi k t / N)``."""
    return np.fft.fft(taps, n=n_subcarriers, axis=-1).T


def generate_channels(config: ScenarioConfig, rng_seed=None) -> tuple[UserChannel, ...]:
    """Per-subcarrier channels of the four users; deterministic in the seed."""
    validate(config)
    seed = config.seed if rng_seed is None else rng_seed
    rng = _rng(seed)
    los = los_gains(config.geometry)
    mp = config.multipath
    delays = mp.delays()
    max_delay = int(delays.max()) if delays.size else 0
    out = []
    for u, (g, uu) in enumerate(USER_ORDER):
        taps = np.zeros((config.n_tx, max_delay + 1), dtype=complex)
        taps[:, 0] = los[u]
        los_power = float(np.mean(np.abs(los[u]) ** 2))
        for d, p in zip(delays, mp.tap_powers):
            std = math.sqrt(p * los_power / 2.0)
            taps[:, d] += std * (rng.standard_normal(config.n_tx) + 1j * rng.standard_normal(config.n_tx))
        h = np.conj(frequency_response(taps, config.n_subcarriers))
        out.append(UserChannel(g, uu, h, taps))
    return tuple(out)


def estimate_csi_ls(rx_ltf, known_ltf) -> np.ndarray:
    """Least-squares per-subcarrier estimate ``rx / known``.

    Works on any trailing shape; subcarriers where the known symbol is zero
    come back as zero.
    """
    rx = np.asarray(rx_ltf, dtype=complex)
    known = np.asarray(known_ltf, dtype=complex)
    if rx.shape[0] != known.shape[0]:
        raise ValueError(f"LTF length {rx.shape[0]} does not match the {known.shape[0]} subcarriers")
    occupied = known != 0
    if not occupied.any():
        raise ValueError("known LTF has no occupied subcarriers")
    shape = (-1,) + (1,) * (rx.ndim - 1)
    safe = np.where(occupied, known, 1.0).reshape(shape)
    est = rx / safe
    est[~occupied] = 0.0
    return est


def wideband_average(estimates, occupied=None) -> WidebandCsit:
    """Mean of per-subcarrier estimates over the occupied subcarriers."""
    est = np.asarray(estimates, dtype=complex)
    if est.ndim == 1:
        est = est[:, None]
    if occupied is not None:
        est = est[np.asarray(occupied)]
    if est.shape[0] == 0:
        raise ValueError("need at least one subcarrier estimate")
    mean = est.sum(axis=0) / est.shape[0]
    spread = float(np.mean(np.sum(np.abs(est - mean[None, :]) ** 2, axis=1)))
    return WidebandCsit(mean, spread=spread)


def _vec(h) -> np.ndarray:
    return np.asarray(h.h_hat if isinstance(h, WidebandCsit) else h, dtype=complex)


def pathloss_difference_db(h1, h2) -> float:
    """``10*log10(||h2|| / ||h1||)`` for a group-1 user ``h1`` and group-2 user ``h2``."""
    n1 = float(np.linalg.norm(_vec(h1)))
    n2 = float(np.linalg.norm(_vec(h2)))
    if n1 == 0 or n2 == 0:
        raise ValueError("channel norm must be positive")
    return 10.0 * math.log10(n2 / n1)


def spatial_correlation(h1, h2) -> float:
    """``|h1^H h2| / (||h1|| ||h2||)``, in [0, 1]."""
    a, b = _vec(h1), _vec(h2)
    n1 = float(np.linalg.norm(a))
    n2 = float(np.linalg.norm(b))
    if n1 == 0 or n2 == 0:
        raise ValueError("channel norm must be positive")
    return min(1.0, abs(np.vdot(a, b)) / (n1 * n2))


def _default_occupied() -> np.ndarray:
    from .phy.frame import DEFAULT_FRAME
    return DEFAULT_FRAME.occupied_subcarriers


def true_wideband(channels: Sequence[UserChannel], occupied=None) -> list[WidebandCsit]:
    """Noise-free wideband averages (what a perfect Stage 1 would report)."""
    occ = _default_occupied() if occupied is None else occupied
    out = []
    for ch in channels:
        idx = occ if ch.h.shape[0] == 64 else np.arange(ch.h.shape[0])
        w = wideband_average(ch.h, idx)
        out.append(WidebandCsit(w.h_hat, ch.group, ch.user, w.spread))
    return out


def design_csit(csit: Sequence[WidebandCsit], sigma2: float, tx_power: float) -> list[WidebandCsit]:
    """CSIT rescaled so that unit noise stands for noise plus wideband mismatch.

    Each user's vector is divided by ``sqrt(sigma2 + tx_power * spread / n_tx)``,
    the residual a precoder sees when the per-subcarrier channel departs from
    its wideband average.  Rates computed on the result with ``sigma2 = 1``
    are the mismatch-aware rates; alpha/rho must still use the raw CSIT.
    """
    if sigma2 <= 0 or tx_power <= 0:
        raise ValueError("noise variance and power must be positive")
    out = []
    for c in csit:
        h = np.asarray(c.h_hat, dtype=complex)
        scale = math.sqrt(sigma2 + tx_power * c.spread / h.size)
        out.append(WidebandCsit(h / scale, c.group, c.user, c.spread / scale ** 2))
    return out


def channel_metrics(csit: Sequence[WidebandCsit]) -> dict:
    """alpha/rho over the four inter-group pairs, plus the intra-group rho."""
    g1 = [c for c in csit if c.group == 1]
    g2 = [c for c in csit if c.group == 2]
    alphas = [pathloss_difference_db(a, b) for a in g1 for b in g2]
    rhos = [spatial_correlation(a, b) for a in g1 for b in g2]
    intra = [spatial_correlation(g1[0], g1[1]), spatial_correlation(g2[0], g2[1])]
    return {
        "alpha": alphas, "rho": rhos,
        "alpha_mean": float(np.mean(alphas)), "rho_mean": float(np.mean(rhos)),
        "alpha_range": [float(min(alphas)), float(max(alphas))],
        "rho_range": [float(min(rhos)), float(max(rhos))],
        "rho_intra": intra,
    }


# ---------------------------------------------------------------- nine cases

CARRIER_HZ = 2.484e9
WAVELENGTH = SPEED_OF_LIGHT / CARRIER_HZ
ANTENNA_SPACING = 0.13
GROUP1_DISTANCE = 1.00
MEMBER_SPACING = 0.07            # slightly over half a wavelength, along the radial line

# group-2 range per distance class; within each class the first case is the
# most aligned with group 1
CASE_DISTANCES = ((1.17, 1.36, 1.49), (2.00, 2.15, 2.30), (3.20, 3.35, 3.50))
# extra (power) attenuation of the group-2 users per case, dB
CASE_EXCESS_LOSS_DB = ((0.0, 0.4, 0.0), (5.7, 5.6, 5.9), (16.0, 25.5, 24.5))
# sine-of-angle offset of group 2 from boresight; columns are the correlation classes
CASE_SIN_OFFSETS = ((0.133, 0.255, 0.3585), (0.19, 0.255, 0.3585), (0.133, 0.255, 0.3585))


def default_tx_positions(n_tx: int = 2, spacing: float = ANTENNA_SPACING) -> tuple:
    ys = (np.arange(n_tx) - (n_tx - 1) / 2.0) * spacing
    return tuple((0.0, float(y)) for y in ys)


def _polar(distance: float, sin_theta: float) -> np.ndarray:
    cos_t = math.sqrt(1.0 - sin_theta ** 2)
    return np.array([distance * cos_t, distance * sin_theta])


def group_positions(distance: float, sin_theta: float) -> tuple:
    """Two members on the radial line at ``distance`` and ``distance + MEMBER_SPACING``."""
    return (tuple(_polar(distance, sin_theta)), tuple(_polar(distance + MEMBER_SPACING, sin_theta)))


def default_scenario(**overrides) -> ScenarioConfig:
    """Case-1 geometry with the default noise and multipath calibration."""
    g1 = group_positions(GROUP1_DISTANCE, 0.0)
    g2 = group_positions(CASE_DISTANCES[0][0], CASE_SIN_OFFSETS[0][0])
    geom = Geometry(default_tx_positions(), g1 + g2, WAVELENGTH, (0.0, 0.0, 0.0, 0.0))
    base = dict(n_tx=2, n_subcarriers=64, noise_variance=2e-6, tx_power=0.2, geometry=geom,
                multipath=exponential_profile(3, 0.05, 6), seed=2024, name="case1")
    base.update(overrides)
    return ScenarioConfig(**base)


def build_nine_cases(base: ScenarioConfig) -> list[ScenarioConfig]:
    """Nine group-2 placements: distance class (rows) x lateral offset (columns).

    Case ``3*i + j + 1`` puts group 2 at ``CASE_DISTANCES[i][j]`` with angular
    offset ``CASE_SIN_OFFSETS[i][j]``; group 1 stays at 1 m on boresight.
    Seeds are derived from the base seed so each case draws its own multipath.
    """
    validate(base)
    tx = base.geometry.tx_positions
    center = np.asarray(tx, dtype=float).mean(axis=0)
    g1 = tuple(tuple(np.asarray(p) + center) for p in group_positions(GROUP1_DISTANCE, 0.0))
    cases = []
    for i in range(3):
        for j in range(3):
            g2 = tuple(tuple(np.asarray(p) + center)
                       for p in group_positions(CASE_DISTANCES[i][j], CASE_SIN_OFFSETS[i][j]))
            loss = CASE_EXCESS_LOSS_DB[i][j]
            geom = Geometry(tx, g1 + g2, base.geometry.wavelength, (0.0, 0.0, loss, loss))
            number = 3 * i + j + 1
            cases.append(replace(base, geometry=geom, seed=int(base.seed) * 100 + number,
                                 name=f"case{number}"))
    return cases


# ---------------------------------------------------------------- files

_TOP_FIELDS = {"schema_version", "n_tx", "n_subcarriers", "noise_variance", "tx_power", "geometry",
               "multipath", "seed", "name", "n_groups", "users_per_group", "cp_len"}
_GEOM_FIELDS = {"tx_positions", "user_positions", "wavelength", "excess_loss_db"}
_MP_FIELDS = {"n_taps", "tap_powers", "delay_spread"}


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ScenarioError(f"{where}{extra[0]}", "unknown field")


def scenario_from_dict(d: dict) -> ScenarioConfig:
    if not isinstance(d, dict):
        raise ScenarioError("<root>", "scenario must be a JSON object")
    _reject_unknown(d, _TOP_FIELDS, "")
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ScenarioError("schema_version", f"expected {SCHEMA_VERSION}, got {d.get('schema_version')!r}")
    for req in ("n_tx", "n_subcarriers", "noise_variance", "tx_power", "geometry"):
        if req not in d:
            raise ScenarioError(req, "missing")
    gd = d["geometry"]
    _reject_unknown(gd, _GEOM_FIELDS, "geometry.")
    for req in ("tx_positions", "user_positions", "wavelength"):
        if req not in gd:
            raise ScenarioError(f"geometry.{req}", "missing")
    geom = Geometry(tuple(tuple(float(x) for x in p) for p in gd["tx_positions"]),
                    tuple(tuple(float(x) for x in p) for p in gd["user_positions"]),
                    float(gd["wavelength"]),
                    tuple(float(x) for x in gd.get("excess_loss_db", (0.0,) * 4)))
    md = d.get("multipath", {})
    _reject_unknown(md, _MP_FIELDS, "multipath.")
    mp = Multipath(int(md.get("n_taps", 0)), tuple(float(x) for x in md.get("tap_powers", ())),
                   int(md.get("delay_spread", 0)))
    try:
        return ScenarioConfig(
            n_tx=int(d["n_tx"]), n_subcarriers=int(d["n_subcarriers"]),
            noise_variance=float(d["noise_variance"]), tx_power=float(d["tx_power"]),
            geometry=geom, multipath=mp, seed=int(d.get("seed", 0)), name=str(d.get("name", "")),
            n_groups=int(d.get("n_groups", 2)), users_per_group=int(d.get("users_per_group", 2)),
            cp_len=int(d.get("cp_len", 16)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError("<root>", str(exc)) from exc


def dumps_scenario(cfg: ScenarioConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def save_scenario(cfg: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.write_text(dumps_scenario(cfg))
    return path


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(data)


def wideband_csit_set(channels: Sequence[UserChannel], estimates: Optional[Sequence[np.ndarray]] = None,
                      occupied=None) -> list[WidebandCsit]:
    """Wideband CSIT for all users from per-subcarrier estimates (or the true channels)."""
    if estimates is None:
        return true_wideband(channels, occupied)
    occ = _default_occupied() if occupied is None else occupied
    out = []
    for ch, est in zip(channels, estimates):
        w = wideband_average(est, occ)
        out.append(WidebandCsit(w.h_hat, ch.group, ch.user, w.spread))
    return out
