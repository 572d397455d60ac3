"""Achievable rates of the two-group multicast downlink from wideband CSIT.

Channels are stacked as a (4, n_tx) array ``H`` in the user order
(1,1), (1,2), (2,1), (2,2); precoders as ``P = [p_c, p_1, p_2]`` with shape
(n_tx, 3).  User ``j`` receives stream ``s`` with gain ``|H[j]^H P[:, s]|**2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..allocation import CommonSplit, maxmin_common_value, net_rates, scheme_split
from ..scenario import USER_ORDER, WidebandCsit
from ..schemes import Scheme

GROUP_USERS = {1: (0, 1), 2: (2, 3)}


@dataclass(frozen=True)
class PrecoderSet:
    p_c: np.ndarray
    p_1: np.ndarray
    p_2: np.ndarray
    mode: Scheme = Scheme.RSMA
    noma_common_group: int = 2

    def __post_init__(self):
        for name in ("p_c", "p_1", "p_2"):
            v = np.array(getattr(self, name), dtype=complex).ravel()
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "mode", Scheme.parse(self.mode))
        if not (self.p_c.size == self.p_1.size == self.p_2.size):
            raise ValueError("precoders must have equal length")
        if self.mode is Scheme.SDMA and np.any(self.p_c):
            raise ValueError("SDMA precoders must have p_c = 0")
        if self.mode is Scheme.NOMA:
            zero = self.p_1 if self.noma_common_group == 1 else self.p_2
            if np.any(zero):
                raise ValueError(f"NOMA precoders must zero the private precoder of group {self.noma_common_group}")

    @classmethod
    def from_matrix(cls, P: np.ndarray, mode=Scheme.RSMA, noma_common_group: int = 2) -> "PrecoderSet":
        P = np.asarray(P, dtype=complex)
        return cls(P[:, 0], P[:, 1], P[:, 2], mode, noma_common_group)

    @property
    def matrix(self) -> np.ndarray:
        return np.stack([self.p_c, self.p_1, self.p_2], axis=1)

    @property
    def powers(self) -> tuple[float, float, float]:
        return tuple(float(np.vdot(p, p).real) for p in (self.p_c, self.p_1, self.p_2))

    @property
    def total_power(self) -> float:
        return float(sum(self.powers))

    def to_dict(self) -> dict:
        def enc(v):
            return [[float(z.real), float(z.imag)] for z in v]
        return {"mode": self.mode.value, "noma_common_group": self.noma_common_group,
                "p_c": enc(self.p_c), "p_1": enc(self.p_1), "p_2": enc(self.p_2)}

    @classmethod
    def from_dict(cls, d: dict) -> "PrecoderSet":
        def dec(v):
            return np.array([complex(re, im) for re, im in v])
        return cls(dec(d["p_c"]), dec(d["p_1"]), dec(d["p_2"]), Scheme.parse(d["mode"]),
                   int(d.get("noma_common_group", 2)))


@dataclass(frozen=True)
class RateReport:
    r_c_group: tuple[float, float]
    r_c: float
    r_p: tuple[float, float]
    r_net: tuple[float, float]
    split: CommonSplit

    @property
    def min_rate(self) -> float:
        return min(self.r_net)

    def to_dict(self) -> dict:
        return {"r_c_group": list(self.r_c_group), "r_c": self.r_c, "r_p": list(self.r_p),
                "r_net": list(self.r_net), "split": [self.split.f1, self.split.f2]}


def stack_csit(csit) -> np.ndarray:
    """(4, n_tx) channel matrix from WidebandCsit objects or an array."""
    if isinstance(csit, np.ndarray):
        H = np.asarray(csit, dtype=complex)
    else:
        items = list(csit)
        if items and isinstance(items[0], WidebandCsit) and items[0].group:
            order = {gu: i for i, gu in enumerate(USER_ORDER)}
            items = sorted(items, key=lambda c: order[(c.group, c.user)])
        H = np.array([np.asarray(c.h_hat if isinstance(c, WidebandCsit) else c, dtype=complex)
                      for c in items])
    if H.ndim != 2 or H.shape[0] != 4:
        raise ValueError(f"expected CSIT for 4 users, got shape {H.shape}")
    return H


def _as_matrix(p) -> np.ndarray:
    return p.matrix if isinstance(p, PrecoderSet) else np.asarray(p, dtype=complex)


def received_gains(H: np.ndarray, P: np.ndarray) -> np.ndarray:
    """(users, 3) matrix of ``|h_j^H p_s|**2``."""
    return np.abs(np.conj(H) @ P) ** 2


def _check_sigma(sigma2: float) -> None:
    if not sigma2 > 0:
        raise ValueError("noise variance must be positive")


def common_rate_users(H, P, sigma2: float) -> np.ndarray:
    _check_sigma(sigma2)
    G = received_gains(H, P)
    return np.log2(1.0 + G[:, 0] / (sigma2 + G[:, 1] + G[:, 2]))


def private_rate_users(H, P, sigma2: float) -> np.ndarray:
    """Each user's rate for its own group's private stream, common stream removed."""
    _check_sigma(sigma2)
    G = received_gains(H, P)
    own = np.array([1, 1, 2, 2])
    other = 3 - own
    rows = np.arange(G.shape[0])
    return np.log2(1.0 + G[rows, own] / (sigma2 + G[rows, other]))


def common_rate_group(csit, p, sigma2: float, g: int) -> float:
    H = stack_csit(csit)
    return float(common_rate_users(H, _as_matrix(p), sigma2)[list(GROUP_USERS[g])].min())


def common_rate(p, csit_all, sigma2: float) -> float:
    H = stack_csit(csit_all)
    return float(common_rate_users(H, _as_matrix(p), sigma2).min())


def private_rate_group(csit, p, sigma2: float, g: int) -> float:
    if g not in (1, 2):
        raise ValueError("group must be 1 or 2")
    H = stack_csit(csit)
    return float(private_rate_users(H, _as_matrix(p), sigma2)[list(GROUP_USERS[g])].min())


def group_rates(H, P, sigma2: float) -> tuple[float, float, float, float]:
    """(R_c1, R_c2, R_p1, R_p2)."""
    rc = common_rate_users(H, P, sigma2)
    rp = private_rate_users(H, P, sigma2)
    return float(rc[:2].min()), float(rc[2:].min()), float(rp[:2].min()), float(rp[2:].min())


def scheme_objective(H, P, sigma2: float, mode, noma_common_group: int = 2) -> float:
    """Max-min net rate of ``P`` under ``mode``'s split rule."""
    rc1, rc2, rp1, rp2 = group_rates(H, P, sigma2)
    rc = min(rc1, rc2)
    mode = Scheme.parse(mode)
    if mode is Scheme.RSMA:
        return maxmin_common_value(rp1, rp2, rc)
    if mode is Scheme.SDMA:
        return min(rp1, rp2)
    other = rp1 if noma_common_group == 2 else rp2
    return min(rc, other)


def rate_report(csit_all, p: PrecoderSet, sigma2: float) -> RateReport:
    H = stack_csit(csit_all)
    rc1, rc2, rp1, rp2 = group_rates(H, p.matrix, sigma2)
    rc = min(rc1, rc2)
    if p.mode is Scheme.SDMA:
        rc = 0.0
    else:
        # the unused private rate is identically zero; keep it exact
        if p.mode is Scheme.NOMA:
            if p.noma_common_group == 1:
                rp1 = 0.0
            else:
                rp2 = 0.0
    split = scheme_split(p.mode, rp1, rp2, rc, p.noma_common_group)
    return RateReport((rc1, rc2), rc, (rp1, rp2), net_rates(rp1, rp2, rc, split), split)


def scalar_rates(channels: Sequence[np.ndarray], p_c, p_1, p_2, sigma2: float):
    """Loop-based reference of the group common/private rates, for cross-checks."""
    def gain(h, p):
        s = 0j
        for a, b in zip(h, p):
            s += a.conjugate() * b
        return s.real ** 2 + s.imag ** 2
    rc, rp = [], []
    for j, h in enumerate(channels):
        g = 1 if j < 2 else 2
        sc, s1, s2 = gain(h, p_c), gain(h, p_1), gain(h, p_2)
        rc.append(np.log2(1 + sc / (sigma2 + s1 + s2)))
        own, oth = (s1, s2) if g == 1 else (s2, s1)
        rp.append(np.log2(1 + own / (sigma2 + oth)))
    return (min(rc[0], rc[1]), min(rc[2], rc[3]), min(rp[0], rp[1]), min(rp[2], rp[3]))
