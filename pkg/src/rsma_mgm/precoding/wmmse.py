"""Max-min fair precoder design by WMMSE-style alternating optimization.

Each outer iteration fixes per-(user, stream) MMSE equalizers ``g`` and
weights ``u = 1/mse`` at the current precoders, which turns every rate into
the concave quadratic lower bound

    (1 + ln u - u * (|g|^2 T(P) - 2 Re(g h^H p_s) + 1)) / ln 2

that is tight at the current point.  The max-min epigraph problem over these
bounds is convex and is solved with SLSQP using analytic gradients.  Because
the bounds are tight before the update and valid after it, the true
objective cannot decrease; a step that would (solver inexactness) is
rejected, so the recorded trace is non-decreasing.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ..allocation import allocate_common
from ..schemes import Scheme
from .rates import PrecoderSet, RateReport, group_rates, rate_report, scheme_objective, stack_csit

LN2 = math.log(2.0)
INIT_STRATEGIES = ("mrt-weakest", "random", "sdma", "noma")
INNER_SOLVERS = ("epigraph-slsqp",)


@dataclass(frozen=True)
class SolverConfig:
    max_outer_iters: int = 500
    convergence_tol: float = 1e-6
    epigraph_tol: float = 1e-9
    patience: int = 3
    multistart: tuple = ("mrt-weakest", "random", "random", "random", "sdma", "noma")
    inner_solver: str = "epigraph-slsqp"
    inner_maxiter: int = 200
    extrapolate_every: int = 10             # exact-rate SLSQP step every k outer iterations; 0 disables
    seed: int = 0
    noma_common_group: int | None = None    # None: try both orderings
    consolidate_tol: float = 1e-7           # RSMA: objective loss allowed when moving private power to p_c

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if not (self.convergence_tol > 0 and self.epigraph_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.inner_solver not in INNER_SOLVERS:
            raise ValueError(f"unknown inner solver {self.inner_solver!r}; expected one of {INNER_SOLVERS}")
        bad = [s for s in self.multistart if s not in INIT_STRATEGIES]
        if bad:
            raise ValueError(f"unknown initialization {bad[0]!r}")
        if self.noma_common_group not in (None, 1, 2):
            raise ValueError("noma_common_group must be 1, 2 or None")
        if self.consolidate_tol < 0:
            raise ValueError("consolidate_tol must be non-negative")


@dataclass
class SolveResult:
    precoders: PrecoderSet
    rates: RateReport
    objective: float
    trace: list
    status: str                       # "converged" or "max_iters"
    start: str = ""
    iterations: int = 0
    power_trace: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def __iter__(self):
        # (PrecoderSet, RateReport, objective_trace)
        return iter((self.precoders, self.rates, self.trace))


def active_columns(mode: Scheme, noma_common_group: int = 2) -> np.ndarray:
    if mode is Scheme.RSMA:
        return np.array([True, True, True])
    if mode is Scheme.SDMA:
        return np.array([False, True, True])
    return np.array([True, noma_common_group != 1, noma_common_group != 2])


def _constraints(mode: Scheme, noma_common_group: int):
    """Rows (user, stream, coefficient on (t, c1, c2)); each row reads ``rate_bound + coef @ (t, c1, c2) >= 0``."""
    rows = []
    group = (1, 1, 2, 2)
    if mode is Scheme.RSMA:
        for j in range(4):
            g = group[j]
            rows.append((j, g, (-1.0, 1.0 if g == 1 else 0.0, 1.0 if g == 2 else 0.0)))
        for j in range(4):
            rows.append((j, 0, (0.0, -1.0, -1.0)))
    elif mode is Scheme.SDMA:
        for j in range(4):
            rows.append((j, group[j], (-1.0, 0.0, 0.0)))
    else:
        other = 3 - noma_common_group
        for j in range(4):
            rows.append((j, 0, (-1.0, 0.0, 0.0)))
        for j in range(4):
            if group[j] == other:
                rows.append((j, other, (-1.0, 0.0, 0.0)))
    users = np.array([r[0] for r in rows])
    streams = np.array([r[1] for r in rows])
    coef = np.array([r[2] for r in rows])
    # streams present in the MSE denominator T of each row
    in_t = np.zeros((len(rows), 3), dtype=bool)
    for i, s in enumerate(streams):
        in_t[i] = (True, True, True) if s == 0 else (False, True, True)
    return users, streams, coef, in_t


def _equalizers(H, P, sigma2, users, streams, in_t):
    A = np.conj(H) @ P                                   # (4, 3) h^H p
    G = np.abs(A) ** 2
    T = sigma2 + (G[users] * in_t).sum(axis=1)
    a = A[users, streams]
    g = np.conj(a) / T
    mse = 1.0 - np.abs(a) ** 2 / T
    u = 1.0 / np.maximum(mse, 1e-300)
    return g, u


class _Epigraph:
    """Convex subproblem in real coordinates ``[Re P_active, Im P_active, t, c1, c2]``."""

    def __init__(self, H, sigma2, p_t, cols, users, streams, coef, in_t, g, u):
        self.H = H
        self.sigma2 = sigma2
        self.p_t = p_t
        self.cols = np.flatnonzero(cols)
        self.n_tx = H.shape[1]
        self.users, self.streams, self.coef, self.in_t = users, streams, coef, in_t
        self.g, self.u = g, u
        self.n_p = self.n_tx * len(self.cols)

    def unpack(self, x):
        z = x[:self.n_p] + 1j * x[self.n_p:2 * self.n_p]
        P = np.zeros((self.n_tx, 3), dtype=complex)
        P[:, self.cols] = z.reshape(len(self.cols), self.n_tx).T
        return P, x[2 * self.n_p:]

    def pack(self, P, tc):
        z = P[:, self.cols].T.ravel()
        return np.concatenate([z.real, z.imag, tc])

    def ineq(self, x):
        # rows scaled by 1/u for conditioning; the feasible set is unchanged
        P, tc = self.unpack(x)
        return (self.rate_bounds(P) + self.coef @ tc) / self.u

    def rate_bounds(self, P):
        A = np.conj(self.H) @ P
        G = np.abs(A) ** 2
        T = self.sigma2 + (G[self.users] * self.in_t).sum(axis=1)
        a = A[self.users, self.streams]
        g, u = self.g, self.u
        mse = np.abs(g) ** 2 * T - 2.0 * np.real(g * a) + 1.0
        return (1.0 + np.log(u) - u * mse) / LN2

    def ineq_jac(self, x):
        P, _ = self.unpack(x)
        A = np.conj(self.H) @ P
        n_rows = self.users.size
        Hr = self.H[self.users]                                  # (rows, n_tx)
        # d(bound)/dp_q in complex form, shape (rows, 3)
        w = -2.0 * self.u[:, None] * np.abs(self.g)[:, None] ** 2 * A[self.users] * self.in_t
        w[np.arange(n_rows), self.streams] += 2.0 * self.u * np.conj(self.g)
        z = (w[:, self.cols][:, :, None] * Hr[:, None, :]).reshape(n_rows, -1) / LN2
        jac = np.empty((n_rows, x.size))
        jac[:, :self.n_p] = z.real
        jac[:, self.n_p:2 * self.n_p] = z.imag
        jac[:, 2 * self.n_p:] = self.coef
        return jac / self.u[:, None]

    def power(self, x):
        z = x[:2 * self.n_p]
        return np.array([self.p_t - z @ z])

    def power_jac(self, x):
        jac = np.zeros((1, x.size))
        jac[0, :2 * self.n_p] = -2.0 * x[:2 * self.n_p]
        return jac


class _ExactEpigraph(_Epigraph):
    """Same epigraph with the exact (non-concave) rates; used for extrapolation steps."""

    def __init__(self, H, sigma2, p_t, cols, users, streams, coef, in_t):
        ones = np.ones(users.size)
        super().__init__(H, sigma2, p_t, cols, users, streams, coef, in_t, ones, ones)

    def rate_bounds(self, P):
        G = np.abs(np.conj(self.H) @ P) ** 2
        T = self.sigma2 + (G[self.users] * self.in_t).sum(axis=1)
        interf = T - G[self.users, self.streams]
        return np.log2(T / interf)

    def ineq_jac(self, x):
        P, _ = self.unpack(x)
        A = np.conj(self.H) @ P
        G = np.abs(A) ** 2
        n_rows = self.users.size
        rows = np.arange(n_rows)
        T = self.sigma2 + (G[self.users] * self.in_t).sum(axis=1)
        interf = T - G[self.users, self.streams]
        in_i = self.in_t.copy()
        in_i[rows, self.streams] = False
        Ar = A[self.users]
        w = 2.0 * Ar * (self.in_t / T[:, None] - in_i / interf[:, None])
        z = (w[:, self.cols][:, :, None] * self.H[self.users][:, None, :]).reshape(n_rows, -1) / LN2
        jac = np.empty((n_rows, x.size))
        jac[:, :self.n_p] = z.real
        jac[:, self.n_p:2 * self.n_p] = z.imag
        jac[:, 2 * self.n_p:] = self.coef
        return jac


def _project_power(P: np.ndarray, p_t: float) -> np.ndarray:
    total = float(np.sum(np.abs(P) ** 2))
    if total > p_t:
        P = P * math.sqrt(p_t / total)
        # guard against rounding leaving the iterate a hair outside the ball
        while np.sum(np.abs(P) ** 2) > p_t:
            P = P * (1.0 - 1e-15)
    return P


def _initial_tc(H, P, sigma2, mode, noma_common_group):
    rc1, rc2, rp1, rp2 = group_rates(H, P, sigma2)
    rc = min(rc1, rc2)
    t = scheme_objective(H, P, sigma2, mode, noma_common_group)
    if mode is Scheme.RSMA:
        split = allocate_common(rp1, rp2, rc)
        return np.array([t, split.f1 * rc, split.f2 * rc])
    return np.array([t, 0.0, 0.0])


def wmmse_iterate(H, P0, p_t, sigma2, mode, cfg: SolverConfig, noma_common_group: int = 2):
    """Run outer iterations from ``P0``; returns (P, trace, power_trace, status, iterations)."""
    cols = active_columns(mode, noma_common_group)
    P = np.where(cols[None, :], P0, 0.0).astype(complex)
    P = _project_power(P, p_t)
    users, streams, coef, in_t = _constraints(mode, noma_common_group)
    obj = scheme_objective(H, P, sigma2, mode, noma_common_group)
    trace = [obj]
    powers = [float(np.sum(np.abs(P) ** 2))]
    small = 0
    status = "max_iters"
    it = 0
    for it in range(1, cfg.max_outer_iters + 1):
        g, u = _equalizers(H, P, sigma2, users, streams, in_t)
        sub = _Epigraph(H, sigma2, p_t, cols, users, streams, coef, in_t, g, u)
        P_new = _slsqp_step(sub, H, P, p_t, sigma2, mode, noma_common_group, cfg.inner_maxiter)
        new_obj = scheme_objective(H, P_new, sigma2, mode, noma_common_group)
        if not np.isfinite(new_obj) or new_obj < obj:
            # inexact inner step; keep the current point
            new_obj, P_new = obj, P
        if cfg.extrapolate_every and it % cfg.extrapolate_every == 0:
            exact = _ExactEpigraph(H, sigma2, p_t, cols, users, streams, coef, in_t)
            P_try = _slsqp_step(exact, H, P_new, p_t, sigma2, mode, noma_common_group, cfg.inner_maxiter)
            try_obj = scheme_objective(H, P_try, sigma2, mode, noma_common_group)
            if np.isfinite(try_obj) and try_obj > new_obj:
                new_obj, P_new = try_obj, P_try
        rel = (new_obj - obj) / max(abs(obj), 1e-12)
        P, obj = P_new, new_obj
        trace.append(obj)
        powers.append(float(np.sum(np.abs(P) ** 2)))
        small = small + 1 if rel < cfg.convergence_tol else 0
        if small >= cfg.patience:
            status = "converged"
            break
    return P, trace, powers, status, it


def _slsqp_step(sub, H, P, p_t, sigma2, mode, noma_common_group, maxiter) -> np.ndarray:
    x0 = sub.pack(P, _initial_tc(H, P, sigma2, mode, noma_common_group))
    # box bounds keep SLSQP's linearized steps from running away
    amp = math.sqrt(p_t)
    r_hi = _rate_ceiling(H, p_t, sigma2)
    c_hi = r_hi if mode is Scheme.RSMA else 0.0
    bounds = [(-amp, amp)] * (2 * sub.n_p) + [(0.0, 2.0 * r_hi), (0.0, c_hi), (0.0, c_hi)]
    x0 = np.clip(x0, [b[0] for b in bounds], [b[1] for b in bounds])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = minimize(lambda x: (-x[2 * sub.n_p], _neg_t_grad(x, sub.n_p)), x0, jac=True,
                       method="SLSQP", bounds=bounds,
                       constraints=[{"type": "ineq", "fun": sub.ineq, "jac": sub.ineq_jac},
                                    {"type": "ineq", "fun": sub.power, "jac": sub.power_jac}],
                       options={"maxiter": maxiter, "ftol": 1e-12})
    P_new, _ = sub.unpack(res.x)
    return _project_power(P_new, p_t)


def _rate_ceiling(H, p_t, sigma2) -> float:
    # single-user rate with all power on the strongest channel
    return float(np.log2(1.0 + p_t * np.max(np.sum(np.abs(H) ** 2, axis=1)) / sigma2)) + 1.0


def _neg_t_grad(x, n_p):
    grad = np.zeros_like(x)
    grad[2 * n_p] = -1.0
    return grad


def _unit(v):
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def initial_point(H, p_t, mode, strategy, rng, noma_common_group=2) -> np.ndarray:
    n_tx = H.shape[1]
    cols = active_columns(mode, noma_common_group)
    P = np.zeros((n_tx, 3), dtype=complex)
    if strategy == "mrt-weakest":
        norms = np.linalg.norm(H, axis=1)
        weakest = int(np.argmin(norms))
        P[:, 0] = _unit(H[weakest])
        for g, users in ((1, (0, 1)), (2, (2, 3))):
            j = users[int(np.argmin(norms[list(users)]))]
            P[:, g] = _unit(H[j])
    elif strategy == "random":
        P = rng.standard_normal((n_tx, 3)) + 1j * rng.standard_normal((n_tx, 3))
    else:
        raise ValueError(f"no direct initial point for {strategy!r}")
    P = np.where(cols[None, :], P, 0.0)
    return P * math.sqrt(p_t / float(np.sum(np.abs(P) ** 2)))


def _best_of(results):
    best = None
    for r in results:
        if best is None or r.objective > best.objective:
            best = r
    return best


def _scaled_private(P: np.ndarray, beta: float) -> np.ndarray:
    """Private precoders scaled by ``beta``; the freed power goes to p_c along its direction."""
    out = P.copy()
    priv = float(np.sum(np.abs(P[:, 1:]) ** 2))
    pc = float(np.sum(np.abs(P[:, 0]) ** 2))
    out[:, 1:] *= beta
    out[:, 0] *= math.sqrt((pc + (1.0 - beta ** 2) * priv) / pc)
    return out


def consolidate_common(H, P, sigma2, tol: float, steps: int = 40) -> tuple[np.ndarray, float]:
    """Shift private power into the common stream while the objective stays within ``tol``.

    Max-min optima are often flat (e.g. aligned groups, where common-only and
    superposed private streams reach the same rate); this picks the
    common-heaviest point of such a flat set.  P is returned unchanged when
    the common precoder is zero or no shift is free.
    """
    obj0 = scheme_objective(H, P, sigma2, Scheme.RSMA, 2)
    if tol <= 0 or float(np.sum(np.abs(P[:, 0]) ** 2)) == 0.0 or not np.any(P[:, 1:]):
        return P, obj0
    floor = obj0 - tol

    def ok(beta):
        return scheme_objective(H, _scaled_private(P, beta), sigma2, Scheme.RSMA, 2) >= floor

    if ok(0.0):
        best = 0.0
    else:
        lo, hi = 0.0, 1.0                  # ok(hi) holds, ok(lo) does not
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            lo, hi = (lo, mid) if ok(mid) else (mid, hi)
        best = hi
    if best >= 1.0:
        return P, obj0
    Q = _scaled_private(P, best)
    return Q, scheme_objective(H, Q, sigma2, Scheme.RSMA, 2)


def canonical_phase(P: np.ndarray, rel_tol: float = 1e-6) -> np.ndarray:
    """Rotate each column so its first significant entry is real and positive.

    Rates do not depend on a per-stream phase, so this only fixes the
    representation: solutions that differ by column phases become identical
    and transmit identical waveforms under paired seeds.
    """
    out = np.array(P, dtype=complex)
    for k in range(out.shape[1]):
        col = out[:, k]
        norm = float(np.linalg.norm(col))
        if norm == 0.0:
            continue
        i = np.flatnonzero(np.abs(col) > rel_tol * norm)[0]
        lead = col[i]
        out[:, k] = col * (np.conj(lead) / abs(lead))
        out[i, k] = abs(lead)
    return out


def _solve_fixed(H, p_t, sigma2, mode, cfg, noma_common_group, warm=()):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(
        [int(cfg.seed), ["RSMA", "SDMA", "NOMA"].index(mode.value), noma_common_group])))
    starts = []
    for s in cfg.multistart:
        if s in ("mrt-weakest", "random"):
            starts.append((s, initial_point(H, p_t, mode, s, rng, noma_common_group)))
    starts.extend(warm)
    results = []
    for name, P0 in starts:
        P, trace, powers, status, it = wmmse_iterate(H, P0, p_t, sigma2, mode, cfg, noma_common_group)
        results.append(SolveResult(PrecoderSet.from_matrix(P, mode, noma_common_group), None,
                                   trace[-1], trace, status, name, it, powers))
    best = _best_of(results)
    if mode is Scheme.RSMA and cfg.consolidate_tol > 0:
        P, obj = consolidate_common(H, best.precoders.matrix, sigma2, cfg.consolidate_tol)
        best.precoders = PrecoderSet.from_matrix(P, mode, noma_common_group)
        best.objective = obj
    best.precoders = PrecoderSet.from_matrix(canonical_phase(best.precoders.matrix), mode, noma_common_group)
    best.rates = rate_report(H, best.precoders, sigma2)
    return best


def solve_maxmin(csit_all, p_t: float, sigma2: float, mode, cfg: SolverConfig | None = None) -> SolveResult:
    """Max-min fair precoders for ``mode``; best over the configured multistarts.

    For RSMA the converged SDMA and NOMA (both orderings) solutions are used
    as warm starts when ``"sdma"``/``"noma"`` appear in ``cfg.multistart``,
    so the RSMA optimum is never below either special case.  Non-convergence
    is reported via ``status``, never raised.
    """
    cfg = cfg or SolverConfig()
    if not (p_t > 0 and sigma2 > 0):
        raise ValueError("power and noise variance must be positive")
    H = stack_csit(csit_all)
    mode = Scheme.parse(mode)
    if mode is Scheme.SDMA:
        return _solve_fixed(H, p_t, sigma2, mode, cfg, 2)
    if mode is Scheme.NOMA:
        groups = (1, 2) if cfg.noma_common_group is None else (cfg.noma_common_group,)
        return _best_of([_solve_fixed(H, p_t, sigma2, mode, cfg, g) for g in groups])
    warm = []
    if "sdma" in cfg.multistart:
        warm.append(("sdma", solve_maxmin(H, p_t, sigma2, Scheme.SDMA, cfg).precoders.matrix))
    if "noma" in cfg.multistart:
        for g in (1, 2):
            sub = SolverConfig(**{**cfg.__dict__, "noma_common_group": g})
            warm.append((f"noma{g}", solve_maxmin(H, p_t, sigma2, Scheme.NOMA, sub).precoders.matrix))
    return _solve_fixed(H, p_t, sigma2, mode, cfg, 2, warm)
