"""Downlink precoding: null-space projection toward the protected small
cells concatenated with regularized zero-forcing (or plain zero-forcing),
the asymptotic power closed forms, feasibility walls, the space-time-coding
fallback for very fast users, and the instantaneous (finite-size) path used
by Monte-Carlo validation.

Asymptotics are parameterized by one scalar mu (the deterministic equivalent
of the normalized regularized-resolvent trace), the positive root of
``rho*mu^2 + (c + rho - (1-c_S))*mu - (1-c_S) = 0``. At the power-optimal
regularizer ``rho* = (1-c_S)/gamma_avg - c/(1+gamma_avg)`` it equals the
mean SINR target, which collapses the total-power expression to
``P = c*sigma^2*A / (rho* gamma_avg - c*B)`` with the two target aggregates

  A = (1/K) sum_k gamma_k / ((1-tau_k^2) l_k)      (noise-side load)
  B = (1/K) sum_k gamma_k tau_k^2 / (1-tau_k^2)    (CSI-error self-interference)
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

ZF_CONDITION_WARN = 1e10


@dataclass
class DlTargets:
    """Downlink targets of the served set plus the nulling dimension count."""

    gamma: np.ndarray        # (K,) SINR targets (macro users first)
    tau_sq: np.ndarray       # (K,) CSI error power, zero for small cells
    gain: np.ndarray         # (K,) BS -> device pathloss gain
    n_macro: int
    n_antennas: int
    n_nulled: int            # protected small cells the precoder stays orthogonal to
    noise_w: float

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.tau_sq = np.asarray(self.tau_sq, dtype=float)
        self.gain = np.asarray(self.gain, dtype=float)

    @property
    def n_served(self) -> int:
        return len(self.gamma)

    @property
    def load_ratio(self) -> float:
        return self.n_served / self.n_antennas

    @property
    def nulling_ratio(self) -> float:
        return self.n_nulled / self.n_antennas

    @property
    def load_a(self) -> float:
        return float(np.mean(self.gamma / ((1.0 - self.tau_sq) * self.gain)))

    @property
    def load_b(self) -> float:
        return float(np.mean(self.gamma * self.tau_sq / (1.0 - self.tau_sq)))

    @property
    def gamma_avg(self) -> float:
        return float(np.mean(self.gamma))

    @property
    def gamma_avg_macro(self) -> float:
        """Macro targets summed over the macro set, normalized by the full count."""
        return float(self.gamma[:self.n_macro].sum() / self.n_served)


@dataclass
class DlSolution:
    scheme: str              # "rzf" | "zf" | "stc"
    rho: float
    mu: float
    total_power_w: float
    powers: np.ndarray       # (K,) per-device power loadings, Watt
    feasible: bool
    tau_max: float
    diagnostics: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# instantaneous precoders
# --------------------------------------------------------------------------

def projector(h_nulled: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the complement of the protected cells'
    channel span: T = I - H (H^H H)^(-1) H^H. Hermitian, idempotent,
    rank N - S."""
    n, s = h_nulled.shape
    if s == 0:
        return np.eye(n, dtype=complex)
    if s >= n:
        raise np.linalg.LinAlgError(f"cannot null {s} cells with {n} antennas")
    q, r = np.linalg.qr(h_nulled)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-12 * diag.max():
        raise np.linalg.LinAlgError(
            "protected-cell channel matrix is rank deficient; nulling undefined")
    return np.eye(n, dtype=complex) - q @ q.conj().T


def apply_projector(h_nulled: np.ndarray, x: np.ndarray) -> np.ndarray:
    """T @ x without forming T (QR route)."""
    if h_nulled.shape[1] == 0:
        return x
    q, _ = np.linalg.qr(h_nulled)
    return x - q @ (q.conj().T @ x)


def rzf_precoder(h_est: np.ndarray, gains: np.ndarray, t_proj: np.ndarray,
                 rho: float) -> np.ndarray:
    """Concatenated regularized ZF: project the estimates, regularize with
    rho scaled by the antenna count, weight by the average channel gains.

    V = T (U diag(1/l) U^H + N rho I)^(-1) U  with  U = T @ h_est.
    """
    if rho <= 0:
        raise ValueError(f"regularizer must be positive, got {rho}")
    n = h_est.shape[0]
    u = t_proj @ h_est
    gram = (u / np.asarray(gains)[None, :]) @ u.conj().T
    gram += n * rho * np.eye(n)
    try:
        f = np.linalg.solve(gram, u)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"regularized solve failed: {exc}") from exc
    return t_proj @ f


def zf_precoder(h_est: np.ndarray, t_proj: np.ndarray) -> np.ndarray:
    """Concatenated ZF: V = T H (H^H T H)^(-1); satisfies H^H V = I exactly.

    Near the dimension limit (served + nulled close to the antenna count) the
    inner Gram becomes ill conditioned; a warning is emitted past 1e10 but the
    precoder is still returned.
    """
    u = t_proj @ h_est
    gram = h_est.conj().T @ u
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond):
        raise np.linalg.LinAlgError("zero-forcing Gram matrix is singular")
    if cond > ZF_CONDITION_WARN:
        warnings.warn(f"zero-forcing Gram condition number {cond:.3e}; "
                      "served + nulled count is close to the antenna count",
                      RuntimeWarning, stacklevel=2)
    return u @ np.linalg.inv(gram)


def instantaneous_dl_sinr(h_true: np.ndarray, v: np.ndarray, powers: np.ndarray,
                          noise_w: float) -> tuple[np.ndarray, float]:
    """Per-device downlink SINR of one realization plus the radiated power.

    SINR_k = p_k |h_k^H v_k|^2 / (sum_{i != k} p_i |h_k^H v_i|^2 + noise);
    total power = sum_k p_k ||v_k||^2.
    """
    cross = h_true.conj().T @ v            # (K, K): receiver k, stream i
    p = np.asarray(powers, dtype=float)
    sig = p * np.abs(np.diag(cross)) ** 2
    tot = (np.abs(cross) ** 2) @ p
    sinr = sig / (tot - sig + noise_w)
    radiated = float(p @ (np.abs(v) ** 2).sum(axis=0))
    return sinr, radiated


def nulling_residual(h_nulled: np.ndarray, v: np.ndarray) -> float:
    """Largest leakage toward a protected cell, normalized by the precoder scale."""
    if h_nulled.shape[1] == 0:
        return 0.0
    leak = np.abs(h_nulled.conj().T @ v)
    return float(leak.max() / max(np.abs(v).max(), 1e-300))


def exact_dl_powers(h_true: np.ndarray, v: np.ndarray, gamma: np.ndarray,
                    noise_w: float) -> np.ndarray:
    """Per-realization power loadings achieving SINR_k = gamma_k exactly.

    The SINR constraints are linear in the powers: diag terms over gamma on
    the left, interference plus noise on the right.
    """
    cross_sq = np.abs(h_true.conj().T @ v) ** 2
    k = len(gamma)
    mat = -cross_sq.copy()
    mat[np.arange(k), np.arange(k)] = np.diag(cross_sq) / np.asarray(gamma)
    p = np.linalg.solve(mat, np.full(k, noise_w))
    if np.any(p <= 0):
        raise ArithmeticError("per-realization power control has no positive solution")
    return p


# --------------------------------------------------------------------------
# asymptotic closed forms
# --------------------------------------------------------------------------

def optimal_rho(gamma_avg: float, c: float, c_s: float) -> float:
    """Power-optimal regularizer: (1-c_S)/gamma_avg - c/(1+gamma_avg).

    Independent of the CSI error levels. Positive whenever c + c_S < 1;
    a nonpositive value means the regularized power form has no minimum
    and the target set is infeasible.
    """
    if gamma_avg <= 0:
        raise ValueError("gamma_avg must be positive")
    return (1.0 - c_s) / gamma_avg - c / (1.0 + gamma_avg)


def mu_fixed_point(c: float, c_s: float, rho: float) -> float:
    """Positive root of rho*mu^2 + (c + rho - (1-c_S))*mu - (1-c_S) = 0,
    i.e. the solution of mu = (1-c_S) / (c/(1+mu) + rho)."""
    if rho <= 0:
        raise ValueError(f"regularizer must be positive, got {rho}")
    b = c + rho - (1.0 - c_s)
    return (-b + math.sqrt(b * b + 4.0 * rho * (1.0 - c_s))) / (2.0 * rho)


def rzf_per_device_power(targets: DlTargets, mu: float, total_power_w: float) -> np.ndarray:
    """Per-device power loading at resolvent scale mu given the total power:
    p_k = gamma_k/(l_k mu^2 (1-tau_k^2)) * [P(1-tau_k^2+tau_k^2(1+mu)^2)
    + sigma^2 (1+mu)^2 / l_k]."""
    gam, tau2, gain = targets.gamma, targets.tau_sq, targets.gain
    boost = 1.0 - tau2 + tau2 * (1.0 + mu) ** 2
    return gam / (gain * mu ** 2 * (1.0 - tau2)) * (
        total_power_w * boost + targets.noise_w * (1.0 + mu) ** 2 / gain)


def rzf_total_power_at(targets: DlTargets, rho: float) -> float:
    """Total radiated power of the regularized precoder at an arbitrary rho.

    Obtained by closing the loop between the total-power trace identity and
    the per-device loadings: with W = c / (mu (c + rho (1+mu)^2)),
    P = W sigma^2 (1+mu)^2 A / (1 - W (gamma_avg + ((1+mu)^2 - 1) B)).
    Returns inf when that denominator is nonpositive (diverging powers).
    """
    c, c_s = targets.load_ratio, targets.nulling_ratio
    mu = mu_fixed_point(c, c_s, rho)
    w = c / (mu * (c + rho * (1.0 + mu) ** 2))
    den = 1.0 - w * (targets.gamma_avg + ((1.0 + mu) ** 2 - 1.0) * targets.load_b)
    if den <= 0:
        return math.inf
    return w * targets.noise_w * (1.0 + mu) ** 2 * targets.load_a / den


def dl_feasibility(targets: DlTargets, scheme: str) -> tuple[bool, float]:
    """Scheme feasibility plus the uniform macro CSI-error bound.

    Regularized: c*B < rho* gamma_avg, tau_max = (1 + (c/rho*) gm/gamma_avg)^(-1/2);
    plain ZF:    c*(B+1) < 1-c_S,      tau_max = (1 + gm c/(1-c-c_S))^(-1/2);
    where gm is the macro-normalized target mean. The ZF bound coincides with
    the uplink MMSE bound by construction.
    """
    c, c_s = targets.load_ratio, targets.nulling_ratio
    gm = targets.gamma_avg_macro
    if scheme == "rzf":
        rho = optimal_rho(targets.gamma_avg, c, c_s)
        if rho <= 0:
            return False, 0.0
        feasible = c * targets.load_b < rho * targets.gamma_avg
        tau_max = (1.0 + (c / rho) * gm / targets.gamma_avg) ** -0.5 if gm > 0 else 1.0
    elif scheme == "zf":
        feasible = 1.0 - c_s - c * (targets.load_b + 1.0) > 0
        margin = 1.0 - c - c_s
        tau_max = (1.0 + gm * c / margin) ** -0.5 if gm > 0 else 1.0
    elif scheme == "stc":
        feasible = c_s < 1.0
        tau_max = 1.0
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return bool(feasible), float(tau_max)


def rzf_asymptotic(targets: DlTargets) -> DlSolution:
    """Asymptotic regularized-ZF design: optimal rho, total power
    P = c sigma^2 A / (rho* gamma_avg - c B), and per-device loadings at
    mu = gamma_avg. The diagnostics carry the independent general-rho route
    evaluated at rho* (exact match at zero CSI error)."""
    c, c_s = targets.load_ratio, targets.nulling_ratio
    feasible, tau_max = dl_feasibility(targets, "rzf")
    rho = optimal_rho(targets.gamma_avg, c, c_s)
    mu = targets.gamma_avg
    if not feasible:
        return DlSolution("rzf", rho, mu, math.inf,
                          np.full(targets.n_served, np.inf), False, tau_max)
    total = c * targets.noise_w * targets.load_a / (rho * mu - c * targets.load_b)
    powers = rzf_per_device_power(targets, mu, total)
    gap = abs(rzf_total_power_at(targets, rho) / total - 1.0)
    return DlSolution("rzf", rho, mu, total, powers, True, tau_max,
                      diagnostics={"trace_route_gap": gap})


def zf_asymptotic(targets: DlTargets) -> DlSolution:
    """Asymptotic plain-ZF design: P = c sigma^2 A / (1 - c_S - c(B+1)),
    p_k = gamma_k (sigma^2 + tau_k^2 l_k P) / (1 - tau_k^2)."""
    c, c_s = targets.load_ratio, targets.nulling_ratio
    feasible, tau_max = dl_feasibility(targets, "zf")
    if not feasible:
        return DlSolution("zf", 0.0, 0.0, math.inf,
                          np.full(targets.n_served, np.inf), False, tau_max)
    total = c * targets.noise_w * targets.load_a / (1.0 - c_s - c * (targets.load_b + 1.0))
    powers = targets.gamma / (1.0 - targets.tau_sq) * (
        targets.noise_w + targets.tau_sq * targets.gain * total)
    return DlSolution("zf", 0.0, 0.0, total, powers, True, tau_max)


# --------------------------------------------------------------------------
# space-time-coding fallback for very fast users
# --------------------------------------------------------------------------

def stc_power(gamma, gain, c_s: float, noise_w: float):
    """Per-device power of the CSI-free space-time-coded transmission inside
    the nulled subspace: p = gamma * sigma^2 / ((1-c_S) * l)."""
    if c_s >= 1.0:
        raise ValueError("nulling fraction must stay below 1")
    return np.asarray(gamma) * noise_w / ((1.0 - c_s) * np.asarray(gain))


def stc_schedule(t_lp: float, t_stc: float, lp_targets: DlTargets,
                 stc_gamma: np.ndarray, stc_gain: np.ndarray) -> dict:
    """Split the downlink interval between jointly precoded service (t_lp)
    and one-at-a-time space-time coding for the fast users (t_stc).

    Returns the averaged spectral efficiency over the interval and the total
    transmit energy (precoded phase billed at the plain-ZF total power).
    """
    if t_lp < 0 or t_stc < 0 or t_lp + t_stc <= 0:
        raise ValueError("time shares must be nonnegative with a positive sum")
    total_t = t_lp + t_stc
    k_stc = len(stc_gamma)
    r_lp = float(np.sum(np.log2(1.0 + lp_targets.gamma)))
    r_avg = t_lp / total_t * r_lp
    if k_stc:
        r_avg += t_stc / (total_t * k_stc) * float(np.sum(np.log2(1.0 + stc_gamma)))
    zf = zf_asymptotic(lp_targets)
    energy = t_lp * zf.total_power_w
    if k_stc:
        c_s = lp_targets.nulling_ratio
        energy += t_stc * float(np.sum(stc_power(stc_gamma, stc_gain, c_s,
                                                 lp_targets.noise_w)))
    return {"r_avg_bps_hz": r_avg, "energy": energy}


# --------------------------------------------------------------------------
# correlated-antenna mode: numerical regularizer search
# --------------------------------------------------------------------------

def rho_search_grid(rho_star: float, span: float = 30.0, points: int = 64) -> np.ndarray:
    """Logarithmic grid spanning [rho*/span, rho*span]."""
    return rho_star * np.logspace(-math.log10(span), math.log10(span), points)


def correlated_rzf(h_est: np.ndarray, gains: np.ndarray, t_proj: np.ndarray,
                   rho: float) -> np.ndarray:
    """Regularized precoder on a correlated-channel realization; identical
    construction to the uncorrelated one (correlation lives in the channel
    statistics), kept as its own entry point for the numerical-rho mode."""
    return rzf_precoder(h_est, gains, t_proj, rho)


def select_rho_monte_carlo(realizations, gamma: np.ndarray, gains: np.ndarray,
                           noise_w: float, grid: np.ndarray) -> tuple[float, np.ndarray]:
    """Grid-search the regularizer by Monte-Carlo power estimation.

    ``realizations`` is a sequence of (h_true, h_est, h_nulled) draws. For
    each grid point, every realization gets the concatenated precoder and the
    exact per-realization loadings meeting the SINR targets; the winner
    minimizes the mean radiated power. Raises when no grid point admits
    positive loadings on every draw.
    """
    grid = np.asarray(grid, dtype=float)
    draws = list(realizations)
    if not draws:
        raise ValueError("need at least one channel realization")
    mean_power = np.full(len(grid), np.inf)
    for j, rho in enumerate(grid):
        tot = 0.0
        ok = True
        for h_true, h_est, h_nulled in draws:
            t_proj = projector(h_nulled)
            v = correlated_rzf(h_est, gains, t_proj, rho)
            try:
                p = exact_dl_powers(h_true, v, gamma, noise_w)
            except ArithmeticError:
                ok = False
                break
            tot += float(p @ (np.abs(v) ** 2).sum(axis=0))
        if ok:
            mean_power[j] = tot / len(draws)
    if not np.isfinite(mean_power).any():
        raise ArithmeticError("no regularizer on the grid admits feasible loadings")
    best = int(np.argmin(mean_power))
    return float(grid[best]), mean_power
