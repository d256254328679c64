"""Uplink large-system solution.

The macro base station receives the red band's macro users and small-cell
backhaul streams through an MMSE filter while the blue small cells radiate
to their own users. Asymptotically (antennas and device counts large at
fixed ratios) every uplink power concentrates around a deterministic value
parameterized by two coupled scalars:

  xi     per-antenna resolvent trace of the received-covariance model;
         1/sigma^2 when the system is unloaded.
  delta  power-inflation scalar; (xi*delta)^(-1) acts as the uplink power
         markup every transmitter pays for interference and CSI error.

With g_i = gamma_i / (delta*(1-tau_i^2)) (the effective per-device load)
and e_s = xi * l_bs(s) * p_s (the per-small-cell interference load), the
two scalars solve

  xi*sigma^2 = 1 - (1/N) sum_i g_i/(1+g_i) - (1/N) sum_s e_s/(1+e_s)
  delta = [1 - (1/N) sum_i (g_i/(1+g_i))^2 - (1/N) sum_s (e_s/(1+e_s))^2]
          / [(1/N) sum_i g_i*tau_i^2 + (1/N) sum_i g_i(1-tau_i^2)/(1+g_i)^2
             + (1/N) sum_s e_s/(1+e_s)^2 + xi*sigma^2]

(the delta equation is re-derived from the deterministic equivalent of the
achieved SINR by imposing SINR_k = gamma_k; see the project notes). The
blue small cells' downlink powers feed back into e_s, so everything is
iterated jointly. Powers then follow as
p_k = gamma_k * sigma^2 / (xi*sigma^2 * delta * (1-tau_k^2) * l_k).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .special import invert_ergodic_rate

DELTA_FLOOR = 1e-9
POWER_CEILING_W = 1e6


@dataclass
class UlTargets:
    """Per-device targets and link budget for one uplink band."""

    gamma: np.ndarray          # (K,) SINR targets of the served set (macro first)
    tau_sq: np.ndarray         # (K,) CSI error power, zero for small cells
    gain: np.ndarray           # (K,) device -> BS pathloss gain
    n_macro: int               # leading entries of the served set that are macro users
    n_antennas: int
    sue_rate: np.ndarray       # (S,) ergodic rate targets of the protected cells' users
    gain_nulled_bs: np.ndarray  # (S,) protected SCA -> BS pathloss gain
    gain_access: np.ndarray     # (S,) serving SCA -> its SUE pathloss gain
    gain_cross: np.ndarray      # (S, K) transmitter k -> SUE s pathloss gain

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=float)
        self.tau_sq = np.asarray(self.tau_sq, dtype=float)
        self.gain = np.asarray(self.gain, dtype=float)
        if np.any(self.tau_sq < 0) or np.any(self.tau_sq >= 1):
            raise ValueError("tau^2 must lie in [0, 1)")
        if np.any(self.tau_sq[self.n_macro:] != 0):
            raise ValueError("small-cell backhaul channels are perfectly known (tau = 0)")

    @property
    def n_served(self) -> int:
        return len(self.gamma)

    @property
    def n_nulled(self) -> int:
        return len(self.gain_nulled_bs)

    @property
    def load_ratio(self) -> float:
        return self.n_served / self.n_antennas

    @property
    def nulling_ratio(self) -> float:
        return self.n_nulled / self.n_antennas

    @property
    def gamma_avg_macro(self) -> float:
        """Macro-user target mean, normalized by the full served count."""
        if self.n_served == 0:
            return 0.0
        return float(self.gamma[:self.n_macro].sum() / self.n_served)


@dataclass
class UlSolution:
    xi: float
    delta: float
    powers_served: np.ndarray   # (K,) uplink powers of the served set, Watt
    powers_sca_dl: np.ndarray   # (S,) protected small cells' downlink powers, Watt
    sue_sinr_targets: np.ndarray  # (S,) mean-SINR targets from the ergodic inversion
    feasible: bool
    iterations: int
    residuals: dict = field(default_factory=dict)


def sue_interference(powers: np.ndarray, gain_cross: np.ndarray) -> np.ndarray:
    """Deterministic uplink interference floor at each protected cell's user:
    sum_k p_k * l(s, k)."""
    return np.asarray(gain_cross) @ np.asarray(powers)


def ul_feasibility(targets: UlTargets) -> tuple[bool, float]:
    """Check that finite powers exist, and return the uniform CSI-error bound.

    Feasible iff (1/N) sum_k gamma_k tau_k^2/(1-tau_k^2) < 1 - c - c_S. For a
    uniform macro tau the critical value is
    tau_max = (1 + gamma_avg_macro * c/(1-c-c_S))^(-1/2).
    """
    margin = 1.0 - targets.load_ratio - targets.nulling_ratio
    lhs = float(np.sum(targets.gamma * targets.tau_sq / (1.0 - targets.tau_sq))
                / targets.n_antennas)
    feasible = lhs < margin
    gm = targets.gamma_avg_macro
    if gm <= 0:
        tau_max = 1.0
    else:
        tau_max = (1.0 + gm * targets.load_ratio / margin) ** -0.5
    return feasible, tau_max


def sca_dl_power(targets: UlTargets, s: int, gamma_s: float, xi: float,
                 delta: float, noise_w: float) -> float:
    """Downlink power of protected small cell ``s`` meeting its user's target:
    p_s = gamma_s/l_access * (noise + interference floor implied by (xi, delta))."""
    if xi <= 0 or delta <= 0:
        raise ValueError("xi and delta must be positive")
    implied = targets.gamma / ((1.0 - targets.tau_sq) * targets.gain) / (xi * delta)
    floor = float(targets.gain_cross[s] @ implied)
    return gamma_s / targets.gain_access[s] * (noise_w + floor)


def solve_ul_fixed_point(targets: UlTargets, noise_w: float, damping: float = 0.5,
                         tol: float = 1e-12, max_iters: int = 200_000) -> UlSolution:
    """Solve the coupled (xi, delta) system and return all uplink powers.

    Damped Picard iteration from the unloaded point (xi = 1/sigma^2,
    delta = 1); the maps are smooth and the solution unique on the feasible
    side. Infeasibility (target set beyond the CSI-error wall) is detected
    a priori from the closed-form test and numerically by delta collapsing
    or powers blowing past 1e6 W; it is reported via the ``feasible`` flag,
    never as an exception. Non-convergence inside the feasible region raises.
    """
    gam, tau2, gain = targets.gamma, targets.tau_sq, targets.gain
    n = targets.n_antennas
    gamma_s = np.array([invert_ergodic_rate(r) for r in targets.sue_rate])
    # dimensionless interference weight of each protected cell's user
    j_floor = targets.gain_cross @ (gam / ((1.0 - tau2) * gain))
    bs_over_access = targets.gain_nulled_bs / targets.gain_access

    feasible_closed, _ = ul_feasibility(targets)

    u, d = 1.0, 1.0      # u = xi * sigma^2
    it = 0
    res_u = res_d = math.inf
    if feasible_closed:
        for it in range(1, max_iters + 1):
            g = gam / (d * (1.0 - tau2))
            gr = g / (1.0 + g)
            e = gamma_s * bs_over_access * (u + j_floor / d)
            er = e / (1.0 + e)
            u_new = 1.0 - gr.sum() / n - er.sum() / n
            num = 1.0 - (gr ** 2).sum() / n - (er ** 2).sum() / n
            den = ((g * tau2).sum() / n + (g * (1.0 - tau2) / (1.0 + g) ** 2).sum() / n
                   + (er / (1.0 + e)).sum() / n + u_new)
            d_new = num / den
            u_next = (1.0 - damping) * u + damping * u_new
            d_next = (1.0 - damping) * d + damping * d_new
            res_u = abs(u_next - u) / max(abs(u_next), 1e-300)
            res_d = abs(d_next - d) / max(abs(d_next), 1e-300)
            u, d = u_next, d_next
            if res_u < tol and res_d < tol:
                break
            if d < DELTA_FLOOR or u <= 0:
                break
        else:
            raise ArithmeticError(
                f"uplink fixed point did not converge after {max_iters} iterations "
                f"(residuals u: {res_u:.2e}, delta: {res_d:.2e})")

    with np.errstate(over="ignore", divide="ignore"):
        powers = noise_w * gam / (u * d * (1.0 - tau2) * gain)
        p_sca = gamma_s * noise_w * (1.0 + j_floor / (u * d)) / targets.gain_access

    feasible = (feasible_closed and d >= DELTA_FLOOR and u > 0
                and bool(np.all(powers < POWER_CEILING_W)))
    if not feasible:
        powers = np.full_like(powers, np.inf)
        p_sca = np.full_like(p_sca, np.inf)
    return UlSolution(
        xi=u / noise_w, delta=d, powers_served=powers, powers_sca_dl=p_sca,
        sue_sinr_targets=gamma_s, feasible=feasible, iterations=it,
        residuals={"u": res_u, "delta": res_d},
    )


def fixed_point_residuals(targets: UlTargets, noise_w: float, xi: float,
                          delta: float, sue_sinr_targets: np.ndarray) -> dict:
    """Relative residuals of both scalar equations at a candidate (xi, delta)."""
    gam, tau2 = targets.gamma, targets.tau_sq
    n = targets.n_antennas
    u = xi * noise_w
    j_floor = targets.gain_cross @ (gam / ((1.0 - tau2) * targets.gain))
    g = gam / (delta * (1.0 - tau2))
    gr = g / (1.0 + g)
    e = sue_sinr_targets * targets.gain_nulled_bs / targets.gain_access * (u + j_floor / delta)
    er = e / (1.0 + e)
    u_rhs = 1.0 - gr.sum() / n - er.sum() / n
    num = 1.0 - (gr ** 2).sum() / n - (er ** 2).sum() / n
    den = ((g * tau2).sum() / n + (g * (1.0 - tau2) / (1.0 + g) ** 2).sum() / n
           + (er / (1.0 + e)).sum() / n + u_rhs)
    return {"u": abs(u_rhs - u) / u, "delta": abs(num / den - delta) / delta}
