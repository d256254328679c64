"""Scenario orchestration: the proposed architecture and its two baselines,
rate sweeps with Monte-Carlo validation, per-class power accounting, and the
user-density / separation interference tradeoff.

Architectures (one frequency band of the protocol):

  hetnet    red macro users plus red small cells served over the wireless
            backhaul; blue small cells nulled; blue cells' users shielded
            from co-band macro traffic by the geographic interleaving.
  wired     small cells fed by wire: the BS serves only the red macro
            users; the co-located red small cells radiate to their users on
            the same band (no interleaving, so their users hear the co-band
            macro uplink at close range) and the precoder nulls toward them.
  mmimo     single tier: the BS serves the red macro users plus the red
            sites' users directly; nothing is nulled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import hyp2f1

from .channels import correlation_root
from .config import PathlossModel, ScenarioConfig
from .dl import DlSolution, DlTargets, rzf_asymptotic, zf_asymptotic
from .geometry import BLUE, RED, NetworkGeometry, build_network
from .montecarlo import AggregateStats, run_dl_trials, run_ul_trials
from .special import sinr_of_rate
from .ul import UlSolution, UlTargets, solve_ul_fixed_point

ARCH_TAGS = ("hetnet", "wired", "mmimo")

SWEEP_HEADER = ("rate_bps_hz,arch,scheme,tau_sq,feasible,p_mue_ul_w,p_sca_ul_w,"
                "p_sue_ul_w,p_bs_dl_w,p_sca_dl_w,mc_sinr_relerr,area_tput_gbps_km2")


@dataclass
class Architecture:
    """Solver inputs of one band: served set, nulling set, SUE link budget."""

    tag: str
    n_antennas: int
    noise_w: float
    served_gamma: np.ndarray
    served_tau_sq: np.ndarray
    served_gain: np.ndarray
    served_class: list                  # per-device label: MUE / SCA / SUE
    served_theta: np.ndarray            # departure angles, for correlated mode
    n_macro: int
    nulled_gain_bs: np.ndarray          # protected SCA -> BS gains
    sue_access_gain: np.ndarray         # serving SCA -> SUE gains
    sue_cross_gain: np.ndarray          # (S, K) transmitter -> SUE gains
    sue_rate: np.ndarray
    served_rate: np.ndarray
    correlated: bool = False
    angular_spread: float = math.pi / 12
    _corr_cache: list | None = field(default=None, repr=False)

    @property
    def n_served(self) -> int:
        return len(self.served_gamma)

    @property
    def n_nulled(self) -> int:
        return len(self.nulled_gain_bs)

    def served_tau(self) -> np.ndarray:
        return np.sqrt(self.served_tau_sq)

    def correlation_roots(self) -> list | None:
        if not self.correlated:
            return None
        if self._corr_cache is None:
            self._corr_cache = [
                correlation_root(th, self.angular_spread, self.n_antennas)
                for th in self.served_theta]
        return self._corr_cache

    def ul_targets(self) -> UlTargets:
        return UlTargets(
            gamma=self.served_gamma, tau_sq=self.served_tau_sq,
            gain=self.served_gain, n_macro=self.n_macro,
            n_antennas=self.n_antennas, sue_rate=self.sue_rate,
            gain_nulled_bs=self.nulled_gain_bs, gain_access=self.sue_access_gain,
            gain_cross=self.sue_cross_gain)

    def dl_targets(self) -> DlTargets:
        return DlTargets(
            gamma=self.served_gamma, tau_sq=self.served_tau_sq,
            gain=self.served_gain, n_macro=self.n_macro,
            n_antennas=self.n_antennas, n_nulled=self.n_nulled,
            noise_w=self.noise_w)


def build_architecture(tag: str, cfg: ScenarioConfig, geom: NetworkGeometry) -> Architecture:
    """Derive one band's served and nulled sets from the network drop."""
    if tag not in ARCH_TAGS:
        raise ValueError(f"unknown architecture {tag!r}; pick one of {ARCH_TAGS}")
    pl = cfg.pathloss
    tau_sq = cfg.tau_sq
    red_mue = geom.mue_of(RED)
    red_sca = geom.sca_of(RED)
    blue_sca = geom.sca_of(BLUE)
    mue_pos = geom.mue_pos[red_mue]
    gamma_m = sinr_of_rate(cfg.mue_rate_bps_hz)

    def bs_gain(pos):
        return pl.gain(geom.distances_to_bs(pos))

    def angles(pos):
        return np.arctan2(pos[:, 1], pos[:, 0])

    if tag == "hetnet":
        served_pos = np.vstack([mue_pos, geom.sca_pos[red_sca]])
        gamma = np.r_[np.full(len(red_mue), gamma_m),
                      np.full(len(red_sca), sinr_of_rate(cfg.sca_backhaul_rate_bps_hz))]
        tau = np.r_[np.full(len(red_mue), tau_sq), np.zeros(len(red_sca))]
        cls = ["MUE"] * len(red_mue) + ["SCA"] * len(red_sca)
        rates = np.r_[np.full(len(red_mue), cfg.mue_rate_bps_hz),
                      np.full(len(red_sca), cfg.sca_backhaul_rate_bps_hz)]
        protected = blue_sca
    elif tag == "wired":
        served_pos = mue_pos
        gamma = np.full(len(red_mue), gamma_m)
        tau = np.full(len(red_mue), tau_sq)
        cls = ["MUE"] * len(red_mue)
        rates = np.full(len(red_mue), cfg.mue_rate_bps_hz)
        protected = red_sca     # co-band small cells, no cross-band shielding
    else:  # mmimo
        sue_pos = geom.sue_pos[red_sca]
        served_pos = np.vstack([mue_pos, sue_pos])
        gamma = np.r_[np.full(len(red_mue), gamma_m),
                      np.full(len(red_sca), sinr_of_rate(cfg.sue_rate_bps_hz))]
        tau = np.r_[np.full(len(red_mue), tau_sq), np.zeros(len(red_sca))]
        cls = ["MUE"] * len(red_mue) + ["SUE"] * len(red_sca)
        rates = np.r_[np.full(len(red_mue), cfg.mue_rate_bps_hz),
                      np.full(len(red_sca), cfg.sue_rate_bps_hz)]
        protected = np.array([], dtype=int)

    if len(protected):
        sue_pos_b = geom.sue_pos[protected]
        access = pl.gain(np.linalg.norm(sue_pos_b - geom.sca_pos[protected], axis=1))
        cross = pl.gain(np.linalg.norm(
            sue_pos_b[:, None, :] - served_pos[None, :, :], axis=2))
        nulled_bs = bs_gain(geom.sca_pos[protected])
        sue_rate = np.full(len(protected), cfg.sue_rate_bps_hz)
    else:
        access = np.zeros(0)
        cross = np.zeros((0, len(gamma)))
        nulled_bs = np.zeros(0)
        sue_rate = np.zeros(0)

    return Architecture(
        tag=tag, n_antennas=cfg.n_antennas, noise_w=cfg.noise_w,
        served_gamma=gamma, served_tau_sq=tau, served_gain=bs_gain(served_pos),
        served_class=cls, served_theta=angles(served_pos), n_macro=len(red_mue),
        nulled_gain_bs=nulled_bs, sue_access_gain=access, sue_cross_gain=cross,
        sue_rate=sue_rate, served_rate=rates,
        correlated=cfg.correlated, angular_spread=cfg.angular_spread_rad)


# --------------------------------------------------------------------------
# per-class accounting
# --------------------------------------------------------------------------

def class_power_means(arch: Architecture, ul: UlSolution,
                      dl: DlSolution | None) -> dict:
    """Table-style class means (Watt). SUE uplink is noise-limited in the
    two-tier modes (the precoder nulls the only co-channel transmitter) and
    comes out of the served set in the single-tier mode."""
    out: dict = {}
    cls = np.asarray(arch.served_class)
    for label in ("MUE", "SCA", "SUE"):
        mask = cls == label
        if mask.any():
            out[f"{label.lower()}_ul"] = float(ul.powers_served[mask].mean())
    if arch.n_nulled:
        out["sca_dl"] = float(ul.powers_sca_dl.mean())
        out["sue_ul"] = float(np.mean(
            ul.sue_sinr_targets * arch.noise_w / arch.sue_access_gain))
    if dl is not None:
        out["bs_dl"] = float(dl.total_power_w)
    return out


def power_accounting(arch: Architecture, ul: UlSolution, dl: DlSolution,
                     cfg: ScenarioConfig) -> dict:
    """Totals and area throughput for one feasible operating point.

    Totals are exact sums of their parts: uplink counts every transmitting
    device of the band (macro users, backhaul small cells, small-cell users);
    downlink counts the BS and the radiating small cells. Throughput counts
    end-user rates (macro plus small-cell users) over the macro cell area.
    """
    means = class_power_means(arch, ul, dl)
    cls = np.asarray(arch.served_class)
    counts = {label: int((cls == label).sum()) for label in ("MUE", "SCA", "SUE")}
    s = arch.n_nulled
    ul_total = float(ul.powers_served.sum())
    if s:
        ul_total += s * means["sue_ul"]
    dl_total = dl.total_power_w + (float(ul.powers_sca_dl.sum()) if s else 0.0)
    mue_rates = float(np.sum(arch.served_rate[cls == "MUE"]))
    sue_rates = float(np.sum(arch.served_rate[cls == "SUE"])) \
        + float(np.sum(arch.sue_rate))
    area_km2 = (cfg.cell_side_m / 1000.0) ** 2
    tput = (mue_rates + sue_rates) * cfg.bandwidth_hz / area_km2 / 1e9
    return {
        "class_means_w": means,
        "counts": counts | {"SUE_via_sca": s},
        "ul_total_w": ul_total,
        "dl_total_w": dl_total,
        "area_tput_gbps_km2": tput,
    }


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

@dataclass
class SweepPoint:
    rate: float
    arch: str
    scheme: str
    tau_sq: float
    feasible: bool
    p_mue_ul: float = math.nan
    p_sca_ul: float = math.nan
    p_sue_ul: float = math.nan
    p_bs_dl: float = math.nan
    p_sca_dl: float = math.nan
    mc_relerr: float = math.nan
    area_tput: float = math.nan
    mc_p_bs_dl: float = math.nan
    nulling_residual: float = math.nan

    def csv_row(self, mc: bool = False) -> str:
        def fmt(x):
            return format(x, ".12g") if isinstance(x, float) else str(x)
        bs_dl = self.mc_p_bs_dl if mc else self.p_bs_dl
        cells = [fmt(self.rate), self.arch, self.scheme, fmt(self.tau_sq),
                 "true" if self.feasible else "false",
                 fmt(self.p_mue_ul), fmt(self.p_sca_ul), fmt(self.p_sue_ul),
                 fmt(bs_dl), fmt(self.p_sca_dl), fmt(self.mc_relerr),
                 fmt(self.area_tput)]
        return ",".join(cells)


@dataclass
class SweepReport:
    points: list

    def to_csv(self, mc: bool = False) -> str:
        rows = [SWEEP_HEADER] + [p.csv_row(mc) for p in self.points]
        return "\n".join(rows) + "\n"


def solve_point(arch: Architecture, scheme: str) -> tuple[UlSolution, DlSolution]:
    ul = solve_ul_fixed_point(arch.ul_targets(), arch.noise_w)
    dlt = arch.dl_targets()
    dl = rzf_asymptotic(dlt) if scheme == "rzf" else zf_asymptotic(dlt)
    return ul, dl


def evaluate_point(cfg: ScenarioConfig, arch_tag: str, scheme: str, rate: float,
                   trials: int, seed: int, redraw_every: int = 10,
                   workers: int = 1) -> SweepPoint:
    """One sweep point: asymptotic solve plus Monte Carlo, averaged over
    fresh network drops every ``redraw_every`` trials (all deterministic in
    the master seed)."""
    cfg_r = cfg.with_overrides(mue_rate_bps_hz=rate)
    point = SweepPoint(rate=rate, arch=arch_tag, scheme=scheme, tau_sq=cfg_r.tau_sq,
                       feasible=False)
    blocks = _trial_blocks(trials, redraw_every)
    acc: dict = {}
    mc_ul_err, mc_dl_err, mc_bs, resid = [], [], [], 0.0
    n_feasible = 0
    for b, block_trials in enumerate(blocks):
        geom = build_network(cfg_r, seed + b)
        arch = build_architecture(arch_tag, cfg_r, geom)
        ul, dl = solve_point(arch, scheme)
        if not (ul.feasible and dl.feasible):
            continue
        n_feasible += 1
        means = class_power_means(arch, ul, dl)
        for key, val in means.items():
            acc.setdefault(key, []).append(val)
        if block_trials:
            stats_ul = run_ul_trials(arch, ul, block_trials, seed + 7919 * b,
                                     cfg_r.noise_w, workers)
            stats_dl = run_dl_trials(arch, dl, block_trials, seed + 104729 * b,
                                     cfg_r.noise_w, workers)
            mc_ul_err.append(stats_ul.rel_err_mean)
            mc_dl_err.append(stats_dl.rel_err_mean)
            mc_bs.append(stats_dl.realized_total_power_mean)
            resid = max(resid, stats_dl.nulling_residual_max)
    if n_feasible < len(blocks):
        # a target set infeasible for one drop is infeasible for all: the
        # wall depends on counts and targets, not on positions
        return point
    point.feasible = True
    point.p_mue_ul = _mean_of(acc, "mue_ul")
    point.p_sca_ul = _mean_of(acc, "sca_ul")
    point.p_sue_ul = _mean_of(acc, "sue_ul")
    point.p_bs_dl = _mean_of(acc, "bs_dl")
    point.p_sca_dl = _mean_of(acc, "sca_dl")
    if mc_ul_err:
        point.mc_relerr = float(np.mean([np.mean(mc_ul_err), np.mean(mc_dl_err)]))
        point.mc_p_bs_dl = float(np.mean(mc_bs))
        point.nulling_residual = resid
    # throughput is geometry independent
    geom = build_network(cfg_r, seed)
    arch = build_architecture(arch_tag, cfg_r, geom)
    ul, dl = solve_point(arch, scheme)
    point.area_tput = power_accounting(arch, ul, dl, cfg_r)["area_tput_gbps_km2"]
    return point


def rate_sweep(cfg: ScenarioConfig, arch_tag: str, scheme: str, rates,
               trials: int, seed: int, redraw_every: int = 10,
               workers: int = 1) -> SweepReport:
    """Solve and validate every rate point; infeasible points are recorded
    with feasible=false rather than dropped, so the divergence wall shows."""
    points = [evaluate_point(cfg, arch_tag, scheme, float(r), trials, seed,
                             redraw_every, workers) for r in rates]
    return SweepReport(points)


def _trial_blocks(trials: int, redraw_every: int) -> list:
    if trials <= 0:
        return [0]
    redraw_every = max(1, redraw_every)
    full, rem = divmod(trials, redraw_every)
    return [redraw_every] * full + ([rem] if rem else [])


def _mean_of(acc: dict, key: str) -> float:
    return float(np.mean(acc[key])) if key in acc else math.nan


# --------------------------------------------------------------------------
# proximity / density tradeoff
# --------------------------------------------------------------------------

def expected_interference(density_per_m2: float, pbar_w: float,
                          model: PathlossModel, d_m: float,
                          method: str = "hyp") -> float:
    """Mean aggregate interference (Watt) at a receiver from co-channel
    transmitters of constant power spread uniformly outside radius d:

      E{I} = 4 pi a p L/(beta-2) * x^beta/d^(beta-2)
             * 2F1(1, 1-2/beta; 2-2/beta; -(x/d)^beta)

    with the closed form cross-checked against (and falling back to) direct
    radial quadrature of the pathloss annulus integral.
    """
    if d_m <= 0:
        raise ValueError("separation distance must be positive")
    beta, xbar, lref = model.exponent, model.cutoff_m, model.ref_gain
    pref = 4.0 * math.pi * density_per_m2 * pbar_w * lref
    if method == "hyp":
        z = -((xbar / d_m) ** beta)
        val = hyp2f1(1.0, 1.0 - 2.0 / beta, 2.0 - 2.0 / beta, z)
        if np.isfinite(val):
            return pref / (beta - 2.0) * xbar ** beta / d_m ** (beta - 2.0) * float(val)
        method = "quad"
    if method != "quad":
        raise ValueError(f"unknown method {method!r}")
    integrand = lambda r: r / (xbar ** beta + r ** beta)
    # split at a few scale lengths so the tail is integrated on its own
    mid = max(10.0 * xbar, 10.0 * d_m)
    head, _ = quad(integrand, d_m, mid, epsabs=0.0, epsrel=1e-12, limit=500)
    tail, _ = quad(integrand, mid, np.inf, epsabs=0.0, epsrel=1e-12, limit=500)
    return pref * xbar ** beta * (head + tail)
