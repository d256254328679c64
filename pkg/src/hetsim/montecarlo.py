"""Finite-size validation: draw fading realizations, run the exact MMSE
receiver / concatenated precoders with the asymptotic powers, and measure
achieved SINRs, realized radiated power, and nulling leakage.

Trials are independent work items on per-trial RNG substreams derived from
(master seed, link tag, trial index); results are reduced in trial order, so
aggregates are bit-identical for a fixed seed at any worker count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSet, draw_channels
from .dl import instantaneous_dl_sinr, nulling_residual, rzf_precoder, zf_precoder

_UL_STREAM, _DL_STREAM = 0x51, 0xD1


@dataclass
class TrialRecord:
    trial: int
    device_id: int
    device_class: str
    target_sinr: float
    achieved_sinr: float
    power_w: float


@dataclass
class AggregateStats:
    """Order-stable summary of a trial batch."""

    trials: int
    seed: int
    sinr_mean: np.ndarray          # (K,) mean achieved SINR per served device
    sinr_std: np.ndarray
    targets: np.ndarray            # (K,) SINR targets
    classes: list                  # (K,) per-device class labels
    power_mean_by_class: dict      # class -> mean assigned/realized device power
    sue_rate_empirical: np.ndarray | None = None   # (S,) mean log2(1+SINR)
    sue_sinr_mean: np.ndarray | None = None
    realized_total_power_mean: float | None = None  # downlink only
    nulling_residual_max: float = 0.0
    records: list = field(default_factory=list)

    @property
    def rel_err_mean(self) -> float:
        """Mean over devices of |mean achieved SINR / target - 1|."""
        return float(np.mean(np.abs(self.sinr_mean / self.targets - 1.0)))


def mmse_receiver(h_est: np.ndarray, h_nulled: np.ndarray, powers_served: np.ndarray,
                  powers_nulled: np.ndarray, noise_w: float) -> np.ndarray:
    """Receive filter bank, one column per served device.

    Built from the estimated served channels and the exactly known protected
    small cells' channels with their downlink powers; the regularizer is the
    per-antenna noise (antenna count times the band noise in this scaling).
    """
    n = h_est.shape[0]
    cov = (h_est * powers_served) @ h_est.conj().T
    if h_nulled.shape[1]:
        cov += (h_nulled * powers_nulled) @ h_nulled.conj().T
    cov += n * noise_w * np.eye(n)
    return np.linalg.solve(cov, h_est)


def ul_trial_sinrs(ch: ChannelSet, powers_served: np.ndarray,
                   powers_nulled: np.ndarray, noise_w: float) -> np.ndarray:
    """Achieved uplink SINRs of one realization under the MMSE receiver."""
    g = mmse_receiver(ch.served_est, ch.nulled, powers_served, powers_nulled, noise_w)
    n = ch.served.shape[0]
    cross = g.conj().T @ ch.served           # (K, K): filter k, transmitter i
    sig = powers_served * np.abs(np.diag(cross)) ** 2
    intra = (np.abs(cross) ** 2) @ powers_served - sig
    inter = np.zeros(len(sig))
    if ch.nulled.shape[1]:
        inter = (np.abs(g.conj().T @ ch.nulled) ** 2) @ powers_nulled
    noise = n * noise_w * (np.abs(g) ** 2).sum(axis=0)
    return sig / (intra + inter + noise)


def sue_trial_sinrs(ch: ChannelSet, powers_served: np.ndarray,
                    powers_sca_dl: np.ndarray, noise_w: float) -> np.ndarray:
    """Downlink SINR at each protected cell's user for one realization:
    own-cell signal over noise plus the co-band uplink interference."""
    interference = (np.abs(ch.sue_cross) ** 2) @ powers_served
    return powers_sca_dl * np.abs(ch.sue_access) ** 2 / (noise_w + interference)


def _trial_seeds(seed: int, stream: int, trials: int) -> list:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(stream,)).spawn(trials)


def _run_pool(fn, seeds, workers: int):
    if workers <= 1:
        return [fn(i, s) for i, s in enumerate(seeds)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(seeds)), seeds))


def run_ul_trials(arch, ul, trials: int, seed: int, noise_w: float,
                  workers: int = 1, keep_records: bool = False) -> AggregateStats:
    """Uplink Monte Carlo: per trial draw channels, apply the MMSE receiver
    with the asymptotic powers, measure served SINRs and the protected cells'
    user SINRs; aggregate in trial order."""
    if not ul.feasible:
        raise ValueError("uplink solution is infeasible; nothing to simulate")
    corr = arch.correlation_roots()

    def one(i, ss):
        rng = np.random.default_rng(ss)
        ch = draw_channels(rng, arch.n_antennas, arch.served_gain, arch.served_tau(),
                           arch.nulled_gain_bs, arch.sue_access_gain, arch.sue_cross_gain,
                           corr_roots=corr)
        sinr = ul_trial_sinrs(ch, ul.powers_served, ul.powers_sca_dl, noise_w)
        sue = sue_trial_sinrs(ch, ul.powers_served, ul.powers_sca_dl, noise_w)
        return sinr, sue

    out = _run_pool(one, _trial_seeds(seed, _UL_STREAM, trials), workers)
    sinrs = np.array([o[0] for o in out])
    sues = np.array([o[1] for o in out])
    records = []
    if keep_records:
        for t, (sinr, _) in enumerate(out):
            for k in range(len(sinr)):
                records.append(TrialRecord(t, k, arch.served_class[k],
                                           arch.served_gamma[k], float(sinr[k]),
                                           float(ul.powers_served[k])))
    power_by_class = _class_means(arch.served_class, ul.powers_served)
    return AggregateStats(
        trials=trials, seed=seed,
        sinr_mean=sinrs.mean(axis=0), sinr_std=sinrs.std(axis=0),
        targets=np.asarray(arch.served_gamma, dtype=float),
        classes=list(arch.served_class),
        power_mean_by_class=power_by_class,
        sue_rate_empirical=(np.log2(1.0 + sues).mean(axis=0) if sues.size else np.zeros(0)),
        sue_sinr_mean=(sues.mean(axis=0) if sues.size else np.zeros(0)),
        records=records,
    )


def run_dl_trials(arch, dl, trials: int, seed: int, noise_w: float,
                  workers: int = 1, keep_records: bool = False) -> AggregateStats:
    """Downlink Monte Carlo: per trial draw channels, build the projector from
    the true protected-cell channels and the scheme's precoder from the
    estimates, measure achieved SINRs, realized radiated power, and leakage."""
    if not dl.feasible:
        raise ValueError("downlink solution is infeasible; nothing to simulate")
    corr = arch.correlation_roots()

    def one(i, ss):
        rng = np.random.default_rng(ss)
        ch = draw_channels(rng, arch.n_antennas, arch.served_gain, arch.served_tau(),
                           arch.nulled_gain_bs, arch.sue_access_gain, arch.sue_cross_gain,
                           corr_roots=corr)
        if ch.nulled.shape[1]:
            q = np.linalg.qr(ch.nulled)[0]
            t_proj = np.eye(arch.n_antennas, dtype=complex) - q @ q.conj().T
        else:
            t_proj = np.eye(arch.n_antennas, dtype=complex)
        powers = dl.powers
        if dl.scheme == "rzf":
            v = rzf_precoder(ch.served_est, arch.served_gain, t_proj, dl.rho)
            sinr, radiated = instantaneous_dl_sinr(ch.served, v, powers, noise_w)
        elif dl.scheme == "zf":
            v = zf_precoder(ch.served_est, t_proj)
            sinr, radiated = instantaneous_dl_sinr(ch.served, v, powers, noise_w)
        elif dl.scheme == "stc":
            # devices are served one at a time through the projected isotropic
            # beam (covariance p/N * T), so the per-device SINR is noise-only
            # and the radiated power is the time average over the slots
            v = t_proj / np.sqrt(arch.n_antennas)
            rx = ch.served.conj().T @ v
            sinr = powers * (np.abs(rx) ** 2).sum(axis=1) / noise_w
            radiated = float(np.mean(powers) * np.trace(t_proj).real / arch.n_antennas)
        else:
            raise ValueError(f"unknown scheme {dl.scheme!r}")
        resid = nulling_residual(ch.nulled, v)
        return sinr, radiated, resid

    out = _run_pool(one, _trial_seeds(seed, _DL_STREAM, trials), workers)
    sinrs = np.array([o[0] for o in out])
    radiated = np.array([o[1] for o in out])
    resid = max(o[2] for o in out)
    records = []
    if keep_records:
        for t, (sinr, _, _) in enumerate(out):
            for k in range(len(sinr)):
                records.append(TrialRecord(t, k, arch.served_class[k],
                                           arch.served_gamma[k], float(sinr[k]),
                                           float(dl.powers[k])))
    return AggregateStats(
        trials=trials, seed=seed,
        sinr_mean=sinrs.mean(axis=0), sinr_std=sinrs.std(axis=0),
        targets=np.asarray(arch.served_gamma, dtype=float),
        classes=list(arch.served_class),
        power_mean_by_class=_class_means(arch.served_class, dl.powers),
        realized_total_power_mean=float(radiated.mean()),
        nulling_residual_max=float(resid),
        records=records,
    )


def _class_means(classes, powers) -> dict:
    out = {}
    arr = np.asarray(powers, dtype=float)
    for cls in dict.fromkeys(classes):
        mask = np.array([c == cls for c in classes])
        out[cls] = float(arr[mask].mean())
    return out


def records_to_csv(records: list) -> str:
    lines = ["trial,device_id,class,target_sinr,achieved_sinr,power_w"]
    for r in records:
        lines.append(f"{r.trial},{r.device_id},{r.device_class},"
                     f"{r.target_sinr:.12g},{r.achieved_sinr:.12g},{r.power_w:.12g}")
    return "\n".join(lines) + "\n"
