"""Scenario configuration: physical and protocol parameters of the network.

Config files are flat ``key = value`` text (UTF-8, ``#`` comments). All
internal quantities are linear (Watt, gain); dB/dBm appear only at the
I/O boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from scipy.special import j0

SPEED_OF_LIGHT = 299_792_458.0


class ConfigError(ValueError):
    """Raised on unknown keys, unparsable values, or invariant violations."""


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class PathlossModel:
    """Bounded distance pathloss  l(x) = 2*ref_gain / (1 + (|x|/cutoff)^exponent).

    ``ref_gain`` is the linear gain at the cutoff distance, so l(cutoff) equals
    ref_gain exactly and l(0) = 2*ref_gain (finite at the origin).
    """

    exponent: float = 3.5
    cutoff_m: float = 25.0
    ref_gain: float = db_to_linear(-86.5)

    def __post_init__(self):
        if self.exponent <= 2.0:
            raise ConfigError(f"pathloss exponent must exceed 2, got {self.exponent}")
        if self.cutoff_m <= 0 or self.ref_gain <= 0:
            raise ConfigError("pathloss cutoff and reference gain must be positive")

    def gain(self, distance_m):
        """Linear average channel gain at the given distance(s)."""
        import numpy as np

        d = np.asarray(distance_m, dtype=float)
        out = 2.0 * self.ref_gain / (1.0 + (d / self.cutoff_m) ** self.exponent)
        return out if out.ndim else float(out)


def csi_error_from_speed(speed_ms: float, wavelength_m: float, slot_s: float,
                         floor_sq: float) -> float:
    """CSI error power tau^2 for a device moving at ``speed_ms``.

    Jakes model: the slot-to-slot channel correlation is J0(2*pi*v*zeta/lambda),
    so the mobility-induced error power is 1 - J0^2, on top of a static floor
    (pilot contamination, measurement noise). Values at or above 1 mean the
    estimate is useless and are rejected.
    """
    if speed_ms < 0 or wavelength_m <= 0 or slot_s < 0 or floor_sq < 0:
        raise ConfigError("speed, wavelength, slot and floor must be nonnegative")
    corr = j0(2.0 * math.pi * speed_ms * slot_s / wavelength_m)
    tau_sq = floor_sq + (1.0 - corr * corr)
    tau_sq = min(tau_sq, 1.0 - 1e-9) if tau_sq < 1.0 else tau_sq
    if tau_sq >= 1.0:
        raise ConfigError(
            f"tau^2 = {tau_sq:.6g} >= 1: estimate uncorrelated with the channel "
            "(lower the speed, slot length or floor)")
    return tau_sq


# Table of defaults for the reference scenario (500 m macro cell, 16 small
# cells on a regular grid, 128 macro users).
_DEFAULTS = dict(
    n_antennas=128,
    cell_side_m=500.0,
    n_sca=16,
    sca_pitch_m=125.0,
    small_cell_radius_m=35.0,
    n_mue=128,
    mue_rate_bps_hz=1.5,
    sca_backhaul_rate_bps_hz=3.0,
    sue_rate_bps_hz=3.0,
    noise_power_dbm=-104.0,
    bandwidth_hz=10e6,
    pathloss_exp=3.5,
    cutoff_m=25.0,
    ref_atten_db=-86.5,
    tau_floor_sq=0.08,
    speed_kmh=15.0,
    carrier_ghz=2.4,
    slot_ms=1.0,
    correlated=False,
    angular_spread_rad=math.pi / 12,
)

_INT_KEYS = {"n_antennas", "n_sca", "n_mue"}
_BOOL_KEYS = {"correlated"}


@dataclass
class ScenarioConfig:
    """All physical and protocol parameters of one scenario."""

    n_antennas: int = _DEFAULTS["n_antennas"]
    cell_side_m: float = _DEFAULTS["cell_side_m"]
    n_sca: int = _DEFAULTS["n_sca"]
    sca_pitch_m: float = _DEFAULTS["sca_pitch_m"]
    small_cell_radius_m: float = _DEFAULTS["small_cell_radius_m"]
    n_mue: int = _DEFAULTS["n_mue"]
    mue_rate_bps_hz: float = _DEFAULTS["mue_rate_bps_hz"]
    sca_backhaul_rate_bps_hz: float = _DEFAULTS["sca_backhaul_rate_bps_hz"]
    sue_rate_bps_hz: float = _DEFAULTS["sue_rate_bps_hz"]
    noise_power_dbm: float = _DEFAULTS["noise_power_dbm"]
    bandwidth_hz: float = _DEFAULTS["bandwidth_hz"]
    pathloss_exp: float = _DEFAULTS["pathloss_exp"]
    cutoff_m: float = _DEFAULTS["cutoff_m"]
    ref_atten_db: float = _DEFAULTS["ref_atten_db"]
    tau_floor_sq: float = _DEFAULTS["tau_floor_sq"]
    speed_kmh: float = _DEFAULTS["speed_kmh"]
    carrier_ghz: float = _DEFAULTS["carrier_ghz"]
    slot_ms: float = _DEFAULTS["slot_ms"]
    correlated: bool = _DEFAULTS["correlated"]
    angular_spread_rad: float = _DEFAULTS["angular_spread_rad"]
    # Optional override: when set, used instead of the speed-derived value.
    tau_sq_override: float | None = field(default=None, repr=False)

    def __post_init__(self):
        self.validate()

    # -- derived quantities -------------------------------------------------
    @property
    def noise_w(self) -> float:
        """Total noise power over the band, in Watt."""
        return dbm_to_watt(self.noise_power_dbm)

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / (self.carrier_ghz * 1e9)

    @property
    def pathloss(self) -> PathlossModel:
        return PathlossModel(self.pathloss_exp, self.cutoff_m,
                             db_to_linear(self.ref_atten_db))

    @property
    def tau_sq(self) -> float:
        """MUE CSI error power: floor plus the mobility term, unless overridden."""
        if self.tau_sq_override is not None:
            return self.tau_sq_override
        return csi_error_from_speed(self.speed_kmh / 3.6, self.wavelength_m,
                                    self.slot_ms * 1e-3, self.tau_floor_sq)

    @property
    def mue_per_sca(self) -> int:
        return self.n_mue // self.n_sca

    def with_overrides(self, **kw) -> "ScenarioConfig":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(kw)
        return ScenarioConfig(**vals)

    # -- validation ----------------------------------------------------------
    def validate(self):
        positive = ["cell_side_m", "sca_pitch_m", "small_cell_radius_m",
                    "bandwidth_hz", "carrier_ghz", "slot_ms"]
        for key in positive:
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}")
        nonneg = ["mue_rate_bps_hz", "sca_backhaul_rate_bps_hz", "sue_rate_bps_hz",
                  "tau_floor_sq", "speed_kmh", "angular_spread_rad"]
        for key in nonneg:
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be nonnegative, got {getattr(self, key)}")
        if self.n_antennas < 1 or self.n_sca < 1 or self.n_mue < 0:
            raise ConfigError("n_antennas and n_sca must be >= 1, n_mue >= 0")
        if not 0.0 <= self.tau_floor_sq < 1.0:
            raise ConfigError(f"tau_floor_sq must lie in [0, 1), got {self.tau_floor_sq}")
        if self.tau_sq_override is not None and not 0.0 <= self.tau_sq_override < 1.0:
            raise ConfigError(f"tau_sq override must lie in [0, 1), got {self.tau_sq_override}")
        if self.n_mue % self.n_sca != 0:
            raise ConfigError(
                f"balanced placement requires the MUE count ({self.n_mue}) to be "
                f"divisible by the SCA count ({self.n_sca})")
        # pitch must tile the cell when the grid is square
        g = math.isqrt(self.n_sca)
        if g * g == self.n_sca and abs(g * self.sca_pitch_m - self.cell_side_m) > 1e-6:
            raise ConfigError(
                f"sca_pitch_m * sqrt(n_sca) = {g * self.sca_pitch_m:g} must equal "
                f"cell_side_m = {self.cell_side_m:g}")


def parse_config(text: str) -> ScenarioConfig:
    """Parse flat ``key = value`` text into a ScenarioConfig.

    Unknown keys are rejected with the offending key name and line number;
    an empty file yields the full default scenario.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _BOOL_KEYS:
                low = val.lower()
                if low in ("true", "1", "yes"):
                    values[key] = True
                elif low in ("false", "0", "no"):
                    values[key] = False
                else:
                    raise ValueError(val)
            elif key in _INT_KEYS:
                values[key] = int(val)
            else:
                values[key] = float(val)
        except ValueError:
            raise ConfigError(f"line {lineno}: cannot parse value for {key!r}: {val!r}") from None
    return ScenarioConfig(**values)


def serialize_config(cfg: ScenarioConfig) -> str:
    """Emit the config as parseable ``key = value`` lines."""
    lines = []
    for key in _DEFAULTS:
        val = getattr(cfg, key)
        if isinstance(val, bool):
            txt = "true" if val else "false"
        elif isinstance(val, int):
            txt = str(val)
        else:
            txt = repr(val)    # shortest exact float representation
        lines.append(f"{key} = {txt}")
    return "\n".join(lines) + "\n"
