"""Network layout: base station, small-cell grid, user placement, grouping.

The small cells sit on a regular grid covering the square macro cell and are
colored in a checkerboard so that same-color sites are maximally separated;
macro users inherit the color of their nearest small cell. The two colors
take turns on the two frequency bands, which is what shields each small
cell's user from co-channel macro uplink traffic.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, ScenarioConfig

RED, BLUE = 0, 1
GROUP_NAMES = {RED: "RED", BLUE: "BLUE"}


@dataclass
class NetworkGeometry:
    """Positions (meters, BS at the origin) and group labels of all nodes."""

    bs_pos: np.ndarray            # (2,)
    sca_pos: np.ndarray           # (n_sca, 2)
    sca_group: np.ndarray         # (n_sca,) in {RED, BLUE}
    mue_pos: np.ndarray           # (n_mue, 2)
    mue_group: np.ndarray         # (n_mue,)
    mue_nearest_sca: np.ndarray   # (n_mue,)
    sue_pos: np.ndarray           # (n_sca, 2), one per serving SCA
    sue_serving_sca: np.ndarray   # (n_sca,)
    n_antennas: int
    seed: int

    # -- derived sets ---------------------------------------------------------
    def sca_of(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.sca_group == group)

    def mue_of(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.mue_group == group)

    @property
    def n_served(self) -> int:
        """K = |R|: macro users plus backhaul-served small cells of the red band."""
        return len(self.mue_of(RED)) + len(self.sca_of(RED))

    @property
    def n_nulled(self) -> int:
        """S = |S_B|: small cells the precoder must stay orthogonal to."""
        return len(self.sca_of(BLUE))

    @property
    def load_ratio(self) -> float:
        return self.n_served / self.n_antennas

    @property
    def nulling_ratio(self) -> float:
        return self.n_nulled / self.n_antennas

    def distances_to_bs(self, pos: np.ndarray) -> np.ndarray:
        return np.linalg.norm(pos - self.bs_pos, axis=-1)

    def to_csv(self) -> str:
        """Flat node listing: id, kind, x_m, y_m, group, serving_sca."""
        buf = io.StringIO()
        buf.write("id,kind,x_m,y_m,group,serving_sca\n")
        row = 0

        def emit(kind, x, y, group="", serving=""):
            nonlocal row
            buf.write(f"{row},{kind},{x:.6f},{y:.6f},{group},{serving}\n")
            row += 1

        emit("BS", self.bs_pos[0], self.bs_pos[1])
        for i, p in enumerate(self.sca_pos):
            emit("SCA", p[0], p[1], GROUP_NAMES[self.sca_group[i]])
        for i, p in enumerate(self.mue_pos):
            emit("MUE", p[0], p[1], GROUP_NAMES[self.mue_group[i]])
        for i, p in enumerate(self.sue_pos):
            emit("SUE", p[0], p[1], GROUP_NAMES[self.sca_group[self.sue_serving_sca[i]]],
                 str(self.sue_serving_sca[i]))
        return buf.getvalue()


def _grid_dims(n_sca: int) -> tuple[int, int]:
    """Most-square rows x cols factorization (rows <= cols)."""
    rows = 1
    for d in range(1, math.isqrt(n_sca) + 1):
        if n_sca % d == 0:
            rows = d
    return rows, n_sca // rows


def sca_grid(cfg: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """Grid positions and checkerboard colors for the small cells."""
    rows, cols = _grid_dims(cfg.n_sca)
    px = cfg.cell_side_m / cols
    py = cfg.cell_side_m / rows
    xs = (np.arange(cols) - (cols - 1) / 2.0) * px
    ys = (np.arange(rows) - (rows - 1) / 2.0) * py
    pos = np.array([(x, y) for j, y in enumerate(ys) for i, x in enumerate(xs)])
    color = np.array([(i + j) % 2 for j in range(rows) for i in range(cols)])
    return pos, color


def build_network(cfg: ScenarioConfig, seed: int) -> NetworkGeometry:
    """Sample one network drop.

    Small cells on the grid with checkerboard coloring; per small cell,
    ``n_mue/n_sca`` macro users uniform over that cell's nearest-site
    (Voronoi) region, which for a regular grid is the rectangular tile
    around the site; one small-cell user uniform in a disc of radius
    ``small_cell_radius_m`` around each site. Deterministic per (cfg, seed).
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(0xBEEF,)))
    sca_pos, sca_group = sca_grid(cfg)
    rows, cols = _grid_dims(cfg.n_sca)
    px = cfg.cell_side_m / cols
    py = cfg.cell_side_m / rows

    per = cfg.mue_per_sca
    mue_pos = np.empty((cfg.n_mue, 2))
    mue_nearest = np.empty(cfg.n_mue, dtype=int)
    for s in range(cfg.n_sca):
        lo = sca_pos[s] - (px / 2.0, py / 2.0)
        pts = lo + rng.uniform(0.0, 1.0, size=(per, 2)) * (px, py)
        mue_pos[s * per:(s + 1) * per] = pts
        mue_nearest[s * per:(s + 1) * per] = s
    mue_group = sca_group[mue_nearest]

    radius = cfg.small_cell_radius_m * np.sqrt(rng.uniform(0.0, 1.0, cfg.n_sca))
    angle = rng.uniform(0.0, 2.0 * np.pi, cfg.n_sca)
    sue_pos = sca_pos + np.c_[radius * np.cos(angle), radius * np.sin(angle)]

    geom = NetworkGeometry(
        bs_pos=np.zeros(2),
        sca_pos=sca_pos,
        sca_group=sca_group,
        mue_pos=mue_pos,
        mue_group=mue_group,
        mue_nearest_sca=mue_nearest,
        sue_pos=sue_pos,
        sue_serving_sca=np.arange(cfg.n_sca),
        n_antennas=cfg.n_antennas,
        seed=int(seed),
    )
    if geom.load_ratio + geom.nulling_ratio >= 1.0:
        raise ConfigError(
            f"served fraction {geom.load_ratio:.3f} + nulled fraction "
            f"{geom.nulling_ratio:.3f} must stay below 1 for the large-system "
            "solution to exist; add antennas or remove devices")
    return geom
