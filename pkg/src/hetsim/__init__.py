"""hetsim: large-system power analysis and Monte-Carlo validation for a
reverse-TDD two-tier network (massive-MIMO macro cell + small-cell tier
fed by a wireless backhaul).

The package computes the asymptotic uplink/downlink transmit powers that
meet per-device rate targets under imperfect CSI, evaluates feasibility
walls, and checks every closed form against finite-size Monte-Carlo trials.
"""

__version__ = "0.1.0"

from .config import PathlossModel, ScenarioConfig, csi_error_from_speed, parse_config
from .geometry import NetworkGeometry, build_network
from .channels import ChannelSet, correlation_matrix, draw_channels
from .special import exp_integral_e1, ergodic_rate_of_sinr, invert_ergodic_rate
from .ul import UlSolution, UlTargets, solve_ul_fixed_point, ul_feasibility
from .dl import DlSolution, DlTargets, rzf_asymptotic, zf_asymptotic
from .scenarios import Architecture, build_architecture, expected_interference

__all__ = [
    "PathlossModel",
    "ScenarioConfig",
    "csi_error_from_speed",
    "parse_config",
    "NetworkGeometry",
    "build_network",
    "ChannelSet",
    "correlation_matrix",
    "draw_channels",
    "exp_integral_e1",
    "ergodic_rate_of_sinr",
    "invert_ergodic_rate",
    "UlTargets",
    "UlSolution",
    "solve_ul_fixed_point",
    "ul_feasibility",
    "DlTargets",
    "DlSolution",
    "rzf_asymptotic",
    "zf_asymptotic",
    "Architecture",
    "build_architecture",
    "expected_interference",
    "__version__",
]
