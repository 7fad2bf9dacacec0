"""Cooperative relaying in wireless networks as an evolutionary game."""

__version__ = "0.1.0"

from .errors import ConfigError  # noqa: E402
from .geometry import Architecture, Position, RelayRegionParams, Topology  # noqa: E402
from .strategies import Strategy  # noqa: E402
from .engine import Protocol, SimConfig, run_simulation  # noqa: E402
from .kernel import BACKEND  # noqa: E402

__all__ = ["Architecture", "BACKEND", "ConfigError", "Position", "Protocol", "RelayRegionParams",
           "SimConfig", "Strategy", "Topology", "run_simulation"]
