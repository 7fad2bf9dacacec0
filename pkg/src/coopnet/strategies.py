"""Behaviour-update rules applied between iterations."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .geometry import Topology


class Strategy(enum.Enum):
    DEF = "def"
    COOP = "coop"
    TFT = "tft"
    WSLS = "wsls"
    MINIMAL = "minimal"

    @property
    def adaptive(self) -> bool:
        return self in (Strategy.TFT, Strategy.WSLS)

    @property
    def all_cooperate(self) -> bool:
        return self in (Strategy.COOP, Strategy.MINIMAL)


@dataclass(frozen=True)
class TieRule:
    """What an exactly-zero improvement means.

    ``wsls_stay``: WSLS keeps its flag on a zero improvement (a loss must be
    strict to shift). ``tft_cooperate``: TFT cooperates on a zero improvement.
    """

    wsls_stay: bool = True
    tft_cooperate: bool = False


DEFAULT_TIES = TieRule()

# Relative size below which a change in per-iteration fitness counts as zero.
# Two iterations with the same charges in a different order differ only by
# rounding, and that must not decide a flip.
ZERO_RTOL = 1e-12


def improvement(gain: np.ndarray, prev_gain: np.ndarray, rtol: float = ZERO_RTOL) -> np.ndarray:
    """Second difference of fitness, with rounding-level changes snapped to 0."""
    delta = gain - prev_gain
    scale = np.abs(gain) + np.abs(prev_gain)
    delta[np.abs(delta) <= rtol * scale] = 0.0
    return delta


def update_behavior(rule: Strategy | str, current: np.ndarray, improvement: np.ndarray,
                    ties: TieRule = DEFAULT_TIES) -> np.ndarray:
    rule = Strategy(rule)
    current = np.asarray(current, dtype=bool)
    improvement = np.asarray(improvement, dtype=float)
    if rule is Strategy.DEF:
        return np.zeros_like(current)
    if rule.all_cooperate:
        return np.ones_like(current)
    if rule is Strategy.WSLS:
        shift = improvement < 0 if ties.wsls_stay else improvement <= 0
        return current ^ shift
    # TFT
    return improvement >= 0 if ties.tft_cooperate else improvement > 0


def introduce_initial_cooperator(behaviors: np.ndarray, topology: Topology,
                                 rng: np.random.Generator,
                                 at_radius: float | None = None) -> np.ndarray:
    """Turn one defector into a cooperator.

    With ``at_radius`` the node whose distance from the centre is closest to it
    is chosen (lowest id on ties); otherwise a uniformly random node.
    """
    out = np.array(behaviors, dtype=bool, copy=True)
    if at_radius is None:
        k = int(rng.integers(len(out)))
    else:
        k = int(np.argmin(np.abs(topology.radii() - at_radius)))
    out[k] = True
    return out
