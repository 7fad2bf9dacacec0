"""Random disk topologies, distances and relay-eligibility regions."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError

log = logging.getLogger(__name__)


class Architecture(enum.Enum):
    ADHOC = "adhoc"
    CENTRAL = "central"


class Position(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Topology:
    """Node coordinates inside a disk of radius ``radius``.

    ``coords`` has shape ``(M, 2)``. For the central-sink architecture the sink
    sits at the origin and is addressed by the node id ``M`` (one past the last
    regular node); it is never part of ``coords``.
    """

    radius: float
    architecture: Architecture
    coords: np.ndarray

    @property
    def m(self) -> int:
        return len(self.coords)

    @property
    def nodes(self) -> list[Position]:
        return [Position(float(x), float(y)) for x, y in self.coords]

    @property
    def sink(self) -> Position | None:
        if self.architecture is Architecture.CENTRAL:
            return Position(0.0, 0.0)
        return None

    @property
    def sink_id(self) -> int | None:
        return self.m if self.architecture is Architecture.CENTRAL else None

    def endpoints(self) -> np.ndarray:
        """Coordinates of every addressable endpoint (nodes, then the sink)."""
        if self.architecture is Architecture.CENTRAL:
            return np.vstack([self.coords, np.zeros((1, 2))])
        return self.coords

    def radii(self) -> np.ndarray:
        return np.hypot(self.coords[:, 0], self.coords[:, 1])

    def distance_matrix(self) -> np.ndarray:
        pts = self.endpoints()
        diff = pts[:, None, :] - pts[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(frozen=True)
class RelayRegionParams:
    nu: float = 0.39
    path_loss_exp: float = 4.0

    def __post_init__(self):
        if not 0.0 <= self.nu <= 1.0:
            raise ConfigError(f"nu must lie in [0, 1], got {self.nu}")
        if not self.path_loss_exp > 0:
            raise ConfigError(f"path-loss exponent must be positive, got {self.path_loss_exp}")
        if not 2.0 <= self.path_loss_exp <= 4.0:
            log.info("path-loss exponent %g outside the usual [2, 4] range", self.path_loss_exp)


def sample_topology(m: int, radius: float, architecture: Architecture | str,
                    rng: np.random.Generator) -> Topology:
    """Place ``m`` nodes uniformly over the area of a disk of radius ``radius``."""
    architecture = Architecture(architecture)
    min_m = 2 if architecture is Architecture.ADHOC else 1
    if not isinstance(m, (int, np.integer)) or m < min_m:
        raise ConfigError(f"{architecture.value} topology needs at least {min_m} nodes, got {m}")
    if not radius > 0:
        raise ConfigError(f"radius must be positive, got {radius}")
    u = rng.random(m)
    theta = rng.random(m) * (2.0 * math.pi)
    r = radius * np.sqrt(u)
    coords = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    return Topology(float(radius), architecture, coords)


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def eligible_relays(topology: Topology, behaviors: Sequence[bool], tx: int, rx: int,
                    params: RelayRegionParams) -> list[int]:
    """Cooperating nodes that may relay the transmission ``tx -> rx``.

    A node qualifies when it is a cooperator, is neither endpoint, lies within
    ``nu * d(tx, rx)`` of the transmitter and no farther than ``d(tx, rx)`` from
    the receiver. The result is ordered by distance to the receiver, then id.
    """
    if tx == rx:
        raise ValueError("transmitter and receiver must differ")
    pts = topology.endpoints()
    d_ab = distance(pts[tx], pts[rx])
    out = []
    for c in range(topology.m):
        if c == tx or c == rx or not behaviors[c]:
            continue
        if distance(pts[tx], pts[c]) <= params.nu * d_ab and distance(pts[c], pts[rx]) <= d_ab:
            out.append(c)
    out.sort(key=lambda c: (distance(pts[c], pts[rx]), c))
    return out


def candidate_table(topology: Topology, params: RelayRegionParams) -> tuple[np.ndarray, np.ndarray]:
    """Geometric relay candidates for every ordered (tx, rx) pair, in CSR form.

    Returns ``(start, idx)``: the candidates of the pair ``tx * E + rx`` (``E``
    endpoints) are ``idx[start[p]:start[p + 1]]``, sorted by distance to ``rx``
    then id. Behaviour flags are applied later by the kernel, which simply
    skips defectors while scanning a list.
    """
    d = topology.distance_matrix()
    n_end = d.shape[0]
    m = topology.m
    d_ab = d[:, :, None]
    d_ac = d[:, None, :m]
    d_cb = d.T[None, :, :m]
    ok = (d_ac <= params.nu * d_ab) & (d_cb <= d_ab)
    ids = np.arange(m)
    ok &= ids[None, None, :] != np.arange(n_end)[:, None, None]
    ok &= ids[None, None, :] != np.arange(n_end)[None, :, None]
    counts = ok.sum(axis=2).ravel()
    start = np.zeros(n_end * n_end + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    idx = np.empty(start[-1], dtype=np.int64)
    for p in np.flatnonzero(counts):
        tx, rx = divmod(int(p), n_end)
        cand = np.flatnonzero(ok[tx, rx])
        # lexsort: last key is primary
        order = np.lexsort((cand, d[cand, rx]))
        idx[start[p]:start[p + 1]] = cand[order]
    return start, idx
