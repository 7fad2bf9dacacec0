"""Two-timescale simulation: slots inside iterations inside replications.

Every slot activates one (transmitter, receiver) pair. Behaviour flags are
frozen during an iteration of ``T`` slots; between iterations the strategy
rule turns each node's fitness improvement into its next flag. All fitness
changes are losses: an unassisted transmitter forgoes the saving
``(1 - nu**alpha) * d**alpha`` it would have had with help, and the relay that
actually retransmits pays its own transmission.
"""

from __future__ import annotations

import enum
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import dense
from .errors import ConfigError
from .geometry import (Architecture, RelayRegionParams, Topology, candidate_table,
                       eligible_relays, sample_topology)
from .kernel import get_backend
from .strategies import (DEFAULT_TIES, Strategy, TieRule, improvement,
                         introduce_initial_cooperator, update_behavior)

log = logging.getLogger(__name__)

N_BINS = 10


class Protocol(enum.Enum):
    P1 = "p1"
    P2 = "p2"


SCALES = {
    "desk": dict(m=30, slots=1000, iters=300, reps=100),
    "paper": dict(m=30, slots=1000, iters=1000, reps=1000),
}


@dataclass(frozen=True)
class SimConfig:
    m: int = 30
    radius: float = 1.0
    alpha: float = 4.0
    nu: float = 0.39
    slots: int = 1000
    iters: int = 300
    reps: int = 100
    architecture: Architecture = Architecture.ADHOC
    strategy: Strategy = Strategy.COOP
    protocol: Protocol = Protocol.P2
    seed: int = 0
    initial_radius: float | None = None
    ties: TieRule = field(default=DEFAULT_TIES)

    def __post_init__(self):
        object.__setattr__(self, "architecture", Architecture(self.architecture))
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        object.__setattr__(self, "protocol", Protocol(self.protocol))
        for name in ("slots", "iters", "reps"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        min_m = 2 if self.architecture is Architecture.ADHOC else 1
        if self.m < min_m:
            raise ConfigError(f"{self.architecture.value} needs at least {min_m} nodes")
        if not self.radius > 0:
            raise ConfigError("radius must be positive")
        if not self.alpha > 1:
            raise ConfigError("path-loss exponent must exceed 1")
        central = self.architecture is Architecture.CENTRAL
        if self.strategy is Strategy.MINIMAL and not central:
            raise ConfigError("MINIMAL routing needs the central-sink architecture")
        if self.initial_radius is not None and not central:
            raise ConfigError("placing the initial cooperator by radius needs a central sink")
        RelayRegionParams(self.nu, self.alpha)

    @property
    def region(self) -> RelayRegionParams:
        return RelayRegionParams(self.nu, self.alpha)

    @classmethod
    def at_scale(cls, scale: str = "desk", **kw) -> "SimConfig":
        if scale not in SCALES:
            raise ConfigError(f"unknown scale {scale!r}; choose from {sorted(SCALES)}")
        return cls(**{**SCALES[scale], **kw})

    def snapshot(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, enum.Enum):
                out[k] = v.value
        out["ties"] = asdict(self.ties)
        return out


class SlotOutcome(NamedTuple):
    tx: int
    rx: int
    relay: int | None
    tx_energy: float
    relay_energy: float

    @property
    def assisted(self) -> bool:
        return self.relay is not None


class Indicators(NamedTuple):
    """Per-node slot indicators: transmitting, helped, in the relay region, cooperator."""

    transmitting: np.ndarray
    helped: np.ndarray
    in_region: np.ndarray
    cooperator: np.ndarray


@dataclass
class FitnessLedger:
    fitness: np.ndarray
    gain: np.ndarray
    prev_gain: np.ndarray | None = None
    energy: np.ndarray = None

    @classmethod
    def fresh(cls, m: int, f0: float = 0.0) -> "FitnessLedger":
        return cls(np.full(m, f0), np.zeros(m), None, np.zeros(m))

    def roll(self):
        """Start a new iteration: the current gain becomes the previous one."""
        self.prev_gain = self.gain
        self.gain = np.zeros_like(self.gain)


@dataclass
class SimState:
    config: SimConfig
    topology: Topology
    behaviors: np.ndarray
    ledger: FitnessLedger
    pw: np.ndarray = None
    start: np.ndarray = None
    idx: np.ndarray = None
    fixed_relay: np.ndarray = None

    @classmethod
    def build(cls, config: SimConfig, topology: Topology, behaviors=None) -> "SimState":
        m = topology.m
        if behaviors is None:
            behaviors = np.full(m, config.strategy.all_cooperate)
        pw = np.ascontiguousarray(topology.distance_matrix() ** config.alpha)
        if config.strategy is Strategy.MINIMAL:
            fixed = minimal_relays(topology, config.alpha)
            start = np.zeros(1, dtype=np.int64)
            idx = np.zeros(0, dtype=np.int64)
        else:
            fixed = np.zeros(0, dtype=np.int64)
            start, idx = candidate_table(topology, config.region)
        return cls(config, topology, np.asarray(behaviors, dtype=bool), FitnessLedger.fresh(m),
                   pw, start, idx, fixed)


def minimal_relays(topology: Topology, alpha: float) -> np.ndarray:
    """Relay used by each node under MINIMAL routing, -1 for direct.

    A node at radius ``x`` aims at the point ``x * y*(1)`` on its line to the
    sink, where ``y*`` minimises the dense-network energy density, and uses
    the closest other node to that point, unless the two hops together cost
    more than going direct.
    """
    y1, _ = dense.q_min(1.0, alpha)
    coords = topology.coords
    targets = coords * y1
    d = np.hypot(*(targets[:, None, :] - coords[None, :, :]).transpose(2, 0, 1))
    np.fill_diagonal(d, np.inf)
    relay = np.argmin(d, axis=1)
    if topology.m == 1:
        return np.full(1, -1, dtype=np.int64)
    hop1 = np.hypot(*(coords - coords[relay]).T) ** alpha
    hop2 = np.hypot(*coords[relay].T) ** alpha
    direct = np.hypot(*coords.T) ** alpha
    return np.where(hop1 + hop2 > direct, -1, relay).astype(np.int64)


# -- slots ----------------------------------------------------------------------

def pick_pairs(topology: Topology, rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``n`` random (tx, rx) pairs: uniform ordered pairs, or uniform tx to the sink."""
    m = topology.m
    tx = rng.integers(0, m, size=n, dtype=np.int64)
    if topology.architecture is Architecture.CENTRAL:
        return tx, np.full(n, m, dtype=np.int64)
    rx = rng.integers(0, m - 1, size=n, dtype=np.int64)
    rx += rx >= tx
    return tx, rx


def pick_pair(topology: Topology, rng: np.random.Generator) -> tuple[int, int]:
    tx, rx = pick_pairs(topology, rng, 1)
    return int(tx[0]), int(rx[0])


def run_slot(state: SimState, pair: tuple[int, int]) -> SlotOutcome:
    """Play one slot directly from the geometry; the readable reference path."""
    cfg, topo = state.config, state.topology
    tx, rx = pair
    pw = state.pw
    nu_a = cfg.nu ** cfg.alpha
    relay = None
    if cfg.strategy is Strategy.MINIMAL:
        r = int(state.fixed_relay[tx])
        relay = r if r >= 0 else None
    else:
        cands = eligible_relays(topo, state.behaviors, tx, rx, cfg.region)
        if cands:
            if cfg.protocol is Protocol.P2:
                relay = cands[0]
            else:
                relay = min(cands, key=lambda c: (pw[tx, c], c))
    led = state.ledger
    if relay is None:
        tx_e, relay_e = pw[tx, rx], 0.0
        df = -(1.0 - nu_a) * pw[tx, rx]
        led.fitness[tx] += df
        led.gain[tx] += df
    else:
        if cfg.protocol is Protocol.P2 and cfg.strategy is not Strategy.MINIMAL:
            tx_e = nu_a * pw[tx, rx]
        else:
            tx_e = pw[tx, relay]
        relay_e = pw[relay, rx]
        led.fitness[relay] -= relay_e
        led.gain[relay] -= relay_e
        led.energy[relay] += relay_e
    led.energy[tx] += tx_e
    return SlotOutcome(tx, rx, relay, float(tx_e), float(relay_e))


def slot_indicators(state: SimState, pair: tuple[int, int]) -> Indicators:
    tx, rx = pair
    m = state.topology.m
    cands = eligible_relays(state.topology, state.behaviors, tx, rx, state.config.region)
    transmitting = np.zeros(m, dtype=bool)
    transmitting[tx] = True
    helped = transmitting & bool(cands)
    in_region = np.zeros(m, dtype=bool)
    in_region[cands] = True
    return Indicators(transmitting, helped, in_region, state.behaviors.copy())


def run_iteration(state: SimState, tx: np.ndarray, rx: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Play one block of slots with frozen flags; return each node's fitness change.

    The ledger is rolled first, so afterwards ``gain`` holds this block and
    ``prev_gain`` the one before. Fitness carries over between blocks.
    """
    m = state.topology.m
    g_tx, g_relay = np.zeros(m), np.zeros(m)
    e_tx, e_relay = np.zeros(m), np.zeros(m)
    cfg = state.config
    get_backend(backend)(np.ascontiguousarray(tx, dtype=np.int64),
                         np.ascontiguousarray(rx, dtype=np.int64),
                         state.behaviors.astype(np.uint8), state.start, state.idx, state.pw,
                         state.fixed_relay, cfg.nu ** cfg.alpha,
                         1 if cfg.protocol is Protocol.P1 else 2,
                         g_tx, g_relay, e_tx, e_relay)
    gain = g_tx + g_relay
    led = state.ledger
    led.roll()
    led.gain = gain
    led.fitness = led.fitness + gain
    led.energy = led.energy + e_tx + e_relay
    return gain


# -- replications -----------------------------------------------------------------

def replication_streams(seed: int, rep: int):
    """Independent (topology, pairs, placement) generators for one replication.

    Derived only from ``(seed, rep)``, so every strategy and every ``nu`` sees
    the same topologies and the same pair sequence.
    """
    ss = np.random.SeedSequence([seed, rep])
    return [np.random.default_rng(s) for s in ss.spawn(3)]


def replication_topology(config: SimConfig, rep: int) -> Topology:
    topo_rng, _, _ = replication_streams(config.seed, rep)
    return sample_topology(config.m, config.radius, config.architecture, topo_rng)


def pair_log(config: SimConfig, rep: int, topology: Topology | None = None):
    """The full (iters, slots) pair sequence a replication will play."""
    topology = topology or replication_topology(config, rep)
    _, pair_rng, _ = replication_streams(config.seed, rep)
    # drawn block by block, exactly as run_replication does
    blocks = [pick_pairs(topology, pair_rng, config.slots) for _ in range(config.iters)]
    return np.stack([b[0] for b in blocks]), np.stack([b[1] for b in blocks])


@dataclass
class ReplicationResult:
    energy: np.ndarray      # per node, mean per iteration
    radii: np.ndarray
    coop_count: np.ndarray  # per iteration, flags in force during it
    assisted: int


def run_replication(config: SimConfig, rep: int, backend: str | None = None) -> ReplicationResult:
    topo_rng, pair_rng, place_rng = replication_streams(config.seed, rep)
    topo = sample_topology(config.m, config.radius, config.architecture, topo_rng)
    state = SimState.build(config, topo)
    rule = config.strategy
    coop = np.zeros(config.iters, dtype=np.int64)
    m = topo.m
    g_tx, g_relay = np.zeros(m), np.zeros(m)
    e_tx, e_relay = np.zeros(m), np.zeros(m)
    kernel = get_backend(backend)
    nu_a = config.nu ** config.alpha
    proto = 1 if config.protocol is Protocol.P1 else 2
    prev = None
    assisted = 0
    for n in range(config.iters):
        tx, rx = pick_pairs(topo, pair_rng, config.slots)
        coop[n] = state.behaviors.sum()
        g_tx[:] = 0.0
        g_relay[:] = 0.0
        assisted += kernel(tx, rx, state.behaviors.view(np.uint8), state.start, state.idx,
                           state.pw, state.fixed_relay, nu_a, proto, g_tx, g_relay, e_tx, e_relay)
        gain = g_tx + g_relay
        if rule.adaptive:
            if n == 0:
                state.behaviors = introduce_initial_cooperator(
                    state.behaviors, topo, place_rng, at_radius=config.initial_radius)
            else:
                state.behaviors = update_behavior(rule, state.behaviors,
                                                  improvement(gain, prev), config.ties)
        prev = gain
    energy = (e_tx + e_relay) / config.iters
    return ReplicationResult(energy, topo.radii(), coop, assisted)


@dataclass
class SimulationResult:
    config: SimConfig
    energy: np.ndarray       # (reps, M) mean energy per node per iteration
    radii: np.ndarray        # (reps, M)
    coop_count: np.ndarray   # (reps, iters)
    assisted: np.ndarray     # (reps,)

    @property
    def coop_fraction(self) -> np.ndarray:
        """Cooperator fraction per iteration, averaged over replications."""
        return self.coop_count.mean(axis=0) / self.config.m

    @property
    def final_fraction(self) -> np.ndarray:
        """Per-replication cooperator fraction in the last iteration."""
        return self.coop_count[:, -1] / self.config.m

    @property
    def mean_energy(self) -> float:
        return float(self.energy.mean())

    @property
    def std_energy(self) -> float:
        return float(self.energy.std())

    def radial_profile(self, bins: int = N_BINS) -> tuple[np.ndarray, np.ndarray]:
        """Bin centres over ``[0, R]`` and mean node energy in each bin (NaN if empty)."""
        edges = np.linspace(0.0, self.config.radius, bins + 1)
        which = np.clip(np.digitize(self.radii.ravel(), edges) - 1, 0, bins - 1)
        sums = np.bincount(which, weights=self.energy.ravel(), minlength=bins)
        counts = np.bincount(which, minlength=bins)
        with np.errstate(invalid="ignore", divide="ignore"):
            means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        return (edges[:-1] + edges[1:]) / 2.0, means


def worker_count() -> int:
    env = os.environ.get("COOPNET_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"COOPNET_WORKERS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _run_chunk(args):
    config, reps, backend = args
    return [run_replication(config, r, backend) for r in reps]


def run_simulation(config: SimConfig, workers: int | None = None,
                   backend: str | None = None) -> SimulationResult:
    """Run all replications, optionally across worker processes.

    Each replication's random streams depend only on ``(seed, rep)`` and the
    results are stacked in replication order, so the output is identical for
    any worker count.
    """
    workers = worker_count() if workers is None else max(1, workers)
    reps = list(range(config.reps))
    if workers == 1 or config.reps == 1:
        results = _run_chunk((config, reps, backend))
    else:
        chunks = [reps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(config, c, backend) for c in chunks]))
        by_rep = {}
        for chunk, part in zip(chunks, parts):
            by_rep.update(zip(chunk, part))
        results = [by_rep[r] for r in reps]
    return SimulationResult(
        config=config,
        energy=np.stack([r.energy for r in results]),
        radii=np.stack([r.radii for r in results]),
        coop_count=np.stack([r.coop_count for r in results]),
        assisted=np.array([r.assisted for r in results]),
    )


def with_strategy(config: SimConfig, strategy, **kw) -> SimConfig:
    return replace(config, strategy=Strategy(strategy), **kw)
