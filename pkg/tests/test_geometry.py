import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coopnet.errors import ConfigError
from coopnet.geometry import (Architecture, Position, RelayRegionParams, Topology,
                              candidate_table, distance, eligible_relays, sample_topology)


def line_topology(points, arch=Architecture.ADHOC):
    return Topology(1.0, arch, np.asarray(points, dtype=float))


def brute_force(topo, flags, tx, rx, nu):
    pts = topo.endpoints()
    d_ab = math.dist(pts[tx], pts[rx])
    keep = [c for c in range(topo.m)
            if c not in (tx, rx) and flags[c]
            and math.dist(pts[tx], pts[c]) <= nu * d_ab
            and math.dist(pts[c], pts[rx]) <= d_ab]
    return sorted(keep, key=lambda c: (math.dist(pts[c], pts[rx]), c))


class TestSampling:
    def test_too_few_nodes(self):
        with pytest.raises(ConfigError):
            sample_topology(0, 1.0, "adhoc", np.random.default_rng(0))
        with pytest.raises(ConfigError):
            sample_topology(1, 1.0, "adhoc", np.random.default_rng(0))
        sample_topology(1, 1.0, "central", np.random.default_rng(0))

    def test_bad_radius(self):
        with pytest.raises(ConfigError):
            sample_topology(5, 0.0, "adhoc", np.random.default_rng(0))

    def test_deterministic(self):
        a = sample_topology(30, 1.0, "adhoc", np.random.default_rng(42))
        b = sample_topology(30, 1.0, "adhoc", np.random.default_rng(42))
        assert np.array_equal(a.coords, b.coords)

    def test_inside_disk(self):
        t = sample_topology(1000, 2.5, "central", np.random.default_rng(1))
        assert t.radii().max() <= 2.5
        assert t.sink == Position(0.0, 0.0)
        assert t.sink_id == 1000
        assert len(t.nodes) == 1000

    def test_mean_radius(self):
        # uniform over the area: E[r] = 2R/3
        t = sample_topology(100_000, 1.0, "adhoc", np.random.default_rng(3))
        assert abs(t.radii().mean() - 2 / 3) < 0.01 * 2 / 3


class TestDistance:
    def test_values(self):
        assert distance((0, 0), (0, 0)) == 0
        assert distance((0, 0), (3, 4)) == 5

    @given(st.tuples(*[st.floats(-10, 10)] * 4))
    def test_symmetric(self, v):
        a, b = v[:2], v[2:]
        assert distance(a, b) == distance(b, a) >= 0


class TestEligibility:
    def test_inside_nu_disk(self):
        topo = line_topology([(0, 0), (1, 0), (0.2, 0)])
        assert eligible_relays(topo, [True] * 3, 0, 1, RelayRegionParams(0.39)) == [2]

    def test_outside_nu_disk(self):
        topo = line_topology([(0, 0), (1, 0), (0.5, 0)])
        assert eligible_relays(topo, [True] * 3, 0, 1, RelayRegionParams(0.39)) == []

    def test_defector_excluded(self):
        topo = line_topology([(0, 0), (1, 0), (0.2, 0)])
        assert eligible_relays(topo, [True, True, False], 0, 1, RelayRegionParams(0.39)) == []

    def test_order_and_ties(self):
        # 2 and 3 are mirror images: same distance to rx, lower id first
        topo = line_topology([(0, 0), (1, 0), (0.1, 0.1), (0.1, -0.1), (0.05, 0)])
        got = eligible_relays(topo, [True] * 5, 0, 1, RelayRegionParams(0.39))
        assert got == [2, 3, 4]

    def test_sink_receiver(self):
        topo = line_topology([(1, 0), (0.8, 0), (0.3, 0)], Architecture.CENTRAL)
        assert eligible_relays(topo, [True] * 3, 0, topo.sink_id, RelayRegionParams(0.39)) == [1]

    def test_params_validation(self):
        with pytest.raises(ConfigError):
            RelayRegionParams(nu=1.5)
        with pytest.raises(ConfigError):
            RelayRegionParams(path_loss_exp=0)
        RelayRegionParams(path_loss_exp=5)  # accepted, only logged

    @pytest.mark.parametrize("arch", ["adhoc", "central"])
    @pytest.mark.parametrize("seed", range(4))
    def test_exhaustive_oracle(self, arch, seed):
        rng = np.random.default_rng(seed)
        topo = sample_topology(25, 1.0, arch, rng)
        flags = rng.random(25) < 0.6
        prm = RelayRegionParams(0.39 + 0.1 * seed)
        for tx in range(topo.m):
            for rx in range(len(topo.endpoints())):
                if tx != rx:
                    assert eligible_relays(topo, flags, tx, rx, prm) == brute_force(topo, flags, tx, rx, prm.nu)

    @pytest.mark.parametrize("arch", ["adhoc", "central"])
    def test_candidate_table_matches(self, arch):
        topo = sample_topology(30, 1.0, arch, np.random.default_rng(9))
        prm = RelayRegionParams(0.5)
        start, idx = candidate_table(topo, prm)
        n_end = len(topo.endpoints())
        everyone = np.ones(topo.m, dtype=bool)
        for tx in range(topo.m):
            for rx in range(n_end):
                if tx != rx:
                    p = tx * n_end + rx
                    assert list(idx[start[p]:start[p + 1]]) == eligible_relays(topo, everyone, tx, rx, prm)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), lam=st.floats(0.01, 100))
    def test_scale_invariant(self, seed, lam):
        rng = np.random.default_rng(seed)
        topo = sample_topology(15, 1.0, "adhoc", rng)
        big = Topology(lam, topo.architecture, topo.coords * lam)
        flags = np.ones(15, dtype=bool)
        prm = RelayRegionParams(0.45)
        for tx, rx in [(0, 1), (2, 7), (14, 3)]:
            assert eligible_relays(topo, flags, tx, rx, prm) == eligible_relays(big, flags, tx, rx, prm)

    def test_zero_nu_empty_unless_colocated(self):
        topo = sample_topology(20, 1.0, "adhoc", np.random.default_rng(5))
        prm = RelayRegionParams(0.0)
        flags = np.ones(20, dtype=bool)
        assert all(eligible_relays(topo, flags, a, b, prm) == []
                   for a in range(20) for b in range(20) if a != b)
        twin = line_topology([(0, 0), (1, 0), (0, 0)])
        assert eligible_relays(twin, [True] * 3, 0, 1, prm) == [2]
