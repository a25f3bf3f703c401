import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from backhaul import geometry as g
from backhaul import routing as rt
from backhaul.errors import ParameterError


def lattice(grid=23, seed=0):
    return g.make_lattice_network(grid, 100.0, seed, 0.0)


def test_exact_lattice_rows_are_highways():
    real = lattice(9)
    hs = rt.build_highways(real, 100.0)
    assert len(hs.horizontal_highways) == 9 == len(hs.vertical_highways)
    for j, h in enumerate(sorted(hs.horizontal_highways)):
        assert sorted(h) == [i * 9 + j for i in range(9)] or len(set(real.bs_positions[h][:, 1])) == 1
    assert hs.failed_slabs == 0


def test_empty_cells_give_no_highways():
    # all BSs packed into one corner cell: nothing crosses
    pos = np.array([[0.1, 0.1], [0.2, 0.3], [0.4, 0.2]])
    real = g.NetworkRealization(g.Box(10.0), pos, np.array([1, 2, 0]), 1.0, 0)
    hs = rt.build_highways(real, 2.0)
    assert hs.horizontal_highways == [] and hs.vertical_highways == []
    assert hs.degenerate and hs.failed_slabs == 2 * hs.num_slabs
    with pytest.raises(ParameterError):
        rt.plan_routes(real, hs)


def _check_highways(real, hs):
    pos = real.bs_positions
    for paths, slabs in ((hs.horizontal_highways, hs.horizontal_slab_of),
                         (hs.vertical_highways, hs.vertical_slab_of)):
        for s in set(slabs):
            members = [set(p) for p, k in zip(paths, slabs) if k == s]
            assert sum(map(len, members)) == len(set().union(*members))
        for p in paths:
            if len(p) > 1:
                hop = np.linalg.norm(np.diff(pos[p], axis=0), axis=1)
                assert np.all(hop <= hs.hop_cap + 1e-9)
    assert np.all(hs.slab_assignment >= 0)


@settings(max_examples=15)
@given(st.integers(0, 2**40))
def test_ppp_highways_disjoint_connected_and_crossing(seed):
    real = g.make_ppp_network(16.0, 1.0, seed)
    hs = rt.build_highways(real, 2.0)
    _check_highways(real, hs)
    side = real.box.side_length
    for h in hs.horizontal_highways:
        xs = real.bs_positions[h][:, 0]
        assert xs[0] < 2.0 and xs[-1] >= side - 2.0 - 2.0  # first and last cell columns
    for v in hs.vertical_highways:
        ys = real.bs_positions[v][:, 1]
        assert ys[0] < 2.0 and ys[-1] >= side - 4.0


def _phase_hops_ok(real, hs, plan):
    pos = real.bs_positions
    for r in plan.routes:
        path = r.path
        assert path[0] == r.source and path[-1] == r.dest
        for ph in (2, 3):
            seq = r.phases[ph]
            if len(seq) > 1:
                hop = np.linalg.norm(np.diff(pos[seq], axis=0), axis=1)
                assert np.all(hop <= hs.hop_cap + 1e-9)


@settings(max_examples=10)
@given(st.integers(0, 2**40))
def test_routes_connected_and_load_conserved(seed):
    real = g.make_ppp_network(14.0, 1.0, seed)
    hs = rt.build_highways(real, 2.0)
    if hs.degenerate:
        return
    plan = rt.plan_routes(real, hs)
    _phase_hops_ok(real, hs, plan)
    assert plan.bs_load.sum() == sum(r.hops for r in plan.routes)


def test_same_highway_connection_skips_vertical_phase():
    real = lattice(7)
    hs = rt.build_highways(real, 100.0)
    plan = rt.plan_routes(real, hs)
    for r in plan.routes:
        h = hs.horizontal_highways[r.horizontal]
        if r.dest in h:
            assert r.phases[3] == [] and r.phases[4] == [] and r.phases[1] == []


def test_lattice_load_bound_over_pairings():
    n = 529
    worst = 0
    for seed in range(50):
        real = lattice(23, seed)
        plan = rt.plan_routes(real, rt.build_highways(real, 100.0))
        worst = max(worst, plan.max_highway_load)
        mean_load = n / plan.n_highways
        assert plan.max_highway_load / mean_load <= 4
    assert worst <= 2 * math.sqrt(n)


def test_entry_distance_logarithmic():
    ratios = []
    for n in (100, 400, 1600):
        for seed in range(5):
            real = g.make_ppp_network(math.sqrt(n), 1.0, seed)
            hs = rt.build_highways(real, 2.0)
            plan = rt.plan_routes(real, hs)
            ratios.append(rt.entry_distances(plan, real).max() / math.log(math.sqrt(n)))
    # fitted constant: entry hops stay within a few cells times ln sqrt(n)
    assert max(ratios) <= 4.0


def test_per_connection_rate_examples():
    single = rt.RoutePlan([rt.Route(0, 1, {1: [], 2: [0, 1], 3: [], 4: []}, 0, 0)],
                          np.array([1, 0]), np.array([1, 0]), np.array([1]), np.array([0]),
                          rt.Counter(), rt.Counter(), [])
    assert rt.per_connection_rate(single, 2.5, 2.5)[0].rate == 2.5
    shared = rt.RoutePlan([rt.Route(s, 9, {1: [s, 5], 2: [5, 9], 3: [], 4: []}, 0, 0) for s in range(4)],
                          np.zeros(10, int), np.zeros(10, int), np.array([4]), np.array([0]),
                          rt.Counter({5: 4}), rt.Counter(), [])
    shared.highway_bs_load[5] = 4
    out = rt.per_connection_rate(shared, 100.0, 2.0)
    assert all(v.rate == pytest.approx(0.5) and v.bottleneck == "entry" for v in out.values())
    with pytest.raises(ParameterError):
        rt.per_connection_rate(shared, 0.0, 1.0)


def test_sqrt_n_connections_on_sqrt_n_rate_highway():
    real = lattice(16, 3)
    plan = rt.plan_routes(real, rt.build_highways(real, 100.0))
    rates = rt.per_connection_rate(plan, math.sqrt(256), math.sqrt(256))
    worst = min(r.rate for r in rates.values())
    assert 0.1 <= worst <= 1.0


@settings(max_examples=10)
@given(st.integers(0, 2**40), st.floats(1.0, 5.0))
def test_rate_is_min_of_phase_capacities(seed, entry):
    real = g.make_ppp_network(12.0, 1.0, seed)
    hs = rt.build_highways(real, 2.0)
    if hs.degenerate:
        return
    plan = rt.plan_routes(real, hs)
    rates = rt.per_connection_rate(plan, 4.0, entry)
    for k, r in enumerate(plan.routes):
        c = rates[k].rate
        hw = r.transmitters((2, 3))
        if hw:
            assert c <= 4.0 / max(plan.highway_bs_load[b] for b in hw) + 1e-12
        if r.phases[1]:
            assert c <= entry / plan.entry_share[r.phases[1][1]] + 1e-12


def test_long_hop_examples():
    real = lattice(23, 1)
    pos = real.bs_positions
    res = rt.long_hop_route(real, 250.0)
    assert res.stuck == 0
    dist = np.linalg.norm(pos - pos[real.pairing], axis=1)
    assert np.all(res.hop_counts >= np.ceil(dist / 250.0 - 1e-9))
    assert res.relay_load.sum() == res.hop_counts.sum()
    far = rt.long_hop_route(real, 800.0)
    ratio = far.hop_counts.mean() / (dist.mean() / 800.0)
    assert 1.0 <= ratio <= 2.0
    near = rt.long_hop_route(real, 1e5)
    assert np.all(near.hop_counts == 1)
    with pytest.raises(ParameterError):
        rt.long_hop_route(real, 0.0)


def test_long_hop_stuck_is_counted():
    pos = np.array([[1.0, 1.0], [9.0, 9.0]])
    real = g.NetworkRealization(g.Box(10.0), pos, np.array([1, 0]), 0.02, 0)
    res = rt.long_hop_route(real, 2.0)
    assert res.stuck == 2 and np.all(res.hop_counts == -1)


def test_csv_writers(tmp_path):
    real = lattice(5)
    plan = rt.plan_routes(real, rt.build_highways(real, 100.0))
    p = rt.write_route_csv(plan, tmp_path / "r.csv")
    lines = p.read_text().splitlines()
    assert lines[0] == "conn_id,phase,hop_index,bs_index"
    assert len(lines) - 1 == sum(len(s) for r in plan.routes for s in r.phases.values())
    c = rt.write_highway_census_csv([{"seed": 1, "n": 400, "horizontal": 20, "vertical": 18,
                                      "failed_slabs": 0}], tmp_path / "c.csv")
    assert c.read_text().splitlines() == ["seed,n,horizontal,vertical,failed_slabs", "1,400,20,18,0"]
