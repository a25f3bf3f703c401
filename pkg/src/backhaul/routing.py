"""Highway construction, four-phase short-hop routing and greedy long hops.

Highways come from the open-cell picture of the network. The box is tiled
with square cells, and a cell is open when it holds at least one BS. Each
horizontal slab of ``round(ln sqrt(n))`` cell rows is searched for the largest
family of BS-disjoint left-to-right crossings through 4-adjacent open cells.
This is a max-flow problem in which a cell's capacity is its BS count, so
each crossing takes one distinct BS from every cell it traverses. BSs are
handed out nearest-to-center first. Vertical highways use the same
construction on the transposed box.
"""

from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np
from networkx.algorithms.flow import edmonds_karp
from scipy.spatial import cKDTree

from .errors import ParameterError
from .geometry import NetworkRealization


@dataclass(eq=False)
class HighwaySystem:
    horizontal_highways: list
    vertical_highways: list
    slab_height: int
    slab_assignment: np.ndarray  # (n_bs, 2): horizontal id, vertical id (-1 if none)
    percolation_cell_side: float
    hop_cap: float
    horizontal_slab_of: list = field(default_factory=list)
    vertical_slab_of: list = field(default_factory=list)
    failed_horizontal_slabs: int = 0
    failed_vertical_slabs: int = 0
    num_slabs: int = 0

    @property
    def failed_slabs(self) -> int:
        return self.failed_horizontal_slabs + self.failed_vertical_slabs

    @property
    def degenerate(self) -> bool:
        return not self.horizontal_highways or not self.vertical_highways


def _cell_grid(xy: np.ndarray, side: float, cell_side: float):
    m = max(1, int(math.floor(side / cell_side + 1e-9)))
    cells = np.minimum((xy / cell_side).astype(np.int64), m - 1)
    return m, cells


def _cell_members(cells: np.ndarray, xy: np.ndarray, cell_side: float) -> dict:
    """Map cell -> BS indices ordered by distance to the cell center, then index."""
    centers = (cells + 0.5) * cell_side
    dist = np.linalg.norm(xy - centers, axis=1)
    members = defaultdict(list)
    for b in np.lexsort((np.arange(len(xy)), dist)):
        members[tuple(cells[b])].append(int(b))
    return members


def _slab_rows(m: int, height: int) -> list:
    """Split ``m`` rows into slabs of ``height`` rows; the remainder joins the last slab."""
    count = max(1, m // height)
    bounds = [i * height for i in range(count)] + [m]
    return [range(bounds[i], bounds[i + 1]) for i in range(count)]


def _decompose(flow: dict, source, sink) -> list:
    """Split an integral flow into simple source-sink paths, cancelling cycles."""
    residual = {u: {v: f for v, f in nbrs.items() if f > 0} for u, nbrs in flow.items()}
    for u in list(residual):
        for v in list(residual[u]):
            back = residual.get(v, {}).get(u, 0)
            if back and residual[u].get(v, 0):
                k = min(back, residual[u][v])
                residual[u][v] -= k
                residual[v][u] -= k
    paths = []
    while any(f > 0 for f in residual[source].values()):
        path, pos = [source], {source: 0}
        while path[-1] != sink:
            u = path[-1]
            v = min(w for w, f in residual[u].items() if f > 0)
            if v in pos:  # cycle: cancel it and rewind
                cyc = path[pos[v]:] + [v]
                for a, b in zip(cyc, cyc[1:]):
                    residual[a][b] -= 1
                for w in path[pos[v] + 1:]:
                    del pos[w]
                path = path[:pos[v] + 1]
                continue
            pos[v] = len(path)
            path.append(v)
        for a, b in zip(path, path[1:]):
            residual[a][b] -= 1
        paths.append(path)
    return paths


def _slab_crossings(counts: dict, rows: range, m: int) -> list:
    """Max BS-disjoint left->right crossings through open cells of one slab.

    Cells are keyed ``(col, row)``. Returns a list of cell sequences.
    """
    G = nx.DiGraph()
    src, snk = "s", "t"
    open_cells = [(c, r) for r in rows for c in range(m) if counts.get((c, r), 0) > 0]
    if not open_cells:
        return []
    for cell in open_cells:
        G.add_edge(("in", cell), ("out", cell), capacity=counts[cell])
    for c, r in open_cells:
        # neighbour order: straight ahead first keeps lattice rows straight
        for dc, dr in ((1, 0), (0, 1), (0, -1), (-1, 0)):
            nb = (c + dc, r + dr)
            if nb in counts and counts[nb] > 0 and nb[1] in rows:
                G.add_edge(("out", (c, r)), ("in", nb))
        if c == 0:
            G.add_edge(src, ("in", (c, r)))
        if c == m - 1:
            G.add_edge(("out", (c, r)), snk)
    if src not in G or snk not in G:
        return []
    value, flow = nx.maximum_flow(G, src, snk, flow_func=edmonds_karp)
    if value == 0:
        return []
    node_paths = _decompose(flow, src, snk)
    return [[node[1] for node in p[1:-1] if node[0] == "in"] for p in node_paths]


def _build_orientation(xy: np.ndarray, side: float, cell_side: float, height: int):
    """Crossings in the +x direction; returns highways, slab ids and failure count."""
    m, cells = _cell_grid(xy, side, cell_side)
    counts = Counter(map(tuple, cells))
    members = _cell_members(cells, xy, cell_side)
    highways, slab_of, failed = [], [], 0
    slabs = _slab_rows(m, height)
    for s, rows in enumerate(slabs):
        crossings = _slab_crossings(counts, rows, m)
        if not crossings:
            failed += 1
            continue
        used = Counter()
        # hand out representatives in a fixed order: by mean row, then by path
        order = sorted(range(len(crossings)),
                       key=lambda k: (np.mean([c[1] for c in crossings[k]]), crossings[k]))
        for k in order:
            path = []
            for cell in crossings[k]:
                path.append(members[cell][used[cell]])
                used[cell] += 1
            highways.append(path)
            slab_of.append(s)
    return highways, slab_of, failed, slabs, cells


def _assign(xy_cross: np.ndarray, cells_row: np.ndarray, highways: list, slab_of: list,
            slabs: list, positions: np.ndarray) -> np.ndarray:
    """Associate every BS with one highway of its slab, balancing counts.

    Inside a slab the BSs, ordered by the cross coordinate, are split into
    contiguous equal groups matched to the slab's highways in the same order.
    BSs of a slab without highways fall back to the nearest highway BS.
    """
    n_bs = len(xy_cross)
    out = np.full(n_bs, -1, dtype=np.int64)
    if not highways:
        return out
    slab_index = np.zeros(n_bs, dtype=np.int64)
    for s, rows in enumerate(slabs):
        slab_index[(cells_row >= rows.start) & (cells_row < rows.stop)] = s
    by_slab = defaultdict(list)
    for h, s in enumerate(slab_of):
        by_slab[s].append(h)
    hw_nodes = np.concatenate([np.asarray(h) for h in highways])
    hw_ids = np.concatenate([np.full(len(h), k) for k, h in enumerate(highways)])
    tree = cKDTree(positions[hw_nodes])
    for s in range(len(slabs)):
        bs = np.nonzero(slab_index == s)[0]
        if not len(bs):
            continue
        hs = by_slab.get(s)
        if not hs:
            _, nearest = tree.query(positions[bs])
            out[bs] = hw_ids[nearest]
            continue
        hs = sorted(hs, key=lambda h: (float(np.mean(xy_cross[highways[h]])), h))
        bs = bs[np.lexsort((bs, xy_cross[bs]))]
        groups = np.array_split(bs, len(hs))
        for h, g in zip(hs, groups):
            out[g] = h
    return out


def default_slab_height(n: float) -> int:
    return max(1, int(round(math.log(math.sqrt(n))))) if n > 1 else 1


def build_highways(realization: NetworkRealization, cell_side: float,
                   slab_height: int | None = None) -> HighwaySystem:
    if not cell_side > 0:
        raise ParameterError("cell_side must be positive")
    pos = realization.bs_positions
    side = realization.box.side_length
    height = slab_height or default_slab_height(realization.n)
    h_hw, h_slab, h_fail, slabs, cells = _build_orientation(pos, side, cell_side, height)
    # vertical: top -> bottom crossings are +x crossings of the transposed box
    v_hw, v_slab, v_fail, vslabs, vcells = _build_orientation(pos[:, ::-1], side, cell_side, height)
    assign = np.stack([
        _assign(pos[:, 1], cells[:, 1], h_hw, h_slab, slabs, pos),
        _assign(pos[:, 0], vcells[:, 1], v_hw, v_slab, vslabs, pos),
    ], axis=1) if len(pos) else np.zeros((0, 2), np.int64)
    return HighwaySystem(h_hw, v_hw, height, assign, cell_side, cell_side * math.sqrt(5.0),
                         h_slab, v_slab, h_fail, v_fail, len(slabs))


# -- route planning --------------------------------------------------------------

PHASES = (1, 2, 3, 4)


@dataclass(eq=False)
class Route:
    source: int
    dest: int
    phases: dict  # phase -> BS sequence including the phase's first node
    horizontal: int = -1
    vertical: int = -1

    @property
    def path(self) -> list:
        out = [self.source]
        for ph in PHASES:
            for b in self.phases.get(ph, []):
                if b != out[-1]:
                    out.append(b)
        return out

    @property
    def hops(self) -> int:
        return len(self.path) - 1

    def transmitters(self, phases=PHASES) -> list:
        tx = []
        for ph in phases:
            seq = self.phases.get(ph, [])
            tx.extend(seq[:-1])
        return tx


@dataclass(eq=False)
class RoutePlan:
    routes: list
    bs_load: np.ndarray
    highway_bs_load: np.ndarray
    horizontal_load: np.ndarray
    vertical_load: np.ndarray
    entry_share: Counter
    exit_share: Counter
    unroutable: list

    @property
    def max_highway_load(self) -> int:
        return int(max(self.horizontal_load.max(initial=0), self.vertical_load.max(initial=0)))

    @property
    def n_highways(self) -> int:
        return len(self.horizontal_load) + len(self.vertical_load)


def _segment(highway: list, pos_of: dict, a: int, b: int) -> list:
    i, j = pos_of[a], pos_of[b]
    step = 1 if j >= i else -1
    return highway[i:j + step if j + step >= 0 else None:step]


def _nearest_on(highway: list, positions: np.ndarray, target: int) -> int:
    pts = positions[highway]
    d = np.linalg.norm(pts - positions[target], axis=1)
    return highway[int(np.argmin(d))]


def plan_routes(realization: NetworkRealization, highways: HighwaySystem) -> RoutePlan:
    if highways.degenerate:
        raise ParameterError("highway system has no horizontal or no vertical highway")
    pos = realization.bs_positions
    H, V = highways.horizontal_highways, highways.vertical_highways
    h_index = [{b: k for k, b in enumerate(h)} for h in H]
    v_index = [{b: k for k, b in enumerate(v)} for v in V]
    crossing_cache = {}

    def crossing(h, v):
        key = (h, v)
        if key not in crossing_cache:
            shared = [b for b in H[h] if b in v_index[v]]
            if shared:
                crossing_cache[key] = (shared[0], shared[0])
            else:
                d = np.linalg.norm(pos[H[h]][:, None, :] - pos[V[v]][None, :, :], axis=2)
                i, j = np.unravel_index(np.argmin(d), d.shape)
                crossing_cache[key] = (H[h][i], V[v][j])
        return crossing_cache[key]

    routes, unroutable = [], []
    for s, d in enumerate(realization.pairing):
        s, d = int(s), int(d)
        h, v = (int(x) for x in highways.slab_assignment[s][:1]) , None
        h = int(highways.slab_assignment[s, 0])
        v = int(highways.slab_assignment[d, 1])
        if h < 0 or v < 0:
            unroutable.append(s)
            continue
        entry = s if s in h_index[h] else _nearest_on(H[h], pos, s)
        phases = {1: [s, entry] if entry != s else []}
        if d in h_index[h]:
            phases[2] = _segment(H[h], h_index[h], entry, d)
            phases[3], phases[4] = [], []
        else:
            hx, vx = crossing(h, v)
            seg = _segment(H[h], h_index[h], entry, hx)
            if vx != hx:
                seg = seg + [vx]
            phases[2] = seg if len(seg) > 1 else []
            exit_node = d if d in v_index[v] else _nearest_on(V[v], pos, d)
            seg3 = _segment(V[v], v_index[v], vx, exit_node)
            phases[3] = seg3 if len(seg3) > 1 else []
            phases[4] = [exit_node, d] if exit_node != d else []
        routes.append(Route(s, d, phases, h, v))

    n_bs = realization.n_bs
    bs_load = np.zeros(n_bs, np.int64)
    hw_load = np.zeros(n_bs, np.int64)
    h_load = np.zeros(len(H), np.int64)
    v_load = np.zeros(len(V), np.int64)
    entry_share, exit_share = Counter(), Counter()
    for r in routes:
        for b in r.transmitters():
            bs_load[b] += 1
        for b in r.transmitters((2, 3)):
            hw_load[b] += 1
        if r.phases[2]:
            h_load[r.horizontal] += 1
        if r.phases[3]:
            v_load[r.vertical] += 1
        if r.phases[1]:
            entry_share[r.phases[1][1]] += 1
        if r.phases[4]:
            exit_share[r.phases[4][0]] += 1
    return RoutePlan(routes, bs_load, hw_load, h_load, v_load, entry_share, exit_share, unroutable)


@dataclass(frozen=True)
class ConnectionRate:
    rate: float
    bottleneck: str  # "highway", "entry", "exit"


def per_connection_rate(plan: RoutePlan, highway_rate: float, entry_rate: float,
                        exit_rate: float | None = None) -> dict:
    """Rate of each connection under equal sharing of every link it uses.

    A highway BS splits ``highway_rate`` over every connection it forwards in
    phases 2-3; an entry (exit) point splits ``entry_rate`` (``exit_rate``)
    over the sources (destinations) attached to it.
    """
    if not (highway_rate > 0 and entry_rate > 0):
        raise ParameterError("rates must be positive")
    exit_rate = entry_rate if exit_rate is None else exit_rate
    out = {}
    for k, r in enumerate(plan.routes):
        options = []
        hw = r.transmitters((2, 3))
        if hw:
            options.append((highway_rate / max(plan.highway_bs_load[b] for b in hw), "highway"))
        if r.phases[1]:
            options.append((entry_rate / plan.entry_share[r.phases[1][1]], "entry"))
        if r.phases[4]:
            options.append((exit_rate / plan.exit_share[r.phases[4][0]], "exit"))
        if not options:
            options.append((highway_rate, "highway"))
        rate, which = min(options)
        out[k] = ConnectionRate(rate, which)
    return out


def entry_distances(plan: RoutePlan, realization: NetworkRealization) -> np.ndarray:
    pos = realization.bs_positions
    d = [np.linalg.norm(pos[r.phases[1][0]] - pos[r.phases[1][1]]) if r.phases[1] else 0.0
         for r in plan.routes]
    return np.asarray(d)


def write_route_csv(plan: RoutePlan, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["conn_id", "phase", "hop_index", "bs_index"])
        for r in plan.routes:
            for ph in PHASES:
                for k, b in enumerate(r.phases.get(ph, [])):
                    w.writerow([r.source, ph, k, b])
    return path


def write_highway_census_csv(rows, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "n", "horizontal", "vertical", "failed_slabs"])
        for r in rows:
            w.writerow([r["seed"], r["n"], r["horizontal"], r["vertical"], r["failed_slabs"]])
    return path


# -- long hops -----------------------------------------------------------------

@dataclass(frozen=True)
class LongHopResult:
    hop_counts: np.ndarray
    max_relay_load: int
    relay_load: np.ndarray
    stuck: int

    @property
    def per_connection_rate(self) -> float:
        """Unit-rate hops shared equally at the busiest relay."""
        return 1.0 / self.max_relay_load if self.max_relay_load else math.inf


def long_hop_route(realization: NetworkRealization, d_c: float) -> LongHopResult:
    """Greedy routing: each hop goes to the BS within ``d_c`` closest to the destination.

    Ties go to the lowest BS index. A connection that cannot get closer is
    counted as stuck and gets hop count -1.
    """
    if not d_c > 0:
        raise ParameterError("d_c must be positive")
    pos = realization.bs_positions
    tree = cKDTree(pos)
    load = np.zeros(realization.n_bs, np.int64)
    hops = np.zeros(realization.n_bs, np.int64)
    stuck = 0
    eps = 1e-9 * max(1.0, d_c)
    for s, d in enumerate(realization.pairing):
        cur, count, ok = s, 0, True
        visited = []
        while np.linalg.norm(pos[cur] - pos[d]) > d_c + eps:
            cand = np.asarray(tree.query_ball_point(pos[cur], d_c + eps), dtype=np.int64)
            dist = np.linalg.norm(pos[cand] - pos[d], axis=1)
            best = cand[np.lexsort((cand, dist))[0]]
            if np.linalg.norm(pos[best] - pos[d]) >= np.linalg.norm(pos[cur] - pos[d]):
                ok = False
                break
            visited.append(cur)
            cur, count = int(best), count + 1
        if not ok:
            stuck += 1
            hops[s] = -1
            continue
        visited.append(cur)
        for b in visited:
            load[b] += 1
        hops[s] = count + 1
    return LongHopResult(hops, int(load.max(initial=0)), load, stuck)
