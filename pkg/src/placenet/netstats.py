"""Topological statistics of place graphs.

Clustering, assortativity, and path statistics follow the undirected
projection convention; the rewired null model preserves the projection's
degree multiset exactly. Power-law fitting is a discrete maximum-likelihood
fit with an optional KS-minimizing lower-cutoff scan.
"""

from __future__ import annotations

import math
import random
from collections import Counter, deque
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .ingest import CATEGORIES, VenueRegistry
from .snapshot import ActivityProfile, PlaceGraph


class NetstatsError(ValueError):
    """Invalid input to a statistics operation."""


class ConvergenceError(RuntimeError):
    """Iterative computation failed to reach tolerance; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class PowerLawFit:
    exponent: float
    x_min: int
    n_tail: int
    ks_statistic: float


@dataclass
class PathStats:
    mean_shortest_path: float
    diameter: int
    exact: bool
    n_sources: int


@dataclass
class TopologyReport:
    n_nodes: int
    n_edges: int
    mean_clustering: float
    diameter_estimate: int
    mean_shortest_path: float
    mean_degree: float
    assortativity: float | None
    giant_component_fraction: float
    null_model_clustering: float | None = None
    null_diameter: float | None = None
    null_mean_path: float | None = None


def degree_and_weight_distributions(graph: PlaceGraph) -> dict[str, dict[int, int]]:
    """Exact histograms of in-degree, out-degree, undirected degree, and edge weight."""
    if graph.n_nodes == 0:
        raise NetstatsError("empty graph")
    in_deg = Counter(len(graph.in_neighbors(v)) for v in graph.nodes)
    out_deg = Counter(len(graph.out_neighbors(v)) for v in graph.nodes)
    und_deg = Counter(len(graph.neighbors(v)) for v in graph.nodes)
    weights = Counter(graph.edges.values())
    return {
        "in_degree": dict(in_deg),
        "out_degree": dict(out_deg),
        "degree": dict(und_deg),
        "edge_weight": dict(weights),
    }


def _discrete_loglik(beta: float, x_min: int, n: int, sum_log: float) -> float:
    return -beta * sum_log - n * math.log(hurwitz_zeta(beta, x_min))


def _golden_max(f, lo: float, hi: float, tol: float = 1e-7) -> float:
    """Golden-section maximization of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def _fit_exponent(tail: np.ndarray, x_min: int) -> float:
    """Discrete power-law MLE on samples >= x_min: coarse grid then golden-section."""
    n = len(tail)
    sum_log = float(np.log(tail).sum())
    f = lambda beta: _discrete_loglik(beta, x_min, n, sum_log)
    grid = np.arange(1.01, 6.001, 0.05)
    values = [f(b) for b in grid]
    k = int(np.argmax(values))
    lo = grid[max(0, k - 1)]
    hi = grid[min(len(grid) - 1, k + 1)]
    return _golden_max(f, lo, hi)


def _ks_statistic(tail: np.ndarray, beta: float, x_min: int) -> float:
    """Max deviation between empirical and fitted tail CDFs at observed values."""
    values = np.unique(tail)
    n = len(tail)
    emp_cdf = np.searchsorted(np.sort(tail), values, side="right") / n
    z = hurwitz_zeta(beta, x_min)
    fit_cdf = 1.0 - hurwitz_zeta(beta, values + 1.0) / z
    return float(np.max(np.abs(emp_cdf - fit_cdf)))


def fit_power_law(samples, x_min: int | None = None, min_tail: int = 10) -> PowerLawFit:
    """Fit a discrete power law by maximum likelihood.

    With ``x_min`` given, the exponent is fitted on samples >= x_min. Without it,
    the cutoff is chosen by scanning observed values and minimizing the KS
    statistic of the tail fit, then refitting.
    """
    x = np.asarray(list(samples), dtype=np.int64)
    if len(x) == 0 or np.any(x < 1):
        raise NetstatsError("samples must be positive integers")

    if x_min is not None:
        tail = x[x >= x_min]
        if len(tail) < min_tail:
            raise NetstatsError(f"only {len(tail)} samples >= x_min={x_min}, need {min_tail}")
        if np.all(tail == tail[0]):
            raise NetstatsError("degenerate tail: all samples equal")
        beta = _fit_exponent(tail, x_min)
        return PowerLawFit(beta, int(x_min), len(tail), _ks_statistic(tail, beta, x_min))

    best: PowerLawFit | None = None
    for candidate in np.unique(x)[:-1]:
        tail = x[x >= candidate]
        if len(tail) < min_tail or len(np.unique(tail)) < 2:
            continue
        beta = _fit_exponent(tail, int(candidate))
        ks = _ks_statistic(tail, beta, int(candidate))
        if best is None or ks < best.ks_statistic:
            best = PowerLawFit(beta, int(candidate), len(tail), ks)
    if best is None:
        raise NetstatsError(f"no candidate x_min leaves a tail of >= {min_tail} samples with 2+ distinct values")
    return best


def clustering_coefficient(graph: PlaceGraph) -> tuple[float, dict[str, float]]:
    """Mean local clustering coefficient of the undirected projection.

    c_u = triangles through u / (k_u choose 2), zero for degree < 2; the mean
    normalizes by the full node count.
    """
    if graph.n_nodes == 0:
        raise NetstatsError("empty graph")
    local: dict[str, float] = {}
    for u in graph.nodes:
        nbrs = graph.neighbors(u)
        k = len(nbrs)
        if k < 2:
            local[u] = 0.0
            continue
        links = 0
        for v in nbrs:
            links += len(graph.neighbors(v) & nbrs)
        # each triangle edge counted twice in the loop above
        local[u] = links / (k * (k - 1))
    mean = sum(local.values()) / len(local)
    return mean, local


def assortativity(graph: PlaceGraph) -> float | None:
    """Degree assortativity: Pearson correlation of end degrees over the edges
    of the undirected projection, each edge contributing both orientations.

    Returns None when undefined (fewer than 2 edges or constant end degrees).
    """
    und = graph.undirected_edges()
    if len(und) < 2:
        return None
    deg = {v: len(graph.neighbors(v)) for v in graph.nodes}
    xs, ys = [], []
    for a, b in und:
        xs.extend((deg[a], deg[b]))
        ys.extend((deg[b], deg[a]))
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    vx = x.var()
    if vx == 0.0:
        return None
    return float(((x - x.mean()) * (y - y.mean())).mean() / vx)


def giant_component(graph: PlaceGraph) -> frozenset[str]:
    """Largest weakly connected component; ties broken by smallest contained venue_id."""
    if graph.n_nodes == 0:
        raise NetstatsError("empty graph")
    unvisited = set(graph.nodes)
    best: set[str] | None = None
    while unvisited:
        start = unvisited.pop()
        comp = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in graph.neighbors(u):
                if v in unvisited:
                    unvisited.discard(v)
                    comp.add(v)
                    queue.append(v)
        if best is None or len(comp) > len(best) or (len(comp) == len(best) and min(comp) < min(best)):
            best = comp
    return frozenset(best)


def _bfs_distances(adj: list[list[int]], source: int) -> list[int]:
    dist = [-1] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u]
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = du + 1
                queue.append(v)
    return dist


def path_stats(graph: PlaceGraph, sample_sources: int = 1000, rng_seed: int = 0,
               exact_limit: int = 5000) -> PathStats:
    """Mean shortest path and diameter of the giant component's undirected projection.

    BFS runs from every node when the component has at most ``exact_limit``
    nodes, otherwise from ``sample_sources`` seeded uniform sources; the
    diameter is then a sampled lower bound and ``exact`` is False.
    """
    gc = sorted(giant_component(graph))
    if len(gc) < 2:
        raise NetstatsError("giant component too small for path statistics")
    index = {v: i for i, v in enumerate(gc)}
    adj: list[list[int]] = [[] for _ in gc]
    for v in gc:
        adj[index[v]] = sorted(index[u] for u in graph.neighbors(v) if u in index)

    if len(gc) <= exact_limit:
        sources = range(len(gc))
        exact = True
    else:
        rng = random.Random(rng_seed)
        sources = rng.sample(range(len(gc)), min(sample_sources, len(gc)))
        exact = False

    total = 0
    pairs = 0
    diameter = 0
    n_sources = 0
    for s in sources:
        dist = _bfs_distances(adj, s)
        n_sources += 1
        for d in dist:
            if d > 0:
                total += d
                pairs += 1
                if d > diameter:
                    diameter = d
    return PathStats(total / pairs, diameter, exact, n_sources)


def rewire_null_model(graph: PlaceGraph, rng_seed: int, swaps_per_edge: int = 10) -> PlaceGraph:
    """Degree-preserving randomization of the undirected projection.

    Runs exactly ``swaps_per_edge * |E|`` double-edge-swap attempts, rejecting
    any swap that would create a self-loop or a multi-edge. The result is a
    PlaceGraph holding one unit-weight directed edge per undirected edge.
    """
    edges = sorted(graph.undirected_edges())
    if len(edges) < 2:
        raise NetstatsError("need at least 2 undirected edges to rewire")
    present = set(edges)
    rng = random.Random(rng_seed)
    m = len(edges)
    for _ in range(swaps_per_edge * m):
        i = rng.randrange(m)
        j = rng.randrange(m)
        if i == j:
            continue
        a, b = edges[i]
        c, d = edges[j]
        if rng.random() < 0.5:
            c, d = d, c
        # proposed: (a, d) and (c, b)
        if a == d or c == b:
            continue
        e1 = (min(a, d), max(a, d))
        e2 = (min(c, b), max(c, b))
        if e1 == e2 or e1 in present or e2 in present:
            continue
        present.discard(edges[i])
        present.discard(edges[j])
        present.add(e1)
        present.add(e2)
        edges[i] = e1
        edges[j] = e2
    return PlaceGraph(graph.window, {e: 1 for e in edges})


def pagerank(graph: PlaceGraph, damping: float = 0.85, tol: float = 1e-9,
             max_iter: int = 100) -> dict[str, float]:
    """Weight-proportional PageRank on the directed graph.

    Dangling nodes redistribute their mass uniformly; iteration stops when the
    L1 residual drops below ``tol`` and raises ConvergenceError otherwise.
    """
    if graph.n_nodes == 0:
        raise NetstatsError("empty graph")
    nodes = sorted(graph.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    out_strength = np.zeros(n)
    src = np.empty(graph.n_edges, dtype=np.int64)
    dst = np.empty(graph.n_edges, dtype=np.int64)
    wgt = np.empty(graph.n_edges, dtype=float)
    for k, ((origin, dest), w) in enumerate(graph.edges.items()):
        src[k] = index[origin]
        dst[k] = index[dest]
        wgt[k] = w
        out_strength[index[origin]] += w
    dangling = out_strength == 0.0
    safe_out = np.where(dangling, 1.0, out_strength)

    p = np.full(n, 1.0 / n)
    residual = math.inf
    for _ in range(max_iter):
        contrib = p / safe_out
        new_p = np.zeros(n)
        np.add.at(new_p, dst, contrib[src] * wgt)
        dangling_mass = p[dangling].sum()
        new_p = (1.0 - damping) / n + damping * (new_p + dangling_mass / n)
        residual = float(np.abs(new_p - p).sum())
        p = new_p
        if residual < tol:
            return {v: float(p[index[v]]) for v in nodes}
    raise ConvergenceError(
        f"pagerank did not reach tol={tol} in {max_iter} iterations (residual {residual:.3e})",
        residual,
    )


def category_weight_profile(graph: PlaceGraph, registry: VenueRegistry) -> dict[str, dict[int, int]]:
    """Edge-weight histogram per destination category."""
    profile: dict[str, Counter] = {c: Counter() for c in CATEGORIES}
    for (origin, dest), w in graph.edges.items():
        if dest not in registry:
            raise NetstatsError(f"node {dest!r} not in registry")
        profile[registry[dest].category][w] += 1
    return {c: dict(h) for c, h in profile.items()}


def peak_hour_interaction_matrix(graph: PlaceGraph, profiles: dict[str, ActivityProfile]) -> np.ndarray:
    """24x24 density of edge weight by (origin peak hour, destination peak hour).

    Normalized to sum to 1 over the whole matrix.
    """
    matrix = np.zeros((24, 24))
    for (origin, dest), w in graph.edges.items():
        if origin not in profiles or dest not in profiles:
            missing = origin if origin not in profiles else dest
            raise NetstatsError(f"missing activity profile for {missing!r}")
        matrix[profiles[origin].peak_hour, profiles[dest].peak_hour] += w
    total = matrix.sum()
    if total == 0:
        raise NetstatsError("graph has no edges")
    return matrix / total


def compute_topology_report(
    graph: PlaceGraph,
    sample_sources: int = 1000,
    rng_seed: int = 0,
    null_seeds: int = 0,
    swaps_per_edge: int = 10,
) -> TopologyReport:
    """Assemble the per-snapshot topology summary, optionally with a rewired
    null-model baseline averaged over ``null_seeds`` randomizations."""
    if graph.n_nodes == 0:
        raise NetstatsError("empty graph")
    mean_c, _ = clustering_coefficient(graph)
    paths = path_stats(graph, sample_sources=sample_sources, rng_seed=rng_seed)
    gc = giant_component(graph)
    und_edges = len(graph.undirected_edges())
    report = TopologyReport(
        n_nodes=graph.n_nodes,
        n_edges=graph.n_edges,
        mean_clustering=mean_c,
        diameter_estimate=paths.diameter,
        mean_shortest_path=paths.mean_shortest_path,
        mean_degree=2.0 * und_edges / graph.n_nodes,
        assortativity=assortativity(graph),
        giant_component_fraction=len(gc) / graph.n_nodes,
    )
    if null_seeds > 0:
        cs, ds, ps = [], [], []
        for k in range(null_seeds):
            rewired = rewire_null_model(graph, rng_seed=rng_seed + 1 + k, swaps_per_edge=swaps_per_edge)
            c_r, _ = clustering_coefficient(rewired)
            p_r = path_stats(rewired, sample_sources=sample_sources, rng_seed=rng_seed)
            cs.append(c_r)
            ds.append(p_r.diameter)
            ps.append(p_r.mean_shortest_path)
        report.null_model_clustering = float(np.mean(cs))
        report.null_diameter = float(np.mean(ds))
        report.null_mean_path = float(np.mean(ps))
    return report
