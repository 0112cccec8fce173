"""Growth and persistence metrics over snapshot sequences.

Edge identity across snapshots is the directed (origin, dest) pair; weights
never affect set membership. Probabilities that cannot be formed (empty
reference sets) are reported as None rather than raised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import CheckinStream
from .snapshot import DEFAULT_GAP_SECONDS, PlaceGraph, extract_transitions

WEEK_SECONDS = 7 * 86400

# cut the log-log fit before venue discovery saturates
PRESATURATION_FRACTION = 0.95


@dataclass
class GrowthCurve:
    """(nodes, edges) trace sampled at every first appearance, with the fitted
    densification exponent of the pre-saturation regime."""

    points: list[tuple[int, int]]
    exponent: float
    exponent_stderr: float


@dataclass
class PersistenceSeries:
    kind: str  # "edge" | "node"
    probabilities: list[float]
    base_index: int


def growth_curve(
    stream: CheckinStream,
    t0: int | None = None,
    gap_threshold: int = DEFAULT_GAP_SECONDS,
    min_points: int = 10,
) -> GrowthCurve:
    """Replay transitions in time order and fit edge count against node count.

    A point is recorded whenever a transition introduces a new node or a new
    directed edge. The exponent is the least-squares slope of log(edges) on
    log(nodes) over points with node count below 95% of the final count.
    """
    if not stream.events:
        raise ValueError("empty stream")
    transitions = sorted(
        extract_transitions(stream, gap_threshold),
        key=lambda tr: (tr.t_origin, tr.t_dest, tr.origin, tr.dest),
    )
    if t0 is not None:
        transitions = [tr for tr in transitions if tr.t_origin >= t0]
    nodes: set[str] = set()
    edges: set[tuple[str, str]] = set()
    points: list[tuple[int, int]] = []
    for tr in transitions:
        new = False
        if tr.origin not in nodes:
            nodes.add(tr.origin)
            new = True
        if tr.dest not in nodes:
            nodes.add(tr.dest)
            new = True
        if (tr.origin, tr.dest) not in edges:
            edges.add((tr.origin, tr.dest))
            new = True
        if new:
            points.append((len(nodes), len(edges)))

    final_n = len(nodes)
    fit_points = [(n, e) for n, e in points if n < PRESATURATION_FRACTION * final_n and e > 0]
    if len(fit_points) < min_points:
        raise ValueError(f"only {len(fit_points)} pre-saturation points, need {min_points}")
    log_n = np.log([n for n, _ in fit_points])
    log_e = np.log([e for _, e in fit_points])
    slope, intercept = np.polyfit(log_n, log_e, 1)
    resid = log_e - (slope * log_n + intercept)
    dof = len(fit_points) - 2
    sxx = float(((log_n - log_n.mean()) ** 2).sum())
    stderr = float(np.sqrt((resid @ resid) / dof / sxx)) if dof > 0 and sxx > 0 else float("nan")
    return GrowthCurve(points, float(slope), stderr)


def new_venue_fraction(stream: CheckinStream, week_index: int) -> float | None:
    """Fraction of the venues checked into during week ``week_index`` (1-based
    from the stream start) that were seen for the first time that week.

    Returns None for a week with no check-ins.
    """
    if week_index < 2:
        raise ValueError("week_index starts at 2 (week 1 is all-new by construction)")
    if not stream.events:
        return None
    start = stream.time_span[0]
    week_start = start + (week_index - 1) * WEEK_SECONDS
    week_end = week_start + WEEK_SECONDS
    first_seen: dict[str, int] = {}
    in_week: set[str] = set()
    for ev in stream.events:
        if ev.venue_id not in first_seen or ev.timestamp < first_seen[ev.venue_id]:
            first_seen[ev.venue_id] = ev.timestamp
        if week_start <= ev.timestamp < week_end:
            in_week.add(ev.venue_id)
    if not in_week:
        return None
    new = sum(1 for v in in_week if week_start <= first_seen[v] < week_end)
    return new / len(in_week)


def new_edge_probability(prev: PlaceGraph, curr: PlaceGraph) -> float | None:
    """Fraction of the later snapshot's edges absent from the earlier one."""
    if curr.n_edges == 0:
        return None
    prev_edges = set(prev.edges)
    new = sum(1 for e in curr.edges if e not in prev_edges)
    return new / curr.n_edges


def edge_longevity(snapshots: list[PlaceGraph], base: int, horizon: int) -> PersistenceSeries | None:
    """Probability that a base-snapshot edge survives in all of the next
    1..horizon snapshots (running intersection over the base edge count)."""
    if base + horizon >= len(snapshots):
        raise ValueError(f"need {base + horizon + 1} snapshots, have {len(snapshots)}")
    base_edges = set(snapshots[base].edges)
    if not base_edges:
        return None
    surviving = set(base_edges)
    probs = []
    for k in range(1, horizon + 1):
        surviving &= set(snapshots[base + k].edges)
        probs.append(len(surviving) / len(base_edges))
    return PersistenceSeries("edge", probs, base)


def weight_persistence(prev: PlaceGraph, curr: PlaceGraph, w: int) -> float | None:
    """Probability that an edge of weight >= w in the earlier snapshot
    reappears in the later one (weights read from the earlier snapshot)."""
    eligible = [e for e, weight in prev.edges.items() if weight >= w]
    if not eligible:
        return None
    curr_edges = set(curr.edges)
    persisted = sum(1 for e in eligible if e in curr_edges)
    return persisted / len(eligible)


def node_turnover(
    snapshots: list[PlaceGraph], base: int, horizon: int
) -> tuple[float | None, PersistenceSeries | None]:
    """New-node probability for the (base, base+1) pair and the node
    persistence series over horizons 1..horizon."""
    if base + horizon >= len(snapshots) or horizon < 1:
        raise ValueError(f"need {base + horizon + 1} snapshots with horizon >= 1, have {len(snapshots)}")
    v_base = snapshots[base].nodes
    v_next = snapshots[base + 1].nodes
    p_new = (len(v_next - v_base) / len(v_next)) if v_next else None
    if not v_base:
        return p_new, None
    surviving = set(v_base)
    probs = []
    for k in range(1, horizon + 1):
        surviving &= snapshots[base + k].nodes
        probs.append(len(surviving) / len(v_base))
    return p_new, PersistenceSeries("node", probs, base)
