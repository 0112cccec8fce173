"""Temporal windowing of check-in streams into directed weighted place graphs.

A transition is one user's pair of consecutive check-ins at two distinct
venues no more than ``gap_threshold`` seconds apart. A snapshot aggregates
the transitions whose origin time falls in one half-open window; edge weight
is the transition count.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import CheckinStream

DEFAULT_GAP_SECONDS = 3 * 3600
DEFAULT_WINDOW_SECONDS = 90 * 86400

# epoch day 0 (1970-01-01) was a Thursday; shift so Monday 00:00 is slot 0
_EPOCH_WEEKDAY = 3


@dataclass(frozen=True)
class Transition:
    origin: str
    dest: str
    user: str
    t_origin: int
    t_dest: int


class PlaceGraph:
    """Directed weighted graph over venues for one time window.

    Nodes are exactly the venues incident to at least one transition in the
    window; weights are positive transition counts. Instances are immutable
    by convention; adjacency views are built lazily and cached.
    """

    def __init__(self, window: tuple[int, int], edges: dict[tuple[str, str], int]):
        t_start, t_end = window
        self.window = (int(t_start), int(t_end))
        for (origin, dest), weight in edges.items():
            if origin == dest:
                raise ValueError(f"self-loop {origin!r} not allowed")
            if weight < 1:
                raise ValueError(f"edge ({origin!r}, {dest!r}) has weight {weight} < 1")
        self.edges: dict[tuple[str, str], int] = dict(edges)
        self.nodes: frozenset[str] = frozenset(v for e in self.edges for v in e)
        self._out: dict[str, frozenset[str]] | None = None
        self._in: dict[str, frozenset[str]] | None = None
        self._und: dict[str, frozenset[str]] | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def weight(self, origin: str, dest: str) -> int:
        return self.edges.get((origin, dest), 0)

    def total_weight(self) -> int:
        return sum(self.edges.values())

    def _build_adjacency(self):
        out: dict[str, set[str]] = {v: set() for v in self.nodes}
        inn: dict[str, set[str]] = {v: set() for v in self.nodes}
        und: dict[str, set[str]] = {v: set() for v in self.nodes}
        for origin, dest in self.edges:
            out[origin].add(dest)
            inn[dest].add(origin)
            und[origin].add(dest)
            und[dest].add(origin)
        self._out = {v: frozenset(s) for v, s in out.items()}
        self._in = {v: frozenset(s) for v, s in inn.items()}
        self._und = {v: frozenset(s) for v, s in und.items()}

    def out_neighbors(self, v: str) -> frozenset[str]:
        if self._out is None:
            self._build_adjacency()
        return self._out.get(v, frozenset())

    def in_neighbors(self, v: str) -> frozenset[str]:
        if self._in is None:
            self._build_adjacency()
        return self._in.get(v, frozenset())

    def neighbors(self, v: str) -> frozenset[str]:
        """Neighbors in the undirected projection (each counted once)."""
        if self._und is None:
            self._build_adjacency()
        return self._und.get(v, frozenset())

    def undirected_edges(self) -> set[tuple[str, str]]:
        """Edge set of the undirected projection, canonically ordered pairs."""
        return {(min(a, b), max(a, b)) for a, b in self.edges}

    def __repr__(self) -> str:
        return f"PlaceGraph(window={self.window}, n_nodes={self.n_nodes}, n_edges={self.n_edges})"


@dataclass
class ActivityProfile:
    """Per-venue hourly activity within one snapshot window.

    ``checkins[slot]`` counts check-ins at the venue in that local-hour slot;
    ``out_strength`` / ``in_strength`` bin the weights of the venue's outgoing /
    incoming transitions by the local hour of the transition's origin / destination
    time. T=24 slots are hour-of-day; T=168 slots are hour-of-week with
    Monday 00:00 as slot 0.
    """

    venue_id: str
    checkins: np.ndarray
    out_strength: np.ndarray
    in_strength: np.ndarray
    T: int

    @property
    def popularity(self) -> int:
        """Total check-ins at the venue in the window."""
        return int(self.checkins.sum())

    @property
    def peak_hour(self) -> int:
        """Hour of day with the most check-ins; ties broken by earliest hour."""
        if self.T == 24:
            return int(np.argmax(self.checkins))
        return int(np.argmax(self.to_daily().checkins))

    def to_daily(self) -> "ActivityProfile":
        """Fold a T=168 profile to T=24 by summing over the seven days."""
        if self.T == 24:
            return self
        fold = lambda v: v.reshape(7, 24).sum(axis=0)
        return ActivityProfile(
            self.venue_id,
            fold(self.checkins),
            fold(self.out_strength),
            fold(self.in_strength),
            24,
        )


def local_slot(timestamp: int, utc_offset_hours: int, T: int) -> int:
    """Map an epoch timestamp to its local-hour slot.

    T=24: hour of day. T=168: hour of week, Monday 00:00 = slot 0.
    ``utc_offset_hours`` shifts UTC into the dataset's fixed local time.
    """
    t = timestamp + utc_offset_hours * 3600
    hour = (t // 3600) % 24
    if T == 24:
        return int(hour)
    if T == 168:
        weekday = (t // 86400 + _EPOCH_WEEKDAY) % 7
        return int(weekday * 24 + hour)
    raise ValueError(f"T must be 24 or 168, got {T}")


def extract_transitions(stream: CheckinStream, gap_threshold: int = DEFAULT_GAP_SECONDS) -> list[Transition]:
    """Extract direct transitions: per-user consecutive check-ins at distinct
    venues with 0 < gap <= gap_threshold."""
    transitions: list[Transition] = []
    events = stream.events
    for k in range(1, len(events)):
        prev, curr = events[k - 1], events[k]
        if prev.user_id != curr.user_id:
            continue
        gap = curr.timestamp - prev.timestamp
        if 0 < gap <= gap_threshold and prev.venue_id != curr.venue_id:
            transitions.append(Transition(prev.venue_id, curr.venue_id, curr.user_id,
                                          prev.timestamp, curr.timestamp))
    return transitions


def build_graph(transitions: list[Transition], window: tuple[int, int]) -> PlaceGraph:
    """Aggregate the transitions whose t_origin falls in the half-open window."""
    t_start, t_end = window
    counts = Counter(
        (tr.origin, tr.dest) for tr in transitions if t_start <= tr.t_origin < t_end
    )
    return PlaceGraph(window, dict(counts))


def window_stream(
    stream: CheckinStream,
    window_length: int = DEFAULT_WINDOW_SECONDS,
    t0: int | None = None,
    gap_threshold: int = DEFAULT_GAP_SECONDS,
) -> list[PlaceGraph]:
    """Cut the stream span into consecutive half-open windows from t0 and build
    one PlaceGraph per window (possibly empty)."""
    if window_length <= 0:
        raise ValueError("window_length must be positive")
    if not stream.events:
        return []
    if t0 is None:
        t0 = stream.time_span[0]
    max_ts = stream.time_span[1]
    n_windows = max(1, (max_ts - t0) // window_length + 1) if max_ts >= t0 else 1
    transitions = extract_transitions(stream, gap_threshold)
    graphs = []
    for k in range(n_windows):
        window = (t0 + k * window_length, t0 + (k + 1) * window_length)
        graphs.append(build_graph(transitions, window))
    return graphs


def activity_profiles(
    stream: CheckinStream,
    graph: PlaceGraph,
    T: int = 168,
    utc_offset: int = 0,
    gap_threshold: int = DEFAULT_GAP_SECONDS,
) -> dict[str, ActivityProfile]:
    """Build hourly activity profiles for every node of ``graph``.

    Check-ins are binned by their own local hour; strength vectors bin the
    window's transitions by the local hour of t_origin (out) and t_dest (in),
    so each vector sums to the venue's weighted out-/in-degree in the snapshot.
    """
    if T not in (24, 168):
        raise ValueError(f"T must be 24 or 168, got {T}")
    t_start, t_end = graph.window
    checkins = {v: np.zeros(T, dtype=np.int64) for v in graph.nodes}
    out_strength = {v: np.zeros(T, dtype=np.int64) for v in graph.nodes}
    in_strength = {v: np.zeros(T, dtype=np.int64) for v in graph.nodes}

    for ev in stream.events:
        if ev.venue_id in checkins and t_start <= ev.timestamp < t_end:
            checkins[ev.venue_id][local_slot(ev.timestamp, utc_offset, T)] += 1

    for tr in extract_transitions(stream, gap_threshold):
        if not t_start <= tr.t_origin < t_end:
            continue
        out_strength[tr.origin][local_slot(tr.t_origin, utc_offset, T)] += 1
        in_strength[tr.dest][local_slot(tr.t_dest, utc_offset, T)] += 1

    return {
        v: ActivityProfile(v, checkins[v], out_strength[v], in_strength[v], T)
        for v in graph.nodes
    }


def write_snapshot(graph: PlaceGraph, edges_path: str | Path, sidecar_path: str | Path) -> None:
    """Export a snapshot as a TSV edge list plus a JSON sidecar with window metadata."""
    edges_path = Path(edges_path)
    with edges_path.open("w", encoding="utf-8") as fh:
        for (origin, dest) in sorted(graph.edges):
            fh.write(f"{origin}\t{dest}\t{graph.edges[(origin, dest)]}\n")
    sidecar = {
        "window": list(graph.window),
        "n_nodes": graph.n_nodes,
        "n_edges": graph.n_edges,
    }
    Path(sidecar_path).write_text(json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8")
