import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from placenet.ingest import CheckinEvent, CheckinStream, Venue, VenueRegistry
from placenet.snapshot import (
    PlaceGraph,
    activity_profiles,
    build_graph,
    extract_transitions,
    local_slot,
    window_stream,
    write_snapshot,
)

from conftest import make_stream

H = 3600
DAY = 86400

# epoch anchors: 1970-01-01 was a Thursday
MONDAY_0 = 4 * DAY  # 1970-01-05 00:00 UTC


def test_three_hour_rule_hand_case():
    # A@10:00, B@11:00, C@15:00 -> only A->B (B->C gap is 4h)
    stream = make_stream([("u", "A", 10 * H), ("u", "B", 11 * H), ("u", "C", 15 * H)])
    trs = extract_transitions(stream)
    assert [(t.origin, t.dest) for t in trs] == [("A", "B")]


def test_self_transition_excluded():
    stream = make_stream([("u", "A", 10 * H), ("u", "A", 10 * H + 1800)])
    assert extract_transitions(stream) == []


def test_gap_boundary_inclusive():
    stream = make_stream([("u", "A", 0), ("u", "B", 3 * H)])
    assert len(extract_transitions(stream)) == 1
    stream = make_stream([("u", "A", 0), ("u", "B", 3 * H + 1)])
    assert extract_transitions(stream) == []


def test_zero_gap_excluded():
    stream = make_stream([("u", "A", 100), ("u", "B", 100)])
    assert extract_transitions(stream) == []


def test_per_user_independence():
    stream = make_stream([
        ("u1", "A", 100), ("u1", "B", 200),
        ("u2", "A", 150), ("u2", "B", 250),
    ])
    trs = extract_transitions(stream)
    assert len(trs) == 2
    graph = build_graph(trs, (0, 1000))
    assert graph.edges == {("A", "B"): 2}


def test_no_transition_across_users():
    stream = make_stream([("u1", "A", 100), ("u2", "B", 200)])
    assert extract_transitions(stream) == []


def test_build_graph_aggregates_counts():
    stream = make_stream([
        ("u1", "A", 10), ("u1", "B", 20),
        ("u2", "A", 30), ("u2", "B", 40),
        ("u3", "A", 50), ("u3", "B", 60),
        ("u4", "B", 70), ("u4", "A", 80),
    ])
    graph = build_graph(extract_transitions(stream), (0, 1000))
    assert graph.edges == {("A", "B"): 3, ("B", "A"): 1}
    assert graph.nodes == {"A", "B"}


def test_build_graph_empty():
    graph = build_graph([], (0, 10))
    assert graph.n_nodes == 0 and graph.n_edges == 0


def test_window_boundary_half_open():
    stream = make_stream([("u", "A", 999), ("u", "B", 999 + H)])
    graph = build_graph(extract_transitions(stream), (0, 999))
    assert graph.n_edges == 0  # t_origin == t_end excluded
    graph = build_graph(extract_transitions(stream), (999, 2000))
    assert graph.n_edges == 1


def test_window_stream_six_months_two_windows():
    rows = [("u", "A", 1), ("u", "B", 1 + H)]
    rows += [("u", "A", 100 * DAY), ("u", "B", 100 * DAY + H)]
    rows += [("u", "A", 180 * DAY - H)]
    stream = make_stream(rows)
    graphs = window_stream(stream, 90 * DAY)
    assert len(graphs) == 2
    assert graphs[0].window == (1, 1 + 90 * DAY)
    assert graphs[0].n_edges == 1 and graphs[1].n_edges == 1


def test_window_stream_short_stream_one_window():
    stream = make_stream([("u", "A", 10), ("u", "B", 20)])
    graphs = window_stream(stream, 90 * DAY)
    assert len(graphs) == 1


def test_window_stream_assigns_by_origin_time():
    # transition straddles the boundary; it belongs to the window of t_origin
    t_cut = 90 * DAY
    stream = make_stream([("u", "A", t_cut - H), ("u", "B", t_cut + H), ("u", "C", t_cut + 89 * DAY)])
    graphs = window_stream(stream, 90 * DAY, t0=0)
    assert graphs[0].edges == {("A", "B"): 1}
    assert ("B", "C") not in graphs[1].edges  # gap too large
    assert len(graphs) == 2


def test_local_slot_hour_of_day():
    assert local_slot(13 * H, 0, 24) == 13
    assert local_slot(13 * H, 2, 24) == 15
    assert local_slot(23 * H, 2, 24) == 1  # wraps


def test_local_slot_hour_of_week_monday_zero():
    assert local_slot(MONDAY_0, 0, 168) == 0
    # Tuesday 09:00 -> slot 24 + 9 = 33
    assert local_slot(MONDAY_0 + DAY + 9 * H, 0, 168) == 33


def test_local_slot_rejects_bad_T():
    with pytest.raises(ValueError):
        local_slot(0, 0, 48)


def test_activity_profile_binning():
    t1 = MONDAY_0 + 13 * H
    t2 = t1 + 7 * DAY
    stream = make_stream([
        ("u", "A", t1), ("u", "B", t1 + H),
        ("u2", "A", t2), ("u2", "B", t2 + H),
    ])
    graph = build_graph(extract_transitions(stream), (0, t2 + DAY))
    profiles = activity_profiles(stream, graph, T=24)
    assert profiles["A"].checkins[13] == 2
    assert profiles["A"].checkins.sum() == 2
    assert profiles["B"].checkins[14] == 2


def test_activity_profile_weekly_strength_slot():
    t = MONDAY_0 + DAY + 9 * H  # Tuesday 09:00
    stream = make_stream([("u", "A", t), ("u", "B", t + H)])
    graph = build_graph(extract_transitions(stream), (0, t + DAY))
    profiles = activity_profiles(stream, graph, T=168)
    assert profiles["A"].out_strength[33] == 1
    assert profiles["A"].out_strength.sum() == 1
    assert profiles["B"].in_strength[34] == 1


def test_activity_profiles_strength_sums_match_weighted_degrees(small_city_profiles):
    registry, stream, graphs, profiles_list = small_city_profiles
    graph, profiles = graphs[0], profiles_list[0]
    out_w = {v: 0 for v in graph.nodes}
    in_w = {v: 0 for v in graph.nodes}
    for (a, b), w in graph.edges.items():
        out_w[a] += w
        in_w[b] += w
    for v in graph.nodes:
        assert profiles[v].out_strength.sum() == out_w[v]
        assert profiles[v].in_strength.sum() == in_w[v]


def test_activity_profiles_invalid_T():
    stream = make_stream([("u", "A", 10), ("u", "B", 20)])
    graph = build_graph(extract_transitions(stream), (0, 100))
    with pytest.raises(ValueError):
        activity_profiles(stream, graph, T=48)


def test_total_weight_equals_window_transitions(small_city_graphs):
    registry, stream, graphs = small_city_graphs
    trs = extract_transitions(stream)
    for graph in graphs:
        t0, t1 = graph.window
        n_in_window = sum(1 for tr in trs if t0 <= tr.t_origin < t1)
        assert graph.total_weight() == n_in_window


def test_placegraph_rejects_self_loops_and_zero_weights():
    with pytest.raises(ValueError):
        PlaceGraph((0, 1), {("A", "A"): 1})
    with pytest.raises(ValueError):
        PlaceGraph((0, 1), {("A", "B"): 0})


def test_profile_fold_to_daily():
    from placenet.snapshot import ActivityProfile

    checkins = np.zeros(168, dtype=np.int64)
    checkins[33] = 2  # Tuesday 09:00
    checkins[9] = 1   # Monday 09:00
    p = ActivityProfile("A", checkins, np.zeros(168, dtype=np.int64), np.zeros(168, dtype=np.int64), 168)
    daily = p.to_daily()
    assert daily.T == 24
    assert daily.checkins[9] == 3
    assert p.peak_hour == 9


def test_peak_hour_tie_breaks_earliest():
    from placenet.snapshot import ActivityProfile

    checkins = np.zeros(24, dtype=np.int64)
    checkins[5] = 2
    checkins[20] = 2
    p = ActivityProfile("A", checkins, np.zeros(24, dtype=np.int64), np.zeros(24, dtype=np.int64), 24)
    assert p.peak_hour == 5


user_ids = st.sampled_from(["u1", "u2", "u3"])
venue_ids = st.sampled_from(["A", "B", "C", "D"])


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.tuples(user_ids, venue_ids, st.integers(1, 50 * DAY)), min_size=1, max_size=60),
    st.lists(st.tuples(st.sampled_from(["w1", "w2"]), venue_ids, st.integers(1, 50 * DAY)), min_size=1, max_size=60),
)
def test_windowing_disjoint_user_streams_compose(rows_a, rows_b):
    """Concatenating streams over disjoint user sets and windowing equals
    windowing each stream and merging edge counts."""
    venues = [Venue(v, 0.0, 0.0, "other") for v in ["A", "B", "C", "D"]]
    stream_a = make_stream(rows_a, venues)
    stream_b = make_stream(rows_b, venues)
    registry = VenueRegistry(venues)
    merged_events = sorted(stream_a.events + stream_b.events, key=lambda e: (e.user_id, e.timestamp))
    merged = CheckinStream(merged_events, registry)

    window = 10 * DAY
    combined = window_stream(merged, window, t0=0)
    part_a = window_stream(stream_a, window, t0=0)
    part_b = window_stream(stream_b, window, t0=0)
    for k, graph in enumerate(combined):
        expect = {}
        for part in (part_a, part_b):
            if k < len(part):
                for e, w in part[k].edges.items():
                    expect[e] = expect.get(e, 0) + w
        assert graph.edges == expect


def test_write_snapshot_exports_tsv_and_sidecar(tmp_path):
    stream = make_stream([("u", "A", 10), ("u", "B", 20), ("u2", "B", 30), ("u2", "A", 40)])
    graph = build_graph(extract_transitions(stream), (0, 100))
    edges = tmp_path / "snap.tsv"
    sidecar = tmp_path / "snap.json"
    write_snapshot(graph, edges, sidecar)
    assert edges.read_text() == "A\tB\t1\nB\tA\t1\n"
    import json

    meta = json.loads(sidecar.read_text())
    assert meta == {"window": [0, 100], "n_nodes": 2, "n_edges": 2}
