import json

import pytest

from placenet.ingest import (
    CheckinEvent,
    IngestError,
    load_checkins,
    load_registry,
    write_checkins,
    write_registry,
)


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


REGISTRY_3 = [
    "venue_id,lat,lon,category",
    "a,51.5,-0.12,food",
    "b,51.6,-0.10,travel",
    "c,51.7,-0.08,nightlife",
]


def test_registry_count_preserved(tmp_path):
    p = tmp_path / "venues.csv"
    write_lines(p, REGISTRY_3)
    registry = load_registry(p)
    assert len(registry) == 3
    assert registry["b"].category == "travel"
    assert registry.unknown_category_count == 0


def test_registry_out_of_range_lat_cites_line(tmp_path):
    p = tmp_path / "venues.csv"
    write_lines(p, ["venue_id,lat,lon,category", "a,91,0,food", "b,10,0,food"])
    with pytest.raises(IngestError, match=":2:"):
        load_registry(p)


def test_registry_unknown_category_falls_back(tmp_path):
    p = tmp_path / "venues.csv"
    write_lines(p, ["venue_id,lat,lon,category", "a,1,2,museum"])
    registry = load_registry(p)
    assert registry["a"].category == "other"
    assert registry.unknown_category_count == 1


def test_registry_duplicate_id_is_error(tmp_path):
    p = tmp_path / "venues.csv"
    write_lines(p, ["venue_id,lat,lon,category", "a,1,2,food", "a,3,4,shop"])
    with pytest.raises(IngestError, match="duplicate venue_id 'a'"):
        load_registry(p)


def test_registry_bad_header(tmp_path):
    p = tmp_path / "venues.csv"
    write_lines(p, ["id,lat,lon,cat", "a,1,2,food"])
    with pytest.raises(IngestError, match="header"):
        load_registry(p)


@pytest.fixture
def registry(tmp_path):
    p = tmp_path / "venues.csv"
    write_lines(p, REGISTRY_3)
    return load_registry(p)


def checkin_line(user, venue, ts):
    return json.dumps({"user": user, "venue": venue, "ts": ts})


def test_checkins_unknown_venue_dropped(tmp_path, registry):
    p = tmp_path / "checkins.jsonl"
    write_lines(p, [
        checkin_line("u1", "a", 100),
        checkin_line("u1", "b", 200),
        checkin_line("u1", "zzz", 300),
        checkin_line("u2", "c", 400),
        checkin_line("u2", "a", 500),
    ])
    stream = load_checkins(p, registry)
    assert len(stream) == 4
    assert stream.dropped_unknown_venue == 1


def test_checkins_sorted_by_user_then_time(tmp_path, registry):
    p = tmp_path / "checkins.jsonl"
    write_lines(p, [
        checkin_line("u2", "a", 500),
        checkin_line("u1", "b", 300),
        checkin_line("u1", "a", 100),
    ])
    stream = load_checkins(p, registry)
    keys = [(e.user_id, e.timestamp) for e in stream.events]
    assert keys == sorted(keys)
    assert stream.time_span == (100, 500)


def test_checkins_byte_identical_duplicates_collapse(tmp_path, registry):
    p = tmp_path / "checkins.jsonl"
    line = checkin_line("u1", "a", 100)
    write_lines(p, [line, line])
    stream = load_checkins(p, registry)
    assert len(stream) == 1
    assert stream.dropped_duplicates == 1


def test_checkins_malformed_line_cites_line_number(tmp_path, registry):
    p = tmp_path / "checkins.jsonl"
    write_lines(p, [checkin_line("u1", "a", 100), "{not json"])
    with pytest.raises(IngestError, match=":2:"):
        load_checkins(p, registry)


def test_checkins_nonpositive_ts_rejected(tmp_path, registry):
    p = tmp_path / "checkins.jsonl"
    write_lines(p, [checkin_line("u1", "a", 0)])
    with pytest.raises(IngestError, match="positive"):
        load_checkins(p, registry)


def test_checkins_empty_file_is_empty_stream(tmp_path, registry):
    p = tmp_path / "checkins.jsonl"
    p.write_text("", encoding="utf-8")
    stream = load_checkins(p, registry)
    assert len(stream) == 0
    assert stream.time_span is None


def test_checkins_comment_lines_ignored(tmp_path, registry):
    p = tmp_path / "checkins.jsonl"
    write_lines(p, ["# header comment", checkin_line("u1", "a", 100)])
    assert len(load_checkins(p, registry)) == 1


def test_checkins_roundtrip_idempotent(tmp_path, registry):
    p = tmp_path / "checkins.jsonl"
    write_lines(p, [
        checkin_line("u2", "a", 500),
        checkin_line("u1", "b", 300),
        checkin_line("u1", "a", 100),
        checkin_line("u1", "a", 100),
    ])
    stream = load_checkins(p, registry)
    out = tmp_path / "roundtrip.jsonl"
    write_checkins(stream, out)
    reloaded = load_checkins(out, registry)
    assert reloaded.events == stream.events
    assert reloaded.time_span == stream.time_span


def test_registry_roundtrip(tmp_path, registry):
    out = tmp_path / "roundtrip.csv"
    write_registry(registry, out)
    reloaded = load_registry(out)
    assert len(reloaded) == len(registry)
    for v in registry:
        assert reloaded[v.venue_id] == v


def test_drop_counts_balance_line_count(tmp_path, registry):
    lines = [
        checkin_line("u1", "a", 100),
        checkin_line("u1", "a", 100),
        checkin_line("u1", "nope", 200),
        checkin_line("u3", "c", 50),
    ]
    p = tmp_path / "checkins.jsonl"
    write_lines(p, lines)
    stream = load_checkins(p, registry)
    assert len(stream) + stream.dropped_duplicates + stream.dropped_unknown_venue == len(lines)


def test_event_equality_is_value_based():
    assert CheckinEvent("u", "v", 1) == CheckinEvent("u", "v", 1)
