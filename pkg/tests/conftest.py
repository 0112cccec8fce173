import pytest

from placenet.ingest import CheckinEvent, CheckinStream, Venue, VenueRegistry
from placenet.snapshot import PlaceGraph, activity_profiles, window_stream
from placenet.synthgen import CityConfig, generate_checkins, generate_city


def make_graph(edges, window=(0, 100)):
    """PlaceGraph from a {(origin, dest): weight} dict."""
    return PlaceGraph(window, edges)


def make_stream(rows, venues=None):
    """CheckinStream from (user, venue, ts) rows; registry synthesized if absent."""
    if venues is None:
        ids = sorted({v for _, v, _ in rows})
        venues = [Venue(v, 0.0, 0.0, "other") for v in ids]
    registry = VenueRegistry(venues)
    events = sorted(
        (CheckinEvent(u, v, t) for u, v, t in rows),
        key=lambda e: (e.user_id, e.timestamp),
    )
    return CheckinStream(events, registry)


@pytest.fixture(scope="session")
def small_city():
    """Seeded 300-venue fixture shared across tests (two 90-day windows)."""
    config = CityConfig(n_venues=300, n_users=80, span_days=180, seed=7)
    registry = generate_city(config)
    stream = generate_checkins(registry, config)
    return config, registry, stream


@pytest.fixture(scope="session")
def small_city_graphs(small_city):
    _, registry, stream = small_city
    graphs = window_stream(stream, 90 * 86400)
    return registry, stream, graphs


@pytest.fixture(scope="session")
def small_city_profiles(small_city_graphs):
    registry, stream, graphs = small_city_graphs
    profiles = [activity_profiles(stream, g, T=168) for g in graphs]
    return registry, stream, graphs, profiles
