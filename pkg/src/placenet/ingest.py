"""Loading, validation, and serialization of venue registries and check-in streams.

File formats:
  * venue registry: CSV with header ``venue_id,lat,lon,category``
  * check-ins: one JSON object per line with keys ``user``, ``venue``, ``ts``
    (integer epoch seconds); lines starting with ``#`` are ignored
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

CATEGORIES = ("food", "travel", "nightlife", "shop", "work", "outdoors", "other")
FALLBACK_CATEGORY = "other"

REGISTRY_HEADER = ["venue_id", "lat", "lon", "category"]


class IngestError(ValueError):
    """Malformed registry or check-in input."""


@dataclass(frozen=True)
class Venue:
    venue_id: str
    lat: float
    lon: float
    category: str


@dataclass(frozen=True)
class CheckinEvent:
    user_id: str
    venue_id: str
    timestamp: int


class VenueRegistry:
    """Immutable venue_id -> Venue map.

    ``unknown_category_count`` counts rows whose category label was outside
    the known set and was mapped to the fallback.
    """

    def __init__(self, venues: Iterable[Venue], unknown_category_count: int = 0):
        self._venues: dict[str, Venue] = {}
        for v in venues:
            if v.venue_id in self._venues:
                raise IngestError(f"duplicate venue_id {v.venue_id!r}")
            if not -90.0 <= v.lat <= 90.0:
                raise IngestError(f"venue {v.venue_id!r}: lat {v.lat} out of [-90, 90]")
            if not -180.0 <= v.lon <= 180.0:
                raise IngestError(f"venue {v.venue_id!r}: lon {v.lon} out of [-180, 180]")
            self._venues[v.venue_id] = v
        self.unknown_category_count = unknown_category_count

    def __len__(self) -> int:
        return len(self._venues)

    def __contains__(self, venue_id: str) -> bool:
        return venue_id in self._venues

    def __getitem__(self, venue_id: str) -> Venue:
        return self._venues[venue_id]

    def __iter__(self) -> Iterator[Venue]:
        return iter(self._venues.values())

    @property
    def venue_ids(self):
        return self._venues.keys()


@dataclass
class CheckinStream:
    """Check-in events sorted by (user_id, timestamp), with load bookkeeping."""

    events: list[CheckinEvent]
    registry: VenueRegistry
    time_span: tuple[int, int] | None = None
    dropped_unknown_venue: int = 0
    dropped_duplicates: int = 0

    def __post_init__(self):
        if self.time_span is None and self.events:
            ts = [e.timestamp for e in self.events]
            self.time_span = (min(ts), max(ts))

    def __len__(self) -> int:
        return len(self.events)


def load_registry(path: str | Path) -> VenueRegistry:
    """Parse a venue registry CSV, validating ids, coordinate ranges, and categories.

    Unknown category labels are mapped to ``other`` and counted; duplicate ids
    and out-of-range coordinates are hard errors carrying the offending line number.
    """
    path = Path(path)
    venues: dict[str, Venue] = {}
    unknown = 0
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: empty registry file") from None
        if header != REGISTRY_HEADER:
            raise IngestError(f"{path}: expected header {','.join(REGISTRY_HEADER)!r}, got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise IngestError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            venue_id, lat_s, lon_s, category = row
            try:
                lat = float(lat_s)
                lon = float(lon_s)
            except ValueError:
                raise IngestError(f"{path}:{lineno}: non-numeric coordinate") from None
            if venue_id in venues:
                raise IngestError(f"{path}:{lineno}: duplicate venue_id {venue_id!r}")
            if not -90.0 <= lat <= 90.0:
                raise IngestError(f"{path}:{lineno}: lat {lat} out of [-90, 90]")
            if not -180.0 <= lon <= 180.0:
                raise IngestError(f"{path}:{lineno}: lon {lon} out of [-180, 180]")
            if category not in CATEGORIES:
                unknown += 1
                category = FALLBACK_CATEGORY
            venues[venue_id] = Venue(venue_id, lat, lon, category)
    if unknown:
        logger.warning("%s: %d venue(s) with unknown category mapped to %r", path, unknown, FALLBACK_CATEGORY)
    registry = VenueRegistry(venues.values(), unknown_category_count=unknown)
    return registry


def load_checkins(path: str | Path, registry: VenueRegistry) -> CheckinStream:
    """Parse a check-in file against a registry.

    Events are sorted by (user, timestamp). Duplicate (user, venue, timestamp)
    triples collapse to one event; events referencing unknown venues are dropped
    and counted. A malformed line is a hard error with its line number; an empty
    file yields an empty stream.
    """
    path = Path(path)
    events: list[CheckinEvent] = []
    seen: set[tuple[str, str, int]] = set()
    dropped_unknown = 0
    dropped_dup = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            try:
                record = json.loads(stripped)
            except json.JSONDecodeError:
                raise IngestError(f"{path}:{lineno}: invalid JSON") from None
            if not isinstance(record, dict) or not {"user", "venue", "ts"} <= record.keys():
                raise IngestError(f"{path}:{lineno}: record must have keys user, venue, ts")
            user, venue, ts = record["user"], record["venue"], record["ts"]
            if not isinstance(user, str) or not isinstance(venue, str):
                raise IngestError(f"{path}:{lineno}: user and venue must be strings")
            if isinstance(ts, bool) or not isinstance(ts, int) or ts <= 0:
                raise IngestError(f"{path}:{lineno}: ts must be a positive integer")
            key = (user, venue, ts)
            if key in seen:
                dropped_dup += 1
                continue
            seen.add(key)
            if venue not in registry:
                dropped_unknown += 1
                continue
            events.append(CheckinEvent(user, venue, ts))
    events.sort(key=lambda e: (e.user_id, e.timestamp))
    return CheckinStream(
        events,
        registry,
        dropped_unknown_venue=dropped_unknown,
        dropped_duplicates=dropped_dup,
    )


def write_checkins(stream: CheckinStream, path: str | Path) -> None:
    """Serialize a stream in the check-in file format (deterministic byte output)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ev in stream.events:
            fh.write(json.dumps(
                {"user": ev.user_id, "venue": ev.venue_id, "ts": ev.timestamp},
                separators=(",", ":")) + "\n")


def write_registry(registry: VenueRegistry, path: str | Path) -> None:
    """Serialize a registry in the venue CSV format (deterministic byte output)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REGISTRY_HEADER)
        for v in registry:
            writer.writerow([v.venue_id, repr(v.lat), repr(v.lon), v.category])
