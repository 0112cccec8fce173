"""Seeded synthetic cities and check-in streams.

The generator reproduces the qualitative structure the analysis expects
(heavy-tailed venue popularity, spatial clustering, category-specific hour
profiles) while deliberately using an exponential distance decay, so the
power-law gravity predictors are never evaluated against their own
generating mechanism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import CATEGORIES, CheckinEvent, CheckinStream, Venue, VenueRegistry
from .predict import haversine_km

DEFAULT_CATEGORY_MIX = (
    ("food", 0.40),
    ("travel", 0.04),
    ("nightlife", 0.12),
    ("shop", 0.16),
    ("work", 0.12),
    ("outdoors", 0.08),
    ("other", 0.08),
)

# travel venues are few but soak up a disproportionate share of visits
# (hub role); the boost puts their check-in share near 13% under the
# default mix
DEFAULT_POPULARITY_BOOST = (("travel", 4.0),)

# venues per spatial cluster center
VENUES_PER_CENTER = 50

# hour-profile floor so every venue stays reachable at any hour
PROFILE_FLOOR = 0.05

SIM_START_TS = 1356998400  # 2013-01-01 00:00 UTC, a Tuesday


@dataclass(frozen=True)
class CityConfig:
    n_venues: int = 2000
    n_users: int = 500
    bbox: tuple[float, float, float, float] = (40.55, -74.15, 40.95, -73.65)  # lat_min, lon_min, lat_max, lon_max
    category_mix: tuple[tuple[str, float], ...] = DEFAULT_CATEGORY_MIX
    category_popularity_boost: tuple[tuple[str, float], ...] = DEFAULT_POPULARITY_BOOST
    zipf_exponent: float = 1.0
    decay_exponent: float = 1.0
    decay_scale_km: float = 2.0
    span_days: int = 180
    start_ts: int = SIM_START_TS
    gap_median_hours: float = 2.0
    gap_sigma: float = 2.0
    seed: int = 42

    def __post_init__(self):
        if self.n_venues <= 0 or self.n_users <= 0 or self.span_days <= 0:
            raise ValueError("n_venues, n_users and span_days must be positive")
        fractions = dict(self.category_mix)
        if set(fractions) - set(CATEGORIES):
            raise ValueError(f"unknown categories in mix: {set(fractions) - set(CATEGORIES)}")
        total = sum(fractions.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"category fractions sum to {total}, expected 1")


def generate_city(config: CityConfig) -> VenueRegistry:
    """Place venues around Gaussian cluster centers inside the bounding box."""
    lat_min, lon_min, lat_max, lon_max = config.bbox
    if lat_max <= lat_min or lon_max <= lon_min:
        raise ValueError(f"degenerate bounding box {config.bbox}")
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
    n = config.n_venues
    n_centers = max(1, n // VENUES_PER_CENTER)
    centers_lat = rng.uniform(lat_min, lat_max, n_centers)
    centers_lon = rng.uniform(lon_min, lon_max, n_centers)
    sigma = 0.01 * math.hypot(lat_max - lat_min, lon_max - lon_min)
    which = rng.integers(0, n_centers, n)
    lat = np.clip(centers_lat[which] + rng.normal(0.0, sigma, n), lat_min, lat_max)
    lon = np.clip(centers_lon[which] + rng.normal(0.0, sigma, n), lon_min, lon_max)
    names = [name for name, _ in config.category_mix]
    fractions = [frac for _, frac in config.category_mix]
    cats = rng.choice(len(names), size=n, p=fractions)
    width = len(str(n - 1))
    venues = [
        Venue(f"v{k:0{width}d}", float(lat[k]), float(lon[k]), names[cats[k]])
        for k in range(n)
    ]
    return VenueRegistry(venues)


def _hour_weights() -> dict[str, np.ndarray]:
    """48-slot (hour x weekday/weekend) activity weight per category."""
    hours = np.arange(24)

    def bump(center: float, width: float) -> np.ndarray:
        d = np.minimum(np.abs(hours - center), 24 - np.abs(hours - center))
        return np.exp(-0.5 * (d / width) ** 2)

    flat = np.ones(24)
    weekday = {
        "food": PROFILE_FLOOR + bump(12, 1.5) + bump(19, 1.5),
        "travel": PROFILE_FLOOR + bump(8, 1.5) + bump(18, 1.5),
        "nightlife": PROFILE_FLOOR + bump(0, 2.0),  # covers 22:00-02:00
        "work": PROFILE_FLOOR + ((hours >= 9) & (hours < 17)).astype(float),
        "shop": flat,
        "outdoors": flat,
        "other": flat,
    }
    weekend = dict(weekday)
    weekend["work"] = np.full(24, PROFILE_FLOOR)
    return {
        cat: np.concatenate([weekday[cat], weekend[cat]]) for cat in CATEGORIES
    }


def _slot(t: int) -> int:
    """Index into the 48-slot weights: hour + 24 if the day is a weekend."""
    hour = (t // 3600) % 24
    weekday = (t // 86400 + 3) % 7  # Monday = 0
    return int(hour + (24 if weekday >= 5 else 0))


def generate_checkins(registry: VenueRegistry, config: CityConfig) -> CheckinStream:
    """Simulate per-user venue walks.

    The next venue is drawn proportionally to zipf popularity, exponential
    distance decay from the current venue, and the category's activity weight
    at the local hour; inter-check-in gaps are log-normal with the configured
    median. Per-user RNG streams are split from the master seed, so output is
    independent of simulation order.
    """
    venues = sorted(registry, key=lambda v: v.venue_id)
    n = len(venues)
    lat = np.array([v.lat for v in venues])
    lon = np.array([v.lon for v in venues])
    cat_index = np.array([CATEGORIES.index(v.category) for v in venues])

    master = np.random.SeedSequence([config.seed, 1])
    children = master.spawn(config.n_users + 1)
    pop_rng = np.random.default_rng(children[0])
    ranks = np.empty(n, dtype=float)
    ranks[pop_rng.permutation(n)] = np.arange(1, n + 1)
    popularity = ranks ** (-config.zipf_exponent)
    boost = dict(config.category_popularity_boost)
    for k, v in enumerate(venues):
        popularity[k] *= boost.get(v.category, 1.0)

    hour_weights = _hour_weights()
    weight_table = np.stack([hour_weights[c] for c in CATEGORIES])  # (7, 48)
    # base[slot, venue] = popularity x category hour weight
    base = popularity[None, :] * weight_table[cat_index, :].T

    lam = config.decay_scale_km
    precompute = n <= 4000
    if precompute:
        decay = np.empty((n, n))
        for k in range(n):
            decay[k] = np.exp(-(_distance_row(lat, lon, k) / lam) ** config.decay_exponent)
    else:
        decay = None

    end_ts = config.start_ts + config.span_days * 86400
    mu = math.log(config.gap_median_hours * 3600.0)
    user_width = len(str(config.n_users - 1))
    events: list[CheckinEvent] = []
    for u in range(config.n_users):
        rng = np.random.default_rng(children[u + 1])
        user_id = f"u{u:0{user_width}d}"
        t = config.start_ts + int(rng.integers(0, 86400))
        current = int(rng.choice(n, p=popularity / popularity.sum()))
        while t < end_ts:
            events.append(CheckinEvent(user_id, venues[current].venue_id, t))
            gap = int(round(math.exp(rng.normal(mu, config.gap_sigma))))
            t += max(gap, 60)
            if t >= end_ts:
                break
            row = decay[current] if precompute else np.exp(
                -(_distance_row(lat, lon, current) / lam) ** config.decay_exponent
            )
            w = base[_slot(t)] * row
            w[current] = 0.0
            total = w.sum()
            if total <= 0.0:
                continue
            cdf = np.cumsum(w)
            current = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    events.sort(key=lambda e: (e.user_id, e.timestamp))
    return CheckinStream(events, registry)


def _distance_row(lat: np.ndarray, lon: np.ndarray, k: int) -> np.ndarray:
    """Haversine distances (km) from venue k to all venues, vectorized."""
    p1 = math.radians(lat[k])
    p2 = np.radians(lat)
    dp = np.radians(lat - lat[k])
    dl = np.radians(lon - lon[k])
    a = np.sin(dp / 2) ** 2 + math.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2.0 * 6371.0088 * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
