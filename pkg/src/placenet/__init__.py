"""Place networks from check-in streams: construction, dynamics, topology, link prediction."""

__version__ = "0.1.0"
