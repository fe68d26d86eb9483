"""Resource-adequacy toolkit: capacity expansion LPs, nodal shadow prices,
system-defining event detection, clustering and weather-year resilience."""

__version__ = "0.1.0"
