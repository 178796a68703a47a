"""Address-hopping DDoS defense toolkit."""

__version__ = "0.1.0"
