"""Physical, homophily and social community influence in event-based social networks."""

__version__ = "0.1.0"
