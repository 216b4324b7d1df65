"""Exact verification toolkit for ReLU/identity networks with rational weights."""

from .exact import INF, Metric, dist, parse_rational
from .network import Network, evaluate

__version__ = "0.1.0"
