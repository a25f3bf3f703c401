"""Capacity scaling of multi-antenna wireless backhaul networks.

Simulation and analysis tools for line-of-sight MIMO backhaul links under
interference, cut-set upper bounds, long-hop versus short-hop routing and
percolation highways.
"""

from .errors import (
    BackhaulError,
    ConfigError,
    DomainError,
    DomainWarning,
    NumericalError,
    ParameterError,
)

__version__ = "0.1.0"

__all__ = [
    "BackhaulError",
    "ConfigError",
    "DomainError",
    "DomainWarning",
    "NumericalError",
    "ParameterError",
]
