"""Numerical lab for minimal graphs over domains of hyperbolic space and Euclidean space.

Modules
-------
geometry
    Half-space model points, distances, geodesic hyperplanes and reflections.
surfaces
    Quadrature of the invariant profile integrals and their limits.
domains, domain_io, raster
    Domain construction, text format and lattice classification.
pde
    Discrete minimal graph equation, Newton solver, capped sweeps, reflections.
verify
    Executable comparison, barrier, monotonicity and threshold checks.
cli
    Command-line front end (``minigraph``).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .config import SolverConfig, load_config  # noqa: E402
from .errors import (ConsistencyError, DomainError, MinigraphError, NonConvergenceError,  # noqa: E402
                     SolverFailure, UsageError)

__all__ = [
    "ConsistencyError", "DomainError", "MinigraphError", "NonConvergenceError", "SolverConfig",
    "SolverFailure", "UsageError", "__version__", "load_config",
]
