"""Value regions of holomorphic self-maps of the disk with two fixed boundary points.

Modules
-------
conformal  strip, Cayley and Koebe maps; horodisks
region     the closed-form region, its boundary arcs and membership tests
loewner    the controlled Loewner-Kufarev equation with atomic measures
extremal   Pontryagin extremals that reach the boundary
slit       single-atom evolutions, the chordal frame and circular slits
harness    randomized verification experiments
cli        command-line front end
"""

from .conformal import DomainError
from .ode import IntegrationError, SolverConfig
from .region import Branch, RegionSpec, Verdict, classify, contains, region_in_disk

__all__ = [
    "Branch",
    "DomainError",
    "IntegrationError",
    "RegionSpec",
    "SolverConfig",
    "Verdict",
    "classify",
    "contains",
    "region_in_disk",
]

__version__ = "0.1.0"
