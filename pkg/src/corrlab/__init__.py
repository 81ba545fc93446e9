"""Numerical laboratory for central-limit correctors of elliptic problems
with rapidly oscillating random potentials and coefficients."""

__version__ = "0.1.0"

from . import asymptotics
from . import elliptic
from . import ensemble
from . import greens
from . import helmholtz
from . import randfield
from . import spectral

__all__ = [
    "__version__",
    "asymptotics",
    "elliptic",
    "ensemble",
    "greens",
    "helmholtz",
    "randfield",
    "spectral",
]
