"""qhjlab: a 1D quantum-trajectory laboratory.

Stationary Schrodinger solutions, quantum Hamilton-Jacobi microstates,
energy-variational derivatives, and Bohm/Floyd trajectory integration with a
scenario-driven CLI.
"""

from .errors import QhjlabError
from .units import NATURAL, UnitsConfig

__version__ = "0.1.0"

__all__ = ["QhjlabError", "UnitsConfig", "NATURAL", "__version__"]
