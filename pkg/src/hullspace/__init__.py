"""Hull shape morphing, active-subspace reduction, and response surfaces.

The toolkit covers the stages of a resistance parameter study: free-form
deformation of a triangulated hull, hydrostatics and rigid-body kinematics,
steady-state extraction from oscillatory force histories, active-subspace
estimation from input/output samples, and low-dimensional polynomial
response surfaces -- all orchestrated by a deterministic study pipeline and
a CLI.
"""

from .errors import (
    ConvergenceError,
    HullspaceError,
    NumericalError,
    STLParseError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "HullspaceError",
    "NumericalError",
    "STLParseError",
    "ValidationError",
    "__version__",
]
