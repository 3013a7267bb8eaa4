"""Discrete diagnostics for spectral pinching of closed surfaces in space forms."""

__version__ = "0.1.0"

from .spaceform import AmbientModel, DomainError, c_delta, s_delta  # noqa: E402
from .mesh import MeshError, SurfaceMesh, generate_icosphere, read_mesh, write_mesh  # noqa: E402
from .spectral import ConvergenceError, assemble, lambda1  # noqa: E402
from .pinch import PinchReport, StageError, assemble_report  # noqa: E402

__all__ = [
    "AmbientModel", "ConvergenceError", "DomainError", "MeshError", "PinchReport", "StageError",
    "SurfaceMesh", "assemble", "assemble_report", "c_delta", "generate_icosphere", "lambda1",
    "read_mesh", "s_delta", "write_mesh",
]
