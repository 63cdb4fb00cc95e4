"""Simulation and calibration of a heralded single-photon source.

The source mixes two single-mode squeezed coherent beams on a 50-50 beam
splitter to obtain a displaced two-mode squeezed state; detecting one photon
in one output port heralds a photon in the other. The squeezing strength is
set by slow light in a two-layer nonlinear photonic crystal.
"""

__version__ = "0.1.0"

from heraldsim.errors import (
    BandEdgeError,
    ConfigError,
    ConvergenceError,
    DegenerateError,
    DegenerateNullspaceError,
    EmptyWindowError,
    HeraldSimError,
    QuadratureError,
    RootCountError,
    TruncationError,
    UnknownPresetError,
)

__all__ = [
    "__version__",
    "BandEdgeError",
    "ConfigError",
    "ConvergenceError",
    "DegenerateError",
    "DegenerateNullspaceError",
    "EmptyWindowError",
    "HeraldSimError",
    "QuadratureError",
    "RootCountError",
    "TruncationError",
    "UnknownPresetError",
]
