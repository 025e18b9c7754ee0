"""Negative-energy scattering and bound states for leaky quantum wires.

A delta-interaction of strength alpha supported on a locally deformed
straight line in the plane carries a single guided mode below the
energy zero.  This package computes transmission and reflection of that
mode, the discrete spectrum below the guided-mode threshold, and a
strong-coupling comparison with a one-dimensional curvature-potential
operator.
"""

__version__ = "0.1.0"

from .geometry import DeformedLineGeometry, build_geometry, build_mesh
from .greens import EnergySpec, KernelPoint
from .scattering import amplitudes, field_map
from .spectrum import find_bound_states
from .comparison1d import CurvatureProfile, conjecture_test

__all__ = [
    "DeformedLineGeometry",
    "build_geometry",
    "build_mesh",
    "EnergySpec",
    "KernelPoint",
    "amplitudes",
    "field_map",
    "find_bound_states",
    "CurvatureProfile",
    "conjecture_test",
    "__version__",
]
