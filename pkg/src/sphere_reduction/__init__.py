"""Averaged geodesic dynamics on slightly deformed spheres."""

from .core import (
    Deformation,
    ParticleState,
    PlaneBasis,
    SkewMatrix,
    momentum_from_state,
    pair_index,
    plane_basis,
    plucker_residuals,
    vector_form_n3,
)
from .polynomial import Polynomial

__version__ = "0.1.0"
