"""Numerical laboratory for advected reaction-diffusion fronts with a KPP-to-bistable transition."""

from .reactions import (
    HeterogeneousField,
    Reaction,
    build_blend,
    build_cubic_bistable,
    build_kpp,
    build_modified_bistable,
    validate_hypotheses,
)
from .waves import WaveProfile, bistable_front, kpp_front, kpp_min_speed
from .solver import PlateauBump, Problem, Trajectory, frame_shift, integrate

__version__ = "0.1.0"
