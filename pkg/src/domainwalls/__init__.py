"""Heteroclinic domain-wall orbits of a real two-amplitude system by energy minimization."""

__version__ = "0.1.0"

from .model import Params, Profile, EnergyReport, Equilibrium, potential
from .energy import energy, energy_gradient, el_residual
from .minimize import SolveOptions, SolveResult, minimize, continuation
from .reduced import reduced_orbit, reduced_energy

__all__ = [
    "Params",
    "Profile",
    "EnergyReport",
    "Equilibrium",
    "potential",
    "energy",
    "energy_gradient",
    "el_residual",
    "SolveOptions",
    "SolveResult",
    "minimize",
    "continuation",
    "reduced_orbit",
    "reduced_energy",
]
