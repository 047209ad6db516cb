"""Finite-difference electrostatics on periodic staggered grids.

Local relaxation minimizers for the discrete Poisson and Poisson-Boltzmann
energies under Gauss' law, potential-based reference solvers, and a
manufactured-solution harness.  ``BACKEND`` names the active kernel
implementation (``"cython"`` or ``"python"``).
"""
from ._backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
