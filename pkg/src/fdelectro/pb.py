"""Local relaxation for the discrete Poisson-Boltzmann energy.

Ions of each species hop between neighbouring nodes.  Moving ``zeta`` units of
species ``s`` across an edge changes the edge displacement by ``-h q_s zeta``,
so Gauss' law and the species mass hold exactly after every move; ``zeta`` is
the unique minimizer of the energy along that move.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ._backend import get_kernels
from .grid import Displacement, NodeScalar, _check_same
from .operators import EdgePermittivity, axis_index, divergence
from .poisson import IterationReport, SolveOptions, SweepRecord, _cumulative_field

log = logging.getLogger(__name__)

__all__ = [
    "Species",
    "PBProblem",
    "PBState",
    "pb_energy",
    "init_state",
    "zeta_solve",
    "zeta_residual",
    "edge_update",
    "boltzmann_residual",
    "recover_potential",
    "solve_pb",
]


@dataclass(frozen=True)
class Species:
    """Ionic species with signed valence ``q`` and total amount ``total_mass``."""

    q: float
    total_mass: float

    def __post_init__(self):
        if self.q == 0:
            raise ValueError("species valence must be nonzero")
        if not self.total_mass > 0:
            raise ValueError("species total mass must be positive")


@dataclass
class PBProblem:
    eps: EdgePermittivity
    rho_h: NodeScalar
    species: tuple[Species, ...]

    def __post_init__(self):
        _check_same(self.eps.grid, self.rho_h.grid)
        self.species = tuple(self.species)
        if not self.species:
            raise ValueError("need at least one ionic species")
        ions = sum(s.q * s.total_mass for s in self.species)
        fixed = self.grid.h**3 * float(self.rho_h.values.sum())
        scale = sum(abs(s.q) * s.total_mass for s in self.species) + abs(fixed) + 1.0
        if abs(ions + fixed) > 1e-12 * scale:
            raise ValueError(f"discrete charge neutrality violated by {ions + fixed:.3e}")

    @property
    def grid(self):
        return self.rho_h.grid

    @property
    def valences(self) -> np.ndarray:
        return np.array([s.q for s in self.species], dtype=np.float64)


@dataclass
class PBState:
    """Concentrations ``c[s, i, j, k]``, the displacement ``D`` and species valences."""

    c: np.ndarray
    D: Displacement
    valences: np.ndarray

    def __post_init__(self):
        self.c = np.ascontiguousarray(self.c, dtype=np.float64)
        self.valences = np.ascontiguousarray(self.valences, dtype=np.float64)
        if self.valences.shape != (self.c.shape[0],):
            raise ValueError("need one valence per species")
        if self.c.ndim != 4 or self.c.shape[1:] != self.D.grid.shape:
            raise ValueError(f"concentrations must have shape (M, {self.D.grid.N}, ...)")

    @property
    def grid(self):
        return self.D.grid

    @property
    def concentrations(self) -> list[NodeScalar]:
        return [NodeScalar(self.grid, cs) for cs in self.c]

    def masses(self) -> np.ndarray:
        return self.grid.h**3 * self.c.sum(axis=(1, 2, 3))

    def gauss_residual(self, problem: PBProblem) -> float:
        charge = problem.rho_h.values + np.tensordot(self.valences, self.c, axes=1)
        return float(np.abs(divergence(self.D).values - charge).max())

    def copy(self) -> "PBState":
        return PBState(self.c.copy(), self.D.copy(), self.valences)


def pb_energy(state: PBState, eps: EdgePermittivity) -> float:
    """Electrostatic energy plus ideal-gas entropy, with ``0 log 0 = 0``."""
    _check_same(state.grid, eps.grid)
    c = state.c
    if np.any(c < 0):
        raise ValueError("negative concentration")
    h3 = state.grid.h**3
    field = sum(np.sum(d * d / e) for d, e in zip(state.D.components(), eps.components()))
    entropy = np.sum(np.where(c > 0, c * np.log(np.where(c > 0, c, 1.0)), 0.0))
    return float(0.5 * h3 * field + h3 * entropy)


def init_state(problem: PBProblem) -> PBState:
    """Uniform concentrations and a Gauss-law-consistent displacement."""
    grid = problem.grid
    c = np.stack([np.full(grid.shape, s.total_mass / grid.L**3) for s in problem.species])
    charge = problem.rho_h.values + np.tensordot(problem.valences, c, axes=1)
    return PBState(c, _cumulative_field(grid, charge), problem.valences)


def zeta_residual(alpha, beta, gamma, a, b, zeta) -> float:
    return math.log(beta + zeta) - math.log(alpha - zeta) - b * gamma + a * zeta


def zeta_solve(alpha: float, beta: float, gamma: float, a: float, b: float,
               backend: str | None = None) -> float:
    """Root in ``(-beta, alpha)`` of ``log(beta+z) - log(alpha-z) - b*gamma + a*z``.

    Newton's method from ``z = 0``, falling back to bisection whenever a step
    would leave the current sign bracket; the function is strictly increasing
    so the bracket always shrinks onto the root.
    """
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    if not a > 0:
        raise ValueError("a must be positive")
    return float(get_kernels(backend).zeta_root(alpha, beta, gamma, a, b))


def edge_update(state: PBState, i: int, j: int, k: int, axis, species_index: int,
                eps: EdgePermittivity, backend: str | None = None):
    """Move species ``species_index`` across the ``axis`` edge leaving node ``(i, j, k)``.

    Updates ``state`` in place and returns ``(state, zeta)``.
    """
    n = state.grid.N
    if not all(0 <= x < n for x in (i, j, k)):
        raise IndexError(f"edge index ({i}, {j}, {k}) outside 0..{n - 1}")
    m = state.c.shape[0]
    if not 0 <= species_index < m:
        raise IndexError(f"species index {species_index} outside 0..{m - 1}")
    q = state.valences
    iu, iv, iw = eps.reciprocals()
    D = state.D
    z, _ = get_kernels(backend).edge_relax(
        state.c, D.u, D.v, D.w, iu, iv, iw, q, state.grid.h, i, j, k, axis_index(axis), species_index
    )
    return state, float(z)


def boltzmann_residual(state: PBState, eps: EdgePermittivity) -> float:
    """Largest violation of ``log(c_next / c) = h q D_edge / eps_edge`` over all edges."""
    c = state.c
    if np.any(c <= 0):
        raise ValueError("concentrations must be strictly positive")
    h = state.grid.h
    logc = np.log(c)
    worst = 0.0
    for s, q in enumerate(state.valences):
        for a, (d, e) in enumerate(zip(state.D.components(), eps.components())):
            r = np.roll(logc[s], -1, axis=a) - logc[s] - h * q * d / e
            worst = max(worst, float(np.abs(r).max()))
    return worst


def recover_potential(state: PBState, species_index: int) -> NodeScalar:
    """Mean-zero potential implied by one species' Boltzmann factor."""
    cs = state.c[species_index]
    if np.any(cs <= 0):
        raise ValueError("concentrations must be strictly positive")
    phi = -np.log(cs) / state.valences[species_index]
    return NodeScalar(state.grid, phi - phi.mean())


def solve_pb(problem: PBProblem, opts: SolveOptions | None = None, interleave_displacement: bool = True,
             state0: PBState | None = None):
    """Minimize the discrete PB energy by sweeps of ion-transfer updates.

    At each grid point every species is moved across the +x edge, then the +y
    edge, then the +z edge; with ``interleave_displacement`` the three face
    updates of that point follow.  Stops when the largest ``|zeta|`` (and
    ``|eta|`` when interleaving) of a sweep drops below ``opts.tol_eta``.
    """
    opts = opts or SolveOptions()
    grid, eps = problem.grid, problem.eps
    state = init_state(problem) if state0 is None else state0.copy()
    kern = get_kernels(opts.backend)
    iu, iv, iw = eps.reciprocals()
    q = state.valences
    limit = opts.sweep_limit(grid.N, factor=40)
    D = state.D

    report = IterationReport(initial_energy=pb_energy(state, eps))
    for sweep in range(1, limit + 1):
        zmax, emax, clamped = kern.pb_sweep(state.c, D.u, D.v, D.w, iu, iv, iw, q, grid.h,
                                            interleave_displacement)
        if clamped:
            report.clamp_events += clamped
            log.warning("sweep %d: %d concentrations clamped at the positivity floor", sweep, clamped)
        report.records.append(
            SweepRecord(sweep, pb_energy(state, eps), emax, 0.0, state.gauss_residual(problem), zmax)
        )
        report.sweeps_used = sweep
        if zmax < opts.tol_eta and emax < opts.tol_eta:
            report.converged = True
            break
    if not report.converged:
        log.warning("PB solve stopped after %d sweeps without meeting tol %.1e",
                    report.sweeps_used, opts.tol_eta)
    return state, report
