"""Periodic grid containers, discrete inner products and field sampling.

Every container stores one period of an N x N x N periodic grid function as
C-contiguous float64 arrays.  Staggered components use the shared convention
``u[i, j, k] <-> u_{i+1/2, j, k}``, ``v[i, j, k] <-> v_{i, j+1/2, k}`` and
``w[i, j, k] <-> w_{i, j, k+1/2}``; index wrap is applied by ``at``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "NodeScalar",
    "NodeVector",
    "Displacement",
    "FaceVector",
    "build_grid",
    "discrete_average",
    "subtract_mean",
    "inner_scalar",
    "norm_scalar",
    "max_norm_scalar",
    "inner_displacement_weighted",
    "norm_displacement_weighted",
    "max_norm_displacement",
    "project_source",
    "sample_nodes",
    "sample_displacement",
    "midpoint_average",
]

Field = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid covering ``[0, L]^3`` with ``N`` cells per axis."""

    L: float
    N: int

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.N, self.N, self.N)

    def coords(self, offset: Sequence[float] = (0.0, 0.0, 0.0)):
        """Meshgrid of physical coordinates shifted by ``offset`` cells per axis."""
        ax = [(np.arange(self.N) + o) * self.h for o in offset]
        return np.meshgrid(*ax, indexing="ij")


def build_grid(L: float, N: int) -> Grid:
    if not (L > 0) or not np.isfinite(L):
        raise ValueError(f"box length must be positive, got L={L!r}")
    if int(N) != N or N < 2:
        raise ValueError(f"need an integer N >= 2, got N={N!r}")
    return Grid(float(L), int(N))


def _as_field(grid: Grid, values) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.shape != grid.shape:
        raise ValueError(f"expected shape {grid.shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("grid values must be finite")
    return arr


def _check_same(*grids: Grid) -> Grid:
    g0 = grids[0]
    for g in grids[1:]:
        if g != g0:
            raise ValueError(f"grid mismatch: {g0} vs {g}")
    return g0


def _wrap(grid: Grid, i: int, j: int, k: int) -> tuple[int, int, int]:
    n = grid.N
    return (i % n, j % n, k % n)


@dataclass
class NodeScalar:
    """A periodic scalar grid function; ``values[i, j, k]`` is the value at ``(ih, jh, kh)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = _as_field(self.grid, self.values)

    @classmethod
    def zeros(cls, grid: Grid) -> "NodeScalar":
        return cls(grid, np.zeros(grid.shape))

    def at(self, i: int, j: int, k: int) -> float:
        return float(self.values[_wrap(self.grid, i, j, k)])

    def copy(self) -> "NodeScalar":
        return NodeScalar(self.grid, self.values.copy())


@dataclass
class NodeVector:
    """Three periodic node-centred components, e.g. a forward gradient."""

    grid: Grid
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        self.x = _as_field(self.grid, self.x)
        self.y = _as_field(self.grid, self.y)
        self.z = _as_field(self.grid, self.z)

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.x, self.y, self.z)

    def at(self, i: int, j: int, k: int) -> tuple[float, float, float]:
        idx = _wrap(self.grid, i, j, k)
        return (float(self.x[idx]), float(self.y[idx]), float(self.z[idx]))


@dataclass
class Displacement:
    """Staggered edge-midpoint field ``D = (u, v, w)``."""

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.u = _as_field(self.grid, self.u)
        self.v = _as_field(self.grid, self.v)
        self.w = _as_field(self.grid, self.w)

    @classmethod
    def zeros(cls, grid: Grid) -> "Displacement":
        return cls(grid, np.zeros(grid.shape), np.zeros(grid.shape), np.zeros(grid.shape))

    @classmethod
    def constant(cls, grid: Grid, a: float, b: float, c: float) -> "Displacement":
        return cls(grid, np.full(grid.shape, a), np.full(grid.shape, b), np.full(grid.shape, c))

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.u, self.v, self.w)

    def at(self, i: int, j: int, k: int) -> tuple[float, float, float]:
        idx = _wrap(self.grid, i, j, k)
        return (float(self.u[idx]), float(self.v[idx]), float(self.w[idx]))

    def copy(self) -> "Displacement":
        return Displacement(self.grid, self.u.copy(), self.v.copy(), self.w.copy())

    def mean(self) -> np.ndarray:
        """Discrete averages of the three components."""
        return np.array([c.mean() for c in self.components()])

    def __add__(self, other: "Displacement") -> "Displacement":
        _check_same(self.grid, other.grid)
        return Displacement(self.grid, self.u + other.u, self.v + other.v, self.w + other.w)

    def __sub__(self, other: "Displacement") -> "Displacement":
        _check_same(self.grid, other.grid)
        return Displacement(self.grid, self.u - other.u, self.v - other.v, self.w - other.w)

    def __neg__(self) -> "Displacement":
        return Displacement(self.grid, -self.u, -self.v, -self.w)


@dataclass
class FaceVector:
    """Discrete curl values; entry ``(i, j, k)`` lives at ``(i+1/2, j+1/2, k+1/2)``."""

    grid: Grid
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        self.x = _as_field(self.grid, self.x)
        self.y = _as_field(self.grid, self.y)
        self.z = _as_field(self.grid, self.z)

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.x, self.y, self.z)

    def max_abs(self) -> float:
        return float(max(np.abs(c).max() for c in self.components()))


def discrete_average(f: NodeScalar) -> float:
    return float(f.values.sum() / f.grid.N**3)


def subtract_mean(f: NodeScalar) -> NodeScalar:
    """Return ``f - A_h(f)``, a mean-zero grid function."""
    return NodeScalar(f.grid, f.values - discrete_average(f))


def inner_scalar(f: NodeScalar, g: NodeScalar) -> float:
    grid = _check_same(f.grid, g.grid)
    return float(grid.h**3 * np.sum(f.values * g.values))


def norm_scalar(f: NodeScalar) -> float:
    return float(np.sqrt(inner_scalar(f, f)))


def max_norm_scalar(f: NodeScalar) -> float:
    return float(np.abs(f.values).max())


def inner_displacement_weighted(D: Displacement, E: Displacement, eps=None) -> float:
    """Weighted inner product ``h^3 sum D.E / eps`` over all edges.

    ``eps`` is an :class:`~fdelectro.operators.EdgePermittivity`; ``None`` means
    unit weights, i.e. the plain inner product on staggered fields.
    """
    grid = _check_same(D.grid, E.grid)
    if eps is None:
        total = sum(np.sum(a * b) for a, b in zip(D.components(), E.components()))
    else:
        _check_same(grid, eps.grid)
        total = sum(
            np.sum(a * b / e) for a, b, e in zip(D.components(), E.components(), eps.components())
        )
    return float(grid.h**3 * total)


def norm_displacement_weighted(D: Displacement, eps=None) -> float:
    return float(np.sqrt(inner_displacement_weighted(D, D, eps)))


def max_norm_displacement(D: Displacement) -> float:
    return float(max(np.abs(c).max() for c in D.components()))


def project_source(rho_samples: NodeScalar, mode: str = "poisson", species=()) -> NodeScalar:
    """Make sampled fixed charge compatible with the discrete constraint set.

    In ``"poisson"`` mode the continuous average is taken to be zero and the
    result is ``rho - A_h(rho)``.  In ``"pb"`` mode the continuous average is
    fixed by charge neutrality, ``-(1/L^3) sum_s q_s N_s``, so the result obeys
    ``sum_s q_s N_s + h^3 sum rho_h = 0``.
    """
    rho = rho_samples.values
    grid = rho_samples.grid
    if mode == "poisson":
        return NodeScalar(grid, rho - rho.mean())
    if mode == "pb":
        if len(species) == 0:
            raise ValueError("pb mode needs at least one ionic species")
        ion_charge = sum(s.q * s.total_mass for s in species)
        return NodeScalar(grid, rho - ion_charge / grid.L**3 - rho.mean())
    raise ValueError(f"unknown mode {mode!r}")


def sample_nodes(f: Field, grid: Grid) -> NodeScalar:
    X, Y, Z = grid.coords()
    return NodeScalar(grid, np.broadcast_to(f(X, Y, Z), grid.shape))


def sample_displacement(Dx: Field, Dy: Field, Dz: Field, grid: Grid) -> Displacement:
    """Sample each component of an analytic field at its own edge midpoints."""
    u = Dx(*grid.coords((0.5, 0.0, 0.0)))
    v = Dy(*grid.coords((0.0, 0.5, 0.0)))
    w = Dz(*grid.coords((0.0, 0.0, 0.5)))
    return Displacement(
        grid,
        np.broadcast_to(u, grid.shape),
        np.broadcast_to(v, grid.shape),
        np.broadcast_to(w, grid.shape),
    )


def midpoint_average(D: Displacement) -> NodeVector:
    """Average the two edge values flanking each node along each axis."""
    u, v, w = D.components()
    return NodeVector(
        D.grid,
        0.5 * (u + np.roll(u, 1, axis=0)),
        0.5 * (v + np.roll(v, 1, axis=1)),
        0.5 * (w + np.roll(w, 1, axis=2)),
    )
