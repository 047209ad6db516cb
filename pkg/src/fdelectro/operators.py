"""Staggered finite-difference operators on the periodic grid.

``FACE_STENCILS`` fixes the circulation orientation of the three faces of grid
box ``(i, j, k) + [0, 1]^3`` that meet at the vertex ``(i, j, k)``.  The curl,
the local face relaxation and the fallback kernels all read it, so the sign
convention lives in exactly one place.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Displacement, FaceVector, Grid, NodeScalar, NodeVector, _as_field, _check_same

__all__ = [
    "FACE_STENCILS",
    "EdgePermittivity",
    "half_edge_permittivity",
    "constant_permittivity",
    "gradient",
    "node_divergence",
    "laplacian",
    "divergence",
    "curl",
    "variable_laplacian",
    "variable_laplacian_stencil",
    "displacement_from_potential",
    "scale_by_permittivity",
]

# axis -> four (component, (di, dj, dk), sign); component 0/1/2 = u/v/w.
# Axis 0 is the face on the plane x = ih (first curl component), etc.
FACE_STENCILS = {
    0: ((1, (0, 0, 0), +1), (2, (0, 1, 0), +1), (1, (0, 0, 1), -1), (2, (0, 0, 0), -1)),
    1: ((2, (0, 0, 0), +1), (0, (0, 0, 1), +1), (2, (1, 0, 0), -1), (0, (0, 0, 0), -1)),
    2: ((0, (0, 0, 0), +1), (1, (1, 0, 0), +1), (0, (0, 1, 0), -1), (1, (0, 0, 0), -1)),
}

AXES = {"x": 0, "y": 1, "z": 2}


def axis_index(axis) -> int:
    if isinstance(axis, str):
        try:
            return AXES[axis]
        except KeyError:
            raise ValueError(f"axis must be one of x, y, z; got {axis!r}") from None
    if axis in (0, 1, 2):
        return int(axis)
    raise ValueError(f"axis must be 0, 1 or 2; got {axis!r}")


def _shift(a: np.ndarray, offset) -> np.ndarray:
    """``out[i, j, k] = a[i + di, j + dj, k + dk]`` with periodic wrap."""
    for ax, d in enumerate(offset):
        if d:
            a = np.roll(a, -d, axis=ax)
    return a


@dataclass
class EdgePermittivity:
    """Permittivity on edge midpoints, laid out like :class:`Displacement`."""

    grid: Grid
    ex: np.ndarray
    ey: np.ndarray
    ez: np.ndarray
    nodes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.ex = _as_field(self.grid, self.ex)
        self.ey = _as_field(self.grid, self.ey)
        self.ez = _as_field(self.grid, self.ez)
        lo = min(float(c.min()) for c in self.components())
        if not lo > 0:
            raise ValueError("edge permittivity must be strictly positive")
        self.eps_min = lo
        self.eps_max = max(float(c.max()) for c in self.components())

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.ex, self.ey, self.ez)

    def reciprocals(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.ascontiguousarray(1.0 / c) for c in self.components())

    @property
    def is_constant(self) -> bool:
        return self.eps_min == self.eps_max

    def node_values(self) -> np.ndarray:
        """Node permittivity used to turn node displacements into fields."""
        if self.nodes is not None:
            return self.nodes
        if self.is_constant:
            return np.full(self.grid.shape, self.eps_min)
        raise ValueError("node permittivity unknown for an edge-only permittivity")


def half_edge_permittivity(eps_nodes: NodeScalar) -> EdgePermittivity:
    e = eps_nodes.values
    if not np.all(e > 0):
        raise ValueError("node permittivity must be strictly positive")
    return EdgePermittivity(
        eps_nodes.grid,
        0.5 * (e + np.roll(e, -1, axis=0)),
        0.5 * (e + np.roll(e, -1, axis=1)),
        0.5 * (e + np.roll(e, -1, axis=2)),
        nodes=e.copy(),
    )


def constant_permittivity(grid: Grid, value: float = 1.0) -> EdgePermittivity:
    return half_edge_permittivity(NodeScalar(grid, np.full(grid.shape, float(value))))


def gradient(phi: NodeScalar, direction: str = "forward") -> NodeVector:
    p, h = phi.values, phi.grid.h
    fwd = [(np.roll(p, -1, axis=a) - p) / h for a in range(3)]
    if direction == "forward":
        return NodeVector(phi.grid, *fwd)
    if direction == "backward":
        return NodeVector(phi.grid, *(np.roll(f, 1, axis=a) for a, f in enumerate(fwd)))
    raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")


def node_divergence(Phi: NodeVector, direction: str = "forward") -> NodeScalar:
    """Forward (``+h``) or backward (``-h``) divergence of a node vector field."""
    h = Phi.grid.h
    parts = [(np.roll(c, -1, axis=a) - c) / h for a, c in enumerate(Phi.components())]
    if direction == "backward":
        parts = [np.roll(p, 1, axis=a) for a, p in enumerate(parts)]
    elif direction != "forward":
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    return NodeScalar(Phi.grid, parts[0] + parts[1] + parts[2])


def laplacian(phi: NodeScalar) -> NodeScalar:
    """Standard seven-point discrete Laplacian."""
    p = phi.values
    acc = -6.0 * p
    for a in range(3):
        acc = acc + np.roll(p, 1, axis=a) + np.roll(p, -1, axis=a)
    return NodeScalar(phi.grid, acc / phi.grid.h**2)


def divergence(D: Displacement) -> NodeScalar:
    u, v, w = D.components()
    div = (u - np.roll(u, 1, axis=0)) + (v - np.roll(v, 1, axis=1)) + (w - np.roll(w, 1, axis=2))
    return NodeScalar(D.grid, div / D.grid.h)


def curl(D: Displacement) -> FaceVector:
    comps = D.components()
    out = []
    for axis in range(3):
        acc = np.zeros(D.grid.shape)
        for comp, offset, sign in FACE_STENCILS[axis]:
            acc += sign * _shift(comps[comp], offset)
        out.append(acc / D.grid.h)
    return FaceVector(D.grid, *out)


def displacement_from_potential(phi: NodeScalar, eps: EdgePermittivity) -> Displacement:
    """``D = -eps * (forward difference of phi)`` on every edge."""
    _check_same(phi.grid, eps.grid)
    g = gradient(phi, "forward")
    return Displacement(phi.grid, -eps.ex * g.x, -eps.ey * g.y, -eps.ez * g.z)


def variable_laplacian(phi: NodeScalar, eps: EdgePermittivity) -> NodeScalar:
    """Variable-coefficient Laplacian, assembled as minus the divergence of the flux."""
    div = divergence(displacement_from_potential(phi, eps))
    return NodeScalar(phi.grid, -div.values)


def variable_laplacian_stencil(phi: NodeScalar, eps: EdgePermittivity) -> NodeScalar:
    """Expanded seven-point form of :func:`variable_laplacian`."""
    _check_same(phi.grid, eps.grid)
    p = phi.values
    acc = np.zeros(phi.grid.shape)
    for a, e in enumerate(eps.components()):
        e_minus = np.roll(e, 1, axis=a)
        acc += e * (np.roll(p, -1, axis=a) - p) - e_minus * (p - np.roll(p, 1, axis=a))
    return NodeScalar(phi.grid, acc / phi.grid.h**2)


def scale_by_permittivity(D: Displacement, eps: EdgePermittivity) -> Displacement:
    _check_same(D.grid, eps.grid)
    return Displacement(D.grid, D.u / eps.ex, D.v / eps.ey, D.w / eps.ez)
