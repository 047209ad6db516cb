"""Local relaxation for the discrete Poisson energy under Gauss' law.

The energy ``F_h[D] = 1/2 ||D||^2_{1/eps,h}`` is minimized over staggered
fields with prescribed divergence.  Each face update moves displacement around
the four edges of one grid face, which leaves every node divergence untouched,
and a periodic global shift fixes the mean of ``D/eps`` that face updates
cannot reach when the permittivity varies.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._backend import get_kernels
from .grid import Displacement, NodeScalar, _check_same, discrete_average
from .operators import EdgePermittivity, axis_index, curl, divergence, scale_by_permittivity

log = logging.getLogger(__name__)

__all__ = [
    "PoissonProblem",
    "SolveOptions",
    "SweepRecord",
    "IterationReport",
    "poisson_energy",
    "init_displacement",
    "face_update",
    "global_shift",
    "shift_energy_change",
    "equilibrium_residuals",
    "solve_poisson",
]


@dataclass
class PoissonProblem:
    eps: EdgePermittivity
    rho_h: NodeScalar

    def __post_init__(self):
        _check_same(self.eps.grid, self.rho_h.grid)
        scale = max(float(np.abs(self.rho_h.values).max()), 1.0)
        if abs(discrete_average(self.rho_h)) > 1e-13 * scale:
            raise ValueError("fixed charge must have zero discrete average")

    @property
    def grid(self):
        return self.rho_h.grid


@dataclass
class SolveOptions:
    """Stopping and scheduling controls shared by the Poisson and PB solvers.

    ``use_shift=None`` turns the global shift on exactly when the permittivity
    is non-constant.  ``max_sweeps=None`` means ``10 * N**2`` for the Poisson
    solver and ``40 * N**2`` for the PB solver, whose edge updates contract
    more slowly.
    """

    tol_eta: float = 1e-10
    max_sweeps: int | None = None
    n_local: int = 5
    use_shift: bool | None = None
    backend: str | None = None

    def __post_init__(self):
        if not self.tol_eta > 0:
            raise ValueError("tol_eta must be positive")
        if self.max_sweeps is not None and self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.n_local < 1:
            raise ValueError("n_local must be >= 1")

    def sweep_limit(self, n: int, factor: int = 10) -> int:
        return self.max_sweeps if self.max_sweeps is not None else factor * n * n


@dataclass
class SweepRecord:
    sweep: int
    energy: float
    max_eta: float
    shift_norm: float
    gauss_residual_inf: float
    max_zeta: float | None = None


@dataclass
class IterationReport:
    records: list[SweepRecord] = field(default_factory=list)
    converged: bool = False
    sweeps_used: int = 0
    initial_energy: float = 0.0
    clamp_events: int = 0

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])


def poisson_energy(D: Displacement, eps: EdgePermittivity) -> float:
    _check_same(D.grid, eps.grid)
    total = sum(np.sum(c * c / e) for c, e in zip(D.components(), eps.components()))
    return float(0.5 * D.grid.h**3 * total)


def _cumulative_field(grid, charge: np.ndarray) -> Displacement:
    """A staggered field with divergence ``charge`` and zero component means.

    Builds ``w`` from plane averages, ``v`` from line averages within each
    plane and ``u`` from the remainder, each by running sums, then removes the
    component means.  ``charge`` must sum to zero.
    """
    h = grid.h
    p = charge.mean(axis=(0, 1))  # p_k
    q = charge.mean(axis=0) - p[None, :]  # q_{j,k}
    r = charge - p[None, None, :] - q[None, :, :]

    w = np.zeros(grid.shape)
    v = np.zeros(grid.shape)
    u = np.zeros(grid.shape)
    # stored index m holds the edge value at m + 1/2; the running sum starts at 1/2
    w[:, :, 1:] = h * np.cumsum(p[1:])[None, None, :]
    v[:, 1:, :] = h * np.cumsum(q[1:, :], axis=0)[None, :, :]
    u[1:, :, :] = h * np.cumsum(r[1:, :, :], axis=0)
    u -= u.mean()
    v -= v.mean()
    w -= w.mean()
    return Displacement(grid, u, v, w)


def init_displacement(problem: PoissonProblem) -> Displacement:
    """Gauss-law-consistent starting field with zero component averages."""
    return _cumulative_field(problem.grid, problem.rho_h.values)


def face_update(D: Displacement, i: int, j: int, k: int, axis, eps: EdgePermittivity,
                backend: str | None = None):
    """Relax the face of box ``(i, j, k)`` normal to ``axis`` in place.

    The energy drops by ``0.5 * eps_sigma * h**3 * eta**2`` with
    ``eps_sigma`` the sum of reciprocal permittivities on the four edges.
    Returns ``(D, eta)``; ``D`` is the same object, updated.
    """
    n = D.grid.N
    if not all(0 <= x < n for x in (i, j, k)):
        raise IndexError(f"face index ({i}, {j}, {k}) outside 0..{n - 1}")
    _check_same(D.grid, eps.grid)
    iu, iv, iw = eps.reciprocals()
    eta = get_kernels(backend).face_relax(D.u, D.v, D.w, iu, iv, iw, i, j, k, axis_index(axis))
    return D, float(eta)


def _shift_vector(D: Displacement, eps: EdgePermittivity):
    recips = eps.reciprocals()
    weights = np.array([r.sum() for r in recips])
    moments = np.array([np.sum(c * r) for c, r in zip(D.components(), recips)])
    return -moments / weights, weights


def shift_energy_change(D: Displacement, eps: EdgePermittivity) -> float:
    """Closed-form energy change of the optimal constant shift (always <= 0)."""
    shift, weights = _shift_vector(D, eps)
    return float(-0.5 * D.grid.h**3 * np.sum(weights * shift**2))


def global_shift(D: Displacement, eps: EdgePermittivity):
    """Add the energy-minimizing constant vector to ``D`` in place.

    Afterwards the discrete average of ``D/eps`` vanishes.  Returns ``(D, shift)``.
    """
    _check_same(D.grid, eps.grid)
    shift, _ = _shift_vector(D, eps)
    D.u += shift[0]
    D.v += shift[1]
    D.w += shift[2]
    return D, shift


def equilibrium_residuals(D: Displacement, eps: EdgePermittivity):
    """Return ``(max |curl(D/eps)|, mean of D/eps)``; both vanish only at the minimizer."""
    E = scale_by_permittivity(D, eps)
    return curl(E).max_abs(), E.mean()


def gauss_residual(D: Displacement, rho: np.ndarray) -> float:
    return float(np.abs(divergence(D).values - rho).max())


def solve_poisson(problem: PoissonProblem, opts: SolveOptions | None = None,
                  D0: Displacement | None = None):
    """Minimize the discrete Poisson energy by sweeps of face updates.

    Each sweep visits grid points lexicographically and relaxes the x, y and z
    faces at each.  With the shift enabled, a global shift follows every
    ``n_local`` sweeps and whenever a sweep meets the tolerance.  Returns the
    final field and an :class:`IterationReport`; non-convergence is reported,
    not raised.
    """
    opts = opts or SolveOptions()
    grid, eps = problem.grid, problem.eps
    rho = problem.rho_h.values
    if D0 is None:
        D = init_displacement(problem)
    else:
        _check_same(D0.grid, grid)
        scale = max(float(np.abs(rho).max()), 1.0)
        if gauss_residual(D0, rho) > 1e-10 * scale:
            raise ValueError("initial displacement violates Gauss' law")
        D = D0.copy()
    use_shift = (not eps.is_constant) if opts.use_shift is None else opts.use_shift
    kern = get_kernels(opts.backend)
    iu, iv, iw = eps.reciprocals()
    limit = opts.sweep_limit(grid.N)

    report = IterationReport(initial_energy=poisson_energy(D, eps))
    for sweep in range(1, limit + 1):
        max_eta, _ = kern.poisson_sweep(D.u, D.v, D.w, iu, iv, iw)
        shift_norm = 0.0
        if use_shift and (sweep % opts.n_local == 0 or max_eta < opts.tol_eta):
            shift_norm = float(np.abs(global_shift(D, eps)[1]).max())
        report.records.append(
            SweepRecord(sweep, poisson_energy(D, eps), max_eta, shift_norm, gauss_residual(D, rho))
        )
        report.sweeps_used = sweep
        if max_eta < opts.tol_eta and shift_norm < opts.tol_eta:
            report.converged = True
            break
    if not report.converged:
        log.warning("poisson solve stopped after %d sweeps without meeting tol %.1e",
                    report.sweeps_used, opts.tol_eta)
    return D, report
