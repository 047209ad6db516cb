"""Potential-based reference solvers used to check the local algorithms.

Both minimizers are determined by a mean-zero potential: the Poisson one by
the linear equation ``A_h^eps[phi] = -rho_h`` and the PB one by the discrete
charge-conserved PB equation.  These are solved directly (conjugate gradients,
damped Newton) and the minimizing fields are rebuilt from the potential.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .grid import Displacement, NodeScalar
from .operators import EdgePermittivity, displacement_from_potential, variable_laplacian
from .pb import PBProblem, PBState
from .poisson import PoissonProblem

log = logging.getLogger(__name__)

__all__ = [
    "OracleOptions",
    "solve_potential",
    "minimizer_displacement",
    "ccpbe_residual",
    "solve_ccpbe",
    "minimizer_pb_state",
]


@dataclass
class OracleOptions:
    tol: float = 1e-12
    max_iter: int = 5000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def _mean_free_operator(grid, apply):
    """Wrap ``apply`` (array -> array on the grid) as a LinearOperator on mean-zero vectors."""
    n3 = grid.N**3

    def matvec(x):
        x = np.asarray(x, dtype=np.float64).reshape(grid.shape)
        x = x - x.mean()
        y = apply(x)
        return (y - y.mean()).ravel()

    return LinearOperator((n3, n3), matvec=matvec, dtype=np.float64)


def _cg(op, rhs, rtol, max_iter):
    x, info = cg(op, rhs.ravel(), rtol=rtol, atol=0.0, maxiter=max_iter)
    if info > 0:
        raise RuntimeError(f"conjugate gradients stagnated after {info} iterations")
    return x - x.mean()


def solve_potential(problem: PoissonProblem, opts: OracleOptions | None = None) -> NodeScalar:
    """Mean-zero ``phi`` with ``A_h^eps[phi] = -rho_h``."""
    opts = opts or OracleOptions()
    grid, eps = problem.grid, problem.eps
    rho = problem.rho_h.values
    if not np.any(rho):
        return NodeScalar.zeros(grid)

    def neg_a(x):
        return -variable_laplacian(NodeScalar(grid, x), eps).values

    phi = _cg(_mean_free_operator(grid, neg_a), rho - rho.mean(), opts.tol, opts.max_iter)
    phi = NodeScalar(grid, phi.reshape(grid.shape))
    res = variable_laplacian(phi, eps).values + rho
    if np.linalg.norm(res) > 10 * opts.tol * np.linalg.norm(rho):
        raise RuntimeError("potential solve missed its residual target")
    return phi


def minimizer_displacement(phi: NodeScalar, eps: EdgePermittivity) -> Displacement:
    return displacement_from_potential(phi, eps)


def _boltzmann_weights(phi: np.ndarray, q: float) -> np.ndarray:
    """``exp(-q phi) / sum(exp(-q phi))``, evaluated without overflow."""
    x = -q * phi
    g = np.exp(x - x.max())
    return g / g.sum()


def ccpbe_residual(phi: NodeScalar, problem: PBProblem) -> np.ndarray:
    """Residual of the discrete charge-conserved PB equation at ``phi``."""
    h3 = problem.grid.h**3
    res = variable_laplacian(phi, problem.eps).values + problem.rho_h.values
    for s in problem.species:
        res += s.q * s.total_mass / h3 * _boltzmann_weights(phi.values, s.q)
    return res


def solve_ccpbe(problem: PBProblem, opts: OracleOptions | None = None) -> NodeScalar:
    """Solve the discrete CCPBE by damped Newton on the mean-zero subspace.

    The Jacobian is ``A_h^eps`` minus, per species, ``q^2 N / h^3`` times the
    covariance-like matrix ``diag(p) - p p^T`` of the normalized Boltzmann
    weights ``p``; it is applied exactly inside conjugate gradients.  Steps are
    halved until the residual norm decreases.
    """
    opts = opts or OracleOptions()
    grid, eps = problem.grid, problem.eps
    h3 = grid.h**3
    scale = float(np.abs(problem.rho_h.values).max()) + sum(
        abs(s.q) * s.total_mass for s in problem.species) / grid.L**3
    phi = NodeScalar.zeros(grid)
    res = ccpbe_residual(phi, problem)
    rnorm = np.linalg.norm(res)
    for it in range(opts.max_iter):
        if np.abs(res).max() <= opts.tol * scale:
            return phi
        weights = [(s.q**2 * s.total_mass / h3, _boltzmann_weights(phi.values, s.q))
                   for s in problem.species]

        def neg_jac(x, weights=weights):
            y = -variable_laplacian(NodeScalar(grid, x), eps).values
            for wgt, p in weights:
                y += wgt * (p * x - p * np.sum(p * x))
            return y

        step = _cg(_mean_free_operator(grid, neg_jac), res - res.mean(), 1e-13, opts.max_iter)
        step = step.reshape(grid.shape)
        t = 1.0
        while True:
            trial = NodeScalar(grid, phi.values + t * step)
            trial_res = ccpbe_residual(trial, problem)
            trial_norm = np.linalg.norm(trial_res)
            if trial_norm < rnorm or t < 1e-10:
                break
            t *= 0.5
        if trial_norm >= rnorm:
            # no descent left; rounding floor reached
            log.debug("CCPBE Newton stalled at iteration %d, |res| = %.3e", it, rnorm)
            break
        phi, res, rnorm = trial, trial_res, trial_norm
    if np.abs(res).max() <= opts.tol * scale:
        return phi
    raise RuntimeError(f"CCPBE Newton did not reach tol {opts.tol:.1e} (|res|_inf = {np.abs(res).max():.3e})")


def minimizer_pb_state(phi: NodeScalar, problem: PBProblem) -> PBState:
    """Boltzmann concentrations normalized to each species' mass, plus ``D_h^eps[phi]``."""
    h3 = problem.grid.h**3
    c = np.stack([s.total_mass / h3 * _boltzmann_weights(phi.values, s.q) for s in problem.species])
    return PBState(c, displacement_from_potential(phi, problem.eps), problem.valences)
