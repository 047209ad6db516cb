"""Manufactured-solution problems, error norms and convergence studies.

All three cases live on the periodic box ``[0, 2]^3``.  The source term of
each case is derived symbolically from the chosen potential and permittivity
(``rho = -div(eps grad phi)``, minus the ionic charge for the PB case) and then
cross-checked against centred finite differences of the continuous operator.

* Case 1: ``eps = 1``, ``phi = -cos(pi x) cos(pi y) cos(pi z)``.
* Case 2: ``eps = 3 - cos(pi x)``, ``phi = f(x) cos(pi y) cos(pi z)`` with the
  smooth bump ``f(x) = exp(1 / ((x-1)^2 - 1/4))`` on ``|x - 1| < 1/2``.
* Case 3: ``eps = 3 - cos(pi x) cos(pi y) cos(pi z)``, ``phi`` as in case 1,
  two species with ``q = +1, -1`` and ``c_s = exp(-q_s phi)``.
"""
from __future__ import annotations

import csv
import functools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from .grid import (
    Displacement,
    build_grid,
    midpoint_average,
    project_source,
    sample_displacement,
    sample_nodes,
)
from .operators import EdgePermittivity, half_edge_permittivity
from .pb import PBProblem, Species, solve_pb
from .poisson import IterationReport, PoissonProblem, SolveOptions, solve_poisson

__all__ = [
    "ManufacturedCase",
    "ErrorRecord",
    "RateTable",
    "manufactured_problem",
    "compute_errors",
    "solve_case",
    "run_convergence_study",
    "write_study_csv",
    "write_trace_csv",
]

L_BOX = 2.0
Field = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form data of one manufactured problem.

    ``grad_phi`` holds the three partial derivatives of the potential; the
    exact displacement is ``-eps * grad_phi``.  ``valences`` is empty for the
    Poisson cases; ``concentrations`` then is too.
    """

    id: int
    L: float
    phi: Field
    eps: Field
    rho: Field
    grad_phi: tuple[Field, Field, Field]
    valences: tuple[float, ...] = ()
    concentrations: tuple[Field, ...] = ()

    @property
    def is_pb(self) -> bool:
        return bool(self.valences)

    def exact_displacement(self) -> tuple[Field, Field, Field]:
        return tuple(
            (lambda g: (lambda x, y, z: -self.eps(x, y, z) * g(x, y, z)))(g) for g in self.grad_phi
        )


@dataclass
class ErrorRecord:
    n: int
    h: float
    err_D_l2: float
    err_D_inf: float
    err_E_inf: float
    err_c_l2: list[float] = field(default_factory=list)
    err_c_inf: list[float] = field(default_factory=list)
    sweeps: int = 0
    wall_time: float = 0.0
    converged: bool = True

    def values(self) -> dict[str, float]:
        out = {"err_D_l2": self.err_D_l2, "err_D_inf": self.err_D_inf, "err_E_inf": self.err_E_inf}
        for s, (a, b) in enumerate(zip(self.err_c_l2, self.err_c_inf), start=1):
            out[f"err_c{s}_l2"] = a
            out[f"err_c{s}_inf"] = b
        return out


@dataclass
class RateTable:
    """Error records sorted by decreasing ``h`` with pairwise observed orders."""

    records: list[ErrorRecord]

    def __post_init__(self):
        self.records = sorted(self.records, key=lambda r: -r.h)

    @property
    def columns(self) -> list[str]:
        return list(self.records[0].values()) if self.records else []

    def orders(self, column: str) -> list[float]:
        """``log2`` of successive error ratios, scaled for non-halving steps."""
        out = []
        for a, b in zip(self.records, self.records[1:]):
            ea, eb = a.values()[column], b.values()[column]
            out.append(math.log(ea / eb) / math.log(a.h / b.h))
        return out

    def finest_order(self, column: str) -> float:
        return self.orders(column)[-1]

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.records)


# ---------------------------------------------------------------- symbolic data

_x, _y, _z = sp.symbols("x y z", real=True)
_X = (_x, _y, _z)


def _neg_div_flux(eps, phi):
    return -sum(sp.diff(eps * sp.diff(phi, v), v) for v in _X)


def _lambdify(expr) -> Field:
    f = sp.lambdify(_X, expr, "numpy")
    return lambda x, y, z: np.broadcast_to(np.asarray(f(x, y, z), dtype=np.float64), np.shape(x)).copy()


def _bump_case() -> ManufacturedCase:
    """Case 2: the bump ``f`` enters through placeholders for ``f, f', f''``."""
    pi = sp.pi
    F0, F1, F2 = sp.symbols("F0 F1 F2", real=True)
    fx = sp.Function("f")(_x)
    eps = 3 - sp.cos(pi * _x)
    phi = fx * sp.cos(pi * _y) * sp.cos(pi * _z)
    subs = {sp.Derivative(fx, (_x, 2)): F2, sp.Derivative(fx, _x): F1, fx: F0}

    def with_bump(expr) -> Field:
        expr = sp.expand(expr).subs(subs)
        f = sp.lambdify((*_X, F0, F1, F2), expr, "numpy")
        return lambda x, y, z: np.asarray(f(x, y, z, *_bump(x)), dtype=np.float64)

    s = sp.symbols("s", real=True)
    bump = sp.exp(1 / (s**2 - sp.Rational(1, 4)))
    derivs = [sp.lambdify(s, sp.diff(bump, s, m), "numpy") for m in range(3)]

    def _bump(x):
        x = np.asarray(x, dtype=np.float64)
        d = x - 1.0
        inside = np.abs(d) < 0.5
        safe = np.where(inside, d, 0.0)  # keeps the exponent finite off the support
        return [np.where(inside, fn(safe), 0.0) for fn in derivs]

    return ManufacturedCase(
        id=2,
        L=L_BOX,
        phi=with_bump(phi),
        eps=_lambdify(eps),
        rho=with_bump(_neg_div_flux(eps, phi)),
        grad_phi=tuple(with_bump(sp.diff(phi, v)) for v in _X),
    )


@functools.lru_cache(maxsize=None)
def build_case(case_id: int) -> ManufacturedCase:
    """Closed-form fields of case ``case_id``, with the source verified numerically."""
    pi = sp.pi
    ccc = sp.cos(pi * _x) * sp.cos(pi * _y) * sp.cos(pi * _z)
    if case_id == 1:
        eps, phi = sp.Integer(1), -ccc
        case = ManufacturedCase(1, L_BOX, _lambdify(phi), _lambdify(eps), _lambdify(_neg_div_flux(eps, phi)),
                                tuple(_lambdify(sp.diff(phi, v)) for v in _X))
    elif case_id == 2:
        case = _bump_case()
    elif case_id == 3:
        eps, phi = 3 - ccc, -ccc
        q = (1.0, -1.0)
        conc = [sp.exp(-sp.Integer(int(qs)) * phi) for qs in q]
        rho = _neg_div_flux(eps, phi) - sum(int(qs) * c for qs, c in zip(q, conc))
        case = ManufacturedCase(3, L_BOX, _lambdify(phi), _lambdify(eps), _lambdify(rho),
                                tuple(_lambdify(sp.diff(phi, v)) for v in _X), q,
                                tuple(_lambdify(c) for c in conc))
    else:
        raise ValueError(f"unknown test case {case_id!r}; expected 1, 2 or 3")
    _check_source(case)
    return case


def _check_source(case: ManufacturedCase, n_points: int = 64, delta: float = 1e-4) -> None:
    """Compare the derived source with a finite-difference ``-div(eps grad phi)``."""
    rng = np.random.default_rng(12345)
    pts = rng.uniform(0.0, case.L, size=(3, n_points))
    total = np.zeros(n_points)
    for a in range(3):
        e = np.zeros((3, 1))
        e[a] = delta / 2
        for sign in (1.0, -1.0):
            mid = pts + sign * e
            grad = (case.phi(*(mid + e)) - case.phi(*(mid - e))) / delta
            total -= sign * case.eps(*mid) * grad / delta
    expected = case.rho(*pts)
    for qs, c in zip(case.valences, case.concentrations):
        expected = expected + qs * c(*pts)
    scale = 1.0 + np.abs(expected).max()
    err = np.abs(total - expected).max()
    if err > 1e-5 * scale:
        raise RuntimeError(f"source of case {case.id} fails the finite-difference check ({err:.2e})")


# ---------------------------------------------------------------- problems

def manufactured_problem(case_id: int, N: int):
    """Discrete problem for case ``case_id`` on an ``N^3`` grid.

    Returns ``(problem, case)`` with a :class:`PoissonProblem` for cases 1-2
    and a :class:`PBProblem` for case 3.  In the PB case each species' total
    mass is ``h^3`` times the grid sum of its exact concentration.
    """
    case = build_case(case_id)
    grid = build_grid(case.L, N)
    eps = half_edge_permittivity(sample_nodes(case.eps, grid))
    rho = sample_nodes(case.rho, grid)
    if not case.is_pb:
        return PoissonProblem(eps, project_source(rho, "poisson")), case
    species = tuple(
        Species(qs, grid.h**3 * float(sample_nodes(c, grid).values.sum()))
        for qs, c in zip(case.valences, case.concentrations)
    )
    return PBProblem(eps, project_source(rho, "pb", species), species), case


def compute_errors(D: Displacement, case: ManufacturedCase, eps: EdgePermittivity,
                   concentrations: np.ndarray | None = None) -> ErrorRecord:
    """Discrete errors of a computed solution against the exact fields.

    Displacement errors compare with edge samples of ``-eps grad phi``; the
    field error compares the node reconstruction ``m_h[-D] / eps`` with
    ``grad phi``; concentration errors compare with node samples.
    """
    grid = D.grid
    h3 = grid.h**3
    exact = sample_displacement(*case.exact_displacement(), grid)
    diff = [a - b for a, b in zip(exact.components(), D.components())]
    err_l2 = math.sqrt(h3 * sum(float(np.sum(d * d)) for d in diff))
    err_inf = max(float(np.abs(d).max()) for d in diff)

    eps_nodes = sample_nodes(case.eps, grid).values
    recon = midpoint_average(-D).components()
    X, Y, Z = grid.coords()
    err_e = max(float(np.abs(r / eps_nodes - g(X, Y, Z)).max()) for r, g in zip(recon, case.grad_phi))

    rec = ErrorRecord(grid.N, grid.h, err_l2, err_inf, err_e)
    if concentrations is not None:
        for cs, fn in zip(concentrations, case.concentrations):
            d = cs - sample_nodes(fn, grid).values
            rec.err_c_l2.append(math.sqrt(h3 * float(np.sum(d * d))))
            rec.err_c_inf.append(float(np.abs(d).max()))
    return rec


def solve_case(case_id: int, N: int, opts: SolveOptions | None = None, interleave: bool = True):
    """Build and solve case ``case_id``; returns ``(solution, report, record)``.

    Cases 1 and 2 use the face-update algorithm (the shift switches on
    automatically for the variable permittivity of case 2 unless ``opts``
    says otherwise); case 3 uses the PB algorithm.
    """
    opts = opts or SolveOptions()
    problem, case = manufactured_problem(case_id, N)
    t0 = time.perf_counter()
    if case.is_pb:
        state, report = solve_pb(problem, opts, interleave_displacement=interleave)
        elapsed = time.perf_counter() - t0
        rec = compute_errors(state.D, case, problem.eps, state.c)
        solution = state
    else:
        D, report = solve_poisson(problem, opts)
        elapsed = time.perf_counter() - t0
        rec = compute_errors(D, case, problem.eps)
        solution = D
    rec.sweeps = report.sweeps_used
    rec.wall_time = elapsed
    rec.converged = report.converged
    return solution, report, rec


def run_convergence_study(case_id: int, Ns: Sequence[int], opts: SolveOptions | None = None,
                          interleave: bool = True, out: str | None = None) -> RateTable:
    """Solve case ``case_id`` on every grid in ``Ns`` and tabulate the errors."""
    Ns = [int(n) for n in Ns]
    if len(set(Ns)) != len(Ns) or any(n < 4 for n in Ns):
        raise ValueError("grid sizes must be distinct and >= 4")
    records = [solve_case(case_id, n, opts, interleave)[2] for n in Ns]
    table = RateTable(records)
    if out is not None:
        write_study_csv(table, out)
    return table


# ---------------------------------------------------------------- CSV output

def _fmt(x) -> str:
    return x if isinstance(x, str) else (str(x) if isinstance(x, (int, np.integer)) else f"{x:.17g}")


def write_study_csv(table: RateTable, path: str) -> None:
    cols = table.columns
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "h", *cols, "sweeps", "wall_time_s"])
        for r in table.records:
            vals = r.values()
            w.writerow([_fmt(r.n), _fmt(r.h), *(_fmt(vals[c]) for c in cols), _fmt(r.sweeps), _fmt(r.wall_time)])


def write_trace_csv(report: IterationReport, path: str, pb: bool = False) -> None:
    header = ["sweep", "energy", "max_eta"] + (["max_zeta"] if pb else []) + ["shift_norm", "gauss_residual_inf"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in report.records:
            row = [r.sweep, r.energy, r.max_eta] + ([r.max_zeta] if pb else []) + [r.shift_norm,
                                                                                   r.gauss_residual_inf]
            w.writerow([_fmt(v) for v in row])
