import functools

import numpy as np
import pytest
from hypothesis import settings

from fdelectro.grid import Displacement, NodeScalar, build_grid
from fdelectro.harness import manufactured_problem
from fdelectro.operators import EdgePermittivity, half_edge_permittivity
from fdelectro.pb import solve_pb
from fdelectro.poisson import SolveOptions, solve_poisson
from fdelectro.reference import (
    minimizer_displacement,
    minimizer_pb_state,
    solve_ccpbe,
    solve_potential,
)

settings.register_profile("default", max_examples=100, deadline=None, derandomize=True)
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


# ------------------------------------------------------------ random data

def random_grid(rng, n=None, L=None):
    return build_grid(L if L is not None else float(rng.uniform(0.5, 3.0)),
                      n if n is not None else int(rng.integers(2, 6)))


def random_scalar(rng, grid, mean_zero=False):
    f = rng.standard_normal(grid.shape)
    if mean_zero:
        f -= f.mean()
    return NodeScalar(grid, f)


def random_displacement(rng, grid, scale=1.0):
    return Displacement(grid, *(scale * rng.standard_normal(grid.shape) for _ in range(3)))


def random_eps(rng, grid, lo=0.5, hi=4.0) -> EdgePermittivity:
    return half_edge_permittivity(NodeScalar(grid, rng.uniform(lo, hi, grid.shape)))


def rel_inf(a: Displacement, b: Displacement) -> float:
    num = max(float(np.abs(x - y).max()) for x, y in zip(a.components(), b.components()))
    return num / max(float(np.abs(y).max()) for y in b.components())


# ------------------------------------------------------------ shared solves

@functools.lru_cache(maxsize=None)
def poisson_solution(case_id, n, use_shift=None):
    problem, case = manufactured_problem(case_id, n)
    D, report = solve_poisson(problem, SolveOptions(use_shift=use_shift))
    return problem, case, D, report


@functools.lru_cache(maxsize=None)
def poisson_oracle(case_id, n):
    problem, _ = manufactured_problem(case_id, n)
    return minimizer_displacement(solve_potential(problem), problem.eps)


@functools.lru_cache(maxsize=None)
def pb_solution(n, interleave=True):
    problem, case = manufactured_problem(3, n)
    state, report = solve_pb(problem, SolveOptions(), interleave_displacement=interleave)
    return problem, case, state, report


@functools.lru_cache(maxsize=None)
def pb_oracle(n):
    problem, _ = manufactured_problem(3, n)
    phi = solve_ccpbe(problem)
    return phi, minimizer_pb_state(phi, problem)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
