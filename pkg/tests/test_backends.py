import os
import subprocess
import sys

import numpy as np
import pytest

from fdelectro import BACKEND
from fdelectro._backend import get_kernels
from fdelectro.harness import manufactured_problem
from fdelectro.pb import solve_pb
from fdelectro.poisson import SolveOptions, solve_poisson

compiled = pytest.mark.skipif(BACKEND != "cython", reason="compiled kernels not built")


def _random_fields(n, seed):
    rng = np.random.default_rng(seed)
    D = [rng.standard_normal((n, n, n)) for _ in range(3)]
    inv = [1.0 / rng.uniform(1.0, 4.0, (n, n, n)) for _ in range(3)]
    c = rng.uniform(0.2, 2.0, (3, n, n, n))
    q = np.array([1.0, -1.0, 2.0])
    return D, inv, c, q


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_kernels("fortran")


def test_pure_python_selected_by_environment():
    env = dict(os.environ, FDELECTRO_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import fdelectro; print(fdelectro.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@compiled
@pytest.mark.parametrize("n", [2, 3, 5])
def test_poisson_sweep_identical(n):
    D, inv, _, _ = _random_fields(n, n)
    a = [x.copy() for x in D]
    b = [x.copy() for x in D]
    ra = get_kernels("cython").poisson_sweep(*a, *inv)
    rb = get_kernels("python").poisson_sweep(*b, *inv)
    assert ra == rb
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


@compiled
@pytest.mark.parametrize("interleave", [True, False])
@pytest.mark.parametrize("n", [2, 4])
def test_pb_sweep_identical(n, interleave):
    D, inv, c, q = _random_fields(n, 10 + n)
    a, b = [x.copy() for x in D], [x.copy() for x in D]
    ca, cb = c.copy(), c.copy()
    ra = get_kernels("cython").pb_sweep(ca, *a, *inv, q, 0.5, interleave)
    rb = get_kernels("python").pb_sweep(cb, *b, *inv, q, 0.5, interleave)
    assert ra == rb
    assert np.array_equal(ca, cb)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


@compiled
def test_single_updates_identical():
    D, inv, c, q = _random_fields(3, 99)
    kc, kp = get_kernels("cython"), get_kernels("python")
    for axis in range(3):
        a, b = [x.copy() for x in D], [x.copy() for x in D]
        assert kc.face_relax(*a, *inv, 2, 0, 1, axis) == kp.face_relax(*b, *inv, 2, 0, 1, axis)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))
        ca, cb = c.copy(), c.copy()
        ea = kc.edge_relax(ca, *a, *inv, q, 0.3, 1, 2, 2, axis, 2)
        eb = kp.edge_relax(cb, *b, *inv, q, 0.3, 1, 2, 2, axis, 2)
        assert ea == eb and np.array_equal(ca, cb)
    assert kc.zeta_root(2.0, 1.0, 0.3, 1.0, 0.5) == kp.zeta_root(2.0, 1.0, 0.3, 1.0, 0.5)


@compiled
def test_solvers_identical():
    problem, _ = manufactured_problem(2, 4)
    Da, ra = solve_poisson(problem, SolveOptions(backend="cython"))
    Db, rb = solve_poisson(problem, SolveOptions(backend="python"))
    assert ra.sweeps_used == rb.sweeps_used
    assert all(np.array_equal(x, y) for x, y in zip(Da.components(), Db.components()))
    problem, _ = manufactured_problem(3, 4)
    sa, ra = solve_pb(problem, SolveOptions(backend="cython"))
    sb, rb = solve_pb(problem, SolveOptions(backend="python"))
    assert ra.sweeps_used == rb.sweeps_used and np.array_equal(sa.c, sb.c)
