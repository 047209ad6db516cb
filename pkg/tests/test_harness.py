import csv
import math

import numpy as np
import pytest

from fdelectro.grid import build_grid, sample_displacement, sample_nodes
from fdelectro.harness import (
    ErrorRecord,
    RateTable,
    build_case,
    compute_errors,
    manufactured_problem,
    run_convergence_study,
    solve_case,
    write_trace_csv,
)
from fdelectro.pb import PBProblem
from fdelectro.poisson import PoissonProblem, SolveOptions


def _points(seed=3, n=50):
    return np.random.default_rng(seed).uniform(0, 2, (3, n))


def _fd_source(case, pts, d=1e-3):
    """Fourth-order central differences of -div(eps grad phi) from phi and eps alone."""
    total = np.zeros(pts.shape[1])
    for a in range(3):
        e = np.zeros((3, 1))
        e[a] = 1.0

        def flux(p):
            # eps times a fourth-order derivative of phi along axis a
            g = (-case.phi(*(p + 2 * d * e)) + 8 * case.phi(*(p + d * e))
                 - 8 * case.phi(*(p - d * e)) + case.phi(*(p - 2 * d * e))) / (12 * d)
            return case.eps(*p) * g

        total -= (-flux(pts + 2 * d * e) + 8 * flux(pts + d * e) - 8 * flux(pts - d * e) + flux(pts - 2 * d * e)) / (12 * d)
    return total


class TestCases:
    def test_case1_source(self):
        case = build_case(1)
        pts = _points()
        np.testing.assert_allclose(case.rho(*pts), 3 * np.pi**2 * case.phi(*pts), rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(case.phi(*pts), -np.prod(np.cos(np.pi * pts), axis=0), atol=1e-15)

    @pytest.mark.parametrize("case_id", [1, 2, 3])
    def test_source_matches_finite_differences(self, case_id):
        case = build_case(case_id)
        pts = _points(case_id)
        expected = case.rho(*pts) + sum(q * c(*pts) for q, c in zip(case.valences, case.concentrations))
        np.testing.assert_allclose(_fd_source(case, pts), expected, atol=1e-6 * (1 + np.abs(expected).max()))

    def test_case2_bump(self):
        case = build_case(2)
        x = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 0.50001, 1.49999])
        zeros = np.zeros_like(x)
        phi = case.phi(x, zeros, zeros)
        assert np.all(np.isfinite(phi))
        assert phi[0] == phi[1] == phi[3] == phi[4] == 0.0
        assert phi[2] == pytest.approx(math.exp(-4.0), rel=1e-14)
        np.testing.assert_allclose(case.eps(x, zeros, zeros), 3 - np.cos(np.pi * x), rtol=1e-15)
        assert np.all(np.isfinite(case.rho(x, zeros, zeros)))

    def test_case3_data(self):
        case = build_case(3)
        pts = _points()
        ccc = np.prod(np.cos(np.pi * pts), axis=0)
        np.testing.assert_allclose(case.eps(*pts), 3 - ccc, rtol=1e-15)
        np.testing.assert_allclose(case.concentrations[0](*pts), np.exp(ccc), rtol=1e-14)
        np.testing.assert_allclose(case.concentrations[1](*pts), np.exp(-ccc), rtol=1e-14)
        assert case.valences == (1.0, -1.0)

    def test_invalid_id(self):
        with pytest.raises(ValueError):
            manufactured_problem(4, 8)

    def test_problem_types(self):
        p1, _ = manufactured_problem(1, 6)
        p3, c3 = manufactured_problem(3, 6)
        assert isinstance(p1, PoissonProblem) and p1.eps.is_constant
        assert isinstance(p3, PBProblem)
        g = p3.grid
        for s, fn in zip(p3.species, c3.concentrations):
            assert s.total_mass == pytest.approx(g.h**3 * sample_nodes(fn, g).values.sum(), rel=1e-14)


class TestComputeErrors:
    @pytest.mark.parametrize("case_id", [1, 2, 3])
    def test_exact_fields(self, case_id):
        problem, case = manufactured_problem(case_id, 8)
        D = sample_displacement(*case.exact_displacement(), problem.grid)
        c = None
        if case.is_pb:
            c = np.stack([sample_nodes(fn, problem.grid).values for fn in case.concentrations])
        rec = compute_errors(D, case, problem.eps, c)
        assert rec.err_D_l2 == 0 and rec.err_D_inf == 0
        assert all(e == 0 for e in rec.err_c_l2 + rec.err_c_inf)
        assert len(rec.err_c_l2) == (2 if case.is_pb else 0)

    def test_reconstruction_second_order(self):
        _, case = manufactured_problem(1, 10)
        errs = []
        for n in (10, 20, 40, 80):
            g = build_grid(2.0, n)
            D = sample_displacement(*case.exact_displacement(), g)
            errs.append(compute_errors(D, case, manufactured_problem(1, n)[0].eps).err_E_inf)
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all((orders > 1.9) & (orders < 2.1))


class TestRateTable:
    def test_orders(self):
        recs = [ErrorRecord(n, 2.0 / n, 1.0 / n**2, 2.0 / n**2, 1.0 / n) for n in (20, 10, 40)]
        t = RateTable(recs)
        assert [r.n for r in t.records] == [10, 20, 40]
        np.testing.assert_allclose(t.orders("err_D_l2"), [2, 2])
        np.testing.assert_allclose(t.orders("err_E_inf"), [1, 1])
        assert t.finest_order("err_D_inf") == pytest.approx(2)

    def test_study_two_rows(self):
        t = run_convergence_study(2, [10, 20])
        assert len(t.records) == 2 and len(t.orders("err_D_l2")) == 1
        assert t.all_converged

    @pytest.mark.parametrize("ns", [[4, 4], [3, 8]])
    def test_study_validation(self, ns):
        with pytest.raises(ValueError):
            run_convergence_study(1, ns)


def _read(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestCSV:
    def test_study_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_convergence_study(3, [4, 6], out=str(a))
        run_convergence_study(3, [4, 6], out=str(b))
        ra, rb = _read(a), _read(b)
        assert ra[0] == ["n", "h", "err_D_l2", "err_D_inf", "err_E_inf", "err_c1_l2", "err_c1_inf",
                         "err_c2_l2", "err_c2_inf", "sweeps", "wall_time_s"]
        # everything except the wall-clock column is reproducible bit for bit
        assert [r[:-1] for r in ra] == [r[:-1] for r in rb]

    def test_full_precision(self, tmp_path):
        path = tmp_path / "s.csv"
        t = run_convergence_study(1, [4, 6], out=str(path))
        rows = _read(path)
        for rec, row in zip(t.records, rows[1:]):
            assert float(row[2]) == rec.err_D_l2 and float(row[1]) == rec.h
            assert int(row[0]) == rec.n and int(row[-2]) == rec.sweeps

    @pytest.mark.parametrize("case_id,pb", [(1, False), (3, True)])
    def test_trace(self, tmp_path, case_id, pb):
        _, report, _ = solve_case(case_id, 4, SolveOptions(max_sweeps=5))
        path = tmp_path / "t.csv"
        write_trace_csv(report, str(path), pb=pb)
        rows = _read(path)
        header = ["sweep", "energy", "max_eta"] + (["max_zeta"] if pb else []) + ["shift_norm", "gauss_residual_inf"]
        assert rows[0] == header
        assert len(rows) == 1 + report.sweeps_used
        assert float(rows[1][1]) == report.records[0].energy
