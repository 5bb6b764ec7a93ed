#!/usr/bin/env python3
"""
Tests for Cauchy data, the caloric basis, the Tikhonov solver and the
reconstruction pipeline. Reconstructions run in the heat case on coarse grids.
"""

import json

import numpy as np
import pytest

from artifacts import read_csv
from caloric import PolynomialSolution, caloric_monomial
from cauchy import (
    CauchyData, CauchyReconstructor, ProbeRow, ReconstructionConfig, TikhonovFit, TikhonovSolver,
    UniquenessReport, build_basis, collocation_grid, extended_box, interior_grid, lcurve_corner,
    write_reconstruction_report, write_sweep_csv,
)
from errors import DomainError, IllConditionedError, PreconditionError
from geometry import CylinderDomain, make_ball, make_box
from kernels import HEAT_COEFFICIENTS, LameCoefficients

ELASTIC = LameCoefficients(1.0, 1.0)
SMALL = ReconstructionConfig(max_degree=1, per_axis=3, time_nodes=2, alphas=(1e-2, 1e-4, 1e-6))


@pytest.fixture(scope="module")
def domain():
    return CylinderDomain(make_box([(0.0, 1.0), (0.0, 1.0)]), 1.0)


@pytest.fixture(scope="module")
def face(domain):
    return domain.face(2)


@pytest.fixture(scope="module")
def solution():
    field = caloric_monomial((2, 1), 0, HEAT_COEFFICIENTS) + caloric_monomial((1, 2), 1, HEAT_COEFFICIENTS)
    return PolynomialSolution(field, HEAT_COEFFICIENTS)


@pytest.fixture(scope="module")
def reconstructor(domain, face):
    return CauchyReconstructor(domain, face, HEAT_COEFFICIENTS, SMALL)


@pytest.fixture(scope="module")
def result(reconstructor, solution, domain, face):
    return reconstructor.fit(CauchyData.from_field(solution, domain, face, HEAT_COEFFICIENTS))


def test_solver_zero_rhs_gives_zero_coefficients():
    A = np.random.default_rng(1).normal(size=(20, 4))
    fit = TikhonovSolver(A).solve(np.zeros(20), 0.0)
    assert not np.any(fit.coefficients)
    assert fit.residual == 0.0


def test_solver_recovers_exact_span():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(30, 5)) * np.array([1.0, 10.0, 0.1, 1e3, 1.0])
    c = rng.normal(size=5)
    solver = TikhonovSolver(A)
    exact = solver.solve(A @ c, 0.0)
    np.testing.assert_allclose(exact.coefficients, c, rtol=1e-9)
    assert exact.residual <= 1e-12
    assert solver.solve(A @ c, 1e-10).residual <= 1e-8


def test_solver_rank_deficiency_needs_regularisation():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(10, 3))
    A = np.column_stack([A, A[:, 0]])
    solver = TikhonovSolver(A)
    b = rng.normal(size=10)
    with pytest.raises(IllConditionedError):
        solver.solve(b, 0.0)
    fit = solver.solve(b, 1e-6)
    assert np.all(np.isfinite(fit.coefficients))
    assert solver.condition > 1e13


def test_solver_sweep_is_monotone():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(40, 8))
    b = rng.normal(size=40)
    solver = TikhonovSolver(A)
    fits = [solver.solve(b, alpha) for alpha in (1.0, 1e-1, 1e-2, 1e-3, 1e-4)]
    residuals = [f.residual for f in fits]
    norms = [f.solution_norm for f in fits]
    assert all(a >= b - 1e-15 for a, b in zip(residuals, residuals[1:]))
    assert all(a <= b + 1e-15 for a, b in zip(norms, norms[1:]))


@pytest.mark.parametrize("alpha", [1.0, 1e-2, 1e-5])
def test_solver_minimises_the_plain_tikhonov_functional(alpha):
    rng = np.random.default_rng(6)
    A = rng.normal(size=(25, 6)) * np.array([1.0, 5.0, 0.2, 30.0, 1.0, 0.5])
    b = rng.normal(size=25)
    stacked = np.vstack([A, alpha * np.eye(6)])
    expected = np.linalg.lstsq(stacked, np.concatenate([b, np.zeros(6)]), rcond=None)[0]
    fit = TikhonovSolver(A).solve(b, alpha)
    np.testing.assert_allclose(fit.coefficients, expected, rtol=1e-9, atol=1e-12)
    assert fit.solution_norm == pytest.approx(np.linalg.norm(expected), rel=1e-9)
    assert fit.residual == pytest.approx(np.linalg.norm(A @ expected - b) / np.linalg.norm(b), rel=1e-9)


def test_solver_with_normalised_columns_penalises_scaled_coefficients():
    rng = np.random.default_rng(8)
    A = rng.normal(size=(25, 4)) * np.array([1.0, 10.0, 0.1, 3.0])
    b = rng.normal(size=25)
    alpha = 1e-2
    D = np.linalg.norm(A, axis=0)
    stacked = np.vstack([A, alpha * np.diag(D)])
    expected = np.linalg.lstsq(stacked, np.concatenate([b, np.zeros(4)]), rcond=None)[0]
    solver = TikhonovSolver(A, normalise_columns=True)
    np.testing.assert_allclose(solver.solve(b, alpha).coefficients, expected, rtol=1e-9, atol=1e-12)
    np.testing.assert_array_equal(TikhonovSolver(A).column_norms, np.ones(4))


def test_solver_preconditions():
    with pytest.raises(PreconditionError):
        TikhonovSolver(np.ones((2, 3)))
    with pytest.raises(PreconditionError):
        TikhonovSolver(np.eye(3)).solve(np.ones(3), -1.0)


def test_lcurve_corner():
    residuals = np.exp([4.0, 2.0, 0.0, 0.0, 0.0])
    norms = np.exp([0.0, 0.0, 0.0, 2.0, 4.0])
    fits = [TikhonovFit(a, np.zeros(1), r, s) for a, r, s in zip([1.0, 0.1, 0.01, 0.001, 1e-4], residuals, norms)]
    assert lcurve_corner(fits) == 2
    assert lcurve_corner(fits[:2]) == 1


def test_extended_box_and_grids(domain, face):
    assert extended_box(domain, face).bounds == ((0.0, 1.0), (-1.0, 1.0))
    nodes = collocation_grid(domain, face, per_axis=4, time_nodes=3)
    assert len(nodes) == 48
    assert all(x[1] < 0.0 and 0.0 <= x[0] <= 1.0 for x, _ in nodes)
    assert all(0.05 < t < 1.0 for _, t in nodes)
    interior = interior_grid(domain)
    assert len(interior) == 27
    assert all(np.all((x >= 0.25) & (x <= 0.75)) for x, _ in interior)
    assert sorted({t for _, t in interior}) == [0.5, 0.75, 1.0]
    with pytest.raises(PreconditionError):
        collocation_grid(domain, face, t_min_fraction=1.0)
    with pytest.raises(PreconditionError):
        interior_grid(domain, margin=0.5)


def test_build_basis(domain, face):
    heat = build_basis(domain, face, HEAT_COEFFICIENTS, 2)
    assert len(heat) == 12
    assert heat[0].label == "H[N=0,nu=0,s=1]e1"
    assert heat[0].length == 1.0
    np.testing.assert_allclose(heat[0].center, [0.5, 0.0])
    monomial = build_basis(domain, face, ELASTIC, 2)
    assert len(monomial) == 12
    assert monomial[0].label == "M[0,0]e1"
    assert len(build_basis(domain, face, HEAT_COEFFICIENTS, 2, "both")) == 24
    with pytest.raises(PreconditionError):
        build_basis(domain, face, ELASTIC, 2, "heat")
    with pytest.raises(PreconditionError):
        build_basis(domain, face, HEAT_COEFFICIENTS, 2, "legendre")


def test_basis_element_derivatives(domain, face):
    element = build_basis(domain, face, ELASTIC, 2)[6]
    x, t, h = np.array([[0.3, -0.4]]), np.array([0.6]), 1e-6
    jacobian = element.jacobian(x, t)[0]
    for j in range(2):
        step = np.zeros(2)
        step[j] = h
        numeric = (element.value(x + step, t)[0] - element.value(x - step, t)[0]) / (2 * h)
        np.testing.assert_allclose(jacobian[:, j], numeric, atol=1e-7)


def test_reconstructor_preconditions(domain, face):
    ball = CylinderDomain(make_ball((0.0, 0.0), 1.0), 1.0)
    with pytest.raises(PreconditionError):
        CauchyReconstructor(ball, ball.cap((0.0, 1.0), 0.5))
    other = CylinderDomain(make_box([(0.0, 2.0), (0.0, 1.0)]), 1.0)
    with pytest.raises(PreconditionError):
        CauchyReconstructor(domain, other.face(2))
    coarse = ReconstructionConfig(max_degree=2, per_axis=1, time_nodes=1)
    with pytest.raises(PreconditionError):
        CauchyReconstructor(domain, face, HEAT_COEFFICIENTS, coarse)
    with pytest.raises(PreconditionError):
        ReconstructionConfig(alphas=())
    with pytest.raises(PreconditionError):
        CauchyReconstructor(other, other.face(2), HEAT_COEFFICIENTS, SMALL).family_amplification([1], 3)


def test_config_sorts_alphas():
    config = ReconstructionConfig(alphas=(1e-6, 1e-2, 1e-4))
    assert config.alphas == (1e-2, 1e-4, 1e-6)
    assert config.to_dict()["alphas"] == [1e-2, 1e-4, 1e-6]


def test_cauchy_data_algebra(domain, face, solution):
    data = CauchyData.from_field(solution, domain, face, HEAT_COEFFICIENTS)
    assert data.f.is_zero
    assert not data.is_zero
    points, times = np.array([[0.3, 0.0]]), np.array([0.5])
    doubled = data.scaled(2.0)
    np.testing.assert_allclose(doubled.u1(points, times), 2.0 * data.u1(points, times))
    np.testing.assert_allclose((data + data).u2(points, times), 2.0 * data.u2(points, times))
    assert data.scaled(0.0).is_zero
    assert CauchyData.zero(domain, face).is_zero
    with pytest.raises(PreconditionError):
        data + CauchyData.zero(domain, domain.face(0))


def test_design_matrix_matches_extension(reconstructor):
    coefficients = np.random.default_rng(5).normal(size=len(reconstructor.basis))
    nodes = reconstructor.nodes[:3]
    stacked = reconstructor.design_matrix(nodes) @ coefficients
    direct = np.concatenate([reconstructor.extension(coefficients, x, t) for x, t in nodes])
    np.testing.assert_allclose(stacked, direct, rtol=1e-12, atol=1e-14)


def test_zero_data_reconstructs_zero(reconstructor, domain, face):
    result = reconstructor.fit(CauchyData.zero(domain, face))
    assert all(not np.any(f.coefficients) for f in result.fits)
    assert not np.any(reconstructor.reconstruct(result, [0.5, 0.5], 0.5))


def test_targets_outside_the_cylinder(reconstructor, domain, face):
    result = reconstructor.fit(CauchyData.zero(domain, face))
    with pytest.raises(DomainError):
        reconstructor.reconstruct(result, [0.5, -0.5], 0.5)
    with pytest.raises(DomainError):
        reconstructor.reconstruct(result, [0.5, 0.5], 0.0)
    with pytest.raises(DomainError):
        result([0.5, 0.5], 1.5)


def test_fit_sweep(result):
    assert [f.alpha for f in result.fits] == [1e-2, 1e-4, 1e-6]
    assert result.selected == result.corner
    assert result.fit_residual == result.fits[result.selected].residual
    assert result.with_alpha(1e-4).alpha == 1e-4
    with pytest.raises(PreconditionError):
        result.with_alpha(0.5)
    doc = result.to_dict()
    assert doc["basis_size"] == 6
    assert len(doc["sweep"]) == 3


def test_reconstruction_is_finite(reconstructor, result, domain, solution):
    targets = interior_grid(domain, per_axis=2, time_fractions=(1.0,))
    values = reconstructor.reconstruct_many(result, targets)
    assert values.shape == (4, 2)
    assert np.all(np.isfinite(values))
    reports = reconstructor.sweep_errors(result, solution, targets)
    assert len(reports) == 3
    assert all(r.points == 4 for r in reports)


def test_trace_report(reconstructor, result, domain, face):
    zero = reconstructor.fit(CauchyData.zero(domain, face))
    rows = reconstructor.trace_report(zero, [[0.5, 0.3]], 0.5)
    assert rows[0].point == (0.5, 0.0)
    assert rows[0].value_error == 0.0 and rows[0].stress_error == 0.0
    rows = reconstructor.trace_report(result, [[0.25, 0.0]], 0.75)
    assert rows[0].time == 0.75
    assert np.isfinite(rows[0].value_error) and np.isfinite(rows[0].stress_error)


def test_uniqueness_probe_is_linear(reconstructor, domain, face, solution):
    perturbation = CauchyData.from_field(solution, domain, face, HEAT_COEFFICIENTS)
    targets = interior_grid(domain, per_axis=2, time_fractions=(1.0,))
    report = reconstructor.uniqueness_probe(perturbation, (0.0, 1e-3, 1e-2), targets=targets)
    assert report.zero_sup == 0.0
    assert report.ratio(1e-2, 1e-3) == pytest.approx(10.0, rel=1e-8)


def test_uniqueness_report():
    report = UniquenessReport([ProbeRow(0.0, 0.0, 0.0), ProbeRow(1e-3, 2.0, 0.1), ProbeRow(1e-2, 20.0, 0.1)])
    assert report.zero_sup == 0.0
    assert report.ratio(1e-2, 1e-3) == pytest.approx(10.0)
    with pytest.raises(PreconditionError):
        report.ratio(1e-1, 1e-3)


def test_exports(tmp_path, reconstructor, result):
    sweep = write_sweep_csv(tmp_path / "sweep.csv", result, [0.1, 0.2, 0.3])
    rows = read_csv(sweep)
    assert [r["alpha"] for r in rows] == ["0.01", "0.0001", "1e-06"]
    assert sum(r["lcurve_corner"] == "true" for r in rows) == 1
    report = write_reconstruction_report(tmp_path / "report.json", reconstructor, result, {"status": "PASS"})
    doc = json.loads(report.read_text())
    assert doc["face"] == 2
    assert doc["status"] == "PASS"
    assert doc["config"]["max_degree"] == 1


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
