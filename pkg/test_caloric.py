#!/usr/bin/env python3
"""
Tests for the exact caloric polynomials: zero-data solutions, polynomial
Cauchy problems, spherical harmonics and heat polynomials.
"""

from fractions import Fraction

import numpy as np
import pytest

from caloric import (
    CaloricPolynomial, PolynomialField, PolynomialSolution, caloric_monomial, caloric_w,
    double_orthogonality_gram, harmonic_count, heat_basis, heat_coefficient, heat_polynomial,
    poly_cauchy_solve, reduce_boundary_data, solve_polynomial_problem, solve_zero_cauchy,
    speed_scaled_w, sphere_inner, spherical_harmonics,
)
from errors import PreconditionError, UnsupportedDimensionError
from kernels import HEAT_COEFFICIENTS, LameCoefficients, apply_stress

ELASTIC = LameCoefficients(1.0, 1.0)
COEFFICIENTS = [HEAT_COEFFICIENTS, ELASTIC, LameCoefficients(0.5, 0.25)]


def monomial(n, alpha, j=0, coeff=1):
    return CaloricPolynomial.monomial(n, alpha, j, coeff)


def test_polynomial_arithmetic_is_exact():
    x = CaloricPolynomial.variable(2, 0)
    t = CaloricPolynomial.time(2)
    p = (x + t) ** 2 - x * x
    assert p == monomial(2, (1, 0), 1, 2) + monomial(2, (0, 0), 2)
    assert (p * Fraction(1, 3)).terms[(0, 0, 2)] == Fraction(1, 3)
    assert (p - p).is_zero()
    with pytest.raises(PreconditionError):
        CaloricPolynomial(2, {(1, 0, 0): 0.5})
    with pytest.raises(PreconditionError):
        CaloricPolynomial(2, {(1, 0): 1})


def test_polynomial_evaluation_and_calculus():
    p = monomial(2, (2, 0), 1)
    assert p.evaluate(np.array([2.0, 3.0]), 0.5) == pytest.approx(2.0)
    np.testing.assert_allclose(p.evaluate(np.array([[1.0, 0.0], [3.0, 0.0]]), np.array([1.0, 2.0])), [1.0, 18.0])
    assert p.diff(0) == monomial(2, (1, 0), 1, 2)
    assert p.diff_t() == monomial(2, (2, 0), 0)
    assert p.scale_time(3) == monomial(2, (2, 0), 1, 3)
    assert p.parabolic_degree == 4
    assert monomial(1, (3,), 1).embed(3, [2]) == monomial(3, (0, 0, 3), 1)


def test_polynomial_serialisation():
    p = monomial(3, (1, 0, 2), 1, Fraction(-5, 7)) + 3
    assert CaloricPolynomial.from_dict(p.to_dict()) == p
    with pytest.raises(PreconditionError):
        CaloricPolynomial.from_dict({"dim": 2, "terms": [{"alpha": [1, 0], "num": 1, "den": 0}]})


@pytest.mark.parametrize("j,k", [(0, 0), (0, 3), (1, 0), (2, 1), (3, 4)])
def test_caloric_w_solves_the_heat_equation_with_zero_data(j, k):
    w = caloric_w(j, k)
    assert w.heat_residual() == monomial(1, (k,), j)
    assert w.restrict(0).is_zero()
    assert w.diff(0).restrict(0).is_zero()


def test_caloric_w_closed_form():
    assert caloric_w(0, 0) == monomial(1, (2,), 0, Fraction(-1, 2))
    assert caloric_w(1, 0) == monomial(1, (2,), 1, Fraction(-1, 2)) + monomial(1, (4,), 0, Fraction(-1, 24))
    with pytest.raises(PreconditionError):
        caloric_w(-1, 0)


def test_speed_scaled_w():
    w = speed_scaled_w(1, 2, 3)
    assert w.heat_residual(3) == monomial(1, (2,), 1)
    with pytest.raises(PreconditionError):
        speed_scaled_w(0, 0, 0)


@pytest.mark.parametrize("coeffs", COEFFICIENTS)
@pytest.mark.parametrize("j,alpha,component", [
    (0, (0, 0), 0), (0, (0, 0), 1), (1, (2, 1), 0), (0, (3, 0), 1), (2, (1, 1), 1),
])
def test_poly_cauchy_solve(coeffs, j, alpha, component):
    v = poly_cauchy_solve(j, alpha, coeffs, component)
    target = PolynomialField.unit(2, component, monomial(2, alpha, j))
    assert v.lame_operator(coeffs) == target
    assert v.restrict(1).is_zero()
    assert v.diff(1).restrict(1).is_zero()


def test_poly_cauchy_solve_in_three_dimensions():
    v = poly_cauchy_solve(1, (1, 0, 1), ELASTIC, 2)
    assert v.lame_operator(ELASTIC) == PolynomialField.unit(3, 2, monomial(3, (1, 0, 1), 1))
    assert v.restrict(2).is_zero()


def test_poly_cauchy_solve_rejects_bad_input():
    with pytest.raises(PreconditionError):
        poly_cauchy_solve(0, (1,), ELASTIC)
    with pytest.raises(PreconditionError):
        poly_cauchy_solve(0, (1, 0), ELASTIC, component=2)
    with pytest.raises(PreconditionError):
        poly_cauchy_solve(-1, (1, 0), ELASTIC)


def test_solve_zero_cauchy_is_linear():
    g = PolynomialField([monomial(2, (1, 0), 1), monomial(2, (0, 1), 0, 3)])
    v = solve_zero_cauchy(g, ELASTIC)
    assert v.lame_operator(ELASTIC) == g
    doubled = solve_zero_cauchy(g * 2, ELASTIC)
    assert doubled == v * 2


@pytest.mark.parametrize("coeffs", COEFFICIENTS)
def test_solve_polynomial_problem(coeffs):
    f = PolynomialField([monomial(2, (1, 0), 1), monomial(2, (0, 2), 0)])
    u1 = PolynomialField([monomial(2, (2, 0), 0), monomial(2, (0, 0), 1, -1)])
    u2 = PolynomialField([monomial(2, (0, 0), 0, 2), monomial(2, (1, 0), 0)])
    u = solve_polynomial_problem(f, u1, u2, coeffs)
    assert u.lame_operator(coeffs) == f
    assert u.restrict(1) == u1
    assert u.stress(1, 1, coeffs).restrict(1) == u2


def test_reduce_boundary_data_requires_face_data():
    f = PolynomialField.zero(2)
    with pytest.raises(PreconditionError):
        reduce_boundary_data(f, PolynomialField.unit(2, 0, monomial(2, (0, 1))), f, ELASTIC)
    reduced = reduce_boundary_data(f, f, PolynomialField.unit(2, 1, monomial(2, (1, 0))), ELASTIC)
    assert reduced.lift.restrict(1).is_zero()


@pytest.mark.parametrize("coeffs", COEFFICIENTS)
@pytest.mark.parametrize("alpha,component", [((2, 1), 0), ((1, 2), 1), ((3, 0), 1)])
def test_caloric_monomial(coeffs, alpha, component):
    u = caloric_monomial(alpha, component, coeffs)
    assert u.lame_operator(coeffs).is_zero()
    x = np.array([0.3, -0.7])
    expected = np.zeros(2)
    expected[component] = x[0] ** alpha[0] * x[1] ** alpha[1]
    np.testing.assert_allclose(u.value(x, 0.0), expected, rtol=1e-14)
    solution = PolynomialSolution(u, coeffs)
    assert solution.source_free


def test_field_stress_matches_numeric_stress():
    u = caloric_monomial((2, 1), 0, ELASTIC) + caloric_monomial((1, 2), 1, ELASTIC)
    x, t = np.array([0.4, 0.0]), 0.3
    exact = u.stress(1, -1, ELASTIC).value(x, t)
    numeric = apply_stress(u.jacobian(x, t), [0.0, -1.0], ELASTIC)
    np.testing.assert_allclose(exact, numeric, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("n,nu", [(2, 0), (2, 3), (3, 0), (3, 2)])
def test_spherical_harmonics_are_orthonormal(n, nu):
    harmonics = spherical_harmonics(n, nu)
    assert len(harmonics) == harmonic_count(n, nu)
    gram = np.array([[sphere_inner(a.polynomial, b.polynomial) for b in harmonics] for a in harmonics])
    np.testing.assert_allclose(gram, np.eye(len(harmonics)), atol=1e-12)
    for h in harmonics:
        assert h.polynomial.laplacian().is_zero()


def test_harmonics_need_a_supported_dimension():
    with pytest.raises(UnsupportedDimensionError):
        harmonic_count(4, 1)


def test_heat_coefficient_closed_form():
    assert heat_coefficient(1, 1, 2, 1) == 8
    assert heat_coefficient(3, 2, 3, 0) == 1
    for N in range(1, 5):
        for nu in range(3):
            for n in (2, 3):
                c = Fraction(1)
                for j in range(1, N + 1):
                    c = c * (2 * N - 2 * j + 2) * (n + 2 * N - 2 * j + 2 * nu) / j
                    assert heat_coefficient(N, nu, n, j) == c


def test_heat_polynomial_first_coefficient():
    h = heat_polynomial(1, 1, 1, 2)
    raw = h.with_scale(1.0)
    # H = (|x|² + 8t) x_1 before normalisation
    assert raw == monomial(2, (3, 0)) + monomial(2, (1, 2)) + monomial(2, (1, 0), 1, 8)
    assert h.heat_residual().is_zero()
    assert h.label == "H[N=1,nu=1,s=1]"


@pytest.mark.parametrize("n,N,nu", [(2, 2, 1), (2, 3, 0), (3, 1, 2), (3, 2, 1)])
def test_heat_polynomials_are_caloric(n, N, nu):
    if nu == 0:
        h = heat_polynomial(N, 0, 1, n, axis=1)
        assert h.block == ("axis", 1)
    else:
        h = heat_polynomial(N, nu, 1, n)
        assert h.block == (nu, 1)
    assert h.heat_residual().is_zero()
    assert h.degree == 2 * N + nu


def test_heat_polynomial_rejects_bad_labels():
    with pytest.raises(PreconditionError):
        heat_polynomial(1, 0, 1, 2)
    with pytest.raises(PreconditionError):
        heat_polynomial(0, 2, 3, 2)
    with pytest.raises(PreconditionError):
        heat_polynomial(1, 1, 1, 2, axis=1)
    with pytest.raises(PreconditionError):
        heat_polynomial(1, 0, 1, 2, axis=3)


def test_heat_basis_size():
    assert len(heat_basis(2, 8)) == 45
    assert len(heat_basis(2, 8, axes=())) == 41
    assert len(heat_basis(2, 8, axes=(1, 2))) == 49
    assert all(h.degree <= 8 for h in heat_basis(3, 4))


@pytest.mark.parametrize("n,degree", [(2, 4), (3, 3)])
def test_gram_is_block_diagonal(n, degree):
    elements = heat_basis(n, degree, axes=())
    report = double_orthogonality_gram(elements, 1.0, 1.0, 16)
    diag = np.diag(report.matrix)
    assert np.all(diag > 0)
    assert report.off_block_max <= 1e-12 * diag.max()
    assert report.axis_cross_max == 0.0
    assert len(report.labels) == len(elements)


def test_gram_reports_axis_cross_terms():
    elements = heat_basis(2, 4, axes=(1,))
    report = double_orthogonality_gram(elements, 1.0, 1.0, 16)
    assert report.axis_cross_max > 0.0
    with pytest.raises(PreconditionError):
        double_orthogonality_gram([], 1.0, 1.0, 4)


def test_gram_converges_with_order():
    elements = heat_basis(2, 4, axes=())
    coarse = double_orthogonality_gram(elements, 1.0, 1.0, 4)
    fine = double_orthogonality_gram(elements, 1.0, 1.0, 8)
    assert fine.off_block_max <= coarse.off_block_max + 1e-12 * np.diag(fine.matrix).max()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
