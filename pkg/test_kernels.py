#!/usr/bin/env python3
"""
Tests for the heat and Lamé fundamental solutions and the stress operator.
"""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy

from errors import KernelDomainError, NotParabolicError, PreconditionError
from geometry import gauss_legendre, tensor_product
from kernels import (
    HEAT_COEFFICIENTS, LameCoefficients, apply_stress, check_parabolicity, heat_kernel,
    heat_kernel_derivative, heat_kernel_hessian, lame_kernel, lame_kernel_gradient, lame_kernel_jet,
    lame_pde_residual, lame_pde_residual_batch, traction_of_columns,
)

ELASTIC = LameCoefficients(1.0, 1.0, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_coefficient_validation():
    with pytest.raises(PreconditionError):
        LameCoefficients(math.nan, 1.0)
    with pytest.raises(PreconditionError):
        LameCoefficients(1.0, 1.0, 0.0)
    assert LameCoefficients(0.1, 0.25).exact() == (Fraction(1, 10), Fraction(1, 4))
    assert HEAT_COEFFICIENTS.is_heat
    assert not ELASTIC.is_heat
    assert ELASTIC.speeds == (1.0, 3.0)


def test_parabolicity():
    assert check_parabolicity(ELASTIC, 2) == (-3.0, -1.0)
    with pytest.raises(NotParabolicError) as excinfo:
        check_parabolicity(LameCoefficients(1.0, -1.8, 0.5), 3)
    assert excinfo.value.root == pytest.approx(-0.2)
    assert excinfo.value.theta == 0.5


def test_heat_kernel_values():
    assert heat_kernel(np.zeros(2), 0.5) == pytest.approx(1.0 / (2.0 * math.pi))
    assert heat_kernel(np.array([1.0, 0.0, 0.0]), 0.0) == 0.0
    assert heat_kernel(np.array([1.0, 0.0]), -1.0) == 0.0
    values = heat_kernel(np.zeros((4, 3)), np.array([0.0, 1.0, 2.0, -1.0]))
    assert values[0] == 0.0 and values[3] == 0.0
    assert values[1] == pytest.approx((4.0 * math.pi) ** -1.5)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_heat_kernel_normalization(n):
    t = 0.3
    half = 12.0 * math.sqrt(t)
    x, w = gauss_legendre(40, -half, half)
    nodes, weights = tensor_product([x] * n, [w] * n)
    assert float(np.sum(weights * heat_kernel(nodes, t))) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [(1, 0), (0, 2), (2, 1), (3, 1)])
def test_heat_kernel_derivative_matches_symbolic(alpha):
    x1, x2, t = sympy.symbols("x1 x2 t", real=True)
    expr = sympy.exp(-(x1 ** 2 + x2 ** 2) / (4 * t)) / (4 * sympy.pi * t)
    for var, count in zip((x1, x2), alpha):
        if count:
            expr = sympy.diff(expr, var, count)
    point = {x1: sympy.Rational(3, 10), x2: sympy.Rational(-1, 5), t: sympy.Rational(2, 5)}
    expected = float(expr.subs(point).evalf(30))
    got = heat_kernel_derivative(np.array([0.3, -0.2]), 0.4, alpha)
    assert got == pytest.approx(expected, rel=1e-12)


def test_heat_kernel_hessian():
    x = np.array([0.3, -0.2])
    hessian = heat_kernel_hessian(x, np.asarray(0.4))
    assert hessian[0, 1] == pytest.approx(heat_kernel_derivative(x, 0.4, (1, 1)), rel=1e-12)
    assert hessian[1, 1] == pytest.approx(heat_kernel_derivative(x, 0.4, (0, 2)), rel=1e-12)
    with pytest.raises(KernelDomainError):
        heat_kernel_hessian(x, np.asarray(0.0))


@pytest.mark.parametrize("n", [2, 3])
def test_heat_case_reduces_to_scaled_heat_kernel(rng, n):
    coeffs = LameCoefficients(2.0, -2.0)
    points = rng.uniform(-1.0, 1.0, size=(20, n))
    times = rng.uniform(0.1, 1.0, size=20)
    phi = lame_kernel(points, times, coeffs)
    expected = heat_kernel(points, 2.0 * times)[:, None, None] * np.eye(n)
    assert np.max(np.abs(phi - expected)) <= 1e-14


def test_kernel_vanishes_for_nonpositive_time():
    jets = lame_kernel_jet(np.ones((3, 2)), np.array([0.0, -1.0, -0.5]), ELASTIC, 2)
    assert all(not np.any(j) for j in jets)


def test_kernel_symmetry(rng):
    points = rng.uniform(-1.0, 1.0, size=(8, 3))
    times = rng.uniform(0.2, 1.0, size=8)
    phi = lame_kernel(points, times, ELASTIC)
    np.testing.assert_allclose(phi, np.swapaxes(phi, -1, -2), atol=1e-15)
    np.testing.assert_allclose(phi, lame_kernel(-points, times, ELASTIC), rtol=1e-10, atol=1e-15)


def test_correction_matches_mpmath_quadrature():
    x1, x2, t = 0.4, -0.3, 0.5

    def d12(s):
        return mpmath.exp(-(x1 ** 2 + x2 ** 2) / (4 * s)) / (4 * mpmath.pi * s) * x1 * x2 / (4 * s ** 2)

    with mpmath.workdps(30):
        expected = float(mpmath.quad(d12, [ELASTIC.mu * t, ELASTIC.longitudinal * t]))
    phi = lame_kernel(np.array([x1, x2]), t, ELASTIC)
    assert phi[0, 1] == pytest.approx(expected, rel=1e-8, abs=1e-12)


def test_lame_kernel_normalization():
    t = 0.4
    half = 10.0 * math.sqrt(ELASTIC.longitudinal * t)
    x, w = gauss_legendre(120, -half, half)
    nodes, weights = tensor_product([x, x], [w, w])
    phi = lame_kernel(nodes, np.full(len(weights), t), ELASTIC)
    total = np.tensordot(weights, phi, axes=(0, 0))
    np.testing.assert_allclose(total, np.eye(2), atol=1e-8)


@pytest.mark.parametrize("coeffs", [ELASTIC, LameCoefficients(1.0, 0.0), HEAT_COEFFICIENTS])
@pytest.mark.parametrize("n", [2, 3])
def test_kernel_solves_the_lame_system(rng, coeffs, n):
    points = rng.uniform(-1.0, 1.0, size=(6, n))
    times = rng.uniform(0.5, 1.0, size=6)
    residual = lame_pde_residual_batch(points, times, coeffs, 1e-3)
    assert residual.shape == (6, n, n)
    assert np.max(np.abs(residual)) <= 1e-4


@pytest.mark.parametrize("coeffs", [ELASTIC, HEAT_COEFFICIENTS])
def test_residual_is_second_order_in_the_step(coeffs):
    point = (np.array([0.4, 0.3]), 0.3)
    coarse = np.max(np.abs(lame_pde_residual(point, coeffs, 4e-2)))
    fine = np.max(np.abs(lame_pde_residual(point, coeffs, 2e-2)))
    assert fine > 0.0
    assert 3.5 <= coarse / fine <= 4.5


def test_residual_rejects_stencil_through_zero():
    with pytest.raises(PreconditionError):
        lame_pde_residual_batch(np.zeros((1, 2)), np.array([5e-4]), ELASTIC, 1e-3)
    with pytest.raises(PreconditionError):
        lame_pde_residual((np.zeros(2), 0.0), ELASTIC, 1e-3)


def test_apply_stress_on_shear():
    jacobian = np.array([[0.0, 1.0], [0.0, 0.0]])
    coeffs = LameCoefficients(2.0, 3.0)
    np.testing.assert_allclose(apply_stress(jacobian, [1.0, 0.0], coeffs), [0.0, 2.0])
    np.testing.assert_allclose(apply_stress(jacobian, [0.0, 1.0], coeffs), [2.0, 0.0])
    dilation = np.eye(2)
    np.testing.assert_allclose(apply_stress(dilation, [0.0, -1.0], coeffs), [0.0, -(2.0 * 2.0 + 2.0 * 3.0)])
    with pytest.raises(PreconditionError):
        apply_stress(jacobian, [1.0, 1.0], coeffs)


def test_traction_of_columns_matches_apply_stress(rng):
    points = rng.uniform(-1.0, 1.0, size=(4, 2))
    times = rng.uniform(0.2, 1.0, size=4)
    dphi = lame_kernel_gradient(points, times, ELASTIC)
    normal = np.array([0.6, -0.8])
    traction = traction_of_columns(dphi, normal, ELASTIC)
    for j in range(2):
        np.testing.assert_allclose(traction[:, :, j], apply_stress(dphi[:, :, j, :], normal, ELASTIC), rtol=1e-13)


def test_jet_order_is_checked():
    with pytest.raises(PreconditionError):
        lame_kernel_jet(np.zeros((1, 2)), np.ones(1), ELASTIC, 3)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
