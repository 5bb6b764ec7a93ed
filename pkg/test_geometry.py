#!/usr/bin/env python3
"""
Tests for cylinders, boundary patches and quadrature rules.
"""

import math

import numpy as np
import pytest
from scipy.special import erf

from errors import InvalidGeometryError, PreconditionError
from geometry import (
    CylinderDomain, QuadratureRule, TIME_MODE_SQRT, gauss_legendre, graded_box_rule,
    graded_panels, graded_time_levels, make_ball, make_box, mirror_box, space_time_rule,
    surface_rule, tensor_product, time_rule, volume_rule,
)


@pytest.fixture
def unit_square():
    return CylinderDomain(make_box([(0.0, 1.0), (0.0, 1.0)]), 1.0)


@pytest.mark.parametrize("bounds", [
    [(0.0, 1.0)],
    [(0.0, 1.0), (1.0, 1.0)],
    [(0.0, 1.0), (2.0, 1.0)],
    [(0.0, math.inf), (0.0, 1.0)],
])
def test_make_box_rejects_degenerate_bounds(bounds):
    with pytest.raises(InvalidGeometryError):
        make_box(bounds)


@pytest.mark.parametrize("center,radius", [((0.0,), 1.0), ((0.0, 0.0), 0.0), ((0.0, 0.0), -1.0)])
def test_make_ball_rejects_degenerate_input(center, radius):
    with pytest.raises(InvalidGeometryError):
        make_ball(center, radius)


@pytest.mark.parametrize("T", [0.0, -1.0, math.nan, math.inf])
def test_cylinder_needs_positive_horizon(T):
    with pytest.raises(InvalidGeometryError):
        CylinderDomain(make_box([(0.0, 1.0), (0.0, 1.0)]), T)


def test_geometry_json_round_trip(unit_square):
    restored = CylinderDomain.from_json(unit_square.to_json())
    assert restored == unit_square
    ball = CylinderDomain(make_ball((0.0, 0.0, 0.0), 2.0), 0.5)
    assert CylinderDomain.from_dict(ball.to_dict()) == ball


@pytest.mark.parametrize("text", ["{", '{"kind": "torus", "T": 1}', '{"kind": "box", "bounds": [[0, 1], [0, 1]]}', "[]"])
def test_geometry_json_errors(text):
    with pytest.raises(InvalidGeometryError):
        CylinderDomain.from_json(text)


def test_box_measures_and_distances(unit_square):
    base = unit_square.base
    assert base.measure == pytest.approx(1.0)
    assert base.boundary_measure == pytest.approx(4.0)
    assert base.contains([0.5, 0.5])
    assert not base.contains([1.0, 0.5])
    assert base.contains([1.0, 0.5], closed=True)
    assert base.distance([0.5, 0.5]) == 0.0
    assert base.distance([2.0, 0.5]) == pytest.approx(1.0)
    assert base.boundary_distance([0.5, 0.25]) == pytest.approx(0.25)


def test_ball_measures():
    assert make_ball((0.0, 0.0), 1.0).measure == pytest.approx(math.pi)
    assert make_ball((0.0, 0.0, 0.0), 1.0).measure == pytest.approx(4.0 * math.pi / 3.0)
    assert make_ball((1.0, 1.0), 2.0).boundary_measure == pytest.approx(4.0 * math.pi)


@pytest.mark.parametrize("face,expected", [
    (0, [(-1.0, 0.0), (0.0, 1.0)]),
    (1, [(1.0, 2.0), (0.0, 1.0)]),
    (2, [(0.0, 1.0), (-1.0, 0.0)]),
    (3, [(0.0, 1.0), (1.0, 2.0)]),
])
def test_mirror_box(unit_square, face, expected):
    assert mirror_box(unit_square.base, face).bounds == tuple(expected)


def test_mirror_box_face_out_of_range(unit_square):
    with pytest.raises(InvalidGeometryError):
        mirror_box(unit_square.base, 4)


@pytest.mark.parametrize("face,normal", [(0, (-1, 0)), (1, (1, 0)), (2, (0, -1)), (3, (0, 1))])
def test_face_normals_point_outward(unit_square, face, normal):
    patch = unit_square.face(face)
    np.testing.assert_array_equal(patch.normal, np.array(normal, dtype=float))
    assert patch.measure == pytest.approx(1.0)


def test_face_foot_point_and_distance(unit_square):
    patch = unit_square.face(2)
    np.testing.assert_allclose(patch.foot_point(np.array([0.3, 0.4])), [0.3, 0.0])
    np.testing.assert_allclose(patch.foot_point(np.array([1.5, -0.5])), [1.0, 0.0])
    assert patch.distance(np.array([0.3, 0.4])) == pytest.approx(0.4)


def test_invalid_patches(unit_square):
    with pytest.raises(InvalidGeometryError):
        unit_square.face(7)
    ball = CylinderDomain(make_ball((0.0, 0.0), 1.0), 1.0)
    with pytest.raises(InvalidGeometryError):
        ball.cap((1.0, 0.0), 0.0)
    with pytest.raises(InvalidGeometryError):
        ball.cap((1.0, 0.0, 0.0), 1.0)


def test_cap_foot_point_outside_the_cap():
    ball = CylinderDomain(make_ball((0.0, 0.0), 1.0), 1.0)
    cap = ball.cap((0.0, 1.0), math.pi / 4)
    inside = cap.foot_point(np.array([0.0, 2.0]))
    np.testing.assert_allclose(inside, [0.0, 1.0], atol=1e-15)
    edge = cap.foot_point(np.array([1.0, -0.1]))
    np.testing.assert_allclose(edge, [math.sin(math.pi / 4), math.cos(math.pi / 4)], atol=1e-14)


def test_tensor_product_orders_last_axis_fastest():
    nodes, weights = tensor_product([np.array([0.0, 1.0]), np.array([5.0, 6.0, 7.0])],
                                    [np.array([1.0, 2.0]), np.array([1.0, 1.0, 1.0])])
    np.testing.assert_array_equal(nodes[:3, 1], [5.0, 6.0, 7.0])
    np.testing.assert_array_equal(nodes[:3, 0], [0.0, 0.0, 0.0])
    assert weights.sum() == pytest.approx(9.0)


def test_volume_rule_box_is_exact_for_polynomials(unit_square):
    rule = volume_rule(unit_square, 4)
    x, y = rule.nodes[:, 0], rule.nodes[:, 1]
    assert rule.integrate(x ** 2 * y) == pytest.approx(1.0 / 6.0, rel=1e-14)
    assert rule.measure == pytest.approx(1.0, rel=1e-14)


def test_volume_rule_ball():
    disc = volume_rule(make_ball((0.0, 0.0), 1.0), 8)
    assert disc.measure == pytest.approx(math.pi, rel=1e-13)
    assert disc.integrate(disc.nodes[:, 0] ** 2) == pytest.approx(math.pi / 4.0, rel=1e-13)
    ball = volume_rule(make_ball((1.0, 0.0, 0.0), 1.0), 8)
    assert ball.measure == pytest.approx(4.0 * math.pi / 3.0, rel=1e-13)


def test_surface_rule_face(unit_square):
    rule = surface_rule(unit_square.face(1), 6)
    np.testing.assert_array_equal(rule.nodes[:, 0], np.ones(6))
    np.testing.assert_array_equal(rule.normals, np.tile([1.0, 0.0], (6, 1)))
    assert rule.integrate(rule.nodes[:, 1] ** 3) == pytest.approx(0.25, rel=1e-14)


def test_surface_rule_caps():
    disc = CylinderDomain(make_ball((0.0, 0.0), 2.0), 1.0)
    circle = surface_rule(disc.boundary_patches()[0], 16)
    assert circle.measure == pytest.approx(4.0 * math.pi, rel=1e-13)
    ball = CylinderDomain(make_ball((0.0, 0.0, 0.0), 1.0), 1.0)
    hemisphere = surface_rule(ball.cap((0.0, 0.0, 1.0), math.pi / 2), 8)
    assert hemisphere.measure == pytest.approx(2.0 * math.pi, rel=1e-13)
    assert np.all(hemisphere.nodes[:, 2] > 0)


def test_time_rules():
    plain = time_rule(0.0, 2.0, 3)
    assert plain.integrate(plain.nodes[:, 0] ** 5) == pytest.approx(64.0 / 6.0, rel=1e-13)
    singular = time_rule(0.0, 1.0, 4, TIME_MODE_SQRT)
    assert singular.integrate(1.0 / np.sqrt(1.0 - singular.nodes[:, 0])) == pytest.approx(2.0, rel=1e-13)
    with pytest.raises(PreconditionError):
        time_rule(1.0, 1.0, 4)
    with pytest.raises(PreconditionError):
        time_rule(0.0, 1.0, 4, "log")


def test_space_time_rule(unit_square):
    rule = space_time_rule(surface_rule(unit_square.face(2), 4), time_rule(0.0, 1.0, 3))
    assert rule.size == 12
    assert rule.nodes.shape == (12, 3)
    assert rule.measure == pytest.approx(1.0, rel=1e-14)
    np.testing.assert_array_equal(rule.normals, np.tile([0.0, -1.0], (12, 1)))
    assert rule.integrate(rule.nodes[:, 0] * rule.nodes[:, 2]) == pytest.approx(0.25, rel=1e-14)


def test_rule_rejects_nonpositive_weights():
    with pytest.raises(PreconditionError):
        QuadratureRule(np.zeros((2, 2)), np.array([1.0, 0.0]))
    with pytest.raises(PreconditionError):
        gauss_legendre(0, 0.0, 1.0)


def test_graded_panels_resolve_a_narrow_gaussian():
    scale = 1e-3
    x, w = graded_panels(0.0, 1.0, 0.5, scale, 8)
    value = np.sum(w * np.exp(-((x - 0.5) / scale) ** 2))
    assert value == pytest.approx(scale * math.sqrt(math.pi) * erf(0.5 / scale), rel=1e-6)
    assert np.sum(w) == pytest.approx(1.0, rel=1e-14)


def test_graded_panels_reach_and_empty_window():
    x, w = graded_panels(0.0, 1.0, 0.5, 0.01, 4, reach=0.1)
    assert np.sum(w) == pytest.approx(0.2, rel=1e-14)
    x, w = graded_panels(0.0, 1.0, 3.0, 0.01, 4, reach=0.5)
    assert x.size == 0
    nodes, weights = graded_box_rule([(0.0, 1.0), (0.0, 1.0)], np.array([5.0, 5.0]), 0.1, 4, reach=1.0)
    assert nodes.shape == (0, 2)


def test_graded_time_levels_cover_the_window():
    levels = graded_time_levels(0.0, 1.0, 6, 1e-3)
    assert len(levels) == 10
    total = sum(level.weights.sum() for level in levels)
    assert total == pytest.approx(1.0, rel=1e-13)
    assert levels[0].s_hi == pytest.approx(1.0)
    assert levels[-1].s_lo == 0.0
    assert all(a.s_lo == b.s_hi for a, b in zip(levels, levels[1:]))
    assert graded_time_levels(1.0, 1.0, 6, 1e-3) == []
    with pytest.raises(PreconditionError):
        graded_time_levels(0.0, 1.0, 6, 1.0)


@pytest.mark.parametrize("floor", [0.3, 1e-3, 1e-9])
def test_graded_time_levels_start_at_the_window_edge(floor):
    # τ = t − s covers [T1, t]
    T1, t = 0.25, 1.0
    levels = graded_time_levels(T1, t, 4, floor)
    lags = np.concatenate([level.s for level in levels])
    weights = np.concatenate([level.weights for level in levels])
    assert weights.sum() == pytest.approx(t - T1, rel=1e-13)
    assert np.dot(weights, lags ** 3) == pytest.approx((t - T1) ** 4 / 4.0, rel=1e-12)
    assert np.all((lags > 0.0) & (lags < t - T1))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
