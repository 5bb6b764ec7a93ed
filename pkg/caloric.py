#!/usr/bin/env python3
"""
Exact polynomial solutions of the heat and parabolic Lamé operators.

Everything here is built with rational arithmetic (fractions.Fraction); floats
appear only when a polynomial is evaluated at points. Contents:

- CaloricPolynomial: sparse polynomial in (x_1..x_n, t)
- PolynomialField: n-vector of CaloricPolynomial with the exact Lamé operator and face stress
- caloric_w / poly_cauchy_solve / reduce_boundary_data: polynomial solutions with
  zero or prescribed Cauchy data on the face {x_n = 0}
- spherical_harmonics / heat_polynomial / double_orthogonality_gram: the heat-polynomial
  basis built on solid harmonics and its space-time Gram matrix
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import CaloricIdentityError, PreconditionError, UnsupportedDimensionError
from geometry import gauss_legendre, make_ball, volume_rule
from kernels import LameCoefficients, check_parabolicity

logger = logging.getLogger(__name__)

Key = Tuple[int, ...]
Scalar = Union[int, Fraction]
ExactPair = Tuple[Fraction, Fraction]

ORTHOGONALITY_TOLERANCE = 1e-12


class CaloricPolynomial:
    """
    Sparse polynomial in (x_1, ..., x_n, t) with exact rational coefficients.

    Terms map a key (α_1, ..., α_n, j) to the coefficient of x^α t^j. `scale` is an
    optional float factor applied only at evaluation time (normalised harmonics).
    Instances are treated as immutable.
    """

    def __init__(self, dim: int, terms: Optional[Dict[Key, Scalar]] = None, scale: float = 1.0):
        if dim < 1:
            raise PreconditionError(f"Polynomial dimension must be >= 1, got {dim}")
        self.dim = int(dim)
        self.scale = float(scale)
        cleaned: Dict[Key, Fraction] = {}
        for key, coeff in (terms or {}).items():
            key = tuple(int(k) for k in key)
            if len(key) != self.dim + 1 or min(key) < 0:
                raise PreconditionError(f"Exponent key {key} does not fit dimension {self.dim}")
            if isinstance(coeff, float):
                raise PreconditionError("Polynomial coefficients must be exact (int or Fraction)")
            value = cleaned.get(key, Fraction(0)) + Fraction(coeff)
            if value:
                cleaned[key] = value
            else:
                cleaned.pop(key, None)
        self._terms = cleaned
        self._float_terms = None

    # -- construction helpers --------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "CaloricPolynomial":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, value: Scalar) -> "CaloricPolynomial":
        return cls(dim, {(0,) * (dim + 1): value})

    @classmethod
    def monomial(cls, dim: int, alpha: Sequence[int], j: int = 0, coeff: Scalar = 1) -> "CaloricPolynomial":
        return cls(dim, {tuple(alpha) + (j,): coeff})

    @classmethod
    def variable(cls, dim: int, i: int) -> "CaloricPolynomial":
        """x_i (0-based); i = dim gives t."""
        key = [0] * (dim + 1)
        key[i] = 1
        return cls(dim, {tuple(key): 1})

    @classmethod
    def time(cls, dim: int) -> "CaloricPolynomial":
        return cls.variable(dim, dim)

    @property
    def terms(self) -> Dict[Key, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def with_scale(self, scale: float) -> "CaloricPolynomial":
        return CaloricPolynomial(self.dim, self._terms, scale)

    # -- arithmetic ------------------------------------------------------------

    def _coerce(self, other) -> "CaloricPolynomial":
        if isinstance(other, CaloricPolynomial):
            if other.dim != self.dim:
                raise PreconditionError(f"Dimension mismatch: {self.dim} vs {other.dim}")
            return other
        if isinstance(other, (int, Fraction)):
            return CaloricPolynomial.constant(self.dim, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.scale != other.scale:
            raise PreconditionError("Cannot add polynomials carrying different normalisation scales")
        terms = dict(self._terms)
        for key, c in other._terms.items():
            terms[key] = terms.get(key, Fraction(0)) + c
        return CaloricPolynomial(self.dim, terms, self.scale)

    __radd__ = __add__

    def __neg__(self):
        return CaloricPolynomial(self.dim, {k: -c for k, c in self._terms.items()}, self.scale)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CaloricPolynomial(self.dim, {k: c * other for k, c in self._terms.items()}, self.scale)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: Dict[Key, Fraction] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                key = tuple(a + b for a, b in zip(k1, k2))
                terms[key] = terms.get(key, Fraction(0)) + c1 * c2
        return CaloricPolynomial(self.dim, terms, self.scale * other.scale)

    __rmul__ = __mul__

    def __pow__(self, power: int):
        if power < 0:
            raise PreconditionError("Negative powers are not polynomials")
        result = CaloricPolynomial.constant(self.dim, 1)
        for _ in range(power):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, CaloricPolynomial):
            return NotImplemented
        return self.dim == other.dim and self._terms == other._terms and (
            self.scale == other.scale or self.is_zero())

    __hash__ = None

    def is_zero(self) -> bool:
        return not self._terms

    # -- calculus --------------------------------------------------------------

    def diff(self, var: int) -> "CaloricPolynomial":
        """Partial derivative in x_var (0-based); var = dim differentiates in t."""
        terms = {}
        for key, c in self._terms.items():
            e = key[var]
            if e:
                new = list(key)
                new[var] = e - 1
                terms[tuple(new)] = c * e
        return CaloricPolynomial(self.dim, terms, self.scale)

    def diff_t(self) -> "CaloricPolynomial":
        return self.diff(self.dim)

    def laplacian(self, axes: Optional[Iterable[int]] = None) -> "CaloricPolynomial":
        axes = range(self.dim) if axes is None else axes
        result = CaloricPolynomial(self.dim, scale=self.scale)
        for i in axes:
            result = result + self.diff(i).diff(i)
        return result

    def heat_residual(self, diffusivity: Scalar = 1) -> "CaloricPolynomial":
        """(∂_t − cΔ) applied exactly."""
        return self.diff_t() - self.laplacian() * diffusivity

    def restrict(self, var: int) -> "CaloricPolynomial":
        """Substitute x_var = 0."""
        return CaloricPolynomial(self.dim, {k: c for k, c in self._terms.items() if k[var] == 0}, self.scale)

    def depends_on(self, var: int) -> bool:
        return any(k[var] for k in self._terms)

    def scale_time(self, factor: Scalar) -> "CaloricPolynomial":
        """Substitute t -> factor·t."""
        factor = Fraction(factor)
        return CaloricPolynomial(self.dim, {k: c * factor ** k[-1] for k, c in self._terms.items()}, self.scale)

    def embed(self, dim: int, axes: Sequence[int]) -> "CaloricPolynomial":
        """Re-express in dimension `dim`, sending variable x_i to x_{axes[i]}."""
        if len(axes) != self.dim:
            raise PreconditionError(f"Need {self.dim} target axes, got {len(axes)}")
        terms = {}
        for key, c in self._terms.items():
            new = [0] * (dim + 1)
            for i, a in enumerate(axes):
                new[a] += key[i]
            new[-1] = key[-1]
            terms[tuple(new)] = terms.get(tuple(new), Fraction(0)) + c
        return CaloricPolynomial(dim, terms, self.scale)

    # -- bookkeeping -----------------------------------------------------------

    @property
    def degree(self) -> int:
        """Total degree in x."""
        return max((sum(k[:-1]) for k in self._terms), default=0)

    @property
    def time_degree(self) -> int:
        return max((k[-1] for k in self._terms), default=0)

    @property
    def parabolic_degree(self) -> int:
        return max((sum(k[:-1]) + 2 * k[-1] for k in self._terms), default=0)

    def tangential_degree(self, axis: int) -> int:
        """Degree in the spatial variables other than x_axis."""
        return max((sum(k[:-1]) - k[axis] for k in self._terms), default=0)

    # -- evaluation ------------------------------------------------------------

    def evaluate(self, x, t=0.0):
        """Float value at points x (..., n) and times t (...)."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        lead = np.broadcast_shapes(x.shape[:-1], t.shape)
        if self._float_terms is None:
            self._float_terms = [(k, float(c)) for k, c in sorted(self._terms.items())]
        result = np.zeros(lead)
        if not self._float_terms:
            return result if lead else 0.0
        variables = [x[..., i] for i in range(self.dim)] + [t]
        powers: Dict[Tuple[int, int], np.ndarray] = {}
        for key, c in self._float_terms:
            term = c
            for var, e in enumerate(key):
                if e:
                    if (var, e) not in powers:
                        powers[(var, e)] = variables[var] ** e
                    term = term * powers[(var, e)]
            result = result + term
        result = self.scale * np.broadcast_to(result, lead)
        return float(result) if result.ndim == 0 else result

    # -- serialisation ---------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        doc = {"dim": self.dim,
               "terms": [{"alpha": list(k[:-1]), "j": k[-1], "num": c.numerator, "den": c.denominator}
                         for k, c in sorted(self._terms.items())]}
        if self.scale != 1.0:
            doc["scale"] = self.scale
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "CaloricPolynomial":
        try:
            dim = int(doc["dim"])
            terms: Dict[Key, Fraction] = {}
            for term in doc["terms"]:
                key = tuple(int(a) for a in term["alpha"]) + (int(term.get("j", 0)),)
                terms[key] = terms.get(key, Fraction(0)) + Fraction(int(term["num"]), int(term.get("den", 1)))
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
            raise PreconditionError(f"Malformed polynomial document: {e}")
        return cls(dim, terms, float(doc.get("scale", 1.0)))

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for key, c in sorted(self._terms.items()):
            factors = [f"x{i + 1}^{e}" if e > 1 else f"x{i + 1}" for i, e in enumerate(key[:-1]) if e]
            if key[-1]:
                factors.append(f"t^{key[-1]}" if key[-1] > 1 else "t")
            parts.append("*".join([str(c)] + factors))
        text = " + ".join(parts)
        return text if self.scale == 1.0 else f"{self.scale!r}*({text})"


class HeatPolynomial(CaloricPolynomial):
    """Element H^{(s)}_{N,ν} (or the axis variant) of the heat-polynomial basis."""

    def __init__(self, poly: CaloricPolynomial, N: int, nu: int, s: int, axis: Optional[int] = None):
        super().__init__(poly.dim, poly.terms, poly.scale)
        self.N = N
        self.nu = nu
        self.s = s
        self.axis = axis

    @property
    def block(self) -> Tuple:
        """Orthogonality block label: (ν, s), or ('axis', i) for axis variants."""
        return ("axis", self.axis) if self.axis is not None else (self.nu, self.s)

    @property
    def label(self) -> str:
        if self.axis is not None:
            return f"H[N={self.N},axis={self.axis}]"
        return f"H[N={self.N},nu={self.nu},s={self.s}]"


def _exact(coeffs: Union[LameCoefficients, ExactPair]) -> ExactPair:
    if isinstance(coeffs, LameCoefficients):
        return coeffs.exact()
    mu, lam = coeffs
    return Fraction(mu), Fraction(lam)


class PolynomialField:
    """Vector field u = (u_1, ..., u_n) with CaloricPolynomial components."""

    def __init__(self, components: Sequence[CaloricPolynomial]):
        components = tuple(components)
        if not components:
            raise PreconditionError("A polynomial field needs at least one component")
        dim = components[0].dim
        if len(components) != dim or any(c.dim != dim for c in components):
            raise PreconditionError(f"Field in dimension {dim} needs {dim} components of that dimension")
        self.components = components
        self.dim = dim
        self._jacobian_polys = None

    @classmethod
    def zero(cls, dim: int) -> "PolynomialField":
        return cls([CaloricPolynomial.zero(dim) for _ in range(dim)])

    @classmethod
    def unit(cls, dim: int, component: int, poly: CaloricPolynomial) -> "PolynomialField":
        """poly placed in one component (0-based), zeros elsewhere."""
        comps = [CaloricPolynomial.zero(dim) for _ in range(dim)]
        comps[component] = poly
        return cls(comps)

    def __add__(self, other: "PolynomialField") -> "PolynomialField":
        return PolynomialField([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "PolynomialField") -> "PolynomialField":
        return PolynomialField([a - b for a, b in zip(self.components, other.components)])

    def __neg__(self) -> "PolynomialField":
        return PolynomialField([-a for a in self.components])

    def __mul__(self, factor) -> "PolynomialField":
        return PolynomialField([a * factor for a in self.components])

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PolynomialField):
            return NotImplemented
        return self.components == other.components

    __hash__ = None

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def diff(self, var: int) -> "PolynomialField":
        return PolynomialField([c.diff(var) for c in self.components])

    def restrict(self, var: int) -> "PolynomialField":
        return PolynomialField([c.restrict(var) for c in self.components])

    def depends_on(self, var: int) -> bool:
        return any(c.depends_on(var) for c in self.components)

    def divergence(self) -> CaloricPolynomial:
        result = CaloricPolynomial.zero(self.dim)
        for i, c in enumerate(self.components):
            result = result + c.diff(i)
        return result

    def lame_operator(self, coeffs: Union[LameCoefficients, ExactPair]) -> "PolynomialField":
        """L u = ∂_t u − μΔu − (μ+λ)∇div u, exactly."""
        mu, lam = _exact(coeffs)
        div = self.divergence()
        return PolynomialField([c.diff_t() - c.laplacian() * mu - div.diff(i) * (mu + lam)
                                for i, c in enumerate(self.components)])

    def stress(self, axis: int, sign: int, coeffs: Union[LameCoefficients, ExactPair]) -> "PolynomialField":
        """σu for the constant normal ν = sign·e_axis."""
        mu, lam = _exact(coeffs)
        div = self.divergence()
        normal_part = self.components[axis]
        comps = []
        for i, c in enumerate(self.components):
            value = c.diff(axis) * mu + normal_part.diff(i) * mu
            if i == axis:
                value = value + div * lam
            comps.append(value * sign)
        return PolynomialField(comps)

    @property
    def degree(self) -> int:
        return max(c.degree for c in self.components)

    def value(self, x, t) -> np.ndarray:
        return np.stack([np.asarray(c.evaluate(x, t), dtype=float) for c in self.components], axis=-1)

    def jacobian(self, x, t) -> np.ndarray:
        """[..., i, j] = ∂u_i/∂x_j."""
        if self._jacobian_polys is None:
            self._jacobian_polys = [[c.diff(j) for j in range(self.dim)] for c in self.components]
        rows = [np.stack([np.asarray(p.evaluate(x, t), dtype=float) for p in row], axis=-1)
                for row in self._jacobian_polys]
        return np.stack(rows, axis=-2)

    def to_dict(self) -> Dict[str, Any]:
        return {"dim": self.dim, "components": [c.to_dict() for c in self.components]}

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "PolynomialField":
        return cls([CaloricPolynomial.from_dict(c) for c in doc["components"]])

    def __repr__(self):
        return "(" + ", ".join(repr(c) for c in self.components) + ")"


class PolynomialSolution:
    """A polynomial field together with its coefficients: value, Jacobian and L u on demand."""

    def __init__(self, field: PolynomialField, coeffs: LameCoefficients):
        self.field = field
        self.coeffs = coeffs
        self.source_field = field.lame_operator(coeffs)
        self.source_free = self.source_field.is_zero()

    @property
    def dim(self) -> int:
        return self.field.dim

    def value(self, x, t) -> np.ndarray:
        return self.field.value(x, t)

    def jacobian(self, x, t) -> np.ndarray:
        return self.field.jacobian(x, t)

    def source(self, x, t) -> np.ndarray:
        return self.source_field.value(x, t)


# ---------------------------------------------------------------------------
# Zero Cauchy data on the face {x_n = 0}
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def caloric_w(j: int, k: int) -> CaloricPolynomial:
    """
    w^{(j,k)}(y, t) = −Σ_m t^{j−m} y^{k+2m+2} k! j! / ((k+2m+2)! (j−m)!).

    Solves (∂_t − ∂²_y) w = t^j y^k with w = ∂_y w = 0 at y = 0.
    """
    if j < 0 or k < 0:
        raise PreconditionError(f"caloric_w needs j, k >= 0, got ({j}, {k})")
    terms = {}
    for m in range(j + 1):
        terms[(k + 2 * m + 2, j - m)] = -Fraction(factorial(k) * factorial(j),
                                                  factorial(k + 2 * m + 2) * factorial(j - m))
    w = CaloricPolynomial(1, terms)
    if w.heat_residual() != CaloricPolynomial.monomial(1, (k,), j):
        raise CaloricIdentityError(f"w^({j},{k}) does not solve the heat equation")
    if not w.restrict(0).is_zero() or not w.diff(0).restrict(0).is_zero():
        raise CaloricIdentityError(f"w^({j},{k}) has non-zero Cauchy data at y = 0")
    return w


def speed_scaled_w(j: int, k: int, speed: Scalar) -> CaloricPolynomial:
    """c^{−(j+1)} w^{(j,k)}(y, c t): solves (∂_t − c∂²_y) W = t^j y^k with zero data at y = 0."""
    speed = Fraction(speed)
    if speed <= 0:
        raise PreconditionError(f"Diffusion speed must be positive, got {speed}")
    return caloric_w(j, k).scale_time(speed) * (1 / speed ** (j + 1))


@lru_cache(maxsize=None)
def _solve_monomial(j: int, alpha: Key, component: int, mu: Fraction, lam: Fraction) -> PolynomialField:
    # Base term P(x') w_c(x_n, t) e_i leaves a residual of lower tangential degree.
    n = len(alpha)
    speed = mu if component < n - 1 else 2 * mu + lam
    tangential = CaloricPolynomial.monomial(n, alpha[:-1] + (0,), 0)
    w = speed_scaled_w(j, alpha[-1], speed).embed(n, [n - 1])
    v = PolynomialField.unit(n, component, tangential * w)
    target = PolynomialField.unit(n, component, CaloricPolynomial.monomial(n, alpha, j))
    residual = v.lame_operator((mu, lam)) - target
    if residual.is_zero():
        return v
    return v - _solve_field(residual, mu, lam)


def _solve_field(g: PolynomialField, mu: Fraction, lam: Fraction) -> PolynomialField:
    total = PolynomialField.zero(g.dim)
    for i, comp in enumerate(g.components):
        for key, c in sorted(comp.items()):
            total = total + _solve_monomial(key[-1], key[:-1], i, mu, lam) * c
    return total


def _check_zero_cauchy(v: PolynomialField, label: str):
    axis = v.dim - 1
    if not v.restrict(axis).is_zero():
        raise CaloricIdentityError(f"{label}: value on x_n = 0 is not zero")
    if not v.diff(axis).restrict(axis).is_zero():
        raise CaloricIdentityError(f"{label}: normal derivative on x_n = 0 is not zero")


def poly_cauchy_solve(j: int, alpha: Sequence[int], coeffs: LameCoefficients,
                      component: int = 0) -> PolynomialField:
    """
    Polynomial v^{(j,α)} with L v = t^j x^α e_component and v = ∂_n v = 0 on {x_n = 0}.

    Components are 0-based. The identity and both face conditions are checked
    exactly before returning.
    """
    alpha = tuple(int(a) for a in alpha)
    n = len(alpha)
    if n < 2:
        raise PreconditionError(f"poly_cauchy_solve needs n >= 2, got n={n}")
    if j < 0 or min(alpha) < 0 or not 0 <= component < n:
        raise PreconditionError(f"Invalid data (j={j}, alpha={alpha}, component={component})")
    check_parabolicity(coeffs, n)
    mu, lam = coeffs.exact()
    v = _solve_monomial(j, alpha, component, mu, lam)
    target = PolynomialField.unit(n, component, CaloricPolynomial.monomial(n, alpha, j))
    if v.lame_operator((mu, lam)) != target:
        raise CaloricIdentityError(f"v^({j},{alpha}) does not satisfy L v = t^j x^alpha")
    _check_zero_cauchy(v, f"v^({j},{alpha})")
    return v


def solve_zero_cauchy(g: PolynomialField, coeffs: LameCoefficients) -> PolynomialField:
    """Polynomial v with L v = g and zero Cauchy data on {x_n = 0}."""
    check_parabolicity(coeffs, g.dim)
    mu, lam = coeffs.exact()
    v = _solve_field(g, mu, lam)
    if v.lame_operator((mu, lam)) != g:
        raise CaloricIdentityError("Zero-data solution does not reproduce the right-hand side")
    _check_zero_cauchy(v, "zero-data solution")
    return v


@dataclass(frozen=True, eq=False)
class ReducedProblem:
    """Right-hand side g for zero Cauchy data and the lift carrying the original data."""
    g: PolynomialField
    lift: PolynomialField


def reduce_boundary_data(f: PolynomialField, u1: PolynomialField, u2: PolynomialField,
                         coeffs: LameCoefficients) -> ReducedProblem:
    """
    Move face data u = u1, σu = u2 on {x_n = 0} (normal e_n) into the right-hand side.

    lift = u1 + x_n J (u2 − σu1|_{x_n=0}) with J = diag(1/μ, ..., 1/μ, 1/(2μ+λ)),
    g = f − L(lift). When σu1 vanishes on the face this is the familiar
    g = f − L u1 − L(x_n J u2).
    """
    n = f.dim
    axis = n - 1
    if u1.dim != n or u2.dim != n:
        raise PreconditionError("f, u1 and u2 must share the dimension")
    if u1.depends_on(axis) or u2.depends_on(axis):
        raise PreconditionError("Face data u1, u2 must not depend on x_n")
    mu, lam = coeffs.exact()
    inverse_speeds = [1 / mu] * (n - 1) + [1 / (2 * mu + lam)]
    xn = CaloricPolynomial.variable(n, axis)
    correction = u2 - u1.stress(axis, 1, (mu, lam)).restrict(axis)
    lift = u1 + PolynomialField([xn * c * inverse_speeds[i] for i, c in enumerate(correction.components)])
    if lift.restrict(axis) != u1:
        raise CaloricIdentityError("Lift does not reproduce u1 on the face")
    if lift.stress(axis, 1, (mu, lam)).restrict(axis) != u2:
        raise CaloricIdentityError("Lift does not reproduce u2 on the face")
    return ReducedProblem(f - lift.lame_operator((mu, lam)), lift)


def solve_polynomial_problem(f: PolynomialField, u1: PolynomialField, u2: PolynomialField,
                             coeffs: LameCoefficients) -> PolynomialField:
    """Polynomial u with L u = f, u = u1 and σu = u2 on {x_n = 0}."""
    reduced = reduce_boundary_data(f, u1, u2, coeffs)
    u = solve_zero_cauchy(reduced.g, coeffs) + reduced.lift
    axis = f.dim - 1
    if u.lame_operator(coeffs) != f:
        raise CaloricIdentityError("Polynomial solution does not satisfy L u = f")
    if u.restrict(axis) != u1 or u.stress(axis, 1, coeffs).restrict(axis) != u2:
        raise CaloricIdentityError("Polynomial solution misses the face data")
    return u


def caloric_monomial(alpha: Sequence[int], component: int, coeffs: LameCoefficients) -> PolynomialField:
    """exp(t𝓛)(x^α e_i) = Σ_k t^k/k! 𝓛^k(x^α e_i), a polynomial solution of L u = 0."""
    alpha = tuple(int(a) for a in alpha)
    n = len(alpha)
    mu, lam = coeffs.exact()
    current = PolynomialField.unit(n, component, CaloricPolynomial.monomial(n, alpha))
    t = CaloricPolynomial.time(n)
    total = PolynomialField.zero(n)
    k = 0
    while not current.is_zero():
        total = total + PolynomialField([c * t ** k * Fraction(1, factorial(k)) for c in current.components])
        div = current.divergence()
        current = PolynomialField([c.laplacian() * mu + div.diff(i) * (mu + lam)
                                   for i, c in enumerate(current.components)])
        k += 1
    if not total.lame_operator((mu, lam)).is_zero():
        raise CaloricIdentityError(f"Caloric monomial for alpha={alpha} is not a solution")
    return total


# ---------------------------------------------------------------------------
# Spherical harmonics and heat polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SphericalHarmonic:
    """Solid harmonic h_ν^{(s)}: exact homogeneous polynomial with an L²(sphere) normalisation scale."""
    dim: int
    degree: int
    index: int
    polynomial: CaloricPolynomial

    def evaluate(self, x) -> np.ndarray:
        return self.polynomial.evaluate(x, 0.0)


def harmonic_count(n: int, nu: int) -> int:
    if n == 2:
        return 1 if nu == 0 else 2
    if n == 3:
        return 2 * nu + 1
    raise UnsupportedDimensionError(f"Spherical harmonics implemented for n in {{2, 3}}, got n={n}")


def sphere_moment(alpha: Sequence[int]) -> float:
    """∫ x^α over the unit sphere S^{n−1}."""
    if any(a % 2 for a in alpha):
        return 0.0
    n = len(alpha)
    log_value = math.log(2.0) + sum(math.lgamma((a + 1) / 2) for a in alpha) - math.lgamma((sum(alpha) + n) / 2)
    return math.exp(log_value)


def sphere_inner(p: CaloricPolynomial, q: CaloricPolynomial) -> float:
    """L²(unit sphere) inner product of two time-independent polynomials."""
    product = p * q
    return product.scale * sum(float(c) * sphere_moment(k[:-1]) for k, c in product.items() if k[-1] == 0)


def _complex_power_parts(n: int, m: int) -> Tuple[CaloricPolynomial, CaloricPolynomial]:
    """Real and imaginary parts of (x_1 + i x_2)^m."""
    re, im = {}, {}
    for k in range(m + 1):
        key = [0] * (n + 1)
        key[0], key[1] = m - k, k
        if k % 2 == 0:
            re[tuple(key)] = comb(m, k) * (-1) ** (k // 2)
        else:
            im[tuple(key)] = comb(m, k) * (-1) ** ((k - 1) // 2)
    return CaloricPolynomial(n, re), CaloricPolynomial(n, im)


def _legendre_factor(nu: int, m: int) -> CaloricPolynomial:
    """r^{ν−m} P_ν^{(m)}(x_3/r) as a polynomial in (x_1, x_2, x_3), up to a constant."""
    r2 = sum((CaloricPolynomial.variable(3, i) ** 2 for i in range(3)), CaloricPolynomial.zero(3))
    z = CaloricPolynomial.variable(3, 2)
    total = CaloricPolynomial.zero(3)
    for k in range((nu - m) // 2 + 1):
        c = (-1) ** k * comb(nu, k) * comb(2 * nu - 2 * k, nu) * factorial(nu - 2 * k) // factorial(nu - 2 * k - m)
        total = total + r2 ** k * z ** (nu - 2 * k - m) * c
    return total


def _check_harmonic(h: CaloricPolynomial, nu: int, label: str):
    if not h.laplacian().is_zero():
        raise CaloricIdentityError(f"{label} is not harmonic")
    euler = CaloricPolynomial.zero(h.dim)
    for i in range(h.dim):
        euler = euler + CaloricPolynomial.variable(h.dim, i) * h.diff(i)
    if euler != h * nu:
        raise CaloricIdentityError(f"{label} is not homogeneous of degree {nu}")


@lru_cache(maxsize=None)
def _harmonics(n: int, nu: int) -> Tuple[SphericalHarmonic, ...]:
    if nu < 0:
        raise PreconditionError(f"Harmonic degree must be >= 0, got {nu}")
    if n == 2:
        if nu == 0:
            raw = [CaloricPolynomial.constant(2, 1)]
        else:
            raw = list(_complex_power_parts(2, nu))
    elif n == 3:
        raw = []
        for m in range(nu + 1):
            legendre = _legendre_factor(nu, m)
            re, im = _complex_power_parts(3, m)
            raw.append(legendre * re)
            if m:
                raw.append(legendre * im)
    else:
        raise UnsupportedDimensionError(f"Spherical harmonics implemented for n in {{2, 3}}, got n={n}")

    gram = np.array([[sphere_inner(p, q) for q in raw] for p in raw])
    diag = np.sqrt(np.diag(gram))
    off = np.abs(gram / np.outer(diag, diag) - np.eye(len(raw)))
    if off.max() > ORTHOGONALITY_TOLERANCE:
        raise CaloricIdentityError(f"Degree-{nu} harmonics in n={n} are not orthogonal (max {off.max():.2e})")
    harmonics = []
    for s, (poly, norm) in enumerate(zip(raw, diag), start=1):
        _check_harmonic(poly, nu, f"h_{nu}^({s})")
        harmonics.append(SphericalHarmonic(n, nu, s, poly.with_scale(1.0 / norm)))
    return tuple(harmonics)


def spherical_harmonics(n: int, nu: int) -> List[SphericalHarmonic]:
    """
    Real solid harmonics of degree ν, orthonormal in L² of the unit sphere.

    n = 2: 1/√(2π) for ν = 0, else Re and Im of (x_1 + i x_2)^ν over √π.
    n = 3: 2ν+1 harmonics ordered C_0, C_1, S_1, ..., C_ν, S_ν.
    """
    return list(_harmonics(n, nu))


def heat_coefficient(N: int, nu: int, n: int, j: int) -> Fraction:
    """Closed form of c_j: (2N)!! (n+2N−2+2ν)!! / (j! (2N−2j)!! (n+2N−2j−2+2ν)!!)."""

    def double_factorial(m: int) -> int:
        return 1 if m <= 0 else m * double_factorial(m - 2)

    return Fraction(double_factorial(2 * N) * double_factorial(n + 2 * N - 2 + 2 * nu),
                    factorial(j) * double_factorial(2 * N - 2 * j) * double_factorial(n + 2 * N - 2 * j - 2 + 2 * nu))


@lru_cache(maxsize=None)
def heat_polynomial(N: int, nu: int, s: int, n: int, axis: Optional[int] = None) -> HeatPolynomial:
    """
    Heat polynomial H^{(s)}_{N,ν} = Σ_j c_j t^j |x|^{2N−2j} h_ν^{(s)}, caloric in R^n × R.

    c_0 = 1, c_j = c_{j−1}(2N−2j+2)(n+2N−2j+2ν)/j. The labels s and axis are 1-based.
    With `axis` = i (ν = 0, N >= 1) the axis variant Σ_j t^j x_i^{2N−2j}(2N)!/(j!(2N−2j)!)
    is returned instead.
    """
    if N < 0 or nu < 0:
        raise PreconditionError(f"Heat polynomial needs N, nu >= 0, got ({N}, {nu})")
    if axis is not None:
        if nu != 0 or N < 1 or not 1 <= axis <= n:
            raise PreconditionError(f"Axis variant needs nu = 0, N >= 1 and 1 <= axis <= n, got ({N}, {nu}, {axis})")
        terms = {}
        for j in range(N + 1):
            key = [0] * (n + 1)
            key[axis - 1] = 2 * N - 2 * j
            key[-1] = j
            terms[tuple(key)] = Fraction(factorial(2 * N), factorial(j) * factorial(2 * N - 2 * j))
        poly = CaloricPolynomial(n, terms)
        s = 1
    else:
        if nu == 0 and N >= 1:
            raise PreconditionError("For nu = 0 and N >= 1 request an axis variant")
        harmonics = spherical_harmonics(n, nu)
        if not 1 <= s <= len(harmonics):
            raise PreconditionError(f"Harmonic index s={s} out of range 1..{len(harmonics)}")
        harmonic = harmonics[s - 1].polynomial
        base = harmonic.with_scale(1.0)
        r2 = sum((CaloricPolynomial.variable(n, i) ** 2 for i in range(n)), CaloricPolynomial.zero(n))
        t = CaloricPolynomial.time(n)
        c = Fraction(1)
        poly = base * r2 ** N
        for j in range(1, N + 1):
            c = c * (2 * N - 2 * j + 2) * (n + 2 * N - 2 * j + 2 * nu) / j
            poly = poly + t ** j * r2 ** (N - j) * base * c
        poly = poly.with_scale(harmonic.scale)
    if not poly.heat_residual().is_zero():
        raise CaloricIdentityError(f"H(N={N}, nu={nu}, s={s}, axis={axis}) is not caloric")
    return HeatPolynomial(poly, N, nu, s, axis)


def heat_basis(n: int, max_degree: int, axes: Sequence[int] = (1,)) -> List[HeatPolynomial]:
    """
    Heat polynomials with spatial degree 2N+ν <= max_degree.

    Ordered lexicographically in (ν, s, N); axis variants for the given axes appended.
    """
    basis = []
    for nu in range(max_degree + 1):
        for s in range(1, harmonic_count(n, nu) + 1):
            for N in range((max_degree - nu) // 2 + 1):
                if nu == 0 and N >= 1:
                    continue
                basis.append(heat_polynomial(N, nu, s, n))
    for axis in axes:
        for N in range(1, max_degree // 2 + 1):
            basis.append(heat_polynomial(N, 0, 1, n, axis=axis))
    return basis


@dataclass(frozen=True, eq=False)
class GramReport:
    """Space-time Gram matrix of heat polynomials with block diagnostics."""
    matrix: np.ndarray
    labels: List[str]
    off_block_max: float
    axis_cross_max: float
    order: int


def double_orthogonality_gram(elements: Sequence[HeatPolynomial], R: float, T: float, order: int) -> GramReport:
    """
    Gram matrix ∫_0^T ∫_{B(0,R)} H_a H_b dx dt.

    off_block_max covers pairs from different (ν, s) blocks; pairs involving an
    axis variant are measured separately in axis_cross_max.
    """
    if not elements:
        raise PreconditionError("Gram matrix needs at least one element")
    n = elements[0].dim
    if any(e.dim != n for e in elements):
        raise PreconditionError("All Gram elements must share the dimension")
    rule = volume_rule(make_ball(np.zeros(n), R), order)
    times, time_weights = gauss_legendre(order, 0.0, T)
    x = rule.nodes[:, None, :]
    t = times[None, :]
    weights = rule.weights[:, None] * time_weights[None, :]
    values = np.stack([np.asarray(e.evaluate(x, t)) for e in elements])
    gram = np.einsum("axt,bxt,xt->ab", values, values, weights)

    off_block, axis_cross = 0.0, 0.0
    for a, ea in enumerate(elements):
        for b in range(a + 1, len(elements)):
            eb = elements[b]
            if ea.block == eb.block:
                continue
            if ea.axis is None and eb.axis is None:
                off_block = max(off_block, abs(gram[a, b]))
            else:
                axis_cross = max(axis_cross, abs(gram[a, b]))
    logger.debug(f"Gram order {order}: off-block {off_block:.3e}, axis cross {axis_cross:.3e}")
    return GramReport(gram, [e.label for e in elements], off_block, axis_cross, order)
