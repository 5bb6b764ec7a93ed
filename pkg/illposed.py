#!/usr/bin/env python3
"""
The explicit family showing that the lateral Cauchy problem is ill-posed.

    u_n(x, t) = exp(k²(2μ+λ)(t − r) + k x_n) / k^N,   u_1 = ... = u_{n−1} = 0

solves L u = 0 in the unit cube. Its data on the face {x_n = 0} decay like
k^{1−N} while the solution inside grows like e^{k x_n}/k^N. The face data use
the normal e_n (stress u2 = (2μ+λ)∂_n u_n) and only the finite-horizon case
r = T is built.
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np
import sympy

from artifacts import write_csv
from errors import PreconditionError
from kernels import HEAT_COEFFICIENTS, LameCoefficients, apply_stress, check_parabolicity

logger = logging.getLogger(__name__)

# Sample points per axis for the discrete sup norms
DEFAULT_GRID = 32
COMPATIBILITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class IllPosedFamily:
    """One member (k, N, r) of the exponential family in dimension n."""
    k: int
    N: int
    coeffs: LameCoefficients = HEAT_COEFFICIENTS
    r: float = 1.0
    n: int = 2

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise PreconditionError(f"Frequency k must be a positive integer, got {self.k}")
        if int(self.N) != self.N or self.N < 1:
            raise PreconditionError(f"Damping power N must be a positive integer, got {self.N}")
        if not (math.isfinite(self.r) and self.r > 0):
            raise PreconditionError(f"Time shift r must be positive, got {self.r}")
        if self.n < 2:
            raise PreconditionError(f"Family needs n >= 2, got n={self.n}")
        check_parabolicity(self.coeffs, self.n)

    @property
    def speed(self) -> float:
        return self.coeffs.longitudinal

    def _amplitude(self, xn, t) -> np.ndarray:
        exponent = self.k ** 2 * self.speed * (np.asarray(t, dtype=float) - self.r) + self.k * np.asarray(xn, dtype=float)
        return np.exp(exponent) / float(self.k) ** self.N

    def symbolic_residual(self) -> List[Any]:
        """L u for the exponential ansatz, simplified with sympy; every entry must be 0."""
        xs = sympy.symbols(f"x1:{self.n + 1}", real=True)
        t = sympy.Symbol("t", real=True)
        mu_f, lam_f = self.coeffs.exact()
        mu = sympy.Rational(mu_f.numerator, mu_f.denominator)
        lam = sympy.Rational(lam_f.numerator, lam_f.denominator)
        r = sympy.nsimplify(self.r)
        k = sympy.Integer(self.k)
        u = [sympy.Integer(0)] * (self.n - 1) + [sympy.exp(k ** 2 * (2 * mu + lam) * (t - r) + k * xs[-1]) / k ** self.N]
        div = sum(sympy.diff(u[i], xs[i]) for i in range(self.n))
        residual = []
        for i in range(self.n):
            laplacian = sum(sympy.diff(u[i], x, 2) for x in xs)
            residual.append(sympy.simplify(sympy.diff(u[i], t) - mu * laplacian - (mu + lam) * sympy.diff(div, xs[i])))
        return residual

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "N": self.N, "r": self.r, "n": self.n, "coeffs": self.coeffs.to_dict()}


class FamilyField:
    """Value, Jacobian and (zero) source of a family member, batched over points."""

    def __init__(self, family: IllPosedFamily):
        self.family = family
        self.source_free = True

    @property
    def dim(self) -> int:
        return self.family.n

    def value(self, x, t) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast_shapes(x.shape[:-1], np.shape(t)) + (self.dim,))
        out[..., -1] = self.family._amplitude(x[..., -1], t)
        return out

    def jacobian(self, x, t) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(np.broadcast_shapes(x.shape[:-1], np.shape(t)) + (self.dim, self.dim))
        out[..., -1, -1] = self.family.k * self.family._amplitude(x[..., -1], t)
        return out

    def source(self, x, t) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.zeros(np.broadcast_shapes(x.shape[:-1], np.shape(t)) + (self.dim,))


def family_solution(fam: IllPosedFamily, x, t) -> np.ndarray:
    """u(x, t) of the family member; components 1..n−1 vanish."""
    return FamilyField(fam).value(x, t)


@dataclass(frozen=True)
class FamilyData:
    """Cauchy data of a family member on {x_n = 0} with normal e_n, plus the initial datum u0."""
    family: IllPosedFamily

    def _face(self, points) -> np.ndarray:
        points = np.array(points, dtype=float)
        points[..., -1] = 0.0
        return points

    def u1(self, points, times) -> np.ndarray:
        return FamilyField(self.family).value(self._face(points), times)

    def u2(self, points, times) -> np.ndarray:
        field = FamilyField(self.family)
        face = self._face(points)
        normal = np.zeros(self.family.n)
        normal[-1] = 1.0
        return apply_stress(field.jacobian(face, times), normal, self.family.coeffs)

    def u0(self, points) -> np.ndarray:
        return FamilyField(self.family).value(points, 0.0)

    def f(self, points, times) -> np.ndarray:
        return FamilyField(self.family).source(points, times)

    def compatibility(self, points) -> Tuple[float, float]:
        """max |u0 − u1(·, 0)| and max |σu0 − u2(·, 0)| at face points."""
        face = self._face(np.atleast_2d(points))
        field = FamilyField(self.family)
        normal = np.zeros(self.family.n)
        normal[-1] = 1.0
        zero = np.zeros(face.shape[0])
        first = np.max(np.abs(self.u0(face) - self.u1(face, zero)))
        stress0 = apply_stress(field.jacobian(face, 0.0), normal, self.family.coeffs)
        second = np.max(np.abs(stress0 - self.u2(face, zero)))
        return float(first), float(second)

    def sup_norms(self, grid: int = DEFAULT_GRID) -> Dict[str, float]:
        """Discrete sups of |u1|, |u2| over Γ_T and |u0| over the cube; grids include t = T and x_n = 1."""
        if grid < 2:
            raise PreconditionError(f"Sup-norm grid needs >= 2 points, got {grid}")
        fam = self.family
        times = np.linspace(0.0, fam.r, grid)
        heights = np.linspace(0.0, 1.0, grid)
        face = np.zeros((grid, fam.n))
        cube = np.zeros((grid, fam.n))
        cube[:, -1] = heights
        return {
            "u1": float(np.max(np.abs(self.u1(face, times)))),
            "u2": float(np.max(np.abs(self.u2(face, times)))),
            "u0": float(np.max(np.abs(self.u0(cube)))),
        }


def family_data(fam: IllPosedFamily) -> FamilyData:
    return FamilyData(fam)


@dataclass(frozen=True)
class AmplificationRow:
    k: int
    data_norm: float
    solution_sup: float
    ratio: float


def amplification_table(ks: Iterable[int], N: int, coeffs: LameCoefficients = HEAT_COEFFICIENTS,
                        xn: float = 1.0, T: float = 1.0, n: int = 2, grid: int = DEFAULT_GRID) -> List[AmplificationRow]:
    """Data norm against e^{k x_n}/k^N for each k; x_n must lie in (0, 1] unless it is the face itself."""
    if not 0.0 <= xn <= 1.0:
        raise PreconditionError(f"Evaluation height must lie in [0, 1], got {xn}")
    rows = []
    for k in ks:
        fam = IllPosedFamily(int(k), N, coeffs, T, n)
        norms = family_data(fam).sup_norms(grid)
        data_norm = max(norms.values())
        solution_sup = math.exp(fam.k * xn) / float(fam.k) ** N
        rows.append(AmplificationRow(fam.k, data_norm, solution_sup, solution_sup / data_norm))
        logger.debug(f"k={fam.k}: data {data_norm:.3e}, solution {solution_sup:.3e}")
    return rows


def write_amplification_csv(path, rows: Sequence[AmplificationRow]):
    return write_csv(path, ["k", "data_norm", "solution_sup", "ratio"],
                     ([r.k, r.data_norm, r.solution_sup, r.ratio] for r in rows))
