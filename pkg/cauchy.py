#!/usr/bin/env python3
"""
Reconstruction of a solution from lateral Cauchy data on one face.

Given u1 = u and u2 = σu on Γ_T (a face of the box) and f = L u in Ω_T, the
potential sum

    P = G_Ω(f) + V_Γ(u2) + W_Γ(u1)

is evaluated at collocation nodes in the mirrored box Ω⁺_T. A caloric
extension F is fitted there (Tikhonov-regularised least squares in a basis of
polynomial solutions of L F = 0), and inside the cylinder the candidate
solution is U = P − F.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from artifacts import write_csv, write_json
from caloric import PolynomialField, caloric_monomial, heat_basis
from errors import CaloricIdentityError, DomainError, IllConditionedError, PreconditionError
from geometry import BoundaryPatch, BoxBase, CylinderDomain, gauss_legendre, mirror_box, tensor_product
from illposed import FamilyField, IllPosedFamily, family_data
from kernels import HEAT_COEFFICIENTS, LameCoefficients, apply_stress, check_parabolicity
from potentials import Density, PotentialEngine, QuadratureSettings

logger = logging.getLogger(__name__)

BASIS_FAMILIES = ("heat", "monomial", "both")
DEFAULT_ALPHAS = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10)
# Relative singular value below which an unregularised fit counts as rank deficient
RANK_TOLERANCE = 1e-13
INTERIOR_MARGIN = 0.25
INTERIOR_TIMES = (0.5, 0.75, 1.0)


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CauchyData:
    """Source f on Ω_T, value u1 and outward stress u2 on the face Γ_T."""
    domain: CylinderDomain
    patch: BoundaryPatch
    f: Density
    u1: Density
    u2: Density
    label: str = "data"

    @classmethod
    def from_field(cls, solution: Any, domain: CylinderDomain, patch: BoundaryPatch,
                   coeffs: LameCoefficients, label: str = "field") -> "CauchyData":
        """Restrictions of a known field (value/jacobian/source evaluators)."""
        if getattr(solution, "source_free", False):
            f = Density.zero("volume", domain.dim)
        else:
            f = Density.from_field("volume", solution)
        return cls(domain, patch, f, Density.from_field("value", solution),
                   Density.traction(solution, patch, coeffs), label)

    @classmethod
    def zero(cls, domain: CylinderDomain, patch: BoundaryPatch) -> "CauchyData":
        n = domain.dim
        return cls(domain, patch, Density.zero("volume", n), Density.zero("value", n),
                   Density.zero("stress", n), "zero")

    @property
    def is_zero(self) -> bool:
        return self.f.is_zero and self.u1.is_zero and self.u2.is_zero

    def scaled(self, factor: float) -> "CauchyData":
        return CauchyData(self.domain, self.patch, self.f * factor, self.u1 * factor, self.u2 * factor,
                          f"{factor!r}*{self.label}")

    def __add__(self, other: "CauchyData") -> "CauchyData":
        if other.domain != self.domain or other.patch != self.patch:
            raise PreconditionError("Cauchy data can only be added on the same face")
        return CauchyData(self.domain, self.patch, self.f + other.f, self.u1 + other.u1, self.u2 + other.u2,
                          f"{self.label}+{other.label}")


# ---------------------------------------------------------------------------
# Basis of polynomial solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BasisElement:
    """A polynomial solution translated to (center, t0) and rescaled parabolically by `length`."""
    field: PolynomialField
    label: str
    center: np.ndarray
    t0: float
    length: float

    def _local(self, x, t):
        y = (np.asarray(x, dtype=float) - self.center) / self.length
        s = (np.asarray(t, dtype=float) - self.t0) / self.length ** 2
        return y, s

    def value(self, x, t) -> np.ndarray:
        return self.field.value(*self._local(x, t))

    def jacobian(self, x, t) -> np.ndarray:
        return self.field.jacobian(*self._local(x, t)) / self.length


def _check_face(domain: CylinderDomain, patch: BoundaryPatch):
    if not (domain.is_box and patch.is_face):
        raise PreconditionError("Reconstruction needs a box cylinder and one of its faces as Γ")
    if patch.parent != domain:
        raise PreconditionError("Patch does not belong to the domain")


def extended_box(domain: CylinderDomain, patch: BoundaryPatch) -> BoxBase:
    """Bounding box of D = Ω ∪ Γ ∪ Ω⁺ with Ω⁺ the mirror image of Ω across Γ."""
    _check_face(domain, patch)
    mirrored = mirror_box(domain.base, patch.face)
    lower = np.minimum(domain.base.lower, mirrored.lower)
    upper = np.maximum(domain.base.upper, mirrored.upper)
    return BoxBase(tuple((float(a), float(b)) for a, b in zip(lower, upper)))


def _multi_indices(n: int, max_degree: int) -> List[Tuple[int, ...]]:
    indices = [a for a in itertools.product(range(max_degree + 1), repeat=n) if sum(a) <= max_degree]
    return sorted(indices, key=lambda a: (sum(a), tuple(-e for e in a)))


def build_basis(domain: CylinderDomain, patch: BoundaryPatch, coeffs: LameCoefficients,
                max_degree: int = 8, family: Optional[str] = None) -> List[BasisElement]:
    """
    Polynomial solutions of L F = 0 centred on D_T.

    'heat' uses heat polynomials times e_i (heat case only, time scaled by μ),
    'monomial' the caloric solutions exp(t𝓛)(x^α e_i), 'both' their union.
    """
    check_parabolicity(coeffs, domain.dim)
    if max_degree < 0:
        raise PreconditionError(f"Basis degree must be >= 0, got {max_degree}")
    family = family or ("heat" if coeffs.is_heat else "monomial")
    if family not in BASIS_FAMILIES:
        raise PreconditionError(f"Unknown basis family {family!r}; choose from {BASIS_FAMILIES}")
    if family in ("heat", "both") and not coeffs.is_heat:
        raise PreconditionError("Heat-polynomial basis needs the heat case λ = −μ; use 'monomial'")

    n = domain.dim
    box = extended_box(domain, patch)
    center = box.center
    length = float(np.max(box.widths)) / 2.0
    t0 = domain.T / 2.0
    mu, _ = coeffs.exact()

    fields: List[Tuple[PolynomialField, str]] = []
    if family in ("heat", "both"):
        for h in heat_basis(n, max_degree):
            scaled = h.scale_time(mu)
            for i in range(n):
                fields.append((PolynomialField.unit(n, i, scaled), f"{h.label}e{i + 1}"))
    if family in ("monomial", "both"):
        for alpha in _multi_indices(n, max_degree):
            for i in range(n):
                fields.append((caloric_monomial(alpha, i, coeffs), f"M[{','.join(map(str, alpha))}]e{i + 1}"))

    for poly_field, label in fields:
        if not poly_field.lame_operator(coeffs).is_zero():
            raise CaloricIdentityError(f"Basis element {label} is not a solution of L F = 0")
    logger.info(f"Built {family} basis with {len(fields)} elements through degree {max_degree}")
    return [BasisElement(f, label, center, t0, length) for f, label in fields]


# ---------------------------------------------------------------------------
# Collocation
# ---------------------------------------------------------------------------

def collocation_grid(domain: CylinderDomain, patch: BoundaryPatch, per_axis: int = 8, time_nodes: int = 8,
                     t_min_fraction: float = 0.05) -> List[Tuple[np.ndarray, float]]:
    """Gauss nodes in Ω⁺ × (t_min, T), t_min = t_min_fraction·T; node-major, time fastest."""
    _check_face(domain, patch)
    if per_axis < 1 or time_nodes < 1:
        raise PreconditionError("Collocation grid needs at least one node per axis")
    if not 0.0 <= t_min_fraction < 1.0:
        raise PreconditionError(f"t_min_fraction must lie in [0, 1), got {t_min_fraction}")
    mirrored = mirror_box(domain.base, patch.face)
    axes = [gauss_legendre(per_axis, lo, hi) for lo, hi in mirrored.bounds]
    points, _ = tensor_product([a[0] for a in axes], [a[1] for a in axes])
    times, _ = gauss_legendre(time_nodes, t_min_fraction * domain.T, domain.T)
    return [(p, float(t)) for p in points for t in times]


def interior_grid(domain: CylinderDomain, per_axis: int = 3, margin: float = INTERIOR_MARGIN,
                  time_fractions: Sequence[float] = INTERIOR_TIMES) -> List[Tuple[np.ndarray, float]]:
    """Uniform evaluation grid kept `margin` (fraction of each width) away from ∂Ω."""
    if not domain.is_box:
        raise PreconditionError("Interior grid is defined for box cylinders")
    if not 0.0 < margin < 0.5:
        raise PreconditionError(f"Margin must lie in (0, 0.5), got {margin}")
    base = domain.base
    axes = [np.linspace(lo + margin * (hi - lo), hi - margin * (hi - lo), per_axis) for lo, hi in base.bounds]
    points = np.array(list(itertools.product(*axes)))
    return [(p, float(frac * domain.T)) for p in points for frac in time_fractions]


# ---------------------------------------------------------------------------
# Tikhonov solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TikhonovFit:
    alpha: float
    coefficients: np.ndarray
    residual: float
    solution_norm: float


class TikhonovSolver:
    """
    min ‖A c − b‖² + α²‖c‖².

    With normalise_columns the columns of A are scaled to unit norm first, so
    the penalty becomes α²‖D c‖² with D the column norms. One SVD serves every
    α and right-hand side.
    """

    def __init__(self, design_matrix: np.ndarray, normalise_columns: bool = False):
        A = np.asarray(design_matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] < A.shape[1]:
            raise PreconditionError(f"Need at least as many rows as columns, got shape {A.shape}")
        self.normalise_columns = bool(normalise_columns)
        if self.normalise_columns:
            norms = np.linalg.norm(A, axis=0)
            self.column_norms = np.where(norms > 0, norms, 1.0)
        else:
            self.column_norms = np.ones(A.shape[1])
        self.matrix = A
        self._u, self._s, self._vt = linalg.svd(A / self.column_norms, full_matrices=False)

    @property
    def singular_values(self) -> np.ndarray:
        return self._s

    @property
    def condition(self) -> float:
        s_min = float(self._s[-1])
        return math.inf if s_min == 0.0 else float(self._s[0]) / s_min

    def solve(self, rhs: np.ndarray, alpha: float) -> TikhonovFit:
        b = np.asarray(rhs, dtype=float).ravel()
        if alpha < 0 or not math.isfinite(alpha):
            raise PreconditionError(f"Regularisation parameter must be finite and >= 0, got {alpha}")
        b_norm = float(np.linalg.norm(b))
        if b_norm == 0.0:
            return TikhonovFit(float(alpha), np.zeros(self.matrix.shape[1]), 0.0, 0.0)
        s = self._s
        if alpha == 0.0:
            if s[-1] <= RANK_TOLERANCE * s[0]:
                raise IllConditionedError(
                    f"Design matrix is rank deficient (condition {self.condition:.2e}); use alpha > 0",
                    achieved=self.condition)
            filters = 1.0 / s
        else:
            filters = s / (s * s + alpha * alpha)
        scaled = self._vt.T @ (filters * (self._u.T @ b))
        coefficients = scaled / self.column_norms
        residual = float(np.linalg.norm(self.matrix @ coefficients - b)) / b_norm
        return TikhonovFit(float(alpha), coefficients, residual, float(np.linalg.norm(scaled)))


def lcurve_corner(fits: Sequence[TikhonovFit]) -> int:
    """Index of maximum curvature of (log residual, log solution norm); fits ordered by α."""
    if len(fits) < 3:
        return int(np.argmin([f.residual for f in fits]))
    tiny = np.finfo(float).tiny
    x = np.log(np.maximum([f.residual for f in fits], tiny))
    y = np.log(np.maximum([f.solution_norm for f in fits], tiny))
    dx, dy = np.gradient(x), np.gradient(y)
    ddx, ddy = np.gradient(dx), np.gradient(dy)
    denominator = (dx * dx + dy * dy) ** 1.5
    curvature = np.where(denominator > 0, np.abs(dx * ddy - dy * ddx) / np.where(denominator > 0, denominator, 1.0),
                         0.0)
    return int(np.argmax(curvature))


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReconstructionConfig:
    max_degree: int = 8
    family: Optional[str] = None
    per_axis: int = 8
    time_nodes: int = 8
    t_min_fraction: float = 0.05
    alphas: Tuple[float, ...] = DEFAULT_ALPHAS
    settings: QuadratureSettings = field(default_factory=QuadratureSettings)
    normalise_columns: bool = False

    def __post_init__(self):
        alphas = tuple(float(a) for a in self.alphas)
        if not alphas:
            raise PreconditionError("At least one regularisation parameter is required")
        if any(a < 0 or not math.isfinite(a) for a in alphas):
            raise PreconditionError(f"Regularisation parameters must be finite and >= 0, got {alphas}")
        object.__setattr__(self, "alphas", tuple(sorted(alphas, reverse=True)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "max_degree": self.max_degree,
            "family": self.family,
            "per_axis": self.per_axis,
            "time_nodes": self.time_nodes,
            "t_min_fraction": self.t_min_fraction,
            "alphas": list(self.alphas),
            "settings": self.settings.to_dict(),
            "normalise_columns": self.normalise_columns,
        }


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Fits for every α of the sweep; `selected` indexes the one used for the field."""
    data: CauchyData
    fits: List[TikhonovFit]
    selected: int
    corner: int
    condition: float
    labels: List[str]
    reconstructor: Any = None

    @property
    def coefficients(self) -> np.ndarray:
        return self.fits[self.selected].coefficients

    @property
    def alpha(self) -> float:
        return self.fits[self.selected].alpha

    @property
    def fit_residual(self) -> float:
        return self.fits[self.selected].residual

    def with_alpha(self, alpha: float) -> "ReconstructionResult":
        for index, fit in enumerate(self.fits):
            if fit.alpha == alpha:
                return replace(self, selected=index)
        raise PreconditionError(f"alpha={alpha} is not part of the sweep")

    def field(self, x, t: float) -> np.ndarray:
        """U = G + V + W − F at a target in Ω_T."""
        return self.reconstructor.reconstruct(self, x, t)

    def __call__(self, x, t: float) -> np.ndarray:
        return self.field(x, t)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "data": self.data.label,
            "alpha": self.alpha,
            "fit_residual": self.fit_residual,
            "condition": self.condition,
            "lcurve_corner_alpha": self.fits[self.corner].alpha,
            "basis_size": len(self.labels),
            "sweep": [{"alpha": f.alpha, "residual": f.residual, "solution_norm": f.solution_norm}
                      for f in self.fits],
        }


@dataclass(frozen=True)
class ErrorReport:
    relative_l2: float
    max_abs: float
    reference_l2: float
    points: int


@dataclass(frozen=True)
class TraceRow:
    point: Tuple[float, ...]
    time: float
    value_error: float
    stress_error: float
    spread: float


@dataclass(frozen=True)
class ProbeRow:
    delta: float
    interior_sup: float
    fit_residual: float


@dataclass(frozen=True)
class UniquenessReport:
    rows: List[ProbeRow]

    @property
    def zero_sup(self) -> float:
        return next((r.interior_sup for r in self.rows if r.delta == 0.0), math.nan)

    def ratio(self, large: float, small: float) -> float:
        by_delta = {r.delta: r.interior_sup for r in self.rows}
        if large not in by_delta or small not in by_delta:
            raise PreconditionError(f"Probe did not run both δ={large} and δ={small}")
        return by_delta[large] / by_delta[small] if by_delta[small] > 0 else math.inf


@dataclass(frozen=True)
class AmplificationPoint:
    k: int
    data_norm: float
    relative_error: float
    fit_residual: float


class CauchyReconstructor:
    """Assemble, fit and evaluate reconstructions for one domain, face and basis."""

    def __init__(self, domain: CylinderDomain, patch: BoundaryPatch,
                 coeffs: LameCoefficients = HEAT_COEFFICIENTS, config: Optional[ReconstructionConfig] = None):
        _check_face(domain, patch)
        self.domain = domain
        self.patch = patch
        self.coeffs = coeffs
        self.config = config or ReconstructionConfig()
        self.engine = PotentialEngine(coeffs, self.config.settings)
        self.logger = logging.getLogger(__name__)
        self.basis = build_basis(domain, patch, coeffs, self.config.max_degree, self.config.family)
        self.nodes = collocation_grid(domain, patch, self.config.per_axis, self.config.time_nodes,
                                      self.config.t_min_fraction)
        rows = len(self.nodes) * domain.dim
        if rows < len(self.basis):
            raise PreconditionError(f"{rows} collocation rows for {len(self.basis)} basis elements; refine the grid")
        self._solver: Optional[TikhonovSolver] = None

    # -- pieces ----------------------------------------------------------------

    @property
    def solver(self) -> TikhonovSolver:
        if self._solver is None:
            self._solver = TikhonovSolver(self.design_matrix(self.nodes), self.config.normalise_columns)
            self.logger.info(f"Design matrix {self._solver.matrix.shape}, condition {self._solver.condition:.3e}")
        return self._solver

    def design_matrix(self, nodes: Sequence[Tuple[Any, float]]) -> np.ndarray:
        """A[(node, component), element], rows node-major."""
        points = np.array([np.asarray(x, dtype=float) for x, _ in nodes])
        times = np.array([t for _, t in nodes], dtype=float)
        columns = [element.value(points, times).ravel() for element in self.basis]
        return np.stack(columns, axis=1)

    def extension(self, coefficients: np.ndarray, x, t: float, derivative: bool = False) -> np.ndarray:
        """F or its Jacobian at one target."""
        x = np.asarray(x, dtype=float)[None, :]
        t = np.array([t], dtype=float)
        n = self.domain.dim
        total = np.zeros((n, n) if derivative else (n,))
        for c, element in zip(coefficients, self.basis):
            if c:
                total += c * (element.jacobian(x, t)[0] if derivative else element.value(x, t)[0])
        return total

    def potential_sum(self, data: CauchyData, x, t: float, derivative: bool = False) -> np.ndarray:
        """G_Ω(f) + V_Γ(u2) + W_Γ(u1) at one target off Γ."""
        e = self.engine
        total = np.zeros((self.domain.dim,) * (2 if derivative else 1))
        if data.is_zero:
            return total
        if not data.f.is_zero:
            total += e.volume_potential(data.f, self.domain, x, t, 0.0, derivative)
        if not data.u2.is_zero:
            total += e.single_layer(data.u2, self.patch, x, t, 0.0, derivative=derivative)
        if not data.u1.is_zero:
            total += e.double_layer(data.u1, self.patch, x, t, 0.0, derivative=derivative)
        return total

    def assemble_target(self, data: CauchyData, nodes: Optional[Sequence[Tuple[Any, float]]] = None) -> np.ndarray:
        """Stacked potential sums at the nodes (collocation grid by default)."""
        nodes = self.nodes if nodes is None else list(nodes)
        if data.is_zero:
            return np.zeros(len(nodes) * self.domain.dim)
        values = self.engine.evaluate_many(lambda x, t: self.potential_sum(data, x, t), nodes)
        self.logger.debug(f"Assembled target for {data.label} at {len(nodes)} nodes")
        return values.reshape(-1)

    # -- fit and evaluate -------------------------------------------------------

    def fit(self, data: CauchyData, alphas: Optional[Sequence[float]] = None) -> ReconstructionResult:
        """Fit F for every α; the L-curve corner is selected."""
        alphas = tuple(sorted((float(a) for a in alphas), reverse=True)) if alphas else self.config.alphas
        b = self.assemble_target(data)
        solver = self.solver
        fits = [solver.solve(b, alpha) for alpha in alphas]
        corner = lcurve_corner(fits)
        for fit in fits:
            self.logger.info(f"alpha={fit.alpha:.1e}: residual {fit.residual:.3e}, norm {fit.solution_norm:.3e}")
        return ReconstructionResult(data, fits, corner, corner, solver.condition,
                                    [e.label for e in self.basis], self)

    def _check_target(self, x: np.ndarray, t: float):
        if not (self.domain.base.contains(x) and 0.0 < t <= self.domain.T):
            raise DomainError(f"Reconstruction target ({x.tolist()}, t={t}) is outside Ω_T")

    def reconstruct(self, result: ReconstructionResult, x, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        self._check_target(x, t)
        return self.potential_sum(result.data, x, t) - self.extension(result.coefficients, x, t)

    def reconstruct_many(self, result: ReconstructionResult, targets: Sequence[Tuple[Any, float]]) -> np.ndarray:
        targets = list(targets)
        for x, t in targets:
            self._check_target(np.asarray(x, dtype=float).ravel(), t)
        return self.engine.evaluate_many(lambda x, t: self.reconstruct(result, x, t), targets)

    def reconstruction_error(self, result: ReconstructionResult, reference: Any,
                             targets: Optional[Sequence[Tuple[Any, float]]] = None) -> ErrorReport:
        """Relative l² error against reference.value over the interior grid (absolute if the reference is 0)."""
        targets = interior_grid(self.domain) if targets is None else list(targets)
        return _error_report(self.reconstruct_many(result, targets), reference, targets)

    def sweep_errors(self, result: ReconstructionResult, reference: Any,
                     targets: Optional[Sequence[Tuple[Any, float]]] = None) -> List[ErrorReport]:
        """reconstruction_error for every α of the sweep; the potential sums are evaluated once."""
        targets = interior_grid(self.domain) if targets is None else list(targets)
        for x, t in targets:
            self._check_target(np.asarray(x, dtype=float).ravel(), t)
        sums = self.engine.evaluate_many(lambda x, t: self.potential_sum(result.data, x, t), targets)
        reports = []
        for fit in result.fits:
            extension = np.array([self.extension(fit.coefficients, x, t) for x, t in targets])
            reports.append(_error_report(sums - extension, reference, targets))
        return reports

    def trace_report(self, result: ReconstructionResult, points: Sequence[Any], t: float) -> List[TraceRow]:
        """Inside traces of U and σU on Γ at time t against u1 and u2."""
        data = result.data
        rows = []
        for point in points:
            x0 = self.patch.foot_point(np.asarray(point, dtype=float))
            normal = self.patch.normal_at(x0)[0]
            value = self.engine.one_sided(
                lambda p: self.potential_sum(data, p, t) - self.extension(result.coefficients, p, t),
                x0, normal, "-")
            stress = self.engine.one_sided(
                lambda p: apply_stress(self.potential_sum(data, p, t, derivative=True)
                                       - self.extension(result.coefficients, p, t, derivative=True),
                                       normal, self.coeffs),
                x0, normal, "-")
            u1 = data.u1(x0[None, :], np.array([t]))[0]
            u2 = data.u2(x0[None, :], np.array([t]))[0]
            rows.append(TraceRow(tuple(float(v) for v in x0), float(t),
                                 float(np.max(np.abs(value.value - u1))), float(np.max(np.abs(stress.value - u2))),
                                 max(value.spread, stress.spread)))
        return rows

    def uniqueness_probe(self, perturbation: CauchyData, deltas: Sequence[float] = (0.0, 1e-3, 1e-2),
                         alpha: Optional[float] = None,
                         targets: Optional[Sequence[Tuple[Any, float]]] = None) -> UniquenessReport:
        """Interior sup of the reconstruction from δ·perturbation for each δ, at one fixed α."""
        alpha = self.config.alphas[len(self.config.alphas) // 2] if alpha is None else float(alpha)
        targets = interior_grid(self.domain) if targets is None else list(targets)
        rows = []
        for delta in deltas:
            data = perturbation.scaled(delta) if delta else CauchyData.zero(self.domain, self.patch)
            result = self.fit(data, [alpha])
            values = self.reconstruct_many(result, targets)
            sup = float(np.max(np.abs(values))) if values.size else 0.0
            rows.append(ProbeRow(float(delta), sup, result.fit_residual))
            self.logger.info(f"delta={delta:.1e}: interior sup {sup:.3e}")
        return UniquenessReport(rows)

    def family_amplification(self, ks: Sequence[int], N: int, alpha: Optional[float] = None) -> List[AmplificationPoint]:
        """Reconstruction error for the exponential family as k grows, at fixed basis and α."""
        n = self.domain.dim
        unit = tuple((0.0, 1.0) for _ in range(n))
        if self.domain.base.bounds != unit or self.patch.face != 2 * (n - 1):
            raise PreconditionError("Family reconstruction needs the unit cube with Γ = {x_n = 0}")
        rows = []
        for k in ks:
            fam = IllPosedFamily(int(k), N, self.coeffs, self.domain.T, n)
            solution = FamilyField(fam)
            data = CauchyData.from_field(solution, self.domain, self.patch, self.coeffs, label=f"family k={k}")
            result = self.fit(data, None if alpha is None else [alpha])
            error = self.reconstruction_error(result, solution)
            data_norm = max(family_data(fam).sup_norms().values())
            rows.append(AmplificationPoint(fam.k, data_norm, error.relative_l2, result.fit_residual))
            self.logger.info(f"k={fam.k}: relative error {error.relative_l2:.3e}")
        return rows


def _error_report(values: np.ndarray, reference: Any, targets: Sequence[Tuple[Any, float]]) -> ErrorReport:
    points = np.array([np.asarray(x, dtype=float) for x, _ in targets])
    times = np.array([t for _, t in targets], dtype=float)
    expected = np.asarray(reference.value(points, times), dtype=float)
    difference = float(np.linalg.norm(values - expected))
    reference_l2 = float(np.linalg.norm(expected))
    relative = difference / reference_l2 if reference_l2 > 0 else difference
    return ErrorReport(relative, float(np.max(np.abs(values - expected))), reference_l2, len(targets))


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def write_reconstruction_report(path, reconstructor: CauchyReconstructor, result: ReconstructionResult,
                                extra: Optional[Dict[str, Any]] = None):
    document = {
        "domain": reconstructor.domain.to_dict(),
        "face": reconstructor.patch.face,
        "coeffs": reconstructor.coeffs.to_dict(),
        "config": reconstructor.config.to_dict(),
        "result": result.to_dict(),
    }
    document.update(extra or {})
    return write_json(path, document)


def write_sweep_csv(path, result: ReconstructionResult, errors: Optional[Sequence[float]] = None):
    errors = list(errors) if errors is not None else [math.nan] * len(result.fits)
    return write_csv(path, ["alpha", "residual", "solution_norm", "relative_error", "lcurve_corner"],
                     ([f.alpha, f.residual, f.solution_norm, err, i == result.corner]
                      for i, (f, err) in enumerate(zip(result.fits, errors))))
