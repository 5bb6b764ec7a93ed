#!/usr/bin/env python3
"""
Parabolic potentials of the Lamé operator.

    I h (x,t) = ∫_Ω Φ(x−y, t−T1) h(y) dy                         (Poisson integral)
    G f (x,t) = ∫_{T1}^t ∫_Ω Φ(x−y, t−τ) f(y,τ) dy dτ            (volume potential)
    V v (x,t) = ∫_{T1}^t ∫_S Φ(x−y, t−τ) v(y,τ) ds(y) dτ         (single layer)
    W w (x,t) = −∫_{T1}^t ∫_S [σ_y Φ(x−y, t−τ)]^T w(y,τ) ds(y) dτ (double layer)

Φ is symmetric, so Φ^T = Φ. Box bases and box faces are integrated with rules
graded towards the target (dyadic panels in the lag s = t − τ, spatial panels
doubling away from the closest point); balls and caps use the plain rules.
One-sided traces on the integration set come from offset evaluation plus
polynomial extrapolation in the offset.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from artifacts import write_csv
from errors import AmbiguousTraceError, DensityError, ExtrapolationError, PreconditionError
from geometry import (TIME_MODE_PLAIN, TIME_MODE_SQRT, BoundaryPatch, BoxBase, CylinderDomain, QuadratureRule,
                      graded_box_rule, graded_time_levels, surface_rule, time_rule, volume_rule)
from kernels import (HEAT_COEFFICIENTS, LameCoefficients, apply_stress, check_parabolicity, lame_kernel_jet,
                     traction_gradient, traction_of_columns)

logger = logging.getLogger(__name__)

# Kernel pairs evaluated per vectorised chunk
MAX_PAIRS = 200_000
# Levels with d²/(4 c s) above this contribute below e^-40 and are skipped
EXPONENT_CUTOFF = 40.0
# Spatial window radius in units of the kernel width √(c s)
WINDOW_WIDTHS = 12.0

DENSITY_KINDS = ("volume", "value", "stress", "initial")
POTENTIAL_KINDS = ("I", "G", "V", "W")
JUMP_KINDS = ("W", "sigmaV", "sigmaW")
SIDES = ("-", "+")

DEFAULT_OFFSETS = tuple(0.1 * 2.0 ** -k for k in range(8))


def thread_limit() -> int:
    """Worker cap from PARLAME_THREADS (default: CPU count)."""
    raw = os.getenv("PARLAME_THREADS")
    if raw is None or raw.strip() == "":
        return max(1, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        raise PreconditionError(f"PARLAME_THREADS must be an integer, got {raw!r}")


@dataclass(frozen=True)
class QuadratureSettings:
    """Orders and tolerances shared by every potential evaluation."""
    space_order: int = 12
    time_order: int = 16
    panel_order: int = 8
    adaptive: bool = True
    time_floor: float = 1e-9
    near_tolerance: float = 1e-8
    offsets: Tuple[float, ...] = DEFAULT_OFFSETS
    extrapolation_degree: int = 2
    max_spread: float = 5e-2

    def __post_init__(self):
        for name in ("space_order", "time_order", "panel_order"):
            if int(getattr(self, name)) < 1:
                raise PreconditionError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 < self.time_floor < 1:
            raise PreconditionError(f"time_floor must lie in (0, 1), got {self.time_floor}")
        offsets = tuple(float(e) for e in self.offsets)
        if any(e <= 0 for e in offsets) or any(a <= b for a, b in zip(offsets, offsets[1:])):
            raise PreconditionError("Offsets must be positive and strictly decreasing")
        if not 1 <= self.extrapolation_degree < len(offsets) - 1:
            raise PreconditionError(
                f"Extrapolation degree {self.extrapolation_degree} needs more than {self.extrapolation_degree + 1} offsets")
        object.__setattr__(self, "offsets", offsets)

    def to_dict(self) -> Dict[str, Any]:
        doc = asdict(self)
        doc["offsets"] = list(self.offsets)
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "QuadratureSettings":
        defaults = cls()
        return cls(
            space_order=int(doc.get("space_order", defaults.space_order)),
            time_order=int(doc.get("time_order", defaults.time_order)),
            panel_order=int(doc.get("panel_order", defaults.panel_order)),
            adaptive=bool(doc.get("adaptive", defaults.adaptive)),
            time_floor=float(doc.get("time_floor", defaults.time_floor)),
            near_tolerance=float(doc.get("near_tolerance", defaults.near_tolerance)),
            offsets=tuple(doc.get("offsets", defaults.offsets)),
            extrapolation_degree=int(doc.get("extrapolation_degree", defaults.extrapolation_degree)),
            max_spread=float(doc.get("max_spread", defaults.max_spread)),
        )


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------

Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class DensitySamples:
    """Density values at the nodes of one rule."""
    rule: QuadratureRule
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape[0] != self.rule.size:
            raise DensityError(f"{self.values.shape[0]} samples for a rule with {self.rule.size} nodes")


class Density:
    """
    Vector density given by an evaluator (points (m, n), times (m,)) -> (m, n).

    kind is one of 'volume' (f), 'value' (u1 / w), 'stress' (u2 / v) or
    'initial' (h, evaluated at the initial time).
    """

    def __init__(self, kind: str, dim: int, evaluator: Evaluator, label: str = ""):
        if kind not in DENSITY_KINDS:
            raise PreconditionError(f"Unknown density kind {kind!r}")
        self.kind = kind
        self.dim = int(dim)
        self.evaluator = evaluator
        self.label = label or kind
        self.is_zero = False

    def __call__(self, points, times) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        times = np.broadcast_to(np.asarray(times, dtype=float), (points.shape[0],))
        values = np.asarray(self.evaluator(points, times), dtype=float)
        if values.shape != (points.shape[0], self.dim):
            raise DensityError(f"Density {self.label} returned shape {values.shape}, "
                               f"expected {(points.shape[0], self.dim)}")
        if not np.all(np.isfinite(values)):
            raise DensityError(f"Density {self.label} produced non-finite values")
        return values

    def sample(self, rule: QuadratureRule) -> DensitySamples:
        """Samples at the nodes of a spatial or space-time rule (time is the last column)."""
        nodes = rule.nodes
        if nodes.shape[1] == self.dim + 1:
            points, times = nodes[:, :self.dim], nodes[:, self.dim]
        else:
            points, times = nodes, np.zeros(nodes.shape[0])
        return DensitySamples(rule, self(points, times))

    # -- construction ----------------------------------------------------------

    @classmethod
    def zero(cls, kind: str, dim: int) -> "Density":
        density = cls(kind, dim, lambda points, times: np.zeros((points.shape[0], dim)), label=f"zero {kind}")
        density.is_zero = True
        return density

    @classmethod
    def constant(cls, kind: str, value: Sequence[float]) -> "Density":
        value = np.asarray(value, dtype=float)
        return cls(kind, value.size, lambda points, times: np.tile(value, (points.shape[0], 1)),
                   label=f"constant {kind}")

    @classmethod
    def from_field(cls, kind: str, field: Any) -> "Density":
        """Values ('value', 'initial') or L u ('volume') of a field with value/jacobian/source."""
        if kind == "volume":
            return cls(kind, field.dim, field.source, label="source")
        if kind in ("value", "initial"):
            return cls(kind, field.dim, field.value, label=kind)
        raise PreconditionError(f"Use Density.traction for stress densities, got kind {kind!r}")

    @classmethod
    def traction(cls, field: Any, patch: BoundaryPatch, coeffs: LameCoefficients) -> "Density":
        """σu of a field on a patch, using the patch's outward normal."""

        def evaluate(points, times):
            return apply_stress(field.jacobian(points, times), patch.normal_at(points), coeffs)

        return cls("stress", field.dim, evaluate, label="traction")

    # -- linear combinations ---------------------------------------------------

    def __add__(self, other: "Density") -> "Density":
        if self.dim != other.dim:
            raise PreconditionError("Densities must share the dimension")
        if other.is_zero:
            return self
        if self.is_zero:
            return Density(self.kind, self.dim, other.evaluator, other.label)
        return Density(self.kind, self.dim, lambda p, t: self.evaluator(p, t) + other.evaluator(p, t),
                       label=f"{self.label}+{other.label}")

    def __mul__(self, factor: float) -> "Density":
        factor = float(factor)
        if self.is_zero or factor == 0.0:
            return Density.zero(self.kind, self.dim)
        return Density(self.kind, self.dim, lambda p, t: factor * np.asarray(self.evaluator(p, t)),
                       label=f"{factor!r}*{self.label}")

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# Extrapolated one-sided limits
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OneSidedLimit:
    value: np.ndarray
    spread: float
    side: str
    samples: List[Dict[str, Any]] = field(default_factory=list)


def richardson_limit(offsets: Sequence[float], samples: np.ndarray, degree: int,
                     max_spread: float) -> Tuple[np.ndarray, float]:
    """
    Constant term of a least-squares polynomial fit in ε.

    The spread between the degree and degree−1 fits is the error estimate; it
    must stay below max_spread·max(1, |limit|).
    """
    eps = np.asarray(offsets, dtype=float)
    samples = np.asarray(samples, dtype=float)
    flat = samples.reshape(len(eps), -1)
    if not np.all(np.isfinite(flat)):
        raise ExtrapolationError("Non-finite one-sided samples", achieved=math.inf)
    high = np.polynomial.polynomial.polyfit(eps, flat, degree)[0]
    low = np.polynomial.polynomial.polyfit(eps, flat, degree - 1)[0]
    spread = float(np.max(np.abs(high - low)))
    if not math.isfinite(spread) or spread > max_spread * max(1.0, float(np.max(np.abs(high)))):
        raise ExtrapolationError(f"Extrapolation spread {spread:.3e} exceeds {max_spread:.1e}", achieved=spread)
    return high.reshape(samples.shape[1:]), spread


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _Block:
    nodes: np.ndarray
    s: np.ndarray
    weights: np.ndarray
    normals: Optional[np.ndarray] = None


def _tensor_block(ys: np.ndarray, wy: np.ndarray, s: np.ndarray, ws: np.ndarray,
                  normals: Optional[np.ndarray] = None) -> _Block:
    ms, mt = len(wy), len(ws)
    return _Block(np.repeat(ys, mt, axis=0), np.tile(s, ms), np.repeat(wy, mt) * np.tile(ws, ms),
                  None if normals is None else np.repeat(normals, mt, axis=0))


Patches = Union[BoundaryPatch, Sequence[BoundaryPatch]]


def _as_patches(patches: Patches) -> List[BoundaryPatch]:
    if isinstance(patches, BoundaryPatch):
        return [patches]
    patches = list(patches)
    if not patches:
        raise PreconditionError("Layer potential needs at least one patch")
    return patches


class PotentialEngine:
    """Evaluates the four potentials for fixed Lamé coefficients and quadrature settings."""

    def __init__(self, coeffs: LameCoefficients = HEAT_COEFFICIENTS, settings: Optional[QuadratureSettings] = None):
        check_parabolicity(coeffs)
        self.coeffs = coeffs
        self.settings = settings or QuadratureSettings()
        self.logger = logging.getLogger(__name__)
        self._c_min = min(coeffs.speeds)
        self._c_max = max(coeffs.speeds)

    # -- rules -----------------------------------------------------------------

    def _window(self, s_lo: float, s_hi: float) -> Tuple[float, float]:
        # the innermost level starts at s = 0; grade it like its upper half
        s_lo = s_lo if s_lo > 0 else 0.5 * s_hi
        return math.sqrt(self._c_min * s_lo), WINDOW_WIDTHS * math.sqrt(self._c_max * s_hi)

    def _negligible(self, distance: float, s_hi: float) -> bool:
        return distance * distance / (4.0 * self._c_max * s_hi) > EXPONENT_CUTOFF

    def _initial_blocks(self, base, x: np.ndarray, t: float, T1: float) -> Iterator[_Block]:
        st = self.settings
        s = t - T1
        if isinstance(base, BoxBase) and st.adaptive:
            if self._negligible(base.distance(x), s):
                return
            scale, reach = self._window(s, s)
            ys, wy = graded_box_rule(base.bounds, np.clip(x, base.lower, base.upper), scale, st.panel_order, reach)
            if wy.size:
                yield _tensor_block(ys, wy, np.array([s]), np.array([1.0]))
        else:
            rule = volume_rule(base, st.space_order)
            yield _tensor_block(rule.nodes, rule.weights, np.array([s]), np.array([1.0]))

    def _volume_blocks(self, base, x: np.ndarray, t: float, T1: float) -> Iterator[_Block]:
        st = self.settings
        if isinstance(base, BoxBase) and st.adaptive:
            distance = base.distance(x)
            center = np.clip(x, base.lower, base.upper)
            for level in graded_time_levels(T1, t, st.panel_order, st.time_floor):
                if self._negligible(distance, level.s_hi):
                    continue
                scale, reach = self._window(level.s_lo, level.s_hi)
                ys, wy = graded_box_rule(base.bounds, center, scale, st.panel_order, reach)
                if wy.size:
                    yield _tensor_block(ys, wy, level.s, level.weights)
        else:
            space = volume_rule(base, st.space_order)
            mode = TIME_MODE_SQRT if base.contains(x, closed=True) else TIME_MODE_PLAIN
            trule = time_rule(T1, t, st.time_order, mode)
            yield _tensor_block(space.nodes, space.weights, t - trule.nodes[:, 0], trule.weights)

    def _surface_blocks(self, patch: BoundaryPatch, x: np.ndarray, t: float, T1: float) -> Iterator[_Block]:
        st = self.settings
        if patch.is_face and st.adaptive:
            distance = patch.distance(x)
            foot = patch.foot_point(x)
            tangential = patch.tangential_axes
            bounds = [patch.parent.base.bounds[i] for i in tangential]
            for level in graded_time_levels(T1, t, st.panel_order, st.time_floor):
                if self._negligible(distance, level.s_hi):
                    continue
                scale, reach = self._window(level.s_lo, level.s_hi)
                tang, w = graded_box_rule(bounds, foot[tangential], scale, st.panel_order, reach)
                if not w.size:
                    continue
                ys = np.empty((w.size, patch.dim))
                ys[:, tangential] = tang
                ys[:, patch.axis] = patch.offset
                yield _tensor_block(ys, w, level.s, level.weights, np.tile(patch.normal, (w.size, 1)))
        else:
            rule = surface_rule(patch, st.space_order)
            trule = time_rule(T1, t, st.time_order, TIME_MODE_SQRT)
            yield _tensor_block(rule.nodes, rule.weights, t - trule.nodes[:, 0], trule.weights, rule.normals)

    # -- core quadrature -------------------------------------------------------

    def _integrate(self, blocks: Iterator[_Block], x: np.ndarray, t: float, density: Density,
                   double_layer: bool, derivative: bool) -> np.ndarray:
        n = x.size
        order = int(double_layer) + int(derivative)
        total = np.zeros((n, n) if derivative else (n,))
        step = max(1, MAX_PAIRS // n ** (order + 1))
        pairs = 0
        for block in blocks:
            for start in range(0, block.weights.size, step):
                chunk = slice(start, start + step)
                y, s, w = block.nodes[chunk], block.s[chunk], block.weights[chunk]
                weighted = density(y, t - s) * w[:, None]
                jets = lame_kernel_jet(x - y, s, self.coeffs, order)
                if double_layer:
                    normals = block.normals[chunk]
                    if derivative:
                        kernel = traction_gradient(jets[2], normals, self.coeffs)
                    else:
                        kernel = traction_of_columns(jets[1], normals, self.coeffs)
                else:
                    kernel = jets[order]
                if derivative:
                    total += np.einsum("pijl,pi->jl", kernel, weighted)
                else:
                    total += np.einsum("pij,pi->j", kernel, weighted)
                pairs += w.size
        self.logger.debug(f"Integrated {pairs} kernel pairs at x={x.tolist()}, t={t}")
        return total

    @staticmethod
    def _target(x, dim: int) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != dim:
            raise PreconditionError(f"Target has {x.size} coordinates, expected {dim}")
        return x

    # -- potentials ------------------------------------------------------------

    def poisson_integral(self, h: Density, domain: CylinderDomain, x, t: float, T1: float = 0.0,
                         derivative: bool = False) -> np.ndarray:
        """I h at (x, t); zero for t <= T1."""
        x = self._target(x, domain.dim)
        if t <= T1:
            return np.zeros((domain.dim,) * (2 if derivative else 1))
        initial = Density(h.kind, h.dim, lambda p, _: h.evaluator(p, np.full(p.shape[0], T1)), h.label)
        return self._integrate(self._initial_blocks(domain.base, x, t, T1), x, t, initial, False, derivative)

    def volume_potential(self, f: Density, domain: CylinderDomain, x, t: float, T1: float = 0.0,
                         derivative: bool = False) -> np.ndarray:
        """G f at (x, t) for T1 <= t <= T; zero for t <= T1."""
        x = self._target(x, domain.dim)
        if t > domain.T * (1.0 + 1e-12):
            raise PreconditionError(f"Volume potential needs t <= T = {domain.T}, got t={t}")
        if t <= T1:
            return np.zeros((domain.dim,) * (2 if derivative else 1))
        return self._integrate(self._volume_blocks(domain.base, x, t, T1), x, t, f, False, derivative)

    def evaluate_layer(self, kind: str, density: Density, patches: Patches, x, t: float, T1: float = 0.0,
                       derivative: bool = False) -> np.ndarray:
        """V ('V') or W ('W') by direct quadrature, with no check for targets on the set."""
        if kind not in ("V", "W"):
            raise PreconditionError(f"Layer kind must be 'V' or 'W', got {kind!r}")
        patches = _as_patches(patches)
        x = self._target(x, patches[0].dim)
        total = np.zeros((x.size,) * (2 if derivative else 1))
        if t <= T1:
            return total
        for patch in patches:
            total += self._integrate(self._surface_blocks(patch, x, t, T1), x, t, density, kind == "W", derivative)
        return total

    def _nearest(self, patches: List[BoundaryPatch], x: np.ndarray) -> Tuple[BoundaryPatch, float]:
        distances = [p.distance(x) for p in patches]
        index = int(np.argmin(distances))
        return patches[index], distances[index]

    def _layer(self, kind: str, density: Density, patches: Patches, x, t: float, T1: float,
               side: Optional[str], derivative: bool) -> np.ndarray:
        patches = _as_patches(patches)
        x = self._target(x, patches[0].dim)
        if side is not None and side not in SIDES:
            raise PreconditionError(f"Side must be '-' or '+', got {side!r}")
        if t > T1:
            patch, distance = self._nearest(patches, x)
            if distance <= self.settings.near_tolerance:
                if side is None:
                    raise AmbiguousTraceError(
                        f"Target {x.tolist()} lies on the integration set; pass side='-' (inside) or '+' (outside)")
                normal = patch.normal_at(patch.foot_point(x))[0]
                return self.one_sided(
                    lambda point: self.evaluate_layer(kind, density, patches, point, t, T1, derivative),
                    patch.foot_point(x), normal, side).value
        return self.evaluate_layer(kind, density, patches, x, t, T1, derivative)

    def single_layer(self, v: Density, patches: Patches, x, t: float, T1: float = 0.0,
                     side: Optional[str] = None, derivative: bool = False) -> np.ndarray:
        """V v at (x, t); targets on S need side '-' (inside Ω) or '+' (outside)."""
        return self._layer("V", v, patches, x, t, T1, side, derivative)

    def double_layer(self, w: Density, patches: Patches, x, t: float, T1: float = 0.0,
                     side: Optional[str] = None, derivative: bool = False) -> np.ndarray:
        """W w at (x, t); targets on S need side '-' (inside Ω) or '+' (outside)."""
        return self._layer("W", w, patches, x, t, T1, side, derivative)

    def layer_stress(self, kind: str, density: Density, patches: Patches, x, t: float, normal,
                     T1: float = 0.0, side: Optional[str] = None) -> np.ndarray:
        """σ of a layer potential at (x, t) for the given unit normal."""
        jacobian = self._layer(kind, density, patches, x, t, T1, side, True)
        return apply_stress(jacobian, normal, self.coeffs)

    def one_sided(self, evaluate: Callable[[np.ndarray], np.ndarray], x0, normal, side: str) -> OneSidedLimit:
        """Limit of evaluate(x0 ∓ εν) as ε -> 0 ('-' is the inside, against the outward normal)."""
        if side not in SIDES:
            raise PreconditionError(f"Side must be '-' or '+', got {side!r}")
        st = self.settings
        direction = -1.0 if side == "-" else 1.0
        x0 = np.asarray(x0, dtype=float)
        normal = np.asarray(normal, dtype=float)
        values = np.array([evaluate(x0 + direction * eps * normal) for eps in st.offsets])
        samples = [{"eps": eps, "value": v.tolist()} for eps, v in zip(st.offsets, values)]
        try:
            limit, spread = richardson_limit(st.offsets, values, st.extrapolation_degree, st.max_spread)
        except ExtrapolationError as e:
            self.logger.error(f"One-sided limit ({side}) at {x0.tolist()} failed: {e}")
            raise ExtrapolationError(str(e), achieved=e.achieved, samples=samples)
        if spread > 0.5 * st.max_spread:
            self.logger.warning(f"Extrapolation spread {spread:.2e} close to the limit {st.max_spread:.1e}")
        return OneSidedLimit(limit, spread, side, samples)

    # -- fields and batches ----------------------------------------------------

    def field(self, kind: str, density: Density, support: Union[CylinderDomain, Patches],
              T1: float = 0.0) -> "PotentialField":
        if kind not in POTENTIAL_KINDS:
            raise PreconditionError(f"Unknown potential kind {kind!r}")
        return PotentialField(self, kind, density, support, T1)

    def evaluate_many(self, func: Callable[..., np.ndarray], targets: Sequence[Tuple[Any, float]]) -> np.ndarray:
        """func(x, t) at every target, on a thread pool capped by PARLAME_THREADS; input order kept."""
        targets = list(targets)
        if not targets:
            return np.empty((0,))
        workers = min(thread_limit(), len(targets))
        if workers == 1:
            results = [func(x, t) for x, t in targets]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(lambda target: func(*target), targets))
        return np.array(results)


@dataclass(frozen=True, eq=False)
class PotentialField:
    """One potential of one density, evaluable at any target."""
    engine: PotentialEngine
    kind: str
    density: Density
    support: Any
    T1: float = 0.0

    def value(self, x, t: float, side: Optional[str] = None) -> np.ndarray:
        return self._evaluate(x, t, side, False)

    def jacobian(self, x, t: float, side: Optional[str] = None) -> np.ndarray:
        return self._evaluate(x, t, side, True)

    def stress(self, x, t: float, normal, side: Optional[str] = None) -> np.ndarray:
        return apply_stress(self.jacobian(x, t, side), normal, self.engine.coeffs)

    def _evaluate(self, x, t, side, derivative):
        e = self.engine
        if self.kind == "I":
            return e.poisson_integral(self.density, self.support, x, t, self.T1, derivative)
        if self.kind == "G":
            return e.volume_potential(self.density, self.support, x, t, self.T1, derivative)
        return e._layer(self.kind, self.density, self.support, x, t, self.T1, side, derivative)

    def __call__(self, x, t: float, side: Optional[str] = None) -> np.ndarray:
        return self.value(x, t, side)


# ---------------------------------------------------------------------------
# Green identity and jump relations
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GreenResult:
    reconstructed: np.ndarray
    reference: np.ndarray
    terms: Dict[str, np.ndarray]

    @property
    def error(self) -> float:
        return float(np.max(np.abs(self.reconstructed - self.reference)))


def green_identity(engine: PotentialEngine, solution: Any, domain: CylinderDomain, x, t: float,
                   T1: float = 0.0) -> GreenResult:
    """
    I u(·,T1) + G L u + V σu + W u at (x, t), against u(x, t) inside Ω and 0 outside.

    `solution` supplies value(x, t), jacobian(x, t) and source(x, t) = L u.
    """
    x = np.asarray(x, dtype=float)
    patches = domain.boundary_patches()
    if min(p.distance(x) for p in patches) <= engine.settings.near_tolerance:
        raise AmbiguousTraceError("Green identity is two-valued on the boundary; pick an interior or exterior target")
    values = Density.from_field("value", solution)
    terms = {
        "I": engine.poisson_integral(Density.from_field("initial", solution), domain, x, t, T1),
        "G": engine.volume_potential(Density.from_field("volume", solution), domain, x, t, T1),
        "V": sum((engine.single_layer(Density.traction(solution, p, engine.coeffs), p, x, t, T1) for p in patches),
                 np.zeros(domain.dim)),
        "W": engine.double_layer(values, patches, x, t, T1),
    }
    reconstructed = terms["I"] + terms["G"] + terms["V"] + terms["W"]
    if domain.base.contains(x) and t > T1:
        reference = np.asarray(solution.value(x[None, :], np.array([t]))[0], dtype=float)
    else:
        reference = np.zeros(domain.dim)
    engine.logger.debug(f"Green identity at {x.tolist()}, t={t}: error {np.max(np.abs(reconstructed - reference)):.2e}")
    return GreenResult(reconstructed, reference, terms)


@dataclass(frozen=True, eq=False)
class JumpReport:
    """One-sided limits of W, σV or σW at a surface point and their difference (inside − outside)."""
    kind: str
    point: np.ndarray
    time: float
    inside: OneSidedLimit
    outside: OneSidedLimit
    expected: np.ndarray

    @property
    def jump(self) -> np.ndarray:
        return self.inside.value - self.outside.value

    @property
    def error(self) -> float:
        return float(np.max(np.abs(self.jump - self.expected)))

    @property
    def spread(self) -> float:
        return max(self.inside.spread, self.outside.spread)


def jump_probe(engine: PotentialEngine, kind: str, density: Density, patch: BoundaryPatch, x0, t0: float,
               T1: float = 0.0, patches: Optional[Sequence[BoundaryPatch]] = None) -> JumpReport:
    """
    Jump across the patch of W w ('W'), σV v ('sigmaV') or σW w ('sigmaW') at (x0, t0).

    Expected jumps: w(x0, t0) for W, v(x0, t0) for σV, zero for σW.
    """
    if kind not in JUMP_KINDS:
        raise PreconditionError(f"Jump kind must be one of {JUMP_KINDS}, got {kind!r}")
    x0 = np.asarray(x0, dtype=float)
    if patch.distance(x0) > engine.settings.near_tolerance:
        raise PreconditionError(f"Jump point {x0.tolist()} is not on the patch")
    if t0 <= T1:
        raise PreconditionError(f"Jump probe needs t0 > T1, got t0={t0}")
    patches = list(patches) if patches else [patch]
    x0 = patch.foot_point(x0)
    normal = patch.normal_at(x0)[0]

    if kind == "W":
        def evaluate(point):
            return engine.evaluate_layer("W", density, patches, point, t0, T1)
    else:
        layer = "V" if kind == "sigmaV" else "W"

        def evaluate(point):
            jacobian = engine.evaluate_layer(layer, density, patches, point, t0, T1, derivative=True)
            return apply_stress(jacobian, normal, engine.coeffs)

    inside = engine.one_sided(evaluate, x0, normal, "-")
    outside = engine.one_sided(evaluate, x0, normal, "+")
    if kind == "sigmaW":
        expected = np.zeros(x0.size)
    else:
        expected = density(x0[None, :], np.array([t0]))[0]
    report = JumpReport(kind, x0, t0, inside, outside, expected)
    engine.logger.debug(f"Jump {kind} at {x0.tolist()}, t={t0}: error {report.error:.2e}, spread {report.spread:.2e}")
    return report


def write_potential_csv(path, targets: Sequence[Tuple[Any, float]], values: np.ndarray):
    """Batch results as rows x_1..x_n, t, component, value."""
    values = np.asarray(values, dtype=float)
    if not targets:
        raise PreconditionError("No targets to export")
    n = np.asarray(targets[0][0]).size
    headers = [f"x_{i + 1}" for i in range(n)] + ["t", "component", "value"]

    def rows():
        for (x, t), value in zip(targets, values):
            coords = list(np.asarray(x, dtype=float))
            for component, v in enumerate(np.ravel(value), start=1):
                yield coords + [float(t), component, v]

    return write_csv(path, headers, rows())
