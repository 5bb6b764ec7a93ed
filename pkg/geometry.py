#!/usr/bin/env python3
"""
Geometry layer for the parabolic Lamé toolkit.

Space-time cylinders Ω_T over axis-aligned boxes and balls, lateral boundary
patches with outward normals, and the quadrature rules the potentials are
assembled from: plain Gauss rules for volumes, surfaces and time intervals,
plus the target-graded composite rules used near the kernel's pole.
"""

import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from errors import InvalidGeometryError, PreconditionError, UnsupportedDimensionError

logger = logging.getLogger(__name__)

# Rule modes
TIME_MODE_PLAIN = "plain"
TIME_MODE_SQRT = "sqrt"
TIME_MODES = {TIME_MODE_PLAIN, TIME_MODE_SQRT}

NORMAL_TOLERANCE = 1e-12


@lru_cache(maxsize=128)
def _leggauss(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(order: int, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre nodes and weights mapped to [lo, hi]."""
    if order < 1:
        raise PreconditionError(f"Quadrature order must be >= 1, got {order}")
    x, w = _leggauss(int(order))
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _check_order(order: int):
    if int(order) != order or order < 1:
        raise PreconditionError(f"Quadrature order must be a positive integer, got {order}")


def tensor_product(axis_nodes: Sequence[np.ndarray],
                   axis_weights: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor product of 1-D rules; nodes ordered with the last axis fastest."""
    grids = np.meshgrid(*axis_nodes, indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*axis_weights, indexing="ij")
    weights = np.ones(nodes.shape[0])
    for wg in wgrids:
        weights = weights * wg.ravel()
    return nodes, weights


def _frame(axis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Two unit vectors completing `axis` to an orthonormal frame in R^3."""
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - np.dot(helper, axis) * axis
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return e1, e2


# ---------------------------------------------------------------------------
# Spatial bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxBase:
    """Axis-aligned box with per-axis bounds (lo_i, hi_i)."""
    bounds: Tuple[Tuple[float, float], ...]

    @property
    def kind(self) -> str:
        return "box"

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.bounds], dtype=float)

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.bounds], dtype=float)

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def measure(self) -> float:
        return float(np.prod(self.widths))

    @property
    def face_count(self) -> int:
        return 2 * self.dim

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    def face_measure(self, face: int) -> float:
        axis = face // 2
        others = [w for i, w in enumerate(self.widths) if i != axis]
        return float(np.prod(others)) if others else 1.0

    @property
    def boundary_measure(self) -> float:
        return sum(self.face_measure(f) for f in range(self.face_count))

    def contains(self, x: np.ndarray, closed: bool = False) -> bool:
        x = np.asarray(x, dtype=float)
        if closed:
            return bool(np.all(x >= self.lower) and np.all(x <= self.upper))
        return bool(np.all(x > self.lower) and np.all(x < self.upper))

    def distance(self, x: np.ndarray) -> float:
        """Distance from x to the closed box (0 inside)."""
        x = np.asarray(x, dtype=float)
        gap = np.maximum(self.lower - x, 0.0) + np.maximum(x - self.upper, 0.0)
        return float(np.linalg.norm(gap))

    def boundary_distance(self, x: np.ndarray) -> float:
        """Distance from x to the box boundary."""
        x = np.asarray(x, dtype=float)
        if not self.contains(x, closed=True):
            return self.distance(x)
        return float(np.min(np.minimum(x - self.lower, self.upper - x)))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "box", "bounds": [[float(lo), float(hi)] for lo, hi in self.bounds]}


@dataclass(frozen=True)
class BallBase:
    """Ball with center and radius."""
    center: Tuple[float, ...]
    radius: float

    @property
    def kind(self) -> str:
        return "ball"

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def center_array(self) -> np.ndarray:
        return np.array(self.center, dtype=float)

    @property
    def measure(self) -> float:
        n = self.dim
        return math.pi ** (n / 2) * self.radius ** n / math.gamma(n / 2 + 1)

    @property
    def boundary_measure(self) -> float:
        return self.dim * self.measure / self.radius

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, x: np.ndarray, closed: bool = False) -> bool:
        r = float(np.linalg.norm(np.asarray(x, dtype=float) - self.center_array))
        return r <= self.radius if closed else r < self.radius

    def distance(self, x: np.ndarray) -> float:
        r = float(np.linalg.norm(np.asarray(x, dtype=float) - self.center_array))
        return max(r - self.radius, 0.0)

    def boundary_distance(self, x: np.ndarray) -> float:
        r = float(np.linalg.norm(np.asarray(x, dtype=float) - self.center_array))
        return abs(r - self.radius)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "ball", "center": [float(c) for c in self.center], "radius": float(self.radius)}


SpatialBase = Union[BoxBase, BallBase]


def make_box(bounds: Sequence[Sequence[float]]) -> BoxBase:
    """Box base from per-axis (lo, hi) pairs; n >= 2."""
    try:
        pairs = tuple((float(lo), float(hi)) for lo, hi in bounds)
    except (TypeError, ValueError) as e:
        raise InvalidGeometryError(f"Box bounds must be (lo, hi) pairs: {e}")
    if len(pairs) < 2:
        raise InvalidGeometryError(f"Box needs dimension n >= 2, got n={len(pairs)}")
    for axis, (lo, hi) in enumerate(pairs):
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise InvalidGeometryError(f"Axis {axis} has non-finite bounds ({lo}, {hi})")
        if lo >= hi:
            raise InvalidGeometryError(f"Degenerate axis {axis}: lo={lo} >= hi={hi}")
    return BoxBase(pairs)


def make_ball(center: Sequence[float], radius: float) -> BallBase:
    """Ball base; n >= 2 and radius > 0."""
    c = tuple(float(v) for v in center)
    if len(c) < 2:
        raise InvalidGeometryError(f"Ball needs dimension n >= 2, got n={len(c)}")
    if not all(math.isfinite(v) for v in c):
        raise InvalidGeometryError(f"Ball center must be finite, got {c}")
    if not (math.isfinite(radius) and radius > 0):
        raise InvalidGeometryError(f"Ball radius must be positive, got {radius}")
    return BallBase(c, float(radius))


def mirror_box(base: BoxBase, face: int) -> BoxBase:
    """Reflection of the box across the hyperplane of one of its faces."""
    if not 0 <= face < base.face_count:
        raise InvalidGeometryError(f"Face {face} out of range for a {base.dim}-box")
    axis, side = divmod(face, 2)
    lo, hi = base.bounds[axis]
    width = hi - lo
    mirrored = list(base.bounds)
    mirrored[axis] = (lo - width, lo) if side == 0 else (hi, hi + width)
    return BoxBase(tuple(mirrored))


# ---------------------------------------------------------------------------
# Cylinders and patches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CylinderDomain:
    """Space-time cylinder Ω_T = Ω × (0, T)."""
    base: SpatialBase
    T: float

    def __post_init__(self):
        if not (isinstance(self.T, (int, float)) and math.isfinite(self.T) and self.T > 0):
            raise InvalidGeometryError(f"Time horizon must be finite and positive, got {self.T}")

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def is_box(self) -> bool:
        return isinstance(self.base, BoxBase)

    def contains(self, x: np.ndarray, t: float, closed: bool = False) -> bool:
        if closed:
            return self.base.contains(x, closed=True) and 0.0 <= t <= self.T
        return self.base.contains(x) and 0.0 < t <= self.T

    def face(self, index: int) -> "BoundaryPatch":
        return BoundaryPatch(self, face=index)

    def cap(self, axis: Sequence[float], half_angle: float) -> "BoundaryPatch":
        return BoundaryPatch(self, cap=SphericalCap(tuple(float(a) for a in axis), float(half_angle)))

    def boundary_patches(self) -> List["BoundaryPatch"]:
        """Patches covering the whole lateral boundary."""
        if self.is_box:
            return [self.face(f) for f in range(self.base.face_count)]
        axis = tuple([0.0] * (self.dim - 1) + [1.0])
        return [self.cap(axis, math.pi)]

    def to_dict(self) -> Dict[str, Any]:
        doc = self.base.to_dict()
        doc["T"] = float(self.T)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "CylinderDomain":
        if not isinstance(doc, dict):
            raise InvalidGeometryError("Geometry document must be a JSON object")
        kind = doc.get("kind")
        if "T" not in doc:
            raise InvalidGeometryError("Geometry document is missing the horizon 'T'")
        if kind == "box":
            base = make_box(doc.get("bounds", []))
        elif kind == "ball":
            base = make_ball(doc.get("center", []), float(doc.get("radius", 0.0)))
        else:
            raise InvalidGeometryError(f"Unknown geometry kind: {kind!r}")
        return cls(base, float(doc["T"]))

    @classmethod
    def from_json(cls, text: str) -> "CylinderDomain":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise InvalidGeometryError(f"Invalid geometry JSON: {e}")
        return cls.from_dict(doc)


@dataclass(frozen=True)
class SphericalCap:
    """Cap of a sphere around a unit axis; half_angle = π is the whole sphere."""
    axis: Tuple[float, ...]
    half_angle: float

    @property
    def axis_array(self) -> np.ndarray:
        a = np.array(self.axis, dtype=float)
        return a / np.linalg.norm(a)


@dataclass(frozen=True)
class BoundaryPatch:
    """Relatively open connected piece Γ of ∂Ω with outward orientation."""
    parent: CylinderDomain
    face: Optional[int] = None
    cap: Optional[SphericalCap] = None

    def __post_init__(self):
        base = self.parent.base
        if isinstance(base, BoxBase):
            if self.face is None or not 0 <= self.face < base.face_count:
                raise InvalidGeometryError(f"Box patch needs a face index in [0, {base.face_count}), got {self.face}")
        else:
            if self.cap is None:
                raise InvalidGeometryError("Ball patch needs a spherical-cap selector")
            if len(self.cap.axis) != base.dim or not np.linalg.norm(self.cap.axis) > 0:
                raise InvalidGeometryError(f"Cap axis {self.cap.axis} does not fit dimension {base.dim}")
            if not 0 < self.cap.half_angle <= math.pi:
                raise InvalidGeometryError(f"Empty cap: half angle {self.cap.half_angle}")

    @property
    def dim(self) -> int:
        return self.parent.dim

    @property
    def is_face(self) -> bool:
        return self.face is not None

    @property
    def axis(self) -> int:
        return self.face // 2

    @property
    def side(self) -> int:
        return self.face % 2

    @property
    def offset(self) -> float:
        """Coordinate of the face hyperplane."""
        return self.parent.base.bounds[self.axis][self.side]

    @property
    def tangential_axes(self) -> List[int]:
        return [i for i in range(self.dim) if i != self.axis]

    @property
    def normal(self) -> np.ndarray:
        """Constant outward normal of a box face."""
        if not self.is_face:
            raise PreconditionError("Curved patches have no constant normal; use normal_at")
        nu = np.zeros(self.dim)
        nu[self.axis] = 1.0 if self.side == 1 else -1.0
        return nu

    @property
    def measure(self) -> float:
        if self.is_face:
            return self.parent.base.face_measure(self.face)
        base = self.parent.base
        alpha = self.cap.half_angle
        if self.dim == 2:
            return 2.0 * alpha * base.radius
        if self.dim == 3:
            return 2.0 * math.pi * base.radius ** 2 * (1.0 - math.cos(alpha))
        raise UnsupportedDimensionError(f"Cap measure implemented for n in {{2, 3}}, got n={self.dim}")

    def normal_at(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_face:
            return np.tile(self.normal, (points.shape[0], 1))
        base = self.parent.base
        d = points - base.center_array
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def foot_point(self, x: np.ndarray) -> np.ndarray:
        """Closest point of the closed patch to x."""
        x = np.asarray(x, dtype=float)
        if self.is_face:
            base = self.parent.base
            foot = np.clip(x, base.lower, base.upper)
            foot[self.axis] = self.offset
            return foot
        base = self.parent.base
        c = base.center_array
        a = self.cap.axis_array
        d = x - c
        r = np.linalg.norm(d)
        if r == 0.0:
            return c + base.radius * a
        u = d / r
        if np.dot(u, a) >= math.cos(self.cap.half_angle) - 1e-15:
            return c + base.radius * u
        w = u - np.dot(u, a) * a
        wn = np.linalg.norm(w)
        if wn == 0.0:
            w = _frame(a)[0] if self.dim == 3 else np.array([-a[1], a[0]])
        else:
            w = w / wn
        alpha = self.cap.half_angle
        return c + base.radius * (math.cos(alpha) * a + math.sin(alpha) * w)

    def distance(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.foot_point(x)))

    def to_dict(self) -> Dict[str, Any]:
        if self.is_face:
            return {"face": self.face}
        return {"cap": {"axis": list(self.cap.axis), "half_angle": self.cap.half_angle}}


# ---------------------------------------------------------------------------
# Quadrature rules
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes, strictly positive weights and (surface rules) unit normals."""
    nodes: np.ndarray
    weights: np.ndarray
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        weights = np.asarray(self.weights, dtype=float).ravel()
        if nodes.shape[0] != weights.shape[0]:
            raise PreconditionError(f"Rule has {nodes.shape[0]} nodes but {weights.shape[0]} weights")
        if weights.size and not np.all(weights > 0):
            raise PreconditionError("Quadrature weights must be strictly positive")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if self.normals is not None:
            normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
            if normals.shape[0] != nodes.shape[0]:
                raise PreconditionError("Normals must be given per node")
            if not np.allclose(np.linalg.norm(normals, axis=-1), 1.0, atol=NORMAL_TOLERANCE, rtol=0.0):
                raise PreconditionError("Surface normals must have unit length")
            normals.setflags(write=False)
            object.__setattr__(self, "normals", normals)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def measure(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Weighted sum over the leading axis of `values`."""
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


def volume_rule(domain: Union[CylinderDomain, SpatialBase], order: int) -> QuadratureRule:
    """Tensor Gauss rule for boxes; radial x angular product rule for balls."""
    _check_order(order)
    base = domain.base if isinstance(domain, CylinderDomain) else domain
    if isinstance(base, BoxBase):
        axes = [gauss_legendre(order, lo, hi) for lo, hi in base.bounds]
        nodes, weights = tensor_product([a[0] for a in axes], [a[1] for a in axes])
        return QuadratureRule(nodes, weights)

    n = base.dim
    r, wr = gauss_legendre(order, 0.0, base.radius)
    phi = 2.0 * math.pi * np.arange(order) / order
    wphi = np.full(order, 2.0 * math.pi / order)
    if n == 2:
        grid, weights = tensor_product([r, phi], [wr * r, wphi])
        nodes = np.stack([grid[:, 0] * np.cos(grid[:, 1]), grid[:, 0] * np.sin(grid[:, 1])], axis=-1)
    elif n == 3:
        u, wu = gauss_legendre(order, -1.0, 1.0)
        grid, weights = tensor_product([r, u, phi], [wr * r ** 2, wu, wphi])
        rho = grid[:, 0] * np.sqrt(1.0 - grid[:, 1] ** 2)
        nodes = np.stack([rho * np.cos(grid[:, 2]), rho * np.sin(grid[:, 2]), grid[:, 0] * grid[:, 1]], axis=-1)
    else:
        raise UnsupportedDimensionError(f"Ball rules implemented for n in {{2, 3}}, got n={n}")
    return QuadratureRule(nodes + base.center_array, weights)


def surface_rule(patch: BoundaryPatch, order: int) -> QuadratureRule:
    """Gauss rule on a box face or spherical cap, with outward normals per node."""
    _check_order(order)
    base = patch.parent.base
    if patch.is_face:
        axes = [gauss_legendre(order, *base.bounds[i]) for i in patch.tangential_axes]
        tang, weights = tensor_product([a[0] for a in axes], [a[1] for a in axes])
        nodes = np.empty((tang.shape[0], patch.dim))
        nodes[:, patch.tangential_axes] = tang
        nodes[:, patch.axis] = patch.offset
        return QuadratureRule(nodes, weights, patch.normal_at(nodes))

    c = base.center_array
    R = base.radius
    a = patch.cap.axis_array
    alpha = patch.cap.half_angle
    if patch.dim == 2:
        phi0 = math.atan2(a[1], a[0])
        if alpha >= math.pi:
            phi = phi0 + 2.0 * math.pi * np.arange(order) / order
            wphi = np.full(order, 2.0 * math.pi / order)
        else:
            phi, wphi = gauss_legendre(order, phi0 - alpha, phi0 + alpha)
        normals = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return QuadratureRule(c + R * normals, R * wphi, normals)
    if patch.dim == 3:
        e1, e2 = _frame(a)
        u, wu = gauss_legendre(order, math.cos(alpha), 1.0)
        phi = 2.0 * math.pi * np.arange(order) / order
        wphi = np.full(order, 2.0 * math.pi / order)
        grid, weights = tensor_product([u, phi], [wu, wphi])
        s = np.sqrt(1.0 - grid[:, 0] ** 2)[:, None]
        normals = (s * (np.cos(grid[:, 1])[:, None] * e1 + np.sin(grid[:, 1])[:, None] * e2)
                   + grid[:, 0][:, None] * a)
        normals /= np.linalg.norm(normals, axis=-1, keepdims=True)
        return QuadratureRule(c + R * normals, R ** 2 * weights, normals)
    raise UnsupportedDimensionError(f"Cap rules implemented for n in {{2, 3}}, got n={patch.dim}")


def time_rule(T1: float, T2: float, order: int, mode: str = TIME_MODE_PLAIN) -> QuadratureRule:
    """
    Gauss rule on (T1, T2).

    In sqrt mode the substitution τ = T2 − σ² is applied, which integrates
    (T2 − τ)^(-1/2) times a polynomial in σ exactly.
    """
    _check_order(order)
    if not T1 < T2:
        raise PreconditionError(f"Time rule needs T1 < T2, got ({T1}, {T2})")
    if mode not in TIME_MODES:
        raise PreconditionError(f"Unknown time-rule mode {mode!r}")
    if mode == TIME_MODE_PLAIN:
        tau, w = gauss_legendre(order, T1, T2)
    else:
        sigma, ws = gauss_legendre(order, 0.0, math.sqrt(T2 - T1))
        tau, w = T2 - sigma ** 2, 2.0 * sigma * ws
    return QuadratureRule(tau[:, None], w)


def space_time_rule(space: QuadratureRule, time: QuadratureRule) -> QuadratureRule:
    """Tensor product of a spatial rule and a time rule; time is the last coordinate."""
    ms, mt = space.size, time.size
    nodes = np.concatenate([np.repeat(space.nodes, mt, axis=0), np.tile(time.nodes, (ms, 1))], axis=1)
    weights = np.repeat(space.weights, mt) * np.tile(time.weights, ms)
    normals = None if space.normals is None else np.repeat(space.normals, mt, axis=0)
    return QuadratureRule(nodes, weights, normals)


# ---------------------------------------------------------------------------
# Target-graded composite rules
# ---------------------------------------------------------------------------

def graded_panels(lo: float, hi: float, center: float, scale: float, order: int,
                  reach: float = math.inf) -> Tuple[np.ndarray, np.ndarray]:
    """
    Composite Gauss rule on [lo, hi] ∩ [center − reach, center + reach].

    Panel breakpoints sit at center ± scale·2^k, so panels double in width
    away from `center`; a Gaussian of width `scale` centred there is resolved.
    """
    _check_order(order)
    if not scale > 0:
        raise PreconditionError(f"Panel scale must be positive, got {scale}")
    a, b = max(lo, center - reach), min(hi, center + reach)
    if not b > a:
        return np.empty(0), np.empty(0)
    c = min(max(center, a), b)
    breaks = {a, b, c}
    step = scale
    while c - step > a or c + step < b:
        for p in (c - step, c + step):
            if a < p < b:
                breaks.add(p)
        step *= 2.0
    edges = sorted(breaks)
    nodes, weights = [], []
    for left, right in zip(edges[:-1], edges[1:]):
        if right > left:
            x, w = gauss_legendre(order, left, right)
            nodes.append(x)
            weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def graded_box_rule(bounds: Sequence[Tuple[float, float]], center: np.ndarray, scale: float,
                    order: int, reach: float = math.inf) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor product of graded panels over a box (or a box face's tangential bounds)."""
    axes = [graded_panels(lo, hi, c, scale, order, reach) for (lo, hi), c in zip(bounds, center)]
    if any(a[0].size == 0 for a in axes):
        return np.empty((0, len(axes))), np.empty(0)
    return tensor_product([a[0] for a in axes], [a[1] for a in axes])


@dataclass(frozen=True, eq=False)
class TimeLevel:
    """One dyadic panel s ∈ [s_lo, s_hi] of the lag s = t − τ."""
    s: np.ndarray
    weights: np.ndarray
    s_lo: float
    s_hi: float


def graded_time_levels(T1: float, t: float, order: int, floor: float) -> List[TimeLevel]:
    """
    Dyadic Gauss panels in s = t − τ covering [0, t − T1].

    Panels halve from t − T1 until their width drops to about floor·(t − T1);
    the last one reaches down to s = 0.
    """
    _check_order(order)
    if not 0 < floor < 1:
        raise PreconditionError(f"Time floor must lie in (0, 1), got {floor}")
    span = t - T1
    if span <= 0:
        return []
    count = int(math.ceil(math.log2(1.0 / floor)))
    levels = []
    for k in range(count):
        s_hi = span * 2.0 ** (-k)
        s_lo = 0.5 * s_hi if k < count - 1 else 0.0
        s, w = gauss_legendre(order, s_lo, s_hi)
        levels.append(TimeLevel(s, w, s_lo, s_hi))
    return levels
