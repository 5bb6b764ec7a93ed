#!/usr/bin/env python3
"""
Fundamental solutions for the parabolic Lamé operator.

    L = ∂_t − μΔ − (μ+λ)∇div      (lower-order terms a_j fixed to zero)

The heat kernel φ0, its derivatives of any order, the matrix kernel

    Φ_ij(x, t) = φ0(x, μt) δ_ij + ∫_{μt}^{(2μ+λ)t} ∂_i∂_j φ0(x, s) ds,

the boundary stress operator σ and the uniform parabolicity check.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy.integrate import quad_vec

from errors import KernelDomainError, NotParabolicError, NumericalError, PreconditionError

logger = logging.getLogger(__name__)

# Kernel integral tolerances
KERNEL_RTOL = 1e-10
KERNEL_ATOL = 1e-300

NORMAL_TOLERANCE = 1e-12


@dataclass(frozen=True)
class LameCoefficients:
    """Constant Lamé coefficients μ, λ and the parabolicity margin θ."""
    mu: float
    lam: float
    theta: float = 0.5

    def __post_init__(self):
        for name in ("mu", "lam", "theta"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise PreconditionError(f"Lamé coefficient {name} must be a finite real, got {value!r}")
        if self.theta <= 0:
            raise PreconditionError(f"Parabolicity margin must be positive, got theta={self.theta}")

    @property
    def longitudinal(self) -> float:
        """Speed 2μ + λ of the divergence (pressure) part."""
        return 2.0 * self.mu + self.lam

    @property
    def speeds(self) -> Tuple[float, float]:
        return self.mu, self.longitudinal

    @property
    def is_heat(self) -> bool:
        """λ = −μ: the system decouples into heat equations with diffusivity μ."""
        return self.lam == -self.mu

    def exact(self) -> Tuple[Fraction, Fraction]:
        """Rational (μ, λ) read from the decimal representation."""
        return Fraction(repr(float(self.mu))), Fraction(repr(float(self.lam)))

    def to_dict(self) -> Dict[str, Any]:
        return {"mu": self.mu, "lam": self.lam, "theta": self.theta}

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "LameCoefficients":
        return cls(float(doc["mu"]), float(doc["lam"]), float(doc.get("theta", 0.5)))


HEAT_COEFFICIENTS = LameCoefficients(1.0, -1.0, 0.5)


def check_parabolicity(coeffs: LameCoefficients, n: int = 2) -> Tuple[float, float]:
    """
    Roots κ1 = −(2μ+λ), κ2 = −μ of the symbol at |ζ| = 1.

    Raises NotParabolicError when the larger root exceeds −θ.
    """
    kappa1 = -coeffs.longitudinal
    kappa2 = -coeffs.mu
    worst = max(kappa1, kappa2)
    if worst > -coeffs.theta:
        raise NotParabolicError(
            f"Operator is not uniformly parabolic in n={n}: root {worst} > -theta = {-coeffs.theta}",
            root=worst, theta=coeffs.theta)
    return kappa1, kappa2


def _as_output(values: np.ndarray):
    return float(values) if np.ndim(values) == 0 else values


def heat_kernel(x, t):
    """φ0(x, t) = (4πt)^(-n/2) exp(−|x|²/4t) for t > 0, else 0. Vectorised over leading axes."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    n = x.shape[-1]
    positive = t > 0
    ts = np.where(positive, t, 1.0)
    r2 = np.sum(x * x, axis=-1)
    values = np.where(positive, (4.0 * math.pi * ts) ** (-0.5 * n) * np.exp(-r2 / (4.0 * ts)), 0.0)
    return _as_output(values)


def _gaussian_factors(z: np.ndarray, s: np.ndarray, max_order: int) -> np.ndarray:
    """
    One-dimensional Gaussian derivatives ∂^m g(z_i, s), m = 0..max_order.

    g(z, s) = (4πs)^(-1/2) exp(−z²/4s) and ∂^m g = (−1)^m (4s)^(−m/2) H_m(z/2√s) g
    with physicists' Hermite polynomials H_m. Shape (..., n, max_order + 1).
    """
    root = np.sqrt(s)[..., None]
    u = z / (2.0 * root)
    g = np.exp(-u * u) / np.sqrt(4.0 * math.pi * s)[..., None]
    factors = np.empty(z.shape + (max_order + 1,))
    h_prev, h_curr = np.ones_like(u), 2.0 * u
    factors[..., 0] = g
    if max_order >= 1:
        factors[..., 1] = -h_curr * g / (2.0 * root)
    for m in range(1, max_order):
        h_prev, h_curr = h_curr, 2.0 * u * h_curr - 2.0 * m * h_prev
        factors[..., m + 1] = (-1.0) ** (m + 1) * h_curr * g / (2.0 * root) ** (m + 1)
    return factors


def _phi0_derivative_tensor(z: np.ndarray, s: np.ndarray, order: int) -> np.ndarray:
    """All order-th spatial derivatives of φ0 at (z, s), s > 0: shape (..., n, ..., n)."""
    n = z.shape[-1]
    factors = _gaussian_factors(z, s, order)
    out = np.empty(z.shape[:-1] + (n,) * order)
    cache: Dict[Tuple[int, ...], np.ndarray] = {}
    for index in product(range(n), repeat=order):
        counts = tuple(index.count(i) for i in range(n))
        if counts not in cache:
            value = factors[..., 0, counts[0]]
            for i in range(1, n):
                value = value * factors[..., i, counts[i]]
            cache[counts] = value
        out[(Ellipsis,) + index] = cache[counts]
    return out


def heat_kernel_derivative(x, t, alpha) -> Any:
    """∂^α φ0(x, t) for a spatial multi-index α; zero for t <= 0."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != x.shape[-1] or min(alpha) < 0:
        raise PreconditionError(f"Multi-index {alpha} does not match dimension {x.shape[-1]}")
    positive = t > 0
    ts = np.where(positive, t, 1.0)
    factors = _gaussian_factors(x, np.broadcast_to(ts, x.shape[:-1]), max(alpha))
    value = np.ones(x.shape[:-1])
    for i, a in enumerate(alpha):
        value = value * factors[..., i, a]
    return _as_output(np.where(positive, value, 0.0))


def heat_kernel_hessian(x, t) -> np.ndarray:
    """∂²φ0/∂x_i∂x_j = φ0 (x_i x_j / 4t² − δ_ij / 2t); only defined for t > 0."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise KernelDomainError("Heat-kernel Hessian is undefined for t <= 0")
    n = x.shape[-1]
    phi = np.asarray(heat_kernel(x, t))[..., None, None]
    tt = t[..., None, None]
    outer = x[..., :, None] * x[..., None, :]
    return phi * (outer / (4.0 * tt * tt) - np.eye(n) / (2.0 * tt))


def _lame_correction(z: np.ndarray, s: np.ndarray, coeffs: LameCoefficients, order: int) -> List[np.ndarray]:
    """
    ∫_{μs}^{(2μ+λ)s} ∂_i∂_j ∂^β φ0(z, s') ds' for |β| <= order.

    With s' = sσ the interval becomes [μ, 2μ+λ] for every point, so one adaptive
    vector integral covers the whole batch.
    """
    p, n = z.shape
    sizes = [n ** (2 + m) for m in range(order + 1)]

    def integrand(sigma: float) -> np.ndarray:
        parts = [_phi0_derivative_tensor(z, s * sigma, 2 + m).reshape(p, -1) for m in range(order + 1)]
        return np.concatenate(parts, axis=1) * s[:, None]

    a, b, sign = coeffs.mu, coeffs.longitudinal, 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    result, error, info = quad_vec(integrand, a, b, epsrel=KERNEL_RTOL, epsabs=KERNEL_ATOL,
                                   norm="max", full_output=True)
    if not info.success:
        raise NumericalError(f"Lamé kernel integral did not converge: {info.message}", achieved=float(error))
    logger.debug(f"Lamé kernel integral: {p} points, {info.neval} evaluations, error {error:.2e}")
    result = sign * result
    out, start = [], 0
    for m, size in enumerate(sizes):
        out.append(result[:, start:start + size].reshape((p,) + (n,) * (2 + m)))
        start += size
    return out


def lame_kernel_jet(z, s, coeffs: LameCoefficients, order: int = 0) -> List[np.ndarray]:
    """
    Φ and its spatial derivatives up to `order` (0, 1 or 2) at a batch of points.

    z has shape (P, n), s shape (P,). Returns [Φ, ∂Φ, ∂²Φ][:order+1] with shapes
    (P, n, n), (P, n, n, n) indexed [i, j, k] = ∂_k Φ_ij, and (P, n, n, n, n).
    Entries with s <= 0 are exactly zero. For λ = −μ no quadrature is performed.
    """
    if order not in (0, 1, 2):
        raise PreconditionError(f"Kernel jet order must be 0, 1 or 2, got {order}")
    check_parabolicity(coeffs)
    z = np.atleast_2d(np.asarray(z, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    p, n = z.shape
    jets = [np.zeros((p,) + (n,) * (2 + m)) for m in range(order + 1)]
    positive = s > 0
    if not np.any(positive):
        return jets
    zp, sp = z[positive], s[positive]
    eye = np.eye(n)
    for m in range(order + 1):
        derivative = _phi0_derivative_tensor(zp, coeffs.mu * sp, m)
        jets[m][positive] += np.einsum("ij,p...->pij...", eye, derivative)
    if not coeffs.is_heat:
        for m, correction in enumerate(_lame_correction(zp, sp, coeffs, order)):
            jets[m][positive] += correction
    return jets


def lame_kernel(x, t, coeffs: LameCoefficients) -> np.ndarray:
    """Φ(x, t) as an n×n matrix (or a batch of them); zero for t <= 0."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    lead = np.broadcast_shapes(x.shape[:-1], t.shape)
    n = x.shape[-1]
    z = np.broadcast_to(x, lead + (n,)).reshape(-1, n)
    s = np.broadcast_to(t, lead).reshape(-1)
    return lame_kernel_jet(z, s, coeffs, 0)[0].reshape(lead + (n, n))


def lame_kernel_gradient(x, t, coeffs: LameCoefficients) -> np.ndarray:
    """∂_k Φ_ij(x, t) indexed [..., i, j, k]."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    lead = np.broadcast_shapes(x.shape[:-1], t.shape)
    n = x.shape[-1]
    z = np.broadcast_to(x, lead + (n,)).reshape(-1, n)
    s = np.broadcast_to(t, lead).reshape(-1)
    return lame_kernel_jet(z, s, coeffs, 1)[1].reshape(lead + (n, n, n))


def _check_normals(normal: np.ndarray):
    norms = np.linalg.norm(normal, axis=-1)
    if np.any(np.abs(norms - 1.0) > NORMAL_TOLERANCE):
        raise PreconditionError(f"Normal must have unit length, got |ν| = {np.max(np.abs(norms))}")


def apply_stress(field_jacobian, normal, coeffs: LameCoefficients) -> np.ndarray:
    """
    Boundary stress (σu)_i = μ ∂u_i/∂ν + μ Σ_j ν_j ∂u_j/∂x_i + λ ν_i div u.

    field_jacobian[..., i, j] = ∂u_i/∂x_j; batched over leading axes.
    """
    J = np.asarray(field_jacobian, dtype=float)
    nu = np.asarray(normal, dtype=float)
    _check_normals(nu)
    normal_derivative = np.einsum("...ik,...k->...i", J, nu)
    transposed = np.einsum("...ji,...j->...i", J, nu)
    divergence = np.trace(J, axis1=-2, axis2=-1)[..., None]
    return coeffs.mu * normal_derivative + coeffs.mu * transposed + coeffs.lam * nu * divergence


def traction_of_columns(dphi: np.ndarray, normal: np.ndarray, coeffs: LameCoefficients) -> np.ndarray:
    """
    σ applied to every column of Φ: T[p, i, j] = (σ Φ_{·j})_i.

    dphi is indexed [p, i, j, k] = ∂_k Φ_ij; normal is (P, n) or (n,).
    """
    nu = np.broadcast_to(np.asarray(normal, dtype=float), (dphi.shape[0], dphi.shape[1]))
    normal_derivative = np.einsum("pijk,pk->pij", dphi, nu)
    transposed = np.einsum("pmji,pm->pij", dphi, nu)
    divergence = np.einsum("pmjm->pj", dphi)
    return (coeffs.mu * normal_derivative + coeffs.mu * transposed
            + coeffs.lam * nu[:, :, None] * divergence[:, None, :])


def traction_gradient(d2phi: np.ndarray, normal: np.ndarray, coeffs: LameCoefficients) -> np.ndarray:
    """∂_l of traction_of_columns, indexed [p, i, j, l], with the normal held fixed."""
    nu = np.broadcast_to(np.asarray(normal, dtype=float), (d2phi.shape[0], d2phi.shape[1]))
    normal_derivative = np.einsum("pijkl,pk->pijl", d2phi, nu)
    transposed = np.einsum("pmjil,pm->pijl", d2phi, nu)
    divergence = np.einsum("pmjml->pjl", d2phi)
    return (coeffs.mu * normal_derivative + coeffs.mu * transposed
            + coeffs.lam * nu[:, :, None, None] * divergence[:, None, :, :])


def _stencil_offsets(n: int, h: float) -> List[Tuple[np.ndarray, float]]:
    """Center, ±e_a, ±e_a±e_b (a < b), then the two time shifts."""
    if not h > 0:
        raise PreconditionError(f"Stencil step must be positive, got h={h}")
    eye = np.eye(n)
    offsets = [(np.zeros(n), 0.0)]
    for a in range(n):
        offsets += [(h * eye[a], 0.0), (-h * eye[a], 0.0)]
    for a in range(n):
        for b in range(a + 1, n):
            for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                offsets.append((h * (sa * eye[a] + sb * eye[b]), 0.0))
    offsets += [(np.zeros(n), h), (np.zeros(n), -h)]
    return offsets


def _apply_stencil(values: np.ndarray, n: int, h: float, coeffs: LameCoefficients) -> np.ndarray:
    """
    L applied by central differences to stencil samples.

    values[k, ..., i, rest] holds component i at offset k; the component axis
    sits right after the leading batch axes given by `...`.
    """
    center = values[0]
    second = np.zeros((n, n) + center.shape)  # [a, b, ...] = ∂_a∂_b
    for a in range(n):
        second[a, a] = (values[1 + 2 * a] - 2.0 * center + values[2 + 2 * a]) / h ** 2
    q = 1 + 2 * n
    for a in range(n):
        for b in range(a + 1, n):
            pp, pm, mp, mm = values[q: q + 4]
            second[a, b] = second[b, a] = (pp - pm - mp + mm) / (4.0 * h ** 2)
            q += 4
    dt = (values[-2] - values[-1]) / (2.0 * h)
    laplacian = sum(second[a, a] for a in range(n))
    grad_div = np.zeros_like(center)
    for i in range(n):
        grad_div[i] = sum(second[i, m][m] for m in range(n))
    return dt - coeffs.mu * laplacian - (coeffs.mu + coeffs.lam) * grad_div


def lame_pde_residual_batch(points, times, coeffs: LameCoefficients, h: float) -> np.ndarray:
    """
    Central-difference value of ∂_tΦ − μΔΦ − (μ+λ)∇div Φ (columnwise) at many points.

    Second-order stencil; returns shape (P, n, n).
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    t = np.atleast_1d(np.asarray(times, dtype=float))
    p, n = x.shape
    offsets = _stencil_offsets(n, h)
    if np.any(t - h <= 0):
        raise PreconditionError("Finite-difference stencil crosses t = 0")
    z = np.concatenate([x + dx for dx, _ in offsets])
    s = np.concatenate([t + dt for _, dt in offsets])
    phi = lame_kernel_jet(z, s, coeffs, 0)[0].reshape(len(offsets), p, n, n)
    # component (row) axis first so the stencil sees [k, i, p, j]
    residual = _apply_stencil(phi.transpose(0, 2, 1, 3), n, h, coeffs)
    return residual.transpose(1, 0, 2)


def field_pde_residual(func, x, t: float, coeffs: LameCoefficients, h: float) -> np.ndarray:
    """Central-difference L u at one point for a vector field given as func(x, t) -> (n,)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    values = np.array([np.asarray(func(x + dx, t + dt), dtype=float) for dx, dt in _stencil_offsets(n, h)])
    return _apply_stencil(values, n, h, coeffs)


def lame_pde_residual(point, coeffs: LameCoefficients, h: float) -> np.ndarray:
    """Finite-difference residual of L applied to Φ at one off-pole point (x, t)."""
    x, t = point
    x = np.asarray(x, dtype=float)
    if t <= 0:
        raise PreconditionError(f"Residual needs t > 0, got t={t}")
    return lame_pde_residual_batch(x[None, :], np.array([float(t)]), coeffs, h)[0]
