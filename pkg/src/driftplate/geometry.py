"""Parametrically immersed manifolds and their pointwise geometry.

An immersion is an analytic chart ``X: box -> R^N`` (``N = n + p``) with
exact first and second parameter derivatives.  All evaluators are vectorised:
they take an ``(m, n)`` array of parameter points and return arrays with a
leading axis of length ``m``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import SingularMetric

Evaluator = Callable[[np.ndarray], np.ndarray]

# condition number of g above which a chart point is treated as degenerate
METRIC_COND_LIMIT = 1e12


@dataclass(frozen=True)
class ParametricImmersion:
    name: str
    intrinsic_dim: int
    ambient_dim: int
    param_box: tuple[tuple[float, float], ...]
    periodic: tuple[bool, ...]
    position: Evaluator
    jacobian: Evaluator
    hessian: Evaluator
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.intrinsic_dim < 1 or self.ambient_dim < self.intrinsic_dim:
            raise ValueError("need 1 <= n <= n + p")
        if len(self.param_box) != self.intrinsic_dim or len(self.periodic) != self.intrinsic_dim:
            raise ValueError("param_box and periodic must have one entry per coordinate")
        for a, b in self.param_box:
            if not b > a:
                raise ValueError(f"empty parameter interval [{a}, {b}]")

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.intrinsic_dim

    def affine(self, rotation=None, scale: float = 1.0, shift=None, name=None) -> "ParametricImmersion":
        """Return the immersion ``u -> scale * Q X(u) + shift``."""
        N = self.ambient_dim
        Q = np.eye(N) if rotation is None else np.asarray(rotation, dtype=float)
        c = np.zeros(N) if shift is None else np.asarray(shift, dtype=float)
        if Q.shape != (N, N) or c.shape != (N,):
            raise ValueError("rotation/shift do not match the ambient dimension")
        pos, jac, hes = self.position, self.jacobian, self.hessian
        return ParametricImmersion(
            name=name or f"{self.name}*",
            intrinsic_dim=self.intrinsic_dim,
            ambient_dim=N,
            param_box=self.param_box,
            periodic=self.periodic,
            position=lambda u: scale * pos(u) @ Q.T + c,
            jacobian=lambda u: scale * np.einsum("ab,mbi->mai", Q, jac(u)),
            hessian=lambda u: scale * np.einsum("ab,mbij->maij", Q, hes(u)),
            params=dict(self.params),
        )


@dataclass(frozen=True)
class DriftSpec:
    """Constant ambient drift vector ``nu``; ``unit_flag`` marks the translator case."""

    nu: np.ndarray
    unit_flag: bool = False

    def __post_init__(self):
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        if nu.ndim != 1:
            raise ValueError("drift must be a vector")
        object.__setattr__(self, "nu", nu)
        if self.unit_flag and abs(np.linalg.norm(nu) - 1.0) > 1e-14:
            raise ValueError(f"unit drift has norm {np.linalg.norm(nu)!r}")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.nu))


@dataclass(frozen=True)
class PointGeometry:
    """Batched pointwise geometry; every field has a leading sample axis."""

    points: np.ndarray  # (m, n) parameter points
    position: np.ndarray  # (m, N)
    jacobian: np.ndarray  # (m, N, n)
    metric: np.ndarray  # (m, n, n)
    metric_inv: np.ndarray  # (m, n, n)
    sqrt_det: np.ndarray  # (m,)
    christoffel: np.ndarray  # (m, k, i, j) second kind
    laplace_y: np.ndarray  # (m, N)
    mean_curvature: np.ndarray  # (m,)
    drift_tangent: np.ndarray  # (m, n) parameter components of nu^T
    drift_tangent_ambient: np.ndarray  # (m, N)
    drift_tangent_norm: np.ndarray  # (m,)
    weight: np.ndarray  # (m,) <nu, X>

    @property
    def n(self) -> int:
        return self.metric.shape[-1]

    @property
    def first_order(self) -> np.ndarray:
        """Coefficients ``b^k`` with ``L_nu f = g^ij d_ij f + b^k d_k f``."""
        return -np.einsum("mij,mkij->mk", self.metric_inv, self.christoffel) + self.drift_tangent

    @property
    def tangent_projector(self) -> np.ndarray:
        """Ambient orthogonal projector onto the tangent space, ``J g^-1 J^T``."""
        J = self.jacobian
        return np.einsum("mai,mij,mbj->mab", J, self.metric_inv, J)

    def ambient_gradient(self, dparam: np.ndarray) -> np.ndarray:
        """Ambient vector of the gradient of a function with parameter gradient ``dparam``."""
        return np.einsum("mai,mij,mj->ma", self.jacobian, self.metric_inv, dparam)

    def lnu(self, dparam: np.ndarray, hparam: np.ndarray) -> np.ndarray:
        """Apply ``L_nu`` given parameter gradients ``(m, n)`` and Hessians ``(m, n, n)``."""
        return np.einsum("mij,mij->m", self.metric_inv, hparam) + np.einsum(
            "mk,mk->m", self.first_order, dparam
        )


def _as_points(u, n: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 0 or (u.ndim == 1 and n == 1):
        u = u.reshape(-1, 1)
    elif u.ndim == 1 and u.size == n:
        u = u.reshape(1, n)
    if u.ndim != 2 or u.shape[1] != n:
        raise ValueError(f"expected parameter points of shape (m, {n}), got {u.shape}")
    return u


def point_geometry(imm: ParametricImmersion, drift: DriftSpec, u) -> PointGeometry:
    """Evaluate metric, Laplacian of the coordinates, H and the tangential drift.

    Christoffel symbols come from the Gauss formula
    ``Gamma^k_ij = g^kl <d_l X, d_ij X>``, so the Laplacian
    ``Delta y = g^ij (d_ij X - Gamma^k_ij d_k X)`` is exact given the chart's
    second derivatives.
    """
    n, N = imm.intrinsic_dim, imm.ambient_dim
    if drift.nu.shape != (N,):
        raise ValueError(f"drift has dimension {drift.nu.size}, ambient dimension is {N}")
    pts = _as_points(u, n)
    X = imm.position(pts)
    J = imm.jacobian(pts)
    Hx = imm.hessian(pts)

    g = np.einsum("mai,maj->mij", J, J)
    det = np.linalg.det(g)
    if np.any(~np.isfinite(det)) or np.any(det <= 0):
        bad = pts[np.argmin(det)]
        raise SingularMetric(f"det g <= 0 at parameter point {bad}")
    cond = np.linalg.cond(g)
    if np.any(cond > METRIC_COND_LIMIT):
        bad = pts[np.argmax(cond)]
        raise SingularMetric(f"metric condition number {cond.max():.3g} at {bad}")
    ginv = np.linalg.inv(g)

    gamma = np.einsum("mkl,mal,maij->mkij", ginv, J, Hx)
    normal_hess = Hx - np.einsum("mak,mkij->maij", J, gamma)
    lap_y = np.einsum("mij,maij->ma", ginv, normal_hess)
    H = np.linalg.norm(lap_y, axis=1) / n

    c = np.einsum("mij,maj,a->mi", ginv, J, drift.nu)
    nu_top = np.einsum("mai,mi->ma", J, c)
    return PointGeometry(
        points=pts,
        position=X,
        jacobian=J,
        metric=g,
        metric_inv=ginv,
        sqrt_det=np.sqrt(det),
        christoffel=gamma,
        laplace_y=lap_y,
        mean_curvature=H,
        drift_tangent=c,
        drift_tangent_ambient=nu_top,
        drift_tangent_norm=np.linalg.norm(nu_top, axis=1),
        weight=X @ drift.nu,
    )


# ---------------------------------------------------------------------------
# probe functions


@dataclass(frozen=True)
class Probe:
    """Smooth scalar function on the chart with analytic parameter derivatives."""

    value: Evaluator
    grad: Evaluator
    hess: Evaluator


def polynomial_probe(coeffs: dict[tuple[int, ...], float], center=None) -> Probe:
    """Polynomial ``sum_a c_a (u - center)^a`` keyed by multi-index ``a``."""
    items = [(np.asarray(a, dtype=int), float(c)) for a, c in coeffs.items()]
    n = len(items[0][0])
    u0 = np.zeros(n) if center is None else np.asarray(center, dtype=float)

    def mono(u, a):
        return np.prod(np.where(a >= 0, u ** np.maximum(a, 0), 0.0), axis=-1)

    def value(u):
        u = _as_points(u, n) - u0
        return sum(c * mono(u, a) for a, c in items)

    def grad(u):
        u = _as_points(u, n) - u0
        out = np.zeros_like(u)
        for a, c in items:
            for i in range(n):
                if a[i] == 0:
                    continue
                b = a.copy()
                b[i] -= 1
                out[:, i] += c * a[i] * mono(u, b)
        return out

    def hess(u):
        u = _as_points(u, n) - u0
        out = np.zeros((u.shape[0], n, n))
        for a, c in items:
            for i in range(n):
                for j in range(n):
                    b = a.copy()
                    f = b[i]
                    b[i] -= 1
                    f *= b[j]
                    b[j] -= 1
                    if f == 0:
                        continue
                    out[:, i, j] += c * f * mono(u, b)
        return out

    return Probe(value, grad, hess)


def random_polynomial_probe(rng: np.random.Generator, n: int, degree: int = 3, center=None) -> Probe:
    idx = [a for a in np.ndindex(*([degree + 1] * n)) if sum(a) <= degree]
    return polynomial_probe({a: rng.normal() for a in idx}, center=center)


# ---------------------------------------------------------------------------
# identity checks


@dataclass(frozen=True)
class IdentityReport:
    sample_count: int
    grad_coordinates: float  # |sum <grad y, grad y> - n|
    laplace_norm: float  # |sum (Delta y)^2 - n^2 H^2|
    tangential_mean_curvature: float  # |sum Delta y grad y|
    drift_projection: float  # |sum <grad y, nu>^2 - |nu^T|^2|
    bilinear_resolution: float  # |sum <grad y, grad u><grad y, grad w> - <grad u, grad w>|
    cauchy_schwarz: float  # max(0, sum <grad y, grad u><grad y, nu> - |grad u||nu^T|)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @property
    def worst(self) -> float:
        return max(v for k, v in self.as_dict().items() if k != "sample_count")


def identity_suite(imm, drift, sample_points, probes: Sequence[Probe] = ()) -> IdentityReport:
    """Maximum violations of the coordinate-function identities at the samples."""
    geo = point_geometry(imm, drift, sample_points)
    n = imm.intrinsic_dim
    J, ginv = geo.jacobian, geo.metric_inv
    # grad y^alpha in parameter components is g^ij d_j y^alpha
    grad_y = np.einsum("mij,maj->mai", ginv, J)
    ip = lambda a, b: np.einsum("m...i,mij,m...j->m...", a, geo.metric, b)

    s_n = np.abs(ip(grad_y, grad_y).sum(axis=1) - n).max()
    lap2 = (geo.laplace_y**2).sum(axis=1)
    s_h = np.abs(lap2 - (n * geo.mean_curvature) ** 2).max()
    tang = np.einsum("ma,mai->mi", geo.laplace_y, grad_y)
    s_t = np.sqrt(ip(tang, tang).clip(min=0)).max()
    # <grad y^alpha, nu> in the ambient inner product
    y_nu = np.einsum("mai,mbi,b->ma", grad_y, J, drift.nu)
    s_v = np.abs((y_nu**2).sum(axis=1) - geo.drift_tangent_norm**2).max()

    s_b = 0.0
    s_cs = 0.0
    for k, pu in enumerate(probes):
        du = pu.grad(geo.points)
        gu = np.einsum("mij,mj->mi", ginv, du)
        y_u = np.einsum("mai,mij,mj->ma", grad_y, geo.metric, gu)
        grad_norm = np.sqrt(ip(gu, gu).clip(min=0))
        lhs = (y_u * y_nu).sum(axis=1)
        s_cs = max(s_cs, float(np.max(lhs - grad_norm * geo.drift_tangent_norm).clip(min=0)))
        for pw in probes[k:]:
            gw = np.einsum("mij,mj->mi", ginv, pw.grad(geo.points))
            y_w = np.einsum("mai,mij,mj->ma", grad_y, geo.metric, gw)
            s_b = max(s_b, float(np.abs((y_u * y_w).sum(axis=1) - ip(gu, gw)).max()))

    return IdentityReport(
        sample_count=len(geo.points),
        grad_coordinates=float(s_n),
        laplace_norm=float(s_h),
        tangential_mean_curvature=float(s_t),
        drift_projection=float(s_v),
        bilinear_resolution=s_b,
        cauchy_schwarz=s_cs,
    )


def mean_curvature_vector(geo: PointGeometry) -> np.ndarray:
    return geo.laplace_y / geo.n


def translator_residual(imm, drift, sample_points) -> float:
    """Max over samples of ``|H - nu0^N|`` (ambient norm)."""
    if not drift.unit_flag:
        raise ValueError("translator residual needs a unit drift (unit_flag=True)")
    geo = point_geometry(imm, drift, sample_points)
    nu_normal = drift.nu[None, :] - geo.drift_tangent_ambient
    return float(np.linalg.norm(mean_curvature_vector(geo) - nu_normal, axis=1).max())


def lnu_apply(imm, drift, probe: Probe, u) -> np.ndarray:
    """``L_nu f = Delta_g f + <nu, grad f>`` for a probe function at parameter points."""
    geo = point_geometry(imm, drift, u)
    return geo.lnu(probe.grad(geo.points), probe.hess(geo.points))


def interior_samples(box, count: int, rng: np.random.Generator, margin: float = 1e-3) -> np.ndarray:
    """Uniform random points strictly inside ``box``."""
    lo = np.array([a for a, _ in box], dtype=float)
    hi = np.array([b for _, b in box], dtype=float)
    span = hi - lo
    return lo + span * margin + rng.random((count, len(lo))) * span * (1 - 2 * margin)
