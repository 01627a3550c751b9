"""Geometric constants and the eigenvalue inequalities for the clamped ``L_nu^2`` problem.

Every inequality has the shape ``LHS(Lambda) <= RHS(Lambda_1, n, constants)``.
The infimum over immersions appearing in the constants is replaced by the
sampled maximum for the immersion at hand, which can only enlarge the RHS.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import AssembledForms, DomainSpec, MeshC1, _element_data, PERIODIC
from .errors import InsufficientSpectrum, NotATranslator, RankDeficiencyWarning, VariantMismatch
from .geometry import point_geometry

REPORT_RTOL = 1e-8
FORMULA_RTOL = 1e-6
DEFAULT_DELTAS = (0.25, 0.5, 1.0, 2.0, 4.0)
FIELD_DIMS = {"R": 1, "C": 2, "Q": 4}


# ---------------------------------------------------------------------------
# constants


@dataclass(frozen=True)
class GeometricConstants:
    n: int
    ambient_dim: int
    max_H: float
    max_nH2: float
    max_nu_top: float
    c1_hat: float
    c1_tilde: float
    c2_hat: float
    c3: float
    c4_tilde: float
    c5: float
    on_unit_sphere: bool
    c4_hat: float | None = None
    max_H_bar: float | None = None
    c6_hat: float | None = None
    c6_tilde: float | None = None
    sample_count: int = 0
    resolution: tuple = ()

    def as_dict(self) -> dict:
        return asdict(self)


def sample_grid(domain: DomainSpec, resolution, mesh: MeshC1 | None = None) -> np.ndarray:
    """Closed lattice over the domain, plus the mesh quadrature points if given.

    Clamped coordinates include both end points; periodic ones drop the
    duplicate end.  Lattices with resolutions ``r`` and ``2r`` are nested.
    """
    res = np.broadcast_to(np.atleast_1d(resolution), (len(domain.box),))
    axes = []
    for (a, b), flag, r in zip(domain.box, domain.bc, res):
        pts = np.linspace(a, b, int(r) + 1)
        axes.append(pts[:-1] if flag == PERIODIC else pts)
    grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    if mesh is not None:
        qpts = _element_data(mesh)[0]
        grid = np.vstack([grid, qpts.reshape(-1, qpts.shape[-1])])
    return grid


def constants(imm, drift, domain: DomainSpec, points, projective_field: str | None = None,
              sphere_tol: float = 1e-10, resolution=()) -> GeometricConstants:
    """Sampled geometric constants for the given immersion, drift and domain."""
    geo = point_geometry(imm, drift, points)
    n = imm.intrinsic_dim
    nH2 = (n * geo.mean_curvature) ** 2
    vt = geo.drift_tangent_norm
    max_vt = float(vt.max())
    radius_err = np.abs(np.linalg.norm(geo.position, axis=1) - 1.0).max()
    on_sphere = bool(radius_err <= sphere_tol)
    c4_hat = max_hbar = None
    if on_sphere:
        hbar2 = np.clip(geo.mean_curvature**2 - 1.0, 0.0, None)
        max_hbar = float(np.sqrt(hbar2.max()))
        c4_hat = 0.25 * float((n**2 * (hbar2 + 1.0)).max())
    c6_hat = c6_tilde = None
    if projective_field is not None:
        c6_hat, c6_tilde = projective_constants(n, projective_field, float(geo.mean_curvature.max()), max_vt)
    return GeometricConstants(
        n=n,
        ambient_dim=imm.ambient_dim,
        max_H=float(geo.mean_curvature.max()),
        max_nH2=float(nH2.max()),
        max_nu_top=max_vt,
        c1_hat=0.25 * float(nH2.max()),
        c1_tilde=0.25 * max_vt,
        c2_hat=float((nH2 + 3 * vt**2).max()) / 6.0,
        c3=0.25 * max_vt,
        c4_tilde=0.25 * max_vt,
        c5=0.25 * max_vt,
        on_unit_sphere=on_sphere,
        c4_hat=c4_hat,
        max_H_bar=max_hbar,
        c6_hat=c6_hat,
        c6_tilde=c6_tilde,
        sample_count=len(geo.points),
        resolution=tuple(int(r) for r in np.atleast_1d(resolution)),
    )


def projective_constants(n: int, field: str, max_hat_H: float, max_nu_top: float) -> tuple[float, float]:
    """``(C_6, C~_6)`` for a submanifold of ``FP^m`` with ``F`` in {R, C, Q}."""
    if n < 1:
        raise ValueError("n must be positive")
    try:
        d = FIELD_DIMS[field]
    except KeyError:
        raise ValueError(f"field must be one of {sorted(FIELD_DIMS)}") from None
    return 0.25 * (n**2 * max_hat_H**2 + 2 * n * (n + d)), 0.25 * max_nu_top


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class BoundReport:
    theorem: str
    n: int
    eigenvalues: tuple
    constants: dict
    lhs: float
    rhs: float
    note: str = ""
    margin: float = field(init=False)
    passed: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "margin", self.rhs - self.lhs)
        object.__setattr__(self, "passed", bool(self.margin >= -REPORT_RTOL * abs(self.rhs)))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["eigenvalues"] = list(self.eigenvalues)
        return d


def _eigs(spectrum, need: int) -> np.ndarray:
    lam = np.asarray(getattr(spectrum, "eigenvalues", spectrum), dtype=float)
    if lam.size < need:
        raise InsufficientSpectrum(f"need {need} eigenvalues, have {lam.size}")
    return lam


def gap_sum(lam, n: int) -> float:
    """``sum_{i=1}^n (Lambda_{i+1} - Lambda_1)^{1/2}``; tiny negative gaps count as zero."""
    lam = np.asarray(lam, dtype=float)
    return float(np.sqrt(np.clip(lam[1 : n + 1] - lam[0], 0.0, None)).sum())


def shifted_gap_sum(lam, n: int) -> float:
    lam = np.asarray(lam, dtype=float)
    return gap_sum(lam, n) - n * np.sqrt(lam[0])


def four_form(lam1: float, n: int, extra: float) -> float:
    """``4 {(L^{1/2} + T)[(n/2 + 1) L^{1/2} + T]}^{1/2}`` with ``T = extra``."""
    r = np.sqrt(lam1)
    return float(4.0 * np.sqrt((r + extra) * ((n / 2 + 1) * r + extra)))


def six_form(lam1: float, n: int, extra: float) -> float:
    r = np.sqrt(lam1)
    return float(6.0 * np.sqrt((r + extra) * ((n / 3 + 1) * r + extra)))


def drift_extra(lam1: float, c: float, c_tilde: float) -> float:
    """``4 C~ Lambda_1^{1/4} + 4 C~^2 + C``, the common additive term."""
    return 4 * c_tilde * lam1**0.25 + 4 * c_tilde**2 + c


def thm11_rhs(lam1, n, c1, c1_tilde):
    return four_form(lam1, n, drift_extra(lam1, c1, c1_tilde))


def cor11_rhs(lam1, n, c1, c1_tilde):
    return 4.0 * (np.sqrt(lam1) + drift_extra(lam1, c1, c1_tilde))


def cor12_rhs(lam1, n, c2):
    return six_form(lam1, n, c2)


def cor13_rhs(lam1, n, c2):
    return 6.0 * (np.sqrt(lam1) + c2)


def optimal_delta(lam1: float, n: int, extra: float) -> float:
    """Minimiser of ``4 (d/2 + 1/(2d)) K + n d Lambda_1^{1/2}`` with ``K = Lambda_1^{1/2} + extra``."""
    r = np.sqrt(lam1)
    return float(np.sqrt((r + extra) / ((n / 2 + 1) * r + extra)))


def delta_bound(delta: float, lam1: float, n: int, extra: float) -> float:
    r = np.sqrt(lam1)
    return float(4 * (delta / 2 + 1 / (2 * delta)) * (r + extra) + n * delta * r)


def _snapshot(c: GeometricConstants | None, *keys) -> dict:
    if c is None:
        return {}
    return {k: getattr(c, k) for k in keys}


def thm11_check(spectrum, consts: GeometricConstants, n: int | None = None) -> BoundReport:
    n = consts.n if n is None else n
    lam = _eigs(spectrum, n + 1)
    return BoundReport("thm1.1", n, tuple(lam[: n + 1]), _snapshot(consts, "c1_hat", "c1_tilde"),
                       gap_sum(lam, n), thm11_rhs(lam[0], n, consts.c1_hat, consts.c1_tilde))


def cor11_check(spectrum, consts: GeometricConstants, n: int | None = None) -> BoundReport:
    n = consts.n if n is None else n
    lam = _eigs(spectrum, n + 1)
    return BoundReport("cor1.1", n, tuple(lam[: n + 1]), _snapshot(consts, "c1_hat", "c1_tilde"),
                       shifted_gap_sum(lam, n), cor11_rhs(lam[0], n, consts.c1_hat, consts.c1_tilde))


def cor12_check(spectrum, consts: GeometricConstants, n: int | None = None) -> BoundReport:
    n = consts.n if n is None else n
    lam = _eigs(spectrum, n + 1)
    return BoundReport("cor1.2", n, tuple(lam[: n + 1]), _snapshot(consts, "c2_hat"),
                       gap_sum(lam, n), cor12_rhs(lam[0], n, consts.c2_hat))


def cor13_check(spectrum, consts: GeometricConstants, n: int | None = None) -> BoundReport:
    n = consts.n if n is None else n
    lam = _eigs(spectrum, n + 1)
    return BoundReport("cor1.3", n, tuple(lam[: n + 1]), _snapshot(consts, "c2_hat"),
                       shifted_gap_sum(lam, n), cor13_rhs(lam[0], n, consts.c2_hat))


# translator bounds: universal constants, no sampling


def _translator_gate(residual, gate):
    if residual is not None and not residual <= gate:
        raise NotATranslator(f"translator residual {residual:.3g} exceeds {gate:g}")


def _n_note(n):
    return "" if n >= 2 else "stated for n >= 2; evaluated for n = 1 without that hypothesis"


def thm51_check(spectrum, n: int, residual: float | None = None, gate: float = 1e-9) -> BoundReport:
    _translator_gate(residual, gate)
    lam = _eigs(spectrum, n + 1)
    extra = lam[0] ** 0.25 + n**2 / 4
    return BoundReport("thm5.1", n, tuple(lam[: n + 1]), {}, gap_sum(lam, n), four_form(lam[0], n, extra))


def cor51_check(spectrum, n: int, residual: float | None = None, gate: float = 1e-9) -> BoundReport:
    _translator_gate(residual, gate)
    lam = _eigs(spectrum, n + 1)
    rhs = 4 * (np.sqrt(lam[0]) + lam[0] ** 0.25 + n**2 / 4)
    return BoundReport("cor5.1", n, tuple(lam[: n + 1]), {}, shifted_gap_sum(lam, n), float(rhs))


def cor52_check(spectrum, n: int, residual: float | None = None, gate: float = 1e-9) -> BoundReport:
    _translator_gate(residual, gate)
    lam = _eigs(spectrum, n + 1)
    return BoundReport("cor5.2", n, tuple(lam[: n + 1]), {}, gap_sum(lam, n),
                       six_form(lam[0], n, n**2 / 6), note=_n_note(n))


def cor53_check(spectrum, n: int, residual: float | None = None, gate: float = 1e-9) -> BoundReport:
    _translator_gate(residual, gate)
    lam = _eigs(spectrum, n + 1)
    rhs = 6 * (np.sqrt(lam[0]) + n**2 / 6)
    return BoundReport("cor5.3", n, tuple(lam[: n + 1]), {}, shifted_gap_sum(lam, n), float(rhs), note=_n_note(n))


# further applications

VARIANTS = {"minimal": "cor6.1", "sphere": "cor6.2", "unit_sphere": "cor6.3"}


def cor6x_check(spectrum, consts: GeometricConstants, n: int | None, variant: str,
                minimal_tol: float = 1e-8, hbar_tol: float = 1e-6) -> BoundReport:
    n = consts.n if n is None else n
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {sorted(VARIANTS)}")
    lam = _eigs(spectrum, n + 1)
    l1 = lam[0]
    if variant == "minimal":
        if consts.max_H > minimal_tol:
            raise VariantMismatch(f"minimal variant needs H = 0, sampled max H = {consts.max_H:.3g}")
        extra = drift_extra(l1, 0.0, consts.c3)
        snap = _snapshot(consts, "c3")
    elif variant == "sphere":
        if not consts.on_unit_sphere:
            raise VariantMismatch("sphere variant needs a submanifold of the unit sphere")
        extra = drift_extra(l1, consts.c4_hat, consts.c4_tilde)
        snap = _snapshot(consts, "c4_hat", "c4_tilde")
    else:
        if not (consts.on_unit_sphere and consts.ambient_dim == n + 1 and consts.max_H_bar <= hbar_tol):
            raise VariantMismatch("unit-sphere variant needs a domain of S^n in R^(n+1)")
        extra = drift_extra(l1, n**2 / 4, consts.c5)
        snap = _snapshot(consts, "c5")
    return BoundReport(VARIANTS[variant], n, tuple(lam[: n + 1]), snap, gap_sum(lam, n), four_form(l1, n, extra))


def cor64_check(spectrum, n: int, c6: float, c6_tilde: float) -> BoundReport:
    lam = _eigs(spectrum, n + 1)
    return BoundReport("cor6.4", n, tuple(lam[: n + 1]), {"c6_hat": c6, "c6_tilde": c6_tilde},
                       gap_sum(lam, n), four_form(lam[0], n, drift_extra(lam[0], c6, c6_tilde)))


# ---------------------------------------------------------------------------
# Gram-Schmidt trial functions and the general formula


@dataclass
class TrialFunctions:
    """Rotated coordinate functions ``h_a = sum_c tau[a, c] y^c``."""

    tau: np.ndarray
    D: np.ndarray
    R: np.ndarray
    rank: int
    orthogonality_residual: float
    grad_sum_residual: float  # max |sum |grad h|^2 - n| over quadrature points
    lnu_sum_residual: float  # max |sum (L h)^2 - (n^2 H^2 + |nu^T|^2)|

    def fields(self, geo):
        """``(h, grad_h, lnu_h)`` at the points of a PointGeometry.

        Shapes ``(m, N)``, ``(m, N, n)`` (parameter components), ``(m, N)``.
        """
        h = geo.position @ self.tau.T
        grad = np.einsum("ac,mci->mai", self.tau, geo.jacobian)
        lnu = (geo.laplace_y + geo.drift_tangent_ambient) @ self.tau.T
        return h, grad, lnu

    def identity_residuals(self, geo) -> tuple[float, float]:
        _, grad, lnu = self.fields(geo)
        gn = np.einsum("mai,mij,maj->m", grad, geo.metric_inv, grad)
        target = (geo.n * geo.mean_curvature) ** 2 + geo.drift_tangent_norm**2
        return float(np.abs(gn - geo.n).max()), float(np.abs((lnu**2).sum(axis=1) - target).max())


def gram_schmidt_trial_functions(forms: AssembledForms, spectrum, rank_rtol: float = 1e-10) -> TrialFunctions:
    """Orthogonalise the coordinate functions against ``u_1 u_{b+1}``.

    Builds ``d[a, b] = int y^a u_1 u_{b+1} dmu`` and an orthogonal ``tau``
    with ``tau D`` upper triangular, so ``int h_a u_1 u_{b+1} dmu = 0`` for
    ``b < a``.
    """
    N = forms.imm.ambient_dim
    if len(spectrum) < N + 1:
        raise InsufficientSpectrum(f"Gram-Schmidt needs {N + 1} eigenpairs, have {len(spectrum)}")
    V = spectrum.eigenvectors
    u = [forms.evaluate(V[:, j]).value for j in range(N + 1)]
    y = forms.geometry_field("position")  # (E, q, N)
    W = forms.qweights
    D = np.einsum("eqa,eq,beq->ab", y, W * u[0], np.stack(u[1:]))
    Q0, R0 = np.linalg.qr(D)
    tau = Q0.T
    diag = np.abs(np.diag(R0))
    rank = int(np.sum(diag > rank_rtol * max(diag.max(), np.abs(D).max(), 1e-300)))
    if rank < N:
        warnings.warn(f"Gram-Schmidt matrix has numerical rank {rank} < {N}", RankDeficiencyWarning, stacklevel=2)
    I = tau @ D
    below = np.tril(np.ones((N, N), dtype=bool), -1)
    orth = float(np.abs(I[below]).max()) if N > 1 else 0.0
    tf = TrialFunctions(tau, D, I, rank, orth, 0.0, 0.0)
    tf.grad_sum_residual, tf.lnu_sum_residual = tf.identity_residuals(forms.geometry)
    return tf


@dataclass
class GeneralFormulaReport:
    rows: list  # dicts with i, delta, lhs, rhs, margin
    worst_margin: float
    passed: bool
    upsilon_hat: float
    upsilon_bound: float
    upsilon_ok: bool
    phi_hat: float
    phi_hat_from_dirichlet: float
    dirichlet: float
    delta_star: float
    delta_grid_argmin: float
    delta_bound_at_star: float
    thm11_rhs: float
    orthogonality_residual: float

    def as_dict(self) -> dict:
        return asdict(self)


def general_formula_check(forms: AssembledForms, spectrum, trial: TrialFunctions,
                          deltas=DEFAULT_DELTAS, consts: GeometricConstants | None = None,
                          rtol: float = FORMULA_RTOL) -> GeneralFormulaReport:
    """Evaluate both sides of the general formula for every trial function and delta."""
    N = forms.imm.ambient_dim
    n = forms.n
    lam = _eigs(spectrum, N + 1)
    geo = forms.geometry
    W = forms.qweights
    E, q = W.shape
    u1 = forms.evaluate(spectrum.eigenvectors[:, 0])
    ug = u1.grad.reshape(E * q, n)
    uv = u1.value.reshape(E * q)
    ul = u1.lnu.reshape(E * q)
    w = W.reshape(E * q)

    _, hgrad, hl = trial.fields(geo)
    hgrad_norm = np.einsum("mai,mij,maj->ma", hgrad, geo.metric_inv, hgrad)
    h_dot_u = np.einsum("mai,mij,mj->ma", hgrad, geo.metric_inv, ug)
    ups = (uv[:, None] * hl + 2 * h_dot_u) ** 2
    phi = hgrad_norm * (uv * ul)[:, None]
    int_ups = w @ ups
    int_phi = w @ phi
    int_u2grad = w @ (uv[:, None] ** 2 * hgrad_norm)

    extra = drift_extra(lam[0], consts.c1_hat, consts.c1_tilde) if consts is not None else 0.0
    dstar = optimal_delta(lam[0], n, extra)
    grid = tuple(deltas) + (dstar,)
    rows = []
    for i in range(N):
        gap = np.sqrt(max(lam[i + 1] - lam[0], 0.0))
        lhs = gap * int_u2grad[i]
        for d in grid:
            rhs = (d / 2 + 1 / (2 * d)) * int_ups[i] - d * int_phi[i]
            rows.append({"i": i + 1, "delta": float(d), "lhs": float(lhs), "rhs": float(rhs),
                         "margin": float(rhs - lhs), "ok": bool(lhs <= rhs + rtol * abs(rhs))})

    grad_u2 = np.einsum("mi,mij,mj->m", ug, geo.metric_inv, ug)
    target = (n * geo.mean_curvature) ** 2 + 3 * geo.drift_tangent_norm**2
    ups_bound = float(w @ (6 * grad_u2 + uv**2 * target))
    ups_hat = float(int_ups.sum())
    dirichlet = float(w @ grad_u2)
    bounds = [delta_bound(d, lam[0], n, extra) for d in grid]
    grid_best = int(np.argmin(bounds[:-1]))
    return GeneralFormulaReport(
        rows=rows,
        worst_margin=min(r["margin"] for r in rows),
        passed=all(r["ok"] for r in rows) and ups_hat <= ups_bound * (1 + rtol),
        upsilon_hat=ups_hat,
        upsilon_bound=ups_bound,
        upsilon_ok=ups_hat <= ups_bound * (1 + rtol),
        phi_hat=float(int_phi.sum()),
        phi_hat_from_dirichlet=-n * dirichlet,
        dirichlet=dirichlet,
        delta_star=dstar,
        delta_grid_argmin=float(grid[grid_best]),
        delta_bound_at_star=bounds[-1],
        thm11_rhs=four_form(lam[0], n, extra),
        orthogonality_residual=trial.orthogonality_residual,
    )
