"""Clamped C^1 finite-element discretisation of the weighted forms.

Bilinear forms on the clamped space, with ``dmu = e^{<nu, X>} dv``:

    a(u, v) = int (L_nu u)(L_nu v) dmu
    m(u, v) = int u v dmu
    G(u, v) = int <grad u, grad v>_g dmu

Elements are cubic Hermite in 1D and tensor-product bicubic Hermite
(Bogner-Fox-Schmit) in 2D on uniform parameter grids.  Derivative degrees of
freedom are taken with respect to the chart parameters.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import EmptyInterior
from .geometry import DriftSpec, ParametricImmersion, PointGeometry, Probe, lnu_apply, point_geometry

__all__ = [
    "DomainSpec",
    "MeshC1",
    "AssembledForms",
    "FEField",
    "assemble",
    "lnu_apply",
    "self_adjointness_check",
    "polynomial_bump",
    "eigenfunction_functionals",
    "gauss_legendre",
    "hermite_basis",
]

CLAMPED = "clamped"
PERIODIC = "periodic"


def gauss_legendre(q: int, a: float = 0.0, b: float = 1.0):
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(q)
    return a + (b - a) * (x + 1) / 2, w * (b - a) / 2


def hermite_basis(s: np.ndarray, h: float):
    """Cubic Hermite shape functions on an element of length ``h``.

    ``s`` are reference coordinates in [0, 1].  Returns values, first and
    second derivatives with respect to the physical parameter, each of shape
    ``(len(s), 4)`` ordered ``(value_left, slope_left, value_right, slope_right)``.
    """
    s = np.asarray(s, dtype=float)
    s2, s3 = s * s, s * s * s
    N = np.column_stack([1 - 3 * s2 + 2 * s3, h * (s - 2 * s2 + s3), 3 * s2 - 2 * s3, h * (s3 - s2)])
    dN = np.column_stack([-6 * s + 6 * s2, h * (1 - 4 * s + 3 * s2), 6 * s - 6 * s2, h * (3 * s2 - 2 * s)]) / h
    d2N = np.column_stack([-6 + 12 * s, h * (-4 + 6 * s), 6 - 12 * s, h * (6 * s - 2)]) / h**2
    return N, dN, d2N


@dataclass(frozen=True)
class DomainSpec:
    """Sub-box of the parameter box with a boundary flag per coordinate."""

    box: tuple[tuple[float, float], ...]
    bc: tuple[str, ...]

    @classmethod
    def whole(cls, imm: ParametricImmersion) -> "DomainSpec":
        return cls(
            box=tuple(tuple(map(float, ab)) for ab in imm.param_box),
            bc=tuple(PERIODIC if p else CLAMPED for p in imm.periodic),
        )

    def validate(self, imm: ParametricImmersion):
        if len(self.box) != imm.intrinsic_dim or len(self.bc) != imm.intrinsic_dim:
            raise ValueError("domain dimension does not match the immersion")
        for (a, b), flag, (A, B), per in zip(self.box, self.bc, imm.param_box, imm.periodic):
            if flag not in (CLAMPED, PERIODIC):
                raise ValueError(f"unknown boundary flag {flag!r}")
            if (flag == PERIODIC) != per:
                raise ValueError("periodic flags must match the immersion's periodic coordinates")
            if flag == PERIODIC and (a, b) != (A, B):
                raise ValueError("a periodic coordinate must span the full period")
            if not (A - 1e-12 <= a < b <= B + 1e-12):
                raise ValueError(f"domain interval [{a}, {b}] leaves the chart box [{A}, {B}]")


@dataclass(frozen=True)
class MeshC1:
    domain: DomainSpec
    elements: tuple[int, ...]
    quad_order: int = 8

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(int(e) for e in self.elements))
        if len(self.elements) != len(self.domain.box):
            raise ValueError("need one element count per coordinate")
        if len(self.elements) not in (1, 2):
            raise ValueError("only 1D and 2D meshes are supported")
        if min(self.elements) < 1:
            raise ValueError("element counts must be positive")
        for e, flag in zip(self.elements, self.domain.bc):
            if flag == PERIODIC and e < 3:
                raise ValueError("periodic coordinates need at least 3 elements")
        if self.quad_order < 6:
            raise ValueError("quadrature order must be at least 6")

    @property
    def dim(self) -> int:
        return len(self.elements)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / e for (a, b), e in zip(self.domain.box, self.elements))

    @property
    def node_counts(self) -> tuple[int, ...]:
        """Distinct nodes per coordinate (the last node is dropped when periodic)."""
        return tuple(e if f == PERIODIC else e + 1 for e, f in zip(self.elements, self.domain.bc))

    def node_coordinates(self, axis: int) -> np.ndarray:
        (a, b), e = self.domain.box[axis], self.elements[axis]
        return np.linspace(a, b, e + 1)

    def refined(self, factor: int) -> "MeshC1":
        return MeshC1(self.domain, tuple(e * factor for e in self.elements), self.quad_order)


def _local_layout(dim: int):
    """For each local dof: (node offset per axis, derivative order per axis)."""
    if dim == 1:
        return [((a // 2,), (a % 2,)) for a in range(4)]
    out = []
    for a in range(4):
        for b in range(4):
            out.append(((a // 2, b // 2), (a % 2, b % 2)))
    return out


@dataclass
class FEField:
    """A finite-element function sampled at the quadrature points, shape ``(E, q)``."""

    value: np.ndarray
    grad: np.ndarray  # (E, q, n) parameter gradient
    hess: np.ndarray  # (E, q, n, n)
    lnu: np.ndarray


@dataclass
class AssembledForms:
    A: np.ndarray
    M: np.ndarray
    G: np.ndarray
    free: np.ndarray  # global indices of free dofs
    ndof: int
    mesh: MeshC1
    imm: ParametricImmersion = field(repr=False)
    drift: DriftSpec = field(repr=False)
    # quadrature cache, flattened over (element, point)
    dofmap: np.ndarray = field(repr=False)  # (E, nloc)
    basis: tuple = field(repr=False)  # (B, dB, ddB) with leading (q, nloc)
    qpoints: np.ndarray = field(repr=False)  # (E, q, n)
    qweights: np.ndarray = field(repr=False)  # (E, q) includes sqrt det g and e^w
    geometry: PointGeometry = field(repr=False)
    # per-element factors R_e with A_e = R_e^T R_e (before clamping)
    A_root_local: np.ndarray = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.imm.intrinsic_dim

    @property
    def size(self) -> int:
        return len(self.free)

    def expand(self, v: np.ndarray) -> np.ndarray:
        """Embed a free-dof vector into the full dof vector (clamped entries zero)."""
        full = np.zeros(self.ndof)
        full[self.free] = v
        return full

    def root_apply(self, V: np.ndarray) -> np.ndarray:
        """``K V`` for the stacked element factor ``K`` with ``K^T K = A``.

        Sums of squares of ``K V`` reproduce ``V^T A V`` without the
        cancellation present in products with the assembled matrix.
        """
        V = np.asarray(V, dtype=float)
        vec = V.ndim == 1
        V2 = V[:, None] if vec else V
        full = np.zeros((self.ndof, V2.shape[1]))
        full[self.free] = V2
        out = np.einsum("ers,esk->erk", self.A_root_local, full[self.dofmap]).reshape(-1, V2.shape[1])
        return out[:, 0] if vec else out

    def root_apply_T(self, Y: np.ndarray) -> np.ndarray:
        """``K^T Y`` restricted to the free dofs; ``Y`` has shape ``(E * nloc, k)``."""
        E, nloc = self.dofmap.shape
        Y3 = np.asarray(Y, dtype=float).reshape(E, nloc, -1)
        contrib = np.einsum("ers,erk->esk", self.A_root_local, Y3)
        full = np.zeros((self.ndof, Y3.shape[2]))
        np.add.at(full, self.dofmap.ravel(), contrib.reshape(E * nloc, -1))
        return full[self.free]

    def evaluate(self, v: np.ndarray) -> FEField:
        c = self.expand(np.asarray(v, dtype=float))[self.dofmap]  # (E, nloc)
        B, dB, ddB = self.basis
        val = np.einsum("qr,er->eq", B, c)
        grad = np.einsum("qri,er->eqi", dB, c)
        hess = np.einsum("qrij,er->eqij", ddB, c)
        E, q = val.shape
        n = self.n
        lnu = self.geometry.lnu(grad.reshape(E * q, n), hess.reshape(E * q, n, n)).reshape(E, q)
        return FEField(val, grad, hess, lnu)

    def geometry_field(self, name: str) -> np.ndarray:
        """A :class:`PointGeometry` field reshaped to ``(E, q, ...)``."""
        arr = getattr(self.geometry, name)
        return arr.reshape(self.qweights.shape + arr.shape[1:])

    def integrate(self, f: np.ndarray) -> float:
        """Weighted integral ``int f e^w dv`` of quadrature-point data ``(E, q)``."""
        return float(np.sum(self.qweights * f))

    @cached_property
    def triplets(self) -> str:
        """Plain-text dump: one ``name row col value`` line per nonzero (free-dof indexing)."""
        lines = ["# name row col value"]
        for name, mat in (("A", self.A), ("M", self.M), ("G", self.G)):
            r, c = np.nonzero(mat)
            lines += [f"{name} {i} {j} {mat[i, j]:.17e}" for i, j in zip(r, c)]
        return "\n".join(lines) + "\n"


def _element_data(mesh: MeshC1):
    """Quadrature points, reference weights, tensor basis and dof map."""
    dim = mesh.dim
    h = mesh.spacing
    s, ws = gauss_legendre(mesh.quad_order)
    B1 = [hermite_basis(s, hk) for hk in h]
    layout = _local_layout(dim)
    nq1 = len(s)
    ncount = mesh.node_counts

    if dim == 1:
        N, dN, d2N = B1[0]
        B = N
        dB = dN[:, :, None]
        ddB = d2N[:, :, None, None]
        wq = ws * h[0]
        loc_s = s[:, None]
    else:
        (Nu, dNu, d2Nu), (Nv, dNv, d2Nv) = B1
        # q index = iu * nq1 + iv; local index = a * 4 + b
        B = np.einsum("ia,jb->ijab", Nu, Nv).reshape(nq1 * nq1, 16)
        du = np.einsum("ia,jb->ijab", dNu, Nv).reshape(nq1 * nq1, 16)
        dv = np.einsum("ia,jb->ijab", Nu, dNv).reshape(nq1 * nq1, 16)
        duu = np.einsum("ia,jb->ijab", d2Nu, Nv).reshape(nq1 * nq1, 16)
        duv = np.einsum("ia,jb->ijab", dNu, dNv).reshape(nq1 * nq1, 16)
        dvv = np.einsum("ia,jb->ijab", Nu, d2Nv).reshape(nq1 * nq1, 16)
        dB = np.stack([du, dv], axis=-1)
        ddB = np.stack([np.stack([duu, duv], -1), np.stack([duv, dvv], -1)], -2)
        wq = np.outer(ws * h[0], ws * h[1]).ravel()
        loc_s = np.stack(np.meshgrid(s, s, indexing="ij"), -1).reshape(-1, 2)

    # element origins and dof map
    origins = [mesh.node_coordinates(k)[:-1] for k in range(dim)]
    elem_idx = list(np.ndindex(*mesh.elements))
    E = len(elem_idx)
    qpts = np.empty((E, len(wq), dim))
    ndof_node = 2**dim
    dofmap = np.empty((E, len(layout)), dtype=np.int64)
    for e, idx in enumerate(elem_idx):
        qpts[e] = np.array([origins[k][idx[k]] for k in range(dim)]) + loc_s * np.array(h)
        for r, (off, der) in enumerate(layout):
            node = [(idx[k] + off[k]) % ncount[k] for k in range(dim)]
            flat = node[0] if dim == 1 else node[0] * ncount[1] + node[1]
            kind = der[0] if dim == 1 else der[0] + 2 * der[1]
            dofmap[e, r] = flat * ndof_node + kind
    ndof = int(np.prod(ncount)) * ndof_node
    return qpts, wq, (B, dB, ddB), dofmap, ndof


def _clamped_dofs(mesh: MeshC1) -> np.ndarray:
    dim = mesh.dim
    ncount = mesh.node_counts
    ndof_node = 2**dim
    mask = np.zeros(ncount, dtype=bool)
    for k, flag in enumerate(mesh.domain.bc):
        if flag != CLAMPED:
            continue
        sl = [slice(None)] * dim
        sl[k] = 0
        mask[tuple(sl)] = True
        sl[k] = -1
        mask[tuple(sl)] = True
    nodes = np.flatnonzero(mask.ravel())
    return (nodes[:, None] * ndof_node + np.arange(ndof_node)).ravel()


def _scatter(local: np.ndarray, dofmap: np.ndarray, ndof: int) -> np.ndarray:
    # mirror the upper triangle so each element block is exactly symmetric
    iu = np.triu_indices(local.shape[1], 1)
    local = local.copy()
    local[:, iu[1], iu[0]] = local[:, iu[0], iu[1]]
    out = np.zeros((ndof, ndof))
    rows = np.repeat(dofmap, dofmap.shape[1], axis=1).ravel()
    cols = np.tile(dofmap, (1, dofmap.shape[1])).ravel()
    np.add.at(out, (rows, cols), local.ravel())
    return out


def assemble(imm: ParametricImmersion, drift: DriftSpec, domain: DomainSpec, mesh: MeshC1) -> AssembledForms:
    """Assemble ``A``, ``M`` and ``G`` restricted to the free (unclamped) dofs."""
    domain.validate(imm)
    if mesh.domain != domain:
        raise ValueError("mesh was built for a different domain")
    qpts, wq, basis, dofmap, ndof = _element_data(mesh)
    E, q, n = qpts.shape
    geo = point_geometry(imm, drift, qpts.reshape(E * q, n))

    W = (wq[None, :] * (geo.sqrt_det * np.exp(geo.weight)).reshape(E, q))
    B, dB, ddB = basis
    ginv = geo.metric_inv.reshape(E, q, n, n)
    b = geo.first_order.reshape(E, q, n)
    Lphi = np.einsum("eqij,qrij->eqr", ginv, ddB) + np.einsum("eqk,qrk->eqr", b, dB)

    A_loc = np.einsum("eq,eqr,eqs->ers", W, Lphi, Lphi)
    A_root = np.linalg.qr(np.sqrt(W)[:, :, None] * Lphi, mode="r")
    M_loc = np.einsum("eq,qr,qs->ers", W, B, B)
    G_loc = np.einsum("eq,qri,eqij,qsj->ers", W, dB, ginv, dB)

    clamped = _clamped_dofs(mesh)
    free = np.setdiff1d(np.arange(ndof), clamped)
    if free.size == 0:
        raise EmptyInterior("clamping removes every degree of freedom")
    sub = np.ix_(free, free)
    return AssembledForms(
        A=_scatter(A_loc, dofmap, ndof)[sub],
        M=_scatter(M_loc, dofmap, ndof)[sub],
        G=_scatter(G_loc, dofmap, ndof)[sub],
        free=free,
        ndof=ndof,
        mesh=mesh,
        imm=imm,
        drift=drift,
        dofmap=dofmap,
        basis=basis,
        qpoints=qpts,
        qweights=W,
        geometry=geo,
        A_root_local=A_root,
    )


def build_forms(imm, drift, elements, domain: DomainSpec | None = None, quad_order: int = 8) -> AssembledForms:
    """Convenience wrapper: whole-chart domain unless one is given."""
    domain = domain or DomainSpec.whole(imm)
    return assemble(imm, drift, domain, MeshC1(domain, tuple(np.atleast_1d(elements)), quad_order))


# ---------------------------------------------------------------------------
# self-adjointness of L_nu with respect to the weighted measure


def polynomial_bump(domain: DomainSpec, coeffs=(1.0,), power: int = 2) -> Probe:
    """``P(t) * prod_k f_k(s_k)`` in normalised coordinates ``s``.

    On clamped axes ``f = (s (1 - s))^power``, so with ``power >= 2`` the bump
    and its gradient vanish on clamped faces; on periodic axes
    ``f = 1 + sin(2 pi s) / 2``.  ``P`` is the polynomial with coefficients
    ``coeffs`` in ``t``, the sum of the clamped coordinates.
    """
    lo = np.array([a for a, _ in domain.box])
    span = np.array([b - a for a, b in domain.box])
    active = np.array([f == CLAMPED for f in domain.bc])
    act = active.astype(float)
    c = np.asarray(coeffs, dtype=float)
    pw = power
    tau = 2 * np.pi
    P0 = np.polynomial.polynomial

    def parts(u):
        s = (np.asarray(u, dtype=float).reshape(-1, len(lo)) - lo) / span
        base = s * (1 - s)
        d_base = 1 - 2 * s
        f = np.where(active, base**pw, 1 + 0.5 * np.sin(tau * s))
        df = np.where(active, pw * base ** (pw - 1) * d_base, 0.5 * tau * np.cos(tau * s))
        d2f = np.where(active, pw * (pw - 1) * base ** max(pw - 2, 0) * d_base**2 - 2 * pw * base ** (pw - 1),
                       -0.5 * tau**2 * np.sin(tau * s))
        t = s @ act
        P = P0.polyval(t, c)
        dP = P0.polyval(t, P0.polyder(c)) if len(c) > 1 else 0 * t
        d2P = P0.polyval(t, P0.polyder(c, 2)) if len(c) > 2 else 0 * t
        return s, f, df, d2f, P, dP, d2P

    def others(f, skip):
        return np.prod(np.delete(f, skip, axis=1), axis=1) if f.shape[1] > len(np.atleast_1d(skip)) else 1.0

    def value(u):
        _, f, _, _, P, _, _ = parts(u)
        return P * f.prod(axis=1)

    def grad(u):
        s, f, df, _, P, dP, _ = parts(u)
        F = f.prod(axis=1)
        g = np.empty_like(s)
        for k in range(s.shape[1]):
            g[:, k] = (act[k] * dP * F + P * df[:, k] * others(f, k)) / span[k]
        return g

    def hess(u):
        s, f, df, d2f, P, dP, d2P = parts(u)
        n = s.shape[1]
        F = f.prod(axis=1)
        Fk = [df[:, k] * others(f, k) for k in range(n)]
        Hs = np.empty((len(s), n, n))
        for i in range(n):
            for j in range(n):
                if i == j:
                    second = d2f[:, i] * others(f, i)
                else:
                    second = df[:, i] * df[:, j] * others(f, [i, j])
                val = act[i] * act[j] * d2P * F + dP * (act[i] * Fk[j] + act[j] * Fk[i]) + P * second
                Hs[:, i, j] = val / (span[i] * span[j])
        return Hs

    return Probe(value, grad, hess)


def _fine_quadrature(domain: DomainSpec, cells: int, q: int):
    axes = []
    for a, b in domain.box:
        edges = np.linspace(a, b, cells + 1)
        s, w = gauss_legendre(q)
        pts = (edges[:-1, None] + (edges[1] - edges[0]) * s[None, :]).ravel()
        wts = np.tile(w * (edges[1] - edges[0]), cells)
        axes.append((pts, wts))
    grids = np.meshgrid(*[p for p, _ in axes], indexing="ij")
    wgrid = np.meshgrid(*[w for _, w in axes], indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.prod(np.stack([w.ravel() for w in wgrid], axis=1), axis=1)
    return pts, wts


def self_adjointness_check(imm, drift, domain: DomainSpec, u: Probe, w: Probe, cells: int = 32, q: int = 8):
    """Residuals of the weighted integration-by-parts identities.

    Returns ``(|int (Lu) w - int (Lw) u|, |int (Lu) w + int <grad u, grad w>|)``,
    every integral against ``e^{<nu, X>} dv``.
    """
    domain.validate(imm)
    pts, wts = _fine_quadrature(domain, cells, q)
    geo = point_geometry(imm, drift, pts)
    dmu = wts * geo.sqrt_det * np.exp(geo.weight)
    du, dw = u.grad(pts), w.grad(pts)
    Lu = geo.lnu(du, u.hess(pts))
    Lw = geo.lnu(dw, w.hess(pts))
    uu, ww = u.value(pts), w.value(pts)
    i_luw = np.sum(dmu * Lu * ww)
    i_lwu = np.sum(dmu * Lw * uu)
    i_grad = np.sum(dmu * np.einsum("mi,mij,mj->m", du, geo.metric_inv, dw))
    return float(abs(i_luw - i_lwu)), float(abs(i_luw + i_grad))


def eigenfunction_functionals(forms: AssembledForms, v1: np.ndarray) -> tuple[float, float]:
    """``(int |grad u1|^2 dmu, n int u1 L_nu u1 dmu)`` for an M-normalised ``v1``.

    The second value equals ``-n`` times the first by weighted integration by parts.
    """
    dirichlet = float(v1 @ forms.G @ v1)
    return dirichlet, -forms.n * dirichlet
