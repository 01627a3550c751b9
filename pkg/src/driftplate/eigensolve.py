"""Generalised symmetric eigenproblem ``A v = lambda M v`` with residual certificates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import IndefiniteMass, NoConvergence, ZeroVector

# above this many free dofs the sparse shift-invert Lanczos path is used
DENSE_DOF_LIMIT = 5000
CLUSTER_RTOL = 1e-8


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)  # columns, M-orthonormal
    residuals: np.ndarray
    tol: float
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def clusters(self) -> list[list[int]]:
        """Index groups whose consecutive relative gaps are below ``CLUSTER_RTOL``."""
        lam = self.eigenvalues
        groups = [[0]] if len(lam) else []
        for i in range(1, len(lam)):
            if lam[i] - lam[i - 1] <= CLUSTER_RTOL * abs(lam[i]):
                groups[-1].append(i)
            else:
                groups.append([i])
        return [g for g in groups if len(g) > 1]


def _apply_A(forms, V):
    if getattr(forms, "A_root_local", None) is not None:
        return forms.root_apply_T(forms.root_apply(V))
    return forms.A @ V


def _residuals(forms, lam, V):
    MV = forms.M @ V
    R = _apply_A(forms, V) - MV * lam
    return np.linalg.norm(R, axis=0) / (np.abs(lam) * np.linalg.norm(MV, axis=0))


def _ritz_refine(forms, Z, k):
    """Rayleigh-Ritz on span(Z) with the projected stiffness formed from the factor root.

    The dense solve has absolute eigenvalue error ~ eps * ||A||, which for
    fourth-order problems swamps the low modes; projecting through ``K``
    restores near full relative accuracy.
    """
    KZ = forms.root_apply(Z)
    Ak = KZ.T @ KZ
    Mk = Z.T @ forms.M @ Z
    lam, Y = sla.eigh(Ak, Mk)
    return lam[:k], Z @ Y[:, :k]


def _fix_signs(V):
    # deterministic sign: the largest-magnitude entry of each vector is positive
    idx = np.argmax(np.abs(V), axis=0)
    s = np.sign(V[idx, np.arange(V.shape[1])])
    s[s == 0] = 1.0
    return V * s


def smallest_eigenpairs(forms, k: int, tol: float = 1e-5) -> Spectrum:
    """The ``k`` algebraically smallest eigenpairs of the pencil ``(A, M)``.

    ``forms`` is anything with symmetric ``A`` and ``M`` attributes.
    """
    A, M = forms.A, forms.M
    size = A.shape[0]
    if not 1 <= k <= size:
        raise ValueError(f"k={k} must lie in [1, {size}]")
    try:
        sla.cholesky(M, lower=True)
    except np.linalg.LinAlgError as exc:
        raise IndefiniteMass(f"mass matrix is not positive definite: {exc}") from None

    kk = min(size, k + 4)  # a few guard vectors for the Ritz step
    if size <= DENSE_DOF_LIMIT:
        lam, V = sla.eigh(A, M, subset_by_index=[0, kk - 1])
        method = "dense"
    else:
        lam, V = spla.eigsh(sp.csr_matrix(A), k=kk, M=sp.csr_matrix(M), sigma=0.0, which="LM")
        order = np.argsort(lam)
        lam, V = lam[order], V[:, order]
        method = "shift-invert"
    if getattr(forms, "A_root_local", None) is not None:
        lam, V = _ritz_refine(forms, V, k)
        method += "+ritz"
    else:
        lam, V = lam[:k], V[:, :k]
    V = _fix_signs(V)
    res = _residuals(forms, lam, V)
    spec = Spectrum(
        eigenvalues=lam,
        eigenvectors=V,
        residuals=res,
        tol=tol,
        meta={"method": method, "dofs": size},
    )
    if np.any(res > tol):
        raise NoConvergence(f"eigen-residuals up to {res.max():.3g} exceed tol={tol:g}", partial=spec)
    return spec


def rayleigh_quotient(forms, v) -> float:
    v = np.asarray(v, dtype=float)
    den = float(v @ forms.M @ v)
    if not np.any(v) or den == 0.0:
        raise ZeroVector("Rayleigh quotient of the zero vector")
    return float(v @ forms.A @ v) / den


def m_orthogonality_error(forms, spectrum: Spectrum) -> float:
    V = spectrum.eigenvectors
    return float(np.abs(V.T @ forms.M @ V - np.eye(V.shape[1])).max())
