"""Reference spectra computed without the finite-element pipeline.

Nothing here touches assembly or eigensolve.  The drifted problems are reduced
by the gauge ``v = exp(<nu, x>/2) u``, under which ``L_nu`` on a flat domain
becomes ``Delta - |nu|^2/4`` with the clamped traces unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.optimize as so
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoConvergence

BEAM_MAX = 10
LADDER_1D = (25, 50, 100, 200, 400, 800)
LADDER_2D = (32, 64, 128)


def _beam_root(m: int) -> float:
    # cos k cosh k = 1 rewritten as cos k - 1/cosh k = 0 to avoid overflow
    f = lambda k: np.cos(k) - 1.0 / np.cosh(k)
    mid = (m + 0.5) * np.pi
    return so.bisect(f, mid - np.pi / 4, mid + np.pi / 4, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)


def beam_reference(count: int) -> np.ndarray:
    """First ``count`` clamped-beam eigenvalues ``kappa_m^4`` on the unit interval."""
    if not 1 <= count <= BEAM_MAX:
        raise ValueError(f"count must lie in [1, {BEAM_MAX}]")
    return np.array([_beam_root(m) ** 4 for m in range(1, count + 1)])


def richardson(values: np.ndarray, ratio: float = 2.0, order: int = 2) -> np.ndarray:
    """Romberg table for a sequence with error expansion in ``h^order, h^(2 order), ...``.

    ``values`` has shape ``(levels, count)`` with ``h`` shrinking by ``ratio``
    per level.  Returns the diagonal of the table (one entry per level).
    """
    T = [np.asarray(values, dtype=float)]
    for j in range(1, len(T[0])):
        prev = T[-1]
        f = ratio ** (order * j)
        T.append((f * prev[1:] - prev[:-1]) / (f - 1))
    return np.array([t[-1] for t in T])


@dataclass(frozen=True)
class OracleResult:
    eigenvalues: np.ndarray
    ladder: tuple
    raw: np.ndarray  # per-level unextrapolated values
    change: float  # relative change between the last two extrapolants

    def as_dict(self) -> dict:
        return {"eigenvalues": self.eigenvalues.tolist(), "ladder": list(self.ladder),
                "raw": self.raw.tolist(), "change": self.change}


def _beam_fd(length: float, c: float, intervals: int, count: int) -> np.ndarray:
    """``(D^2 - c)^2`` clamped, second order, from the singular values of a root.

    With ghost reflection the matrix is ``(B - c)^2 + 2/h^4 (e_1 e_1^T + e_m e_m^T)``
    which factors as ``C^T C``.  Squared singular values keep relative accuracy
    where a direct eigensolve would lose ``eps * cond``.
    """
    m = intervals - 1
    h = length / intervals
    B = (np.diag(-2.0 * np.ones(m)) + np.diag(np.ones(m - 1), 1) + np.diag(np.ones(m - 1), -1)) / h**2
    C = np.zeros((m + 2, m))
    C[:m] = B - c * np.eye(m)
    C[m, 0] = C[m + 1, m - 1] = np.sqrt(2.0) / h**2
    s = sla.svdvals(C)
    return np.sort(s**2)[:count]


def conjugation_oracle(length: float, b: float, count: int, ladder=LADDER_1D, rtol: float = 1e-8) -> OracleResult:
    """Clamped spectrum of ``(d^2/dx^2 - b^2/4)^2`` on ``[0, length]``.

    Equal to the spectrum of ``L_nu^2`` with ``|nu| = b`` on a flat interval.
    """
    if length <= 0 or b < 0:
        raise ValueError("need length > 0 and b >= 0")
    if count < 1 or count > min(ladder) // 4:
        raise ValueError("count too large for the grid ladder")
    c = b * b / 4
    raw = np.array([_beam_fd(length, c, N, count) for N in ladder])
    diag = richardson(raw)
    change = float(np.max(np.abs(diag[-1] - diag[-2]) / np.abs(diag[-1])))
    if not change < rtol:
        raise NoConvergence(f"extrapolation stalled, relative change {change:.3g}")
    return OracleResult(diag[-1], tuple(ladder), raw, change)


def _plate_fd(width: float, height: float, c: float, N: int, count: int) -> np.ndarray:
    nx = ny = N - 1
    hx, hy = width / N, height / N

    def lap1(m, h):
        return sp.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1]) / h**2

    Ix, Iy = sp.identity(nx), sp.identity(ny)
    L = sp.kron(lap1(nx, hx), Iy) + sp.kron(Ix, lap1(ny, hy)) - c * sp.identity(nx * ny)
    # clamped ghost correction on nodes next to each boundary
    ex = np.zeros(nx)
    ex[[0, -1]] = 2.0 / hx**4
    ey = np.zeros(ny)
    ey[[0, -1]] = 2.0 / hy**4
    ghost = np.kron(ex, np.ones(ny)) + np.kron(np.ones(nx), ey)
    A = (L @ L + sp.diags(ghost)).tocsc()
    lam = spla.eigsh(A, k=count, sigma=0.0, which="LM", return_eigenvectors=False)
    return np.sort(lam)


def fd_plate_oracle(width: float, height: float, nu_t, count: int, ladder=LADDER_2D, rtol: float = 5e-4) -> OracleResult:
    """Clamped spectrum of ``L_nu^2`` on a flat rectangle with tangential drift ``nu_t``.

    Uses the gauge-reduced operator ``(Delta_h - |nu_t|^2/4)^2`` on a
    13-point stencil with ghost reflection and Richardson extrapolation in
    ``h^2``.
    """
    nu_t = np.asarray(nu_t, dtype=float)
    if nu_t.shape != (2,):
        raise ValueError("nu_t must be a planar vector")
    if width <= 0 or height <= 0:
        raise ValueError("rectangle sides must be positive")
    c = float(nu_t @ nu_t) / 4
    raw = np.array([_plate_fd(width, height, c, N, count) for N in ladder])
    diag = richardson(raw)
    change = float(np.max(np.abs(diag[-1] - diag[-2]) / np.abs(diag[-1])))
    if not change < rtol:
        raise NoConvergence(f"plate extrapolation stalled, relative change {change:.3g}")
    return OracleResult(diag[-1], tuple(ladder), raw, change)
