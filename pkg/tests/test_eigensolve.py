from types import SimpleNamespace

import numpy as np
import pytest

from driftplate import catalogue as cat
from driftplate.assembly import build_forms
from driftplate.eigensolve import Spectrum, m_orthogonality_error, rayleigh_quotient, smallest_eigenpairs
from driftplate.errors import IndefiniteMass, NoConvergence, ZeroVector
from driftplate.geometry import DriftSpec


def test_spectrum_invariants(beam100):
    forms, spec = beam100
    assert np.all(np.diff(spec.eigenvalues) >= 0)
    assert np.all(spec.residuals <= spec.tol)
    assert m_orthogonality_error(forms, spec) < 1e-10
    assert spec.meta["method"].endswith("ritz")


def test_rayleigh_quotient_of_eigenvectors(beam100):
    forms, spec = beam100
    for j in range(2):
        assert np.isclose(rayleigh_quotient(forms, spec.eigenvectors[:, j]), spec.eigenvalues[j], rtol=1e-7)


def test_rayleigh_quotient_zero_vector(beam100):
    forms, _ = beam100
    with pytest.raises(ZeroVector):
        rayleigh_quotient(forms, np.zeros(forms.size))


def test_plain_matrix_pencil():
    A = np.diag([3.0, 1.0, 2.0])
    spec = smallest_eigenpairs(SimpleNamespace(A=A, M=np.eye(3)), 2)
    assert np.allclose(spec.eigenvalues, [1.0, 2.0])


def test_indefinite_mass_rejected():
    pencil = SimpleNamespace(A=np.eye(2), M=np.diag([1.0, -1.0]))
    with pytest.raises(IndefiniteMass):
        smallest_eigenpairs(pencil, 1)


def test_bad_k():
    with pytest.raises(ValueError):
        smallest_eigenpairs(SimpleNamespace(A=np.eye(2), M=np.eye(2)), 3)


def test_tight_tolerance_reports_partial():
    forms = build_forms(cat.grim_reaper_arc(1.4), DriftSpec([0.0, 1.0], unit_flag=True), 200)
    with pytest.raises(NoConvergence) as info:
        smallest_eigenpairs(forms, 2, tol=1e-12)
    assert isinstance(info.value.partial, Spectrum)
    assert len(info.value.partial) == 2


def test_degenerate_pair_detected_on_square():
    forms = build_forms(cat.flat_rectangle(), DriftSpec([0.0, 0.0, 0.0]), (8, 8))
    spec = smallest_eigenpairs(forms, 3)
    assert [1, 2] in spec.clusters


def test_sign_convention_is_deterministic():
    forms = build_forms(cat.interval(), DriftSpec([0.5]), 20)
    a = smallest_eigenpairs(forms, 3).eigenvectors
    b = smallest_eigenpairs(forms, 3).eigenvectors
    assert np.array_equal(a, b)
    idx = np.argmax(np.abs(a), axis=0)
    assert np.all(a[idx, np.arange(3)] > 0)


def test_ritz_refinement_keeps_rayleigh_ritz_bound():
    """Conforming discretisation: every computed Lambda_1 sits above the exact beam value."""
    exact = 500.56390174043
    for el in (25, 50, 100, 200):
        lam = smallest_eigenpairs(build_forms(cat.interval(), DriftSpec([0.0]), el), 1).eigenvalues[0]
        assert lam >= exact * (1 - 1e-12)
