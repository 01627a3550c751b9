import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from driftplate import catalogue as cat
from driftplate.assembly import (DomainSpec, MeshC1, assemble, build_forms, gauss_legendre, hermite_basis,
                                 polynomial_bump, self_adjointness_check)
from driftplate.eigensolve import smallest_eigenpairs
from driftplate.errors import EmptyInterior
from driftplate.geometry import DriftSpec


def textbook_beam(elements, length=1.0):
    """Clamped Euler-Bernoulli beam with the classical closed-form element matrices."""
    h = length / elements
    Ke = np.array([[12, 6 * h, -12, 6 * h],
                   [6 * h, 4 * h * h, -6 * h, 2 * h * h],
                   [-12, -6 * h, 12, -6 * h],
                   [6 * h, 2 * h * h, -6 * h, 4 * h * h]]) / h**3
    Me = np.array([[156, 22 * h, 54, -13 * h],
                   [22 * h, 4 * h * h, 13 * h, -3 * h * h],
                   [54, 13 * h, 156, -22 * h],
                   [-13 * h, -3 * h * h, -22 * h, 4 * h * h]]) * h / 420
    nd = 2 * (elements + 1)
    K = np.zeros((nd, nd))
    M = np.zeros((nd, nd))
    for e in range(elements):
        idx = slice(2 * e, 2 * e + 4)
        K[idx, idx] += Ke
        M[idx, idx] += Me
    keep = slice(2, nd - 2)
    return K[keep, keep], M[keep, keep]


def test_gauss_legendre_integrates_degree_15():
    s, w = gauss_legendre(8, 0.0, 2.0)
    assert np.isclose(np.sum(w * s**15), 2.0**16 / 16)


def test_hermite_basis_partition_of_unity():
    s = np.linspace(0, 1, 7)
    N, dN, d2N = hermite_basis(s, 0.3)
    assert np.allclose(N[:, 0] + N[:, 2], 1.0)
    assert np.allclose(dN[:, 0] + dN[:, 2], 0.0)
    assert np.allclose(d2N[:, 0] + d2N[:, 2], 0.0)


@pytest.mark.parametrize("elements", [3, 10, 40])
def test_beam_matches_textbook_matrices(elements):
    forms = build_forms(cat.interval(), DriftSpec([0.0]), elements)
    K, M = textbook_beam(elements)
    assert np.allclose(forms.A, K, rtol=1e-12, atol=1e-9 * np.abs(K).max())
    assert np.allclose(forms.M, M, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("name,elements", [("interval", 20), ("annulus", (4, 8)), ("sphere_band", (4, 8)),
                                           ("grim_reaper_plane", (5, 4))])
def test_forms_exactly_symmetric(name, elements):
    imm = cat.build(name)
    forms = build_forms(imm, DriftSpec(np.linspace(0.3, -0.5, imm.ambient_dim)), elements)
    for mat in (forms.A, forms.M, forms.G):
        assert np.array_equal(mat, mat.T)
    assert np.all(np.linalg.eigvalsh(forms.M) > 0)


def test_free_dof_counts():
    f1 = build_forms(cat.interval(), DriftSpec([0.0]), 10)
    assert f1.size == 2 * 9
    f2 = build_forms(cat.flat_rectangle(), DriftSpec([0.0, 0, 0]), (3, 4))
    assert f2.size == 4 * 2 * 3
    f3 = build_forms(cat.annulus(), DriftSpec([0.0, 0]), (3, 6))
    assert f3.size == 4 * 2 * 6


def test_single_element_is_empty():
    with pytest.raises(EmptyInterior):
        build_forms(cat.interval(), DriftSpec([0.0]), 1)


def test_mesh_validation():
    dom = DomainSpec.whole(cat.annulus())
    with pytest.raises(ValueError):
        MeshC1(dom, (4, 2))
    with pytest.raises(ValueError):
        MeshC1(dom, (4, 8), quad_order=4)


def test_domain_validation():
    imm = cat.annulus()
    with pytest.raises(ValueError, match="period"):
        DomainSpec(((0.6, 1.2), (0.0, 3.0)), ("clamped", "periodic")).validate(imm)
    with pytest.raises(ValueError, match="chart"):
        DomainSpec(((0.1, 1.2), (0.0, 2 * np.pi)), ("clamped", "periodic")).validate(imm)


def test_triplet_dump_parses():
    forms = build_forms(cat.interval(), DriftSpec([1.0]), 3)
    lines = forms.triplets.splitlines()
    assert lines[0].startswith("#")
    name, i, j, v = lines[1].split()
    assert name == "A" and np.isclose(float(v), forms.A[int(i), int(j)], rtol=1e-15)


@pytest.mark.parametrize("name", ["interval", "grim_reaper_arc", "annulus", "sphere_band", "grim_reaper_plane"])
def test_weighted_self_adjointness(name):
    imm = cat.build(name)
    dom = DomainSpec.whole(imm)
    drift = DriftSpec(np.linspace(0.7, -0.4, imm.ambient_dim))
    u = polynomial_bump(dom, (1.0, 0.5))
    w = polynomial_bump(dom, (0.2, -1.0, 0.3))
    sym, ibp = self_adjointness_check(imm, drift, dom, u, w, cells=16)
    assert sym <= 1e-10 and ibp <= 1e-10


def test_quadratic_form_reproduces_field_integrals():
    imm = cat.grim_reaper_arc(1.0)
    forms = build_forms(imm, DriftSpec([0.0, 1.0], unit_flag=True), 30)
    v = np.random.default_rng(1).normal(size=forms.size)
    f = forms.evaluate(v)
    assert np.isclose(v @ forms.M @ v, forms.integrate(f.value**2), rtol=1e-12)
    assert np.isclose(v @ forms.A @ v, forms.integrate(f.lnu**2), rtol=1e-10)
    assert np.isclose(np.sum(forms.root_apply(v) ** 2), v @ forms.A @ v, rtol=1e-10)


def _lam(imm, nu, el, k=3):
    return smallest_eigenpairs(build_forms(imm, DriftSpec(nu), el), k).eigenvalues


@given(seed=st.integers(0, 10_000), scale=st.floats(0.5, 2.0))
def test_rigid_motion_and_scaling(seed, scale):
    """Rotation and translation leave the spectrum alone; scaling by s maps it to s^-4 (with nu -> nu/s)."""
    rng = np.random.default_rng(seed)
    imm = cat.line_segment(1.0, angle=0.3)
    Q = special_ortho_group.rvs(2, random_state=seed)
    nu = rng.normal(size=2)
    base = _lam(imm, nu, 16)
    moved = imm.affine(Q, scale=scale, shift=rng.normal(size=2))
    got = _lam(moved, Q @ nu / scale, 16)
    assert np.allclose(got * scale**4, base, rtol=1e-9)


def test_line_segment_matches_interval_with_projected_drift():
    seg = cat.line_segment(1.0, angle=0.5)
    nu = np.array([0.4, -1.1])
    t = np.array([np.cos(0.5), np.sin(0.5)])
    assert np.allclose(_lam(seg, nu, 24), _lam(cat.interval(), [nu @ t], 24), rtol=1e-10)


def test_domain_monotonicity_rectangle():
    """Enlarging the clamped domain can only lower Lambda_1."""
    small = _lam(cat.flat_rectangle(1.0, 1.0), [0, 0, 0], (8, 8), 1)[0]
    big = _lam(cat.flat_rectangle(1.0, 2.0), [0, 0, 0], (8, 16), 1)[0]
    assert big < small


def test_sub_box_monotonicity_on_sphere_band():
    imm = cat.sphere_band()
    drift = DriftSpec([0.0, 0.0, 0.5])
    whole = DomainSpec.whole(imm)
    sub = DomainSpec(((0.8, 2.0), whole.box[1]), whole.bc)
    lam_whole = smallest_eigenpairs(assemble(imm, drift, whole, MeshC1(whole, (8, 16))), 1).eigenvalues[0]
    lam_sub = smallest_eigenpairs(assemble(imm, drift, sub, MeshC1(sub, (8, 16))), 1).eigenvalues[0]
    assert lam_sub > lam_whole


def test_mean_curvature_shift_free_normal_drift():
    """A purely normal drift on a plane only rescales the measure by a constant."""
    imm = cat.flat_rectangle()
    assert np.allclose(_lam(imm, [0, 0, 2.5], (6, 6)), _lam(imm, [0, 0, 0], (6, 6)), rtol=1e-10)
