import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from driftplate import bounds as B
from driftplate import catalogue as cat
from driftplate.assembly import DomainSpec, build_forms
from driftplate.eigensolve import smallest_eigenpairs
from driftplate.errors import InsufficientSpectrum, NotATranslator, RankDeficiencyWarning, VariantMismatch
from driftplate.geometry import DriftSpec

BEAM = (500.56390174043, 3803.537080498)

lam1s = st.floats(1e-2, 1e6)
consts = st.floats(0.0, 50.0)


def _consts(n=1, c1=0.0, c1t=0.0, c2=0.0, **kw):
    base = dict(n=n, ambient_dim=n, max_H=0.0, max_nH2=0.0, max_nu_top=0.0, c1_hat=c1, c1_tilde=c1t,
                c2_hat=c2, c3=0.0, c4_tilde=0.0, c5=0.0, on_unit_sphere=False)
    base.update(kw)
    return B.GeometricConstants(**base)


def _geometry_constants(imm, nu, res=64, unit=False):
    dom = DomainSpec.whole(imm)
    return B.constants(imm, DriftSpec(nu, unit_flag=unit), dom, B.sample_grid(dom, res))


# --- formula evaluation -----------------------------------------------------------


def test_thm11_simple_example():
    r = B.thm11_check([1.0, 2.0], _consts())
    assert r.lhs == 1.0
    assert np.isclose(r.rhs, 4 * np.sqrt(1.5), rtol=1e-15)
    assert r.passed and np.isclose(r.margin, r.rhs - r.lhs)


def test_thm11_on_beam_values():
    r = B.thm11_check(BEAM, _consts())
    assert np.isclose(r.lhs, 57.4715, atol=1e-4)
    assert np.isclose(r.rhs, np.sqrt(24 * BEAM[0]), rtol=1e-12)
    assert np.isclose(r.rhs, 109.606, atol=1e-3)
    assert r.passed


@given(lam1s, st.integers(1, 6))
def test_zero_constant_reduction(lam1, n):
    assert np.isclose(B.thm11_rhs(lam1, n, 0.0, 0.0), np.sqrt(8 * (n + 2) * lam1), rtol=1e-12)


@given(lam1s)
def test_cor12_zero_constant_n1(lam1):
    assert np.isclose(B.cor12_rhs(lam1, 1, 0.0), 4 * np.sqrt(3) * np.sqrt(lam1), rtol=1e-12)


@given(lam1s, st.integers(1, 5), consts, consts, st.floats(1e-3, 5.0))
def test_rhs_nondecreasing_in_constants(lam1, n, c, ct, bump):
    base = B.thm11_rhs(lam1, n, c, ct)
    assert B.thm11_rhs(lam1, n, c + bump, ct) >= base
    assert B.thm11_rhs(lam1, n, c, ct + bump) >= base
    assert B.cor11_rhs(lam1, n, c + bump, ct) >= B.cor11_rhs(lam1, n, c, ct)
    assert B.cor12_rhs(lam1, n, c + bump) >= B.cor12_rhs(lam1, n, c)
    assert B.cor13_rhs(lam1, n, c + bump) >= B.cor13_rhs(lam1, n, c)


@given(lam1s, st.integers(1, 5), consts, consts)
def test_optimal_delta_reproduces_thm11(lam1, n, c, ct):
    extra = B.drift_extra(lam1, c, ct)
    d = B.optimal_delta(lam1, n, extra)
    assert np.isclose(B.delta_bound(d, lam1, n, extra), B.thm11_rhs(lam1, n, c, ct), rtol=1e-12)
    for other in (0.5 * d, 2 * d):
        assert B.delta_bound(other, lam1, n, extra) >= B.delta_bound(d, lam1, n, extra)


@given(st.lists(st.floats(1.0, 1e5), min_size=3, max_size=6), consts)
def test_summed_forms_imply_shifted_forms(lams, c2):
    """Cor 1.3 margin is never below Cor 1.2 margin; same for Cor 1.1 versus Thm 1.1."""
    lam = np.sort(lams)
    n = len(lam) - 1
    k = _consts(n=n, c1=c2, c1t=c2 / 3, c2=c2)
    assert B.cor13_check(lam, k).margin >= B.cor12_check(lam, k).margin - 1e-9 * B.cor12_check(lam, k).rhs
    assert B.cor11_check(lam, k).margin >= B.thm11_check(lam, k).margin - 1e-9 * B.thm11_check(lam, k).rhs


def test_degenerate_gap_passes():
    r = B.thm51_check([16.0, 16.0], 1)
    assert r.lhs == 0.0 and r.passed


def test_thm51_formula():
    lam1 = 16.0
    want = 4 * np.sqrt((4 + 2 + 0.25) * (1.5 * 4 + 2 + 0.25))
    assert np.isclose(B.thm51_check([lam1, 20.0], 1).rhs, want, rtol=1e-15)


def test_cor52_note_for_curves():
    assert "n >= 2" in B.cor52_check([1.0, 2.0], 1).note
    assert B.cor52_check([1.0, 2.0, 3.0], 2).note == ""


def test_insufficient_spectrum():
    with pytest.raises(InsufficientSpectrum):
        B.thm11_check([1.0, 2.0], _consts(n=2))


def test_translator_gate():
    with pytest.raises(NotATranslator):
        B.thm51_check([1.0, 2.0], 1, residual=1e-3)
    B.thm51_check([1.0, 2.0], 1, residual=1e-12)


def test_report_serialises():
    d = B.thm11_check(BEAM, _consts()).as_dict()
    assert d["theorem"] == "thm1.1" and d["passed"] is True
    assert set(d) >= {"lhs", "rhs", "margin", "eigenvalues", "constants", "n"}


# --- constants ----------------------------------------------------------------------


def test_flat_rectangle_constants_vanish():
    k = _geometry_constants(cat.flat_rectangle(), [0.0, 0.0, 0.0], res=8)
    assert k.c1_hat == k.c1_tilde == k.c2_hat == 0.0


def test_grim_reaper_constants():
    k = _geometry_constants(cat.grim_reaper_arc(1.0), [0.0, 1.0], res=64, unit=True)
    assert np.isclose(k.c1_hat, 0.25, rtol=1e-14)
    assert np.isclose(k.c1_tilde, 0.25 * np.sin(1.0), rtol=1e-14)


def test_sphere_band_constants():
    k = _geometry_constants(cat.sphere_band(), [0.0, 0.0, 0.5], res=(16, 32))
    assert k.on_unit_sphere
    assert np.isclose(k.max_nH2, 4.0, rtol=1e-12)
    assert np.isclose(k.c4_hat, 1.0, rtol=1e-12)  # n^2/4 with H-bar = 0
    assert k.c4_tilde == k.c5


@pytest.mark.parametrize("name,nu", [("annulus", [0.7, -0.3]), ("grim_reaper_plane", [0, 0, 1.0]),
                                     ("sphere_band", [0.2, 0.1, 0.5])])
def test_constants_monotone_under_refinement(name, nu):
    imm = cat.build(name)
    coarse = _geometry_constants(imm, nu, res=8)
    fine = _geometry_constants(imm, nu, res=16)
    for f in ("c1_hat", "c1_tilde", "c2_hat"):
        assert getattr(fine, f) >= getattr(coarse, f)
    assert coarse.c1_tilde <= 0.25 * np.linalg.norm(nu) + 1e-15


def test_sample_grid_nested_and_closed():
    dom = DomainSpec.whole(cat.annulus())
    g8 = B.sample_grid(dom, 8)
    g16 = B.sample_grid(dom, 16)
    assert len(g8) == 9 * 8
    assert {tuple(np.round(p, 12)) for p in g8} <= {tuple(np.round(p, 12)) for p in g16}
    assert np.isclose(g8[:, 0].min(), 0.5) and np.isclose(g8[:, 0].max(), 1.5)


@pytest.mark.parametrize("field,n,H,want", [("R", 2, 0.0, 3.0), ("C", 2, 1.0, 5.0), ("Q", 1, 0.0, 2.5)])
def test_projective_constants(field, n, H, want):
    c6, c6t = B.projective_constants(n, field, H, 0.0)
    assert c6 == want and c6t == 0.0


def test_projective_field_dims():
    assert B.FIELD_DIMS == {"R": 1, "C": 2, "Q": 4}
    with pytest.raises(ValueError):
        B.projective_constants(2, "O", 0.0, 0.0)


def test_cor64_uses_projective_constants():
    lam = [10.0, 12.0, 15.0]
    r = B.cor64_check(lam, 2, *B.projective_constants(2, "R", 0.0, 0.4))
    assert np.isclose(r.rhs, B.thm11_rhs(10.0, 2, 3.0, 0.1))


# --- application variants -----------------------------------------------------------


def test_minimal_variant_on_normal_drift():
    k = _geometry_constants(cat.flat_rectangle(), [0.0, 0.0, 1.0], res=8)
    assert k.c3 == 0.0
    lam = [1300.0, 5400.0, 5400.0]
    r = B.cor6x_check(lam, k, 2, "minimal")
    assert np.isclose(r.rhs, np.sqrt(8 * 4 * 1300.0), rtol=1e-12)


def test_variant_mismatch():
    k = _geometry_constants(cat.annulus(), [0.0, 0.0], res=8)
    with pytest.raises(VariantMismatch):
        B.cor6x_check([1.0, 2.0, 3.0], k, 2, "sphere")
    kg = _geometry_constants(cat.grim_reaper_arc(), [0.0, 1.0], res=8)
    with pytest.raises(VariantMismatch):
        B.cor6x_check([1.0, 2.0], kg, 1, "minimal")
    with pytest.raises(ValueError):
        B.cor6x_check([1.0, 2.0], kg, 1, "torus")


def test_sphere_variants_agree_when_hbar_zero():
    k = _geometry_constants(cat.sphere_band(), [0.0, 0.0, 0.5], res=(16, 32))
    lam = [71.6, 81.3, 81.3]
    a = B.cor6x_check(lam, k, 2, "sphere")
    b = B.cor6x_check(lam, k, 2, "unit_sphere")
    assert np.isclose(a.rhs, b.rhs, rtol=1e-12)


# --- trial functions and the general formula ------------------------------------------


def test_gram_schmidt_on_interval(beam100):
    forms, spec = beam100
    tf = B.gram_schmidt_trial_functions(forms, spec)
    assert tf.tau.shape == (1, 1) and abs(abs(tf.tau[0, 0]) - 1) < 1e-15


def test_gram_schmidt_on_arc(reaper_arc):
    imm, drift, forms, spec = reaper_arc
    tf = B.gram_schmidt_trial_functions(forms, spec)
    assert tf.rank == 2
    assert abs(tf.R[1, 0]) <= 1e-8
    assert np.allclose(tf.tau @ tf.tau.T, np.eye(2), atol=1e-14)
    assert tf.grad_sum_residual <= 1e-12 and tf.lnu_sum_residual <= 1e-12


def test_gram_schmidt_rank_warning_on_plane():
    forms = build_forms(cat.flat_rectangle(), DriftSpec([0.5, 0.0, 0.0]), (6, 6))
    spec = smallest_eigenpairs(forms, 4)
    with pytest.warns(RankDeficiencyWarning):
        tf = B.gram_schmidt_trial_functions(forms, spec)
    assert tf.orthogonality_residual <= 1e-8


def test_gram_schmidt_needs_enough_pairs():
    forms = build_forms(cat.grim_reaper_arc(), DriftSpec([0.0, 1.0]), 20)
    with pytest.raises(InsufficientSpectrum):
        B.gram_schmidt_trial_functions(forms, smallest_eigenpairs(forms, 2))


def test_general_formula_on_arc(reaper_arc):
    imm, drift, forms, spec = reaper_arc
    dom = DomainSpec.whole(imm)
    k = B.constants(imm, drift, dom, B.sample_grid(dom, 240, forms.mesh))
    tf = B.gram_schmidt_trial_functions(forms, spec)
    rep = B.general_formula_check(forms, spec, tf, consts=k)
    assert rep.passed and rep.upsilon_ok
    assert len(rep.rows) == 2 * 6
    assert np.isclose(rep.phi_hat, rep.phi_hat_from_dirichlet, rtol=1e-10)
    assert np.isclose(rep.delta_bound_at_star, rep.thm11_rhs, rtol=1e-12)
    grid = sorted(B.DEFAULT_DELTAS)
    i = grid.index(rep.delta_grid_argmin)
    assert grid[max(i - 1, 0)] <= rep.delta_star <= grid[min(i + 1, len(grid) - 1)]


def test_general_formula_zero_gap_row():
    """A repeated eigenvalue gives LHS = 0 and a nonnegative RHS."""
    forms = build_forms(cat.flat_rectangle(), DriftSpec([0.0, 0.0, 0.0]), (8, 8))
    spec = smallest_eigenpairs(forms, 4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficiencyWarning)
        tf = B.gram_schmidt_trial_functions(forms, spec)
    rep = B.general_formula_check(forms, spec, tf)
    assert all(r["rhs"] >= 0 for r in rep.rows)
    assert rep.passed


@pytest.mark.parametrize("x0,holds", [(0.6, True), (1.0, True), (1.4, False)])
def test_translator_rhs_versus_sampled_constants(x0, holds):
    """The universal translator RHS need not dominate the sampled-constant RHS.

    Separate maxima of ``n^2 H^2`` and ``|nu^T|`` overcount the pointwise
    identity ``H^2 + |nu^T|^2 = 1``; near the ends of a wide arc this makes the
    sampled constants larger than the universal ones.
    """
    imm = cat.grim_reaper_arc(x0)
    drift = DriftSpec([0.0, 1.0], unit_flag=True)
    forms = build_forms(imm, drift, 60)
    lam = smallest_eigenpairs(forms, 2).eigenvalues
    dom = DomainSpec.whole(imm)
    k = B.constants(imm, drift, dom, B.sample_grid(dom, 120, forms.mesh))
    universal = B.thm51_check(lam, 1).rhs
    sampled = B.thm11_check(lam, k).rhs
    assert (universal >= sampled) is holds
