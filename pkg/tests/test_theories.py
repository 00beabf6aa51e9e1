"""Tests for the theory plugins and their constraint generators."""

import numpy as np
import pytest

from resbench import linalg as la
from resbench.model import Model, inner
from resbench.theories import (asymmetry_golden_state, canonical_free_state,
                               free_state_model, make_asymmetry, make_bisep_ppt,
                               make_coherence, make_ppt, make_thermal,
                               max_overlap_with_free, sample_free_state,
                               theory_from_config)

APPC_BLOCKS = la.BlockStructure(((0,), (1, 2), (3,)))
TAU = np.diag([2 / 3, 1 / 3]).astype(complex)


def standard_theories():
    return {
        "coherence2": make_coherence(2),
        "thermal": make_thermal(TAU),
        "asymmetry": make_asymmetry(APPC_BLOCKS),
        "ppt22": make_ppt(2, 2),
    }


def accepts_membership(theory, sigma) -> bool:
    m, expr = free_state_model(theory)
    m.add_mat_eq(expr, sigma)
    m.set_objective("min", expr.trace())
    return m.solve().status == "optimal"


def accepts_polar(theory, w, s=1.0, affine=False) -> bool:
    m = Model()
    wv = m.herm_free_var(theory.dim)
    m.add_mat_eq(wv.expr(), w)
    gen = theory.affine_polar if affine else theory.polar
    gen(m, wv.expr(), s)
    m.set_objective("min", wv.expr().trace())
    return m.solve().status == "optimal"


def test_coherence_membership_and_polar():
    theory = make_coherence(2)
    assert accepts_membership(theory, np.eye(2, dtype=complex) / 2)
    assert not accepts_membership(theory, la.projector(la.uniform_superposition(2)))
    assert accepts_polar(theory, np.ones((2, 2), dtype=complex))
    assert not accepts_polar(theory, np.diag([1.5, 0.0]).astype(complex))


def test_coherence_golden_matches_grid_oracle():
    # the pure-state robustness in this theory is (sum |c_i|)^2; a coarse grid
    # over normalized amplitude profiles never beats the uniform vector
    theory = make_coherence(3)
    golden = theory.golden_analytic()
    assert np.allclose(np.abs(golden), 1 / np.sqrt(3))
    best = 0.0
    for a in np.linspace(0, 1, 25):
        for b in np.linspace(0, np.sqrt(max(1 - a * a, 0)), 25):
            c = np.sqrt(max(1 - a * a - b * b, 0.0))
            best = max(best, (a + b + c) ** 2)
    assert best <= np.sum(np.abs(golden)) ** 2 + 1e-9


def test_thermal_descriptor():
    theory = make_thermal(TAU)
    assert accepts_membership(theory, TAU)
    assert not accepts_membership(theory, np.diag([0.5, 0.5]).astype(complex))
    ground = theory.golden_analytic()
    # eigendecomposition oracle: minimal-eigenvalue eigenvector of tau
    assert abs(abs(ground @ la.basis_state(2, 1).conj()) - 1.0) < 1e-12
    with pytest.raises(ValueError):
        make_thermal(np.diag([1.0, 0.0]).astype(complex))


def test_thermal_uniform_gibbs_golden_value():
    theory = make_thermal(np.eye(3, dtype=complex) / 3)
    psi = theory.golden_analytic()
    v, _ = max_overlap_with_free(theory, la.projector(psi))
    assert abs(1.0 / v - 3.0) < 1e-6


def test_asymmetry_appc_values():
    theory = make_asymmetry(APPC_BLOCKS)
    for theta in (0.0, np.pi / 7, np.pi / 4):
        v, _ = max_overlap_with_free(theory, la.projector(asymmetry_golden_state(theta)))
        assert abs(v - 1 / 3) < 1e-6
    v, _ = max_overlap_with_free(theory, la.projector(la.uniform_superposition(4)))
    assert abs(v - 0.5) < 1e-6
    v01 = np.kron(la.basis_state(2, 0), la.basis_state(2, 1))
    assert accepts_membership(theory, la.projector(v01))


def test_ppt_descriptor():
    theory = make_ppt(2, 2)
    bell = la.maximally_entangled(2)
    # the scaled maximally entangled projector is a feasible polar witness
    assert accepts_polar(theory, 2 * la.projector(bell))
    assert not accepts_polar(theory, 4 * la.projector(bell))
    v01 = np.kron(la.basis_state(2, 0), la.basis_state(2, 1))
    assert accepts_membership(theory, la.projector(v01))
    assert not accepts_membership(theory, la.projector(bell))
    v, _ = max_overlap_with_free(theory, la.projector(bell))
    assert abs(v - 0.5) < 1e-6


def test_ppt_affine_polar_pins_identity():
    # full-dimensional theory: the affine polar set collapses to the identity
    theory = make_ppt(2, 2)
    rng = np.random.default_rng(0)
    m = Model()
    w = m.herm_free_var(4)
    theory.affine_polar(m, w.expr(), 1.0)
    m.set_objective("max", inner(la.rand_hermitian(4, rng), w.expr()))
    res = m.solve()
    assert res.status == "optimal"
    assert np.abs(res.value_herm(w) - np.eye(4)).max() < 1e-6


@pytest.mark.parametrize("name", ["coherence2", "thermal", "asymmetry", "ppt22"])
def test_polar_consistency(name):
    # witnesses accepted at scale 1 never exceed overlap 1 with free states
    theory = standard_theories()[name]
    rng = np.random.default_rng(11)
    d = theory.dim
    frees = [sample_free_state(theory, rng) for _ in range(50)]
    for _ in range(50):
        m = Model()
        w = m.herm_free_var(d)
        theory.polar(m, w.expr(), 1.0)
        # bound the sample so random objectives stay bounded
        m.add_psd(2.0 * np.eye(d) - w.expr())
        m.add_psd(w.expr() + 2.0 * np.eye(d))
        m.set_objective("max", inner(la.rand_hermitian(d, rng), w.expr()))
        res = m.solve()
        assert res.status == "optimal"
        wmat = res.value_herm(w)
        for sigma in frees:
            assert np.real(np.sum(wmat.conj() * sigma)) <= 1.0 + 1e-7


@pytest.mark.parametrize("name", ["coherence2", "thermal", "asymmetry"])
def test_affine_polar_consistency(name):
    theory = standard_theories()[name]
    rng = np.random.default_rng(12)
    d = theory.dim
    frees = [sample_free_state(theory, rng) for _ in range(20)]
    for _ in range(20):
        m = Model()
        w = m.herm_free_var(d)
        theory.affine_polar(m, w.expr(), 1.0)
        m.add_psd(2.0 * np.eye(d) - w.expr())
        m.add_psd(w.expr() + 2.0 * np.eye(d))
        m.set_objective("max", inner(la.rand_hermitian(d, rng), w.expr()))
        res = m.solve()
        assert res.status == "optimal"
        wmat = res.value_herm(w)
        for sigma in frees:
            assert abs(np.real(np.sum(wmat.conj() * sigma)) - 1.0) <= 1e-7


@pytest.mark.parametrize("name", ["coherence2", "asymmetry"])
def test_affine_polar_matches_affine_hull_generator(name):
    # cross-consistency of the two descriptions of the affine hull: witnesses
    # with constant overlap 1 on hull samples are exactly the affine-polar
    # feasible points, in both directions
    theory = standard_theories()[name]
    rng = np.random.default_rng(13)
    d = theory.dim

    def sample_hull_member():
        m = Model()
        a = m.herm_free_var(d)
        theory.affine_hull(m, a.expr(), 1.0)
        m.add_psd(2.0 * np.eye(d) - a.expr())
        m.add_psd(a.expr() + 2.0 * np.eye(d))
        m.set_objective("max", inner(la.rand_hermitian(d, rng), a.expr()))
        res = m.solve()
        assert res.status == "optimal"
        return res.value_herm(a)

    hull_samples = [sample_hull_member() for _ in range(16)]
    for _ in range(10):
        m = Model()
        w = m.herm_free_var(d)
        theory.affine_polar(m, w.expr(), 1.0)
        m.add_psd(2.0 * np.eye(d) - w.expr())
        m.add_psd(w.expr() + 2.0 * np.eye(d))
        m.set_objective("max", inner(la.rand_hermitian(d, rng), w.expr()))
        res = m.solve()
        wmat = res.value_herm(w)
        for a in hull_samples:
            assert abs(np.real(np.sum(wmat.conj() * a)) - 1.0) <= 1e-6

    # converse: any Hermitian solution of <W, A_j> = 1 over a spanning set of
    # hull samples is accepted by the affine-polar generator
    from resbench.model import _herm_basis
    flat = np.stack([a.reshape(-1) for a in hull_samples])
    assert np.linalg.matrix_rank(flat, tol=1e-8) == len(theory.span_basis)
    herm_basis = _herm_basis(d)
    mat = np.array([[float(np.real(np.sum(a.conj() * herm_basis[:, :, k])))
                     for k in range(d * d)] for a in hull_samples])
    for _ in range(5):
        particular, *_ = np.linalg.lstsq(mat, np.ones(len(hull_samples)), rcond=None)
        null = la.rand_hermitian(d, rng).reshape(-1)
        null_coef = np.array([float(np.real(np.sum(
            herm_basis[:, :, k].conj().reshape(-1) * null))) for k in range(d * d)])
        null_coef -= np.linalg.lstsq(mat, mat @ null_coef, rcond=None)[0]
        coefs = particular + null_coef
        w = np.einsum("ijk,k->ij", herm_basis, coefs)
        assert np.abs(mat @ coefs - 1.0).max() < 1e-8
        assert accepts_polar(theory, w, affine=True)


def test_free_affine_basis_members_are_free():
    for name, theory in standard_theories().items():
        if theory.free_affine_basis is None:
            continue
        for b in theory.free_affine_basis:
            assert accepts_membership(theory, b), f"{name} basis element not free"


def test_free_affine_basis_spans():
    for theory in (make_coherence(3), make_asymmetry(APPC_BLOCKS)):
        basis = np.stack([b.reshape(-1) for b in theory.free_affine_basis])
        span = np.stack([b.reshape(-1) for b in theory.span_basis])
        assert np.linalg.matrix_rank(basis) == len(theory.span_basis)
        assert np.linalg.matrix_rank(np.concatenate([basis, span])) == len(theory.span_basis)


def test_theory_config_roundtrip():
    for theory in standard_theories().values():
        again = theory_from_config(theory.config())
        assert again.kind == theory.kind
        assert again.dim == theory.dim
    with pytest.raises(ValueError):
        theory_from_config({"kind": "unknown"})


def test_canonical_free_states_are_free():
    for theory in standard_theories().values():
        assert accepts_membership(theory, canonical_free_state(theory))


def test_bisep_ppt_membership():
    theory = make_bisep_ppt((2, 2, 2))
    # a mixture of per-cut product states is biseparable
    v = np.kron(la.basis_state(2, 0), la.maximally_entangled(2))
    assert accepts_membership(theory, la.projector(v))
    assert not accepts_membership(theory, la.projector(la.ghz_state(2, 3)))
