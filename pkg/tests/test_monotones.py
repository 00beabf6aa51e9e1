"""Tests for the resource monotones."""

import math

import numpy as np
import pytest

from resbench import linalg as la
from resbench.monotones import (d_h, d_h_min_over, d_max_pair, d_min_pair, r_max,
                                r_max_affine, r_min, r_std)
from resbench.theories import (asymmetry_golden_state, make_asymmetry, make_coherence,
                               make_ppt, make_thermal, max_overlap_with_free,
                               sample_free_state)

APPC_BLOCKS = la.BlockStructure(((0,), (1, 2), (3,)))
TAU = np.diag([2 / 3, 1 / 3]).astype(complex)
PLUS = la.projector(la.uniform_superposition(2))


def standard_theories():
    return {
        "coherence2": make_coherence(2),
        "thermal": make_thermal(TAU),
        "asymmetry": make_asymmetry(APPC_BLOCKS),
        "ppt22": make_ppt(2, 2),
    }


def test_r_max_known_points():
    theory = make_coherence(2)
    assert abs(r_max(PLUS, theory).value - 2.0) < 1e-6
    assert abs(r_max(np.eye(2, dtype=complex) / 2, theory).value - 1.0) < 1e-6
    # qubit closed form: 1 + 2 |rho_01|
    rng = np.random.default_rng(0)
    for _ in range(10):
        rho = la.rand_density(2, rng)
        expect = 1.0 + 2.0 * abs(rho[0, 1])
        assert abs(r_max(rho, theory).value - expect) < 1e-6


def test_r_max_ghz_per_bipartition():
    ghz = la.ghz_state(2, 3)
    for cut in la.bipartitions(3):
        rest = tuple(i for i in range(3) if i not in cut)
        perm = la.permute_systems(ghz, (2, 2, 2), cut + rest)
        d_cut = 2 ** len(cut)
        theory = make_ppt(d_cut, 8 // d_cut)
        assert abs(r_max(la.projector(perm), theory).value - 2.0) < 1e-6


def test_r_std_values():
    theory = make_coherence(2)
    res = r_std(PLUS, theory)
    assert res.infinite and res.value == math.inf and res.log_value == math.inf
    ppt = make_ppt(2, 2)
    assert abs(r_std(la.projector(la.maximally_entangled(2)), ppt).value - 2.0) < 1e-6
    v = np.zeros(4, dtype=complex)
    v[0], v[3] = np.sqrt(0.8), np.sqrt(0.2)
    expect = (np.sqrt(0.8) + np.sqrt(0.2)) ** 2
    assert abs(r_std(la.projector(v), ppt).value - expect) < 1e-6


def test_r_std_schmidt_formula_random():
    # standard robustness of a pure state equals the squared Schmidt-coefficient sum
    ppt = make_ppt(2, 2)
    rng = np.random.default_rng(1)
    for _ in range(5):
        psi = la.rand_pure(4, rng)
        expect = float(np.sum(la.schmidt(psi, (2, 2)).coefficients) ** 2)
        assert abs(r_std(la.projector(psi), ppt).value - expect) < 1e-6


def test_r_min_values():
    theory = make_asymmetry(APPC_BLOCKS)
    assert abs(r_min(la.projector(la.uniform_superposition(4)), theory).value - 2.0) < 1e-6
    for theta in (0.0, np.pi / 4):
        v = r_min(la.projector(asymmetry_golden_state(theta)), theory).value
        assert abs(v - 3.0) < 1e-6
    for name, th in standard_theories().items():
        sigma = sample_free_state(th, np.random.default_rng(2))
        assert abs(r_min(sigma, th).value - 1.0) < 1e-6, name


def test_r_max_affine_matches_r_max_for_affine_theories():
    rng = np.random.default_rng(3)
    for name, theory in standard_theories().items():
        if not theory.is_affine:
            continue
        rho = la.rand_density(theory.dim, rng)
        a = r_max_affine(rho, theory)
        b = r_max(rho, theory)
        assert abs(a.value - b.value) < 1e-6, name
        assert a.gap < 1e-6 and b.gap < 1e-6


def test_r_max_affine_ppt_is_one():
    theory = make_ppt(2, 2)
    rho = la.rand_density(4, np.random.default_rng(4))
    res = r_max_affine(rho, theory)
    assert abs(res.value - 1.0) < 1e-7


def test_r_max_affine_thermal_point():
    theory = make_thermal(TAU)
    res = r_max_affine(la.projector(la.basis_state(2, 1)), theory)
    assert abs(res.value - 3.0) < 1e-6
    # two-parameter grid oracle over diagonal witnesses W = diag(a, b) >= 0
    best = 0.0
    for a in np.linspace(0, 6, 121):
        b = (1.0 - a * 2 / 3) * 3.0  # <W, tau> = 1
        if b >= 0:
            best = max(best, b)
    assert abs(res.value - best) < 1e-6


def test_ordering_chain_random():
    rng = np.random.default_rng(5)
    for name, theory in standard_theories().items():
        for _ in range(25):
            rho = la.rand_density(theory.dim, rng)
            v_min = r_min(rho, theory).value
            v_max = r_max(rho, theory, cross_check=False).value
            v_std = r_std(rho, theory).value
            assert 1.0 - 1e-6 <= v_min, name
            assert v_min <= v_max + 1e-6, name
            assert v_max <= v_std + 1e-6, name


def test_purity_lower_bound_random():
    # R_max(rho) >= Tr(rho^2) / max_free <rho, sigma>
    rng = np.random.default_rng(6)
    for name, theory in standard_theories().items():
        for _ in range(10):
            rho = la.rand_density(theory.dim, rng)
            overlap, _ = max_overlap_with_free(theory, rho)
            bound = float(np.real(np.trace(rho @ rho))) / overlap
            assert r_max(rho, theory, cross_check=False).value >= bound - 1e-6, name


def test_r_max_is_one_iff_free():
    theory = make_coherence(3)
    rng = np.random.default_rng(7)
    sigma = sample_free_state(theory, rng)
    assert abs(r_max(sigma, theory).value - 1.0) < 1e-6
    rho = la.rand_density(3, rng)
    assert r_max(rho, theory).value > 1.0 + 1e-4  # generic states are resourceful


def test_d_max_pair():
    rng = np.random.default_rng(8)
    rho = la.rand_density(2, rng)
    assert abs(d_max_pair(rho, rho)) < 1e-9
    assert abs(d_max_pair(la.projector(la.basis_state(2, 0)), np.eye(2) / 2) - 1.0) < 1e-9
    assert abs(d_max_pair(PLUS, np.diag([0.5, 0.5]).astype(complex)) - 1.0) < 1e-9
    assert d_max_pair(la.projector(la.basis_state(2, 0)),
                      la.projector(la.basis_state(2, 1))) == math.inf


def test_d_min_pair():
    assert abs(d_min_pair(np.eye(2, dtype=complex) / 2, np.eye(2, dtype=complex) / 2)) < 1e-9
    assert abs(d_min_pair(la.projector(la.basis_state(2, 0)), np.eye(2) / 2) - 1.0) < 1e-9
    assert d_min_pair(la.projector(la.basis_state(2, 0)),
                      la.projector(la.basis_state(2, 1))) == math.inf


def test_d_h_points():
    rho = la.rand_density(2, np.random.default_rng(9))
    assert abs(d_h(rho, rho, 0.0)) < 1e-9
    p0 = la.projector(la.basis_state(2, 0))
    assert abs(d_h(p0, np.eye(2, dtype=complex) / 2, 0.5) - 2.0) < 1e-6
    sigma = la.rand_density(2, np.random.default_rng(10))
    assert abs(d_h(rho, sigma, 0.0) - d_min_pair(rho, sigma)) < 1e-9
    with pytest.raises(ValueError):
        d_h(rho, sigma, 1.0)
    with pytest.raises(ValueError):
        d_h(rho, sigma, -0.1)


def test_d_h_nonincreasing_in_eps():
    rng = np.random.default_rng(11)
    rho = la.rand_density(3, rng)
    sigma = la.rand_density(3, rng)
    values = [d_h(rho, sigma, eps) for eps in (0.0, 0.2, 0.4, 0.6)]
    for lo, hi in zip(values, values[1:]):
        assert hi >= lo - 1e-7


def test_d_h_min_over_thermal_identity():
    theory = make_thermal(TAU)
    rng = np.random.default_rng(12)
    for eps in (0.0, 0.3):
        rho = la.rand_density(2, rng)
        assert d_h_min_over(rho, eps, theory, "free") == d_h(rho, TAU, eps)
        assert d_h_min_over(rho, eps, theory, "affine") == d_h(rho, TAU, eps)


def test_d_h_min_over_eps0():
    theory = make_coherence(2)
    assert abs(d_h_min_over(PLUS, 0.0, theory, "free") - 1.0) < 1e-6
    assert abs(d_h_min_over(PLUS, 0.0, theory, "affine") - 1.0) < 1e-6
    rho = la.rand_density(2, np.random.default_rng(13))
    assert abs(d_h_min_over(rho, 0.0, theory, "free")
               - r_min(rho, theory).log_value) < 1e-9


def test_d_h_min_over_below_each_member():
    # the minimum over the free set is below the pairwise value at any member
    rng = np.random.default_rng(14)
    for name, theory in standard_theories().items():
        rho = la.rand_density(theory.dim, rng)
        eps = 0.2
        v = d_h_min_over(rho, eps, theory, "free")
        for _ in range(5):
            sigma = sample_free_state(theory, rng)
            assert v <= d_h(rho, sigma, eps) + 1e-6, name


def test_d_h_min_over_grid_oracle():
    # coherence qubit: direct grid over diagonal free states
    theory = make_coherence(2)
    eps = 0.5
    v = d_h_min_over(PLUS, eps, theory, "free")
    best = math.inf
    for p in np.arange(0.0, 1.0 + 1e-12, 1e-4):
        sigma = np.diag([p, 1 - p]).astype(complex)
        # optimal test for pure rho against diagonal sigma is analytic: the
        # measurement m*|+><+| with m = 1 - eps hits the constraint exactly
        val = (1 - eps) * (p + (1 - p)) / 2
        best = min(best, -math.log2(val))
    assert abs(v - best) < 1e-3


def test_monotone_result_invariants():
    theory = make_coherence(2)
    res = r_max(PLUS, theory)
    assert abs(res.value - 2 ** res.log_value) < 1e-9
    # witness satisfies positivity and the polar constraint
    assert np.linalg.eigvalsh(res.witness).min() > -1e-7
    assert np.real(np.diag(res.witness)).max() <= 1.0 + 1e-7
    assert res.closest_free is not None and res.mixing is not None
