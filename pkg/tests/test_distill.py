"""Tests for the distillation operations."""

import math

import numpy as np
import pytest

from resbench import linalg as la
from resbench.channels import apply_choi
from resbench.distill import (build_channel, constant_overlap_check, distillation_yield,
                              exact_distillation_possible, fidelity_bounds,
                              fidelity_max_golden, g_affine, g_value, gme_values,
                              golden_certificate, golden_search, interconversion_channels,
                              log_yield_bisect, optimal_distillation_channel,
                              pure_g_decomposition)
from resbench.monotones import d_h_min_over, r_min, r_max
from resbench.theories import (asymmetry_golden_state, make_asymmetry, make_coherence,
                               make_ppt, make_thermal, sample_free_state)

APPC_BLOCKS = la.BlockStructure(((0,), (1, 2), (3,)))
TAU = np.diag([2 / 3, 1 / 3]).astype(complex)
PLUS_VEC = la.uniform_superposition(2)
PLUS = la.projector(PLUS_VEC)


def standard_theories():
    return {
        "coherence2": make_coherence(2),
        "thermal": make_thermal(TAU),
        "asymmetry": make_asymmetry(APPC_BLOCKS),
        "ppt22": make_ppt(2, 2),
    }


def test_g_value_points():
    theory = make_coherence(2)
    rng = np.random.default_rng(0)
    rho = la.rand_density(2, rng)
    assert abs(g_value(rho, 1.0, theory).value - 1.0) < 1e-7
    assert abs(g_value(np.eye(2, dtype=complex) / 2, 2.0, theory).value - 0.5) < 1e-7
    assert abs(g_value(PLUS, 2.0, theory).value - 1.0) < 1e-7
    with pytest.raises(ValueError):
        g_value(rho, 0.5, theory)


def test_g_value_bounds_and_monotonicity():
    rng = np.random.default_rng(1)
    for name, theory in standard_theories().items():
        rho = la.rand_density(theory.dim, rng)
        prev = 1.1
        for k in (1.0, 1.5, 2.0, 3.0):
            val = g_value(rho, k, theory).value
            assert 1.0 / k - 1e-7 <= val <= 1.0 + 1e-7, name
            assert val <= prev + 1e-6, name
            prev = val


def test_g_affine_points():
    theory = make_thermal(TAU)
    assert abs(g_affine(la.projector(la.basis_state(2, 1)), 3.0, theory).value - 1.0) < 1e-6
    coh = make_coherence(2)
    rho = la.rand_density(2, np.random.default_rng(2))
    assert abs(g_affine(rho, 1.0, coh).value - 1.0) < 1e-6
    sigma = np.eye(2, dtype=complex) / 2
    for k in (1.5, 2.0):
        assert abs(g_affine(sigma, k, coh).value - 1.0 / k) < 1e-6
        assert abs(g_value(sigma, k, coh).value - 1.0 / k) < 1e-6


def test_constant_overlap():
    for d in (2, 3, 4):
        assert constant_overlap_check(la.uniform_superposition(d), make_coherence(d))
    asym = make_asymmetry(APPC_BLOCKS)
    assert not constant_overlap_check(asymmetry_golden_state(np.pi / 4), asym)
    thermal = make_thermal(TAU)
    assert constant_overlap_check(la.rand_pure(2, np.random.default_rng(3)), thermal)


def test_fidelity_bounds_qubit_example():
    theory = make_coherence(2)
    rho = 0.9 * PLUS + 0.1 * np.eye(2) / 2
    rep = fidelity_bounds(rho, PLUS_VEC, theory)
    assert rep.exact
    assert abs(rep.upper - 0.95) < 1e-6
    assert abs(rep.lower - 0.95) < 1e-6
    assert rep.condition_flags["constant_overlap"]
    assert not rep.condition_flags["rs_finite"]
    assert rep.condition_flags["target_is_golden"]


def test_fidelity_bounds_rejects_free_target():
    theory = make_coherence(2)
    with pytest.raises(ValueError):
        fidelity_bounds(PLUS, la.basis_state(2, 0), theory)


def test_fidelity_bounds_lower_below_upper_random():
    rng = np.random.default_rng(4)
    for name, theory in standard_theories().items():
        phi = theory.golden_analytic()
        for _ in range(5):
            rho = la.rand_density(theory.dim, rng)
            rep = fidelity_bounds(rho, phi, theory)
            assert rep.lower <= rep.upper + 1e-6, name
            assert rep.exact, name
            assert rep.upper - rep.lower <= 1e-6, name


def test_fidelity_max_golden_points():
    theory = make_coherence(2)
    for p in (0.0, 0.5, 0.9):
        rho = p * PLUS + (1 - p) * np.eye(2) / 2
        rep = fidelity_max_golden(rho, theory)
        assert rep.exact
        assert abs(rep.upper - (1 + p) / 2) < 1e-6
        assert abs(rep.lower - (1 + p) / 2) < 1e-6
    ppt = make_ppt(2, 2)
    rep = fidelity_max_golden(la.projector(la.maximally_entangled(2)), ppt)
    assert rep.exact and abs(rep.upper - 1.0) < 1e-6 and abs(rep.lower - 1.0) < 1e-6
    rep = fidelity_max_golden(np.eye(2, dtype=complex) / 2, make_coherence(2))
    assert abs(rep.upper - 0.5) < 1e-6 and abs(rep.lower - 0.5) < 1e-6


def test_build_channel_cases():
    delta = la.projector(la.basis_state(2, 0))
    ch = build_channel(np.eye(2), PLUS_VEC, delta)
    rho = la.rand_density(2, np.random.default_rng(5))
    assert np.abs(apply_choi(ch, rho) - PLUS).max() < 1e-10
    ch = build_channel(np.zeros((2, 2)), PLUS_VEC, delta)
    assert np.abs(apply_choi(ch, rho) - delta).max() < 1e-10
    with pytest.raises(ValueError):
        build_channel(np.diag([1.5, 0.0]), PLUS_VEC, delta)
    # optimal witness channel reaches the lower fidelity bound
    theory = make_coherence(2)
    rho = 0.5 * PLUS + 0.5 * np.eye(2) / 2
    rep = fidelity_bounds(rho, PLUS_VEC, theory)
    gb = g_affine(rho, 2.0, theory)
    eff = gb.witness
    ch = build_channel(np.clip(np.linalg.eigvalsh(eff), 0, 1).sum() * 0 + eff, PLUS_VEC,
                       la.projector(np.array([1, -1], dtype=complex) / np.sqrt(2)))
    achieved = float(np.real(np.sum(PLUS.conj() * apply_choi(ch, rho))))
    assert achieved >= rep.lower - 1e-6


def test_optimal_channel_matches_bounds_sandwich():
    rng = np.random.default_rng(6)
    for name, theory in standard_theories().items():
        phi = theory.golden_analytic()
        for _ in range(3):
            rho = la.rand_density(theory.dim, rng)
            rep = fidelity_bounds(rho, phi, theory)
            _, achieved = optimal_distillation_channel(rho, theory)
            assert rep.lower - 1e-6 <= achieved <= rep.upper + 1e-6, name


def test_optimal_channel_known_values():
    theory = make_coherence(2)
    rho = 0.5 * PLUS + 0.5 * np.eye(2) / 2
    _, achieved = optimal_distillation_channel(rho, theory)
    assert abs(achieved - 0.75) < 1e-6
    thermal = make_thermal(TAU)
    _, achieved = optimal_distillation_channel(TAU, thermal)
    assert abs(achieved - 1 / 3) < 1e-6
    ppt = make_ppt(2, 2)
    _, achieved = optimal_distillation_channel(la.projector(la.maximally_entangled(2)), ppt)
    assert abs(achieved - 1.0) < 1e-6


def test_free_channel_monotonicity_of_g():
    # free channels cannot increase the overlap program value
    theory = make_coherence(2)
    rng = np.random.default_rng(7)
    choi, _ = optimal_distillation_channel(0.6 * PLUS + 0.4 * np.eye(2) / 2, theory)
    for _ in range(10):
        rho = la.rand_density(2, rng)
        out = apply_choi(choi, rho)
        for k in (1.5, 2.0):
            assert (g_value(out, k, theory).value
                    <= g_value(rho, k, theory).value + 1e-6)


def test_exact_distillation_possible():
    rng = np.random.default_rng(8)
    for name, theory in standard_theories().items():
        rho = la.rand_density(theory.dim, rng)
        possible, witness = exact_distillation_possible(rho, theory)
        assert not possible, name
        assert witness is not None
    coh = make_coherence(2)
    possible, witness = exact_distillation_possible(PLUS, coh)
    assert possible and witness is None
    asym = make_asymmetry(APPC_BLOCKS)
    v01 = np.kron(la.basis_state(2, 0), la.basis_state(2, 1))
    possible, witness = exact_distillation_possible(la.projector(v01), asym)
    assert not possible
    assert np.abs(witness - la.projector(v01)).max() < 1e-8


def test_quantitative_nogo():
    rng = np.random.default_rng(9)
    theory = make_coherence(2)
    gold = r_min(PLUS, theory).value
    for _ in range(5):
        rho = la.rand_density(2, rng)
        if np.linalg.eigvalsh(rho).min() < 0.02:
            continue
        assert g_value(rho, gold, theory).value <= 1.0 - 1e-6


def test_distillation_yield():
    thermal = make_thermal(TAU)
    rng = np.random.default_rng(10)
    rho = la.rand_density(2, rng)
    from resbench.monotones import d_h
    ref = d_h(rho, TAU, 0.3)
    yl = distillation_yield(rho, 0.3, thermal)
    assert yl["upper_log_R"] == ref and yl["lower_log_R"] == ref
    coh = make_coherence(2)
    yl = distillation_yield(PLUS, 0.0, coh)
    assert abs(yl["upper_log_R"] - 1.0) < 1e-6
    assert abs(yl["lower_log_R"] - 1.0) < 1e-6
    # feasibility cross-check at eps = 0.05 for a strongly coherent input
    rho9 = 0.9 * PLUS + 0.1 * np.eye(2) / 2
    yl = distillation_yield(rho9, 0.05, coh)
    rep = fidelity_max_golden(rho9, coh)
    target_feasible = yl["lower_log_R"] >= 1.0 - 1e-9
    assert target_feasible == (rep.upper >= 0.95 - 1e-9)
    with pytest.raises(ValueError):
        distillation_yield(rho9, 1.0, coh)


def test_yield_bisection_agreement():
    rng = np.random.default_rng(11)
    theory = make_coherence(2)
    rho = la.rand_density(2, rng)
    for domain in ("free", "affine"):
        direct = d_h_min_over(rho, 0.25, theory, domain)
        bisect = log_yield_bisect(rho, 0.25, theory, domain)
        assert abs(direct - bisect) < 1e-5


def test_interconversion_coherence():
    theory = make_coherence(2)
    minus = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2)
    fwd, rev = interconversion_channels(la.projector(minus), theory)
    assert np.abs(apply_choi(fwd, la.projector(minus)) - PLUS).max() < 1e-6
    assert np.abs(apply_choi(rev, PLUS) - la.projector(minus)).max() < 1e-6


def test_interconversion_ppt():
    theory = make_ppt(2, 2)
    psi = np.zeros(4, dtype=complex)
    psi[1] = psi[2] = 1 / np.sqrt(2)
    bell = la.projector(la.maximally_entangled(2))
    fwd, rev = interconversion_channels(la.projector(psi), theory)
    assert np.abs(apply_choi(fwd, la.projector(psi)) - bell).max() < 1e-6
    assert np.abs(apply_choi(rev, bell) - la.projector(psi)).max() < 1e-6
    # golden state itself round-trips
    fwd, rev = interconversion_channels(bell, theory)
    assert np.abs(apply_choi(fwd, bell) - bell).max() < 1e-6


def test_interconversion_rejects_mismatch():
    theory = make_ppt(2, 2)
    with pytest.raises(ValueError):
        interconversion_channels(np.eye(4, dtype=complex) / 4, theory)


def test_pure_g_decomposition_points():
    theory = make_coherence(2)
    gd = pure_g_decomposition(PLUS_VEC, 2.0, theory)
    assert abs(gd.objective ** 2 - 1.0) < 1e-5
    gd = pure_g_decomposition(PLUS_VEC, 4.0, theory)
    assert abs(gd.objective ** 2 - 0.5) < 1e-5
    gd = pure_g_decomposition(la.basis_state(2, 0), 4.0, theory)
    assert abs(gd.objective - 0.5) < 1e-5
    assert np.abs(gd.x + gd.y - la.basis_state(2, 0)).max() < 1e-8
    with pytest.raises(ValueError):
        pure_g_decomposition(PLUS_VEC, 2.0, make_ppt(2, 2))


def test_pure_g_decomposition_matches_g_random():
    rng = np.random.default_rng(12)
    for d in (2, 3):
        theory = make_coherence(d)
        for _ in range(5):
            psi = la.rand_pure(d, rng)
            for k in (1.5, float(d)):
                gd = pure_g_decomposition(psi, k, theory)
                g = g_value(la.projector(psi), k, theory).value
                assert abs(gd.objective ** 2 - g) < 1e-5


def test_gme_values():
    rep = gme_values(la.ghz_state(2, 3), (2, 2, 2))
    assert len(rep.per_cut) == 3
    for c in rep.per_cut:
        assert abs(c["r_min"] - 2.0) < 1e-9
        assert abs(c["r_max"] - 2.0) < 1e-9
    assert rep.golden_chain_certified
    w = np.zeros(8, dtype=complex)
    w[1] = w[2] = w[4] = 1 / np.sqrt(3)
    rep = gme_values(w, (2, 2, 2))
    for c in rep.per_cut:
        assert abs(c["r_min"] - 1.5) < 1e-9
        assert abs(c["r_max"] - (1 + 2 * np.sqrt(2) / 3)) < 1e-9
    with pytest.raises(ValueError):
        gme_values(la.ghz_state(2, 3), (2, 2))


def test_golden_certificates():
    for name, theory in standard_theories().items():
        cert = golden_certificate(theory)
        assert cert.matched, name
        assert abs(cert.r_min - cert.r_max) <= 1e-6, name


def test_golden_search_small():
    theory = make_coherence(2)
    cert = golden_search(theory, restarts=3, seed=7, max_iters=30)
    assert cert.matched
    assert abs(cert.r_max - 2.0) < 1e-3
    assert np.allclose(np.abs(cert.state), 1 / np.sqrt(2), atol=2e-3)
    assert cert.search_trace and cert.state[0].imag == pytest.approx(0.0, abs=1e-12)


def test_golden_search_thermal():
    theory = make_thermal(TAU)
    cert = golden_search(theory, restarts=3, seed=1, max_iters=30)
    assert abs(cert.r_max - 3.0) < 1e-3
    assert abs(abs(cert.state[1]) - 1.0) < 2e-3


def test_random_pure_states_do_not_beat_golden():
    rng = np.random.default_rng(13)
    for name, theory in standard_theories().items():
        cert = golden_certificate(theory)
        gold = max(cert.r_min, cert.r_max)
        for _ in range(20):
            psi = la.rand_pure(theory.dim, rng)
            proj = la.projector(psi)
            assert r_max(proj, theory, cross_check=False).value <= gold + 1e-6, name
            assert r_min(proj, theory).value <= gold + 1e-6, name
