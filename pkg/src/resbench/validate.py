"""Named validation suites backing the CLI validate command and the acceptance tests.

Each suite returns a list of :class:`Check` records; a check carries the
computed value, the expected value or bound, the tolerance at which it was
asserted, and the acceptance criterion it belongs to. Randomness is fully
seeded so identical invocations produce identical numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .channels import apply_choi, max_fidelity_channel
from .conic import SOLVE_STATS
from .distill import (distillation_yield, exact_distillation_possible, fidelity_bounds,
                      g_value, gme_values, golden_certificate, golden_state,
                      log_yield_bisect, optimal_distillation_channel,
                      pure_g_decomposition, constant_overlap_check)
from .monotones import d_h, d_h_min_over, r_max, r_min, r_std
from .theories import (TheoryDescriptor, asymmetry_golden_state, make_asymmetry,
                       make_bisep_ppt, make_coherence, make_ppt, make_thermal)

APPC_BLOCKS = la.BlockStructure(((0,), (1, 2), (3,)))


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    value: float
    expected: float
    tol: float
    criterion: int

    def as_dict(self) -> dict:
        return {"suite": self.suite, "check": self.name, "pass": self.passed,
                "value": self.value, "expected": self.expected, "tol": self.tol,
                "criterion": self.criterion}


def _eq(checks, suite, name, criterion, value, expected, tol):
    checks.append(Check(suite, name, abs(value - expected) <= tol, float(value),
                        float(expected), tol, criterion))


def _le(checks, suite, name, criterion, value, bound, tol=0.0):
    checks.append(Check(suite, name, value <= bound + tol, float(value), float(bound),
                        tol, criterion))


def _true(checks, suite, name, criterion, flag):
    checks.append(Check(suite, name, bool(flag), float(bool(flag)), 1.0, 0.0, criterion))


def standard_theories() -> dict[str, TheoryDescriptor]:
    return {
        "coherence2": make_coherence(2),
        "thermal": make_thermal(np.diag([2 / 3, 1 / 3]).astype(complex)),
        "asymmetry": make_asymmetry(APPC_BLOCKS),
        "ppt22": make_ppt(2, 2),
    }


def _rand_full_rank(dim: int, rng: np.random.Generator, floor: float = 0.02) -> np.ndarray:
    """Full-rank random state with spectrum bounded away from zero."""
    while True:
        rho = la.rand_density(dim, rng)
        if float(np.linalg.eigvalsh(rho).min()) >= floor:
            return rho


def suite_appendix_c(seed: int = 42, solver_tol: float = 1e-8) -> list[Check]:
    """Asymmetry instance: golden family values and the closed-form free fidelity."""
    checks: list[Check] = []
    theory = make_asymmetry(APPC_BLOCKS)
    for theta in (0.0, math.pi / 7, math.pi / 4):
        val = r_min(la.projector(asymmetry_golden_state(theta)), theory, tol=solver_tol).value
        _eq(checks, "appendixC", f"rmin-golden-theta-{theta:.4f}", 1, val, 3.0, 1e-6)
    val = r_min(la.projector(la.uniform_superposition(4)), theory, tol=solver_tol).value
    _eq(checks, "appendixC", "rmin-plusplus", 1, val, 2.0, 1e-6)

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        psi = la.rand_pure(4, rng)
        a, b, c, d = np.abs(psi)
        f_formula = max(a ** 2, d ** 2, b ** 2 + c ** 2)
        f_sdp = 1.0 / r_min(la.projector(psi), theory, tol=solver_tol).value
        worst = max(worst, abs(f_formula - f_sdp))
    _le(checks, "appendixC", "free-fidelity-formula-100-random", 1, worst, 1e-6)

    _true(checks, "appendixC", "golden-not-constant-overlap", 2,
          not constant_overlap_check(asymmetry_golden_state(math.pi / 4), theory))
    for d in (2, 3, 4):
        coh = make_coherence(d)
        _true(checks, "appendixC", f"uniform-constant-overlap-d{d}", 2,
              constant_overlap_check(la.uniform_superposition(d), coh))
    return checks


def suite_appendix_d(seed: int = 42, solver_tol: float = 1e-8) -> list[Check]:
    """PPT theory: maximally entangled values and exact fidelity coincidence."""
    checks: list[Check] = []
    for d in (2, 3):
        theory = make_ppt(d, d)
        psi = la.maximally_entangled(d)
        proj = la.projector(psi)
        _eq(checks, "appendixD", f"rmax-psi{d}", 3,
            r_max(proj, theory, tol=solver_tol).value, d, 1e-6)
        _eq(checks, "appendixD", f"rstd-psi{d}", 3,
            r_std(proj, theory, tol=solver_tol).value, d, 1e-6)
        _eq(checks, "appendixD", f"rmin-psi{d}", 3,
            r_min(proj, theory, tol=solver_tol).value, d, 1e-6)

    theory = make_ppt(2, 2)
    bell = la.maximally_entangled(2)
    rng = np.random.default_rng(seed)
    worst_dev = 0.0
    all_exact = True
    for _ in range(20):
        rho = la.rand_density(4, rng)
        rep = fidelity_bounds(rho, bell, theory, solver_tol=solver_tol)
        rmax_rho = r_max(rho, theory, tol=solver_tol, cross_check=False).value
        worst_dev = max(worst_dev, abs(rep.upper - rmax_rho / 2.0),
                        abs(rep.lower - rmax_rho / 2.0))
        all_exact = all_exact and rep.exact
    _true(checks, "appendixD", "bell-target-reports-exact", 6, all_exact)
    _le(checks, "appendixD", "bell-bounds-match-robust-ratio", 6, worst_dev, 1e-5)
    return checks


def suite_appendix_e(seed: int = 42, solver_tol: float = 1e-8) -> list[Check]:
    """Multipartite helpers: GHZ values and the hull-of-cuts consistency."""
    checks: list[Check] = []
    for d in (2, 3):
        rep = gme_values(la.ghz_state(d, 3), (d, d, d))
        for cut_data in rep.per_cut:
            _eq(checks, "appendixE", f"ghz-d{d}-cut{cut_data['cut']}-rmin", 3,
                cut_data["r_min"], d, 1e-6)
            _eq(checks, "appendixE", f"ghz-d{d}-cut{cut_data['cut']}-rmax", 3,
                cut_data["r_max"], d, 1e-6)
        _eq(checks, "appendixE", f"ghz-d{d}-combined-rmin", 3, rep.combined_r_min, d, 1e-6)
        _eq(checks, "appendixE", f"ghz-d{d}-combined-rmax", 3, rep.combined_r_max_upper, d, 1e-6)
        _true(checks, "appendixE", f"ghz-d{d}-golden-chain", 3, rep.golden_chain_certified)

    bisep = make_bisep_ppt((2, 2, 2))
    rng = np.random.default_rng(seed)
    worst = 0.0
    states = [la.ghz_state(2, 3)]
    for p in (0.7, 0.45):
        v = np.zeros(8, dtype=complex)
        v[0], v[7] = math.sqrt(p), math.sqrt(1 - p)
        states.append(v)
    states.extend(la.rand_pure(8, rng) for _ in range(3))
    for psi in states:
        analytic = gme_values(psi, (2, 2, 2)).combined_r_min
        sdp = r_min(la.projector(psi), bisep, tol=solver_tol).value
        worst = max(worst, abs(analytic - sdp))
    _le(checks, "appendixE", "hull-of-cuts-rmin-consistency", 3, worst, 1e-5)
    return checks


def suite_golden(seed: int = 42, solver_tol: float = 1e-8, n_states: int = 200) -> list[Check]:
    """Golden certificates plus monotone ordering on random pure states."""
    checks: list[Check] = []
    rng = np.random.default_rng(seed)
    worst_rmax_gap = 0.0
    for name, theory in standard_theories().items():
        cert = golden_certificate(theory, solver_tol=solver_tol)
        _eq(checks, "golden", f"{name}-golden-equality", 4, cert.r_min, cert.r_max, 1e-6)
        gold = max(cert.r_min, cert.r_max)
        worst_order = -math.inf
        worst_max_excess = -math.inf
        worst_min_excess = -math.inf
        for _ in range(n_states):
            psi = la.rand_pure(theory.dim, rng)
            proj = la.projector(psi)
            res_max = r_max(proj, theory, tol=solver_tol)
            worst_rmax_gap = max(worst_rmax_gap, res_max.gap)
            v_min = r_min(proj, theory, tol=solver_tol).value
            worst_order = max(worst_order, v_min - res_max.value)
            worst_max_excess = max(worst_max_excess, res_max.value - gold)
            worst_min_excess = max(worst_min_excess, v_min - gold)
        _le(checks, "golden", f"{name}-rmin-below-rmax", 4, worst_order, 0.0, 1e-6)
        _le(checks, "golden", f"{name}-rmax-below-golden", 4, worst_max_excess, 0.0, 1e-6)
        _le(checks, "golden", f"{name}-rmin-below-golden", 4, worst_min_excess, 0.0, 1e-6)
    _le(checks, "golden", "rmax-primal-dual-agreement", 10, worst_rmax_gap, 1e-6)
    return checks


def suite_affine_exact(seed: int = 42, solver_tol: float = 1e-8, n_states: int = 20) -> list[Check]:
    """Channel oracle equals the robustness ratio, and the explicit channel matches."""
    checks: list[Check] = []
    theories = {
        "coherence2": make_coherence(2),
        "coherence3": make_coherence(3),
        "thermal-a": make_thermal(np.diag([2 / 3, 1 / 3]).astype(complex)),
        "thermal-b": make_thermal(np.diag([0.55, 0.30, 0.15]).astype(complex)),
        "asymmetry": make_asymmetry(APPC_BLOCKS),
    }
    rng = np.random.default_rng(seed)
    for name, theory in theories.items():
        phi_m = golden_state(theory)
        proj_m = la.projector(phi_m)
        rmax_m = r_max(proj_m, theory, tol=solver_tol, cross_check=False).value
        worst_formula = 0.0
        worst_channel = 0.0
        for _ in range(n_states):
            rho = la.rand_density(theory.dim, rng)
            oracle, _ = max_fidelity_channel(rho, phi_m, theory, tol=solver_tol)
            rmax_rho = r_max(rho, theory, tol=solver_tol, cross_check=False).value
            worst_formula = max(worst_formula, abs(oracle - rmax_rho / rmax_m))
            _, achieved = optimal_distillation_channel(rho, theory, solver_tol=solver_tol)
            worst_channel = max(worst_channel, abs(achieved - oracle))
        _le(checks, "affine-exact", f"{name}-oracle-vs-robust-ratio", 5, worst_formula, 1e-5)
        _le(checks, "affine-exact", f"{name}-channel-achieves-oracle", 5, worst_channel, 1e-5)
    return checks


def suite_nogo(seed: int = 42, solver_tol: float = 1e-8, n_states: int = 20) -> list[Check]:
    """Full-rank inputs cannot be distilled exactly."""
    checks: list[Check] = []
    rng = np.random.default_rng(seed)
    for name, theory in standard_theories().items():
        phi_g = golden_state(theory)
        rmin_g = r_min(la.projector(phi_g), theory, tol=solver_tol).value
        worst_g = 0.0
        all_impossible = True
        for _ in range(n_states):
            rho = _rand_full_rank(theory.dim, rng)
            worst_g = max(worst_g, g_value(rho, rmin_g, theory, tol=solver_tol).value)
            possible, _ = exact_distillation_possible(rho, theory)
            all_impossible = all_impossible and not possible
        _le(checks, "nogo", f"{name}-overlap-bounded-away-from-1", 7, worst_g, 1.0 - 1e-4)
        _true(checks, "nogo", f"{name}-exact-distillation-ruled-out", 7, all_impossible)
    return checks


def suite_appendix_b(seed: int = 42, solver_tol: float = 1e-8) -> list[Check]:
    """Pure-state gauge split squared equals the overlap program."""
    checks: list[Check] = []
    rng = np.random.default_rng(seed)
    worst = 0.0
    count = 0
    for d in (2, 3, 4):
        theory = make_coherence(d)
        n_states = 17 if d > 2 else 16
        for _ in range(n_states):
            psi = la.rand_pure(d, rng)
            proj = la.projector(psi)
            for k in (1.5, 2.0, 3.0, float(d)):
                split = pure_g_decomposition(psi, k, theory, solver_tol=solver_tol)
                g = g_value(proj, k, theory, tol=solver_tol).value
                worst = max(worst, abs(split.objective ** 2 - g))
                count += 1
    _le(checks, "appendixB", f"gauge-split-squared-vs-overlap-{count}-pairs", 8, worst, 1e-5)

    theory = make_coherence(2)
    g_plus_4 = g_value(la.projector(la.uniform_superposition(2)), 4.0, theory,
                       tol=solver_tol).value
    _eq(checks, "appendixB", "overlap-plus-k4", 8, g_plus_4, 0.5, 1e-6)
    split = pure_g_decomposition(la.uniform_superposition(2), 4.0, theory,
                                 solver_tol=solver_tol)
    _eq(checks, "appendixB", "gauge-split-plus-k4", 8, split.objective ** 2, 0.5, 1e-5)
    return checks


def suite_yield(seed: int = 42, solver_tol: float = 1e-8) -> list[Check]:
    """Hypothesis-testing yield: scale-program vs bisection, thermal identity."""
    checks: list[Check] = []
    rng = np.random.default_rng(seed)
    tau = np.diag([2 / 3, 1 / 3]).astype(complex)
    thermal = make_thermal(tau)

    instances = []
    for eps in (0.1, 0.25):
        for domain in ("free", "affine"):
            instances.append((make_coherence(2), 2, eps, domain))
            instances.append((make_coherence(3), 3, eps, domain))
            instances.append((make_asymmetry(APPC_BLOCKS), 4, eps, domain))
    for eps in (0.1, 0.2, 0.3, 0.4):
        instances.append((make_ppt(2, 2), 4, eps, "free"))
        instances.append((thermal, 2, eps, "free"))
    worst = 0.0
    for theory, dim, eps, domain in instances[:28]:
        rho = la.rand_density(dim, rng)
        direct = d_h_min_over(rho, eps, theory, domain, tol=solver_tol)
        bisect = log_yield_bisect(rho, eps, theory, domain, solver_tol=solver_tol)
        worst = max(worst, abs(direct - bisect))
    _le(checks, "yield", "scale-program-vs-bisection", 9, worst, 1e-5)

    worst_thermal = 0.0
    for eps in (0.0, 0.15, 0.5):
        rho = la.rand_density(2, rng)
        a = d_h_min_over(rho, eps, thermal, "free", tol=solver_tol)
        b = d_h(rho, tau, eps, tol=solver_tol)
        worst_thermal = max(worst_thermal, abs(a - b))
    _le(checks, "yield", "thermal-singleton-identity", 9, worst_thermal, 1e-8)

    point = d_h(la.projector(la.basis_state(2, 0)), np.eye(2, dtype=complex) / 2, 0.5,
                tol=solver_tol)
    _eq(checks, "yield", "hypothesis-test-point", 9, point, 2.0, 1e-6)

    rho = la.rand_density(2, rng)
    yl = distillation_yield(rho, 0.2, thermal, solver_tol=solver_tol)
    ref = d_h(rho, tau, 0.2, tol=solver_tol)
    _eq(checks, "yield", "thermal-yield-upper", 9, yl["upper_log_R"], ref, 1e-8)
    _eq(checks, "yield", "thermal-yield-lower", 9, yl["lower_log_R"], ref, 1e-8)
    return checks


SUITES = {
    "appendixC": suite_appendix_c,
    "appendixD": suite_appendix_d,
    "appendixE": suite_appendix_e,
    "golden": suite_golden,
    "affine-exact": suite_affine_exact,
    "appendixB": suite_appendix_b,
    "nogo": suite_nogo,
    "yield": suite_yield,
}


def solver_health_checks() -> list[Check]:
    """Criterion over the whole run: every optimal solve within the gap budget."""
    checks: list[Check] = []
    _le(checks, "health", f"max-relative-gap-over-{SOLVE_STATS.optimal}-optimal-solves",
        10, SOLVE_STATS.max_relgap, 1e-7)
    non_optimal = sum(v for k, v in SOLVE_STATS.by_status.items()
                      if k not in ("optimal", "infeasible"))
    _le(checks, "health", "non-optimal-solve-count", 10, non_optimal, 0.0)
    return checks


def run_suites(names: list[str], seed: int = 42, solver_tol: float = 1e-8,
               threads: int = 1) -> list[Check]:
    """Run the named suites (deterministic order) plus the solver health tally."""
    if "all" in names:
        names = list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}")
    SOLVE_STATS.reset()
    ordered = [n for n in SUITES if n in names]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {n: pool.submit(SUITES[n], seed, solver_tol) for n in ordered}
            results = {n: futures[n].result() for n in ordered}
    else:
        results = {n: SUITES[n](seed, solver_tol) for n in ordered}
    checks: list[Check] = []
    for n in ordered:
        checks.extend(results[n])
    checks.extend(solver_health_checks())
    return checks
