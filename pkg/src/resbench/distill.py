"""One-shot distillation: fidelity bounds, golden states, and channels.

The central objects are the measurable overlap program G(rho; k) and its
affine-polar variant, which sandwich the best distillation fidelity
achievable with resource non-generating channels. Golden states (pure
states maximizing both the overlap-based and robustness-based monotones
with equal values) are constructed analytically per theory or located by a
multi-restart search, certified by the equality of the two monotones.
Explicit binary measure-and-prepare channels achieve the lower bounds and
are verified to be free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .channels import ChoiMatrix, apply_choi, verify_free_channel
from .conic import SolverError
from .model import Model, embed_soc, inner
from .monotones import MonotoneResult, d_h_min_over, r_max, r_max_affine, r_min, r_std
from .theories import TheoryDescriptor, max_overlap_with_free, support_overlap


@dataclass
class GValue:
    """Value of the scaled-polar overlap program at parameter k."""

    k: float
    value: float
    witness: np.ndarray | None
    affine: bool
    status: str = "optimal"


def g_value(rho: np.ndarray, k: float, theory: TheoryDescriptor,
            tol: float = 1e-8) -> GValue:
    """G(rho; k): best overlap with an effect W, 0 <= W <= 1, k W in the polar."""
    if k < 1.0:
        raise ValueError("k must be >= 1")
    rho = la.require_density(rho)
    m = Model()
    w = m.herm_psd_var(theory.dim)
    e = w.expr()
    m.add_psd(np.eye(theory.dim, dtype=complex) - e)
    theory.polar(m, e, 1.0 / k)
    m.set_objective("max", inner(rho, e))
    res = m.solve(tol=tol, tag=f"g-{theory.kind}").ensure_optimal("overlap program")
    return GValue(k=k, value=res.objective, witness=la.herm_part(res.value_herm(w)), affine=False)


def g_affine(rho: np.ndarray, k: float, theory: TheoryDescriptor,
             tol: float = 1e-8) -> GValue:
    """Affine-polar variant of G; infeasibility is reported as value 0."""
    if k < 1.0:
        raise ValueError("k must be >= 1")
    rho = la.require_density(rho)
    m = Model()
    w = m.herm_psd_var(theory.dim)
    e = w.expr()
    m.add_psd(np.eye(theory.dim, dtype=complex) - e)
    theory.affine_polar(m, e, 1.0 / k)
    m.set_objective("max", inner(rho, e))
    res = m.solve(tol=tol, tag=f"gb-{theory.kind}")
    if res.status == "infeasible":
        return GValue(k=k, value=0.0, witness=None, affine=True, status="infeasible")
    res.ensure_optimal("affine overlap program")
    return GValue(k=k, value=res.objective, witness=la.herm_part(res.value_herm(w)), affine=True)


def constant_overlap_check(phi: np.ndarray, theory: TheoryDescriptor,
                           tol: float = 1e-7) -> bool:
    """True iff <phi, sigma> is the same for every free sigma (two conic solves)."""
    proj = la.projector(la.require_pure(phi))
    hi, _ = max_overlap_with_free(theory, proj, sense="max")
    lo, _ = max_overlap_with_free(theory, proj, sense="min")
    return hi - lo <= tol


@dataclass
class FidelityReport:
    """Upper/lower distillation-fidelity bounds with their mechanisms."""

    upper: float
    lower: float
    exact: bool
    mechanism: dict
    condition_flags: dict
    target: np.ndarray | None = None


def fidelity_bounds(rho: np.ndarray, phi: np.ndarray, theory: TheoryDescriptor,
                    tol: float = 1e-6, solver_tol: float = 1e-8) -> FidelityReport:
    """Sandwich the best free-channel fidelity of rho -> phi via overlap programs.

    The upper bound evaluates the overlap program at the reciprocal free
    overlap of the target; a constant-overlap target tightens it to the
    affine variant. Lower bounds come from the program at the standard
    robustness (when finite) and from the affine variant at the generalized
    robustness, which needs no condition.
    """
    rho = la.require_density(rho)
    phi = la.require_pure(phi)
    rmin_t = r_min(la.projector(phi), theory, tol=solver_tol)
    if rmin_t.value <= 1.0 + tol:
        raise ValueError("target must be resourceful: its best free overlap is 1")
    rmax_t = r_max(la.projector(phi), theory, tol=solver_tol, cross_check=False)
    rs_t = r_std(la.projector(phi), theory, tol=solver_tol)
    const = constant_overlap_check(phi, theory)
    monotones_equal = abs(rmin_t.value - rmax_t.value) <= tol
    golden = monotones_equal
    if theory.golden_analytic is not None:
        gold_val = r_max(la.projector(theory.golden_analytic()), theory,
                         tol=solver_tol, cross_check=False).value
        golden = monotones_equal and abs(rmax_t.value - gold_val) <= tol

    mechanism = {}
    if const:
        upper = g_affine(rho, rmin_t.value, theory, tol=solver_tol).value
        mechanism["upper"] = "affine-overlap-at-rmin"
    else:
        upper = g_value(rho, rmin_t.value, theory, tol=solver_tol).value
        mechanism["upper"] = "overlap-at-rmin"

    lower = -math.inf
    if not rs_t.infinite:
        cand = g_value(rho, rs_t.value, theory, tol=solver_tol).value
        if cand > lower:
            lower = cand
            mechanism["lower"] = "overlap-at-rstd"
    gb = g_affine(rho, rmax_t.value, theory, tol=solver_tol)
    if gb.status == "optimal" and gb.value > lower:
        lower = gb.value
        mechanism["lower"] = "affine-overlap-at-rmax"

    # the bounds provably coincide when upper and lower evaluate the same
    # program (matching scale + matching polar variant), or through the
    # robustness-ratio identity for a golden target in an affine theory
    exact = False
    if monotones_equal and const:
        exact = True
        mechanism["exact"] = "coinciding-affine-overlap"
    elif not rs_t.infinite and abs(rmin_t.value - rs_t.value) <= tol:
        exact = True
        mechanism["exact"] = "coinciding-overlap"
    elif theory.is_affine and golden:
        exact = True
        mechanism["exact"] = "affine-golden-ratio"
    flags = {"constant_overlap": const, "rs_finite": not rs_t.infinite,
             "target_is_golden": golden}
    return FidelityReport(upper=upper, lower=lower, exact=exact,
                          mechanism=mechanism, condition_flags=flags, target=phi)


def golden_state(theory: TheoryDescriptor, restarts: int = 20, seed: int = 0) -> np.ndarray:
    """Analytic golden state when the theory ships one, else a search result."""
    if theory.golden_analytic is not None:
        return theory.golden_analytic()
    return golden_search(theory, restarts=restarts, seed=seed).state


def fidelity_max_golden(rho: np.ndarray, theory: TheoryDescriptor,
                        tol: float = 1e-6, solver_tol: float = 1e-8) -> FidelityReport:
    """Fidelity bounds for distilling the theory's maximal (golden) state.

    Upper bound: robustness ratio R_max(rho) / R_min(phi_m). Lower bound:
    R_max(rho) / R_s(phi_m) when the standard robustness is finite,
    otherwise the affine-robustness ratio, which applies to any robustness
    maximizer. Exactness holds for affine theories and whenever the two
    robustness measures agree on the golden state.
    """
    rho = la.require_density(rho)
    phi_m = golden_state(theory)
    proj_m = la.projector(phi_m)
    rmax_rho = r_max(rho, theory, tol=solver_tol, cross_check=False)
    rmin_m = r_min(proj_m, theory, tol=solver_tol)
    rmax_m = r_max(proj_m, theory, tol=solver_tol, cross_check=False)
    rs_m = r_std(proj_m, theory, tol=solver_tol)

    upper = rmax_rho.value / rmin_m.value
    mechanism = {"upper": "robust-ratio-rmin"}
    lower = -math.inf
    if not rs_m.infinite:
        lower = rmax_rho.value / rs_m.value
        mechanism["lower"] = "robust-ratio-rstd"
    rb_rho = r_max_affine(rho, theory, tol=solver_tol, cross_check=False)
    cand = rb_rho.value / rmax_m.value
    if cand > lower:
        lower = cand
        mechanism["lower"] = "affine-robust-ratio"

    exact = theory.is_affine or (not rs_m.infinite and abs(rs_m.value - rmax_m.value) <= tol)
    flags = {"constant_overlap": None, "rs_finite": not rs_m.infinite,
             "target_is_golden": abs(rmin_m.value - rmax_m.value) <= tol}
    return FidelityReport(upper=upper, lower=lower, exact=exact,
                          mechanism=mechanism, condition_flags=flags, target=phi_m)


@dataclass
class GoldenCertificate:
    """Best pure state found plus the equality certificate of its two monotones."""

    state: np.ndarray
    r_min: float
    r_max: float
    matched: bool
    search_trace: list = field(default_factory=list)


def canonical_phase(psi: np.ndarray) -> np.ndarray:
    """Fix the global phase: first non-negligible amplitude real positive."""
    for c in psi:
        if abs(c) > 1e-8:
            return psi * (abs(c) / c)
    return psi


def _lex_key(psi: np.ndarray):
    return tuple(np.round(np.concatenate([psi.real, psi.imag]), 9))


def golden_search(theory: TheoryDescriptor, restarts: int = 20, tol: float = 1e-6,
                  seed: int = 0, max_iters: int = 50, fd_step: float = 1e-5,
                  solver_tol: float = 1e-8) -> GoldenCertificate:
    """Heuristic search for a robustness-maximizing pure state.

    Sphere-projected ascent on the dual robustness value with
    finite-difference gradients and multiple random restarts. The returned
    certificate checks the golden-state equality of the two monotones; the
    search itself carries no optimality guarantee.
    """
    d = theory.dim

    def value(vec: np.ndarray) -> float:
        psi = (vec[:d] + 1j * vec[d:])
        psi = psi / np.linalg.norm(psi)
        return r_max(la.projector(psi), theory, tol=solver_tol, cross_check=False).value

    trace = []
    candidates = []
    for r in range(restarts):
        rng = np.random.default_rng(seed + 1000 * r)
        vec = rng.standard_normal(2 * d)
        vec /= np.linalg.norm(vec)
        f = value(vec)
        iters = 0
        for iters in range(1, max_iters + 1):
            grad = np.empty(2 * d)
            for i in range(2 * d):
                shifted = vec.copy()
                shifted[i] += fd_step
                shifted /= np.linalg.norm(shifted)
                grad[i] = (value(shifted) - f) / fd_step
            step = 0.5
            improved = False
            while step > 1e-6:
                cand = vec + step * grad
                cand /= np.linalg.norm(cand)
                fc = value(cand)
                if fc > f + 1e-12:
                    gain = fc - f
                    vec, f = cand, fc
                    improved = True
                    break
                step *= 0.5
            if not improved or gain < 1e-8:
                break
        psi = vec[:d] + 1j * vec[d:]
        psi = canonical_phase(psi / np.linalg.norm(psi))
        candidates.append((f, psi))
        trace.append({"restart": r, "iterations": iters, "value": f})

    best_val = max(c[0] for c in candidates)
    near = [psi for f, psi in candidates if f >= best_val - tol]
    psi_best = min(near, key=_lex_key)
    rmin_v = r_min(la.projector(psi_best), theory, tol=solver_tol)
    rmax_v = r_max(la.projector(psi_best), theory, tol=solver_tol, cross_check=False)
    matched = abs(rmin_v.value - rmax_v.value) <= tol
    return GoldenCertificate(state=psi_best, r_min=rmin_v.value, r_max=rmax_v.value,
                             matched=matched, search_trace=trace)


def golden_certificate(theory: TheoryDescriptor, psi: np.ndarray | None = None,
                       tol: float = 1e-6, solver_tol: float = 1e-8) -> GoldenCertificate:
    """Certify a given (or the analytic) golden candidate by the equality test."""
    psi = golden_state(theory) if psi is None else la.require_pure(psi)
    rmin_v = r_min(la.projector(psi), theory, tol=solver_tol)
    rmax_v = r_max(la.projector(psi), theory, tol=solver_tol, cross_check=False)
    return GoldenCertificate(state=psi, r_min=rmin_v.value, r_max=rmax_v.value,
                             matched=abs(rmin_v.value - rmax_v.value) <= tol)


def build_channel(w: np.ndarray, phi: np.ndarray, delta: np.ndarray) -> ChoiMatrix:
    """Binary measure-and-prepare channel X -> Tr(WX) phi + Tr((1-W)X) delta."""
    w = la.require_hermitian(w, tol=1e-9, name="effect")
    ev = np.linalg.eigvalsh(w)
    if ev.min() < -1e-8 or ev.max() > 1.0 + 1e-8:
        raise ValueError("effect must satisfy 0 <= W <= 1")
    phi = la.require_pure(phi)
    delta = la.require_density(delta)
    d_in = w.shape[0]
    d_out = phi.size
    if delta.shape[0] != d_out:
        raise ValueError("prepared states must share the output dimension")
    j = np.kron(w.T, la.projector(phi)) + np.kron((np.eye(d_in) - w).T, delta)
    return ChoiMatrix(j=la.herm_part(j), d_in=d_in, d_out=d_out)


def _clip_effect(w: np.ndarray) -> np.ndarray:
    ev, vec = np.linalg.eigh(w)
    return (vec * np.clip(ev, 0.0, 1.0)) @ vec.conj().T


def optimal_distillation_channel(rho: np.ndarray, theory: TheoryDescriptor,
                                 solver_tol: float = 1e-8,
                                 verify: bool = True) -> tuple[ChoiMatrix, float]:
    """Measure-and-prepare channel achieving the golden-state fidelity bound.

    The effect is the (affine-)robustness witness of the input scaled by the
    golden state's robustness; the failure branch prepares the mixing state
    from the golden state's primal robustness decomposition. Freeness is
    verified exactly for affine theories and by sampled membership otherwise.
    """
    rho = la.require_density(rho)
    phi_m = golden_state(theory)
    proj_m = la.projector(phi_m)
    if theory.is_affine:
        witness = r_max_affine(rho, theory, tol=solver_tol, cross_check=False).witness
        golden_meas = r_max(proj_m, theory, tol=solver_tol)
        scale = golden_meas.value
        delta = golden_meas.mixing
    else:
        witness = r_max(rho, theory, tol=solver_tol, cross_check=False).witness
        golden_meas = r_std(proj_m, theory, tol=solver_tol)
        if golden_meas.infinite:
            raise SolverError("golden state has infinite standard robustness; "
                              "no measure-and-prepare construction available")
        scale = golden_meas.value
        delta = golden_meas.mixing
    if delta is None:
        raise SolverError("robustness decomposition returned no mixing state")
    effect = _clip_effect(witness / scale)
    choi = build_channel(effect, phi_m, delta)
    achieved = float(np.real(np.sum(proj_m.conj() * apply_choi(choi, rho))))
    if verify and not verify_free_channel(choi, theory):
        raise SolverError("constructed distillation channel failed the freeness check")
    return choi, achieved


def exact_distillation_possible(rho: np.ndarray, theory: TheoryDescriptor,
                                tol: float = 1e-8):
    """Support-based no-go check for exact one-shot distillation.

    Returns (False, free_state) when a free state lives inside supp(rho),
    which rules out exact distillation of any resourceful target; (True,
    None) when the obstruction does not apply.
    """
    rho = la.require_density(rho)
    proj = la.support_projector(rho)
    overlap, sigma = support_overlap(theory, proj)
    if overlap >= 1.0 - tol:
        return False, sigma
    return True, None


def distillation_yield(rho: np.ndarray, eps: float, theory: TheoryDescriptor,
                       solver_tol: float = 1e-8) -> dict:
    """One-shot yield window at infidelity eps.

    ``upper_log_R`` bounds the min-relative-entropy content of any target
    reachable with fidelity 1 - eps; ``lower_log_R`` is the achievability
    threshold (against the max-relative entropy for reduced-dimensional
    theories, against the standard robustness for full-dimensional ones).
    """
    full_dim = len(theory.span_basis) == theory.dim ** 2
    upper = d_h_min_over(rho, eps, theory, "free", tol=solver_tol)
    lower = upper if full_dim else d_h_min_over(rho, eps, theory, "affine", tol=solver_tol)
    return {"upper_log_R": upper, "lower_log_R": lower}


def log_yield_bisect(rho: np.ndarray, eps: float, theory: TheoryDescriptor,
                     domain: str = "free", iters: int = 60,
                     solver_tol: float = 1e-8) -> float:
    """Bisection cross-check: log of the largest k with G(rho; k) >= 1 - eps.

    Valid because the overlap program is nonincreasing in k. The upper
    bracket comes from the input's generalized robustness, which bounds the
    feasible k by R_max(rho) / (1 - eps).
    """
    rho = la.require_density(rho)
    fn = g_value if domain == "free" else g_affine
    rmax_rho = r_max(rho, theory, tol=solver_tol, cross_check=False).value
    k_lo = 1.0
    k_hi = max(2.0, rmax_rho) / (1.0 - eps) * 1.01 + 0.01
    target = 1.0 - eps

    def feasible(k: float) -> bool:
        return fn(rho, k, theory, tol=solver_tol).value >= target - 1e-9

    if not feasible(k_lo):
        return 0.0
    if feasible(k_hi):
        return math.log2(k_hi)
    for _ in range(iters):
        mid = 0.5 * (k_lo + k_hi)
        if feasible(mid):
            k_lo = mid
        else:
            k_hi = mid
    return math.log2(0.5 * (k_lo + k_hi))


def interconversion_channels(rho: np.ndarray, theory: TheoryDescriptor,
                             tol: float = 1e-6, solver_tol: float = 1e-8):
    """Free channels mapping rho to the golden state and back.

    Requires matching robustness: either the standard robustness of rho
    equals that of the golden state (which must also equal its generalized
    robustness), or, in affine theories with a constant-overlap golden
    state, the generalized robustnesses match. The reverse channel measures
    {phi_m, 1 - phi_m} and prepares rho or a mixing state that returns free
    inputs to the free set.
    """
    rho = la.require_density(rho)
    phi_m = golden_state(theory)
    proj_m = la.projector(phi_m)
    rmax_m = r_max(proj_m, theory, tol=solver_tol, cross_check=False)
    rs_m = r_std(proj_m, theory, tol=solver_tol)

    route = None
    if not rs_m.infinite and abs(rs_m.value - rmax_m.value) <= tol:
        rs_rho = r_std(rho, theory, tol=solver_tol)
        if not rs_rho.infinite and abs(rs_rho.value - rs_m.value) <= tol:
            route = "matched-standard"
            delta2 = rs_rho.mixing
    if route is None and theory.is_affine and constant_overlap_check(phi_m, theory):
        rmax_rho = r_max(rho, theory, tol=solver_tol)
        if abs(rmax_rho.value - rmax_m.value) <= tol:
            route = "matched-affine"
            delta2 = rmax_rho.mixing
    if route is None:
        raise ValueError("interconversion requires matching robustness between the "
                         "state and the golden state")
    if delta2 is None:
        # rho is itself golden-valued yet free decomposition degenerate: cannot happen
        # for resourceful rho, but guard anyway
        raise SolverError("no mixing state available for the reverse channel")

    choi_fwd, achieved = optimal_distillation_channel(rho, theory, solver_tol=solver_tol)
    if achieved < 1.0 - 10 * tol:
        raise SolverError(f"forward channel reaches fidelity {achieved}, expected 1")
    d = theory.dim
    j_rev = np.kron(proj_m.T, rho) + np.kron((np.eye(d) - proj_m).T, delta2)
    choi_rev = ChoiMatrix(j=la.herm_part(j_rev), d_in=d, d_out=d)
    back = apply_choi(choi_rev, proj_m)
    if np.abs(back - rho).max() > 10 * tol:
        raise SolverError("reverse channel does not reproduce the input state")
    if not verify_free_channel(choi_rev, theory):
        raise SolverError("reverse channel failed the freeness check")
    return choi_fwd, choi_rev


@dataclass
class GaugeDecomposition:
    """Split psi = x + y minimizing gamma(x)/sqrt(k) + ||y||."""

    x: np.ndarray
    y: np.ndarray
    gamma_x: float
    norm_y: float
    objective: float


def pure_g_decomposition(psi: np.ndarray, k: float, theory: TheoryDescriptor,
                         solver_tol: float = 1e-8) -> GaugeDecomposition:
    """Vector-split form of the pure-state overlap program.

    Implemented for the coherence theory, where the pure-state gauge is the
    absolute sum of amplitudes; the square of the optimal split objective
    equals G(psi; k). Moduli enter through 2x2 PSD blocks and the euclidean
    part through the arrow-matrix norm cone.
    """
    if theory.kind != "coherence":
        raise ValueError("the pure-state gauge split is implemented for the "
                         "coherence theory only")
    if k < 1.0:
        raise ValueError("k must be >= 1")
    psi = la.require_pure(psi)
    d = psi.size
    m = Model()
    mod_blocks = []
    for _ in range(d):
        b = m.herm_psd_var(1 + 1)
        mod_blocks.append(b.expr())
    arrow, t_lin, y_entries = embed_soc(m, d)
    obj = t_lin
    inv_sqrt_k = 1.0 / math.sqrt(k)
    for i in range(d):
        e = mod_blocks[i]
        m.add_eq(e.re_entry(0, 1) + y_entries[i][0], float(psi[i].real))
        m.add_eq(e.im_entry(0, 1) + y_entries[i][1], float(psi[i].imag))
        obj = obj + inv_sqrt_k * 0.5 * (e.re_entry(0, 0) + e.re_entry(1, 1))
    m.set_objective("min", obj)
    res = m.solve(tol=solver_tol, tag="gauge-split").ensure_optimal("gauge split")
    x = np.array([complex(res.value_lin(mod_blocks[i].re_entry(0, 1)),
                          res.value_lin(mod_blocks[i].im_entry(0, 1))) for i in range(d)])
    y = psi - x
    gamma_x = float(np.sum(np.abs(x)))
    norm_y = float(np.linalg.norm(y))
    return GaugeDecomposition(x=x, y=y, gamma_x=gamma_x, norm_y=norm_y,
                              objective=gamma_x * inv_sqrt_k + norm_y)


@dataclass
class GmeReport:
    """Per-bipartition and combined robustness data for a multipartite pure state."""

    per_cut: list
    combined_r_min: float
    combined_r_max_upper: float
    golden_chain_certified: bool


def gme_values(psi: np.ndarray, local_dims: tuple[int, ...],
               tol: float = 1e-9) -> GmeReport:
    """Analytic per-cut robustness values from Schmidt data.

    For each bipartition, the overlap-based monotone is the reciprocal of
    the largest squared Schmidt coefficient, and both robustness measures
    equal the squared sum of the coefficients. The combined overlap value is
    the minimum over cuts; when it matches the combined robustness upper
    bound, the state certifies the full golden chain.
    """
    psi = la.require_pure(psi)
    dims = tuple(int(x) for x in local_dims)
    if int(np.prod(dims)) != psi.size:
        raise ValueError("local dimensions do not match the state dimension")
    per_cut = []
    for cut in la.bipartitions(len(dims)):
        coeffs = la.schmidt_coefficients_across_cut(psi, dims, cut)
        r_min_k = 1.0 / float(coeffs[0] ** 2)
        r_max_k = float(np.sum(coeffs) ** 2)
        per_cut.append({"cut": cut, "r_min": r_min_k, "r_max": r_max_k})
    combined_min = min(c["r_min"] for c in per_cut)
    combined_max_upper = min(c["r_max"] for c in per_cut)
    certified = abs(combined_min - combined_max_upper) <= tol
    return GmeReport(per_cut=per_cut, combined_r_min=combined_min,
                     combined_r_max_upper=combined_max_upper,
                     golden_chain_certified=certified)
