"""Resource monotones: robustness measures and entropic quantifiers.

Computes the generalized robustness (primal and dual conic forms), the
standard robustness (with infinite values surfaced via an explicit flag),
the overlap-based minimal robustness, the affine-hull robustness, the
pairwise max/min relative entropies, the hypothesis-testing relative
entropy, and its minimization over the free set or its affine hull.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .model import Model, inner
from .theories import TheoryDescriptor, lin_times_matrix, max_overlap_with_free

LOG2 = math.log(2.0)


@dataclass
class MonotoneResult:
    """Value of a monotone plus optimizers and duality-gap metadata.

    ``infinite`` is the authoritative flag for unbounded measures; ``value``
    and ``log_value`` are set to ``math.inf`` alongside it for convenience.
    ``gap`` is |primal - dual| when both forms were solved, otherwise the
    solver's relative gap.
    """

    value: float
    log_value: float
    infinite: bool = False
    witness: np.ndarray | None = None
    closest_free: np.ndarray | None = None
    mixing: np.ndarray | None = None
    gap: float = 0.0
    status: str = "optimal"


def _result(value: float, **kw) -> MonotoneResult:
    return MonotoneResult(value=value, log_value=math.log2(value) if value > 0 else -math.inf, **kw)


def _infinite(**kw) -> MonotoneResult:
    return MonotoneResult(value=math.inf, log_value=math.inf, infinite=True, **kw)


def r_max_dual(rho: np.ndarray, theory: TheoryDescriptor, tol: float = 1e-8):
    """Dual (witness) form of the generalized robustness; returns (value, witness, gap)."""
    m = Model()
    w = m.herm_psd_var(theory.dim)
    expr = w.expr()
    theory.polar(m, expr, 1.0)
    m.set_objective("max", inner(rho, expr))
    res = m.solve(tol=tol, tag=f"rmax-dual-{theory.kind}").ensure_optimal("generalized robustness (dual)")
    return res.objective, la.herm_part(res.value_herm(w)), res.gap


def r_max_primal(rho: np.ndarray, theory: TheoryDescriptor, tol: float = 1e-8):
    """Primal (mixing) form; returns (value, closest_free, mixing_state)."""
    m = Model()
    x = m.herm_psd_var(theory.dim)
    sigma_expr = x.expr() + rho
    theory.membership(m, sigma_expr)
    m.set_objective("min", x.expr().trace())
    res = m.solve(tol=tol, tag=f"rmax-primal-{theory.kind}").ensure_optimal("generalized robustness (primal)")
    lam = 1.0 + res.objective
    sigma = la.herm_part(res.value_mat(sigma_expr)) / lam
    mixing = None
    if lam > 1.0 + 1e-9:
        mixing = la.herm_part(res.value_herm(x)) / (lam - 1.0)
    return lam, sigma, mixing


def r_max(rho: np.ndarray, theory: TheoryDescriptor, tol: float = 1e-8,
          cross_check: bool = True) -> MonotoneResult:
    """Generalized robustness: max overlap with a positive polar witness.

    The primal mixing form is solved as a cross-check when ``cross_check``
    is set; the primal/dual difference lands in ``gap``.
    """
    rho = la.require_density(rho)
    value, witness, solver_gap = r_max_dual(rho, theory, tol)
    if not cross_check:
        return _result(value, witness=witness, gap=solver_gap)
    lam, sigma, mixing = r_max_primal(rho, theory, tol)
    return _result(value, witness=witness, closest_free=sigma, mixing=mixing,
                   gap=abs(lam - value))


def r_std(rho: np.ndarray, theory: TheoryDescriptor, tol: float = 1e-8) -> MonotoneResult:
    """Standard robustness: the mixing state is itself free; may be infinite."""
    rho = la.require_density(rho)
    m = Model()
    s = m.herm_free_var(theory.dim)
    s_expr = s.expr()
    theory.membership(m, s_expr)
    theory.membership(m, s_expr + rho)
    m.set_objective("min", s_expr.trace())
    res = m.solve(tol=tol, tag=f"rstd-{theory.kind}")
    if res.status == "infeasible":
        return _infinite(status="infeasible")
    res.ensure_optimal("standard robustness")
    lam = 1.0 + res.objective
    sigma = la.herm_part(res.value_mat(s_expr + rho)) / lam
    mixing = None
    if lam > 1.0 + 1e-9:
        mixing = la.herm_part(res.value_herm(s)) / (lam - 1.0)
    return _result(lam, closest_free=sigma, mixing=mixing, gap=res.gap)


def r_min(rho: np.ndarray, theory: TheoryDescriptor, tol: float = 1e-8) -> MonotoneResult:
    """Reciprocal of the best overlap between the support of rho and the free set."""
    rho = la.require_density(rho)
    proj = la.support_projector(rho)
    overlap, sigma = max_overlap_with_free(theory, proj, tol=tol)
    return _result(1.0 / overlap, closest_free=sigma, witness=proj / overlap)


def r_max_affine(rho: np.ndarray, theory: TheoryDescriptor, tol: float = 1e-8,
                 cross_check: bool = True) -> MonotoneResult:
    """Robustness against the affine hull of the free set (dual witness form)."""
    rho = la.require_density(rho)
    m = Model()
    w = m.herm_psd_var(theory.dim)
    expr = w.expr()
    theory.affine_polar(m, expr, 1.0)
    m.set_objective("max", inner(rho, expr))
    res = m.solve(tol=tol, tag=f"rmaxaff-dual-{theory.kind}").ensure_optimal("affine robustness (dual)")
    value, witness = res.objective, la.herm_part(res.value_herm(w))
    if not cross_check:
        return _result(value, witness=witness, gap=res.gap)
    m2 = Model()
    x = m2.herm_psd_var(theory.dim)
    lam_expr = x.expr().trace() + 1.0
    theory.affine_hull(m2, x.expr() + rho, lam_expr)
    m2.set_objective("min", x.expr().trace())
    res2 = m2.solve(tol=tol, tag=f"rmaxaff-primal-{theory.kind}").ensure_optimal("affine robustness (primal)")
    lam = 1.0 + res2.objective
    mixing = None
    if lam > 1.0 + 1e-9:
        mixing = la.herm_part(res2.value_herm(x)) / (lam - 1.0)
    return _result(value, witness=witness, mixing=mixing, gap=abs(lam - value))


def d_max_pair(rho: np.ndarray, sigma: np.ndarray, tol: float = 1e-10) -> float:
    """Max-relative entropy log2 min{lam : rho <= lam sigma}; inf outside supp(sigma)."""
    rho = la.require_hermitian(rho, tol=1e-10, name="rho")
    sigma = la.require_hermitian(sigma, tol=1e-10, name="sigma")
    ev, vec = np.linalg.eigh(sigma)
    top = max(float(ev.max()), 0.0)
    keep = ev > 1e-12 * max(top, 1.0)
    kernel = vec[:, ~keep]
    if kernel.shape[1] and np.abs(kernel.conj().T @ rho @ kernel).max() > tol:
        return math.inf
    support = vec[:, keep]
    inv_half = support * (1.0 / np.sqrt(ev[keep]))
    mid = inv_half.conj().T @ rho @ inv_half
    lam = float(np.linalg.eigvalsh(la.herm_part(mid)).max())
    return math.log2(max(lam, 1e-300))


def d_min_pair(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Min-relative entropy -log2 <support(rho), sigma>; inf for orthogonal pairs."""
    proj = la.support_projector(rho)
    overlap = float(np.real(np.sum(proj.conj() * sigma)))
    if overlap <= 1e-14:
        return math.inf
    return -math.log2(overlap)


def _d_h_zero(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Exact eps = 0 value: the measurement is pinned to identity on supp(rho)."""
    ev, vec = np.linalg.eigh(rho)
    top = max(float(ev.max()), 0.0)
    keep = ev > 1e-12 * max(top, 1.0)
    proj = vec[:, keep] @ vec[:, keep].conj().T
    val = float(np.real(np.sum(proj.conj() * sigma)))
    kernel = vec[:, ~keep]
    if kernel.shape[1]:
        sig_ker = la.herm_part(kernel.conj().T @ sigma @ kernel)
        val += float(np.sum(np.minimum(np.linalg.eigvalsh(sig_ker), 0.0)))
    if val <= 1e-14:
        return math.inf
    return -math.log2(val)


def d_h(rho: np.ndarray, sigma: np.ndarray, eps: float, tol: float = 1e-8) -> float:
    """Hypothesis-testing relative entropy at type-I error eps.

    ``sigma`` may be any Hermitian operator; a nonpositive optimal test value
    is reported as +inf.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    rho = la.require_density(rho)
    sigma = la.require_hermitian(sigma, tol=1e-10, name="sigma")
    if eps == 0.0:
        return _d_h_zero(rho, sigma)
    d = rho.shape[0]
    m = Model()
    meas = m.herm_psd_var(d)
    e = meas.expr()
    m.add_psd(np.eye(d, dtype=complex) - e)
    m.add_geq(inner(rho, e), 1.0 - eps)
    m.set_objective("min", inner(sigma, e))
    res = m.solve(tol=tol, tag="d-h").ensure_optimal("hypothesis-testing entropy")
    if res.objective <= 1e-14:
        return math.inf
    return -math.log2(res.objective)


def d_h_min_over(rho: np.ndarray, eps: float, theory: TheoryDescriptor,
                 domain: str = "free", tol: float = 1e-8) -> float:
    """Hypothesis-testing entropy minimized over F or over aff(F).

    Solved as a single conic program with a scale variable multiplying the
    (affine-)polar constraints. Two exact reductions are used: a singleton
    free set delegates to the pairwise quantity, and at eps = 0 the
    measurement is pinned to the support projector, which removes a
    degenerate boundary constraint.
    """
    if domain not in ("free", "affine"):
        raise ValueError("domain must be 'free' or 'affine'")
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    rho = la.require_density(rho)
    if theory.kind == "thermal":
        # singleton free set: both domains reduce to the pairwise quantity
        return d_h(rho, theory.params["tau"], eps, tol=tol)
    if eps == 0.0:
        return _d_h_min_over_zero(rho, theory, domain, tol)
    d = theory.dim
    m = Model()
    w = m.herm_psd_var(d)
    lam = m.nonneg_var(1)
    e = w.expr()
    m.add_psd(np.eye(d, dtype=complex) - e)
    m.add_geq(inner(rho, e), 1.0 - eps)
    gen = theory.polar if domain == "free" else theory.affine_polar
    gen(m, e, lam.entry(0))
    m.set_objective("min", lam.entry(0))
    res = m.solve(tol=tol, tag=f"dh-min-{domain}-{theory.kind}")
    if res.status == "infeasible":
        return math.inf
    res.ensure_optimal("hypothesis-testing entropy over the theory")
    if res.objective <= 1e-14:
        return math.inf
    return -math.log2(res.objective)


def _d_h_min_over_zero(rho: np.ndarray, theory: TheoryDescriptor, domain: str,
                       tol: float) -> float:
    if domain == "free":
        # min over F of the eps=0 entropy is exactly log R_min
        return r_min(rho, theory, tol=tol).log_value
    ev, vec = np.linalg.eigh(rho)
    keep = ev > 1e-12 * max(float(ev.max()), 1.0)
    proj = vec[:, keep] @ vec[:, keep].conj().T
    kernel = vec[:, ~keep]
    r = kernel.shape[1]
    m = Model()
    lam = m.nonneg_var(1)
    if r == 0:
        expr = lin_times_matrix(1.0, proj)
    else:
        g = m.herm_psd_var(r)
        m.add_psd(np.eye(r, dtype=complex) - g.expr())
        expr = g.expr().conj_by(kernel) + proj
    theory.affine_polar(m, expr, lam.entry(0))
    m.set_objective("min", lam.entry(0))
    res = m.solve(tol=tol, tag=f"dh-min-zero-{theory.kind}")
    if res.status == "infeasible":
        return math.inf
    res.ensure_optimal("hypothesis-testing entropy over the theory (eps=0)")
    if res.objective <= 1e-14:
        return math.inf
    return -math.log2(res.objective)
