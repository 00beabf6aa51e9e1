"""Resource theories as bundles of conic constraint generators.

Each theory describes its free-state set F through generators that emit
constraints on a model expression: membership in cone(F), the polar
inequality <X, sigma> <= s for all free sigma, the affine polar equality
<X, sigma> = s, and membership in lam * aff(F). Analytic shortcuts (golden
states, spanning bases) are attached where known.

Four theories are built in: diagonal coherence, thermal (single Gibbs
state), U(1)-type asymmetry over a block structure, and PPT entanglement.
A multi-cut PPT descriptor for genuine multipartite entanglement tests is
also provided.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import linalg as la
from .model import LinExpr, MatExpr, Model, as_lin, inner


def lin_times_matrix(s, c: np.ndarray) -> MatExpr:
    """Matrix expression s * C for a scalar expression (or number) s."""
    c = np.asarray(c, dtype=complex)
    s = as_lin(s)
    terms = {k: c[:, :, None] * v[None, None, :] for k, v in s.coefs.items()}
    return MatExpr(c.shape[0], terms, s.const * c)


def diag_expr(v, d: int) -> MatExpr:
    """Matrix expression diag(v) for a nonneg vector variable v."""
    t = np.zeros((d, d, d), dtype=complex)
    for i in range(d):
        t[i, i, i] = 1.0
    return MatExpr(d, {v.block: t})


@dataclass(frozen=True)
class TheoryDescriptor:
    """A resource theory as conic constraint generators plus analytic data."""

    kind: str
    dim: int
    is_affine: bool
    membership: Callable[[Model, MatExpr], None]
    polar: Callable[[Model, MatExpr, object], None]
    affine_polar: Callable[[Model, MatExpr, object], None]
    affine_hull: Callable[[Model, MatExpr, object], None]
    span_basis: tuple
    free_affine_basis: tuple | None
    golden_analytic: Callable[[], np.ndarray] | None
    params: dict = field(default_factory=dict)

    def config(self) -> dict:
        """JSON-serializable theory configuration."""
        if self.kind == "coherence":
            return {"kind": "coherence", "dim": self.dim}
        if self.kind == "thermal":
            tau = self.params["tau"]
            return {"kind": "thermal", "gibbs": [[[float(x.real), float(x.imag)] for x in row] for row in tau]}
        if self.kind == "asymmetry":
            return {"kind": "asymmetry", "blocks": [list(b) for b in self.params["blocks"].blocks]}
        if self.kind == "ppt":
            return {"kind": "ppt", "dims": list(self.params["dims"])}
        raise ValueError(f"theory kind {self.kind!r} has no file representation")


def make_coherence(d: int) -> TheoryDescriptor:
    """Coherence theory: free states are the diagonal density matrices."""
    if d < 2:
        raise ValueError("coherence theory needs dimension >= 2")

    def membership(m: Model, x: MatExpr) -> None:
        v = m.nonneg_var(d)
        m.add_mat_eq(x - diag_expr(v, d))

    def polar(m: Model, x: MatExpr, s) -> None:
        s = as_lin(s)
        for i in range(d):
            m.add_leq(x.re_entry(i, i) - s, 0.0)

    def affine_polar(m: Model, x: MatExpr, s) -> None:
        s = as_lin(s)
        for i in range(d):
            m.add_eq(x.re_entry(i, i) - s, 0.0)

    def affine_hull(m: Model, x: MatExpr, lam) -> None:
        for i in range(d):
            for j in range(i + 1, d):
                m.add_eq(x.re_entry(i, j), 0.0)
                m.add_eq(x.im_entry(i, j), 0.0)
        m.add_eq(x.trace() - as_lin(lam), 0.0)

    basis = tuple(la.projector(la.basis_state(d, i)) for i in range(d))
    return TheoryDescriptor(
        kind="coherence", dim=d, is_affine=True,
        membership=membership, polar=polar, affine_polar=affine_polar,
        affine_hull=affine_hull, span_basis=basis, free_affine_basis=basis,
        golden_analytic=lambda: la.uniform_superposition(d),
    )


def make_thermal(tau: np.ndarray) -> TheoryDescriptor:
    """Thermal theory: the free set is the single full-rank Gibbs state."""
    tau = la.require_density(tau)
    d = tau.shape[0]
    ev, vec = np.linalg.eigh(tau)
    if float(ev.min()) < 1e-12:
        raise ValueError("Gibbs state must be full rank (singular tau makes the "
                         "generalized robustness infinite)")

    def membership(m: Model, x: MatExpr) -> None:
        mu = m.nonneg_var(1)
        m.add_mat_eq(x - lin_times_matrix(mu.entry(0), tau))

    def polar(m: Model, x: MatExpr, s) -> None:
        m.add_leq(inner(tau, x) - as_lin(s), 0.0)

    def affine_polar(m: Model, x: MatExpr, s) -> None:
        m.add_eq(inner(tau, x) - as_lin(s), 0.0)

    def affine_hull(m: Model, x: MatExpr, lam) -> None:
        m.add_mat_eq(x - lin_times_matrix(as_lin(lam), tau))

    ground = vec[:, 0].astype(complex)  # eigenvector of the minimal eigenvalue
    return TheoryDescriptor(
        kind="thermal", dim=d, is_affine=True,
        membership=membership, polar=polar, affine_polar=affine_polar,
        affine_hull=affine_hull, span_basis=(tau,), free_affine_basis=(tau,),
        golden_analytic=lambda: ground.copy(),
        params={"tau": tau},
    )


def asymmetry_golden_state(theta: float) -> np.ndarray:
    """Golden family for the two-qubit equal-gap asymmetry instance."""
    return np.array([1.0, np.cos(theta), np.sin(theta), 1.0], dtype=complex) / np.sqrt(3)


_TWO_QUBIT_BLOCKS = ((0,), (1, 2), (3,))


def make_asymmetry(blocks: la.BlockStructure) -> TheoryDescriptor:
    """Asymmetry theory: free states commute with the (diagonal) Hamiltonian."""
    d = blocks.dim
    blist = blocks.blocks

    def membership(m: Model, x: MatExpr) -> None:
        for b in blist:
            y = m.herm_psd_var(len(b))
            m.add_mat_eq(x.submatrix(list(b)) - y.expr())
        _off_block_zero(m, x)

    def _off_block_zero(m: Model, x: MatExpr) -> None:
        group = {}
        for gi, b in enumerate(blist):
            for i in b:
                group[i] = gi
        for i in range(d):
            for j in range(i + 1, d):
                if group[i] != group[j]:
                    m.add_eq(x.re_entry(i, j), 0.0)
                    m.add_eq(x.im_entry(i, j), 0.0)

    def polar(m: Model, x: MatExpr, s) -> None:
        for b in blist:
            eye_b = np.eye(len(b), dtype=complex)
            m.add_psd(lin_times_matrix(s, eye_b) - x.submatrix(list(b)))

    def affine_polar(m: Model, x: MatExpr, s) -> None:
        for b in blist:
            eye_b = np.eye(len(b), dtype=complex)
            m.add_mat_eq(x.submatrix(list(b)) - lin_times_matrix(s, eye_b))

    def affine_hull(m: Model, x: MatExpr, lam) -> None:
        _off_block_zero(m, x)
        m.add_eq(x.trace() - as_lin(lam), 0.0)

    span = []
    free_basis = []
    for b in blist:
        for bi, i in enumerate(b):
            e = np.zeros((d, d), dtype=complex)
            e[i, i] = 1.0
            span.append(e)
            free_basis.append(e)
            for j in b[bi + 1:]:
                sym = np.zeros((d, d), dtype=complex)
                sym[i, j] = sym[j, i] = 1.0
                span.append(sym)
                ant = np.zeros((d, d), dtype=complex)
                ant[i, j] = -1j
                ant[j, i] = 1j
                span.append(ant)
                vp = (la.basis_state(d, i) + la.basis_state(d, j)) / np.sqrt(2)
                vi = (la.basis_state(d, i) + 1j * la.basis_state(d, j)) / np.sqrt(2)
                free_basis.append(la.projector(vp))
                free_basis.append(la.projector(vi))

    golden = None
    if blist == _TWO_QUBIT_BLOCKS:
        golden = lambda: asymmetry_golden_state(np.pi / 4)

    return TheoryDescriptor(
        kind="asymmetry", dim=d, is_affine=True,
        membership=membership, polar=polar, affine_polar=affine_polar,
        affine_hull=affine_hull, span_basis=tuple(span),
        free_affine_basis=tuple(free_basis), golden_analytic=golden,
        params={"blocks": blocks},
    )


def _full_herm_basis(d: int) -> tuple:
    out = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        out.append(e)
        for j in range(i + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[i, j] = sym[j, i] = 1.0
            out.append(sym)
            ant = np.zeros((d, d), dtype=complex)
            ant[i, j] = -1j
            ant[j, i] = 1j
            out.append(ant)
    return tuple(out)


def make_ppt(d_a: int, d_b: int) -> TheoryDescriptor:
    """PPT theory: free states have positive partial transpose."""
    if d_a < 2 or d_b < 2:
        raise ValueError("PPT theory needs both local dimensions >= 2")
    d = d_a * d_b
    dims = (d_a, d_b)

    def membership(m: Model, x: MatExpr) -> None:
        m.add_psd(x)
        m.add_psd(x.partial_transpose(dims))

    def polar(m: Model, x: MatExpr, s) -> None:
        # dual embedding of the support function over PPT states:
        # exists Y >= 0 with s*I - X - Y^{T_B} >= 0
        y = m.herm_psd_var(d)
        m.add_psd(lin_times_matrix(s, np.eye(d, dtype=complex))
                  - x - y.expr().partial_transpose(dims))

    def affine_polar(m: Model, x: MatExpr, s) -> None:
        # full-dimensional theory: the affine polar is {s * I}
        m.add_mat_eq(x - lin_times_matrix(s, np.eye(d, dtype=complex)))

    def affine_hull(m: Model, x: MatExpr, lam) -> None:
        m.add_eq(x.trace() - as_lin(lam), 0.0)

    mdim = min(d_a, d_b)
    return TheoryDescriptor(
        kind="ppt", dim=d, is_affine=False,
        membership=membership, polar=polar, affine_polar=affine_polar,
        affine_hull=affine_hull, span_basis=_full_herm_basis(d),
        free_affine_basis=None,
        golden_analytic=lambda: la.maximally_entangled(mdim, d_a, d_b),
        params={"dims": (d_a, d_b)},
    )


def make_bisep_ppt(local_dims: tuple[int, ...]) -> TheoryDescriptor:
    """PPT relaxation of biseparability: hull of the per-bipartition PPT sets.

    The polar is the intersection of the per-cut PPT polars; membership
    decomposes a state into a sum of per-cut PPT pieces.
    """
    dims = tuple(int(x) for x in local_dims)
    d = int(np.prod(dims))
    cuts = la.bipartitions(len(dims))

    def membership(m: Model, x: MatExpr) -> None:
        parts = []
        for cut in cuts:
            c_k = m.herm_psd_var(d)
            m.add_psd(c_k.expr().partial_transpose_multi(dims, cut))
            parts.append(c_k.expr())
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        m.add_mat_eq(x - total)

    def polar(m: Model, x: MatExpr, s) -> None:
        for cut in cuts:
            y = m.herm_psd_var(d)
            m.add_psd(lin_times_matrix(s, np.eye(d, dtype=complex))
                      - x - y.expr().partial_transpose_multi(dims, cut))

    def affine_polar(m: Model, x: MatExpr, s) -> None:
        m.add_mat_eq(x - lin_times_matrix(s, np.eye(d, dtype=complex)))

    def affine_hull(m: Model, x: MatExpr, lam) -> None:
        m.add_eq(x.trace() - as_lin(lam), 0.0)

    golden = None
    if len(set(dims)) == 1:
        golden = lambda: la.ghz_state(dims[0], len(dims))

    return TheoryDescriptor(
        kind="bisep-ppt", dim=d, is_affine=False,
        membership=membership, polar=polar, affine_polar=affine_polar,
        affine_hull=affine_hull, span_basis=_full_herm_basis(d),
        free_affine_basis=None, golden_analytic=golden,
        params={"local_dims": dims},
    )


def theory_from_config(cfg: dict) -> TheoryDescriptor:
    """Build a descriptor from its JSON configuration dict."""
    kind = cfg.get("kind")
    if kind == "coherence":
        return make_coherence(int(cfg["dim"]))
    if kind == "thermal":
        raw = np.asarray(cfg["gibbs"], dtype=float)
        tau = raw[:, :, 0] + 1j * raw[:, :, 1]
        return make_thermal(tau)
    if kind == "asymmetry":
        blocks = la.BlockStructure(tuple(tuple(int(i) for i in b) for b in cfg["blocks"]))
        return make_asymmetry(blocks)
    if kind == "ppt":
        d_a, d_b = cfg["dims"]
        return make_ppt(int(d_a), int(d_b))
    raise ValueError(f"unknown theory kind {kind!r}")


def free_state_model(theory: TheoryDescriptor) -> tuple[Model, MatExpr]:
    """Model with a fresh variable constrained to be a free state of the theory.

    The variable is a free Hermitian matrix; positivity comes from the
    membership constraints themselves (avoiding a redundant PSD copy that
    would degrade the solver's conditioning).
    """
    m = Model()
    sigma = m.herm_free_var(theory.dim)
    expr = sigma.expr()
    theory.membership(m, expr)
    m.add_eq(expr.trace(), 1.0)
    return m, expr


def sample_free_state(theory: TheoryDescriptor, rng: np.random.Generator,
                      tol: float = 1e-8) -> np.ndarray:
    """Extremal-ish free state found by optimizing a random direction over F."""
    m, expr = free_state_model(theory)
    g = la.rand_hermitian(theory.dim, rng)
    m.set_objective("max", inner(g, expr))
    res = m.solve(tol=tol, tag=f"sample-free-{theory.kind}").ensure_optimal("free-state sampling")
    sigma = res.value_mat(expr)
    sigma = la.herm_part(sigma)
    # clean tiny solver noise so downstream validation sees a proper state
    ev, vec = np.linalg.eigh(sigma)
    ev = np.clip(ev, 0.0, None)
    sigma = (vec * ev) @ vec.conj().T
    return sigma / np.real(np.trace(sigma))


def canonical_free_state(theory: TheoryDescriptor) -> np.ndarray:
    """A cheap exact member of the free set."""
    if theory.kind == "thermal":
        return theory.params["tau"].copy()
    if theory.kind in ("ppt", "bisep-ppt"):
        return np.eye(theory.dim, dtype=complex) / theory.dim
    return la.projector(la.basis_state(theory.dim, 0))


def support_overlap(theory: TheoryDescriptor, proj: np.ndarray, tol: float = 1e-8):
    """max <proj, sigma> over free sigma for a projector, with exact shortcuts.

    A full projector gives value 1 with any free state as witness; for the
    reduced theories the optimum is an eigenvalue of the pinched projector,
    computed to machine precision. Other cases fall back to the conic solve.
    """
    d = theory.dim
    if np.abs(proj - np.eye(d)).max() < 1e-12:
        return 1.0, canonical_free_state(theory)
    if theory.kind == "thermal":
        tau = theory.params["tau"]
        return float(np.real(np.sum(proj.conj() * tau))), tau.copy()
    if theory.kind == "coherence":
        diag = np.real(np.diag(proj))
        i = int(np.argmax(diag))
        return float(diag[i]), la.projector(la.basis_state(d, i))
    if theory.kind == "asymmetry":
        blocks: la.BlockStructure = theory.params["blocks"]
        best, best_state = -np.inf, None
        for b in blocks.blocks:
            idx = list(b)
            sub = proj[np.ix_(idx, idx)]
            ev, vec = np.linalg.eigh(sub)
            if float(ev[-1]) > best:
                best = float(ev[-1])
                v = np.zeros(d, dtype=complex)
                v[idx] = vec[:, -1]
                best_state = la.projector(v)
        return best, best_state
    return max_overlap_with_free(theory, proj, tol=tol)


def max_overlap_with_free(theory: TheoryDescriptor, op: np.ndarray,
                          tol: float = 1e-8, sense: str = "max"):
    """Optimize <op, sigma> over free states sigma; returns (value, optimizer).

    The value is the primal/dual midpoint, which centers the interior-point
    bias and is accurate to about half the duality gap.
    """
    m, expr = free_state_model(theory)
    m.set_objective(sense, inner(op, expr))
    res = m.solve(tol=tol, tag=f"overlap-{theory.kind}").ensure_optimal("free-state overlap")
    return res.midpoint_objective, la.herm_part(res.value_mat(expr))
