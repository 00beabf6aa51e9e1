"""Choi-matrix channel representation and the free-channel fidelity oracle.

The oracle maximizes the output overlap with a pure target over all
resource non-generating CPTP maps by a single conic program on the Choi
matrix. For affine theories, preservation of the free set is exactly
captured by finitely many linear constraints (the images of an affine
basis of aff(F) must stay in the hull), so the oracle value is ground
truth rather than a relaxation. Non-affine theories are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .model import Model, inner
from .theories import TheoryDescriptor, sample_free_state

CHOI_PSD_TOL = 1e-8
CHOI_TP_TOL = 1e-8


@dataclass(frozen=True)
class ChoiMatrix:
    """Choi matrix J = sum_ij |i><j| (x) L(|i><j|) of a channel L."""

    j: np.ndarray
    d_in: int
    d_out: int

    def __post_init__(self):
        j = la.require_hermitian(self.j, tol=1e-9, name="Choi matrix")
        object.__setattr__(self, "j", j)
        if j.shape[0] != self.d_in * self.d_out:
            raise ValueError("Choi dimension does not match d_in * d_out")
        if float(np.linalg.eigvalsh(j).min()) < -CHOI_PSD_TOL:
            raise ValueError("Choi matrix is not positive semidefinite")
        tp = la.partial_trace(j, (self.d_in, self.d_out), keep=0)
        if np.abs(tp - np.eye(self.d_in)).max() > CHOI_TP_TOL:
            raise ValueError("channel is not trace preserving")


def apply_choi(choi: ChoiMatrix, rho: np.ndarray) -> np.ndarray:
    """Channel action L(rho) = Tr_in[J (rho^T (x) I_out)]."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (choi.d_in, choi.d_in):
        raise ValueError("input dimension mismatch")
    j4 = choi.j.reshape(choi.d_in, choi.d_out, choi.d_in, choi.d_out)
    out = np.einsum("ikjl,ij->kl", j4, rho)
    return la.herm_part(out)


def choi_of_map(fn, d_in: int, d_out: int) -> ChoiMatrix:
    """Choi matrix of a channel given as a callable on matrices."""
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for i in range(d_in):
        for k in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[i, k] = 1.0
            j += np.kron(e, fn(e))
    return ChoiMatrix(j=la.herm_part(j), d_in=d_in, d_out=d_out)


def identity_channel(d: int) -> ChoiMatrix:
    return choi_of_map(lambda x: x, d, d)


def constant_channel(delta: np.ndarray, d_in: int) -> ChoiMatrix:
    delta = la.require_density(delta)
    return choi_of_map(lambda x: np.trace(x) * delta, d_in, delta.shape[0])


def max_fidelity_channel(rho: np.ndarray, phi: np.ndarray, theory: TheoryDescriptor,
                         tol: float = 1e-8) -> tuple[float, ChoiMatrix]:
    """Best overlap <L(rho), phi> over resource non-generating channels L.

    Only affine theories are supported: there, a CPTP map preserves F iff it
    maps an affine basis of aff(F) into aff(F), which is a finite set of
    linear constraints on the Choi matrix.
    """
    if not theory.is_affine or theory.free_affine_basis is None:
        raise ValueError(f"channel oracle requires an affine theory, got {theory.kind!r}")
    rho = la.require_density(rho)
    phi = la.require_pure(phi)
    d_in = rho.shape[0]
    d_out = phi.size
    if d_out != theory.dim:
        raise ValueError("target dimension must match the theory dimension")
    m = Model()
    jvar = m.herm_psd_var(d_in * d_out)
    je = jvar.expr()
    m.add_mat_eq(je.partial_trace((d_in, d_out), keep=0), np.eye(d_in, dtype=complex))
    for basis_state in theory.free_affine_basis:
        out = je.choi_apply(basis_state, (d_in, d_out))
        theory.affine_hull(m, out, 1.0)
    target = np.kron(rho.T, la.projector(phi))
    m.set_objective("max", inner(target, je))
    res = m.solve(tol=tol, tag=f"oracle-{theory.kind}").ensure_optimal("channel oracle")
    jmat = la.herm_part(res.value_herm(jvar))
    # clean tiny negative eigenvalues before constructing the validated Choi
    ev, vec = np.linalg.eigh(jmat)
    jmat = (vec * np.clip(ev, 0.0, None)) @ vec.conj().T
    tp = la.partial_trace(jmat, (d_in, d_out), keep=0)
    corr = np.linalg.pinv(la.herm_part(tp))
    ev_c, vec_c = np.linalg.eigh(corr)
    half = (vec_c * np.sqrt(np.clip(ev_c, 0.0, None))) @ vec_c.conj().T
    scale = np.kron(half, np.eye(d_out))
    jmat = la.herm_part(scale @ jmat @ scale)
    return res.objective, ChoiMatrix(j=jmat, d_in=d_in, d_out=d_out)


def _in_affine_hull(theory: TheoryDescriptor, sigma: np.ndarray, tol: float) -> bool:
    basis = np.stack([b.reshape(-1) for b in theory.span_basis], axis=1)
    vec = sigma.reshape(-1)
    coef, *_ = np.linalg.lstsq(basis, vec, rcond=None)
    resid = float(np.linalg.norm(basis @ coef - vec))
    return resid <= tol and abs(float(np.real(np.trace(sigma))) - 1.0) <= tol


def verify_free_channel(choi: ChoiMatrix, theory: TheoryDescriptor,
                        samples: int = 20, tol: float = 1e-7,
                        rng: np.random.Generator | None = None) -> bool:
    """Check that the channel maps free states to free states.

    Affine theories are verified exactly on a finite affine basis; for other
    theories the check is a sampled necessary condition (random free inputs,
    spectral membership test of the outputs).
    """
    if theory.is_affine and theory.free_affine_basis is not None:
        for basis_state in theory.free_affine_basis:
            out = apply_choi(choi, basis_state)
            if not _in_affine_hull(theory, out, tol):
                return False
        return True
    rng = np.random.default_rng(0) if rng is None else rng
    for _ in range(samples):
        sigma = sample_free_state(theory, rng)
        out = apply_choi(choi, sigma)
        if not _ppt_like_member(theory, out, tol):
            return False
    return True


def _ppt_like_member(theory: TheoryDescriptor, sigma: np.ndarray, tol: float) -> bool:
    if float(np.linalg.eigvalsh(sigma).min()) < -tol:
        return False
    if theory.kind == "ppt":
        d_a, d_b = theory.params["dims"]
        return float(np.linalg.eigvalsh(la.partial_transpose(sigma, (d_a, d_b))).min()) >= -tol
    if theory.kind == "bisep-ppt":
        # hull membership needs the conic decomposition; run the membership program
        from .theories import free_state_model
        m, expr = free_state_model(theory)
        m.add_mat_eq(expr, sigma)
        m.set_objective("min", expr.trace())
        return m.solve(tag="bisep-member").status == "optimal"
    raise ValueError(f"no membership check for theory kind {theory.kind!r}")
