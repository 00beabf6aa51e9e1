"""Dense complex Hermitian linear algebra on small Hilbert spaces.

Everything here operates on plain ``numpy`` complex arrays at desk scale
(dimension <= 64): tensor products, partial trace/transpose, support
projectors, pinching onto a block algebra, and Schmidt decompositions.
All functions are pure; nothing mutates its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

HERM_TOL = 1e-12
DENSITY_EIG_TOL = 1e-10
DENSITY_TRACE_TOL = 1e-10
PURE_NORM_TOL = 1e-12
SUPPORT_TOL = 1e-9


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def herm_part(a: np.ndarray) -> np.ndarray:
    """Hermitian part (a + a†)/2, used to clean numerical round-off."""
    return 0.5 * (a + dagger(a))


def is_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.abs(a - dagger(a)).max() <= tol


def require_hermitian(a: np.ndarray, tol: float = HERM_TOL, name: str = "operator") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    dev = np.abs(a - dagger(a)).max()
    if dev > tol:
        raise ValueError(f"{name} is not Hermitian (max |A - A†| = {dev:.3e} > {tol:.1e})")
    return herm_part(a)


def require_density(rho: np.ndarray, eig_tol: float = DENSITY_EIG_TOL,
                    trace_tol: float = DENSITY_TRACE_TOL) -> np.ndarray:
    """Validate a density operator: Hermitian, eigenvalues >= -eig_tol, unit trace."""
    rho = require_hermitian(rho, tol=1e-10, name="density operator")
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density operator trace {tr} deviates from 1 by more than {trace_tol:.1e}")
    lo = float(np.linalg.eigvalsh(rho).min())
    if lo < -eig_tol:
        raise ValueError(f"density operator has eigenvalue {lo:.3e} < -{eig_tol:.1e}")
    return rho


def require_pure(psi: np.ndarray, tol: float = PURE_NORM_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    nrm = float(np.linalg.norm(psi))
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"pure state norm {nrm} deviates from 1 by more than {tol:.1e}")
    return psi


def projector(psi: np.ndarray) -> np.ndarray:
    """Rank-one projector |psi><psi|."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def basis_state(dim: int, i: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[i] = 1.0
    return v


def uniform_superposition(dim: int) -> np.ndarray:
    return np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)


def maximally_entangled(m: int, d_a: int | None = None, d_b: int | None = None) -> np.ndarray:
    """|Psi_m> = sum_i |ii>/sqrt(m) on a d_a x d_b space (defaults to m x m)."""
    d_a = m if d_a is None else d_a
    d_b = m if d_b is None else d_b
    if m > min(d_a, d_b):
        raise ValueError("Schmidt rank exceeds local dimension")
    v = np.zeros(d_a * d_b, dtype=complex)
    for i in range(m):
        v[i * d_b + i] = 1.0 / np.sqrt(m)
    return v


def ghz_state(d: int, n: int) -> np.ndarray:
    """Generalized GHZ state sum_i |i>^{x n} / sqrt(d)."""
    v = np.zeros(d ** n, dtype=complex)
    step = (d ** n - 1) // (d - 1) if d > 1 else 0
    for i in range(d):
        v[i * step] = 1.0 / np.sqrt(d)
    return v


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more operators (or vectors)."""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def _check_bipartite(a: np.ndarray, dims: tuple[int, int]) -> None:
    d_a, d_b = dims
    if a.shape[0] != d_a * d_b:
        raise ValueError(f"dimension mismatch: operator dim {a.shape[0]} != {d_a}*{d_b}")


def partial_trace(a: np.ndarray, dims: tuple[int, int], keep: int) -> np.ndarray:
    """Trace out one tensor factor; ``keep`` is 0 (keep A) or 1 (keep B)."""
    a = np.asarray(a, dtype=complex)
    _check_bipartite(a, dims)
    d_a, d_b = dims
    t = a.reshape(d_a, d_b, d_a, d_b)
    if keep == 0:
        return np.einsum("ikjk->ij", t)
    if keep == 1:
        return np.einsum("kikj->ij", t)
    raise ValueError("keep must be 0 or 1")


def partial_transpose(a: np.ndarray, dims: tuple[int, int], sys: int = 1) -> np.ndarray:
    """Transpose one tensor factor (default: the second)."""
    a = np.asarray(a, dtype=complex)
    _check_bipartite(a, dims)
    d_a, d_b = dims
    t = a.reshape(d_a, d_b, d_a, d_b)
    if sys == 1:
        return t.transpose(0, 3, 2, 1).reshape(d_a * d_b, d_a * d_b)
    if sys == 0:
        return t.transpose(2, 1, 0, 3).reshape(d_a * d_b, d_a * d_b)
    raise ValueError("sys must be 0 or 1")


def partial_transpose_multi(a: np.ndarray, dims: tuple[int, ...], subset: tuple[int, ...]) -> np.ndarray:
    """Partial transpose over an arbitrary subset of parties with local dims ``dims``."""
    a = np.asarray(a, dtype=complex)
    n = len(dims)
    d = int(np.prod(dims))
    if a.shape != (d, d):
        raise ValueError("dimension mismatch between operator and local dims")
    t = a.reshape(dims + dims)
    perm = list(range(2 * n))
    for i in subset:
        perm[i], perm[n + i] = perm[n + i], perm[i]
    return t.transpose(perm).reshape(d, d)


def permute_systems(psi: np.ndarray, dims: tuple[int, ...], order: tuple[int, ...]) -> np.ndarray:
    """Reorder the tensor factors of a state vector."""
    psi = np.asarray(psi, dtype=complex).reshape(dims)
    return psi.transpose(order).reshape(-1)


def support_projector(rho: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Projector onto the span of eigenvectors with eigenvalue above ``tol``.

    ``tol`` is relative to the largest eigenvalue (default 1e-9, below SDP
    accuracy but above round-off). Raises if an eigenvalue is negative
    beyond the absolute cutoff.
    """
    rho = require_hermitian(rho, tol=1e-10, name="support_projector input")
    tol = SUPPORT_TOL if tol is None else tol
    ev, vec = np.linalg.eigh(rho)
    top = max(float(ev.max()), 0.0)
    cut = tol * max(top, 1.0)
    if float(ev.min()) < -cut:
        raise ValueError(f"operator has negative eigenvalue {ev.min():.3e} beyond -{cut:.1e}")
    cols = vec[:, ev > tol * top] if top > 0 else vec[:, 0:0]
    return herm_part(cols @ dagger(cols))


@dataclass(frozen=True)
class BlockStructure:
    """Ordered partition of the index set {0..dim-1} into eigenspace groups."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        flat = [i for blk in self.blocks for i in blk]
        if sorted(flat) != list(range(len(flat))):
            raise ValueError("blocks must be a disjoint partition of 0..dim-1")

    @property
    def dim(self) -> int:
        return sum(len(b) for b in self.blocks)

    def mask(self) -> np.ndarray:
        """Boolean matrix marking entries that survive the pinching."""
        d = self.dim
        m = np.zeros((d, d), dtype=bool)
        for blk in self.blocks:
            idx = np.asarray(blk)
            m[np.ix_(idx, idx)] = True
        return m


def blocks_from_hamiltonian(h: np.ndarray, tol: float = 1e-9) -> BlockStructure:
    """Group equal diagonal energies of a diagonal Hamiltonian into blocks."""
    h = require_hermitian(h, name="Hamiltonian")
    off = h - np.diag(np.diag(h))
    if np.abs(off).max() > tol:
        raise ValueError("Hamiltonian must be diagonal in the computational basis; "
                         "rotate to its eigenbasis first")
    energies = np.real(np.diag(h))
    groups: list[list[int]] = []
    reps: list[float] = []
    for i, e in enumerate(energies):
        for g, r in zip(groups, reps):
            if abs(e - r) <= tol:
                g.append(i)
                break
        else:
            groups.append([i])
            reps.append(float(e))
    return BlockStructure(tuple(tuple(g) for g in groups))


def pinch(a: np.ndarray, blocks: BlockStructure) -> np.ndarray:
    """Zero all entries outside the diagonal blocks; trace-preserving and idempotent."""
    a = np.asarray(a, dtype=complex)
    if a.shape[0] != blocks.dim:
        raise ValueError("dimension mismatch between operator and block structure")
    out = np.zeros_like(a)
    mask = blocks.mask()
    out[mask] = a[mask]
    return out


@dataclass(frozen=True)
class SchmidtData:
    """Schmidt decomposition data: descending coefficients and orthonormal bases."""

    coefficients: np.ndarray
    left: np.ndarray    # d_a x r, columns are the left Schmidt vectors
    right: np.ndarray   # d_b x r

    def reconstruct(self) -> np.ndarray:
        d_a, r = self.left.shape
        d_b = self.right.shape[0]
        out = np.zeros(d_a * d_b, dtype=complex)
        for k in range(r):
            out += self.coefficients[k] * np.kron(self.left[:, k], self.right[:, k])
        return out


def schmidt(psi: np.ndarray, dims: tuple[int, int]) -> SchmidtData:
    """Schmidt decomposition of a bipartite pure state."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    d_a, d_b = dims
    if psi.size != d_a * d_b:
        raise ValueError(f"dimension mismatch: vector dim {psi.size} != {d_a}*{d_b}")
    u, s, vh = np.linalg.svd(psi.reshape(d_a, d_b), full_matrices=False)
    return SchmidtData(coefficients=s, left=u, right=vh.T)


def schmidt_coefficients_across_cut(psi: np.ndarray, dims: tuple[int, ...],
                                    cut: tuple[int, ...]) -> np.ndarray:
    """Schmidt coefficients of a multipartite state across the bipartition cut|rest."""
    n = len(dims)
    rest = tuple(i for i in range(n) if i not in cut)
    order = cut + rest
    perm = permute_systems(psi, dims, order)
    d_cut = int(np.prod([dims[i] for i in cut]))
    return np.linalg.svd(perm.reshape(d_cut, -1), compute_uv=False)


def bipartitions(n: int) -> list[tuple[int, ...]]:
    """All inequivalent bipartitions of n parties (each cut contains party 0)."""
    cuts = []
    for size in range(1, n):
        for combo in combinations(range(1, n), size - 1):
            cuts.append((0,) + combo)
    return cuts


def rand_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def rand_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the Ginibre ensemble (full rank by default)."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ dagger(g)
    return herm_part(rho / np.real(np.trace(rho)))


def rand_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return herm_part(g)
