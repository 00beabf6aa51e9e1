"""Small modeling layer on top of the conic solver.

Variables are complex Hermitian matrices (PSD-constrained ones live in the
real symmetric embedding, unconstrained ones in an orthonormal Hermitian
basis of a free block), nonnegative vectors, and free vectors. Affine
matrix- and scalar-valued expressions over them lower to the standard-form
:class:`resbench.conic.ConicProblem`; inequalities become equalities with
slack variables at build time.
"""

from __future__ import annotations

import numpy as np

from . import conic
from .conic import Block, ConicProblem, SolverError, embed_complex, svec_dim, unembed_complex

_EMBED_BASIS_CACHE: dict[int, np.ndarray] = {}
_HERM_BASIS_CACHE: dict[int, np.ndarray] = {}


def _embed_basis(d: int) -> np.ndarray:
    """Tensor (d, d, vdim): Hermitian image of each svec coordinate of the 2d embedding."""
    if d not in _EMBED_BASIS_CACHE:
        p = 2 * d
        v = svec_dim(p)
        t = np.empty((d, d, v), dtype=complex)
        for k in range(v):
            e = np.zeros(v)
            e[k] = 1.0
            t[:, :, k] = unembed_complex(conic.smat(e, p))
        _EMBED_BASIS_CACHE[d] = t
    return _EMBED_BASIS_CACHE[d]


def _herm_basis(d: int) -> np.ndarray:
    """Orthonormal basis of d x d Hermitian matrices as a (d, d, d^2) tensor."""
    if d not in _HERM_BASIS_CACHE:
        t = np.empty((d, d, d * d), dtype=complex)
        k = 0
        s = 1.0 / np.sqrt(2.0)
        for i in range(d):
            m = np.zeros((d, d), dtype=complex)
            m[i, i] = 1.0
            t[:, :, k] = m
            k += 1
        for i in range(d):
            for j in range(i + 1, d):
                m = np.zeros((d, d), dtype=complex)
                m[i, j] = s
                m[j, i] = s
                t[:, :, k] = m
                k += 1
                m = np.zeros((d, d), dtype=complex)
                m[i, j] = -1j * s
                m[j, i] = 1j * s
                t[:, :, k] = m
                k += 1
        _HERM_BASIS_CACHE[d] = t
    return _HERM_BASIS_CACHE[d]


class LinExpr:
    """Real-valued affine expression over the model's variable blocks."""

    __slots__ = ("coefs", "const")
    __array_ufunc__ = None  # make numpy defer to our arithmetic

    def __init__(self, coefs: dict[int, np.ndarray] | None = None, const: float = 0.0):
        self.coefs = {} if coefs is None else coefs
        self.const = float(const)

    def copy(self) -> "LinExpr":
        return LinExpr({k: v.copy() for k, v in self.coefs.items()}, self.const)

    def __add__(self, other):
        out = self.copy()
        if isinstance(other, LinExpr):
            for k, v in other.coefs.items():
                out.coefs[k] = out.coefs.get(k, 0.0) + v
            out.const += other.const
        else:
            out.const += float(other)
        return out

    __radd__ = __add__

    def __neg__(self):
        return LinExpr({k: -v for k, v in self.coefs.items()}, -self.const)

    def __sub__(self, other):
        return self + (-other if isinstance(other, LinExpr) else -float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, a: float):
        a = float(a)
        return LinExpr({k: a * v for k, v in self.coefs.items()}, a * self.const)

    __rmul__ = __mul__


def as_lin(x) -> LinExpr:
    return x if isinstance(x, LinExpr) else LinExpr(const=float(x))


class MatExpr:
    """Hermitian-matrix-valued affine expression."""

    __slots__ = ("dim", "terms", "const")
    __array_ufunc__ = None  # make numpy defer to our arithmetic

    def __init__(self, dim: int, terms: dict[int, np.ndarray] | None = None,
                 const: np.ndarray | None = None):
        self.dim = dim
        self.terms = {} if terms is None else terms
        self.const = np.zeros((dim, dim), dtype=complex) if const is None else np.asarray(const, dtype=complex)

    def copy(self) -> "MatExpr":
        return MatExpr(self.dim, {k: v.copy() for k, v in self.terms.items()}, self.const.copy())

    def __add__(self, other):
        out = self.copy()
        if isinstance(other, MatExpr):
            for k, v in other.terms.items():
                out.terms[k] = out.terms.get(k, 0.0) + v
            out.const = out.const + other.const
        else:
            out.const = out.const + np.asarray(other, dtype=complex)
        return out

    __radd__ = __add__

    def __neg__(self):
        return MatExpr(self.dim, {k: -v for k, v in self.terms.items()}, -self.const)

    def __sub__(self, other):
        if isinstance(other, MatExpr):
            return self + (-other)
        return self + (-np.asarray(other, dtype=complex))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, a: float):
        a = float(a)
        return MatExpr(self.dim, {k: a * v for k, v in self.terms.items()}, a * self.const)

    __rmul__ = __mul__

    def _map(self, fn, new_dim: int) -> "MatExpr":
        terms = {}
        for k, t in self.terms.items():
            nv = t.shape[2]
            stacked = np.moveaxis(t, 2, 0)          # (nv, d, d)
            mapped = np.stack([fn(m) for m in stacked], axis=2)
            terms[k] = mapped
        return MatExpr(new_dim, terms, fn(self.const))

    def conj_by(self, p: np.ndarray) -> "MatExpr":
        """Congruence P X P† (P may be rectangular)."""
        p = np.asarray(p, dtype=complex)
        terms = {k: np.einsum("ai,ijk,bj->abk", p, t, p.conj(), optimize=True)
                 for k, t in self.terms.items()}
        return MatExpr(p.shape[0], terms, p @ self.const @ p.conj().T)

    def submatrix(self, idx) -> "MatExpr":
        idx = np.asarray(idx)
        terms = {k: t[np.ix_(idx, idx)] for k, t in self.terms.items()}
        return MatExpr(len(idx), terms, self.const[np.ix_(idx, idx)])

    def partial_transpose(self, dims: tuple[int, int], sys: int = 1) -> "MatExpr":
        d_a, d_b = dims

        def fn(m):
            t = m.reshape(d_a, d_b, d_a, d_b)
            t = t.transpose(0, 3, 2, 1) if sys == 1 else t.transpose(2, 1, 0, 3)
            return t.reshape(self.dim, self.dim)

        return self._map(fn, self.dim)

    def partial_transpose_multi(self, dims: tuple[int, ...], subset: tuple[int, ...]) -> "MatExpr":
        n = len(dims)
        perm = list(range(2 * n))
        for i in subset:
            perm[i], perm[n + i] = perm[n + i], perm[i]

        def fn(m):
            return m.reshape(dims + dims).transpose(perm).reshape(self.dim, self.dim)

        return self._map(fn, self.dim)

    def partial_trace(self, dims: tuple[int, int], keep: int) -> "MatExpr":
        d_a, d_b = dims
        new_dim = d_a if keep == 0 else d_b
        terms = {}
        for k, t in self.terms.items():
            t5 = t.reshape(d_a, d_b, d_a, d_b, t.shape[2])
            terms[k] = np.einsum("ikjkc->ijc", t5) if keep == 0 else np.einsum("kikjc->ijc", t5)
        c4 = self.const.reshape(d_a, d_b, d_a, d_b)
        const = np.einsum("ikjk->ij", c4) if keep == 0 else np.einsum("kikj->ij", c4)
        return MatExpr(new_dim, terms, const)

    def choi_apply(self, rho: np.ndarray, dims: tuple[int, int]) -> "MatExpr":
        """Treat the expression as a Choi matrix and apply it to a fixed input state."""
        d_in, d_out = dims
        rho = np.asarray(rho, dtype=complex)
        terms = {}
        for k, t in self.terms.items():
            t5 = t.reshape(d_in, d_out, d_in, d_out, t.shape[2])
            terms[k] = np.einsum("ikjlc,ij->klc", t5, rho, optimize=True)
        c4 = self.const.reshape(d_in, d_out, d_in, d_out)
        const = np.einsum("ikjl,ij->kl", c4, rho)
        return MatExpr(d_out, terms, const)

    def re_entry(self, i: int, j: int) -> LinExpr:
        coefs = {k: np.real(t[i, j, :]).copy() for k, t in self.terms.items()}
        return LinExpr(coefs, float(np.real(self.const[i, j])))

    def im_entry(self, i: int, j: int) -> LinExpr:
        coefs = {k: np.imag(t[i, j, :]).copy() for k, t in self.terms.items()}
        return LinExpr(coefs, float(np.imag(self.const[i, j])))

    def trace(self) -> LinExpr:
        coefs = {k: np.real(np.einsum("iik->k", t)) for k, t in self.terms.items()}
        return LinExpr(coefs, float(np.real(np.trace(self.const))))


def inner(c: np.ndarray, expr: MatExpr) -> LinExpr:
    """Hilbert-Schmidt inner product <C, E> = Tr(C† E) of a Hermitian C with an expression."""
    c = np.asarray(c, dtype=complex)
    coefs = {k: np.real(np.einsum("ij,ijk->k", c.conj(), t)) for k, t in expr.terms.items()}
    return LinExpr(coefs, float(np.real(np.sum(c.conj() * expr.const))))


class HermVar:
    """Handle for a complex Hermitian matrix variable."""

    def __init__(self, model: "Model", block: int, dim: int, mode: str):
        self.model = model
        self.block = block
        self.dim = dim
        self.mode = mode  # 'embedded' (psd) or 'hermbasis' (free)

    def expr(self) -> MatExpr:
        # the embedded basis maps svec coordinates straight to unembed(S),
        # so <C, X> lowers to <embed(C)/2, S> without extra factors
        basis = _embed_basis(self.dim) if self.mode == "embedded" else _herm_basis(self.dim)
        return MatExpr(self.dim, {self.block: basis.copy()})


class VecVar:
    """Handle for a nonneg or free real vector variable."""

    def __init__(self, model: "Model", block: int, size: int):
        self.model = model
        self.block = block
        self.size = size

    def entry(self, i: int) -> LinExpr:
        e = np.zeros(self.size)
        e[i] = 1.0
        return LinExpr({self.block: e})

    def sum(self) -> LinExpr:
        return LinExpr({self.block: np.ones(self.size)})


class Model:
    """Collects variables, constraints, and an objective; lowers to a ConicProblem."""

    def __init__(self):
        self.blocks: list[Block] = []
        self._rows: list[LinExpr] = []
        self._rhs: list[float] = []
        self._objective: LinExpr | None = None
        self._sense = "min"

    # -- variables ---------------------------------------------------------
    def herm_psd_var(self, d: int) -> HermVar:
        self.blocks.append(Block("psd", 2 * d))
        return HermVar(self, len(self.blocks) - 1, d, "embedded")

    def herm_free_var(self, d: int) -> HermVar:
        self.blocks.append(Block("free", d * d))
        return HermVar(self, len(self.blocks) - 1, d, "hermbasis")

    def nonneg_var(self, n: int) -> VecVar:
        self.blocks.append(Block("nonneg", n))
        return VecVar(self, len(self.blocks) - 1, n)

    def free_var(self, n: int) -> VecVar:
        self.blocks.append(Block("free", n))
        return VecVar(self, len(self.blocks) - 1, n)

    # -- constraints -------------------------------------------------------
    def add_eq(self, lhs: LinExpr, rhs: float = 0.0):
        self._rows.append(lhs)
        self._rhs.append(float(rhs))

    def add_leq(self, lhs: LinExpr, rhs: float = 0.0):
        s = self.nonneg_var(1)
        self.add_eq(lhs + s.entry(0), rhs)

    def add_geq(self, lhs: LinExpr, rhs: float = 0.0):
        s = self.nonneg_var(1)
        self.add_eq(lhs - s.entry(0), rhs)

    def add_mat_eq(self, lhs: MatExpr, rhs=0.0):
        e = lhs - rhs if isinstance(rhs, (np.ndarray, MatExpr)) else lhs - rhs * np.eye(lhs.dim)
        d = e.dim
        for i in range(d):
            self.add_eq(e.re_entry(i, i), 0.0)
            for j in range(i + 1, d):
                self.add_eq(e.re_entry(i, j), 0.0)
                self.add_eq(e.im_entry(i, j), 0.0)

    def add_psd(self, expr: MatExpr) -> HermVar:
        y = self.herm_psd_var(expr.dim)
        self.add_mat_eq(y.expr() - expr)
        return y

    def set_objective(self, sense: str, obj: LinExpr):
        if sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        self._sense = sense
        self._objective = obj

    # -- lowering and solving ----------------------------------------------
    def build(self) -> ConicProblem:
        offsets, n = [], 0
        for b in self.blocks:
            offsets.append(n)
            n += b.vdim
        c = np.zeros(n)
        obj = self._objective if self._objective is not None else LinExpr()
        for k, v in obj.coefs.items():
            c[offsets[k]:offsets[k] + self.blocks[k].vdim] = v
        m = len(self._rows)
        a = np.zeros((m, n))
        b_vec = np.zeros(m)
        for r, (row, rhs) in enumerate(zip(self._rows, self._rhs)):
            for k, v in row.coefs.items():
                a[r, offsets[k]:offsets[k] + self.blocks[k].vdim] = v
            b_vec[r] = rhs - row.const
        return ConicProblem(blocks=list(self.blocks), c=c, A=a, b=b_vec, sense=self._sense)

    def solve(self, tol: float = 1e-8, max_iters: int = 200, backend=None,
              tag: str = "") -> "ModelResult":
        prob = self.build()
        sol = conic.solve(prob, tol=tol, max_iters=max_iters, backend=backend, tag=tag)
        return ModelResult(self, prob, sol)


class ModelResult:
    """Solved model with typed value extraction."""

    def __init__(self, model: Model, problem: ConicProblem, solution: conic.ConicSolution):
        self.model = model
        self.problem = problem
        self.solution = solution

    @property
    def status(self) -> str:
        return self.solution.status

    @property
    def objective(self) -> float:
        return self.solution.objective

    @property
    def midpoint_objective(self) -> float:
        """Average of primal and dual objectives; halves the interior bias."""
        d = self.solution.dual_objective
        return 0.5 * (self.solution.objective + d) if np.isfinite(d) else self.solution.objective

    @property
    def gap(self) -> float:
        return self.solution.gap

    def ensure_optimal(self, what: str = "conic program"):
        if self.status != "optimal":
            raise SolverError(f"{what}: solver returned status {self.status!r}")
        return self

    def value_herm(self, var: HermVar) -> np.ndarray:
        blk = self.solution.x_blocks[var.block]
        if var.mode == "embedded":
            return unembed_complex(blk)
        basis = _herm_basis(var.dim)
        return np.einsum("ijk,k->ij", basis, blk)

    def value_vec(self, var: VecVar) -> np.ndarray:
        return self.solution.x_blocks[var.block].copy()

    def value_lin(self, expr: LinExpr) -> float:
        total = expr.const
        offsets = self.problem.offsets()
        for k, v in expr.coefs.items():
            total += float(v @ self._raw_block(k))
        return total

    def value_mat(self, expr: MatExpr) -> np.ndarray:
        out = expr.const.copy()
        for k, t in expr.terms.items():
            out = out + np.einsum("ijk,k->ij", t, self._raw_block(k))
        return out

    def _raw_block(self, k: int) -> np.ndarray:
        blk = self.solution.x_blocks[k]
        if self.model.blocks[k].kind == "psd":
            return conic.svec(blk)
        return blk


def embed_soc(model: Model, n: int) -> tuple[MatExpr, LinExpr, list[tuple[LinExpr, LinExpr]]]:
    """Arrow-matrix PSD embedding of the norm bound ||y||_2 <= t for complex y.

    Creates the structured PSD block [[t I_n, y], [y†, t]] and returns the
    matrix expression, the scalar t, and per-entry (Re y_i, Im y_i) pairs.
    """
    mvar = model.herm_psd_var(n + 1)
    e = mvar.expr()
    t = e.re_entry(n, n)
    for i in range(n):
        model.add_eq(e.re_entry(i, i) - t, 0.0)
        for j in range(i + 1, n):
            model.add_eq(e.re_entry(i, j), 0.0)
            model.add_eq(e.im_entry(i, j), 0.0)
    y = [(e.re_entry(i, n), e.im_entry(i, n)) for i in range(n)]
    return e, t, y
