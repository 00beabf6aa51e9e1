"""Dense conic programming over products of PSD cones, orthants, and free space.

Solves

    min/max  <c, x>   s.t.   A x = b,   x in K

where K is a product of real symmetric PSD cones (in scaled ``svec``
coordinates), nonnegative orthants, and free subspaces. The solver is a
primal-dual path-following interior point method with Nesterov-Todd
scaling on the homogeneous self-dual embedding, with a dense Schur
complement and Mehrotra predictor-corrector steps. It produces either an
optimal primal/dual pair with a duality-gap certificate or an improving
ray proving infeasibility/unboundedness.

Complex Hermitian data enters through the standard real symmetric
embedding ``[[Re, -Im], [Im, Re]]`` (see :func:`embed_complex`); the
modeling layer in :mod:`resbench.model` takes care of the bookkeeping.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

SQRT2 = np.sqrt(2.0)

_SVEC_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def svec_dim(p: int) -> int:
    return p * (p + 1) // 2


def _svec_indices(p: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row/column index arrays and sqrt(2) weights for the svec ordering."""
    if p not in _SVEC_CACHE:
        ii, jj, ww = [], [], []
        for j in range(p):
            for i in range(j + 1):
                ii.append(i)
                jj.append(j)
                ww.append(1.0 if i == j else SQRT2)
        _SVEC_CACHE[p] = (np.array(ii), np.array(jj), np.array(ww))
    return _SVEC_CACHE[p]


def svec(m: np.ndarray) -> np.ndarray:
    """Scaled upper-triangle vectorization with <svec(A), svec(B)> = <A, B>."""
    p = m.shape[0]
    ii, jj, ww = _svec_indices(p)
    return np.asarray(m)[ii, jj] * ww


def smat(v: np.ndarray, p: int) -> np.ndarray:
    """Inverse of :func:`svec`."""
    ii, jj, ww = _svec_indices(p)
    m = np.zeros((p, p))
    vals = np.asarray(v) / ww
    m[ii, jj] = vals
    m[jj, ii] = vals
    return m


def svec_batch(ms: np.ndarray) -> np.ndarray:
    p = ms.shape[-1]
    ii, jj, ww = _svec_indices(p)
    return ms[:, ii, jj] * ww


def smat_batch(vs: np.ndarray, p: int) -> np.ndarray:
    ii, jj, ww = _svec_indices(p)
    out = np.zeros((vs.shape[0], p, p))
    vals = vs / ww
    out[:, ii, jj] = vals
    out[:, jj, ii] = vals
    return out


def embed_complex(c: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix."""
    re, im = np.real(c), np.imag(c)
    return np.block([[re, -im], [im, re]])


def unembed_complex(s: np.ndarray) -> np.ndarray:
    """Recover a Hermitian matrix from a (possibly unstructured) symmetric 2d x 2d one.

    Averages over the embedding symmetry, so exact round-trip on embedded
    inputs and an orthogonal projection otherwise.
    """
    d = s.shape[0] // 2
    p, q, t = s[:d, :d], s[:d, d:], s[d:, d:]
    return 0.5 * (p + t) + 0.5j * (q.T - q)


@dataclass(frozen=True)
class Block:
    """One variable block: kind is 'psd' (matrix side length), 'nonneg', or 'free'."""

    kind: str
    size: int

    def __post_init__(self):
        if self.kind not in ("psd", "nonneg", "free"):
            raise ValueError(f"unknown block kind {self.kind!r}")
        if self.size < 1:
            raise ValueError("block size must be positive")

    @property
    def vdim(self) -> int:
        return svec_dim(self.size) if self.kind == "psd" else self.size


@dataclass
class ConicProblem:
    """Standard-form conic program: linear objective, equalities, x in a cone product."""

    blocks: list[Block]
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    sense: str = "min"

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("problem needs at least one variable block")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        n = self.n
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n) if np.size(self.A) else np.zeros((0, n))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.c.size != n:
            raise ValueError(f"objective length {self.c.size} != variable dim {n}")
        if self.A.shape[1] != n:
            raise ValueError(f"constraint matrix has {self.A.shape[1]} columns, expected {n}")
        if self.A.shape[0] != self.b.size:
            raise ValueError("rhs length does not match number of equality rows")

    @property
    def n(self) -> int:
        return sum(b.vdim for b in self.blocks)

    def offsets(self) -> list[int]:
        off, out = 0, []
        for b in self.blocks:
            out.append(off)
            off += b.vdim
        return out


@dataclass
class ConicSolution:
    """Primal/dual solution with optimality or infeasibility certificate data."""

    status: str                 # optimal | infeasible | unbounded | max_iters
    objective: float
    x_blocks: list[np.ndarray]  # psd blocks as real symmetric matrices
    y: np.ndarray               # equality multipliers (original row order)
    z_blocks: list[np.ndarray]
    gap: float                  # relative duality gap
    pres: float
    dres: float
    iterations: int
    dual_objective: float = np.nan
    certificate: dict | None = None


@dataclass
class SolveStats:
    """Running tally over all solves; used by the acceptance health check."""

    total: int = 0
    optimal: int = 0
    max_relgap: float = 0.0
    worst: str = ""
    by_status: dict = field(default_factory=dict)

    def reset(self):
        self.total = 0
        self.optimal = 0
        self.max_relgap = 0.0
        self.worst = ""
        self.by_status = {}


SOLVE_STATS = SolveStats()
_STATS_LOCK = threading.Lock()


def _record(status: str, relgap: float, tag: str) -> None:
    with _STATS_LOCK:
        SOLVE_STATS.total += 1
        SOLVE_STATS.by_status[status] = SOLVE_STATS.by_status.get(status, 0) + 1
        if status == "optimal":
            SOLVE_STATS.optimal += 1
            if relgap > SOLVE_STATS.max_relgap:
                SOLVE_STATS.max_relgap = relgap
                SOLVE_STATS.worst = tag


class SolverError(RuntimeError):
    """Raised when the interior-point method cannot certify any outcome."""


def _psd_min_eig_dir(lam_half_inv: np.ndarray, d: np.ndarray) -> float:
    g = lam_half_inv @ d @ lam_half_inv
    return float(np.linalg.eigvalsh(0.5 * (g + g.T))[0])


def _max_step(vals, dirs) -> float:
    """Largest alpha with vals + alpha*dirs staying in the cone (scalar pairs)."""
    alpha = np.inf
    for v, dv in zip(vals, dirs):
        if dv < 0:
            alpha = min(alpha, -v / dv)
    return alpha


def solve(problem: ConicProblem, tol: float = 1e-8, max_iters: int = 200,
          backend=None, verbose: bool = False, tag: str = "") -> ConicSolution:
    """Solve a conic program to relative tolerance ``tol``.

    ``backend`` is an adapter seam: any callable with the same signature
    returning a :class:`ConicSolution` may be substituted for the built-in
    interior-point method.
    """
    if backend is not None:
        return backend(problem, tol=tol, max_iters=max_iters, verbose=verbose)

    blocks = problem.blocks
    if all(b.kind == "free" for b in blocks):
        return _solve_linear(problem, tol, tag)

    sign = 1.0 if problem.sense == "min" else -1.0
    c = sign * problem.c
    b = problem.b.copy()
    A0 = problem.A
    m0, n = A0.shape

    offsets = problem.offsets()
    cone_idx = [k for k, blk in enumerate(blocks) if blk.kind != "free"]
    free_idx = [k for k, blk in enumerate(blocks) if blk.kind == "free"]
    cone_cols = np.concatenate([np.arange(offsets[k], offsets[k] + blocks[k].vdim)
                                for k in cone_idx]) if cone_idx else np.array([], dtype=int)
    free_cols = np.concatenate([np.arange(offsets[k], offsets[k] + blocks[k].vdim)
                                for k in free_idx]) if free_idx else np.array([], dtype=int)
    nc, nf = cone_cols.size, free_cols.size

    # Remove linearly dependent equality rows (redundant modeling is allowed);
    # an inconsistent system yields an immediate Farkas certificate.
    if m0 > 0:
        u_svd, s_svd, vt_svd = np.linalg.svd(A0, full_matrices=True)
        rank = int(np.sum(s_svd > 1e-12 * max(s_svd[0] if s_svd.size else 0.0, 1.0)))
        a_mat = s_svd[:rank, None] * vt_svd[:rank]
        b_red = u_svd[:, :rank].T @ b
        resid = b - u_svd[:, :rank] @ b_red
        if np.linalg.norm(resid) > 1e-9 * (1.0 + np.linalg.norm(b)):
            y_cert = resid / np.linalg.norm(resid) ** 2 * float(resid @ b)
            sol = ConicSolution(status="infeasible", objective=np.nan,
                                x_blocks=[], y=y_cert, z_blocks=[], gap=np.inf,
                                pres=np.inf, dres=np.inf, iterations=0,
                                certificate={"y": y_cert})
            _record(sol.status, np.inf, tag)
            return sol
        u_rows = u_svd[:, :rank]
    else:
        rank = 0
        a_mat = np.zeros((0, n))
        b_red = np.zeros(0)
        u_rows = np.zeros((0, 0))
    m = rank
    a_c = a_mat[:, cone_cols] if nc else np.zeros((m, 0))
    a_f = a_mat[:, free_cols] if nf else np.zeros((m, 0))
    c_c = c[cone_cols]
    c_f = c[free_cols]

    # per-block metadata for the cone part (offsets within the cone coordinates)
    cone_blocks = []
    off = 0
    nu = 0
    for k in cone_idx:
        blk = blocks[k]
        cone_blocks.append((blk.kind, blk.size, off, blk.vdim))
        off += blk.vdim
        nu += blk.size
    norm_b = np.linalg.norm(b_red)
    norm_c = np.linalg.norm(c)

    # initial central point: identity in every cone block
    x = np.zeros(nc)
    z = np.zeros(nc)
    for kind, p, o, v in cone_blocks:
        if kind == "psd":
            x[o:o + v] = svec(np.eye(p))
            z[o:o + v] = svec(np.eye(p))
        else:
            x[o:o + v] = 1.0
            z[o:o + v] = 1.0
    xf = np.zeros(nf)
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0

    status = "max_iters"
    it = 0
    best = None
    x_full = np.zeros(n)

    def full_x():
        x_full[:] = 0.0
        if nc:
            x_full[cone_cols] = x
        if nf:
            x_full[free_cols] = xf
        return x_full

    def metrics():
        xx = full_x()
        pobj = float(c @ xx) / tau
        dobj = float(b_red @ y) / tau
        pres = np.linalg.norm(a_mat @ xx - b_red * tau) / tau / (1.0 + norm_b)
        zfull = np.zeros(n)
        if nc:
            zfull[cone_cols] = z
        dres = np.linalg.norm(-a_mat.T @ y + c * tau - zfull) / tau / (1.0 + norm_c)
        compl = float(x @ z) / tau ** 2
        denom = max(1.0, abs(pobj), abs(dobj))
        relgap = abs(pobj - dobj) / denom
        return pobj, dobj, pres, dres, relgap, compl / denom

    best_score = np.inf
    best_state = None
    best_iter = 0
    for it in range(1, max_iters + 1):
        mu = (float(x @ z) + tau * kappa) / (nu + 1)

        pobj, dobj, pres, dres, relgap, compl = metrics()
        if verbose:
            print(f"iter {it:3d}  pobj {pobj:+.9e}  dobj {dobj:+.9e}  "
                  f"pres {pres:.2e} dres {dres:.2e} gap {relgap:.2e} "
                  f"compl {compl:.2e} mu {mu:.2e}")
        score = max(pres, dres, relgap, compl / 50.0)
        if score < best_score:
            best_score = score
            best_state = (x.copy(), xf.copy(), y.copy(), z.copy(), tau, kappa)
            best_iter = it
        if pres <= tol and dres <= tol and relgap <= tol and compl <= 50 * tol:
            status = "optimal"
            break
        if it - best_iter >= 8:
            # no progress on the combined score for a while: numerics exhausted
            status = "stalled"
            break

        # Farkas certificate checks
        by = float(b_red @ y)
        if by > 0:
            zfull = np.zeros(n)
            if nc:
                zfull[cone_cols] = z
            if np.linalg.norm(a_mat.T @ y + zfull) <= max(tol, 1e-10) * by * (1.0 + norm_c):
                status = "infeasible"
                break
        cx = float(c @ full_x())
        if -cx > 0:
            if np.linalg.norm(a_mat @ full_x()) <= max(tol, 1e-10) * (-cx) * (1.0 + norm_b):
                status = "unbounded"
                break

        # Nesterov-Todd scalings
        scal = []
        for kind, p, o, v in cone_blocks:
            if kind == "psd":
                xm = smat(x[o:o + v], p)
                zm = smat(z[o:o + v], p)
                dz_, qz = np.linalg.eigh(zm)
                dz_ = np.maximum(dz_, 1e-300)
                zh = (qz * np.sqrt(dz_)) @ qz.T
                zih = (qz / np.sqrt(dz_)) @ qz.T
                mm = zh @ xm @ zh
                dm, qm = np.linalg.eigh(0.5 * (mm + mm.T))
                dm = np.maximum(dm, 1e-300)
                mh = (qm * np.sqrt(dm)) @ qm.T
                w = zih @ mh @ zih
                w = 0.5 * (w + w.T)
                dw, qw = np.linalg.eigh(w)
                dw = np.maximum(dw, 1e-300)
                vmat = (qw * np.sqrt(dw)) @ qw.T
                vinv = (qw / np.sqrt(dw)) @ qw.T
                lam = vinv @ xm @ vinv
                lam = 0.5 * (lam + lam.T)
                dl, ql = np.linalg.eigh(lam)
                dl = np.maximum(dl, 1e-300)
                scal.append({"kind": kind, "p": p, "o": o, "v": v, "W": w,
                             "V": vmat, "Vi": vinv, "dl": dl, "Ql": ql,
                             "lam": lam,
                             "lam_half_inv": (ql / np.sqrt(dl)) @ ql.T})
            else:
                xv = x[o:o + v]
                zv = z[o:o + v]
                wv = np.sqrt(xv / zv)
                lam = np.sqrt(xv * zv)
                scal.append({"kind": kind, "o": o, "v": v, "w": wv, "lam": lam})

        def apply_hinv_rows(rows: np.ndarray) -> np.ndarray:
            """rows (r x nc) -> Hinv applied to each row, Hinv = W (.) W congruence."""
            out = np.empty_like(rows)
            for s in scal:
                o, v = s["o"], s["v"]
                seg = rows[:, o:o + v]
                if s["kind"] == "psd":
                    mats = smat_batch(seg, s["p"])
                    ws = s["W"]
                    res = np.einsum("ab,rbc,cd->rad", ws, mats, ws, optimize=True)
                    out[:, o:o + v] = svec_batch(res)
                else:
                    out[:, o:o + v] = seg * s["w"] ** 2
            return out

        hiA = apply_hinv_rows(a_c) if nc else np.zeros((m, 0))   # rows: Hinv A_c'
        hic = apply_hinv_rows(c_c[None, :])[0] if nc else np.zeros(0)
        s_mat = a_c @ hiA.T

        dim = nf + m + 1
        top = np.zeros((m, dim))
        top[:, :nf] = a_f
        top[:, nf:nf + m] = s_mat
        top[:, nf + m] = -(a_c @ hic) - b_red
        gap_row = np.zeros(dim)
        gap_row[:nf] = -c_f
        gap_row[nf:nf + m] = b_red - a_c @ hic
        gap_row[nf + m] = kappa / tau + float(c_c @ hic)
        if nf:
            mid = np.zeros((nf, dim))
            mid[:, nf:nf + m] = -a_f.T
            mid[:, nf + m] = c_f
            kkt = np.vstack([top, mid, gap_row[None, :]])
        else:
            kkt = np.vstack([top, gap_row[None, :]])

        if not np.all(np.isfinite(kkt)):
            status = "stalled"
            break
        # Ruiz equilibration: the Schur block mixes scales like mu and 1/mu,
        # which degrades LU pivoting near convergence
        d_left = np.ones(dim)
        d_right = np.ones(dim)
        kkt_s = kkt
        for _ in range(3):
            rn = np.sqrt(np.maximum(np.abs(kkt_s).max(axis=1), 1e-300))
            kkt_s = kkt_s / rn[:, None]
            d_left /= rn
            cn = np.sqrt(np.maximum(np.abs(kkt_s).max(axis=0), 1e-300))
            kkt_s = kkt_s / cn[None, :]
            d_right /= cn
        try:
            with np.errstate(all="ignore"), warnings.catch_warnings():
                warnings.simplefilter("ignore")
                lu = scipy.linalg.lu_factor(kkt_s, check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError):
            lu = None

        rp = a_mat @ full_x() - b_red * tau
        zfull = np.zeros(n)
        if nc:
            zfull[cone_cols] = z
        rd = -a_mat.T @ y + c * tau - zfull
        rg = float(b_red @ y) - float(c @ full_x()) - kappa
        rd_c = rd[cone_cols] if nc else np.zeros(0)
        rd_f = rd[free_cols] if nf else np.zeros(0)

        def newton_raw(t1, t2, t3, t4_list, t5):
            """Solve the reduced KKT system for one set of equation targets."""
            rvec = np.zeros(nc)
            for s, t4 in zip(scal, t4_list):
                o, v = s["o"], s["v"]
                if s["kind"] == "psd":
                    rmat = s["Vi"] @ t4 @ s["Vi"]
                    rvec[o:o + v] = svec(0.5 * (rmat + rmat.T))
                else:
                    rvec[o:o + v] = t4 / s["w"]
            f_c = t2[cone_cols] + rvec
            f_f = t2[free_cols] if nf else np.zeros(0)
            hs = t3 + t5 / tau
            hif = apply_hinv_rows(f_c[None, :])[0] if nc else np.zeros(0)
            rhs = np.concatenate([
                t1 - (a_c @ hif if nc else 0.0),
                f_f,
                [hs + float(c_c @ hif)],
            ])
            u = None
            if lu is not None:
                with np.errstate(all="ignore"):
                    u = d_right * scipy.linalg.lu_solve(lu, d_left * rhs, check_finite=False)
                    if np.all(np.isfinite(u)):
                        for _ in range(2):
                            resid = rhs - kkt @ u
                            u2 = d_right * scipy.linalg.lu_solve(lu, d_left * resid, check_finite=False)
                            if not np.all(np.isfinite(u2)):
                                break
                            u = u + u2
                    else:
                        u = None
            if u is None:
                u = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
            dxf = u[:nf]
            dy = u[nf:nf + m]
            dtau = float(u[nf + m])
            dxc = hif + hiA.T @ dy - hic * dtau if nc else np.zeros(0)
            # dual equation gives dz directly: dz = -A_c' dy + c_c dtau - t2_c
            dz = -a_c.T @ dy + c_c * dtau - t2[cone_cols]
            dkappa = (t5 - kappa * dtau) / tau
            return [dxf, dy, dtau, dxc, dz, dkappa]

        def newton_residuals(d, t1, t2, t3, t4_list, t5):
            dxf, dy, dtau, dxc, dz, dkappa = d
            dx_full = np.zeros(n)
            if nc:
                dx_full[cone_cols] = dxc
            if nf:
                dx_full[free_cols] = dxf
            dz_full = np.zeros(n)
            if nc:
                dz_full[cone_cols] = dz
            r1 = t1 - (a_mat @ dx_full - b_red * dtau)
            r2 = t2 - (-a_mat.T @ dy + c * dtau - dz_full)
            r3 = t3 - (float(b_red @ dy) - float(c @ dx_full) - dkappa)
            r4 = []
            worst = 0.0
            for s, t4 in zip(scal, t4_list):
                o, v = s["o"], s["v"]
                if s["kind"] == "psd":
                    lhs = (s["Vi"] @ smat(dxc[o:o + v], s["p"]) @ s["Vi"]
                           + s["V"] @ smat(dz[o:o + v], s["p"]) @ s["V"])
                    res = t4 - 0.5 * (lhs + lhs.T)
                    r4.append(res)
                    worst = max(worst, float(np.abs(res).max()))
                else:
                    res = t4 - (dxc[o:o + v] / s["w"] + dz[o:o + v] * s["w"])
                    r4.append(res)
                    worst = max(worst, float(np.abs(res).max()) if res.size else 0.0)
            r5 = t5 - (tau * dkappa + kappa * dtau)
            worst = max(worst, float(np.linalg.norm(r1)), float(np.linalg.norm(r2)),
                        abs(r3), abs(r5))
            return (r1, r2, r3, r4, r5), worst

        def newton(t4_list, t5):
            """Direction for full residual reduction plus the given centering targets."""
            t1, t2, t3 = -rp, -rd, -rg
            d = newton_raw(t1, t2, t3, t4_list, t5)
            # outer refinement against the unreduced Newton equations; the reduced
            # Schur system loses digits once the scalings become extreme
            for _ in range(2):
                (r1, r2, r3, r4, r5), worst = newton_residuals(d, t1, t2, t3, t4_list, t5)
                if worst <= 1e-11 * (1.0 + mu):
                    break
                corr = newton_raw(r1, r2, r3, r4, r5)
                for i in range(6):
                    d[i] = d[i] + corr[i]
            return d

        def finite_dir(d):
            return all(np.all(np.isfinite(np.atleast_1d(v))) for v in d)

        # predictor
        dcc_aff = [-s["lam"].copy() for s in scal]
        dir_a = newton(dcc_aff, -tau * kappa)
        if not finite_dir(dir_a):
            status = "stalled"
            break
        dxf_a, dy_a, dtau_a, dxc_a, dz_a, dkappa_a = dir_a

        def step_len(dxc_, dz_, dtau_, dkappa_):
            alpha = np.inf
            if dtau_ < 0:
                alpha = min(alpha, -tau / dtau_)
            if dkappa_ < 0:
                alpha = min(alpha, -kappa / dkappa_)
            scaled = []
            for s in scal:
                o, v = s["o"], s["v"]
                if s["kind"] == "psd":
                    dxm = s["Vi"] @ smat(dxc_[o:o + v], s["p"]) @ s["Vi"]
                    dzm = s["V"] @ smat(dz_[o:o + v], s["p"]) @ s["V"]
                    dxm = 0.5 * (dxm + dxm.T)
                    dzm = 0.5 * (dzm + dzm.T)
                    for dmat in (dxm, dzm):
                        emin = _psd_min_eig_dir(s["lam_half_inv"], dmat)
                        if emin < 0:
                            alpha = min(alpha, -1.0 / emin)
                    scaled.append((dxm, dzm))
                else:
                    dxt = dxc_[o:o + v] / s["w"]
                    dzt = dz_[o:o + v] * s["w"]
                    alpha = min(alpha, _max_step(s["lam"], dxt))
                    alpha = min(alpha, _max_step(s["lam"], dzt))
                    scaled.append((dxt, dzt))
            return alpha, scaled

        alpha_aff, scaled_aff = step_len(dxc_a, dz_a, dtau_a, dkappa_a)
        alpha_aff = min(1.0, alpha_aff)
        # Mehrotra centering parameter
        xz_aff = 0.0
        for s, (dxt, dzt) in zip(scal, scaled_aff):
            if s["kind"] == "psd":
                lam_a = s["lam"] + alpha_aff * dxt
                lam_b = s["lam"] + alpha_aff * dzt
                xz_aff += float(np.sum(lam_a * lam_b))
            else:
                xz_aff += float((s["lam"] + alpha_aff * dxt) @ (s["lam"] + alpha_aff * dzt))
        xz_aff += (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkappa_a)
        mu_aff = max(xz_aff, 0.0) / (nu + 1)
        sigma = min(1.0, max(0.0, (mu_aff / mu))) ** 3

        # corrector (combined direction)
        dcc_cor = []
        for s, (dxt, dzt) in zip(scal, scaled_aff):
            if s["kind"] == "psd":
                cross = 0.5 * (dxt @ dzt + dzt @ dxt)
                nmat = s["Ql"].T @ cross @ s["Ql"]
                denom = 0.5 * (s["dl"][:, None] + s["dl"][None, :])
                nmat = nmat / denom
                corr = s["Ql"] @ nmat @ s["Ql"].T
                lam_inv = (s["Ql"] / s["dl"]) @ s["Ql"].T
                dcc = -s["lam"] + sigma * mu * lam_inv - 0.5 * (corr + corr.T)
                dcc_cor.append(0.5 * (dcc + dcc.T))
            else:
                dcc_cor.append(-s["lam"] + sigma * mu / s["lam"] - dxt * dzt / s["lam"])
        dtk_cor = -tau * kappa + sigma * mu - dtau_a * dkappa_a
        dir_c = newton(dcc_cor, dtk_cor)
        if not finite_dir(dir_c):
            status = "stalled"
            break
        dxf_c, dy_c, dtau_c, dxc_c, dz_c, dkappa_c = dir_c

        alpha, _ = step_len(dxc_c, dz_c, dtau_c, dkappa_c)
        alpha = min(1.0, 0.99 * alpha)
        if not np.isfinite(alpha) or alpha <= 1e-7:
            # corrector direction exhausted: fall back to a pure centering step,
            # which restores enough interiority for one more productive pass
            dcc_cent = []
            for s in scal:
                if s["kind"] == "psd":
                    lam_inv = (s["Ql"] / s["dl"]) @ s["Ql"].T
                    dcc_cent.append(-s["lam"] + mu * 0.5 * (lam_inv + lam_inv.T))
                else:
                    dcc_cent.append(-s["lam"] + mu / s["lam"])
            dir_cent = newton(dcc_cent, -tau * kappa + mu)
            if finite_dir(dir_cent):
                dxf_c, dy_c, dtau_c, dxc_c, dz_c, dkappa_c = dir_cent
                alpha, _ = step_len(dxc_c, dz_c, dtau_c, dkappa_c)
                alpha = min(1.0, 0.99 * alpha)
            if not np.isfinite(alpha) or alpha <= 1e-9:
                status = "stalled"
                break

        x += alpha * dxc_c
        z += alpha * dz_c
        xf += alpha * dxf_c
        y += alpha * dy_c
        tau += alpha * dtau_c
        kappa += alpha * dkappa_c
        if tau <= 0 or kappa < 0:
            status = "stalled"
            break

    if status in ("stalled", "max_iters") and best_state is not None:
        # roll back to the best iterate seen; late directions may have wandered
        x, xf, y, z, tau, kappa = best_state
    pobj, dobj, pres, dres, relgap, compl = metrics()
    if status in ("stalled", "max_iters"):
        # numerical exhaustion: accept the iterate when it is essentially optimal
        # (the true residuals are recorded either way)
        if (pres <= 10 * tol and dres <= 10 * tol and relgap <= 10 * tol
                and compl <= 1000 * tol):
            status = "optimal"
        else:
            status = "max_iters"

    if status == "infeasible":
        by = float(b_red @ y)
        y_cert = u_rows @ (y / by) if m0 else np.zeros(0)
        sol = ConicSolution(status="infeasible", objective=np.nan, x_blocks=[],
                            y=y_cert, z_blocks=[], gap=np.inf, pres=pres, dres=dres,
                            iterations=it, certificate={"y": y_cert})
        _record(sol.status, np.inf, tag)
        return sol
    if status == "unbounded":
        xx = full_x()
        ray = xx / max(-float(c @ xx), 1e-300)
        sol = ConicSolution(status="unbounded", objective=np.nan, x_blocks=[],
                            y=np.zeros(m0), z_blocks=[], gap=np.inf, pres=pres,
                            dres=dres, iterations=it,
                            certificate={"x": _unpack(ray, blocks, offsets)})
        _record(sol.status, np.inf, tag)
        return sol

    xx = full_x() / tau
    zz = np.zeros(n)
    if nc:
        zz[cone_cols] = z / tau
    y_out = (u_rows @ (y / tau)) if m0 else np.zeros(0)
    objective = float(problem.c @ xx)
    sol = ConicSolution(
        status=status,
        objective=objective,
        x_blocks=_unpack(xx, blocks, offsets),
        y=sign * y_out,
        z_blocks=_unpack(zz, blocks, offsets),
        gap=relgap,
        pres=pres,
        dres=dres,
        iterations=it,
        dual_objective=sign * dobj,
    )
    _record(status, relgap if status == "optimal" else np.inf, tag)
    return sol


def _solve_linear(problem: ConicProblem, tol: float, tag: str) -> ConicSolution:
    """Degenerate case with no cone blocks: a linear objective on an affine set."""
    sign = 1.0 if problem.sense == "min" else -1.0
    c = sign * problem.c
    a_mat, b = problem.A, problem.b
    offsets = problem.offsets()
    if a_mat.shape[0]:
        x, residual, *_ = np.linalg.lstsq(a_mat, b, rcond=None)
        feas = np.linalg.norm(a_mat @ x - b)
        if feas > 1e-9 * (1.0 + np.linalg.norm(b)):
            resid = b - a_mat @ x
            y_cert = resid / max(float(resid @ b), 1e-300)
            sol = ConicSolution(status="infeasible", objective=np.nan, x_blocks=[],
                                y=y_cert, z_blocks=[], gap=np.inf, pres=np.inf,
                                dres=np.inf, iterations=0, certificate={"y": y_cert})
            _record(sol.status, np.inf, tag)
            return sol
        y, *_ = np.linalg.lstsq(a_mat.T, c, rcond=None)
        c_null = c - a_mat.T @ y
    else:
        x = np.zeros(problem.n)
        y = np.zeros(0)
        c_null = c.copy()
    if np.linalg.norm(c_null) > 1e-9 * (1.0 + np.linalg.norm(c)):
        ray = -c_null / max(float(c @ c_null), 1e-300) * 1.0
        sol = ConicSolution(status="unbounded", objective=np.nan, x_blocks=[],
                            y=np.zeros(a_mat.shape[0]), z_blocks=[], gap=np.inf,
                            pres=np.inf, dres=np.inf, iterations=0,
                            certificate={"x": _unpack(-c_null, problem.blocks, offsets)})
        _record(sol.status, np.inf, tag)
        return sol
    objective = float(problem.c @ x)
    sol = ConicSolution(status="optimal", objective=objective,
                        x_blocks=_unpack(x, problem.blocks, offsets),
                        y=sign * y, z_blocks=[np.zeros(b_.vdim) for b_ in problem.blocks],
                        gap=0.0, pres=0.0, dres=0.0, iterations=0,
                        dual_objective=objective)
    _record("optimal", 0.0, tag)
    return sol


def _unpack(xvec: np.ndarray, blocks: list[Block], offsets: list[int]) -> list[np.ndarray]:
    out = []
    for blk, off in zip(blocks, offsets):
        seg = xvec[off:off + blk.vdim]
        out.append(smat(seg, blk.size) if blk.kind == "psd" else seg.copy())
    return out
