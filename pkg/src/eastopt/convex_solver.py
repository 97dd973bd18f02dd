"""Log-barrier interior-point solver for the smooth convex programs this
package emits: a linear objective, affine equalities, and inequality rows
drawn from five families (affine, convex quadratic ball, second-order cone,
log-of-affine lower bounds, reciprocal bounds), plus variable bounds.

All rows are smooth on the strict interior, so a classic barrier method with
damped Newton steps and a feasibility-enforcing backtracking line search
suffices; no external optimization dependency is used. Given identical inputs
the solver is deterministic, including its iteration count.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import cho_factor, cho_solve

_GAP_PER_ROW = 1e-8          # duality-gap target: 1e-8 * (number of inequality rows)
_KKT_OPTIMAL = 1e-6
_ARMIJO = 0.25
_MIN_STEP = 1e-16


class Status(enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"


# ---------------------------------------------------------------------------
# Row types. Index arrays refer to positions in the problem's variable vector.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineEq:
    """coef @ x[idx] == rhs"""
    idx: tuple
    coef: tuple
    rhs: float
    label: str = ""


@dataclass(frozen=True)
class AffineIneq:
    """coef @ x[idx] <= rhs"""
    idx: tuple
    coef: tuple
    rhs: float
    label: str = ""


@dataclass(frozen=True)
class QuadBall:
    """|A @ x[a_idx] + a_off|^2 <= lin_coef @ x[lin_idx] + offset"""
    a_idx: tuple
    a_mat: tuple          # rows of A, each a tuple of len(a_idx)
    a_off: tuple
    lin_idx: tuple
    lin_coef: tuple
    offset: float
    label: str = ""


@dataclass(frozen=True)
class SecondOrderCone:
    """|A @ x[a_idx] + a_off| <= lin_coef @ x[lin_idx] + offset (RHS > 0)"""
    a_idx: tuple
    a_mat: tuple
    a_off: tuple
    lin_idx: tuple
    lin_coef: tuple
    offset: float
    label: str = ""


@dataclass(frozen=True)
class LogTerm:
    """weight * ln(coef @ x[idx] + const); the argument must stay positive."""
    weight: float
    idx: tuple
    coef: tuple
    const: float


@dataclass(frozen=True)
class LogAffine:
    """sum of log terms >= lin_coef @ x[lin_idx] + rhs_const"""
    terms: tuple          # tuple[LogTerm, ...]
    lin_idx: tuple
    lin_coef: tuple
    rhs_const: float
    label: str = ""


@dataclass(frozen=True)
class Reciprocal:
    """x[greater_idx] >= 1 / x[inv_idx], with x[inv_idx] > 0"""
    greater_idx: int
    inv_idx: int
    label: str = ""


@dataclass(frozen=True)
class ConvexProblem:
    """A typed constraint system over a flat variable vector.

    `objective` is maximized. `scale` holds caller-supplied characteristic
    magnitudes used to precondition the Newton systems; `blocks` names index
    ranges for readability and post-solve extraction.
    """

    n: int
    objective: np.ndarray
    rows: tuple
    eqs: tuple = ()
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    scale: np.ndarray | None = None
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        obj = np.asarray(self.objective, dtype=float)
        if obj.shape != (self.n,):
            raise ValueError("objective length must equal n")
        object.__setattr__(self, "objective", obj)
        lb = np.full(self.n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float)
        ub = np.full(self.n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float)
        sc = np.ones(self.n) if self.scale is None else np.asarray(self.scale, dtype=float)
        if lb.shape != (self.n,) or ub.shape != (self.n,) or sc.shape != (self.n,):
            raise ValueError("lb/ub/scale length must equal n")
        if not np.all(sc > 0):
            raise ValueError("scale entries must be positive")
        for name, arr in (("lb", lb), ("ub", ub), ("scale", sc)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass
class SolverResult:
    status: Status
    x: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    duals: dict
    barrier_t: float
    trace: list


# ---------------------------------------------------------------------------
# Compilation: group rows into vectorized banks.
# ---------------------------------------------------------------------------

def _csr_from_entries(data, rows, cols, shape):
    if len(data) == 0:
        return sparse.csr_matrix(shape)
    return sparse.csr_matrix((np.asarray(data, dtype=float),
                              (np.asarray(rows), np.asarray(cols))), shape=shape)


class _NormBank:
    """Shared storage for QuadBall and SecondOrderCone rows."""

    def __init__(self, rows, n, row_positions):
        self.m = len(rows)
        self.positions = np.asarray(row_positions, dtype=int)
        a_data, a_r, a_c = [], [], []
        c_data, c_r, c_c = [], [], []
        offs, d_vec, seg_starts = [], [], []
        r_count = 0
        for i, row in enumerate(rows):
            seg_starts.append(r_count)
            a_mat = np.asarray(row.a_mat, dtype=float)
            a_idx = np.asarray(row.a_idx, dtype=int)
            for r in range(a_mat.shape[0]):
                for k in range(a_idx.size):
                    if a_mat[r, k] != 0.0:
                        a_data.append(a_mat[r, k]); a_r.append(r_count); a_c.append(a_idx[k])
                offs.append(row.a_off[r])
                r_count += 1
            for k, j in enumerate(row.lin_idx):
                c_data.append(row.lin_coef[k]); c_r.append(i); c_c.append(j)
            d_vec.append(row.offset)
        self.A = _csr_from_entries(a_data, a_r, a_c, (r_count, n))
        self.a_off = np.asarray(offs, dtype=float)
        self.C = _csr_from_entries(c_data, c_r, c_c, (self.m, n))
        self.d = np.asarray(d_vec, dtype=float)
        self.seg_starts = np.asarray(seg_starts, dtype=int)
        seg_ptr = np.append(self.seg_starts, r_count)
        self.seg_ptr = seg_ptr
        self.seg_of = np.repeat(np.arange(self.m), np.diff(seg_ptr))
        self.n_norm_rows = r_count

    def norms2_and_lin(self, x):
        y = self.A @ x + self.a_off
        sq = np.add.reduceat(y * y, self.seg_starts) if self.m else np.zeros(0)
        lin = self.C @ x + self.d
        return y, sq, lin

    def seg_matrix(self, y):
        return sparse.csr_matrix((y, np.arange(self.n_norm_rows), self.seg_ptr),
                                 shape=(self.m, self.n_norm_rows))


class _LogBank:
    def __init__(self, rows, n, row_positions):
        self.m = len(rows)
        self.positions = np.asarray(row_positions, dtype=int)
        t_data, t_r, t_c = [], [], []
        c_data, c_r, c_c = [], [], []
        consts, weights, d_vec, seg_starts = [], [], [], []
        t_count = 0
        for i, row in enumerate(rows):
            seg_starts.append(t_count)
            for term in row.terms:
                for k, j in enumerate(term.idx):
                    if term.coef[k] != 0.0:
                        t_data.append(term.coef[k]); t_r.append(t_count); t_c.append(j)
                consts.append(term.const)
                weights.append(term.weight)
                t_count += 1
            for k, j in enumerate(row.lin_idx):
                c_data.append(row.lin_coef[k]); c_r.append(i); c_c.append(j)
            d_vec.append(row.rhs_const)
        self.T = _csr_from_entries(t_data, t_r, t_c, (t_count, n))
        self.t_const = np.asarray(consts, dtype=float)
        self.w = np.asarray(weights, dtype=float)
        self.C = _csr_from_entries(c_data, c_r, c_c, (self.m, n))
        self.d = np.asarray(d_vec, dtype=float)
        self.seg_starts = np.asarray(seg_starts, dtype=int)
        seg_ptr = np.append(self.seg_starts, t_count)
        self.seg_of = np.repeat(np.arange(self.m), np.diff(seg_ptr))
        self.Seg = sparse.csr_matrix((np.ones(t_count), np.arange(t_count), seg_ptr),
                                     shape=(self.m, t_count))
        self.n_terms = t_count

    def args_and_residual(self, x):
        z = self.T @ x + self.t_const
        if self.m:
            lsum = np.add.reduceat(self.w * np.log(np.maximum(z, 1e-300)), self.seg_starts)
        else:
            lsum = np.zeros(0)
        r = (self.C @ x + self.d) - lsum
        return z, r


class _Compiled:
    def __init__(self, p: ConvexProblem):
        self.p = p
        n = p.n
        aff, quad, soc, logr, rec = [], [], [], [], []
        aff_pos, quad_pos, soc_pos, log_pos, rec_pos = [], [], [], [], []
        for pos, row in enumerate(p.rows):
            if isinstance(row, AffineIneq):
                aff.append(row); aff_pos.append(pos)
            elif isinstance(row, QuadBall):
                quad.append(row); quad_pos.append(pos)
            elif isinstance(row, SecondOrderCone):
                soc.append(row); soc_pos.append(pos)
            elif isinstance(row, LogAffine):
                logr.append(row); log_pos.append(pos)
            elif isinstance(row, Reciprocal):
                rec.append(row); rec_pos.append(pos)
            else:
                raise TypeError(f"unsupported row type {type(row).__name__}")
        m_data, m_r, m_c, m_rhs = [], [], [], []
        for i, row in enumerate(aff):
            for k, j in enumerate(row.idx):
                m_data.append(row.coef[k]); m_r.append(i); m_c.append(j)
            m_rhs.append(row.rhs)
        self.aff_M = _csr_from_entries(m_data, m_r, m_c, (len(aff), n))
        self.aff_rhs = np.asarray(m_rhs, dtype=float)
        self.aff_pos = np.asarray(aff_pos, dtype=int)
        self.quad = _NormBank(quad, n, quad_pos)
        self.soc = _NormBank(soc, n, soc_pos)
        self.log = _LogBank(logr, n, log_pos)
        self.rec_g = np.asarray([r.greater_idx for r in rec], dtype=int)
        self.rec_k = np.asarray([r.inv_idx for r in rec], dtype=int)
        self.rec_pos = np.asarray(rec_pos, dtype=int)
        k = len(p.eqs)
        self.E = np.zeros((k, n))
        self.e_rhs = np.zeros(k)
        for i, eq in enumerate(p.eqs):
            for kk, j in enumerate(eq.idx):
                self.E[i, j] += eq.coef[kk]
            self.e_rhs[i] = eq.rhs
        self.lb_idx = np.flatnonzero(np.isfinite(p.lb))
        self.ub_idx = np.flatnonzero(np.isfinite(p.ub))
        self.m_rows = (len(aff) + self.quad.m + self.soc.m + self.log.m
                       + self.rec_g.size + self.lb_idx.size + self.ub_idx.size)
        # barrier parameter: SOC rows carry a degree-2 cone barrier
        self.theta = self.m_rows + self.soc.m
        self.n_rows = len(p.rows)

    # -- residuals ----------------------------------------------------------
    def margins(self, x):
        """Per-row slack margins, ordered like problem.rows (positive = strictly
        feasible), plus bound margins. SOC rows report the cone margin
        rhs - |y|."""
        out = np.empty(self.n_rows)
        if self.aff_pos.size:
            out[self.aff_pos] = self.aff_rhs - self.aff_M @ x
        if self.quad.m:
            _, sq, lin = self.quad.norms2_and_lin(x)
            out[self.quad.positions] = lin - sq
        if self.soc.m:
            y, sq, lin = self.soc.norms2_and_lin(x)
            out[self.soc.positions] = lin - np.sqrt(sq)
        if self.log.m:
            z, r = self.log.args_and_residual(x)
            vals = -r
            bad = np.zeros(self.log.m, dtype=bool)
            np.logical_or.at(bad, self.log.seg_of, z <= 0.0)
            vals[bad] = -np.inf
            out[self.log.positions] = vals
        if self.rec_g.size:
            xk = x[self.rec_k]
            vals = np.where(xk > 0.0, x[self.rec_g] - 1.0 / np.maximum(xk, 1e-300), -np.inf)
            out[self.rec_pos] = vals
        return out

    def bound_margins(self, x):
        p = self.p
        return x[self.lb_idx] - p.lb[self.lb_idx], p.ub[self.ub_idx] - x[self.ub_idx]

    def strictly_feasible(self, x):
        lo, hi = self.bound_margins(x)
        if (lo.size and lo.min() <= 0.0) or (hi.size and hi.min() <= 0.0):
            return False
        # SOC additionally needs a positive RHS
        if self.soc.m:
            _, _, lin = self.soc.norms2_and_lin(x)
            if lin.min() <= 0.0:
                return False
        marg = self.margins(x)
        return bool(marg.size == 0 or marg.min() > 0.0)

    def all_slacks(self, x):
        """Every barrier slack at x in a fixed order, or (False, None) when x
        leaves the strict interior. Evaluating the barrier through slack
        RATIOS keeps line-search comparisons meaningful even when t*f0 is
        large enough that absolute barrier values lose the decrease."""
        parts = []
        lo, hi = self.bound_margins(x)
        if (lo.size and lo.min() <= 0.0) or (hi.size and hi.min() <= 0.0):
            return False, None
        parts += [lo, hi]
        if self.aff_M.shape[0]:
            s = self.aff_rhs - self.aff_M @ x
            if s.min() <= 0.0:
                return False, None
            parts.append(s)
        if self.quad.m:
            _, sq, lin = self.quad.norms2_and_lin(x)
            s = lin - sq
            if s.min() <= 0.0:
                return False, None
            parts.append(s)
        if self.soc.m:
            _, sq, lin = self.soc.norms2_and_lin(x)
            if lin.min() <= 0.0:
                return False, None
            s = lin * lin - sq
            if s.min() <= 0.0:
                return False, None
            parts.append(s)
        if self.log.m:
            z, r = self.log.args_and_residual(x)
            if z.min() <= 0.0 or r.max() >= 0.0:
                return False, None
            parts.append(-r)
        if self.rec_g.size:
            xk = x[self.rec_k]
            if xk.min() <= 0.0:
                return False, None
            s = x[self.rec_g] - 1.0 / xk
            if s.min() <= 0.0:
                return False, None
            parts.append(s)
        return True, (np.concatenate(parts) if parts else np.zeros(0))

    # -- gradient and Hessian of the barrier function -----------------------
    def grad_hess(self, x, t):
        p = self.p
        n = p.n
        g = -t * p.objective.copy()
        sparse_pieces = []
        diag = np.zeros(n)

        lo, hi = self.bound_margins(x)
        np.subtract.at(g, self.lb_idx, 1.0 / lo)
        np.add.at(g, self.ub_idx, 1.0 / hi)
        np.add.at(diag, self.lb_idx, 1.0 / lo ** 2)
        np.add.at(diag, self.ub_idx, 1.0 / hi ** 2)

        if self.aff_M.shape[0]:
            s = self.aff_rhs - self.aff_M @ x
            w = 1.0 / s
            g += self.aff_M.T @ w
            sparse_pieces.append(self.aff_M.T @ sparse.diags(w ** 2) @ self.aff_M)

        if self.quad.m:
            bank = self.quad
            y, sq, lin = bank.norms2_and_lin(x)
            s = lin - sq
            w = 1.0 / s
            w_seg = w[bank.seg_of]
            g += 2.0 * (bank.A.T @ (y * w_seg)) - bank.C.T @ w
            G = (2.0 * (bank.seg_matrix(y) @ bank.A) - bank.C).tocsr()
            sparse_pieces.append(G.T @ sparse.diags(w ** 2) @ G)
            sparse_pieces.append(2.0 * (bank.A.T @ sparse.diags(w_seg) @ bank.A))

        if self.soc.m:
            bank = self.soc
            y, sq, lin = bank.norms2_and_lin(x)
            s = lin * lin - sq
            w = 1.0 / s
            w_seg = w[bank.seg_of]
            g += -2.0 * (bank.C.T @ (lin * w)) + 2.0 * (bank.A.T @ (y * w_seg))
            Gs = (2.0 * (sparse.diags(lin) @ bank.C) - 2.0 * (bank.seg_matrix(y) @ bank.A)).tocsr()
            sparse_pieces.append(Gs.T @ sparse.diags(w ** 2) @ Gs)
            sparse_pieces.append(2.0 * (bank.A.T @ sparse.diags(w_seg) @ bank.A))
            sparse_pieces.append(-2.0 * (bank.C.T @ sparse.diags(w) @ bank.C))

        if self.log.m:
            bank = self.log
            z, r = self.log.args_and_residual(x)
            s = -r
            w = 1.0 / s
            w_seg = w[bank.seg_of]
            wz = bank.w / z
            g += bank.C.T @ w - bank.T.T @ (wz * w_seg)
            scaledT = sparse.diags(wz) @ bank.T
            G = (bank.C - bank.Seg @ scaledT).tocsr()
            sparse_pieces.append(G.T @ sparse.diags(w ** 2) @ G)
            sparse_pieces.append(bank.T.T @ sparse.diags(w_seg * bank.w / z ** 2) @ bank.T)

        H = sum(sparse_pieces).toarray() if sparse_pieces else np.zeros((n, n))
        H[np.arange(n), np.arange(n)] += diag

        if self.rec_g.size:
            xk = x[self.rec_k]
            s = x[self.rec_g] - 1.0 / xk
            w = 1.0 / s
            inv2 = 1.0 / xk ** 2
            np.add.at(g, self.rec_g, -w)
            np.add.at(g, self.rec_k, -w * inv2)
            np.add.at(H, (self.rec_g, self.rec_g), w ** 2)
            np.add.at(H, (self.rec_g, self.rec_k), w ** 2 * inv2)
            np.add.at(H, (self.rec_k, self.rec_g), w ** 2 * inv2)
            np.add.at(H, (self.rec_k, self.rec_k), w ** 2 * inv2 ** 2 + w * 2.0 / xk ** 3)
        return g, H

    # -- dual estimates from the central point ------------------------------
    def duals(self, x, t, nu):
        mu = np.zeros(self.n_rows)
        if self.aff_pos.size:
            mu[self.aff_pos] = 1.0 / (t * (self.aff_rhs - self.aff_M @ x))
        if self.quad.m:
            _, sq, lin = self.quad.norms2_and_lin(x)
            mu[self.quad.positions] = 1.0 / (t * (lin - sq))
        if self.soc.m:
            _, sq, lin = self.soc.norms2_and_lin(x)
            mu[self.soc.positions] = 1.0 / (t * (lin * lin - sq))
        if self.log.m:
            _, r = self.log.args_and_residual(x)
            mu[self.log.positions] = 1.0 / (t * (-r))
        if self.rec_g.size:
            s = x[self.rec_g] - 1.0 / x[self.rec_k]
            mu[self.rec_pos] = 1.0 / (t * s)
        lo, hi = self.bound_margins(x)
        sig_lb = np.zeros(self.p.n)
        sig_ub = np.zeros(self.p.n)
        sig_lb[self.lb_idx] = 1.0 / (t * lo)
        sig_ub[self.ub_idx] = 1.0 / (t * hi)
        return {"rows": mu, "eq": np.asarray(nu, dtype=float) / t if len(nu) else np.zeros(0),
                "lb": sig_lb, "ub": sig_ub}

    def row_grad_dots(self, x, dx):
        """grad g_i(x)^T dx per row (smooth forms), plus bound-margin dots."""
        out = np.zeros(self.n_rows)
        if self.aff_pos.size:
            out[self.aff_pos] = self.aff_M @ dx
        if self.quad.m:
            bank = self.quad
            y, _, _ = bank.norms2_and_lin(x)
            ydx = bank.A @ dx
            out[bank.positions] = (2.0 * np.add.reduceat(y * ydx, bank.seg_starts)
                                   - bank.C @ dx)
        if self.soc.m:
            bank = self.soc
            y, _, lin = bank.norms2_and_lin(x)
            ydx = bank.A @ dx
            out[bank.positions] = (2.0 * np.add.reduceat(y * ydx, bank.seg_starts)
                                   - 2.0 * lin * (bank.C @ dx))
        if self.log.m:
            bank = self.log
            z, _ = bank.args_and_residual(x)
            zdx = bank.T @ dx
            out[bank.positions] = (bank.C @ dx
                                   - np.add.reduceat(bank.w * zdx / z, bank.seg_starts))
        if self.rec_g.size:
            out[self.rec_pos] = -dx[self.rec_g] - dx[self.rec_k] / x[self.rec_k] ** 2
        return out

    def duals_corrected(self, x, t, nu, dx):
        """Primal-dual (Newton-corrected) multiplier estimates.

        mu_i = (1/(t s_i)) (1 + grad g_i^T dx / s_i) cancels the first-order
        stationarity residual of an approximately centered point; negative
        corrections are clamped to keep dual feasibility.
        """
        base = self.duals(x, t, nu)
        g_dots = self.row_grad_dots(x, dx)
        s = -self.smooth_values(x)
        mu = base["rows"] * np.maximum(1.0 + g_dots / s, 0.0)
        lo, hi = self.bound_margins(x)
        sig_lb = base["lb"].copy()
        sig_ub = base["ub"].copy()
        sig_lb[self.lb_idx] *= np.maximum(1.0 - dx[self.lb_idx] / lo, 0.0)
        sig_ub[self.ub_idx] *= np.maximum(1.0 + dx[self.ub_idx] / hi, 0.0)
        return {"rows": mu, "eq": base["eq"], "lb": sig_lb, "ub": sig_ub}

    # -- smooth constraint functions and gradients for the KKT check --------
    def smooth_values(self, x):
        """g_i(x) per row in the smooth formulation used by the barrier."""
        out = np.empty(self.n_rows)
        if self.aff_pos.size:
            out[self.aff_pos] = self.aff_M @ x - self.aff_rhs
        if self.quad.m:
            _, sq, lin = self.quad.norms2_and_lin(x)
            out[self.quad.positions] = sq - lin
        if self.soc.m:
            _, sq, lin = self.soc.norms2_and_lin(x)
            out[self.soc.positions] = sq - lin * lin
        if self.log.m:
            _, r = self.log.args_and_residual(x)
            out[self.log.positions] = r
        if self.rec_g.size:
            out[self.rec_pos] = 1.0 / x[self.rec_k] - x[self.rec_g]
        return out

    def weighted_grad_sum(self, x, mu, absolute: bool = False):
        """sum_i mu_i * grad g_i(x) over all rows, smooth formulation.

        With `absolute=True`, sums |mu_i| * |grad g_i| componentwise instead;
        that magnitude scales the stationarity residual, turning it into a
        relative measure of how well the dual terms cancel.
        """
        n = self.p.n
        out = np.zeros(n)
        if absolute:
            def mat(m):
                return abs(m)

            def vec(v):
                return np.abs(v)
            neg = 1.0
        else:
            def mat(m):
                return m

            def vec(v):
                return v
            neg = -1.0
        if self.aff_pos.size:
            out += mat(self.aff_M).T @ vec(mu[self.aff_pos])
        if self.quad.m:
            bank = self.quad
            y, _, _ = bank.norms2_and_lin(x)
            w = mu[bank.positions]
            out += 2.0 * (mat(bank.A).T @ vec(y * w[bank.seg_of]))
            out += neg * (mat(bank.C).T @ vec(w))
        if self.soc.m:
            bank = self.soc
            y, _, lin = bank.norms2_and_lin(x)
            w = mu[bank.positions]
            out += 2.0 * (mat(bank.A).T @ vec(y * w[bank.seg_of]))
            out += neg * 2.0 * (mat(bank.C).T @ vec(lin * w))
        if self.log.m:
            bank = self.log
            z, _ = bank.args_and_residual(x)
            w = mu[bank.positions]
            out += mat(bank.C).T @ vec(w)
            out += neg * (mat(bank.T).T @ vec((bank.w / z) * w[bank.seg_of]))
        if self.rec_g.size:
            w = mu[self.rec_pos]
            np.add.at(out, self.rec_g, neg * vec(w))
            np.add.at(out, self.rec_k, neg * vec(w / x[self.rec_k] ** 2))
        return out

    def in_domain(self, x):
        if self.log.m:
            z, _ = self.log.args_and_residual(x)
            if z.min() <= 0.0:
                return False
        if self.rec_k.size and x[self.rec_k].min() <= 0.0:
            return False
        if self.soc.m:
            _, _, lin = self.soc.norms2_and_lin(x)
            if lin.min() <= 0.0:
                return False
        return True


def row_margins(problem: ConvexProblem, x) -> np.ndarray:
    """Slack margin of every inequality row at x (positive = strictly inside),
    ordered like problem.rows."""
    return _Compiled(problem).margins(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# Newton-with-equalities step in the scaled metric.
# ---------------------------------------------------------------------------

def _newton_direction(comp, x, t, scale, E_s):
    g, H = comp.grad_hess(x, t)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(H))):
        return None
    g_s = scale * g
    H_s = H * scale[None, :] * scale[:, None]
    mean_diag = max(np.mean(np.diag(H_s)), 1e-300)
    jitter = 0.0
    for attempt in range(12):
        try:
            if jitter:
                factor = cho_factor(H_s + jitter * np.eye(H_s.shape[0]), lower=True,
                                    check_finite=False)
            else:
                factor = cho_factor(H_s, lower=True, check_finite=False)
            break
        except np.linalg.LinAlgError:
            jitter = mean_diag * (1e-12 if jitter == 0.0 else 0.0) + jitter * 100.0
            if jitter > 1e-2 * mean_diag:
                return None
    else:  # pragma: no cover
        return None
    if E_s.shape[0]:
        rhs = np.column_stack([g_s, E_s.T])
        sol = cho_solve(factor, rhs, check_finite=False)
        wg, we = sol[:, 0], sol[:, 1:]
        schur = E_s @ we
        try:
            nu = np.linalg.solve(schur, -(E_s @ wg))
        except np.linalg.LinAlgError:
            return None
        dx_s = -(wg + we @ nu)
    else:
        wg = cho_solve(factor, g_s, check_finite=False)
        dx_s = -wg
        nu = np.zeros(0)
    lam2 = float(max(-g_s @ dx_s, 0.0))
    return dx_s, lam2, nu


def solve(problem: ConvexProblem, start, *, max_newton_steps: int = 200,
          collect_trace: bool = False) -> SolverResult:
    """Maximize the problem objective from a strictly feasible start.

    The start must satisfy every equality to ~1e-8 and every inequality and
    domain condition strictly; a violating start raises ValueError. On
    MAX_ITERATIONS or NUMERICAL_FAILURE the best feasible iterate found so
    far is returned.
    """
    comp = _Compiled(problem)
    x = np.asarray(start, dtype=float).copy()
    if x.shape != (problem.n,):
        raise ValueError("start length must equal n")
    if comp.E.shape[0]:
        eq_res = comp.E @ x - comp.e_rhs
        if np.max(np.abs(eq_res) / (1.0 + np.abs(comp.e_rhs))) > 1e-8:
            raise ValueError("start does not satisfy the equality constraints")
    if not comp.strictly_feasible(x):
        marg = comp.margins(x)
        worst = int(np.argmin(marg)) if marg.size else -1
        label = problem.rows[worst].label if worst >= 0 else "bounds"
        raise ValueError(f"start is not strictly feasible (worst row: {label!r})")

    scale = problem.scale
    E_s = comp.E * scale[None, :]
    obj = problem.objective
    trace: list = []

    best_x = x.copy()
    best_obj = float(obj @ x)
    start_obj = best_obj

    gap_target = _GAP_PER_ROW * max(comp.m_rows, 1)
    t_final = comp.theta / gap_target if comp.theta else 1.0
    stages = [1.0]
    while stages[-1] * 10.0 < t_final:
        stages.append(stages[-1] * 10.0)
    if stages[-1] < t_final:
        stages.append(t_final)

    total_steps = 0
    status = Status.OPTIMAL
    nu = np.zeros(comp.E.shape[0])
    t = stages[-1]
    failed = False
    snapshots = []   # (t, x, nu, dx) at the end of each centering stage
    si = 0
    while si < len(stages):
        t = stages[si]
        inner_tol = 1e-10
        dx_last = np.zeros(problem.n)
        for _ in range(60):
            if total_steps >= max_newton_steps:
                status = Status.MAX_ITERATIONS
                break
            step = _newton_direction(comp, x, t, scale, E_s)
            if step is None:
                status = Status.NUMERICAL_FAILURE
                failed = True
                break
            dx_s, lam2, nu_new = step
            nu = nu_new
            dx_last = scale * dx_s
            if collect_trace:
                trace.append((total_steps, 1.0 / t, float(obj @ x), lam2))
            if 0.5 * lam2 <= inner_tol:
                break
            dx = dx_last
            # difference form of the Armijo test: exact linear-objective delta
            # plus log slack ratios, immune to cancellation in t*f0
            _, s_old = comp.all_slacks(x)
            obj_dx = float(obj @ dx)
            slope = -lam2
            alpha = 1.0
            accepted = False
            while alpha >= _MIN_STEP:
                xn = x + alpha * dx
                ok, s_new = comp.all_slacks(xn)
                if ok:
                    dphi = -t * alpha * obj_dx - float(np.sum(np.log(s_new / s_old)))
                    if dphi <= _ARMIJO * alpha * slope:
                        x = xn
                        accepted = True
                        break
                alpha *= 0.5
            total_steps += 1
            if not accepted:
                break  # stalled at numerical precision for this stage
            cur = float(obj @ x)
            if cur > best_obj:
                best_obj, best_x = cur, x.copy()
        if failed or status is Status.MAX_ITERATIONS:
            break
        snapshots.append((t, x.copy(), nu.copy(), dx_last.copy()))
        # small-objective problems need a tighter absolute gap than the
        # per-row rule provides before the relative contract is met
        if (si == len(stages) - 1 and t < 1e12
                and comp.theta / t > 0.45e-6 * (1.0 + abs(float(obj @ x)))):
            stages.append(t * 10.0)
        si += 1

    if status is Status.OPTIMAL and snapshots:
        # Certify the latest stage that passes the KKT test and whose
        # duality-gap bound still meets the relative-objective contract.
        # Slack-based duals lose relative precision as t grows, so the very
        # last stage can fail the certificate even though its point is the
        # most accurate; an earlier central point is then returned instead.
        # A snapshot's gap is bounded by the objective it gave up relative to
        # the last stage plus the last stage's own central-path gap.
        obj_last = float(obj @ snapshots[-1][1])
        tail_gap = comp.theta / snapshots[-1][0]
        chosen = None
        for t_s, x_s, nu_s, dx_s in reversed(snapshots):
            obj_s = float(obj @ x_s)
            if obj_s < start_obj:
                continue
            gap_bound = (obj_last - obj_s) + tail_gap
            if gap_bound > 1e-6 * (1.0 + abs(obj_s)):
                break
            for duals_s in (comp.duals_corrected(x_s, t_s, nu_s, dx_s),
                            comp.duals(x_s, t_s, nu_s)):
                kkt_s = check_kkt(problem, x_s, duals_s)
                if kkt_s <= _KKT_OPTIMAL:
                    chosen = (t_s, x_s, nu_s, duals_s, kkt_s)
                    break
            if chosen is not None:
                break
        if chosen is not None:
            t, x, nu, duals, kkt = chosen
            return SolverResult(status=Status.OPTIMAL, x=x, objective=float(obj @ x),
                                kkt_residual=kkt, iterations=total_steps, duals=duals,
                                barrier_t=t, trace=trace)
        status = Status.NUMERICAL_FAILURE

    final_obj = float(obj @ x)
    if final_obj < start_obj and best_obj >= start_obj:
        x = best_x.copy()
        final_obj = best_obj
    duals = comp.duals(x, t, nu)
    kkt = check_kkt(problem, x, duals)
    return SolverResult(status=status, x=x, objective=final_obj, kkt_residual=kkt,
                        iterations=total_steps, duals=duals, barrier_t=t, trace=trace)


def check_kkt(problem: ConvexProblem, x, duals: dict) -> float:
    """Max of scaled stationarity, primal, dual, and complementarity residuals.

    Constraint functions are taken in the smooth form the barrier uses. A
    point outside a logarithm/reciprocal/cone domain returns +inf.
    """
    comp = _Compiled(problem)
    x = np.asarray(x, dtype=float)
    if not comp.in_domain(x):
        return np.inf
    mu = np.asarray(duals.get("rows", np.zeros(comp.n_rows)), dtype=float)
    nu = np.asarray(duals.get("eq", np.zeros(comp.E.shape[0])), dtype=float)
    sig_lb = np.asarray(duals.get("lb", np.zeros(problem.n)), dtype=float)
    sig_ub = np.asarray(duals.get("ub", np.zeros(problem.n)), dtype=float)

    g_vals = comp.smooth_values(x)
    f0 = -float(problem.objective @ x)

    stat = (-problem.objective + comp.weighted_grad_sum(x, mu)
            - sig_lb + sig_ub)
    if comp.E.shape[0]:
        stat += comp.E.T @ nu
    # relative dual infeasibility: scale each component by the magnitude of
    # the terms whose cancellation produced it
    mag = (np.abs(problem.objective) + comp.weighted_grad_sum(x, mu, absolute=True)
           + sig_lb + sig_ub)
    if comp.E.shape[0]:
        mag += np.abs(comp.E.T) @ np.abs(nu)
    stat_res = float(np.max(np.abs(stat) / (1.0 + mag)))

    viol = np.maximum(g_vals, 0.0)
    primal = float(np.max(viol / (1.0 + np.abs(g_vals)), initial=0.0))
    lo, hi = comp.bound_margins(x)
    if lo.size:
        primal = max(primal, float(np.max(-lo / (1.0 + np.abs(problem.lb[comp.lb_idx])))))
    if hi.size:
        primal = max(primal, float(np.max(-hi / (1.0 + np.abs(problem.ub[comp.ub_idx])))))
    if comp.E.shape[0]:
        primal = max(primal, float(np.max(np.abs(comp.E @ x - comp.e_rhs)
                                          / (1.0 + np.abs(comp.e_rhs)))))

    dual_res = max(0.0, float(-np.min(mu)) if mu.size else 0.0,
                   float(-np.min(sig_lb)) if sig_lb.size else 0.0,
                   float(-np.min(sig_ub)) if sig_ub.size else 0.0)

    compl = float(np.max(np.abs(mu * g_vals), initial=0.0))
    if lo.size:
        compl = max(compl, float(np.max(np.abs(sig_lb[comp.lb_idx] * lo))))
    if hi.size:
        compl = max(compl, float(np.max(np.abs(sig_ub[comp.ub_idx] * hi))))
    compl /= 1.0 + abs(f0)

    return float(max(stat_res, max(primal, 0.0), dual_res, compl))
