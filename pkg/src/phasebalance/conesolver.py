"""Standard-form second-order-cone programs and a reference interior-point solver.

Problems are stated as

    minimize    c'x
    subject to  A x = b
                G x + s = h,   s in K
                lb <= x <= ub  (optional, folded into K internally)

where K is a product of a nonnegative orthant of dimension ``n_orthant``
followed by second-order cones ``soc_dims`` (each block (u0, u1) with
||u1|| <= u0).  The solver is a primal-dual Mehrotra predictor-corrector
method with Nesterov-Todd scaling on the homogeneous self-dual embedding,
so primal or dual infeasibility is certified rather than guessed from
divergence.  All linear algebra is deterministic; identical problems give
bit-identical iterates.

The branch-and-bound driver consumes this interface; swapping in another
solver only requires matching ``solve``'s contract.
"""

import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy import sparse as sp
from scipy.sparse import linalg as spla

# static regularization of the KKT system; iterative refinement runs
# against the unregularized operator so accuracy is not limited by it
_REG = 1e-8
_REFINE_STEPS = 8
_REFINE_STOP = 1e-11
_DENSE_LIMIT = 320  # KKT dimension below which dense factorization wins
_MIN_STEP = 1e-10

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"
STATUS_ITERATION_LIMIT = "iteration-limit"


def _as_csc(mat, shape):
    if mat is None:
        return sp.csc_matrix(shape)
    if sp.issparse(mat):
        out = mat.tocsc().astype(float)
    else:
        out = sp.csc_matrix(np.asarray(mat, dtype=float))
    if out.shape != shape:
        raise ValueError(f"matrix shape {out.shape} != expected {shape}")
    return out


@dataclass(eq=False)
class StandardConeProblem:
    """Conic program data; see the module docstring for the geometry."""

    c: np.ndarray
    A: object = None  # (p, n) equality matrix
    b: np.ndarray = None
    G: object = None  # (m, n) cone matrix
    h: np.ndarray = None
    n_orthant: int = 0
    soc_dims: tuple = ()
    lb: np.ndarray = None
    ub: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.shape[0]
        self.b = (
            np.zeros(0) if self.b is None else np.asarray(self.b, dtype=float).ravel()
        )
        self.h = (
            np.zeros(0) if self.h is None else np.asarray(self.h, dtype=float).ravel()
        )
        self.A = _as_csc(self.A, (self.b.shape[0], n))
        self.G = _as_csc(self.G, (self.h.shape[0], n))
        self.soc_dims = tuple(int(d) for d in self.soc_dims)
        if any(d < 2 for d in self.soc_dims):
            raise ValueError("second-order cone blocks need dimension >= 2")
        if self.n_orthant < 0:
            raise ValueError("n_orthant must be nonnegative")
        if self.n_orthant + sum(self.soc_dims) != self.G.shape[0]:
            raise ValueError(
                f"cone rows {self.n_orthant}+{sum(self.soc_dims)} != G rows {self.G.shape[0]}"
            )
        if self.lb is not None:
            self.lb = np.asarray(self.lb, dtype=float).ravel()
            if self.lb.shape[0] != n:
                raise ValueError("lb length mismatch")
        if self.ub is not None:
            self.ub = np.asarray(self.ub, dtype=float).ravel()
            if self.ub.shape[0] != n:
                raise ValueError("ub length mismatch")

    @property
    def n(self) -> int:
        return self.c.shape[0]


@dataclass
class ConeSolution:
    x: np.ndarray
    y: np.ndarray  # equality duals
    z: np.ndarray  # cone duals (over the bound-augmented cone rows)
    s: np.ndarray  # cone slacks (same ordering as z)
    status: str
    objective: float
    primal_residual: float
    dual_residual: float
    duality_gap: float
    iterations: int


def _augment_bounds(p: StandardConeProblem):
    """Fold finite variable bounds into extra orthant rows.

    Row order of the augmented cone: original orthant rows, lower-bound
    rows, upper-bound rows, then the second-order blocks.
    """
    n = p.n
    extra_rows = []
    extra_h = []
    if p.lb is not None:
        for j in np.flatnonzero(np.isfinite(p.lb)):
            extra_rows.append((-1.0, int(j)))
            extra_h.append(-p.lb[j])
    if p.ub is not None:
        for j in np.flatnonzero(np.isfinite(p.ub)):
            extra_rows.append((1.0, int(j)))
            extra_h.append(p.ub[j])
    if not extra_rows:
        return p.G.tocsc(), p.h, p.n_orthant
    k = len(extra_rows)
    data = np.array([v for v, _ in extra_rows])
    cols = np.array([j for _, j in extra_rows])
    rows = np.arange(k)
    B = sp.csc_matrix((data, (rows, cols)), shape=(k, n))
    l = p.n_orthant
    G = sp.vstack([p.G[:l], B, p.G[l:]], format="csc")
    h = np.concatenate([p.h[:l], np.asarray(extra_h), p.h[l:]])
    return G, h, l + k


class _ConeGeometry:
    """Orthant + SOC block bookkeeping over flat slack/dual vectors.

    Blocks of equal dimension are batched: every cone operation gathers the
    blocks of one size into an (n_blocks, dim) matrix and works on all of
    them at once, which keeps the per-iteration cost out of Python loops.
    """

    def __init__(self, l: int, dims):
        self.l = l
        self.dims = tuple(dims)
        self.blocks = []
        start = l
        for d in self.dims:
            self.blocks.append((start, d))
            start += d
        self.m = start
        self.degree = l + len(self.dims)
        by_dim = {}
        for s, d in self.blocks:
            by_dim.setdefault(d, []).append(s)
        self.groups = []
        for d in sorted(by_dim):
            starts = np.asarray(by_dim[d], dtype=np.intp)
            idx = starts[:, None] + np.arange(d)
            self.groups.append((d, starts, idx))

    def identity(self):
        e = np.zeros(self.m)
        e[: self.l] = 1.0
        for _, starts, _ in self.groups:
            e[starts] = 1.0
        return e

    def margin(self, u):
        best = np.inf
        if self.l:
            best = float(u[: self.l].min())
        for _, _, idx in self.groups:
            blk = u[idx]
            vals = blk[:, 0] - np.linalg.norm(blk[:, 1:], axis=1)
            best = min(best, float(vals.min()))
        return best

    def shift_into(self, u):
        a = -self.margin(u)
        if a < 0:
            return u
        return u + (1.0 + a) * self.identity()

    def step_to_boundary(self, u, du):
        """Largest step with u + alpha*du staying in the cone."""
        best = np.inf
        if self.l:
            neg = du[: self.l] < 0
            if neg.any():
                best = float(np.min(-u[: self.l][neg] / du[: self.l][neg]))
        for _, _, idx in self.groups:
            ub, db = u[idx], du[idx]
            a2 = db[:, 0] ** 2 - np.einsum("ij,ij->i", db[:, 1:], db[:, 1:])
            a1 = 2.0 * (ub[:, 0] * db[:, 0] - np.einsum("ij,ij->i", ub[:, 1:], db[:, 1:]))
            a0 = ub[:, 0] ** 2 - np.einsum("ij,ij->i", ub[:, 1:], ub[:, 1:])
            # a0 > 0 strictly inside; first positive root of the quadratic
            # is where the ray leaves the cone
            lin = np.abs(a2) < 1e-300
            if lin.any():
                al1, al0 = a1[lin], a0[lin]
                drop = al1 < 0
                if drop.any():
                    best = min(best, float(np.min(-al0[drop] / al1[drop])))
            quad = ~lin
            if quad.any():
                q2, q1, q0 = a2[quad], a1[quad], a0[quad]
                disc = q1 * q1 - 4.0 * q2 * q0
                ok = disc >= 0
                if ok.any():
                    sq = np.sqrt(disc[ok])
                    den = 2.0 * q2[ok]
                    r1 = (-q1[ok] - sq) / den
                    r2 = (-q1[ok] + sq) / den
                    r1 = np.where(r1 > 0, r1, np.inf)
                    r2 = np.where(r2 > 0, r2, np.inf)
                    cand = np.minimum(r1, r2)
                    if cand.size:
                        best = min(best, float(cand.min()))
        return best

    def product(self, u, v):
        """Jordan product u o v blockwise."""
        out = np.empty(self.m)
        out[: self.l] = u[: self.l] * v[: self.l]
        for _, starts, idx in self.groups:
            ub, vb = u[idx], v[idx]
            out[starts] = np.einsum("ij,ij->i", ub, vb)
            out[idx[:, 1:]] = ub[:, :1] * vb[:, 1:] + vb[:, :1] * ub[:, 1:]
        return out

    def divide(self, lam, d):
        """Solve lam o x = d blockwise (arrow system per SOC block)."""
        out = np.empty(self.m)
        out[: self.l] = d[: self.l] / lam[: self.l]
        for _, starts, idx in self.groups:
            lb, db = lam[idx], d[idx]
            den = lb[:, 0] ** 2 - np.einsum("ij,ij->i", lb[:, 1:], lb[:, 1:])
            x0 = (lb[:, 0] * db[:, 0] - np.einsum("ij,ij->i", lb[:, 1:], db[:, 1:])) / den
            out[starts] = x0
            out[idx[:, 1:]] = (db[:, 1:] - x0[:, None] * lb[:, 1:]) / lb[:, 0][:, None]
        return out


class _Scaling:
    """Nesterov-Todd scaling W with W z = W^{-1} s = lambda.

    SOC data live in per-dimension batches parallel to geo.groups: eta is
    (n_blocks,), wbar and what are (n_blocks, dim).
    """

    def __init__(self, geo: _ConeGeometry, s, z):
        self.geo = geo
        l = geo.l
        self.d = s[:l] / z[:l]  # orthant entries of W'W
        self.sqrt_d = np.sqrt(self.d)
        self.lmbda = np.empty(geo.m)
        self.lmbda[:l] = np.sqrt(s[:l] * z[:l])
        self.soc = []  # per group: (eta, wbar, what)
        for _, _, idx in geo.groups:
            sb, zb = s[idx], z[idx]
            snorm = np.sqrt(sb[:, 0] ** 2 - np.einsum("ij,ij->i", sb[:, 1:], sb[:, 1:]))
            znorm = np.sqrt(zb[:, 0] ** 2 - np.einsum("ij,ij->i", zb[:, 1:], zb[:, 1:]))
            sbar, zbar = sb / snorm[:, None], zb / znorm[:, None]
            gamma = np.sqrt((1.0 + np.einsum("ij,ij->i", sbar, zbar)) / 2.0)
            wbar = np.empty_like(sb)
            wbar[:, 0] = (sbar[:, 0] + zbar[:, 0]) / (2.0 * gamma)
            wbar[:, 1:] = (sbar[:, 1:] - zbar[:, 1:]) / (2.0 * gamma[:, None])
            eta = snorm / znorm
            # Jordan square root of w = sqrt(eta) * wbar (wbar' J wbar = 1)
            sq_eta = np.sqrt(eta)
            root = np.sqrt((sq_eta * wbar[:, 0] + sq_eta) / 2.0)
            what = np.empty_like(wbar)
            what[:, 0] = root
            what[:, 1:] = sq_eta[:, None] * wbar[:, 1:] / (2.0 * root[:, None])
            self.soc.append((eta, wbar, what))
            self.lmbda[idx] = _quad_batch(what, sq_eta, zb)

    def apply_w(self, v):
        geo, l = self.geo, self.geo.l
        out = np.empty(geo.m)
        out[:l] = self.sqrt_d * v[:l]
        for (_, _, idx), (eta, _, what) in zip(geo.groups, self.soc):
            out[idx] = _quad_batch(what, np.sqrt(eta), v[idx])
        return out

    def apply_winv(self, v):
        geo, l = self.geo, self.geo.l
        out = np.empty(geo.m)
        out[:l] = v[:l] / self.sqrt_d
        for (_, _, idx), (eta, _, what) in zip(geo.groups, self.soc):
            det = np.sqrt(eta)
            inv = np.empty_like(what)
            inv[:, 0] = what[:, 0] / det
            inv[:, 1:] = -what[:, 1:] / det[:, None]
            out[idx] = _quad_batch(inv, 1.0 / det, v[idx])
        return out

    def apply_wtw(self, v):
        """W'W v, used for unregularized KKT residual refinement."""
        geo, l = self.geo, self.geo.l
        out = np.empty(geo.m)
        out[:l] = self.d * v[:l]
        for (_, _, idx), (eta, wbar, _) in zip(geo.groups, self.soc):
            vb = v[idx]
            blk = 2.0 * eta[:, None] * wbar * np.einsum("ij,ij->i", wbar, vb)[:, None]
            blk[:, 0] -= eta * vb[:, 0]
            blk[:, 1:] += eta[:, None] * vb[:, 1:]
            out[idx] = blk
        return out


def _quad_batch(u, det_u, v):
    """Rowwise P(u) v = 2 u (u'v) - (u'Ju) J v with u'Ju = det_u."""
    out = 2.0 * u * np.einsum("ij,ij->i", u, v)[:, None]
    out[:, 0] -= det_u * v[:, 0]
    out[:, 1:] += det_u[:, None] * v[:, 1:]
    return out


def _lu_usable(fac) -> bool:
    """A dense LU is usable when finite with no exactly-zero pivot."""
    mat = fac[0]
    if not np.all(np.isfinite(mat)):
        return False
    return float(np.min(np.abs(np.diagonal(mat)))) > 0.0


class _KKT:
    """Factorization of [[dI, A', G'], [A, -dI, 0], [G, 0, -(W'W+dI)]]."""

    def __init__(self, A, G, geo: _ConeGeometry):
        self.A, self.G, self.geo = A.tocsc(), G.tocsc(), geo
        self.n = A.shape[1]
        self.p = A.shape[0]
        self.m = G.shape[0]
        self.N = self.n + self.p + self.m
        self.dense = self.N <= _DENSE_LIMIT
        n, p = self.n, self.p
        acoo, gcoo = self.A.tocoo(), self.G.tocoo()
        rows = [acoo.row + n, acoo.col, gcoo.row + n + p, gcoo.col]
        cols = [acoo.col, acoo.row + n, gcoo.col, gcoo.row + n + p]
        data = [acoo.data, acoo.data, gcoo.data, gcoo.data]
        # static regularization
        rows.append(np.arange(n))
        cols.append(np.arange(n))
        data.append(np.full(n, _REG))
        if p:
            rows.append(np.arange(n, n + p))
            cols.append(np.arange(n, n + p))
            data.append(np.full(p, -_REG))
        rows.append(np.arange(n + p, self.N))
        cols.append(np.arange(n + p, self.N))
        data.append(np.full(self.m, -_REG))
        self._static_rows = np.concatenate(rows)
        self._static_cols = np.concatenate(cols)
        self._static_data = np.concatenate(data)
        # dynamic pattern for -W'W: orthant diagonal then dense SOC blocks,
        # grouped by block dimension to match _Scaling's batch layout
        drows, dcols = [np.arange(n + p, n + p + geo.l)], [np.arange(n + p, n + p + geo.l)]
        for dim, _, idx in geo.groups:
            base = n + p + idx  # (n_blocks, dim) global offsets
            drows.append(np.repeat(base, dim, axis=1).ravel())
            dcols.append(np.tile(base, (1, dim)).ravel())
        self._dyn_rows = np.concatenate(drows)
        self._dyn_cols = np.concatenate(dcols)
        self._rows = np.concatenate([self._static_rows, self._dyn_rows])
        self._cols = np.concatenate([self._static_cols, self._dyn_cols])
        self.scaling = None

    def _dyn_data(self, scaling: _Scaling):
        geo = self.geo
        parts = [-scaling.d]
        for (dim, _, _), (eta, wbar, _) in zip(geo.groups, scaling.soc):
            # -W'W = eta (J - 2 wbar wbar') with J = diag(1, -1, ..., -1)
            blk = -2.0 * eta[:, None, None] * np.einsum("bi,bj->bij", wbar, wbar)
            rng = np.arange(dim)
            blk[:, 0, 0] += eta
            blk[:, rng[1:], rng[1:]] -= eta[:, None]
            parts.append(blk.reshape(blk.shape[0], -1).ravel())
        return np.concatenate(parts)

    def factor(self, scaling: _Scaling):
        self.scaling = scaling
        data = np.concatenate([self._static_data, self._dyn_data(scaling)])
        K = sp.coo_matrix((data, (self._rows, self._cols)), shape=(self.N, self.N))
        if self.dense:
            # lu_factor only warns on an exactly-zero pivot, and the resulting
            # factor turns every solve into inf/NaN; when the NT scaling gets
            # degenerate enough to swamp the static regularization, retry with
            # a larger bump on the signed diagonal (+ on the primal block, - on
            # the duals, preserving quasi-definiteness) and let the refinement
            # loop in solve() win the accuracy back
            Kd = K.toarray()
            lu = None
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                cand = sla.lu_factor(Kd)
                if _lu_usable(cand):
                    lu = cand
                else:
                    sgn = np.ones(self.N)
                    sgn[self.n :] = -1.0
                    mag = max(1.0, float(np.abs(Kd).max()))
                    for bump in (1e-12, 1e-8, 1e-4):
                        cand = sla.lu_factor(Kd + np.diag(bump * mag * sgn))
                        if _lu_usable(cand):
                            lu = cand
                            break
            self._lu = cand if lu is None else lu
            self._solve_raw = lambda r: sla.lu_solve(self._lu, r)
            self._safe = True
        else:
            # the regularized KKT matrix is quasi-definite, so near-diagonal
            # pivoting under a symmetric fill-reducing ordering is viable and
            # keeps fill an order of magnitude below partial pivoting; the
            # refinement loop plus the residual check in solve() guard
            # against the accuracy this trades away
            self._K = K.tocsc()
            self._safe = False
            lu = None
            for thresh in (1e-16, 1e-2):
                try:
                    lu = spla.splu(
                        self._K,
                        permc_spec="MMD_AT_PLUS_A",
                        diag_pivot_thresh=thresh,
                        options={"SymmetricMode": True},
                    )
                    break
                except RuntimeError:
                    continue
            if lu is None:
                lu = spla.splu(self._K)
                self._safe = True
            self._solve_raw = lu.solve

    def _mul_unreg(self, v):
        n, p = self.n, self.p
        x, y, z = v[:n], v[n : n + p], v[n + p :]
        out = np.empty_like(v)
        out[:n] = self.A.T @ y + self.G.T @ z
        out[n : n + p] = self.A @ x
        out[n + p :] = self.G @ x - self.scaling.apply_wtw(z)
        return out

    def solve(self, rhs):
        scale = 1.0 + np.linalg.norm(rhs)
        sol = self._solve_raw(rhs)
        for _ in range(_REFINE_STEPS):
            resid = rhs - self._mul_unreg(sol)
            rnorm = np.linalg.norm(resid)
            if rnorm < _REFINE_STOP * scale:
                break
            sol = sol + self._solve_raw(resid)
        else:
            rnorm = np.linalg.norm(rhs - self._mul_unreg(sol))
        if not self._safe:
            bad = not np.all(np.isfinite(sol))
            if bad or rnorm > 1e-5 * scale:
                # tiny pivots spoiled the cheap factorization beyond what
                # refinement recovers; redo with default partial pivoting
                self._solve_raw = spla.splu(self._K).solve
                self._safe = True
                return self.solve(rhs)
        return sol


class _IdentityScaling:
    """W = I, used only to produce the starting point."""

    def __init__(self, geo):
        self.geo = geo
        self.d = np.ones(geo.l)
        self.soc = []
        for dim, starts, _ in geo.groups:
            nb = len(starts)
            e = np.zeros((nb, dim))
            e[:, 0] = 1.0
            self.soc.append((np.ones(nb), e, e.copy()))

    def apply_wtw(self, v):
        return v.copy()



def solve(prob: StandardConeProblem, tol: float = 1e-8, max_iter: int = 200) -> ConeSolution:
    """Solve a standard-form cone program.

    Returns an optimal primal-dual pair with KKT residuals below ``tol``,
    or an infeasibility/unboundedness certificate scaled so its defining
    inner product is -1, or the best iterate under ``iteration-limit``.
    """
    n = prob.n
    G, h, l = _augment_bounds(prob)
    A, b, c = prob.A.tocsc(), prob.b, prob.c
    geo = _ConeGeometry(l, prob.soc_dims)
    m, p = geo.m, b.shape[0]
    if m == 0:
        raise ValueError("solve: problem has no cone constraints")
    if G.shape[0] != m:
        raise ValueError("cone dimensions do not match G")

    kkt = _KKT(A, G, geo)
    resx0 = max(1.0, float(np.linalg.norm(c)))
    resy0 = max(1.0, float(np.linalg.norm(b)))
    resz0 = max(1.0, float(np.linalg.norm(h)))

    # --- starting point: least-squares primal/dual guesses shifted interior
    kkt.factor(_IdentityScaling(geo))
    rhs = np.concatenate([np.zeros(n), b, h])
    v1 = kkt.solve(rhs)
    x = v1[:n].copy()
    s = geo.shift_into(-v1[n + p :])
    rhs = np.concatenate([-c, np.zeros(p), np.zeros(m)])
    v2 = kkt.solve(rhs)
    y = v2[n : n + p].copy()
    z = geo.shift_into(v2[n + p :])
    tau, kappa = 1.0, 1.0

    best = None
    best_metric = np.inf
    status = STATUS_ITERATION_LIMIT
    iters_done = max_iter

    for it in range(max_iter):
        # residuals of the self-dual embedding
        r_dual = A.T @ y + G.T @ z + c * tau  # want 0
        r_eq = A @ x - b * tau
        r_cone = G @ x + s - h * tau
        r_tau = float(c @ x + b @ y + h @ z + kappa)

        # convergence metrics at the de-homogenized point
        xh, yh, zh, sh = x / tau, y / tau, z / tau, s / tau
        pres = 0.0
        if p:
            pres = float(np.linalg.norm(A @ xh - b)) / resy0
        pres = max(pres, float(np.linalg.norm(G @ xh + sh - h)) / resz0)
        dres = float(np.linalg.norm(A.T @ yh + G.T @ zh + c)) / resx0
        pcost = float(c @ xh)
        dcost = -float(b @ yh + h @ zh)
        gap_abs = float(sh @ zh)
        relgap = gap_abs / max(1.0, abs(pcost))

        metric = max(pres, dres, relgap)
        if metric < best_metric:
            best_metric = metric
            best = (xh.copy(), yh.copy(), zh.copy(), sh.copy(), pcost, pres, dres, relgap)

        if pres <= tol and dres <= tol and relgap <= tol:
            status = STATUS_OPTIMAL
            iters_done = it
            break

        # infeasibility certificates from the homogeneous ray
        by_hz = float(b @ y + h @ z)
        if by_hz < -1e-14:
            scale = -1.0 / by_hz
            cert = float(np.linalg.norm(A.T @ (y * scale) + G.T @ (z * scale)))
            if cert <= tol * resx0 and geo.margin(z * scale) > -tol:
                sol = ConeSolution(
                    x=np.full(n, np.nan),
                    y=y * scale,
                    z=z * scale,
                    s=s * scale,
                    status=STATUS_INFEASIBLE,
                    objective=math.inf,
                    primal_residual=cert,
                    dual_residual=0.0,
                    duality_gap=0.0,
                    iterations=it,
                )
                return sol
        cx = float(c @ x)
        if cx < -1e-14:
            scale = -1.0 / cx
            r1 = float(np.linalg.norm(A @ (x * scale))) if p else 0.0
            r2 = float(np.linalg.norm(G @ (x * scale) + s * scale))
            if max(r1, r2) <= tol * max(resy0, resz0) and geo.margin(s * scale) > -tol:
                sol = ConeSolution(
                    x=x * scale,
                    y=np.full(p, np.nan),
                    z=np.full(m, np.nan),
                    s=s * scale,
                    status=STATUS_UNBOUNDED,
                    objective=-math.inf,
                    primal_residual=max(r1, r2),
                    dual_residual=0.0,
                    duality_gap=0.0,
                    iterations=it,
                )
                return sol

        mu = (float(s @ z) + tau * kappa) / (geo.degree + 1)

        scaling = _Scaling(geo, s, z)
        lam = scaling.lmbda
        kkt.factor(scaling)
        sol1 = kkt.solve(np.concatenate([-c, b, h]))
        dx1, dy1, dz1 = sol1[:n], sol1[n : n + p], sol1[n + p :]

        def direction(ds_rhs, dkappa_rhs):
            # substitute ds = W(q - W dz) into the cone row, q = lam \ ds_rhs
            q = geo.divide(lam, ds_rhs)
            wq = scaling.apply_w(q)
            rhs2 = np.concatenate([-r_dual, -r_eq, -(r_cone + wq)])
            sol2 = kkt.solve(rhs2)
            dx2, dy2, dz2 = sol2[:n], sol2[n : n + p], sol2[n + p :]
            denom = float(c @ dx1 + b @ dy1 + h @ dz1) - kappa / tau
            numer = -r_tau - dkappa_rhs / tau - float(c @ dx2 + b @ dy2 + h @ dz2)
            dtau = numer / denom if abs(denom) > 1e-300 else 0.0
            dx = dx2 + dtau * dx1
            dy = dy2 + dtau * dy1
            dz = dz2 + dtau * dz1
            ds = scaling.apply_w(q - scaling.apply_w(dz))
            dkappa = (dkappa_rhs - kappa * dtau) / tau
            return dx, dy, dz, ds, dtau, dkappa

        # predictor: aim straight at the optimality conditions
        ds_aff = -geo.product(lam, lam)
        dxa, dya, dza, dsa, dta, dka = direction(ds_aff, -tau * kappa)

        step = min(
            geo.step_to_boundary(s, dsa),
            geo.step_to_boundary(z, dza),
            (tau / -dta) if dta < 0 else np.inf,
            (kappa / -dka) if dka < 0 else np.inf,
        )
        alpha_aff = min(1.0, step)
        mu_aff = (
            float((s + alpha_aff * dsa) @ (z + alpha_aff * dza))
            + (tau + alpha_aff * dta) * (kappa + alpha_aff * dka)
        ) / (geo.degree + 1)
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3

        # corrector: recentre and cancel the second-order term
        correction = geo.product(scaling.apply_winv(dsa), scaling.apply_w(dza))
        ds_comb = -geo.product(lam, lam) - correction + sigma * mu * geo.identity()
        dk_comb = -tau * kappa - dta * dka + sigma * mu
        dx, dy, dz, ds, dtau, dkappa = direction(ds_comb, dk_comb)

        step = min(
            geo.step_to_boundary(s, ds),
            geo.step_to_boundary(z, dz),
            (tau / -dtau) if dtau < 0 else np.inf,
            (kappa / -dkappa) if dkappa < 0 else np.inf,
        )
        alpha = min(1.0, 0.99 * step)
        # NaN compares false, so a poisoned direction would sail past the
        # short-step break; bail out and keep the tracked best iterate
        if not math.isfinite(alpha) or alpha <= _MIN_STEP:
            iters_done = it
            break

        x += alpha * dx
        y += alpha * dy
        z += alpha * dz
        s += alpha * ds
        tau += alpha * dtau
        kappa += alpha * dkappa

        finite = math.isfinite(tau) and math.isfinite(kappa)
        if not (finite and np.all(np.isfinite(x)) and np.all(np.isfinite(s)) and np.all(np.isfinite(z))):
            iters_done = it
            break

    xh, yh, zh, sh, pcost, pres, dres, relgap = best
    return ConeSolution(
        x=xh,
        y=yh,
        z=zh,
        s=sh,
        status=status,
        objective=pcost,
        primal_residual=pres,
        dual_residual=dres,
        duality_gap=relgap,
        iterations=iters_done,
    )


def residuals(prob: StandardConeProblem, sol: ConeSolution):
    """Recompute (primal, dual, gap) norms from scratch for a solution.

    Uses the same normalization as ``solve``: primal and dual norms are
    relative to max(1, ||b||), max(1, ||h||), max(1, ||c||); the gap is
    s'z relative to max(1, |c'x|).
    """
    G, h, _ = _augment_bounds(prob)
    A, b, c = prob.A.tocsc(), prob.b, prob.c
    x, y, z, s = sol.x, sol.y, sol.z, sol.s
    resx0 = max(1.0, float(np.linalg.norm(c)))
    resy0 = max(1.0, float(np.linalg.norm(b)))
    resz0 = max(1.0, float(np.linalg.norm(h)))
    pres = 0.0
    if b.shape[0]:
        pres = float(np.linalg.norm(A @ x - b)) / resy0
    if h.shape[0]:
        pres = max(pres, float(np.linalg.norm(G @ x + s - h)) / resz0)
    dres = 0.0
    if c.shape[0]:
        dres = float(np.linalg.norm(A.T @ y + G.T @ z + c)) / resx0
    gap = 0.0
    if h.shape[0]:
        gap = float(s @ z) / max(1.0, abs(float(c @ x)))
    return pres, dres, gap


# ---------------------------------------------------------------------------
# versioned text interchange


_FORMAT_TAG = "coneproblem"
_FORMAT_VERSION = 1


def _fmt(v: float) -> str:
    if v == math.inf:
        return "inf"
    if v == -math.inf:
        return "-inf"
    return "%.17g" % v


def dump_problem(prob: StandardConeProblem, stream=None) -> str:
    """Serialize a problem to the versioned text format (round-trips exactly)."""
    out = io.StringIO()
    p, m = prob.b.shape[0], prob.h.shape[0]
    out.write(f"{_FORMAT_TAG} {_FORMAT_VERSION}\n")
    out.write(f"dims n={prob.n} p={p} m={m} l={prob.n_orthant}\n")
    out.write("socs " + " ".join(str(d) for d in prob.soc_dims) + "\n")
    out.write("c " + " ".join(_fmt(v) for v in prob.c) + "\n")
    out.write("b " + " ".join(_fmt(v) for v in prob.b) + "\n")
    out.write("h " + " ".join(_fmt(v) for v in prob.h) + "\n")
    for name, mat in (("A", prob.A), ("G", prob.G)):
        coo = mat.tocoo()
        out.write(f"{name} nnz={coo.nnz}\n")
        order = np.lexsort((coo.col, coo.row))
        for k in order:
            out.write(f"{coo.row[k]} {coo.col[k]} {_fmt(coo.data[k])}\n")
    for name, vec in (("lb", prob.lb), ("ub", prob.ub)):
        if vec is None:
            out.write(f"{name} none\n")
        else:
            out.write(f"{name} " + " ".join(_fmt(v) for v in vec) + "\n")
    text = out.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def load_problem(text: str) -> StandardConeProblem:
    """Parse the text format written by ``dump_problem``."""
    lines = text.strip().splitlines()
    header = lines[0].split()
    if header[0] != _FORMAT_TAG:
        raise ValueError("not a cone problem dump")
    if int(header[1]) != _FORMAT_VERSION:
        raise ValueError(f"unsupported cone problem format version {header[1]}")
    dims = dict(kv.split("=") for kv in lines[1].split()[1:])
    n, p, m, l = (int(dims[k]) for k in ("n", "p", "m", "l"))
    socs = tuple(int(v) for v in lines[2].split()[1:])

    def vec(line, expected):
        parts = line.split()
        vals = [float(v) for v in parts[1:]]
        if len(vals) != expected:
            raise ValueError(f"{parts[0]}: expected {expected} values, got {len(vals)}")
        return np.asarray(vals)

    c = vec(lines[3], n)
    b = vec(lines[4], p)
    h = vec(lines[5], m)
    idx = 6
    mats = {}
    for name, shape in (("A", (p, n)), ("G", (m, n))):
        head = lines[idx].split()
        if head[0] != name:
            raise ValueError(f"expected matrix {name}")
        nnz = int(head[1].split("=")[1])
        rows, cols, data = [], [], []
        for k in range(nnz):
            r, cc, v = lines[idx + 1 + k].split()
            rows.append(int(r))
            cols.append(int(cc))
            data.append(float(v))
        mats[name] = sp.csc_matrix((data, (rows, cols)), shape=shape)
        idx += 1 + nnz
    bounds = {}
    for name in ("lb", "ub"):
        parts = lines[idx].split()
        if parts[0] != name:
            raise ValueError(f"expected bounds line {name}")
        bounds[name] = None if parts[1:] == ["none"] else np.asarray(
            [float(v) for v in parts[1:]]
        )
        idx += 1
    return StandardConeProblem(
        c=c,
        A=mats["A"],
        b=b,
        G=mats["G"],
        h=h,
        n_orthant=l,
        soc_dims=socs,
        lb=bounds["lb"],
        ub=bounds["ub"],
    )
