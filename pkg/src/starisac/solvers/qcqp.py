"""Primal-dual interior-point method for small dense convex QCQPs.

Problems are stated over a complex (or real) vector x with every function of
the form  x^H Q x - 2 Re{b^H x}  (plus affine terms).  Internally the problem
is mapped to real coordinates z = [Re x; Im x], rescaled so that all data is
O(1), and solved with the standard primal-dual path-following iteration
(reduced Newton system, backtracking on the residual norm).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla


class QcqpError(ValueError):
    pass


class InfeasibleStartError(QcqpError):
    pass


class NonConvexError(QcqpError):
    pass


@dataclass(frozen=True)
class QuadraticForm:
    """x -> x^H Q x - 2 Re{b^H x} with Q Hermitian PSD."""

    Q: np.ndarray
    b: np.ndarray

    def __call__(self, x: np.ndarray) -> float:
        return float(np.real(np.vdot(x, self.Q @ x)) - 2.0 * np.real(np.vdot(self.b, x)))


@dataclass
class QcqpProblem:
    """min objective(x)  s.t.  q_i(x) <= u_i,  Re{a^H x} (>=|<=) c,  ||x||^2 <= r.

    With ``real=True`` the variable is restricted to real vectors.
    """

    objective: QuadraticForm
    quad_constraints: list[tuple[QuadraticForm, float]] = field(default_factory=list)
    linear_constraints: list[tuple[np.ndarray, float, str]] = field(default_factory=list)
    ball_constraints: list[float] = field(default_factory=list)
    real: bool = False

    @property
    def dim(self) -> int:
        return self.objective.b.shape[0]

    def slacks(self, x: np.ndarray) -> np.ndarray:
        """Constraint slacks (>= 0 when satisfied), in problem order:
        quadratic, linear, ball."""
        out = [u - q(x) for q, u in self.quad_constraints]
        for a, c, sense in self.linear_constraints:
            v = float(np.real(np.vdot(a, x)))
            out.append(v - c if sense == ">=" else c - v)
        out += [r - float(np.real(np.vdot(x, x))) for r in self.ball_constraints]
        return np.asarray(out, dtype=float)


@dataclass
class KktReport:
    converged: bool
    iterations: int
    objective: float
    stationarity: float  # ||grad L|| in normalized units
    complementarity: float  # max |lambda_i f_i|
    primal_infeasibility: float  # max(0, f_i)
    gap: float  # surrogate duality gap
    multipliers: np.ndarray  # for the normalized constraints, problem order


# -- real-coordinate form --------------------------------------------------

def _realify_mat(Q: np.ndarray, real: bool) -> np.ndarray:
    if real:
        return np.real(Q)
    Qr, Qi = np.real(Q), np.imag(Q)
    return np.block([[Qr, -Qi], [Qi, Qr]])


def _realify_vec(b: np.ndarray, real: bool) -> np.ndarray:
    return np.real(b).astype(float) if real else np.concatenate([np.real(b), np.imag(b)])


def _complexify(z: np.ndarray, n: int, real: bool) -> np.ndarray:
    return z.astype(float) if real else z[:n] + 1j * z[n:]


@dataclass
class _Std:
    """f0 = z'Pz - 2q'z;  f_i = z'A_i z - 2 b_i'z - c_i.

    A_i is split into a diagonal part ``Ad[i]`` and, for the constraints listed
    in ``dense_idx``, a dense part ``Ax[j]``; linear constraints have A_i = 0.
    """

    P: np.ndarray
    q: np.ndarray
    Ad: np.ndarray  # (m, n)
    Ax: np.ndarray  # (m_dense, n, n)
    dense_idx: np.ndarray  # (m_dense,)
    B: np.ndarray  # (m, n)
    c: np.ndarray  # (m,)

    def fi(self, z):
        out = self.Ad @ (z * z) - 2.0 * self.B @ z - self.c
        if self.dense_idx.size:
            out[self.dense_idx] += np.einsum("j,ijk,k->i", z, self.Ax, z)
        return out

    def grads(self, z):
        g = 2.0 * self.Ad * z - 2.0 * self.B
        if self.dense_idx.size:
            g[self.dense_idx] += 2.0 * (self.Ax @ z)
        return g

    def hess_constraints(self, lam):
        H = np.diag(2.0 * (lam @ self.Ad))
        if self.dense_idx.size:
            H += 2.0 * np.einsum("i,ijk->jk", lam[self.dense_idx], self.Ax)
        return H


def _is_diagonal(A: np.ndarray) -> bool:
    return not np.any(A - np.diag(np.diag(A)))


def _standardize(p: QcqpProblem, scale: float) -> tuple[_Std, float, np.ndarray]:
    real = p.real
    n = p.dim if real else 2 * p.dim
    rows = []  # (A or None, b, c)
    for qf, u in p.quad_constraints:
        rows.append((_realify_mat(qf.Q, real), _realify_vec(qf.b, real), float(u)))
    for a, c, sense in p.linear_constraints:
        if sense not in (">=", "<="):
            raise QcqpError(f"unknown constraint sense {sense!r}")
        g = _realify_vec(a, real)
        # Re{a^H x} = g'z ;  g'z <= c  <=>  -2(-g/2)'z - c <= 0
        sign = 1.0 if sense == "<=" else -1.0
        rows.append((None, -0.5 * sign * g, sign * float(c)))
    for r in p.ball_constraints:
        rows.append((np.eye(n), np.zeros(n), float(r)))
    m = len(rows)
    Ad = np.zeros((m, n))
    dense, dense_idx = [], []
    B = np.zeros((m, n))
    c = np.zeros(m)
    for i, (A, b, ci) in enumerate(rows):
        B[i], c[i] = b * scale, ci
        if A is None:
            continue
        A = A * scale ** 2
        if _is_diagonal(A):
            Ad[i] = np.diag(A)
        else:
            dense.append(A)
            dense_idx.append(i)
    Ax = np.array(dense).reshape(len(dense), n, n)
    dense_idx = np.array(dense_idx, dtype=int)
    # row normalization: each constraint divided by its own magnitude
    mag = np.maximum(np.abs(Ad).max(axis=1, initial=0.0), np.abs(B).max(axis=1, initial=0.0))
    mag = np.maximum(mag, np.abs(c))
    if dense_idx.size:
        mag[dense_idx] = np.maximum(mag[dense_idx], np.abs(Ax).reshape(len(dense), -1).max(axis=1))
    mag = np.where(mag > 0, mag, 1.0)
    P = _realify_mat(p.objective.Q, real) * scale ** 2
    q = _realify_vec(p.objective.b, real) * scale
    s0 = max(np.abs(P).max(initial=0.0), np.abs(q).max(initial=0.0))
    s0 = s0 if s0 > 0 else 1.0
    std = _Std(P / s0, q / s0, Ad / mag[:, None], Ax / mag[dense_idx][:, None, None],
               dense_idx, B / mag[:, None], c / mag)
    return std, s0, mag


def _check_convex(p: QcqpProblem) -> None:
    mats = [p.objective.Q] + [qf.Q for qf, _ in p.quad_constraints]
    for i, Q in enumerate(mats):
        if not np.allclose(Q, Q.conj().T, atol=1e-10 * max(1.0, np.abs(Q).max(initial=0.0))):
            raise NonConvexError(f"matrix {i} is not Hermitian")
        Qm = np.real(Q) if p.real else Q
        ev = np.linalg.eigvalsh((Qm + Qm.conj().T) / 2)
        if ev.size and ev[0] < -1e-10 * max(1.0, abs(ev[-1])):
            raise NonConvexError(f"matrix {i} is not PSD (min eigenvalue {ev[0]:.3e})")


def _choose_scale(p: QcqpProblem, x0: np.ndarray) -> float:
    bounds = [np.sqrt(r) for r in p.ball_constraints if r > 0]
    for qf, u in p.quad_constraints:
        nq = np.linalg.norm(qf.Q, 2) if qf.Q.size else 0.0
        if u > 0 and nq > 0:
            bounds.append(np.sqrt(u / nq))
    s = max(bounds, default=0.0)
    # loose budgets: size the problem by the unconstrained minimizer instead
    Q, b = p.objective.Q, p.objective.b
    if np.any(Q) and np.any(b):
        x_unc = np.linalg.lstsq(np.real(Q) if p.real else Q, np.real(b) if p.real else b, rcond=None)[0]
        n_unc = float(np.linalg.norm(x_unc))
        if 0 < n_unc < s:
            s = n_unc
    s = max(s, float(np.linalg.norm(x0)))
    return s if s > 0 and np.isfinite(s) else 1.0


def _newton_solve(H: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        cf = sla.cho_factor(H, check_finite=False)
        return sla.cho_solve(cf, rhs, check_finite=False)
    except (np.linalg.LinAlgError, sla.LinAlgError):
        reg = 1e-12 * max(1.0, np.trace(H) / H.shape[0])
        return np.linalg.lstsq(H + reg * np.eye(H.shape[0]), rhs, rcond=None)[0]


def _pd_ipm(s: _Std, z: np.ndarray, tol: float, max_iter: int, mu: float = 10.0,
            alpha: float = 0.01, beta: float = 0.5):
    m = s.c.shape[0]
    f = s.fi(z)
    lam = 1.0 / np.maximum(-f, 1e-12) if m else np.zeros(0)
    converged = False
    it = 0

    def residual(z, lam, t):
        f = s.fi(z)
        g0 = 2.0 * (s.P @ z) - 2.0 * s.q
        Df = s.grads(z)
        r_dual = g0 + Df.T @ lam
        r_cent = -lam * f - 1.0 / t
        return r_dual, r_cent, f, Df

    for it in range(1, max_iter + 1):
        f = s.fi(z)
        if m and np.any(f >= 0):  # boundary reached in round-off
            break
        eta = float(-f @ lam) if m else 0.0
        # keep some centering while the dual residual lags the gap
        rd_norm = float(np.linalg.norm(2.0 * (s.P @ z) - 2.0 * s.q + s.grads(z).T @ lam)) if m else 0.0
        gap = max(eta, rd_norm)
        t = mu * m / gap if gap > 0 else 1e16
        r_dual, r_cent, f, Df = residual(z, lam, t)
        if np.linalg.norm(r_dual) <= tol and eta <= tol:
            converged = True
            break
        H = 2.0 * s.P + s.hess_constraints(lam)
        w = lam / (-f)
        H += (Df.T * w) @ Df
        # reduced system: H dz = -(grad f0 + (1/t) sum grad f_i / (-f_i))
        g0 = 2.0 * (s.P @ z) - 2.0 * s.q
        rhs = -(g0 + Df.T @ (1.0 / (t * -f))) if m else -g0
        dz = _newton_solve(H, rhs)
        dlam = (r_cent - lam * (Df @ dz)) / f if m else np.zeros(0)

        neg = dlam < 0
        step = min(1.0, float(np.min(-lam[neg] / dlam[neg]))) if np.any(neg) else 1.0
        step *= 0.99
        while step > 1e-14 and np.any(s.fi(z + step * dz) >= 0):
            step *= beta
        r0 = np.sqrt(np.sum(r_dual ** 2) + np.sum(r_cent ** 2))
        while step > 1e-14:
            rd, rc, _, _ = residual(z + step * dz, lam + step * dlam, t)
            if np.sqrt(np.sum(rd ** 2) + np.sum(rc ** 2)) <= (1.0 - alpha * step) * r0:
                break
            step *= beta
        if step <= 1e-14:
            break
        z = z + step * dz
        lam = lam + step * dlam
    f = s.fi(z)
    g0 = 2.0 * (s.P @ z) - 2.0 * s.q
    r_dual = g0 + s.grads(z).T @ lam
    return z, lam, converged, it, r_dual, f


def _strictly_feasible(p: QcqpProblem, x: np.ndarray) -> bool:
    sl = p.slacks(x)
    return bool(np.all(sl > 0))


def find_strictly_feasible(p: QcqpProblem, x0: np.ndarray | None = None,
                           tol: float = 1e-8) -> np.ndarray:
    """Phase I: minimize the largest normalized constraint value."""
    x0 = np.zeros(p.dim, dtype=float if p.real else complex) if x0 is None else x0
    if _strictly_feasible(p, x0):
        return x0
    scale = _choose_scale(p, x0)
    s, _, _ = _standardize(p, scale)
    n = s.P.shape[0]
    m = s.c.shape[0]
    z0 = _realify_vec(x0, p.real) / scale
    t0 = float(np.max(s.fi(z0))) + 1.0
    # variables (z, t): min t  s.t.  f_i(z) - t <= 0,  -t - 1 <= 0,  t <= t0 + 1
    Ad = np.zeros((m + 2, n + 1))
    Ad[:m, :n] = s.Ad
    Ax = np.zeros((s.dense_idx.size, n + 1, n + 1))
    Ax[:, :n, :n] = s.Ax
    B = np.zeros((m + 2, n + 1))
    B[:m, :n] = s.B
    B[:m, n] = 0.5
    B[m, n] = 0.5
    B[m + 1, n] = -0.5
    c = np.r_[s.c, 1.0, t0 + 1.0]
    q = np.zeros(n + 1)
    q[n] = -0.5
    ph1 = _Std(np.zeros((n + 1, n + 1)), q, Ad, Ax, s.dense_idx, B, c)
    zt, *_ = _pd_ipm(ph1, np.r_[z0, t0], tol, 200)
    x = _complexify(zt[:n] * scale, p.dim, p.real)
    if not _strictly_feasible(p, x):
        raise InfeasibleStartError("problem has no strictly feasible point")
    return x


def solve_qcqp(p: QcqpProblem, x0: np.ndarray, tol: float = 1e-9,
               max_iter: int = 200) -> tuple[np.ndarray, KktReport]:
    """Solve a convex QCQP from a strictly feasible start ``x0``.

    Tolerances apply to the internally normalized problem (objective and every
    constraint scaled to unit magnitude).  If the iteration cap is reached the
    last (feasible) iterate is returned with ``converged=False``.
    """
    _check_convex(p)
    if not (p.ball_constraints or p.quad_constraints):
        raise QcqpError("problem needs a bounding quadratic or ball constraint")
    x0 = np.asarray(x0, dtype=float if p.real else complex)
    if not _strictly_feasible(p, x0):
        raise InfeasibleStartError("x0 is not strictly feasible")
    scale = _choose_scale(p, x0)
    s, s0, _ = _standardize(p, scale)
    z, lam, converged, it, r_dual, f = _pd_ipm(s, _realify_vec(x0, p.real) / scale, tol, max_iter)
    x = _complexify(z * scale, p.dim, p.real)
    # round-off guards: never return something worse than the start or infeasible
    if p.objective(x) > p.objective(x0) or not np.all(p.slacks(x) >= 0):
        x, converged = x0, False
    rep = KktReport(
        converged=converged,
        iterations=it,
        objective=p.objective(x),
        stationarity=float(np.linalg.norm(r_dual)),
        complementarity=float(np.max(np.abs(lam * f), initial=0.0)),
        primal_infeasibility=float(max(0.0, np.max(f, initial=-np.inf))),
        gap=float(-f @ lam) if lam.size else 0.0,
        multipliers=lam,
    )
    return x, rep
