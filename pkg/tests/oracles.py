"""Slow reference implementations used only by the tests."""
import itertools

import numpy as np

from starisac.solvers import QcqpProblem, QuadraticForm


def realify(p: QcqpProblem):
    """Real data (P, q, [(A_i, b_i, c_i)]) with f_i = z'A_i z - 2 b_i'z - c_i."""
    def mat(Q):
        return np.real(Q) if p.real else np.block([[Q.real, -Q.imag], [Q.imag, Q.real]])

    def vec(b):
        return np.real(b) if p.real else np.r_[b.real, b.imag]

    n = p.dim if p.real else 2 * p.dim
    rows = [(mat(qf.Q), vec(qf.b), u) for qf, u in p.quad_constraints]
    for a, c, sense in p.linear_constraints:
        s = 1.0 if sense == "<=" else -1.0
        rows.append((np.zeros((n, n)), -0.5 * s * vec(a), s * c))
    rows += [(np.eye(n), np.zeros(n), r) for r in p.ball_constraints]
    return mat(p.objective.Q), vec(p.objective.b), rows


def dual_gradient_oracle(p: QcqpProblem, iters: int = 5000, tol: float = 1e-12):
    """Projected-gradient ascent on the Lagrange dual of a convex QCQP with a
    positive definite objective.  Returns (primal objective, x, lambda).

    The dual function g(lam) = min_z L(z, lam) has gradient f_i(z*(lam)); the
    step is adapted by backtracking on g, which is concave.  Dual ascent is
    slow once the active set settles, but the primal objective is accurate to
    about 1e-8 relative after a few thousand steps on the small test problems.
    """
    P, q, rows = realify(p)
    A = np.array([r[0] for r in rows])
    B = np.array([r[1] for r in rows])
    c = np.array([r[2] for r in rows], dtype=float)

    def inner(lam):
        H = P + np.einsum("i,ijk->jk", lam, A)
        rhs = q + lam @ B
        z = np.linalg.solve(H, rhs)
        fz = np.einsum("j,ijk,k->i", z, A, z) - 2 * B @ z - c
        g = z @ P @ z - 2 * q @ z + lam @ fz
        return z, fz, g

    lam = np.zeros(len(rows))
    z, fz, g = inner(lam)
    step = 1.0
    for _ in range(iters):
        new = np.maximum(lam + step * fz, 0.0)
        z2, f2, g2 = inner(new)
        if g2 < g - 1e-15 * abs(g):
            step *= 0.5
            if step < 1e-300:
                break
            continue
        lam, z, fz, g = new, z2, f2, g2
        step *= 1.5
        # z*(lam) primal feasible with a vanishing duality gap certifies optimality
        primal = z @ P @ z - 2 * q @ z
        if np.all(fz <= tol * np.abs(c)) and primal - g <= tol * max(1.0, abs(g)):
            break
    n = p.dim
    x = z if p.real else z[:n] + 1j * z[n:]
    return p.objective(x), x, lam


def unimodular_grid(Omega, mu, points=48):
    """Exhaustive search over a uniform phase grid; returns (min value, argmin)."""
    n = mu.shape[0]
    grid = np.exp(2j * np.pi * np.arange(points) / points)
    best, arg = np.inf, None
    # first phase may be fixed only when mu = 0; search the full grid otherwise
    for tail in itertools.product(range(points), repeat=n - 1):
        X = np.empty((points, n), complex)
        X[:, 0] = grid
        X[:, 1:] = grid[list(tail)]
        vals = np.einsum("pi,ij,pj->p", X.conj(), Omega, X).real - 2 * (X.conj() @ mu).real
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, arg = float(vals[i]), X[i].copy()
    return best, arg


def grid_resolution_bound(Omega, mu, points=48):
    """Upper bound on min over grid minus true minimum.

    Rounding each phase of the minimizer to the grid moves phi by at most
    2 sin(pi/(2 points)) per entry; the objective is Lipschitz on the torus
    with constant 2(||Omega|| sqrt(n) + ||mu||).
    """
    n = mu.shape[0]
    delta = np.sqrt(n) * 2 * np.sin(np.pi / (2 * points))
    lip = 2 * (np.linalg.norm(Omega, 2) * np.sqrt(n) + np.linalg.norm(mu))
    return lip * delta


def random_psd(rng, n, rank=None, scale=1.0):
    k = rank or n
    A = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    return scale * (A @ A.conj().T) / k


def random_qcqp(rng, n=6, n_quad=2, n_lin=1):
    """Convex complex QCQP with the origin strictly feasible."""
    def cvec():
        return rng.standard_normal(n) + 1j * rng.standard_normal(n)

    P = random_psd(rng, n) + 0.05 * np.eye(n)
    obj = QuadraticForm(P, 3.0 * cvec())
    quad = [(QuadraticForm(random_psd(rng, n, rank=max(1, n // 2)), 0.3 * cvec()), rng.uniform(0.5, 2.0))
            for _ in range(n_quad)]
    lin = [(cvec(), rng.uniform(0.2, 1.0), "<=") for _ in range(n_lin)]
    return QcqpProblem(obj, quad, lin, [rng.uniform(2.0, 6.0)])
