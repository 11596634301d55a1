"""Fast built-in oracle checks behind ``starisac selftest``.

Each check compares a library routine with an independent computation on a
small random instance and returns ``(passed, detail)``.
"""
from __future__ import annotations

import itertools
from typing import Callable

import numpy as np

from .ao import AoOptions, run_ao
from .channels import generate_channel_set
from .fp import fp_objective, update_gamma, update_rho
from .metrics import BeamformingState, Noise, StarState, all_sinr, sum_rate
from .scenario import desk_scenario
from .solvers import (QcqpProblem, QuadraticForm, minimize_unit_modulus_ccm,
                      minimize_unit_modulus_mm, solve_qcqp, unimodular_objective)
from .subproblems import (assemble_star_problem, assemble_transmit_problem, solve_radar_filter,
                          stack, star_objective)


def _cn(rng: np.random.Generator, *shape: int) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _instance(rng: np.random.Generator):
    sc = desk_scenario(M=3, N=6, K_r=1, K_t=2)
    ch = generate_channel_set(sc, rng)
    W = 0.1 * _cn(rng, sc.M, sc.K + sc.M)
    star = StarState.from_psi(_cn(rng, sc.N), _cn(rng, sc.N))
    return sc, ch, W, star, Noise(1e-11, 1e-10)


def check_fp_identity(rng: np.random.Generator) -> tuple[bool, str]:
    sc, ch, W, star, noise = _instance(rng)
    g = update_gamma(W, star, ch, noise)
    r = update_rho(g, W, star, ch, noise)
    lhs = fp_objective(g, r, W, star, ch, noise)
    rhs = np.log(2.0) * sum_rate(W, star, ch, noise)
    err = abs(lhs - rhs) / max(1.0, abs(rhs))
    return err < 1e-10, f"relative error {err:.2e}"


def check_aux_optimality(rng: np.random.Generator) -> tuple[bool, str]:
    sc, ch, W, star, noise = _instance(rng)
    g = update_gamma(W, star, ch, noise)
    r = update_rho(g, W, star, ch, noise)
    base = fp_objective(g, r, W, star, ch, noise)
    worst = -np.inf
    for k in range(ch.K):
        for d in (-1e-2, 1e-2):
            g2 = g.copy()
            g2[k] = max(0.0, g2[k] + d)
            worst = max(worst, fp_objective(g2, r, W, star, ch, noise) - base)
            for step in (d, 1j * d):
                r2 = r.copy()
                r2[k] += step * max(1.0, abs(r[k]))
                worst = max(worst, fp_objective(g, r2, W, star, ch, noise) - base)
    return worst <= 1e-9 * max(1.0, abs(base)), f"largest increase {worst:.2e}"


def check_radar_filter(rng: np.random.Generator) -> tuple[bool, str]:
    sc, ch, W, star, noise = _instance(rng)
    u, deg = solve_radar_filter(W, ch.h_dt, sc.sigma_z_sq)
    cos = abs(np.vdot(u, ch.h_dt)) / (np.linalg.norm(u) * np.linalg.norm(ch.h_dt))
    return (not deg) and cos >= 1 - 1e-10, f"|cos| = {cos:.15f}"


def _ball_oracle(Q: np.ndarray, b: np.ndarray, r: float) -> float:
    """min x^H Q x - 2Re{b^H x} on ||x||^2 <= r via bisection on the multiplier."""
    ev, V = np.linalg.eigh(Q)
    c = V.conj().T @ b

    def x_of(lam):
        return V @ (c / (ev + lam))

    if ev[0] > 0 and np.linalg.norm(x_of(0.0)) ** 2 <= r:
        lam = 0.0
    else:
        lo, hi = max(0.0, -ev[0]) + 1e-300, max(1.0, np.linalg.norm(b) / np.sqrt(r) + abs(ev[0]))
        while np.linalg.norm(x_of(hi)) ** 2 > r:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if np.linalg.norm(x_of(mid)) ** 2 > r else (lo, mid)
        lam = hi
    return QuadraticForm(Q, b)(x_of(lam))


def check_qcqp_ball(rng: np.random.Generator) -> tuple[bool, str]:
    n = 5
    A = _cn(rng, n, n)
    Q = A @ A.conj().T
    b = 3.0 * _cn(rng, n)
    x, rep = solve_qcqp(QcqpProblem(QuadraticForm(Q, b), ball_constraints=[1.0]), np.zeros(n, complex))
    ref = _ball_oracle(Q, b, 1.0)
    err = abs(rep.objective - ref) / max(1.0, abs(ref))
    return rep.converged and err < 1e-6, f"relative error {err:.2e}"


def check_unimodular_grid(rng: np.random.Generator) -> tuple[bool, str]:
    n, pts = 2, 48
    A = _cn(rng, n, n)
    Om = A @ A.conj().T
    mu = _cn(rng, n)
    grid = np.exp(2j * np.pi * np.arange(pts) / pts)
    best = min(unimodular_objective(Om, mu, np.array(p)) for p in itertools.product(grid, repeat=n))
    phi0 = np.exp(1j * np.angle(mu))
    mm = minimize_unit_modulus_mm(Om, mu, phi0).objective
    ccm = minimize_unit_modulus_ccm(Om, mu, phi0).objective
    ok = mm <= best + 1e-3 and ccm <= best + 1e-3 and abs(mm - ccm) <= 1e-3
    return ok, f"MM {mm:.6f}  CCM {ccm:.6f}  grid {best:.6f}"


def check_star_assembly(rng: np.random.Generator) -> tuple[bool, str]:
    sc, ch, W, s1, noise = _instance(rng)
    g = rng.uniform(0.0, 3.0, ch.K)
    r = 1e3 * _cn(rng, ch.K)
    bf = BeamformingState(W, ch.h_dt, g, r)
    data = assemble_star_problem(bf, ch, noise)
    s2 = StarState.from_psi(_cn(rng, ch.N), _cn(rng, ch.N))
    # surrogate + assembled objective must not depend on the surface
    v1 = fp_objective(g, r, W, s1, ch, noise) + star_objective(data, s1)
    v2 = fp_objective(g, r, W, s2, ch, noise) + star_objective(data, s2)
    err = abs(v1 - v2) / max(1.0, abs(v1))
    return err < 1e-10, f"residual {err:.2e}"


def check_transmit_assembly(rng: np.random.Generator) -> tuple[bool, str]:
    sc, ch, W1, star, _ = _instance(rng)
    noise = Noise.of(sc)
    g = rng.uniform(0.0, 3.0, ch.K)
    r = 1e3 * _cn(rng, ch.K)
    bf = BeamformingState(W1, ch.h_dt / np.linalg.norm(ch.h_dt), g, r)
    data = assemble_transmit_problem(bf, star, ch, sc)
    W2 = 0.1 * _cn(rng, *W1.shape)
    v1 = fp_objective(g, r, W1, star, ch, noise) + data.objective(stack(W1))
    v2 = fp_objective(g, r, W2, star, ch, noise) + data.objective(stack(W2))
    err = abs(v1 - v2) / max(1.0, abs(v1))
    return err < 1e-10, f"residual {err:.2e}"


def check_ao_monotone(rng: np.random.Generator) -> tuple[bool, str]:
    sc = desk_scenario(N=8)
    ch = generate_channel_set(sc, rng)
    tr = run_ao(sc, ch, options=AoOptions(Q_max=10), rng=rng)
    seq = tr.block_sequence()
    drop = float(np.max(seq[:-1] - seq[1:], initial=0.0))
    sinr_ok = bool(np.all(all_sinr(tr.bf.W, tr.star, ch, Noise.of(sc)) >= 0))
    return drop <= 1e-9 * max(1.0, abs(seq[-1])) and sinr_ok, f"largest block decrease {drop:.2e}"


CHECKS: dict[str, Callable[[np.random.Generator], tuple[bool, str]]] = {
    "fp-identity": check_fp_identity,
    "aux-optimality": check_aux_optimality,
    "radar-filter": check_radar_filter,
    "qcqp-ball": check_qcqp_ball,
    "unimodular-grid": check_unimodular_grid,
    "star-assembly": check_star_assembly,
    "transmit-assembly": check_transmit_assembly,
    "ao-monotone": check_ao_monotone,
}


def run_selftest(seed: int = 0, echo: Callable[[str], None] = print) -> bool:
    ok_all = True
    for i, (name, fn) in enumerate(CHECKS.items()):
        try:
            ok, detail = fn(np.random.default_rng([seed, i]))
        except Exception as exc:  # a crash is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        echo(f"{'PASS' if ok else 'FAIL'}  {name:<18} {detail}")
    return ok_all
