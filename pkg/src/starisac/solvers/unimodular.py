"""Minimize  phi^H Omega phi - 2 Re{phi^H mu}  over unit-modulus phi.

Two solvers: majorization-minimization (closed-form phase alignment against a
lambda_max majorizer, optionally SQUAREM-accelerated) and Riemannian descent on the complex circle manifold
with Armijo backtracking.  Both are monotone.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eigen import lambda_max


@dataclass
class UnimodularResult:
    phi: np.ndarray
    objective: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)


def unimodular_objective(Omega: np.ndarray, mu: np.ndarray, phi: np.ndarray) -> float:
    return float(np.real(np.vdot(phi, Omega @ phi)) - 2.0 * np.real(np.vdot(phi, mu)))


def _check(Omega: np.ndarray, phi0: np.ndarray) -> float:
    """Validate inputs; returns a scale for relative tolerances."""
    if not np.allclose(Omega, Omega.conj().T, atol=1e-10 * max(1.0, np.abs(Omega).max(initial=0.0))):
        raise ValueError("Omega must be Hermitian")
    ev = np.linalg.eigvalsh(Omega)
    if ev[0] < -1e-10 * max(1.0, abs(ev[-1])):
        raise ValueError(f"Omega must be PSD (min eigenvalue {ev[0]:.3e})")
    if not np.allclose(np.abs(phi0), 1.0, atol=1e-10):
        raise ValueError("phi0 must be unit modulus")
    return float(ev[-1])


def mm_surrogate(Omega: np.ndarray, mu: np.ndarray, lam: float, phi: np.ndarray,
                 phi_t: np.ndarray) -> float:
    """Majorizer of the objective built at ``phi_t`` (exact at phi = phi_t)."""
    N = phi.shape[0]
    L = lam * np.eye(N) - Omega
    return float(lam * np.real(np.vdot(phi, phi))
                 - 2.0 * np.real(np.vdot(phi, L @ phi_t))
                 + np.real(np.vdot(phi_t, L @ phi_t))
                 - 2.0 * np.real(np.vdot(phi, mu)))


def minimize_unit_modulus_mm(Omega: np.ndarray, mu: np.ndarray, phi0: np.ndarray,
                             tol: float = 1e-11, iter_cap: int = 10000,
                             bound: str = "eig", accelerate: bool = True) -> UnimodularResult:
    """MM iteration phi+ = exp(j arg((lam I - Omega) phi + mu)).

    ``bound="eig"`` uses lam = lambda_max(Omega); ``"trace"`` uses tr(Omega).
    With ``accelerate`` each iteration takes two MM steps and tries a SQUAREM
    extrapolation through them, kept only when it does no worse, so the
    objective stays nonincreasing.  Stops when the decrease relative to
    |objective| drops below ``tol``.
    """
    lmax = _check(Omega, phi0)
    if bound == "eig":
        lam = lambda_max(Omega)
    elif bound == "trace":
        lam = float(np.real(np.trace(Omega)))
    else:
        raise ValueError(f"unknown majorizer bound {bound!r}")
    N = phi0.shape[0]
    floor = 1e-6 * max(lmax * N, 2.0 * float(np.sum(np.abs(mu))), np.finfo(float).tiny)

    def mm_step(x):
        v = lam * x - Omega @ x + mu
        return np.where(np.abs(v) <= 1e-300, x, np.exp(1j * np.angle(v)))

    def f(x):
        return unimodular_objective(Omega, mu, x)

    phi = phi0.astype(complex)
    obj = f(phi)
    hist = [obj]
    converged = False
    it = 0
    for it in range(1, iter_cap + 1):
        new = mm_step(phi)
        if accelerate:
            p2 = mm_step(new)
            r, v = new - phi, p2 - 2.0 * new + phi
            nv = np.linalg.norm(v)
            new = p2
            if nv > 0:
                alpha = -np.linalg.norm(r) / nv
                cand = mm_step(retract(phi - 2.0 * alpha * r + alpha ** 2 * v))
                if f(cand) <= f(p2):
                    new = cand
        new_obj = f(new)
        if new_obj > obj:  # round-off only; majorization forbids an increase
            converged = True
            break
        dec = obj - new_obj
        phi, obj = new, new_obj
        hist.append(obj)
        if dec <= tol * max(abs(obj), floor):
            converged = True
            break
    return UnimodularResult(phi, obj, it, converged, hist)


def riemannian_gradient(Omega: np.ndarray, mu: np.ndarray, phi: np.ndarray) -> np.ndarray:
    g = 2.0 * (Omega @ phi - mu)
    return g - np.real(g * np.conj(phi)) * phi


def retract(x: np.ndarray) -> np.ndarray:
    mag = np.abs(x)
    return np.where(mag > 0, x / np.where(mag > 0, mag, 1.0), 1.0)


def minimize_unit_modulus_ccm(Omega: np.ndarray, mu: np.ndarray, phi0: np.ndarray,
                              tol: float = 1e-8, iter_cap: int = 5000,
                              armijo: float = 1e-4, shrink: float = 0.5) -> UnimodularResult:
    """Riemannian gradient descent on the product of unit circles.

    Step rule: Armijo backtracking along the retraction phi -> (phi - s t)/|.|,
    starting from a Barzilai-Borwein guess.  Stops once the Riemannian
    gradient norm, relative to the problem scale, is below ``tol``.
    """
    lmax = _check(Omega, phi0)
    N = phi0.shape[0]
    scale = max(2.0 * lmax * np.sqrt(N), 2.0 * float(np.linalg.norm(mu)), np.finfo(float).tiny)
    phi = phi0.astype(complex)
    obj = unimodular_objective(Omega, mu, phi)
    t = riemannian_gradient(Omega, mu, phi)
    hist = [obj]
    lip = 2.0 * (lmax + float(np.max(np.abs(mu), initial=0.0))) + np.finfo(float).tiny
    step = 1.0 / lip
    converged = False
    it = 0
    for it in range(1, iter_cap + 1):
        gn2 = float(np.real(np.vdot(t, t)))
        if np.sqrt(gn2) <= tol * scale:
            converged = True
            break
        s = step
        while True:
            cand = retract(phi - s * t)
            cand_obj = unimodular_objective(Omega, mu, cand)
            if cand_obj <= obj - armijo * s * gn2:
                break
            s *= shrink
            if s * np.sqrt(gn2) < 1e-16 * np.sqrt(N):
                cand = None
                break
        if cand is None:
            # no representable descent step left
            converged = True
            break
        t_new = riemannian_gradient(Omega, mu, cand)
        # BB step from the transported difference
        d_phi = cand - phi
        d_t = t_new - (t - np.real(t * np.conj(cand)) * cand)
        denom = float(np.real(np.vdot(d_phi, d_t)))
        step = float(np.real(np.vdot(d_phi, d_phi))) / denom if denom > 0 else 2.0 * s
        step = min(max(step, 1e-3 / lip), 1e3 / lip)
        phi, obj, t = cand, cand_obj, t_new
        hist.append(obj)
    return UnimodularResult(phi, obj, it, converged, hist)
