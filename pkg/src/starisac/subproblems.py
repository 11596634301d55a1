"""Assembly and solution of the alternating-optimization blocks.

Each block works on the quadratic-transform surrogate with the auxiliaries
(gamma, rho) held fixed.  The DFBS block is a convex QCQP in the stacked beam
vector; the surface blocks are QCQPs in the surface coefficients (UED,
passive) or an amplitude QCQP followed by two unit-modulus phase problems
(EED, SD).

Surface vectors are handled per side.  For a user k on a side with
coefficients psi, ``h_eq_k^H w_j = c_kj + e_kj^T psi`` with
``c_kj = h_d,k^H w_j`` and ``e_kj = conj(f_k) * (G w_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import REFLECT, ChannelSet, equivalent_channels
from .metrics import BeamformingState, Noise, StarState
from .scenario import Mode, ScenarioConfig
from .solvers import (QcqpError, QcqpProblem, QuadraticForm,
                      find_strictly_feasible, max_generalized_rayleigh,
                      minimize_unit_modulus_ccm, minimize_unit_modulus_mm, solve_qcqp)


def stack(W: np.ndarray) -> np.ndarray:
    """Columns of W concatenated in order."""
    return W.reshape(-1, order="F")


def unstack(w: np.ndarray, M: int) -> np.ndarray:
    return w.reshape(M, -1, order="F")


@dataclass
class BlockStatus:
    """Outcome flags of one block update."""

    accepted: bool = True
    degenerate: bool = False
    message: str = ""


# -- radar receive filter -----------------------------------------------------

def solve_radar_filter(W: np.ndarray, h_dt: np.ndarray,
                       sigma_z_sq: float) -> tuple[np.ndarray, bool]:
    """Maximize the radar SNR over u.  Returns ``(u, degenerate)``.

    C = H_t W W^H H_t^H is rank one, so the maximizer is h_dt up to scale.
    When h_dt^H W = 0 every u gives zero SNR; h_dt/||h_dt|| is returned and
    the degenerate flag is set.
    """
    H_t = np.outer(h_dt, h_dt.conj())
    C = H_t @ W @ W.conj().T @ H_t.conj().T
    C = 0.5 * (C + C.conj().T)
    fallback = h_dt / np.linalg.norm(h_dt)
    if not np.any(np.abs(h_dt.conj() @ W) > 0) or np.linalg.norm(C) == 0.0:
        return fallback.astype(complex), True
    E = sigma_z_sq * np.eye(h_dt.shape[0])
    return max_generalized_rayleigh(C, E), False


# -- DFBS transmit beamforming ---------------------------------------------------

@dataclass
class TransmitProblemData:
    """Quadratic data of the transmit block over w = stack(W)."""

    w_tilde: np.ndarray
    alpha_r: np.ndarray
    alpha_t: np.ndarray
    Q_r: np.ndarray
    Q_t: np.ndarray
    Y: np.ndarray
    eta: float
    Xi_r: np.ndarray
    Xi_t: np.ndarray
    c3_rhs: float  # surface budget left for the amplified signal
    P_max_B: float
    w_s: np.ndarray
    M: int
    enforce_c3: bool = True
    enforce_c1: bool = True

    @property
    def objective(self) -> QuadraticForm:
        """x^H (Q_r + Q_t) x - 2 Re{(alpha_r + alpha_t)^H x}, i.e. minus the
        w-dependent part of the surrogate."""
        return QuadraticForm(self.Q_r + self.Q_t, self.alpha_r + self.alpha_t)

    def linearized_c1(self, w: np.ndarray) -> float:
        """Re{w_s^H Y (2w - w_s)} - eta  (>= 0 when satisfied)."""
        return float(np.real(np.vdot(self.w_s, self.Y @ (2.0 * w - self.w_s)))) - self.eta


def assemble_transmit_problem(state: BeamformingState, star: StarState, channels: ChannelSet,
                              scenario: ScenarioConfig, w_s: np.ndarray | None = None
                              ) -> TransmitProblemData:
    M, K = channels.M, channels.K
    L = K + M
    if state.W.shape != (M, L):
        raise ValueError(f"assemble_transmit_problem: W has shape {state.W.shape}, expected {(M, L)}")
    if state.gamma.shape != (K,) or state.rho.shape != (K,) or state.u.shape != (M,):
        raise ValueError("assemble_transmit_problem: auxiliary/filter dimension mismatch")
    w_s = stack(state.W) if w_s is None else w_s
    if w_s.shape != (M * L,):
        raise ValueError("assemble_transmit_problem: w_s has the wrong length")
    H = equivalent_channels(channels, star.psi_r, star.psi_t)  # rows h_eq_k
    root = np.sqrt(1.0 + state.gamma)
    eye_L = np.eye(L)
    K_r = channels.K_r
    out = {}
    for side, users in (("r", range(K_r)), ("t", range(K_r, K))):
        blk = np.zeros((M, M), dtype=complex)
        alpha = np.zeros(M * L, dtype=complex)
        for k in users:
            blk += np.abs(state.rho[k]) ** 2 * np.outer(H[k], H[k].conj())
            alpha[k * M:(k + 1) * M] = root[k] * state.rho[k] * H[k]
        out["Q_" + side] = np.kron(eye_L, blk)
        out["alpha_" + side] = alpha
    h_dt, u = channels.h_dt, state.u
    H_t = np.outer(h_dt, h_dt.conj())
    a = H_t.conj().T @ u  # H_t^H u
    Y = np.kron(eye_L, np.outer(a, a.conj()))
    eta = scenario.Gamma_t * scenario.sigma_z_sq * float(np.real(np.vdot(u, u))) / scenario.xi_sq
    G = channels.G
    Xi = {}
    for side, psi in (("r", star.psi_r), ("t", star.psi_t)):
        Xi[side] = np.kron(eye_L, G.conj().T @ (np.abs(psi)[:, None] ** 2 * G))
    c3_rhs = scenario.P_max_R - scenario.sigma_v_sq * float(
        np.sum(np.abs(star.psi_r) ** 2) + np.sum(np.abs(star.psi_t) ** 2))
    return TransmitProblemData(
        w_tilde=stack(state.W), alpha_r=out["alpha_r"], alpha_t=out["alpha_t"],
        Q_r=out["Q_r"], Q_t=out["Q_t"], Y=Y, eta=eta, Xi_r=Xi["r"], Xi_t=Xi["t"],
        c3_rhs=c3_rhs, P_max_B=scenario.P_max_B, w_s=w_s, M=M,
        enforce_c3=scenario.mode is not Mode.PASSIVE, enforce_c1=scenario.Gamma_t > 0,
    )


def transmit_qcqp(data: TransmitProblemData) -> QcqpProblem:
    quad = []
    if data.enforce_c3:
        quad.append((QuadraticForm(data.Xi_r + data.Xi_t, np.zeros_like(data.w_s)), data.c3_rhs))
    lin = []
    if data.enforce_c1:
        # Re{(Y w_s)^H w} >= (eta + w_s^H Y w_s) / 2
        rhs = 0.5 * (data.eta + float(np.real(np.vdot(data.w_s, data.Y @ data.w_s))))
        lin.append((data.Y @ data.w_s, rhs, ">="))
    return QcqpProblem(data.objective, quad, lin, [data.P_max_B])


def _strict_start(p: QcqpProblem, x: np.ndarray) -> np.ndarray | None:
    for cand in (x, 0.99 * x):
        if np.all(p.slacks(cand) > 0):
            return cand
    try:
        return find_strictly_feasible(p, x)
    except QcqpError:
        return None


def solve_transmit_beamforming(data: TransmitProblemData) -> tuple[np.ndarray, BlockStatus]:
    """Solve the SCA-linearized transmit QCQP.  On failure the previous W is
    returned with ``accepted=False``."""
    p = transmit_qcqp(data)
    x0 = _strict_start(p, data.w_tilde)
    if x0 is None:
        return unstack(data.w_tilde, data.M), BlockStatus(False, True, "no strictly feasible start")
    try:
        x, rep = solve_qcqp(p, x0)
    except QcqpError as exc:
        return unstack(data.w_tilde, data.M), BlockStatus(False, False, str(exc))
    return unstack(x, data.M), BlockStatus(True, False, "" if rep.converged else "iteration cap")


# -- surface blocks --------------------------------------------------------------

@dataclass
class StarProblemData:
    """Per-side quadratics psi^H D psi - 2 Re{psi^H d} (minus the surrogate up
    to a constant), the incident-power diagonal ``Pi`` and, once amplitudes and
    phases are known, the EED/SD amplitude and phase forms."""

    d_r: np.ndarray
    D_r: np.ndarray
    d_t: np.ndarray
    D_t: np.ndarray
    Pi: np.ndarray  # diagonal of Pi, length N
    mu_r: np.ndarray | None = None
    Omega_r: np.ndarray | None = None
    mu_t: np.ndarray | None = None
    Omega_t: np.ndarray | None = None
    mu_hat_r: np.ndarray | None = None
    Omega_hat_r: np.ndarray | None = None
    mu_hat_t: np.ndarray | None = None
    Omega_hat_t: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


def _side_forms(users: range, state: BeamformingState, channels: ChannelSet,
                noise: Noise) -> tuple[np.ndarray, np.ndarray]:
    N = channels.N
    GW = channels.G @ state.W  # (N, L): column j is G w_j
    d = np.zeros(N, dtype=complex)
    D = np.zeros((N, N), dtype=complex)
    root = np.sqrt(1.0 + state.gamma)
    for k in users:
        E = np.conj(channels.f[k])[:, None] * GW  # column j is e_kj
        c = channels.h_d[k].conj() @ state.W  # c_kj
        r2 = np.abs(state.rho[k]) ** 2
        d += root[k] * state.rho[k] * np.conj(E[:, k]) - r2 * (np.conj(E) @ c)
        D += r2 * (np.conj(E) @ E.T)
        D[np.diag_indices(N)] += r2 * noise.sigma_v_sq * np.abs(channels.f[k]) ** 2
    return d, 0.5 * (D + D.conj().T)


def assemble_star_problem(state: BeamformingState, channels: ChannelSet,
                          noise: Noise) -> StarProblemData:
    K_r = channels.K_r
    d_r, D_r = _side_forms(range(K_r), state, channels, noise)
    d_t, D_t = _side_forms(range(K_r, channels.K), state, channels, noise)
    Pi = np.sum(np.abs(channels.G @ state.W) ** 2, axis=1) + noise.sigma_v_sq
    return StarProblemData(d_r, D_r, d_t, D_t, Pi)


def amplitude_forms(data: StarProblemData, phi_r: np.ndarray, phi_t: np.ndarray,
                    m_r: np.ndarray, m_t: np.ndarray) -> None:
    """Fill (mu, Omega) for psi_side = m_side * a * phi_side with real a."""
    for side, phi, m, d, D in (("r", phi_r, m_r, data.d_r, data.D_r),
                               ("t", phi_t, m_t, data.d_t, data.D_t)):
        b = m * phi
        Om = np.real(np.conj(b)[:, None] * D * b[None, :])
        setattr(data, "Omega_" + side, 0.5 * (Om + Om.T))
        setattr(data, "mu_" + side, np.real(np.conj(b) * d))


def phase_forms(data: StarProblemData, a_r: np.ndarray, a_t: np.ndarray) -> None:
    """Fill (mu_hat, Omega_hat) for psi_side = a_side * phi_side."""
    for side, a, d, D in (("r", a_r, data.d_r, data.D_r), ("t", a_t, data.d_t, data.D_t)):
        Om = a[:, None] * D * a[None, :]
        setattr(data, "Omega_hat_" + side, 0.5 * (Om + Om.conj().T))
        setattr(data, "mu_hat_" + side, a * d)


def star_objective(data: StarProblemData, star: StarState) -> float:
    """Minimized surface objective; lower is better."""
    return (QuadraticForm(data.D_r, data.d_r)(star.psi_r)
            + QuadraticForm(data.D_t, data.d_t)(star.psi_t))


def _star_qcqp_ued(data: StarProblemData, scenario: ScenarioConfig) -> QcqpProblem:
    N = data.Pi.shape[0]
    Q = np.zeros((2 * N, 2 * N), dtype=complex)
    Q[:N, :N], Q[N:, N:] = data.D_r, data.D_t
    obj = QuadraticForm(Q, np.concatenate([data.d_r, data.d_t]))
    quad = []
    zero = np.zeros(2 * N, dtype=complex)
    if scenario.mode is Mode.PASSIVE:
        for n in range(N):
            sel = np.zeros(2 * N)
            sel[n] = sel[N + n] = 1.0
            quad.append((QuadraticForm(np.diag(sel).astype(complex), zero), 1.0))
    else:
        quad.append((QuadraticForm(np.diag(np.r_[data.Pi, data.Pi]).astype(complex), zero),
                     scenario.P_max_R))
    return QcqpProblem(obj, quad)


def solve_star_ued(state: BeamformingState, star: StarState, channels: ChannelSet,
                   scenario: ScenarioConfig) -> tuple[StarState, BlockStatus]:
    """Joint QCQP in (psi_r, psi_t) followed by the polar split.  Also used
    for the passive surrogate, where the budget is per element."""
    data = assemble_star_problem(state, channels, Noise.of(scenario))
    p = _star_qcqp_ued(data, scenario)
    x_prev = np.concatenate([star.psi_r, star.psi_t])
    x0 = _strict_start(p, x_prev)
    if x0 is None:
        return star, BlockStatus(False, True, "no strictly feasible start")
    try:
        x, rep = solve_qcqp(p, x0)
    except QcqpError as exc:
        return star, BlockStatus(False, False, str(exc))
    N = channels.N
    new = StarState.from_psi(x[:N], x[N:])
    return new, BlockStatus(True, False, "" if rep.converged else "iteration cap")


def _phase_solver(name: str):
    return minimize_unit_modulus_ccm if name == "CCM" else minimize_unit_modulus_mm


def _solve_amplitude(data: StarProblemData, a0: np.ndarray, active: np.ndarray,
                     weight: np.ndarray, budget: float) -> tuple[np.ndarray, BlockStatus]:
    """min a^T Omega a - 2 mu^T a  s.t.  a^T diag(weight) a <= budget, a >= 0,
    over the entries flagged ``active`` (others stay zero)."""
    idx = np.flatnonzero(active)
    Om = (data.Omega_r + data.Omega_t)[np.ix_(idx, idx)]
    mu = (data.mu_r + data.mu_t)[idx]
    n = idx.size
    lin = [(np.eye(n)[i], 0.0, ">=") for i in range(n)]
    p = QcqpProblem(QuadraticForm(Om, mu), [(QuadraticForm(np.diag(weight[idx]), np.zeros(n)), budget)],
                    lin, real=True)
    start = _strict_start(p, a0[idx])
    if start is None:
        return a0, BlockStatus(False, True, "no strictly feasible amplitude start")
    try:
        x, rep = solve_qcqp(p, start)
    except QcqpError as exc:
        return a0, BlockStatus(False, False, str(exc))
    a = np.zeros_like(a0)
    a[idx] = np.maximum(x, 0.0)
    return a, BlockStatus(True, False, "" if rep.converged else "iteration cap")


def _solve_masked(state: BeamformingState, star: StarState, channels: ChannelSet,
                  scenario: ScenarioConfig, m_r: np.ndarray, m_t: np.ndarray,
                  freeze: bool) -> tuple[StarState, BlockStatus]:
    """Shared-amplitude update: psi_side = m_side * a * phi_side."""
    data = assemble_star_problem(state, channels, Noise.of(scenario))
    active = (m_r + m_t) > 0
    # the common amplitude is carried by whichever side is active
    a0 = np.where(m_r > 0, star.a_r, star.a_t)
    status = BlockStatus()
    if freeze:
        a = active.astype(float)
        used = float(np.sum((m_r + m_t) * data.Pi * a ** 2))
        if used > scenario.P_max_R:
            a *= np.sqrt(scenario.P_max_R / used)
    else:
        amplitude_forms(data, star.phi_r, star.phi_t, m_r, m_t)
        a, status = _solve_amplitude(data, a0, active, (m_r + m_t) * data.Pi, scenario.P_max_R)
    a_r, a_t = m_r * a, m_t * a
    phase_forms(data, a_r, a_t)
    solver = _phase_solver(scenario.phase_solver)
    phi_r = solver(data.Omega_hat_r, data.mu_hat_r, star.phi_r).phi if np.any(m_r) else star.phi_r
    phi_t = solver(data.Omega_hat_t, data.mu_hat_t, star.phi_t).phi if np.any(m_t) else star.phi_t
    return StarState(a_r, a_t, phi_r, phi_t), status


def solve_star_eed(state: BeamformingState, star: StarState, channels: ChannelSet,
                   scenario: ScenarioConfig) -> tuple[StarState, BlockStatus]:
    """Amplitude QCQP (shared a, budget 2 a^T Pi a), then phi_r, then phi_t."""
    ones = np.ones(channels.N)
    return _solve_masked(state, star, channels, scenario, ones, ones.copy(), False)


def solve_star_sd(state: BeamformingState, star: StarState, channels: ChannelSet,
                  scenario: ScenarioConfig, mask: str | None = None
                  ) -> tuple[StarState, BlockStatus]:
    """Each element serves one side; ``mask`` defaults to the scenario's."""
    mask = scenario.sd_mask if mask is None else mask
    if len(mask) != channels.N:
        raise ValueError(f"solve_star_sd: mask length {len(mask)} != N={channels.N}")
    m_r = np.array([c == REFLECT for c in mask], dtype=float)
    m_t = 1.0 - m_r
    new, status = _solve_masked(state, star, channels, scenario, m_r, m_t,
                                scenario.sd_freeze_amplitude)
    if (channels.K_r and not m_r.any()) or (channels.K - channels.K_r and not m_t.any()):
        status.degenerate = True
        status.message = "users on a side with no assigned elements"
    return new, status


def solve_star(state: BeamformingState, star: StarState, channels: ChannelSet,
               scenario: ScenarioConfig) -> tuple[StarState, BlockStatus]:
    """Dispatch on the scenario's operating mode."""
    mode = scenario.mode
    if mode in (Mode.UED, Mode.PASSIVE):
        return solve_star_ued(state, star, channels, scenario)
    if mode is Mode.EED:
        return solve_star_eed(state, star, channels, scenario)
    return solve_star_sd(state, star, channels, scenario)
