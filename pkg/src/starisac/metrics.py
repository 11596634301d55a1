"""Physical-layer quantities: SINR, sum rate, radar SNR, surface power."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSet, equivalent_channels, side_coefficients
from .scenario import Mode, ScenarioConfig


@dataclass
class BeamformingState:
    """DFBS beams ``W`` (M x (K+M): reflect users | transmit users | radar),
    radar receive filter ``u`` and the FP auxiliaries ``gamma``, ``rho``."""

    W: np.ndarray
    u: np.ndarray
    gamma: np.ndarray
    rho: np.ndarray

    def copy(self) -> "BeamformingState":
        return BeamformingState(self.W.copy(), self.u.copy(), self.gamma.copy(), self.rho.copy())


@dataclass
class StarState:
    """Surface amplitudes ``a_r``, ``a_t`` (>= 0) and unit-modulus phases."""

    a_r: np.ndarray
    a_t: np.ndarray
    phi_r: np.ndarray
    phi_t: np.ndarray

    @property
    def psi_r(self) -> np.ndarray:
        return self.a_r * self.phi_r

    @property
    def psi_t(self) -> np.ndarray:
        return self.a_t * self.phi_t

    @classmethod
    def from_psi(cls, psi_r: np.ndarray, psi_t: np.ndarray) -> "StarState":
        """Polar split psi = a * exp(j arg psi); zero entries get phase 1."""
        return cls(np.abs(psi_r), np.abs(psi_t), _unit_phase(psi_r), _unit_phase(psi_t))

    def copy(self) -> "StarState":
        return StarState(self.a_r.copy(), self.a_t.copy(), self.phi_r.copy(), self.phi_t.copy())


def _unit_phase(z: np.ndarray) -> np.ndarray:
    return np.exp(1j * np.angle(z))


@dataclass(frozen=True)
class Noise:
    sigma_k_sq: float
    sigma_v_sq: float

    @classmethod
    def of(cls, sc: ScenarioConfig) -> "Noise":
        return cls(sc.sigma_k_sq, sc.sigma_v_sq)


def link_terms(W: np.ndarray, star: StarState, channels: ChannelSet,
               noise: Noise) -> tuple[np.ndarray, np.ndarray]:
    """Per-user ``(signal, total)`` where signal = h_eq^H w_k (complex) and
    total = sum_j |h_eq^H w_j|^2 + sigma_v^2 ||f^H Psi||^2 + sigma_k^2."""
    K = channels.K
    H = equivalent_channels(channels, star.psi_r, star.psi_t)  # (K, M)
    G_all = H.conj() @ W  # (K, K+M), entry (k, j) = h_eq_k^H w_j
    psi = side_coefficients(channels, star.psi_r, star.psi_t)
    ris_noise = noise.sigma_v_sq * np.sum(np.abs(channels.f * psi) ** 2, axis=1)
    total = np.sum(np.abs(G_all) ** 2, axis=1) + ris_noise + noise.sigma_k_sq
    return G_all[np.arange(K), np.arange(K)], total


def all_sinr(W: np.ndarray, star: StarState, channels: ChannelSet, noise: Noise) -> np.ndarray:
    sig, total = link_terms(W, star, channels, noise)
    p = np.abs(sig) ** 2
    return p / (total - p)


def user_sinr(k: int, W: np.ndarray, star: StarState, channels: ChannelSet,
              sigma_k_sq: float, sigma_v_sq: float) -> float:
    if not 0 <= k < channels.K:
        raise IndexError(f"user index {k} out of range for K={channels.K}")
    return float(all_sinr(W, star, channels, Noise(sigma_k_sq, sigma_v_sq))[k])


def sum_rate(W: np.ndarray, star: StarState, channels: ChannelSet, noise: Noise) -> float:
    """Sum of log2(1 + SINR_k) in bit/s/Hz."""
    return float(np.sum(np.log2(1.0 + all_sinr(W, star, channels, noise))))


def radar_snr_worst(u: np.ndarray, W: np.ndarray, h_dt: np.ndarray, xi_sq: float,
                    sigma_z_sq: float) -> float:
    """xi^2 u^H H_t W W^H H_t^H u / (sigma_z^2 u^H u) with H_t = h_dt h_dt^H."""
    uu = float(np.vdot(u, u).real)
    if uu == 0.0:
        raise ValueError("radar_snr_worst: zero filter vector")
    # u^H H_t W = (u^H h_dt)(h_dt^H W)
    g = np.vdot(u, h_dt) * (h_dt.conj() @ W)
    return float(xi_sq * np.sum(np.abs(g) ** 2) / (sigma_z_sq * uu))


def ris_power(W: np.ndarray, star: StarState, G: np.ndarray, sigma_v_sq: float) -> float:
    """Total output power of the active surface (reflect + transmit)."""
    incident = np.sum(np.abs(G @ W) ** 2, axis=1) + sigma_v_sq  # diag of Pi
    return float(np.sum((np.abs(star.psi_r) ** 2 + np.abs(star.psi_t) ** 2) * incident))


@dataclass
class FeasibilityReport:
    slack: dict[str, float] = field(default_factory=dict)  # >= 0 means satisfied
    relative: dict[str, float] = field(default_factory=dict)
    tol: float = 1e-6

    @property
    def feasible(self) -> bool:
        return all(v >= -self.tol for v in self.relative.values())

    def violated(self) -> list[str]:
        return [k for k, v in self.relative.items() if v < -self.tol]


def check_feasibility(bf: BeamformingState, star: StarState, sc: ScenarioConfig,
                      channels: ChannelSet, tol: float = 1e-6) -> FeasibilityReport:
    """Slacks of C1..C5; relative slacks are scaled by each budget."""
    rep = FeasibilityReport(tol=tol)
    try:
        snr = radar_snr_worst(bf.u, bf.W, channels.h_dt, sc.xi_sq, sc.sigma_z_sq)
    except ValueError:
        snr = 0.0
    rep.slack["C1"] = snr - sc.Gamma_t
    rep.relative["C1"] = rep.slack["C1"] / max(sc.Gamma_t, 1.0)
    pw = float(np.sum(np.abs(bf.W) ** 2))
    rep.slack["C2"] = sc.P_max_B - pw
    rep.relative["C2"] = rep.slack["C2"] / sc.P_max_B
    if sc.mode is Mode.PASSIVE:
        per_el = np.abs(star.psi_r) ** 2 + np.abs(star.psi_t) ** 2
        rep.slack["C3"] = float(np.min(1.0 - per_el))
        rep.relative["C3"] = rep.slack["C3"]
    else:
        rep.slack["C3"] = sc.P_max_R - ris_power(bf.W, star, channels.G, sc.sigma_v_sq)
        rep.relative["C3"] = rep.slack["C3"] / sc.P_max_R
    rep.slack["C4"] = float(min(np.min(star.a_r), np.min(star.a_t)))
    rep.relative["C4"] = rep.slack["C4"] / max(1.0, float(np.max(np.abs(np.r_[star.a_r, star.a_t]))))
    rep.slack["C5"] = 0.0 - float(max(np.max(np.abs(np.abs(star.phi_r) - 1.0)),
                                 np.max(np.abs(np.abs(star.phi_t) - 1.0))))
    rep.relative["C5"] = rep.slack["C5"]
    # mode-specific amplitude structure
    if sc.mode is Mode.EED:
        rep.slack["mode"] = 0.0 - float(np.max(np.abs(star.a_r - star.a_t)))
    elif sc.mode is Mode.SD:
        m_r, m_t = sc.masks()
        rep.slack["mode"] = 0.0 - float(max(np.max(star.a_t * m_r), np.max(star.a_r * m_t)))
    if "mode" in rep.slack:
        rep.relative["mode"] = rep.slack["mode"] / max(1.0, float(np.max(np.r_[star.a_r, star.a_t])))
    return rep
