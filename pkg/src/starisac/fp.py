"""Quadratic-transform surrogate of the sum rate and its auxiliary updates.

Everything here is in natural-log units: at the optimal auxiliaries the
surrogate equals ``sum_k ln(1 + SINR_k)``, i.e. ``ln 2`` times the sum rate
in bits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .metrics import Noise, StarState, link_terms


@dataclass(frozen=True)
class FpObjectiveParts:
    linear: np.ndarray  # 2 sqrt(1+gamma_k) Re{rho_k^* h_eq^H w_k}
    quadratic: np.ndarray  # |rho_k|^2 (sum_j |h_eq^H w_j|^2 + noise_k)
    gamma_terms: np.ndarray  # ln(1+gamma_k) - gamma_k

    @property
    def total(self) -> float:
        return float(np.sum(self.gamma_terms) + np.sum(self.linear) - np.sum(self.quadratic))


def fp_parts(gamma: np.ndarray, rho: np.ndarray, W: np.ndarray, star: StarState,
             channels: ChannelSet, noise: Noise) -> FpObjectiveParts:
    sig, total = link_terms(W, star, channels, noise)
    root = np.sqrt(1.0 + gamma)
    return FpObjectiveParts(
        linear=2.0 * root * np.real(np.conj(rho) * sig),
        quadratic=np.abs(rho) ** 2 * total,
        gamma_terms=np.log1p(gamma) - gamma,
    )


def fp_objective(gamma: np.ndarray, rho: np.ndarray, W: np.ndarray, star: StarState,
                 channels: ChannelSet, noise: Noise) -> float:
    """Surrogate value; requires gamma >= 0."""
    if np.any(gamma < 0):
        raise ValueError("fp_objective: gamma must be >= 0")
    return fp_parts(gamma, rho, W, star, channels, noise).total


def update_gamma(W: np.ndarray, star: StarState, channels: ChannelSet, noise: Noise) -> np.ndarray:
    sig, total = link_terms(W, star, channels, noise)
    p = np.abs(sig) ** 2
    return p / (total - p)


def update_rho(gamma: np.ndarray, W: np.ndarray, star: StarState, channels: ChannelSet,
               noise: Noise) -> np.ndarray:
    # the denominator keeps the j = k term
    sig, total = link_terms(W, star, channels, noise)
    return np.sqrt(1.0 + gamma) * sig / total
