from __future__ import annotations

import numpy as np
import scipy.linalg as sla


def normalize_phase(v: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Rotate ``v`` so its first non-negligible coordinate is real positive."""
    mag = np.abs(v)
    idx = np.flatnonzero(mag > rtol * mag.max(initial=0.0))
    if idx.size == 0:
        return v
    return v * np.exp(-1j * np.angle(v[idx[0]]))


def max_generalized_rayleigh(C: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Unit-norm maximizer of u^H C u / u^H E u (top eigenvector of E^-1 C).

    C must be Hermitian PSD and E Hermitian positive definite.  The phase is
    fixed by making the first non-negligible coordinate real positive.
    """
    try:
        _, vecs = sla.eigh(C, E, subset_by_index=[C.shape[0] - 1, C.shape[0] - 1])
    except np.linalg.LinAlgError:
        raise ValueError("max_generalized_rayleigh: E is singular or not positive definite") from None
    u = vecs[:, 0].astype(complex)
    return normalize_phase(u / np.linalg.norm(u))


def lambda_max(A: np.ndarray) -> float:
    """Largest eigenvalue of a Hermitian matrix."""
    n = A.shape[0]
    return float(sla.eigh(A, eigvals_only=True, subset_by_index=[n - 1, n - 1])[0])
