import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from starisac.channels import ChannelSet
from starisac.metrics import (BeamformingState, Noise, StarState, all_sinr, check_feasibility,
                              radar_snr_worst, ris_power, sum_rate, user_sinr)
from starisac.scenario import desk_scenario

from conftest import cnormal, random_instance


def dense_sinr(k, W, star, ch, sk, sv):
    """SINR built from full N x N diagonal matrices."""
    Psi = np.diag(star.psi_r if ch.user_side[k] == "r" else star.psi_t)
    h_eq_H = ch.h_d[k].conj() + ch.f[k].conj() @ Psi @ ch.G
    gains = np.abs(h_eq_H @ W) ** 2
    ris_noise = sv * np.linalg.norm(ch.f[k].conj() @ Psi) ** 2
    return gains[k] / (gains.sum() - gains[k] + ris_noise + sk)


def test_sinr_dense_oracle():
    sc, ch, bf, star = random_instance(1)
    for k in range(sc.K):
        assert user_sinr(k, bf.W, star, ch, 1e-11, 1e-10) == pytest.approx(
            dense_sinr(k, bf.W, star, ch, 1e-11, 1e-10), rel=1e-10)


def test_sinr_zero_beams_and_index():
    sc, ch, bf, star = random_instance(2)
    assert user_sinr(0, np.zeros_like(bf.W), star, ch, 1e-11, 1e-10) == 0.0
    with pytest.raises(IndexError):
        user_sinr(sc.K, bf.W, star, ch, 1e-11, 1e-10)


def test_sinr_scalar_hand_value():
    ch = ChannelSet(np.ones((1, 1), complex), np.zeros((1, 1), complex), np.array([[0.3 + 0.4j]]),
                    np.ones(1, complex), ("r",))
    star = StarState(np.zeros(1), np.zeros(1), np.ones(1, complex), np.ones(1, complex))
    W = np.array([[2.0 + 0j, 0.0]])
    assert user_sinr(0, W, star, ch, 0.1, 0.0) == pytest.approx(0.25 * 4 / 0.1, rel=1e-12)


def test_sum_rate_composition():
    sc, ch, bf, star = random_instance(3)
    noise = Noise(1e-11, 1e-10)
    expected = sum(np.log2(1 + user_sinr(k, bf.W, star, ch, 1e-11, 1e-10)) for k in range(sc.K))
    assert sum_rate(bf.W, star, ch, noise) == pytest.approx(expected, rel=1e-12)
    assert sum_rate(np.zeros_like(bf.W), star, ch, noise) == 0.0


def test_sum_rate_unit_sinr_gives_one_bit_each():
    # four orthogonal users, beams scaled so each SINR is exactly 1
    M = K = 4
    ch = ChannelSet(np.zeros((1, M), complex), np.zeros((K, 1), complex), np.eye(K, M, dtype=complex),
                    np.ones(M, complex), ("r", "r", "t", "t"))
    star = StarState(np.zeros(1), np.zeros(1), np.ones(1, complex), np.ones(1, complex))
    W = np.hstack([np.sqrt(0.5) * np.eye(M), np.zeros((M, M))]).astype(complex)
    assert sum_rate(W, star, ch, Noise(0.5, 0.0)) == pytest.approx(4.0, rel=1e-12)


def test_radar_snr_cases(rng):
    h = cnormal(rng, 4)
    W = cnormal(rng, 4, 6)
    u_perp = np.array([h[1], -h[0], 0, 0]).conj()
    assert radar_snr_worst(u_perp, W, h, 1.0, 1e-2) == pytest.approx(0.0, abs=1e-20)
    H_t = np.outer(h, h.conj())
    dense = np.real(h.conj() @ H_t @ W @ W.conj().T @ H_t.conj().T @ h) / (1e-2 * np.vdot(h, h).real)
    assert radar_snr_worst(h, W, h, 1.0, 1e-2) == pytest.approx(dense, rel=1e-10)
    expected = np.linalg.norm(h) ** 2 * np.linalg.norm(h.conj() @ W) ** 2 / 1e-2
    assert radar_snr_worst(h, W, h, 1.0, 1e-2) == pytest.approx(expected, rel=1e-10)
    with pytest.raises(ValueError):
        radar_snr_worst(np.zeros(4), W, h, 1.0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
def test_radar_snr_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    h, W, u = cnormal(rng, 3), cnormal(rng, 3, 5), cnormal(rng, 3)
    a = radar_snr_worst(u, W, h, 2.0, 0.5)
    assert radar_snr_worst(c * u, W, h, 2.0, 0.5) == pytest.approx(a, rel=1e-10)


def test_ris_power_cases():
    sc, ch, bf, star = random_instance(4)
    sv = 1e-3
    Pr, Pt = np.diag(star.psi_r), np.diag(star.psi_t)
    dense = sum(np.linalg.norm(P @ ch.G @ bf.W) ** 2 + sv * np.linalg.norm(P) ** 2 for P in (Pr, Pt))
    assert ris_power(bf.W, star, ch.G, sv) == pytest.approx(dense, rel=1e-12)
    zero = StarState(np.zeros(sc.N), np.zeros(sc.N), star.phi_r, star.phi_t)
    assert ris_power(bf.W, zero, ch.G, sv) == 0.0
    ones = StarState(np.ones(sc.N), np.ones(sc.N), star.phi_r, star.phi_t)
    assert ris_power(np.zeros_like(bf.W), ones, ch.G, sv) == pytest.approx(2 * sv * sc.N, rel=1e-12)
    doubled = StarState(2 * star.a_r, 2 * star.a_t, star.phi_r, star.phi_t)
    assert ris_power(bf.W, doubled, ch.G, sv) == pytest.approx(4 * dense, rel=1e-12)


def test_phase_rotation_invariance():
    sc, ch, bf, star = random_instance(5)
    noise = Noise(1e-11, 1e-10)
    W2 = bf.W * np.exp(1j * np.linspace(0, 3, bf.W.shape[1]))
    np.testing.assert_allclose(all_sinr(W2, star, ch, noise), all_sinr(bf.W, star, ch, noise), rtol=1e-10)
    assert radar_snr_worst(bf.u, W2, ch.h_dt, 1, 1) == pytest.approx(radar_snr_worst(bf.u, bf.W, ch.h_dt, 1, 1), rel=1e-10)


def test_feasibility_report():
    sc, ch, bf, star = random_instance(6, Gamma_t_dB=0.0)
    zero = BeamformingState(np.zeros_like(bf.W), bf.u, bf.gamma, bf.rho)
    rep = check_feasibility(zero, star, sc, ch)
    assert "C1" in rep.violated() and not rep.feasible
    bad = StarState(star.a_r.copy(), star.a_t, star.phi_r, star.phi_t)
    bad.a_r[0] = -0.1
    assert "C4" in check_feasibility(bf, bad, sc, ch).violated()
    eed = desk_scenario(M=3, N=6, K_r=1, K_t=2, mode="EED")
    assert "mode" in check_feasibility(bf, star, eed, ch).violated()
