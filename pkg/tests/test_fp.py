import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from starisac.fp import fp_objective, fp_parts, update_gamma, update_rho
from starisac.metrics import Noise, all_sinr, link_terms, sum_rate

from conftest import random_instance

NOISE = Noise(1e-11, 1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_identity_at_optimal_auxiliaries(seed):
    sc, ch, bf, star = random_instance(seed)
    g = update_gamma(bf.W, star, ch, NOISE)
    r = update_rho(g, bf.W, star, ch, NOISE)
    assert fp_objective(g, r, bf.W, star, ch, NOISE) == pytest.approx(
        np.log(2) * sum_rate(bf.W, star, ch, NOISE), rel=1e-8)


def test_gamma_equals_sinr():
    sc, ch, bf, star = random_instance(1)
    np.testing.assert_allclose(update_gamma(bf.W, star, ch, NOISE), all_sinr(bf.W, star, ch, NOISE), rtol=1e-12)


def test_zero_beams():
    sc, ch, bf, star = random_instance(2)
    W = np.zeros_like(bf.W)
    g = update_gamma(W, star, ch, NOISE)
    r = update_rho(g, W, star, ch, NOISE)
    assert np.all(g == 0) and np.all(r == 0)
    assert fp_objective(g, r, W, star, ch, NOISE) == 0.0


def test_gamma_vanishes_with_noise():
    sc, ch, bf, star = random_instance(3)
    prev = np.inf
    for s in (1e-11, 1e-6, 1e-2, 1e2):
        g = update_gamma(bf.W, star, ch, Noise(s, 1e-10)).max()
        assert g < prev
        prev = g
    assert prev < 1e-6


def test_rho_scalar_hand_value():
    sc, ch, bf, star = random_instance(4)
    g = np.full(sc.K, 0.7)
    sig, total = link_terms(bf.W, star, ch, NOISE)
    k = 1
    r = update_rho(g, bf.W, star, ch, NOISE)
    assert r[k] == pytest.approx(np.sqrt(1.7) * sig[k] / total[k], rel=1e-12)
    W = bf.W.copy()
    W[:, k] = 0
    assert update_rho(g, W, star, ch, NOISE)[k] == 0


def test_rho_grid_maximum():
    sc, ch, bf, star = random_instance(5)
    g = update_gamma(bf.W, star, ch, NOISE)
    r = update_rho(g, bf.W, star, ch, NOISE)
    k = 0
    step = 0.05 * abs(r[k])
    offs = step * np.arange(-5, 6)
    vals = np.empty((11, 11))
    for i, a in enumerate(offs):
        for j, b in enumerate(offs):
            r2 = r.copy()
            r2[k] += a + 1j * b
            vals[i, j] = fp_objective(g, r2, bf.W, star, ch, NOISE)
    assert np.unravel_index(np.argmax(vals), vals.shape) == (5, 5)


def test_perturbation_never_improves():
    sc, ch, bf, star = random_instance(6)
    g = update_gamma(bf.W, star, ch, NOISE)
    r = update_rho(g, bf.W, star, ch, NOISE)
    base = fp_objective(g, r, bf.W, star, ch, NOISE)
    for k in range(sc.K):
        for d in (1e-3, -1e-3, 1e-3j, -1e-3j):
            r2 = r.copy()
            r2[k] += d * abs(r[k])
            assert fp_objective(g, r2, bf.W, star, ch, NOISE) <= base + 1e-9


def test_block_ascent_from_arbitrary_auxiliaries():
    sc, ch, bf, star = random_instance(7)
    f0 = fp_objective(bf.gamma, bf.rho, bf.W, star, ch, NOISE)
    g = update_gamma(bf.W, star, ch, NOISE)
    r = update_rho(g, bf.W, star, ch, NOISE)
    assert fp_objective(g, r, bf.W, star, ch, NOISE) >= f0 - 1e-9


def test_parts_sum_to_monolithic_value():
    sc, ch, bf, star = random_instance(8)
    parts = fp_parts(bf.gamma, bf.rho, bf.W, star, ch, NOISE)
    # monolithic evaluation user by user
    H_side = [star.psi_r if s == "r" else star.psi_t for s in ch.user_side]
    total = 0.0
    for k in range(sc.K):
        h_H = ch.h_d[k].conj() + (ch.f[k].conj() * H_side[k]) @ ch.G
        prods = h_H @ bf.W
        den = np.sum(np.abs(prods) ** 2) + NOISE.sigma_v_sq * np.sum(np.abs(ch.f[k] * H_side[k]) ** 2) + NOISE.sigma_k_sq
        total += (np.log1p(bf.gamma[k]) - bf.gamma[k]
                  + 2 * np.sqrt(1 + bf.gamma[k]) * np.real(np.conj(bf.rho[k]) * prods[k])
                  - abs(bf.rho[k]) ** 2 * den)
    assert parts.total == pytest.approx(total, rel=1e-10)


def test_negative_gamma_rejected():
    sc, ch, bf, star = random_instance(9)
    with pytest.raises(ValueError):
        fp_objective(-np.ones(sc.K), bf.rho, bf.W, star, ch, NOISE)
