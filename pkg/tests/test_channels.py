import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from starisac.channels import (ChannelSet, dump_channel_set, equivalent_channel,
                               equivalent_channels, generate_channel_set, load_channel_set,
                               pathloss_linear, rician_channel)
from starisac.scenario import desk_scenario

from conftest import cnormal


def test_pathloss_values():
    assert pathloss_linear(1.0) == pytest.approx(10 ** -3.73, rel=1e-12)
    assert pathloss_linear(15.0) == pytest.approx(10 ** (-(37.3 + 22 * np.log10(15)) / 10), rel=1e-12)
    with pytest.raises(ValueError):
        pathloss_linear(0.0)


@given(st.floats(0.01, 1e4), st.floats(0.01, 1e4))
def test_pathloss_decreasing(a, b):
    if a < b:
        assert pathloss_linear(a) > pathloss_linear(b)


def test_rician_nlos_variance():
    pl = 3e-4
    H = rician_channel(1000, 100, 0.0, pl, np.random.default_rng(1))
    assert np.mean(np.abs(H) ** 2) == pytest.approx(pl, rel=0.05)


def test_rician_strong_los_limit():
    pl = 2e-5
    los = np.exp(1j * np.arange(12)).reshape(3, 4)
    H = rician_channel(3, 4, 1e6, pl, np.random.default_rng(2), los)
    assert np.max(np.abs(H - np.sqrt(pl) * los)) < 1e-2 * np.sqrt(pl)


def test_rician_rejects_bad_input():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        rician_channel(0, 3, 1.0, 1.0, rng)
    with pytest.raises(ValueError):
        rician_channel(2, 3, 1.0, 1.0, rng, np.ones((3, 2)))


def test_generation_is_deterministic_and_ordered():
    sc = desk_scenario()
    a = generate_channel_set(sc, np.random.default_rng(9))
    b = generate_channel_set(sc, np.random.default_rng(9))
    for name in ("G", "f", "h_d", "h_dt"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    assert a.user_side == ("r", "r", "t", "t")
    assert a.G.shape == (16, 4) and a.f.shape == (4, 16)


def test_geometry_regions():
    sc = desk_scenario()
    for seed in range(30):
        geo = generate_channel_set(sc, np.random.default_rng(seed)).geometry
        d_users = np.hypot(*(geo.users - geo.ris).T)
        assert np.all((d_users >= sc.min_distance) & (d_users <= sc.user_region_radius))
        assert np.all(geo.users[:2, 1] <= geo.ris[1]) and np.all(geo.users[2:, 1] >= geo.ris[1])
        assert 1.0 <= np.hypot(*(geo.target - geo.bs)) <= sc.target_region_radius
    assert np.hypot(*(geo.ris - geo.bs)) == pytest.approx(15.0)


def test_equivalent_channel_off_surface(rng):
    G, f, h = cnormal(rng, 5, 3), cnormal(rng, 5), cnormal(rng, 3)
    np.testing.assert_array_equal(equivalent_channel(h, f, np.zeros(5), G), h)


def test_equivalent_channel_scalar_hand_value():
    h, f, psi, g = 0.3 - 0.1j, 0.5 + 2j, 0.7 * np.exp(0.4j), 1.5 - 0.5j
    # h_eq^* = h^* + f^* psi g
    expected = np.conj(np.conj(h) + np.conj(f) * psi * g)
    out = equivalent_channel(np.array([h]), np.array([f]), np.array([psi]), np.array([[g]]))
    assert out[0] == pytest.approx(expected, abs=1e-15)


def test_equivalent_channel_dense_oracle(rng):
    N, M = 7, 4
    G, f, h, psi = cnormal(rng, N, M), cnormal(rng, N), cnormal(rng, M), cnormal(rng, N)
    dense = (h.conj() + f.conj() @ np.diag(psi) @ G).conj()
    np.testing.assert_allclose(equivalent_channel(h, f, psi, G), dense, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
def test_equivalent_channel_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    G, f, h = cnormal(rng, 6, 3), cnormal(rng, 6), cnormal(rng, 3)
    p1, p2 = cnormal(rng, 6), cnormal(rng, 6)
    lhs = equivalent_channel(h, f, a * p1 + b * p2, G) - h
    rhs = (np.conj(a) * (equivalent_channel(h, f, p1, G) - h)
           + np.conj(b) * (equivalent_channel(h, f, p2, G) - h))
    # h_eq depends on conj(psi), so the map is conjugate-linear
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * (1 + abs(a) + abs(b)) * 10)


def test_batched_matches_single():
    sc = desk_scenario()
    ch = generate_channel_set(sc, np.random.default_rng(3))
    rng = np.random.default_rng(4)
    pr, pt = cnormal(rng, sc.N), cnormal(rng, sc.N)
    H = equivalent_channels(ch, pr, pt)
    for k in range(sc.K):
        psi = pr if ch.user_side[k] == "r" else pt
        np.testing.assert_allclose(H[k], equivalent_channel(ch.h_d[k], ch.f[k], psi, ch.G), atol=1e-18)


def test_channel_set_validation(rng):
    with pytest.raises(ValueError, match="ordering|reflect"):
        ChannelSet(cnormal(rng, 4, 2), cnormal(rng, 2, 4), cnormal(rng, 2, 2), cnormal(rng, 2), ("t", "r"))
    with pytest.raises(ValueError, match="dimension"):
        ChannelSet(cnormal(rng, 4, 2), cnormal(rng, 2, 3), cnormal(rng, 2, 2), cnormal(rng, 2), ("r", "t"))


def test_dump_round_trip(tmp_path):
    ch = generate_channel_set(desk_scenario(N=5), np.random.default_rng(5))
    dump_channel_set(ch, tmp_path / "ch.txt")
    back = load_channel_set(tmp_path / "ch.txt")
    assert back.user_side == ch.user_side
    for name in ("G", "f", "h_d", "h_dt"):
        np.testing.assert_array_equal(getattr(back, name), getattr(ch, name))
