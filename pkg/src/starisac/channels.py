"""Rician channel realizations and equivalent end-to-end channels.

Convention: ``G`` is N x M (DFBS -> surface), ``f[k]`` the length-N
surface -> user-k channel, ``h_d[k]`` the length-M DFBS -> user-k channel and
``h_dt`` the DFBS -> target channel.  The equivalent channel of user k is

    h_eq^H = h_d^H + f^H diag(psi) G,   i.e.   h_eq = h_d + G^H (conj(psi) * f)

with ``psi`` the surface coefficients of the user's side.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenario import ScenarioConfig

REFLECT, TRANSMIT = "r", "t"


def pathloss_linear(d: float | np.ndarray) -> float | np.ndarray:
    """Power gain of the 37.3 + 22 log10(d) dB law (d in metres)."""
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("pathloss_linear: distance must be > 0")
    out = 10.0 ** (-(37.3 + 22.0 * np.log10(d)) / 10.0)
    return float(out) if out.ndim == 0 else out


def ula_steering(n: int, cos_angle: float) -> np.ndarray:
    """Half-wavelength ULA response; the array axis is the x axis."""
    return np.exp(1j * np.pi * np.arange(n) * cos_angle)


def rician_channel(rows: int, cols: int, kappa: float, pl_linear: float,
                   rng: np.random.Generator, los: np.ndarray | None = None) -> np.ndarray:
    """sqrt(PL) * (sqrt(k/(k+1)) H_los + sqrt(1/(k+1)) H_nlos).

    ``los`` defaults to the all-ones (unit-modulus) matrix.  The NLoS part is
    i.i.d. CN(0, 1).
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"rician_channel: invalid dimensions {rows}x{cols}")
    if kappa < 0:
        raise ValueError("rician_channel: kappa must be >= 0")
    if not pl_linear > 0:
        raise ValueError("rician_channel: pathloss must be > 0")
    if los is None:
        los = np.ones((rows, cols), dtype=complex)
    elif los.shape != (rows, cols):
        raise ValueError(f"rician_channel: LoS shape {los.shape} != {(rows, cols)}")
    nlos = (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)
    return np.sqrt(pl_linear) * (np.sqrt(kappa / (kappa + 1.0)) * los
                                 + np.sqrt(1.0 / (kappa + 1.0)) * nlos)


@dataclass(frozen=True)
class Geometry:
    bs: np.ndarray
    ris: np.ndarray
    users: np.ndarray  # (K, 2)
    target: np.ndarray


@dataclass(frozen=True)
class ChannelSet:
    G: np.ndarray  # (N, M)
    f: np.ndarray  # (K, N)
    h_d: np.ndarray  # (K, M)
    h_dt: np.ndarray  # (M,)
    user_side: tuple[str, ...]
    geometry: Geometry | None = None

    def __post_init__(self) -> None:
        N, M = self.G.shape
        K = len(self.user_side)
        if self.f.shape != (K, N) or self.h_d.shape != (K, M) or self.h_dt.shape != (M,):
            raise ValueError("ChannelSet: inconsistent dimensions")
        for name in ("G", "f", "h_d", "h_dt"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"ChannelSet: non-finite entries in {name}")
        sides = "".join(self.user_side)
        if sides != sides.count(REFLECT) * REFLECT + sides.count(TRANSMIT) * TRANSMIT:
            raise ValueError("ChannelSet: user_side must list reflect users before transmit users")

    @property
    def M(self) -> int:
        return self.G.shape[1]

    @property
    def N(self) -> int:
        return self.G.shape[0]

    @property
    def K(self) -> int:
        return len(self.user_side)

    @property
    def K_r(self) -> int:
        return self.user_side.count(REFLECT)


def equivalent_channel(h_dk: np.ndarray, f_k: np.ndarray, psi_side: np.ndarray,
                       G: np.ndarray) -> np.ndarray:
    """Return h_eq with h_eq^H = h_dk^H + f_k^H diag(psi_side) G."""
    N, M = G.shape
    if h_dk.shape != (M,) or f_k.shape != (N,) or psi_side.shape != (N,):
        raise ValueError("equivalent_channel: dimension mismatch")
    return h_dk + G.conj().T @ (np.conj(psi_side) * f_k)


def equivalent_channels(channels: ChannelSet, psi_r: np.ndarray, psi_t: np.ndarray) -> np.ndarray:
    """All K equivalent channels as rows of a (K, M) array."""
    psi = side_coefficients(channels, psi_r, psi_t)
    return channels.h_d + (np.conj(psi) * channels.f) @ channels.G.conj()


def side_coefficients(channels: ChannelSet, psi_r: np.ndarray, psi_t: np.ndarray) -> np.ndarray:
    """(K, N) array whose row k is the surface vector seen by user k."""
    K_r = channels.K_r
    return np.vstack([np.broadcast_to(psi_r, (K_r, channels.N)),
                      np.broadcast_to(psi_t, (channels.K - K_r, channels.N))])


# -- geometry --------------------------------------------------------------

def _disc_point(rng: np.random.Generator, centre: np.ndarray, r_min: float, r_max: float,
                ang_lo: float, ang_hi: float) -> np.ndarray:
    # area-uniform over the annular sector
    r = np.sqrt(rng.uniform(r_min ** 2, r_max ** 2))
    a = rng.uniform(ang_lo, ang_hi)
    return centre + r * np.array([np.cos(a), np.sin(a)])


def draw_geometry(sc: ScenarioConfig, rng: np.random.Generator) -> Geometry:
    """Users in half-discs around the surface, target in a disc around the DFBS.

    Reflect-side users lie on the DFBS side of the surface (smaller y),
    transmit-side users beyond it.  Elevation is ignored.
    """
    bs = np.asarray(sc.bs_pos[:2], dtype=float)
    ris = np.asarray(sc.ris_pos[:2], dtype=float)
    users = [_disc_point(rng, ris, sc.min_distance, sc.user_region_radius, np.pi, 2 * np.pi)
             for _ in range(sc.K_r)]
    users += [_disc_point(rng, ris, sc.min_distance, sc.user_region_radius, 0.0, np.pi)
              for _ in range(sc.K_t)]
    target = _disc_point(rng, bs, sc.min_distance, sc.target_region_radius, 0.0, 2 * np.pi)
    return Geometry(bs=bs, ris=ris, users=np.array(users).reshape(sc.K, 2), target=target)


def _cos_x(src: np.ndarray, dst: np.ndarray) -> tuple[float, float]:
    v = dst - src
    d = float(np.hypot(*v))
    return d, float(v[0] / d)


def los_components(geo: Geometry, M: int, N: int) -> dict[str, np.ndarray]:
    """Deterministic unit-modulus LoS matrices for every link."""
    _, c_bs_ris = _cos_x(geo.bs, geo.ris)
    _, c_ris_bs = _cos_x(geo.ris, geo.bs)
    out = {"G": np.outer(ula_steering(N, c_ris_bs), ula_steering(M, c_bs_ris).conj())}
    out["f"] = np.array([ula_steering(N, _cos_x(geo.ris, u)[1]) for u in geo.users]).reshape(-1, N)
    out["h_d"] = np.array([ula_steering(M, _cos_x(geo.bs, u)[1]) for u in geo.users]).reshape(-1, M)
    out["h_dt"] = ula_steering(M, _cos_x(geo.bs, geo.target)[1])
    return out


def generate_channel_set(sc: ScenarioConfig, trial_rng: np.random.Generator) -> ChannelSet:
    geo = draw_geometry(sc, trial_rng)
    M, N, K = sc.M, sc.N, sc.K
    los = los_components(geo, M, N)
    d_bs_ris = float(np.hypot(*(geo.ris - geo.bs)))
    G = rician_channel(N, M, sc.kappa, pathloss_linear(d_bs_ris), trial_rng, los["G"])
    f = np.empty((K, N), dtype=complex)
    h_d = np.empty((K, M), dtype=complex)
    for k, u in enumerate(geo.users):
        f[k] = rician_channel(N, 1, sc.kappa, pathloss_linear(_cos_x(geo.ris, u)[0]),
                              trial_rng, los["f"][k][:, None])[:, 0]
        h_d[k] = rician_channel(M, 1, sc.kappa, pathloss_linear(_cos_x(geo.bs, u)[0]),
                                trial_rng, los["h_d"][k][:, None])[:, 0]
    h_dt = rician_channel(M, 1, sc.kappa, pathloss_linear(_cos_x(geo.bs, geo.target)[0]),
                          trial_rng, los["h_dt"][:, None])[:, 0]
    sides = (REFLECT,) * sc.K_r + (TRANSMIT,) * sc.K_t
    return ChannelSet(G=G, f=f, h_d=h_d, h_dt=h_dt, user_side=sides, geometry=geo)


# -- dump format -------------------------------------------------------------
#
# Text file, one block per channel:   <name> <rows> <cols>
# followed by rows*cols lines "re im" in row-major order.  Vectors are
# written as 1 x n, the user-side tags as a single "user_side <tags>" line.

_DUMP_ORDER = ("G", "f", "h_d", "h_dt")


def dump_channel_set(ch: ChannelSet, path: str | Path) -> None:
    lines = [f"user_side {''.join(ch.user_side)}"]
    for name in _DUMP_ORDER:
        a = np.atleast_2d(getattr(ch, name))
        lines.append(f"{name} {a.shape[0]} {a.shape[1]}")
        lines.extend(f"{z.real:.17g} {z.imag:.17g}" for z in a.ravel())
    Path(path).write_text("\n".join(lines) + "\n")


def load_channel_set(path: str | Path) -> ChannelSet:
    it = iter(Path(path).read_text().splitlines())
    tag, sides = next(it).split()
    if tag != "user_side":
        raise ValueError("channel dump: missing user_side header")
    arrays = {}
    for name in _DUMP_ORDER:
        hdr = next(it).split()
        if hdr[0] != name:
            raise ValueError(f"channel dump: expected {name}, got {hdr[0]}")
        r, c = int(hdr[1]), int(hdr[2])
        vals = np.array([complex(*map(float, next(it).split())) for _ in range(r * c)])
        arrays[name] = vals.reshape(r, c)
    arrays["h_dt"] = arrays["h_dt"].ravel()
    if len(sides) == 0:
        arrays["f"] = arrays["f"].reshape(0, arrays["G"].shape[0])
    return ChannelSet(user_side=tuple(sides), **arrays)
