"""Experiment configuration: geometry, budgets, noise, operating mode.

Interface quantities (powers in dBm, ratios in dB) are what the config
document carries; the linear values used by the math are derived once in
``ScenarioConfig.__post_init__`` and never converted again.
"""
from __future__ import annotations

import configparser
import dataclasses
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

SECTION = "scenario"


class ConfigError(ValueError):
    """Invalid or incomplete scenario configuration."""


class Mode(str, enum.Enum):
    UED = "UED"  # independent reflect/transmit amplitudes
    EED = "EED"  # shared amplitude vector
    SD = "SD"  # each element reflects or transmits, never both
    PASSIVE = "PASSIVE"  # passive STAR-RIS surrogate baseline

    @classmethod
    def parse(cls, value: "str | Mode") -> "Mode":
        if isinstance(value, Mode):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ConfigError(f"mode: unknown operating mode {value!r}") from None


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def alternating_mask(n: int) -> str:
    """Default SD assignment: even elements reflect, odd elements transmit."""
    return "".join("r" if i % 2 == 0 else "t" for i in range(n))


@dataclass(frozen=True)
class ScenarioConfig:
    M: int = 8
    N: int = 128
    K_r: int = 2
    K_t: int = 2
    bs_pos: tuple[float, float, float] = (0.0, 0.0, 0.0)
    ris_pos: tuple[float, float, float] = (0.0, 15.0, 0.0)
    user_region_radius: float = 10.0
    target_region_radius: float = 5.0
    # closest any user/target may be drawn to its region centre, keeps PL < 1
    min_distance: float = 1.0
    P_total_dBm: float = 26.0
    bs_power_fraction: float = 0.5
    Gamma_t_dB: float = 0.0
    xi_sq: float = 1.0
    sigma_k_dBm: float = -80.0
    sigma_v_dBm: float = -80.0
    sigma_z_dBm: float = -80.0
    kappa: float = 1.0
    mode: Mode = Mode.UED
    sd_mask: str | None = None
    phase_solver: str = "MM"
    sd_freeze_amplitude: bool = False
    Q_max: int = 100
    delta_th: float = 1e-3
    seed: int = 0

    # linear-unit values, filled in by __post_init__
    P_max_B: float = field(init=False)
    P_max_R: float = field(init=False)
    Gamma_t: float = field(init=False)
    sigma_k_sq: float = field(init=False)
    sigma_v_sq: float = field(init=False)
    sigma_z_sq: float = field(init=False)

    def __post_init__(self) -> None:
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("mode", Mode.parse(self.mode))
        set_("bs_pos", tuple(float(x) for x in self.bs_pos))
        set_("ris_pos", tuple(float(x) for x in self.ris_pos))
        set_("phase_solver", str(self.phase_solver).upper())
        if self.mode is Mode.SD and self.sd_mask is None:
            set_("sd_mask", alternating_mask(self.N))
        self._validate()

        p_total = dbm_to_watt(self.P_total_dBm)
        if self.mode is Mode.PASSIVE:
            # passive surface: all power at the DFBS, no amplifier noise
            set_("P_max_B", p_total)
            set_("P_max_R", 0.0)
            set_("sigma_v_sq", 0.0)
        else:
            set_("P_max_B", self.bs_power_fraction * p_total)
            set_("P_max_R", (1.0 - self.bs_power_fraction) * p_total)
            set_("sigma_v_sq", dbm_to_watt(self.sigma_v_dBm))
        set_("Gamma_t", db_to_linear(self.Gamma_t_dB))
        set_("sigma_k_sq", dbm_to_watt(self.sigma_k_dBm))
        set_("sigma_z_sq", dbm_to_watt(self.sigma_z_dBm))

    def _validate(self) -> None:
        def bad(name: str, why: str) -> ConfigError:
            return ConfigError(f"{name}: {why}")

        if self.M < 1:
            raise bad("M", "need at least one antenna")
        if self.N < 1:
            raise bad("N", "need at least one element")
        if self.K_r < 0 or self.K_t < 0:
            raise bad("K_r/K_t", "user counts must be nonnegative")
        if self.K_r + self.K_t < 1:
            raise bad("K_r/K_t", "no users")
        if len(self.bs_pos) != 3 or len(self.ris_pos) != 3:
            raise bad("bs_pos/ris_pos", "positions need three coordinates")
        for name in ("user_region_radius", "target_region_radius", "xi_sq"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise bad(name, "must be finite and > 0")
        if not (0 < self.min_distance < min(self.user_region_radius, self.target_region_radius)):
            raise bad("min_distance", "must lie in (0, region radius)")
        for name in ("P_total_dBm", "sigma_k_dBm", "sigma_v_dBm", "sigma_z_dBm"):
            if not math.isfinite(getattr(self, name)):
                raise bad(name, "must be finite (powers are strictly positive)")
        if not (0.0 < self.bs_power_fraction < 1.0) and self.mode is not Mode.PASSIVE:
            raise bad("bs_power_fraction", "must lie in (0, 1)")
        if math.isnan(self.Gamma_t_dB) or self.Gamma_t_dB == math.inf:
            raise bad("Gamma_t_dB", "must be a number (use -inf for zero)")
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise bad("kappa", "must be finite and >= 0")
        if self.Q_max < 1:
            raise bad("Q_max", "need at least one iteration")
        if not self.delta_th > 0:
            raise bad("delta_th", "must be > 0")
        if self.phase_solver not in ("MM", "CCM"):
            raise bad("phase_solver", "must be MM or CCM")
        if self.mode is Mode.SD:
            mask = self.sd_mask
            if len(mask) != self.N:
                raise bad("sd_mask", f"mask length {len(mask)} != N={self.N}")
            if set(mask) - {"r", "t"}:
                raise bad("sd_mask", "entries must be 'r' or 't'")
            if self.K_r > 0 and "r" not in mask:
                raise bad("sd_mask", "reflect users but no reflect element")
            if self.K_t > 0 and "t" not in mask:
                raise bad("sd_mask", "transmit users but no transmit element")

    @property
    def K(self) -> int:
        return self.K_r + self.K_t

    @property
    def P_total(self) -> float:
        return dbm_to_watt(self.P_total_dBm)

    def masks(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-element (reflect, transmit) activity as float arrays."""
        if self.mode is Mode.SD:
            m_r = np.array([c == "r" for c in self.sd_mask], dtype=float)
            return m_r, 1.0 - m_r
        ones = np.ones(self.N)
        return ones, ones.copy()

    def replace(self, **changes: Any) -> "ScenarioConfig":
        # a changed N invalidates a generated default mask
        if "N" in changes and "sd_mask" not in changes and self.sd_mask == alternating_mask(self.N):
            changes["sd_mask"] = None
        return dataclasses.replace(self, **changes)


# -- config document ------------------------------------------------------

_INT = {"M", "N", "K_r", "K_t", "Q_max", "seed"}
_VEC = {"bs_pos", "ris_pos"}
_BOOL = {"sd_freeze_amplitude"}
_STR = {"mode", "phase_solver", "sd_mask"}
REQUIRED_KEYS = ("M", "N", "K_r", "K_t")


def _init_fields() -> list[dataclasses.Field]:
    return [f for f in dataclasses.fields(ScenarioConfig) if f.init]


def _coerce(key: str, raw: Any) -> Any:
    try:
        if key in _INT:
            return int(raw)
        if key in _VEC:
            if isinstance(raw, str):
                raw = [x for x in raw.replace("(", "").replace(")", "").split(",") if x.strip()]
            return tuple(float(x) for x in raw)
        if key in _BOOL:
            if isinstance(raw, str):
                low = raw.strip().lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(raw)
                return low in ("true", "1", "yes")
            return bool(raw)
        if key in _STR:
            s = str(raw).strip()
            return None if key == "sd_mask" and s.lower() in ("", "none") else s
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse value {raw!r}") from None


def build_scenario(raw_config: Mapping[str, Any]) -> ScenarioConfig:
    """Validate a flat key-value mapping and return a :class:`ScenarioConfig`.

    Geometry, noise and budget keys fall back to their
    defaults; the array/user sizes in ``REQUIRED_KEYS`` must be present.
    """
    known = {f.name for f in _init_fields()}
    unknown = set(raw_config) - known
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")
    missing = [k for k in REQUIRED_KEYS if k not in raw_config]
    if missing:
        raise ConfigError(f"{missing[0]}: missing key")
    kwargs = {k: _coerce(k, v) for k, v in raw_config.items()}
    return ScenarioConfig(**kwargs)


def _fmt(value: Any) -> str:
    if isinstance(value, Mode):
        return value.value
    if isinstance(value, tuple):
        return ", ".join(repr(float(x)) for x in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(cfg: ScenarioConfig) -> str:
    """Render ``cfg`` as a config document that :func:`parse` reads back."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp[SECTION] = {f.name: _fmt(getattr(cfg, f.name)) for f in _init_fields()
                   if getattr(cfg, f.name) is not None}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def parse(text: str) -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"document does not parse: {exc}") from None
    if SECTION not in cp:
        raise ConfigError(f"missing [{SECTION}] section")
    return build_scenario(dict(cp[SECTION]))


def load(path: str | Path) -> ScenarioConfig:
    return parse(Path(path).read_text())


def full_scale_scenario(**overrides: Any) -> ScenarioConfig:
    """Full-scale setup (M=8, N=128, K=2+2, 26 dBm)."""
    return ScenarioConfig(**overrides)


def desk_scenario(**overrides: Any) -> ScenarioConfig:
    """Desk-scale variant used by the harness defaults (M=4, N=16, K=4)."""
    base = dict(M=4, N=16, K_r=2, K_t=2)
    base.update(overrides)
    return ScenarioConfig(**base)
