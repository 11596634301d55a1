"""Alternating optimization driver.

One iteration updates, in order: the auxiliaries (gamma, rho), the radar
filter u, the DFBS beams W and the surface block of the active mode.  Block
results are only accepted when the surrogate does not decrease, which makes
the surrogate (and therefore the sum rate) monotone across iterations even
when a solver stops early.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channels import ChannelSet, equivalent_channels
from .fp import fp_objective, update_gamma, update_rho
from .metrics import (BeamformingState, Noise, StarState, check_feasibility, radar_snr_worst,
                      ris_power, sum_rate)
from .scenario import Mode, ScenarioConfig
from .subproblems import (assemble_transmit_problem, solve_radar_filter, solve_star,
                          solve_transmit_beamforming)

RADAR_UNATTAINABLE = "radar SNR floor exceeds the full-power maximum"
BLOCKS = ("aux", "radar", "transmit", "star")
# surrogate decreases smaller than this (relative) are treated as round-off
ACCEPT_RTOL = 1e-12


@dataclass
class IterationRecord:
    iteration: int
    fp_objective: float
    sum_rate: float
    radar_snr: float
    slacks: dict[str, float]
    block_fp: dict[str, float]
    block_time: dict[str, float]
    delta: float
    flags: list[str] = field(default_factory=list)


@dataclass
class AoTrace:
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    failed: bool = False
    messages: list[str] = field(default_factory=list)
    initial_fp: float = float("nan")
    initial_sum_rate: float = float("nan")
    bf: BeamformingState | None = None
    star: StarState | None = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def sum_rates(self) -> np.ndarray:
        return np.array([r.sum_rate for r in self.records])

    @property
    def deltas(self) -> np.ndarray:
        return np.array([r.delta for r in self.records])

    @property
    def final_sum_rate(self) -> float:
        return self.records[-1].sum_rate if self.records else self.initial_sum_rate

    def block_sequence(self) -> np.ndarray:
        """Surrogate after every block update, starting from the initial point."""
        seq = [self.initial_fp]
        for r in self.records:
            seq += [r.block_fp[b] for b in BLOCKS]
        return np.array(seq)


TRACE_COLUMNS = (["iteration", "fp_objective", "sum_rate_bps_hz", "radar_snr", "delta"]
                 + [f"slack_{c}" for c in ("C1", "C2", "C3", "C4", "C5")]
                 + [f"fp_after_{b}" for b in BLOCKS] + [f"time_{b}_s" for b in BLOCKS]
                 + ["flags"])


def fmt(x: float) -> str:
    return f"{x:.12g}"


def write_trace(trace: AoTrace, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in trace.records:
            w.writerow([r.iteration, fmt(r.fp_objective), fmt(r.sum_rate), fmt(r.radar_snr),
                        fmt(r.delta)]
                       + [fmt(r.slacks.get(c, float("nan"))) for c in ("C1", "C2", "C3", "C4", "C5")]
                       + [fmt(r.block_fp[b]) for b in BLOCKS]
                       + [fmt(r.block_time[b]) for b in BLOCKS]
                       + [";".join(r.flags)])


# -- initialization ----------------------------------------------------------

def _matched_beams(H: np.ndarray, M: int) -> np.ndarray:
    users = H / np.maximum(np.linalg.norm(H, axis=1, keepdims=True), np.finfo(float).tiny)
    return np.hstack([users.T, np.eye(M) / np.sqrt(M)]).astype(complex)


def _scale_star(W: np.ndarray, star: StarState, channels: ChannelSet,
                sc: ScenarioConfig) -> StarState:
    if sc.mode is Mode.PASSIVE:
        return star
    p = ris_power(W, star, channels.G, sc.sigma_v_sq)
    c = np.sqrt(0.9 * sc.P_max_R / p)
    return StarState(c * star.a_r, c * star.a_t, star.phi_r, star.phi_t)


def initialize(scenario: ScenarioConfig, channels: ChannelSet,
               rng: np.random.Generator) -> tuple[BeamformingState, StarState, list[str]]:
    """Matched-filter user beams plus isotropic radar beams at 0.9 P_B; equal
    amplitudes with random phases scaled to 0.9 P_R.  Returns notes about
    constraints not met at the start (only the radar floor can fail)."""
    M, N, K = channels.M, channels.N, channels.K
    m_r, m_t = scenario.masks()
    phi_r = np.exp(2j * np.pi * rng.random(N))
    phi_t = np.exp(2j * np.pi * rng.random(N))
    amp = np.sqrt(0.45) if scenario.mode is Mode.PASSIVE else 1.0
    star = StarState(amp * m_r, amp * m_t, phi_r, phi_t)

    def normalized(W):
        return W * np.sqrt(0.9 * scenario.P_max_B / np.sum(np.abs(W) ** 2))

    W = normalized(_matched_beams(channels.h_d, M))
    star = _scale_star(W, star, channels, scenario)
    W = normalized(_matched_beams(equivalent_channels(channels, star.psi_r, star.psi_t), M))
    star = _scale_star(W, star, channels, scenario)
    u = (channels.h_dt / np.linalg.norm(channels.h_dt)).astype(complex)
    notes = []
    if radar_snr_worst(u, W, channels.h_dt, scenario.xi_sq, scenario.sigma_z_sq) < scenario.Gamma_t:
        # all radar columns along h_dt with just enough power (small margin)
        h2 = float(np.sum(np.abs(channels.h_dt) ** 2))
        need = scenario.Gamma_t * scenario.sigma_z_sq / (scenario.xi_sq * h2 ** 2)
        if need < scenario.P_max_B:
            p = min(1.05 * need, 0.5 * (need + scenario.P_max_B))
            total = max(0.9 * scenario.P_max_B, 0.5 * (p + scenario.P_max_B))
            W[:, K:] = np.outer(u, np.ones(M)) * np.sqrt(p / M)
            users = W[:, :K]
            W[:, :K] = users * np.sqrt((total - p) / np.sum(np.abs(users) ** 2))
            star = _scale_star(W, star, channels, scenario)
            notes.append("radar beams steered at target during initialization")
        else:
            notes.append(RADAR_UNATTAINABLE)
    noise = Noise.of(scenario)
    gamma = update_gamma(W, star, channels, noise)
    rho = update_rho(gamma, W, star, channels, noise)
    return BeamformingState(W, u, gamma, rho), star, notes


# -- main loop -----------------------------------------------------------------

@dataclass
class AoOptions:
    Q_max: int | None = None  # default: scenario.Q_max
    delta_th: float | None = None
    stop_on_delta: bool = True


def relative_change(r_prev: float, r: float) -> float:
    return abs(r_prev - r) / r if r != 0 else float("inf")


def run_ao(scenario: ScenarioConfig, channels: ChannelSet, mode: Mode | str | None = None,
           options: AoOptions | None = None, rng: np.random.Generator | None = None) -> AoTrace:
    """Run the alternating optimization; ``mode`` overrides the scenario's."""
    if mode is not None and Mode.parse(mode) is not scenario.mode:
        scenario = scenario.replace(mode=Mode.parse(mode))
    opts = options or AoOptions()
    q_max = opts.Q_max or scenario.Q_max
    delta_th = opts.delta_th or scenario.delta_th
    rng = rng if rng is not None else np.random.default_rng(scenario.seed)
    noise = Noise.of(scenario)

    bf, star, notes = initialize(scenario, channels, rng)
    trace = AoTrace(messages=list(notes))
    if RADAR_UNATTAINABLE in notes:
        # no beamformer meets the radar floor: the instance is infeasible
        trace.failed = True
        trace.bf, trace.star = bf, star
        trace.initial_sum_rate = sum_rate(bf.W, star, channels, noise)
        return trace

    def fp(bf_, star_):
        return fp_objective(bf_.gamma, bf_.rho, bf_.W, star_, channels, noise)

    def worse(new, old):
        return new < old - ACCEPT_RTOL * max(1.0, abs(old))

    trace.initial_fp = fp(bf, star)
    r_prev = sum_rate(bf.W, star, channels, noise)
    trace.initial_sum_rate = r_prev
    for t in range(1, q_max + 1):
        flags: list[str] = []
        times: dict[str, float] = {}
        block_fp: dict[str, float] = {}

        t0 = time.perf_counter()
        bf.gamma = update_gamma(bf.W, star, channels, noise)
        bf.rho = update_rho(bf.gamma, bf.W, star, channels, noise)
        times["aux"] = time.perf_counter() - t0
        block_fp["aux"] = fp(bf, star)

        t0 = time.perf_counter()
        u, degenerate = solve_radar_filter(bf.W, channels.h_dt, scenario.sigma_z_sq)
        bf.u = u
        if degenerate:
            flags.append("radar_degenerate")
        times["radar"] = time.perf_counter() - t0
        block_fp["radar"] = fp(bf, star)

        t0 = time.perf_counter()
        data = assemble_transmit_problem(bf, star, channels, scenario)
        W_new, st = solve_transmit_beamforming(data)
        cand = BeamformingState(W_new, bf.u, bf.gamma, bf.rho)
        if not st.accepted:
            flags.append("transmit_rejected:" + st.message)
        elif worse(fp(cand, star), block_fp["radar"]):
            flags.append("transmit_kept_previous")
        else:
            bf = cand
        times["transmit"] = time.perf_counter() - t0
        block_fp["transmit"] = fp(bf, star)

        t0 = time.perf_counter()
        star_new, st = solve_star(bf, star, channels, scenario)
        if not st.accepted:
            flags.append("star_rejected:" + st.message)
        elif worse(fp(bf, star_new), block_fp["transmit"]):
            flags.append("star_kept_previous")
        else:
            star = star_new
        if st.degenerate:
            flags.append("star_degenerate")
        times["star"] = time.perf_counter() - t0
        block_fp["star"] = fp(bf, star)

        r = sum_rate(bf.W, star, channels, noise)
        delta = relative_change(r_prev, r)
        rep = check_feasibility(bf, star, scenario, channels)
        trace.records.append(IterationRecord(
            iteration=t, fp_objective=block_fp["star"], sum_rate=r,
            radar_snr=radar_snr_worst(bf.u, bf.W, channels.h_dt, scenario.xi_sq, scenario.sigma_z_sq),
            slacks=dict(rep.relative), block_fp=block_fp, block_time=times, delta=delta,
            flags=flags))
        r_prev = r
        if any(f.startswith(("transmit_rejected", "star_rejected")) for f in flags) and \
                "no strictly feasible" in " ".join(flags):
            trace.failed = True
            trace.messages.append(f"iteration {t}: " + "; ".join(flags))
            break
        if opts.stop_on_delta and delta < delta_th:
            trace.converged = True
            break
    if not opts.stop_on_delta and trace.records and not trace.failed:
        trace.converged = trace.records[-1].delta < delta_th
    trace.bf, trace.star = bf, star
    return trace
