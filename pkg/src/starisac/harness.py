"""Monte-Carlo sweeps and convergence curves.

Outputs of a sweep (all floats with 12 significant digits):

``results.csv``   one row per (value, mode, trial); columns ``RESULT_COLUMNS``
``summary.csv``   lower median and quartiles of the final sum rate per
                  (value, mode); trials with status other than ok are left out
``plot.dat``      gnuplot layout: one block per mode (value, median, q25, q75),
                  blocks separated by two blank lines (use ``index``)
``timings.csv``   wall time per trial, kept apart so the other files are
                  byte-identical across reruns

A convergence run (parameter ``iterations``) writes ``convergence.csv`` with
one row per (mode, trial, iteration) instead of ``results.csv``.
"""
from __future__ import annotations

import configparser
import csv
import math
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .ao import RADAR_UNATTAINABLE, AoOptions, fmt, run_ao
from .channels import generate_channel_set
from .metrics import check_feasibility
from .scenario import ConfigError, Mode, ScenarioConfig, build_scenario, desk_scenario

PARAMETERS = ("total_power_dBm", "Gamma_t_dB", "N", "ris_bs_distance_m", "iterations")
RESULT_COLUMNS = ("parameter", "value", "mode", "trial", "seed", "status", "sum_rate",
                  "radar_snr", "fp_objective", "iterations", "converged", "feasible", "message")
SUMMARY_COLUMNS = ("parameter", "value", "mode", "trials_ok", "median", "q25", "q75")
CONVERGENCE_COLUMNS = ("mode", "trial", "seed", "iteration", "sum_rate")

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base: int, point: int, trial: int) -> int:
    """Seed for (sweep point, trial): three chained splitmix64 rounds."""
    s = _splitmix64(base & _MASK64)
    s = _splitmix64(s ^ (point & _MASK64))
    return _splitmix64(s ^ (trial & _MASK64)) >> 1  # non-negative int63


@dataclass(frozen=True)
class ModeChoice:
    """A curve of the sweep: operating mode plus phase solver."""

    mode: Mode
    phase_solver: str = "MM"

    @property
    def label(self) -> str:
        return self.mode.value if self.phase_solver == "MM" else f"{self.mode.value}-{self.phase_solver}"

    @classmethod
    def parse(cls, text: str) -> "ModeChoice":
        parts = text.strip().upper().split("-")
        if len(parts) > 2 or (len(parts) == 2 and parts[1] not in ("MM", "CCM")):
            raise ConfigError(f"modes: cannot parse {text!r}")
        return cls(Mode.parse(parts[0]), parts[1] if len(parts) == 2 else "MM")


@dataclass
class SweepSpec:
    parameter: str
    values: list[float]
    modes: list[ModeChoice]
    trials: int = 20
    base: ScenarioConfig = field(default_factory=desk_scenario)
    out: Path | None = None
    base_seed: int = 0
    # common random numbers: the same channels at every sweep value
    matched: bool = True

    def __post_init__(self) -> None:
        if self.parameter not in PARAMETERS:
            raise ConfigError(f"parameter: must be one of {', '.join(PARAMETERS)}")
        if not self.values:
            raise ConfigError("values: empty value list")
        if self.trials < 1:
            raise ConfigError("trials: need at least one trial")
        if not self.modes:
            raise ConfigError("modes: empty mode list")

    def scenario_at(self, value: float, choice: ModeChoice) -> ScenarioConfig:
        changes: dict[str, Any] = {"mode": choice.mode, "phase_solver": choice.phase_solver}
        p = self.parameter
        if p == "total_power_dBm":
            changes["P_total_dBm"] = float(value)
        elif p == "Gamma_t_dB":
            changes["Gamma_t_dB"] = float(value)
        elif p == "N":
            changes["N"] = int(value)
        elif p == "ris_bs_distance_m":
            x, _, z = self.base.ris_pos
            changes["ris_pos"] = (x, float(value), z)
        elif p == "iterations":
            changes["Q_max"] = int(value)
        return self.base.replace(**changes)

    def seed(self, point: int, trial: int) -> int:
        return derive_seed(self.base_seed, 0 if self.matched else point, trial)


def parse_sweep_spec(text: str) -> SweepSpec:
    """Read a ``[sweep]`` section (parameter, values, modes, trials, seed,
    matched) and an optional ``[scenario]`` section overriding the desk
    defaults."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"sweep spec does not parse: {exc}") from None
    if "sweep" not in cp:
        raise ConfigError("missing [sweep] section")
    sw = cp["sweep"]
    raw = dict(M=4, N=16, K_r=2, K_t=2)
    if "scenario" in cp:
        raw.update(dict(cp["scenario"]))
    try:
        values = [float(v) for v in sw.get("values", "").replace(",", " ").split()]
        trials = int(sw.get("trials", "20"))
        base_seed = int(sw.get("seed", "0"))
        matched = sw.getboolean("matched", True)
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None
    modes = [ModeChoice.parse(m) for m in sw.get("modes", "UED").replace(",", " ").split()]
    return SweepSpec(parameter=sw.get("parameter", "").strip(), values=values, modes=modes,
                     trials=trials, base=build_scenario(raw), base_seed=base_seed,
                     matched=matched)


# -- single trial ---------------------------------------------------------------

@dataclass
class TrialResult:
    point: int
    value: float
    mode: str
    trial: int
    seed: int
    status: str
    sum_rate: float = math.nan
    radar_snr: float = math.nan
    fp_objective: float = math.nan
    iterations: int = 0
    converged: bool = False
    feasible: bool = False
    message: str = ""
    wall_s: float = 0.0
    curve: list[float] = field(default_factory=list)


def run_trial(sc: ScenarioConfig, seed: int, options: AoOptions | None = None):
    """Channels and initialization both derive from ``seed``; the mode does
    not enter, so curves at one seed share channels."""
    ss = np.random.SeedSequence(seed)
    ch_rng, init_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    ch = generate_channel_set(sc, ch_rng)
    return run_ao(sc, ch, options=options, rng=init_rng), ch


def _run_job(job: tuple) -> TrialResult:
    point, value, choice, trial, seed, sc, options = job
    t0 = time.perf_counter()
    res = TrialResult(point, value, choice.label, trial, seed, "ok")
    try:
        tr, ch = run_trial(sc, seed, options)
        last = tr.records[-1] if tr.records else None
        res.sum_rate = tr.final_sum_rate
        res.radar_snr = last.radar_snr if last else math.nan
        res.fp_objective = last.fp_objective if last else math.nan
        res.iterations = tr.iterations
        res.converged = tr.converged
        res.feasible = check_feasibility(tr.bf, tr.star, sc, ch).feasible
        res.curve = [r.sum_rate for r in tr.records]
        if tr.failed:
            res.status = "infeasible" if RADAR_UNATTAINABLE in tr.messages else "failed"
        res.message = " | ".join(tr.messages)
    except Exception as exc:  # recorded per row; the sweep goes on
        res.status = "error"
        res.message = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        res.message += " @ " + traceback.extract_tb(exc.__traceback__)[-1].name
    res.wall_s = time.perf_counter() - t0
    return res


def _jobs(spec: SweepSpec, options: AoOptions | None):
    for point, value in enumerate(spec.values):
        for choice in spec.modes:
            sc = spec.scenario_at(value, choice)
            for trial in range(spec.trials):
                yield (point, value, choice, trial, spec.seed(point, trial), sc, options)


def _execute(spec: SweepSpec, jobs: int, options: AoOptions | None) -> list[TrialResult]:
    todo = list(_jobs(spec, options))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job, todo, chunksize=1))
    else:
        results = [_run_job(j) for j in todo]
    order = {c.label: i for i, c in enumerate(spec.modes)}
    return sorted(results, key=lambda r: (r.point, order[r.mode], r.trial))


# -- summaries --------------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    value: float
    mode: str
    trials_ok: int
    median: float
    q25: float
    q75: float


def order_stats(x: np.ndarray) -> tuple[float, float, float]:
    """Lower quartile, median and upper quartile as sample values (the
    "lower" percentile rule), so the printed summary equals printed rows."""
    q25, med, q75 = np.percentile(x, [25, 50, 75], method="lower")
    return float(q25), float(med), float(q75)


def summarize(results: list[TrialResult], modes: list[str]) -> list[SummaryRow]:
    rows = []
    values = sorted({(r.point, r.value) for r in results})
    for point, value in values:
        for mode in modes:
            x = np.array([r.sum_rate for r in results
                          if r.point == point and r.mode == mode and r.status == "ok"])
            if x.size:
                q25, med, q75 = order_stats(x)
            else:
                q25 = med = q75 = math.nan
            rows.append(SummaryRow(value, mode, int(x.size), float(med), float(q25), float(q75)))
    return rows


def _fmt_value(v: float) -> str:
    return fmt(float(v))


def write_results(path: Path, parameter: str, results: list[TrialResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in results:
            w.writerow([parameter, _fmt_value(r.value), r.mode, r.trial, r.seed, r.status,
                        fmt(r.sum_rate), fmt(r.radar_snr), fmt(r.fp_objective), r.iterations,
                        int(r.converged), int(r.feasible), r.message])


def write_summary(path: Path, parameter: str, rows: list[SummaryRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in rows:
            w.writerow([parameter, _fmt_value(s.value), s.mode, s.trials_ok,
                        fmt(s.median), fmt(s.q25), fmt(s.q75)])


def write_gnuplot(path: Path, parameter: str, rows: list[SummaryRow], modes: list[str]) -> None:
    blocks = []
    for mode in modes:
        lines = [f"# mode {mode}", f"# {parameter} median q25 q75"]
        lines += [" ".join([_fmt_value(s.value), fmt(s.median), fmt(s.q25), fmt(s.q75)])
                  for s in rows if s.mode == mode]
        blocks.append("\n".join(lines))
    path.write_text("\n\n\n".join(blocks) + "\n")


def write_timings(path: Path, results: list[TrialResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("value", "mode", "trial", "wall_s"))
        for r in results:
            w.writerow([_fmt_value(r.value), r.mode, r.trial, fmt(r.wall_s)])


@dataclass
class SweepOutcome:
    results: list[TrialResult]
    summary: list[SummaryRow]

    def medians(self, mode: str) -> np.ndarray:
        return np.array([s.median for s in self.summary if s.mode == mode])

    @property
    def failures(self) -> list[TrialResult]:
        return [r for r in self.results if r.status != "ok"]


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepOutcome:
    """Run every (value, mode, trial) and write the output files if
    ``spec.out`` is set."""
    if spec.parameter == "iterations":
        return run_convergence(spec, jobs)
    results = _execute(spec, jobs, None)
    labels = [c.label for c in spec.modes]
    summary = summarize(results, labels)
    if spec.out is not None:
        out = Path(spec.out)
        out.mkdir(parents=True, exist_ok=True)
        write_results(out / "results.csv", spec.parameter, results)
        write_summary(out / "summary.csv", spec.parameter, summary)
        write_gnuplot(out / "plot.dat", spec.parameter, summary, labels)
        write_timings(out / "timings.csv", results)
    return SweepOutcome(results, summary)


def run_convergence(spec: SweepSpec, jobs: int = 1) -> SweepOutcome:
    """Sum rate against iteration index, one curve per mode.

    The run uses Q_max = max(values); a curve that stops early is held at
    its final value.  The summary reports the curve medians at each listed
    iteration index.
    """
    if spec.parameter != "iterations":
        raise ConfigError("run_convergence: parameter must be 'iterations'")
    q_max = int(max(spec.values))
    conv_spec = SweepSpec("iterations", [q_max], spec.modes, spec.trials, spec.base, spec.out,
                          spec.base_seed, spec.matched)
    results = _execute(conv_spec, jobs, AoOptions(Q_max=q_max))
    labels = [c.label for c in spec.modes]
    summary = []
    for mode in labels:
        curves = [r.curve for r in results if r.mode == mode and r.status == "ok" and r.curve]
        for v in spec.values:
            it = int(v)
            x = np.array([c[min(it, len(c)) - 1] for c in curves])
            if x.size:
                q25, med, q75 = order_stats(x)
            else:
                q25 = med = q75 = math.nan
            summary.append(SummaryRow(float(it), mode, int(x.size), float(med), float(q25), float(q75)))
    if spec.out is not None:
        out = Path(spec.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "convergence.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CONVERGENCE_COLUMNS)
            for r in results:
                for i, v in enumerate(r.curve, start=1):
                    w.writerow([r.mode, r.trial, r.seed, i, fmt(v)])
        write_summary(out / "summary.csv", "iterations", summary)
        write_gnuplot(out / "plot.dat", "iterations", summary, labels)
        write_timings(out / "timings.csv", results)
    return SweepOutcome(results, summary)
