"""Monte Carlo experiment drivers and CSV output.

Per-trial randomness comes from ``numpy.random.SeedSequence(master_seed,
spawn_key=key)``. The channel of trial ``t`` uses key ``(0, t)`` and is shared
by every SNR point, so SNR curves are paired. The noise of SNR point ``s`` in
trial ``t`` uses key ``(1, s, t)`` and is shared by every pilot-count setting.
Identical specs and seeds therefore produce byte-identical CSV files.
"""
from __future__ import annotations

import csv
import io
import sys
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .arraylab import (
    DEFAULT_GRID,
    DesignPoint,
    beam_pattern,
    build_lut,
    in_design_subset,
    min_max_gain,
    ttd_combiner,
)
from .channel import (
    MultipathChannel,
    PathSpec,
    PulseShape,
    aligned_tx_beamformer,
    channel_times_v,
    generate_paths,
)
from .config import SystemConfig, ValidatedConfig, make_config, subcarrier_frequency
from .oracle import verify_proposition1
from .phy import RB_HALF_WIDTH, complex_noise, pilot_values, resource_blocks, select_pilot_subcarriers
from .training import (
    block_matrix,
    estimate_aoa,
    n0_for_snr,
    paa_dft_training,
    phased_array_combiner,
    post_training_gain,
    se_from_hv,
)

CHANNEL_STREAM = 0
NOISE_STREAM = 1

EXPERIMENT_KINDS = ("beampattern", "design-scan", "los-sweep", "benchmark", "verify")

LOS_COLUMNS = ("snr_db", "trial", "n_pilots", "symbols_used", "aoa_true", "aoa_est", "post_gain", "n0")
BENCH_COLUMNS = ("snr_db", "trial", "method", "k", "symbols_used", "aoa_true", "aoa_est",
                 "post_gain", "se_bps_hz")
DESIGN_COLUMNS = ("delta_tau", "mtot", "in_ss_strict", "in_ss_relaxed", "min_max_gain", "pass")
PATTERN_COLUMNS = ("theta_rad", "m", "f_m_hz", "gain")
VERIFY_COLUMNS = ("trial", "mtot", "n_paths", "ntx", "nrx", "max_rel_error", "max_elem_rel_error")


def trial_rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


@dataclass
class ExperimentSpec:
    kind: str
    config: Optional[ValidatedConfig] = None
    snr_db: Sequence[float] = (-10.0, 0.0, 10.0, 20.0, 30.0)
    trials: int = 500
    seed: int = 0
    out: Optional[str] = None
    pilot_counts: Sequence[int] = (8, 16, 32, 64)
    ttd_beams: int = 32
    k_values: Sequence[int] = (4, 8, 16, 32)
    rb_half_width: int = RB_HALF_WIDTH
    pulse: Optional[PulseShape] = None
    path_spec: PathSpec = field(default_factory=PathSpec)
    channel: Optional[MultipathChannel] = None
    epsilon: float = 0.6
    grid_size: int = DEFAULT_GRID
    delta_tau_values: Optional[Sequence[float]] = None
    m_values: Sequence[int] = tuple(range(4, 65))
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not np.all(np.isfinite(self.snr_db)):
            raise ValueError("SNR grid must be finite")
        if self.pulse is None:
            # only the periodic-sinc pulse makes the two routes agree with fractional delays
            self.pulse = PulseShape("bandlimited") if self.kind == "verify" else PulseShape()


def _channel_for_trial(spec: ExperimentSpec, trial: int) -> MultipathChannel:
    if spec.channel is not None:
        return spec.channel
    return generate_paths(trial_rng(spec.seed, CHANNEL_STREAM, trial), spec.path_spec)


def _strongest_path(ch: MultipathChannel) -> int:
    return int(np.argmax(np.abs(ch.gains)))


class _TTDSounder:
    """Precomputed one-shot training state for one pilot count."""

    def __init__(self, cfg, n_beams, half_width):
        self.pilots = select_pilot_subcarriers(cfg.mtot, n_beams)
        self.lut = build_lut(cfg, self.pilots)
        self.B, _ = block_matrix(resource_blocks(self.pilots, cfg.mtot, half_width or 0), cfg.mtot)
        self.X = pilot_values(cfg, self.pilots, half_width).values

    def train(self, clean, noise):
        y = clean * self.X + noise
        return estimate_aoa((np.abs(y) ** 2) @ self.B.T, self.lut)


def train_one(spec: ExperimentSpec, trial: int = 0, snr_index: int = 0) -> dict:
    """Single TTD one-shot training run, seeded exactly like the sweep's matching cell."""
    cfg = spec.config
    ch = _channel_for_trial(spec, trial)
    lead = _strongest_path(ch)
    v = aligned_tx_beamformer(ch, cfg, lead)
    hv = channel_times_v(cfg, ch, spec.pulse, v)
    clean = np.sum(np.conj(ttd_combiner(cfg, np.arange(cfg.mtot))) * hv, axis=1)
    target = float(spec.snr_db[snr_index])
    n0 = n0_for_snr(float(np.sum(np.abs(hv) ** 2)), cfg, target)
    rng = trial_rng(spec.seed, NOISE_STREAM, snr_index, trial)
    noise = complex_noise(rng, cfg.mtot, n0 * cfg.bw / (2.0 * cfg.mtot))
    res = _TTDSounder(cfg, spec.ttd_beams, spec.rb_half_width).train(clean, noise)
    record = res.as_record()
    true_aoa = float(ch.paths[lead].aoa)
    record.update(snr_db=target, aoa_true_rad=true_aoa,
                  post_gain=post_training_gain(res.aoa_estimate, true_aoa, cfg.nrx, cfg.fc))
    return record


def run_los_sweep(spec: ExperimentSpec) -> list:
    """One-shot TTD training on LoS channels for several pilot counts and SNRs."""
    cfg = spec.config
    sounders = {p: _TTDSounder(cfg, p, spec.rb_half_width) for p in spec.pilot_counts}
    w_conj = np.conj(ttd_combiner(cfg, np.arange(cfg.mtot)))
    rows = []
    for trial in range(spec.trials):
        ch = _channel_for_trial(spec, trial)
        v = aligned_tx_beamformer(ch, cfg, _strongest_path(ch))
        true_aoa = ch.paths[_strongest_path(ch)].aoa
        hv = channel_times_v(cfg, ch, spec.pulse, v)
        signal = float(np.sum(np.abs(hv) ** 2))
        clean = np.sum(w_conj * hv, axis=1)
        for s_idx, target in enumerate(spec.snr_db):
            n0 = n0_for_snr(signal, cfg, target)
            var = n0 * cfg.bw / (2.0 * cfg.mtot)
            noise = complex_noise(trial_rng(spec.seed, NOISE_STREAM, s_idx, trial), cfg.mtot, var)
            for p in spec.pilot_counts:
                res = sounders[p].train(clean, noise)
                rows.append({
                    "snr_db": float(target), "trial": trial, "n_pilots": p,
                    "symbols_used": res.symbols_used, "aoa_true": true_aoa,
                    "aoa_est": res.aoa_estimate,
                    "post_gain": post_training_gain(res.aoa_estimate, true_aoa, cfg.nrx, cfg.fc),
                    "n0": n0,
                })
    rows.sort(key=lambda r: (r["snr_db"], r["trial"], r["n_pilots"]))
    return rows


def run_benchmark(spec: ExperimentSpec) -> list:
    """TTD one-shot training against a K-symbol phased-array DFT sweep.

    Both methods use the same resource blocks and the same per-symbol pilot
    power; spectral efficiency uses the trained frequency-flat combiner.
    """
    cfg = spec.config
    sounder = _TTDSounder(cfg, spec.ttd_beams, spec.rb_half_width)
    X = pilot_values(cfg, sounder.pilots, spec.rb_half_width)
    w_conj = np.conj(ttd_combiner(cfg, np.arange(cfg.mtot)))
    rows = []
    for trial in range(spec.trials):
        ch = _channel_for_trial(spec, trial)
        lead = _strongest_path(ch)
        v = aligned_tx_beamformer(ch, cfg, lead)
        true_aoa = ch.paths[lead].aoa
        hv = channel_times_v(cfg, ch, spec.pulse, v)
        signal = float(np.sum(np.abs(hv) ** 2))
        clean = np.sum(w_conj * hv, axis=1)
        for s_idx, target in enumerate(spec.snr_db):
            n0 = n0_for_snr(signal, cfg, target)
            cfg_n = cfg.replace(n0=n0)
            rng = trial_rng(spec.seed, NOISE_STREAM, s_idx, trial)
            noise = complex_noise(rng, cfg.mtot, cfg_n.noise_variance)
            results = [("ttd", spec.ttd_beams, sounder.train(clean, noise))]
            for K in spec.k_values:
                results.append(("paa", K, paa_dft_training(cfg_n, ch, spec.pulse, v, K, rng, X)))
            for method, k, res in results:
                rows.append({
                    "snr_db": float(target), "trial": trial, "method": method, "k": k,
                    "symbols_used": res.symbols_used, "aoa_true": true_aoa,
                    "aoa_est": res.aoa_estimate,
                    "post_gain": post_training_gain(res.aoa_estimate, true_aoa, cfg.nrx, cfg.fc),
                    "se_bps_hz": se_from_hv(cfg_n, hv, phased_array_combiner(res.aoa_estimate, cfg.nrx, cfg.fc)),
                })
    rows.sort(key=lambda r: (r["snr_db"], r["trial"]))
    return rows


def _scan_config(base: SystemConfig, delta_tau: float, mtot: int) -> SystemConfig:
    # Odd subcarrier counts are legal design candidates, so skip validation.
    return SystemConfig(fc=base.fc, bw=base.bw, mtot=int(mtot), delta_tau=float(delta_tau),
                        nrx=base.nrx, ntx=1, ncp=0)


def default_delay_grid(bw: float, points: int = 31) -> np.ndarray:
    return np.linspace(1.0 / bw, 4.0 / bw, points)


def run_design_scan(spec: ExperimentSpec) -> list:
    """Brute-force coverage check of every (delta_tau, M) grid point."""
    cfg = spec.config
    taus = default_delay_grid(cfg.bw) if spec.delta_tau_values is None else spec.delta_tau_values
    floor = (1.0 - spec.epsilon) * cfg.nrx
    rows = []
    for tau in taus:
        for M in spec.m_values:
            dp = DesignPoint(float(tau), int(M), spec.epsilon)
            mmg = min_max_gain(_scan_config(cfg, tau, M), None, spec.grid_size)
            rows.append({
                "delta_tau": float(tau), "mtot": int(M),
                "in_ss_strict": in_design_subset(dp, cfg.fc, cfg.bw, cfg.nrx, relaxed=False),
                "in_ss_relaxed": in_design_subset(dp, cfg.fc, cfg.bw, cfg.nrx, relaxed=True),
                "min_max_gain": mmg,
                "pass": bool(mmg >= floor - spec.tolerance * cfg.nrx),
            })
    return rows


def run_beampattern(cfg: SystemConfig, pilot_set=None, grid_size: int = DEFAULT_GRID) -> list:
    grid, pilots, g = beam_pattern(cfg, pilot_set, grid_size)
    freqs = np.atleast_1d(subcarrier_frequency(cfg, pilots))
    return [
        {"theta_rad": float(th), "m": int(m), "f_m_hz": float(f), "gain": float(g[i, j])}
        for i, (m, f) in enumerate(zip(pilots, freqs))
        for j, th in enumerate(grid)
    ]


def random_verify_case(rng: np.random.Generator, mtot_choices=(64, 128), max_paths: int = 5,
                       max_ntx: int = 4, max_nrx: int = 8, pulse: Optional[PulseShape] = None):
    """Random configuration with fractional delays that satisfies the CP condition."""
    fc, bw = 28e9, 400e6
    mtot = int(rng.choice(mtot_choices))
    ncp = mtot // 4
    nrx = int(rng.integers(1, max_nrx + 1))
    ntx = int(rng.integers(1, max_ntx + 1))
    # keep the TTD aperture within half the CP so paths have room
    top = 2.5 if nrx == 1 else min(2.5, 0.5 * ncp / (nrx - 1))
    delta_tau = float(rng.uniform(0.6, top)) / bw
    budget = ncp / bw - (nrx - 1) * delta_tau - (ntx + nrx) / (2.0 * fc)
    L = int(rng.integers(1, max_paths + 1))
    cfg = make_config(fc=fc, bw=bw, mtot=mtot, ncp=ncp, ntx=ntx, nrx=nrx, delta_tau=delta_tau)
    ch = generate_paths(rng, PathSpec(n_paths=L, delay_range=(0.0, 0.9 * budget)))
    n_pilots = int(rng.integers(1, mtot + 1))
    pilots = np.sort(rng.choice(mtot, n_pilots, replace=False))
    X = np.zeros(mtot, dtype=complex)
    X[pilots] = np.exp(2j * np.pi * rng.random(n_pilots)) * np.sqrt(mtot / n_pilots)
    v = np.exp(2j * np.pi * rng.random(ntx))
    return cfg, ch, pulse or PulseShape("bandlimited"), v, X


def verify_row(trial, cfg, ch, pulse, v, X) -> dict:
    return {"trial": trial, "mtot": cfg.mtot, "n_paths": len(ch), "ntx": cfg.ntx, "nrx": cfg.nrx,
            "max_rel_error": verify_proposition1(cfg, ch, pulse, v, X),
            "max_elem_rel_error": verify_proposition1(cfg, ch, pulse, v, X, elementwise=True)}


def run_verify(spec: ExperimentSpec) -> list:
    """Randomised frequency-domain vs time-domain equivalence trials."""
    rows = []
    for trial in range(spec.trials):
        rng = trial_rng(spec.seed, CHANNEL_STREAM, trial)
        cfg, ch, pulse, v, X = random_verify_case(rng, pulse=spec.pulse)
        rows.append(verify_row(trial, cfg, ch, pulse, v, X))
    return rows


def run_experiment(spec: ExperimentSpec) -> tuple:
    """Dispatch on ``spec.kind``; returns ``(columns, rows)``."""
    if spec.kind == "los-sweep":
        return LOS_COLUMNS, run_los_sweep(spec)
    if spec.kind == "benchmark":
        return BENCH_COLUMNS, run_benchmark(spec)
    if spec.kind == "design-scan":
        return DESIGN_COLUMNS, run_design_scan(spec)
    if spec.kind == "beampattern":
        return PATTERN_COLUMNS, run_beampattern(spec.config, grid_size=spec.grid_size)
    return VERIFY_COLUMNS, run_verify(spec)


# -- summaries and CSV --------------------------------------------------------

def median_by(rows: Iterable[dict], value: str, *keys: str) -> dict:
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r[value])
    return {k: float(np.median(v)) for k, v in sorted(groups.items())}


def mean_by(rows: Iterable[dict], value: str, *keys: str) -> dict:
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r[value])
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def format_csv(rows: Iterable[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def write_csv(rows: Iterable[dict], columns: Sequence[str], path=None) -> None:
    text = format_csv(rows, columns)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)
