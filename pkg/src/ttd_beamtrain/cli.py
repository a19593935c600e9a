"""``ttd-beamtrain`` command line entry point.

The ``--config`` file holds the system keys read by :func:`load_config` plus an
optional ``experiment`` mapping::

    experiment:
      snr_db: [-10, 0, 10, 20, 30]
      trials: 500
      seed: 0
      pilot_counts: [8, 16, 32, 64]    # sweep
      ttd_beams: 32                    # benchmark / train
      k_values: [4, 8, 16, 32]         # benchmark
      rb_half_width: 6
      epsilon: 0.6                     # design
      grid_size: 4096
      pulse: {kind: ideal-sinc, rolloff: 0.25, span: 32}
      paths: {n_paths: 1, delay_range: [0, 0]}

Command line flags override the file.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import harness
from .arraylab import DesignPoint, in_design_subset, min_max_gain, required_subcarriers
from .channel import PathSpec, PulseShape, aligned_tx_beamformer, load_channel
from .config import config_from_dict
from .exceptions import DelayTooSmall, ParseError, TTDError
from .phy import pilot_values

COMMANDS = ("beampattern", "design", "train", "sweep", "benchmark", "verify")
_EXPERIMENT_KEYS = {"snr_db", "trials", "seed", "pilot_counts", "ttd_beams", "k_values",
                    "rb_half_width", "epsilon", "grid_size", "pulse", "paths"}


def _read_config(path):
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ParseError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: configuration must be a mapping")
    exp = data.get("experiment") or {}
    if not isinstance(exp, dict):
        raise ParseError("experiment section must be a mapping", field="experiment")
    unknown = set(exp) - _EXPERIMENT_KEYS
    if unknown:
        raise ParseError(f"unknown experiment keys: {sorted(unknown)}", field="experiment")
    return config_from_dict(data), exp


def _build_spec(kind, cfg, exp, args) -> harness.ExperimentSpec:
    kw = {}
    for key in ("snr_db", "pilot_counts", "k_values"):
        if key in exp:
            kw[key] = tuple(float(v) if key == "snr_db" else int(v) for v in exp[key])
    for key in ("trials", "seed", "ttd_beams", "rb_half_width", "grid_size"):
        if key in exp:
            kw[key] = int(exp[key])
    if "epsilon" in exp:
        kw["epsilon"] = float(exp["epsilon"])
    if "pulse" in exp:
        kw["pulse"] = PulseShape(**exp["pulse"])
    if "paths" in exp:
        p = dict(exp["paths"])
        for key in ("delay_range", "angle_range"):
            if key in p:
                p[key] = tuple(float(v) for v in p[key])
        kw["path_spec"] = PathSpec(**p)
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.trials is not None:
        kw["trials"] = args.trials
    if args.snr_db is not None:
        kw["snr_db"] = tuple(args.snr_db)
    if args.pulse is not None:
        kw["pulse"] = PulseShape(args.pulse)
    if args.channel_file:
        kw["channel"] = load_channel(args.channel_file)
    return harness.ExperimentSpec(kind, cfg, out=args.out, **kw)


def _cmd_beampattern(cfg, spec, args):
    harness.write_csv(harness.run_beampattern(cfg, grid_size=spec.grid_size),
                      harness.PATTERN_COLUMNS, args.out)


def _cmd_design(cfg, spec, args):
    if args.scan:
        harness.write_csv(harness.run_design_scan(spec), harness.DESIGN_COLUMNS, args.out)
        return
    dp = DesignPoint(cfg.delta_tau, cfg.mtot, spec.epsilon)

    def required(relaxed):
        try:
            return required_subcarriers(cfg.delta_tau, cfg.fc, cfg.bw, spec.epsilon, cfg.nrx, relaxed)
        except DelayTooSmall:
            return ""

    row = {
        "delta_tau": cfg.delta_tau, "mtot": cfg.mtot, "epsilon": spec.epsilon,
        "in_ss_strict": in_design_subset(dp, cfg.fc, cfg.bw, cfg.nrx),
        "in_ss_relaxed": in_design_subset(dp, cfg.fc, cfg.bw, cfg.nrx, relaxed=True),
        "required_strict": required(False),
        "required_relaxed": required(True),
        "min_max_gain": min_max_gain(cfg, grid_size=spec.grid_size),
        "floor": (1.0 - spec.epsilon) * cfg.nrx,
    }
    harness.write_csv([row], tuple(row), args.out)


def _cmd_train(cfg, spec, args):
    """One trial of TTD one-shot training at the first SNR point."""
    record = harness.train_one(spec)
    sys.stdout.write(json.dumps(record, indent=2) + "\n")
    if args.out:
        cols = ("snr_db", "m_best", "aoa_estimate_rad", "aoa_true_rad", "symbols_used", "post_gain")
        harness.write_csv([record], cols, args.out)


def _cmd_sweep(cfg, spec, args):
    harness.write_csv(harness.run_los_sweep(spec), harness.LOS_COLUMNS, args.out)


def _cmd_benchmark(cfg, spec, args):
    harness.write_csv(harness.run_benchmark(spec), harness.BENCH_COLUMNS, args.out)


def _cmd_verify(cfg, spec, args):
    if spec.channel is not None:
        # the configured system against the given channel, all subcarriers active
        v = aligned_tx_beamformer(spec.channel, cfg, harness._strongest_path(spec.channel))
        X = pilot_values(cfg, np.arange(cfg.mtot), 0).values
        rows = [harness.verify_row(0, cfg, spec.channel, spec.pulse, v, X)]
    else:
        rows = harness.run_verify(spec)
    if args.out:
        harness.write_csv(rows, harness.VERIFY_COLUMNS, args.out)
    worst = max(r["max_rel_error"] for r in rows)
    sys.stdout.write(f"max_rel_error {worst:.17g} over {len(rows)} trials\n")


_KINDS = {"beampattern": "beampattern", "design": "design-scan", "train": "los-sweep",
          "sweep": "los-sweep", "benchmark": "benchmark", "verify": "verify"}


_HANDLERS = {"beampattern": _cmd_beampattern, "design": _cmd_design, "train": _cmd_train,
             "sweep": _cmd_sweep, "benchmark": _cmd_benchmark, "verify": _cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ttd-beamtrain",
                                     description="TTD array beam training over CP-OFDM")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="YAML system/experiment file")
    parser.add_argument("--channel-file", help="channel CSV; replaces random channels")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="output CSV (default stdout)")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--snr-db", type=float, nargs="+")
    parser.add_argument("--pulse", choices=("ideal-sinc", "raised-cosine", "bandlimited"))
    parser.add_argument("--scan", action="store_true", help="design: brute-force (delta_tau, M) grid")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, exp = _read_config(args.config)
        spec = _build_spec(_KINDS[args.command], cfg, exp, args)
        _HANDLERS[args.command](cfg, spec, args)
    except (TTDError, ValueError, TypeError, OSError) as exc:
        print(f"ttd-beamtrain: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
