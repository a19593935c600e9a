"""System configuration: carrier, OFDM numerology, array sizes and TTD spacing.

The sample duration is always derived from the bandwidth (``Ts = 1 / bw``) and
is never stored, so ``Ts * bw == 1`` holds by construction.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import yaml

from .exceptions import (
    ConfigError,
    EmptyPilotSet,
    IndexOutOfRange,
    InvalidDelaySpacing,
    InvalidPilotSet,
    OddSubcarrierCount,
    ParseError,
)

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class SystemConfig:
    """Raw (unchecked) system parameters.

    ``pilot_set`` of None means every subcarrier is a pilot. ``ncp`` of None
    defaults to ``mtot // 8``.
    """

    fc: float
    bw: float
    mtot: int
    delta_tau: float
    nrx: int
    ntx: int = 1
    ncp: Optional[int] = None
    n0: float = 1.0
    pilot_set: Optional[tuple] = None

    @property
    def ts(self) -> float:
        return 1.0 / self.bw

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.fc

    @property
    def noise_variance(self) -> float:
        """Per-subcarrier frequency-domain noise variance ``N0*BW/(2*Mtot)``."""
        return self.n0 * self.bw / (2.0 * self.mtot)

    @property
    def pilots(self) -> np.ndarray:
        if self.pilot_set is None:
            return np.arange(self.mtot)
        return np.asarray(self.pilot_set, dtype=int)

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ValidatedConfig(SystemConfig):
    """A :class:`SystemConfig` whose invariants were checked at construction."""

    def __post_init__(self):
        ncp = self.mtot // 8 if self.ncp is None else self.ncp
        object.__setattr__(self, "ncp", int(ncp))
        object.__setattr__(self, "mtot", int(self.mtot))
        object.__setattr__(self, "nrx", int(self.nrx))
        object.__setattr__(self, "ntx", int(self.ntx))
        if self.pilot_set is not None:
            object.__setattr__(self, "pilot_set", tuple(int(m) for m in self.pilot_set))
        _check(self)


def _check(cfg: SystemConfig) -> None:
    for name in ("fc", "bw"):
        value = getattr(cfg, name)
        if not np.isfinite(value) or value <= 0:
            raise ConfigError(f"{name} must be positive and finite, got {value}")
    if cfg.mtot < 1:
        raise ConfigError(f"mtot must be a positive integer, got {cfg.mtot}")
    if cfg.mtot % 2:
        raise OddSubcarrierCount(f"mtot must be even, got {cfg.mtot}")
    if cfg.ncp < 0:
        raise ConfigError(f"ncp must be non-negative, got {cfg.ncp}")
    if cfg.nrx < 1 or cfg.ntx < 1:
        raise ConfigError("antenna counts must be >= 1")
    if not np.isfinite(cfg.n0) or cfg.n0 < 0:
        raise ConfigError(f"n0 must be non-negative, got {cfg.n0}")
    if not (np.isfinite(cfg.delta_tau) and cfg.delta_tau > 1.0 / (2.0 * cfg.fc)):
        raise InvalidDelaySpacing(
            f"delta_tau={cfg.delta_tau!r} s must exceed 1/(2 fc) = {1.0 / (2.0 * cfg.fc):.6g} s"
        )
    if cfg.pilot_set is not None:
        p = list(cfg.pilot_set)
        if not p:
            raise EmptyPilotSet("pilot_set is empty")
        if any(b <= a for a, b in zip(p, p[1:])):
            raise InvalidPilotSet("pilot indices must be strictly increasing")
        if p[0] < 0 or p[-1] >= cfg.mtot:
            raise InvalidPilotSet(f"pilot indices must lie in [0, {cfg.mtot - 1}]")


def validate(cfg: SystemConfig) -> ValidatedConfig:
    if isinstance(cfg, ValidatedConfig):
        return cfg
    fields = {f.name: getattr(cfg, f.name) for f in dataclasses.fields(SystemConfig)}
    return ValidatedConfig(**fields)


def make_config(**kwargs) -> ValidatedConfig:
    return ValidatedConfig(**kwargs)


def _check_index(cfg: SystemConfig, m) -> np.ndarray:
    m = np.asarray(m)
    if not np.issubdtype(m.dtype, np.integer):
        if np.any(m != np.round(m)):
            raise IndexOutOfRange(f"subcarrier index must be integral, got {m}")
        m = m.astype(int)
    if np.any(m < 0) or np.any(m >= cfg.mtot):
        raise IndexOutOfRange(f"subcarrier index outside [0, {cfg.mtot - 1}]: {m}")
    return m


def baseband_index(cfg: SystemConfig, m) -> np.ndarray:
    """Signed subcarrier offset in [-Mtot/2, Mtot/2); bin Mtot/2 is the lower band edge."""
    m = _check_index(cfg, m)
    return np.where(m < cfg.mtot / 2, m, m - cfg.mtot)


def subcarrier_frequency(cfg: SystemConfig, m):
    """RF frequency (Hz) of subcarrier ``m``; vectorised over array input.

    The split point ``Mtot/2`` also works for odd counts, which design scans use.
    """
    m = _check_index(cfg, m)
    half = cfg.mtot / 2
    f = np.where(
        m < half,
        cfg.fc + (m / cfg.mtot) * cfg.bw,
        cfg.fc - cfg.bw / 2.0 + ((m - half) / cfg.mtot) * cfg.bw,
    )
    return float(f) if f.ndim == 0 else f


def max_cumulative_delay(cfg: SystemConfig, ch) -> float:
    """``max Gamma_{l,q,n} + max tau_TTD,n`` with both maxima taken exactly.

    Gamma is affine in q and n, so each maximum sits at an array end. An
    empty channel contributes 0.
    """
    ttd = (cfg.nrx - 1) * cfg.delta_tau
    paths = list(getattr(ch, "paths", ch))
    if not paths:
        return ttd
    half_wave_delay = 1.0 / (2.0 * cfg.fc)  # lambda_c / (2 c)
    worst = -np.inf
    for p in paths:
        tx_term = max(0.0, -(cfg.ntx - 1) * np.sin(p.aod) * half_wave_delay)
        rx_term = max(0.0, (cfg.nrx - 1) * np.sin(p.aoa) * half_wave_delay)
        worst = max(worst, p.delay + tx_term + rx_term)
    return float(max(worst, 0.0) + ttd)


def check_cp_condition(cfg: SystemConfig, ch) -> bool:
    """True iff ``Ncp*Ts > max Gamma + max tau_TTD``."""
    ncp = cfg.mtot // 8 if cfg.ncp is None else cfg.ncp
    return bool(ncp * cfg.ts > max_cumulative_delay(cfg, ch))


# -- configuration files ------------------------------------------------------

_FILE_KEYS = {
    "fc_hz": "fc",
    "bw_hz": "bw",
    "mtot": "mtot",
    "ncp": "ncp",
    "ntx": "ntx",
    "nrx": "nrx",
    "delta_tau_s": "delta_tau",
    "n0": "n0",
    "pilot_set": "pilot_set",
}
_REQUIRED = ("fc_hz", "bw_hz", "mtot", "nrx", "delta_tau_s")


def _expand_pilot_spec(spec) -> Optional[tuple]:
    if spec is None:
        return None
    if isinstance(spec, dict):
        try:
            start, stride, count = int(spec["start"]), int(spec["stride"]), int(spec["count"])
        except KeyError as exc:
            raise ParseError("pilot_set stride spec needs start, stride, count", field="pilot_set") from exc
        if stride < 1 or count < 1:
            raise InvalidPilotSet("pilot_set stride and count must be >= 1")
        return tuple(range(start, start + stride * count, stride))
    if isinstance(spec, (list, tuple)):
        return tuple(int(v) for v in spec)
    raise ParseError("pilot_set must be a list or {start, stride, count}", field="pilot_set")


def config_from_dict(data: dict) -> ValidatedConfig:
    if not isinstance(data, dict):
        raise ParseError("configuration must be a mapping")
    unknown = set(data) - set(_FILE_KEYS) - {"experiment"}
    if unknown:
        raise ParseError(f"unknown configuration keys: {sorted(unknown)}")
    for key in _REQUIRED:
        if key not in data:
            raise ParseError("missing required key", field=key)
    kwargs = {}
    for key, attr in _FILE_KEYS.items():
        if key in data and data[key] is not None:
            kwargs[attr] = data[key]
    if "pilot_set" in kwargs:
        kwargs["pilot_set"] = _expand_pilot_spec(kwargs["pilot_set"])
    for attr in ("fc", "bw", "delta_tau", "n0"):
        if attr in kwargs:
            kwargs[attr] = float(kwargs[attr])
    for attr in ("mtot", "ncp", "ntx", "nrx"):
        if attr in kwargs:
            kwargs[attr] = int(kwargs[attr])
    return ValidatedConfig(**kwargs)


def config_to_dict(cfg: SystemConfig) -> dict:
    out = {key: getattr(cfg, attr) for key, attr in _FILE_KEYS.items()}
    if out["pilot_set"] is not None:
        out["pilot_set"] = list(out["pilot_set"])
    return out


def load_config(path) -> ValidatedConfig:
    """Read a YAML (or JSON) configuration file."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data)


def save_config(cfg: SystemConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False))


def pilot_indices(cfg: SystemConfig, pilot_set: Optional[Iterable[int]] = None) -> np.ndarray:
    """Resolve an explicit pilot set or fall back to the configured one."""
    if pilot_set is None:
        return cfg.pilots
    p = np.asarray(list(pilot_set), dtype=int)
    if p.size == 0:
        raise EmptyPilotSet("pilot set is empty")
    _check_index(cfg, p)
    return p
