"""OFDM pilot construction and frequency-domain received-symbol synthesis."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .arraylab import ttd_combiner
from .channel import MultipathChannel, PulseShape, channel_times_v
from .config import SystemConfig, check_cp_condition, max_cumulative_delay
from .exceptions import CpViolation, EmptyPilotSet, IndexOutOfRange, NonDivisible

RB_HALF_WIDTH = 6


@dataclass(frozen=True)
class PilotGrid:
    values: np.ndarray
    active: np.ndarray

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


@dataclass(frozen=True)
class ReceivedSymbol:
    y: np.ndarray
    noise_variance: float

    def __len__(self):
        return len(self.y)


def make_pilots(cfg: SystemConfig, indices: Iterable[int]) -> PilotGrid:
    """Equal-power zero-phase pilots; total power is exactly ``Mtot``."""
    active = np.unique(np.asarray(list(indices), dtype=int))
    if active.size == 0:
        raise EmptyPilotSet("pilot set is empty")
    if active[0] < 0 or active[-1] >= cfg.mtot:
        raise IndexOutOfRange("pilot index outside [0, Mtot)")
    values = np.zeros(cfg.mtot, dtype=complex)
    values[active] = np.sqrt(cfg.mtot / active.size)
    return PilotGrid(values, active)


def select_pilot_subcarriers(mtot_total: int, m_beams: int) -> np.ndarray:
    """Stride-``R`` pilot set ``{m R}``, ``R = mtot_total / m_beams``."""
    if m_beams < 1 or mtot_total % m_beams:
        raise NonDivisible(f"{m_beams} beams do not divide {mtot_total} subcarriers")
    return np.arange(m_beams) * (mtot_total // m_beams)


def resource_blocks(indices, mtot: int, half_width: int = RB_HALF_WIDTH) -> dict:
    """Map each pilot to itself plus ``half_width`` neighbours per side, clipped at the band edges."""
    blocks = {}
    for m in np.asarray(list(indices), dtype=int):
        lo, hi = max(0, m - half_width), min(mtot - 1, m + half_width)
        blocks[int(m)] = np.arange(lo, hi + 1)
    return blocks


def resource_block_expand(indices, mtot: int, half_width: int = RB_HALF_WIDTH) -> np.ndarray:
    blocks = resource_blocks(indices, mtot, half_width)
    if not blocks:
        return np.zeros(0, dtype=int)
    return np.unique(np.concatenate(list(blocks.values())))


def complex_noise(rng: np.random.Generator, size, variance: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with ``E|n|^2 = variance``."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def noiseless_symbol(cfg: SystemConfig, ch: MultipathChannel, pulse: PulseShape, v,
                     X, check_cp: bool = True) -> np.ndarray:
    """``w_TTD[m]^H H[m] v X[m]`` for all subcarriers."""
    X = X.values if isinstance(X, PilotGrid) else np.asarray(X, dtype=complex)
    if X.shape != (cfg.mtot,):
        raise ValueError(f"pilot vector must have length {cfg.mtot}")
    hv = channel_times_v(cfg, ch, pulse, v, check_cp=check_cp)
    w = ttd_combiner(cfg, np.arange(cfg.mtot))
    return np.sum(np.conj(w) * hv, axis=1) * X


def receive_symbol(cfg: SystemConfig, ch: MultipathChannel, pulse: PulseShape, v, X,
                   noise_seed=None, noiseless: bool = False,
                   enforce_cp: bool = True) -> ReceivedSymbol:
    """One received OFDM symbol ``Y[m] = w^H H[m] v X[m] + N[m]``.

    ``noise_seed`` may be an int, a SeedSequence or a Generator. With
    ``enforce_cp=False`` the CP condition is not checked, which only makes
    sense for demonstrating what breaks when it is violated.
    """
    if enforce_cp and not check_cp_condition(cfg, ch):
        raise CpViolation(
            f"cumulative delay {max_cumulative_delay(cfg, ch):.6g} s exceeds the CP "
            f"duration {cfg.ncp * cfg.ts:.6g} s"
        )
    y = noiseless_symbol(cfg, ch, pulse, v, X, check_cp=enforce_cp)
    if noiseless:
        return ReceivedSymbol(y, 0.0)
    rng = noise_seed if isinstance(noise_seed, np.random.Generator) else np.random.default_rng(noise_seed)
    var = cfg.noise_variance
    return ReceivedSymbol(y + complex_noise(rng, cfg.mtot, var), var)


def pilot_values(cfg: SystemConfig, pilots, half_width: Optional[int] = RB_HALF_WIDTH) -> PilotGrid:
    """Pilots on the resource blocks around ``pilots`` (``half_width=0`` or None: pilots only)."""
    if not half_width:
        return make_pilots(cfg, pilots)
    return make_pilots(cfg, resource_block_expand(pilots, cfg.mtot, half_width))
