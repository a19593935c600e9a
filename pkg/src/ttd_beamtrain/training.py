"""Beam-training algorithms and post-training metrics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .arraylab import SoundingLUT, rx_steering
from .channel import MultipathChannel, PulseShape, channel_times_v
from .config import SystemConfig
from .exceptions import EmptyBlock
from .phy import PilotGrid, ReceivedSymbol, complex_noise, make_pilots


@dataclass(frozen=True)
class TrainingResult:
    m_best: int
    aoa_estimate: float
    rsrp: np.ndarray
    symbols_used: int
    candidates: np.ndarray = field(default=None, repr=False)

    def as_record(self) -> dict:
        return {
            "m_best": int(self.m_best),
            "aoa_estimate_rad": float(self.aoa_estimate),
            "symbols_used": int(self.symbols_used),
            "rsrp": [float(r) for r in self.rsrp],
        }


def block_matrix(blocks, mtot: int) -> tuple:
    """0/1 matrix ``B[p, i]`` marking block membership, plus the pilot keys in order."""
    if isinstance(blocks, Mapping):
        keys = np.array(sorted(blocks), dtype=int)
        groups = [np.atleast_1d(blocks[k]) for k in keys]
    else:
        groups = [np.atleast_1d(b) for b in blocks]
        keys = np.array([int(g[0]) if g.size else -1 for g in groups])
    if not groups:
        raise EmptyBlock("no resource blocks given")
    B = np.zeros((len(groups), mtot))
    for row, g in enumerate(groups):
        if g.size == 0:
            raise EmptyBlock(f"resource block {row} is empty")
        B[row, np.asarray(g, dtype=int)] = 1.0
    return B, keys


def rsrp(Y, blocks) -> np.ndarray:
    """Received power summed over each pilot's resource block.

    ``blocks`` maps pilot -> indices (result ordered by pilot) or is a
    sequence of index arrays. ``Y`` may hold several symbols along leading
    axes.
    """
    y = Y.y if isinstance(Y, ReceivedSymbol) else np.asarray(Y)
    B, _ = block_matrix(blocks, y.shape[-1])
    return (np.abs(y) ** 2) @ B.T


def estimate_aoa(rsrp_values, lut: SoundingLUT) -> TrainingResult:
    """AoA estimate from the strongest pilot; ties go to the smallest pilot index."""
    r = np.asarray(rsrp_values, float)
    if r.shape != (len(lut),):
        raise ValueError("rsrp and LUT are not index-aligned")
    best = int(np.argmax(r))
    return TrainingResult(
        m_best=int(lut.pilots[best]),
        aoa_estimate=float(lut.angles[best]),
        rsrp=r,
        symbols_used=1,
        candidates=lut.pilots,
    )


# -- phased-array DFT benchmark ------------------------------------------------

def paa_codebook(K: int, nrx: int) -> np.ndarray:
    """``[w_k]_n = exp(j 2 pi (n-1) k / K)``; rows are beams."""
    return np.exp(2j * np.pi * np.outer(np.arange(K), np.arange(nrx)) / K)


def paa_beam_angles(K: int) -> np.ndarray:
    """Pointing direction of each DFT beam under the ``exp(-j pi n sin)`` steering convention."""
    return np.arcsin(np.mod(1.0 - 2.0 * np.arange(K) / K, 2.0) - 1.0)


def paa_dft_training(cfg: SystemConfig, ch: MultipathChannel, pulse: PulseShape, v, K: int,
                     noise_seed=None, X: Optional[PilotGrid] = None,
                     noiseless: bool = False) -> TrainingResult:
    """Exhaustive ``K``-symbol DFT sweep with a frequency-flat phased array.

    Symbol ``k`` is combined with beam ``k`` on every subcarrier; wideband
    RSRP sums ``|Y_k[m]|^2`` over the active pilots.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    X = make_pilots(cfg, cfg.pilots) if X is None else X
    active = X.active
    hv = channel_times_v(cfg, ch, pulse, v, active)  # (P, Nrx)
    W = paa_codebook(K, cfg.nrx)
    y = (np.conj(W) @ hv.T) * X.values[active][None, :]  # (K, P)
    if not noiseless:
        rng = noise_seed if isinstance(noise_seed, np.random.Generator) else np.random.default_rng(noise_seed)
        y = y + complex_noise(rng, y.shape, cfg.noise_variance)
    power = np.sum(np.abs(y) ** 2, axis=1)
    best = int(np.argmax(power))
    return TrainingResult(best, float(paa_beam_angles(K)[best]), power, K, np.arange(K))


# -- metrics ------------------------------------------------------------------

def post_training_gain(estimate, true_aoa, nrx: int, fc: float):
    """``|a(est)^H a(true)|^2 / Nrx^2`` with both responses at ``fc``."""
    a_hat = rx_steering(estimate, fc, nrx, fc)
    a = rx_steering(true_aoa, fc, nrx, fc)
    out = np.abs(np.sum(np.conj(a_hat) * a, axis=-1)) ** 2 / nrx**2
    return float(out) if np.ndim(out) == 0 else out


def band_signal_power(cfg: SystemConfig, ch: MultipathChannel, pulse: PulseShape, v) -> float:
    """``sum_m ||H[m] v||^2`` over all subcarriers."""
    hv = channel_times_v(cfg, ch, pulse, v)
    return float(np.sum(np.abs(hv) ** 2))


def snr(cfg: SystemConfig, ch: MultipathChannel, pulse: PulseShape, v) -> float:
    """Post-transmit-beam SNR across the band (linear)."""
    sig = band_signal_power(cfg, ch, pulse, v)
    noise = cfg.mtot * cfg.noise_variance
    if sig == 0.0:
        return 0.0
    return float("inf") if noise == 0.0 else sig / noise


def snr_db(cfg, ch, pulse, v) -> float:
    s = snr(cfg, ch, pulse, v)
    return float(10.0 * np.log10(s)) if s > 0 else float("-inf")


def n0_for_snr(signal_power: float, cfg: SystemConfig, target_db: float) -> float:
    """``N0`` giving ``snr() == target`` for a band signal power ``sum_m ||H[m] v||^2``."""
    noise_var = signal_power / (cfg.mtot * 10.0 ** (target_db / 10.0))
    return 2.0 * cfg.mtot * noise_var / cfg.bw


def phased_array_combiner(aoa_estimate: float, nrx: int, fc: float) -> np.ndarray:
    """Unit-norm frequency-flat combiner ``a_rx(est, fc) / sqrt(Nrx)``."""
    return rx_steering(aoa_estimate, fc, nrx, fc) / np.sqrt(nrx)


def spectral_efficiency(cfg: SystemConfig, ch: MultipathChannel, pulse: PulseShape, v,
                        w_provider) -> float:
    """``(1/Mtot) sum_m log2(1 + |w[m]^H H[m] v|^2 / (Nrx E|N[m]|^2))`` in bits/s/Hz.

    ``w_provider`` is an AoA estimate (rad), a fixed combiner of length Nrx,
    an ``(Mtot, Nrx)`` array, or a callable ``m -> w``. Combiners are
    normalised to unit power.
    """
    if callable(w_provider):
        W = np.array([w_provider(m) for m in range(cfg.mtot)], dtype=complex)
    elif np.ndim(w_provider) == 0:
        W = phased_array_combiner(float(w_provider), cfg.nrx, cfg.fc)[None, :]
    else:
        W = np.atleast_2d(np.asarray(w_provider, dtype=complex))
    return se_from_hv(cfg, channel_times_v(cfg, ch, pulse, v), W)


def se_from_hv(cfg: SystemConfig, hv, W) -> float:
    """Spectral efficiency for precomputed ``H[m] v`` rows and combiner(s) ``W``."""
    W = np.atleast_2d(np.asarray(W, dtype=complex))
    W = W / np.linalg.norm(W, axis=1, keepdims=True)
    power = np.abs(np.sum(np.conj(W) * hv, axis=1)) ** 2
    var = cfg.noise_variance
    if var == 0.0:
        raise ValueError("spectral efficiency needs a positive noise level")
    return float(np.mean(np.log2(1.0 + power / (cfg.nrx * var))))
