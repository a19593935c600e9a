"""Sample-level CP-OFDM simulator used as an independent check of the
frequency-domain received-symbol model.

Nothing here uses steering vectors, TTD combiners or ``H[m]``. Each
(path, tx element, rx element) triple is treated as a delayed, phase-rotated
copy of the transmitted waveform. The TTD delay is folded into that delay,
the copies are summed, the CP is dropped and a DFT is taken.

DFT conventions: ``x = Mtot * ifft(X)`` and ``Y = fft(y) / Mtot``. Time-domain
noise of per-sample variance ``N0*BW/2`` (spectral density ``N0/2`` over
bandwidth ``BW``) therefore maps to ``N0*BW/(2*Mtot)`` per subcarrier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import MultipathChannel, PathComponent, PulseShape, path_delay, periodic_sinc, pulse_value
from .config import SystemConfig
from .exceptions import CpViolation
from .phy import PilotGrid, ReceivedSymbol, complex_noise, receive_symbol

REL_FLOOR = 1e-30


@dataclass(frozen=True)
class TapVector:
    taps: np.ndarray

    @property
    def ncip(self) -> int:
        return len(self.taps)


def cumulative_delay(path: PathComponent, q: int, n: int, cfg: SystemConfig) -> float:
    """Propagation delay plus the rx element's TTD delay ``(n-1) delta_tau``."""
    return path_delay(path, q, n, cfg.fc) + (n - 1) * cfg.delta_tau


def _tap_phase(path, q, n, cfg, v_q):
    tau = cumulative_delay(path, q, n, cfg)
    return tau, path.gain * np.exp(-2j * np.pi * cfg.fc * tau) * v_q


def required_taps(cfg: SystemConfig, ch: MultipathChannel, pulse: PulseShape) -> int:
    """Smallest causal tap count holding every delayed pulse of a finite pulse."""
    if not pulse.finite:
        raise ValueError("the bandlimited pulse has no finite tap support")
    t_hi = pulse.support(cfg.ts)[1]
    worst = 0
    for path in ch.paths:
        for q in (1, cfg.ntx):
            for n in (1, cfg.nrx):
                tau = cumulative_delay(path, q, n, cfg)
                worst = max(worst, math.floor((tau + t_hi) / cfg.ts + 1e-9) + 1)
    return worst


def discrete_channel_taps(path: PathComponent, q: int, n: int, cfg: SystemConfig,
                          pulse: PulseShape, v_q: complex = 1.0, ncip=None,
                          enforce_cp: bool = True) -> TapVector:
    """Causal taps ``g p_c(i Ts - tau) exp(j theta)`` for ``i = 0 .. ncip-1``.

    ``theta = -2 pi fc tau + angle(v_q)``; ``tau`` includes the TTD delay. The
    ``rho`` normalisation is applied once at summation level, not here.
    """
    if not pulse.finite:
        raise ValueError("the bandlimited pulse has no finite tap support")
    tau, coeff = _tap_phase(path, q, n, cfg, v_q)
    if ncip is None:
        ncip = max(1, math.floor((tau + pulse.support(cfg.ts)[1]) / cfg.ts + 1e-9) + 1)
    if enforce_cp and ncip - 1 > cfg.ncp:
        raise CpViolation(f"{ncip} taps do not fit a CP of {cfg.ncp} samples")
    i = np.arange(ncip)
    return TapVector(coeff * pulse_value(pulse, i * cfg.ts - tau, cfg.ts))


def _transmit(cfg: SystemConfig, X) -> tuple:
    X = X.values if isinstance(X, PilotGrid) else np.asarray(X, dtype=complex)
    if X.shape != (cfg.mtot,):
        raise ValueError(f"pilot vector must have length {cfg.mtot}")
    x = cfg.mtot * np.fft.ifft(X)
    x_cp = np.concatenate([x[cfg.mtot - cfg.ncp:], x]) if cfg.ncp else x
    return x, x_cp


def _contribution_finite(x_cp, taps, cfg):
    # x_cp[0] is time -Ncp; anything earlier is silence.
    full = np.convolve(x_cp, taps)
    return full[cfg.ncp: cfg.ncp + cfg.mtot]


def _contribution_bandlimited(x, tau, coeff, cfg):
    # Ideal-DAC waveform of the CP-extended symbol, sampled at k Ts - tau;
    # silent outside [-Ncp Ts, Mtot Ts). The interpolation sum over x[i] is a
    # Toeplitz product, evaluated as a direct linear convolution.
    M = cfg.mtot
    k = np.arange(M)
    t = k * cfg.ts - tau
    inside = (t >= -cfg.ncp * cfg.ts - 1e-18) & (t < M * cfg.ts)
    kernel = periodic_sinc(np.arange(-(M - 1), M) - tau / cfg.ts, M)
    s = np.convolve(x, kernel)[M - 1: 2 * M - 1]
    return np.where(inside, coeff * s, 0.0)


def simulate_time_domain(cfg: SystemConfig, ch: MultipathChannel, pulse: PulseShape, v, X,
                         noise_seed=None, noiseless: bool = False,
                         enforce_cp: bool = True) -> ReceivedSymbol:
    """Time-domain simulation of one training symbol.

    IDFT, CP insertion, per-(l, q, n) channel with the TTD delay folded in,
    summation with ``rho``, optional white noise, CP removal, DFT. Summation
    order is fixed (l, then q, then n).
    """
    v = np.asarray(v, dtype=complex)
    x, x_cp = _transmit(cfg, X)
    rho = ch.rho(cfg.ntx, cfg.nrx)
    y = np.zeros(cfg.mtot, dtype=complex)
    ncip = required_taps(cfg, ch, pulse) if (pulse.finite and ch.paths) else None
    if enforce_cp and ncip is not None and ncip - 1 > cfg.ncp:
        raise CpViolation(f"{ncip} taps do not fit a CP of {cfg.ncp} samples")
    for path in ch.paths:
        for q in range(1, cfg.ntx + 1):
            for n in range(1, cfg.nrx + 1):
                if pulse.finite:
                    taps = discrete_channel_taps(path, q, n, cfg, pulse, v[q - 1], ncip=ncip,
                                                 enforce_cp=False)
                    y += rho * _contribution_finite(x_cp, taps.taps, cfg)
                else:
                    tau, coeff = _tap_phase(path, q, n, cfg, v[q - 1])
                    if enforce_cp and tau > cfg.ncp * cfg.ts:
                        raise CpViolation(f"delay {tau:.6g} s exceeds the CP")
                    y += rho * _contribution_bandlimited(x, tau, coeff, cfg)
    var = 0.0
    if not noiseless:
        rng = noise_seed if isinstance(noise_seed, np.random.Generator) else np.random.default_rng(noise_seed)
        y = y + complex_noise(rng, cfg.mtot, cfg.n0 * cfg.bw / 2.0)
        var = cfg.noise_variance
    return ReceivedSymbol(np.fft.fft(y) / cfg.mtot, var)


def verify_proposition1(cfg: SystemConfig, ch: MultipathChannel, pulse: PulseShape, v, X,
                        enforce_cp: bool = True, elementwise: bool = False) -> float:
    """Relative mismatch between the frequency-domain and time-domain symbols on the active pilots.

    Normwise by default: ``max|Y_td - Y_fd| / max|Y_fd|``. With
    ``elementwise=True`` each subcarrier is divided by its own ``|Y_fd[m]|``,
    which is ill-conditioned at deep fades.
    """
    Xv = X.values if isinstance(X, PilotGrid) else np.asarray(X, dtype=complex)
    active = np.flatnonzero(Xv)
    y_fd = receive_symbol(cfg, ch, pulse, v, Xv, noiseless=True, enforce_cp=enforce_cp).y
    y_td = simulate_time_domain(cfg, ch, pulse, v, Xv, noiseless=True, enforce_cp=enforce_cp).y
    if active.size == 0:
        return 0.0
    diff = np.abs(y_td[active] - y_fd[active])
    ref = np.abs(y_fd[active])
    if elementwise:
        return float(np.max(diff / np.maximum(ref, REL_FLOOR)))
    return float(np.max(diff) / max(np.max(ref), REL_FLOOR))


# -- literal cyclic-matrix construction (small Mtot only) ----------------------

def convolution_matrix(taps, mtot: int, ncp: int) -> np.ndarray:
    """``Mtot x (Mtot+Ncp)`` matrix whose k-th row is ``[0_{k-1}, h^T, 0_...]``.

    Acts on ``[x[M-1], ..., x[0], x[-1], ..., x[-Ncp]]`` and yields
    ``[y[M-1], ..., y[0]]``.
    """
    taps = np.asarray(taps, dtype=complex)
    ncip = taps.size
    if ncip > ncp + 1:
        raise CpViolation(f"{ncip} taps do not fit a CP of {ncp} samples")
    H = np.zeros((mtot, mtot + ncp), dtype=complex)
    for k in range(mtot):
        H[k, k:k + ncip] = taps
    return H


def circulant_from_taps(taps, mtot: int) -> np.ndarray:
    """Post-CP-removal circulant matrix defined by its first row ``[h, 0]``."""
    row = np.zeros(mtot, dtype=complex)
    row[: len(taps)] = taps
    return np.array([np.roll(row, k) for k in range(mtot)])


def combined_taps(cfg: SystemConfig, ch: MultipathChannel, pulse: PulseShape, v) -> np.ndarray:
    """``rho * sum_{l,q,n} h_{l,q,n}``: the single tap vector seen after analog combining."""
    v = np.asarray(v, dtype=complex)
    ncip = required_taps(cfg, ch, pulse)
    out = np.zeros(ncip, dtype=complex)
    for path in ch.paths:
        for q in range(1, cfg.ntx + 1):
            for n in range(1, cfg.nrx + 1):
                out += discrete_channel_taps(path, q, n, cfg, pulse, v[q - 1], ncip=ncip,
                                             enforce_cp=False).taps
    return ch.rho(cfg.ntx, cfg.nrx) * out
