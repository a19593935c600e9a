"""Array mathematics for TTD sounding beams.

Everything here is a pure function of its inputs. Angles are radians measured
from broadside; arrays are half-wavelength ULAs at the carrier frequency.

The sounding gain of subcarrier ``m`` depends on angle only through

    psi = 2 f_m delta_tau + (f_m / fc) sin(theta)

and is the Dirichlet kernel ``|sin(N pi psi / 2) / sin(pi psi / 2)|^2 / N``:
2-periodic in ``psi`` with peaks of height ``N`` at even integers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import SystemConfig, pilot_indices, subcarrier_frequency
from .exceptions import DelayTooSmall, EmptyPilotSet, InvalidSpec

DEFAULT_GRID = 4096
_SINGULAR = 1e-12


def rx_steering(angle, f, n: int, fc: float) -> np.ndarray:
    """Receive array response, ``[a]_n = exp(-j pi (n-1) (f/fc) sin(angle))``.

    Broadcasts over ``angle``/``f``; the element axis is last.
    """
    if n < 1:
        raise ValueError("element count must be >= 1")
    phase = np.multiply.outer(np.asarray(f, float) / fc * np.sin(angle), np.arange(n))
    return np.exp(-1j * np.pi * phase)


tx_steering = rx_steering


def ttd_combiner(cfg: SystemConfig, m) -> np.ndarray:
    """TTD combiner ``[w]_n = exp(j 2 pi f_m (n-1) delta_tau)``; shape (..., Nrx)."""
    f = np.asarray(subcarrier_frequency(cfg, m))
    # whole cycles of f * delta_tau are dropped before scaling by the element index
    cycles = np.mod(np.multiply.outer(np.mod(f * cfg.delta_tau, 1.0), np.arange(cfg.nrx)), 1.0)
    return np.exp(2j * np.pi * cycles)


def psi(theta, f, cfg: SystemConfig):
    """Beam-space variable, with the large ``2 f delta_tau`` term reduced mod 2."""
    f = np.asarray(f, float)
    return np.mod(2.0 * f * cfg.delta_tau, 2.0) + f / cfg.fc * np.sin(theta)


def dirichlet_gain(psi_value, n: int):
    """Array gain as a function of ``psi``; equals ``n`` at ``psi`` in 2Z."""
    psi_value = np.asarray(psi_value, float)
    # reduce to [-1, 1] first so the removable singularities all sit at 0
    x = 0.5 * np.pi * (psi_value - 2.0 * np.round(psi_value / 2.0))
    den = np.sin(x)
    singular = np.abs(den) < _SINGULAR
    safe = np.where(singular, 1.0, den)
    g = np.sin(n * x) ** 2 / (n * safe**2)
    return np.where(singular, float(n), g)


def gain(theta, m, cfg: SystemConfig, method: str = "closed"):
    """Sounding gain ``G(theta, f_m)`` in ``[0, Nrx]``.

    ``method="inner"`` evaluates ``|w^H a|^2 / Nrx`` directly and serves as a
    cross-check of the closed form. ``theta`` and ``m`` broadcast.
    """
    f = subcarrier_frequency(cfg, m)
    if method == "closed":
        return dirichlet_gain(psi(theta, f, cfg), cfg.nrx)
    if method == "inner":
        theta, f = np.broadcast_arrays(np.asarray(theta, float), np.asarray(f, float))
        n = np.arange(cfg.nrx)
        w = np.exp(2j * np.pi * f[..., None] * cfg.delta_tau * n)
        a = rx_steering(theta, f, cfg.nrx, cfg.fc)
        return np.abs(np.sum(np.conj(w) * a, axis=-1)) ** 2 / cfg.nrx
    raise ValueError(f"unknown method {method!r}")


def beam_center(cfg: SystemConfig, m, exact: bool = False):
    """Pointing direction of subcarrier ``m``'s sounding beam.

    The default solves ``psi = 2z`` with ``f_m / fc`` replaced by 1, giving the
    principal angle in ``[-pi/2, pi/2)``. ``exact=True`` keeps the ``f_m / fc``
    factor and picks the in-range solution nearest the approximate one,
    clipping to endfire when the peak falls outside the visible region.
    """
    f = np.asarray(subcarrier_frequency(cfg, m), float)
    s = np.mod(1.0 - 2.0 * f * cfg.delta_tau, 2.0) - 1.0
    if exact:
        ratio = cfg.fc / f
        cands = np.stack([(s - 2.0) * ratio, s * ratio, (s + 2.0) * ratio])
        valid = np.abs(cands) <= 1.0
        dist = np.where(valid, np.abs(cands - s), np.inf)
        pick = np.take_along_axis(cands, np.argmin(dist, axis=0)[None], axis=0)[0]
        s = np.where(valid.any(axis=0), pick, np.clip(s * ratio, -1.0, 1.0))
    out = np.arcsin(s)
    return float(out) if out.ndim == 0 else out


def theta_grid(size: int = DEFAULT_GRID) -> np.ndarray:
    return np.linspace(-np.pi / 2, np.pi / 2, size)


def argmax_first(values, axis=-1, rtol: float = 1e-12):
    """Index of the maximum; near-ties (within ``rtol``) go to the lowest index."""
    values = np.asarray(values, float)
    top = np.max(values, axis=axis, keepdims=True)
    return np.argmax(values >= top * (1.0 - rtol), axis=axis)


def numeric_beam_center(cfg: SystemConfig, m, grid_size: int = DEFAULT_GRID):
    """Grid argmax of ``gain`` over theta; ties break toward the smaller angle."""
    grid = theta_grid(grid_size)
    m = np.atleast_1d(m)
    g = gain(grid[None, :], m[:, None], cfg)
    return grid[argmax_first(g, axis=1)]


def epsilon_beamwidth(epsilon: float, n: int, tol: float = 1e-14) -> float:
    """Half-width ``Omega`` (psi units) of the main lobe above ``(1-epsilon) n``.

    Bisection on ``(0, 2/n)``, where the main lobe decreases monotonically to
    its first null.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if n < 2:
        raise ValueError("beamwidth needs at least 2 elements")
    floor = (1.0 - epsilon) * n
    lo, hi = 0.0, 2.0 / n
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if dirichlet_gain(mid, n) >= floor:
            lo = mid
        else:
            hi = mid
    return lo


def max_gain_envelope(cfg: SystemConfig, pilot_set=None, grid_size: int = DEFAULT_GRID):
    """``max_m G(theta, f_m)`` on the theta grid; returns (grid, envelope)."""
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    p = pilot_indices(cfg, pilot_set)
    grid = theta_grid(grid_size)
    env = np.zeros(grid_size)
    for chunk in np.array_split(p, max(1, p.size // 256)):
        env = np.maximum(env, gain(grid[None, :], chunk[:, None], cfg).max(axis=0))
    return grid, env


def min_max_gain(cfg: SystemConfig, pilot_set=None, grid_size: int = DEFAULT_GRID) -> float:
    """Brute-force ``min_theta max_m G(theta, f_m)`` over a uniform theta grid."""
    if grid_size < 256:
        raise ValueError("grid_size must be >= 256")
    if pilot_set is not None and len(list(pilot_set)) == 0:
        raise EmptyPilotSet("pilot set is empty")
    return float(max_gain_envelope(cfg, pilot_set, grid_size)[1].min())


@dataclass(frozen=True)
class DesignPoint:
    delta_tau: float
    mtot: int
    epsilon: float

    def __post_init__(self):
        if self.mtot < 1:
            raise InvalidSpec("mtot must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidSpec("epsilon must lie in (0, 1)")


def _subcarrier_threshold(delta_tau, fc, bw, omega, relaxed):
    if relaxed:
        return math.ceil(1.0 / omega)
    return (bw * delta_tau + bw / (2.0 * fc)) / omega


def _delay_threshold(fc, bw, relaxed):
    return 1.0 / bw if relaxed else 1.0 / bw + 1.0 / (2.0 * fc)


def in_design_subset(dp: DesignPoint, fc: float, bw: float, nrx: int, relaxed: bool = False) -> bool:
    """Sufficient-condition test for full angular coverage.

    Strict mode: ``delta_tau >= 1/BW + 1/(2 fc)`` and
    ``M >= (BW delta_tau + BW/(2 fc)) / Omega``. Relaxed mode drops the
    ``1/(2 fc)`` terms: ``delta_tau >= 1/BW`` and ``M >= ceil(1/Omega)``.
    """
    omega = epsilon_beamwidth(dp.epsilon, nrx)
    if dp.delta_tau < _delay_threshold(fc, bw, relaxed):
        return False
    return bool(dp.mtot >= _subcarrier_threshold(dp.delta_tau, fc, bw, omega, relaxed))


def required_subcarriers(delta_tau, fc, bw, epsilon, nrx, relaxed: bool = False) -> int:
    """Smallest subcarrier count placing ``(delta_tau, M)`` in the design subset."""
    if delta_tau < _delay_threshold(fc, bw, relaxed):
        raise DelayTooSmall(
            f"delta_tau={delta_tau:.6g} s below the {'relaxed' if relaxed else 'strict'} "
            f"threshold {_delay_threshold(fc, bw, relaxed):.6g} s"
        )
    omega = epsilon_beamwidth(epsilon, nrx)
    return max(1, math.ceil(_subcarrier_threshold(delta_tau, fc, bw, omega, relaxed)))


@dataclass(frozen=True)
class SoundingLUT:
    """Pilot subcarrier index -> sounding-beam centre (rad), sorted by index."""

    pilots: np.ndarray
    angles: np.ndarray

    def __len__(self):
        return len(self.pilots)

    def __getitem__(self, m) -> float:
        idx = np.searchsorted(self.pilots, m)
        if idx >= len(self.pilots) or self.pilots[idx] != m:
            raise KeyError(m)
        return float(self.angles[idx])

    def items(self):
        return zip(self.pilots.tolist(), self.angles.tolist())


def build_lut(cfg: SystemConfig, pilot_set=None, exact: bool = False) -> SoundingLUT:
    p = np.sort(pilot_indices(cfg, pilot_set))
    return SoundingLUT(pilots=p, angles=np.atleast_1d(beam_center(cfg, p, exact=exact)))


def beam_pattern(cfg: SystemConfig, pilot_set=None, grid_size: int = DEFAULT_GRID,
                 grid: Optional[np.ndarray] = None):
    """Gain of every pilot over the theta grid; returns (grid, pilots, gains[m, theta])."""
    p = pilot_indices(cfg, pilot_set)
    grid = theta_grid(grid_size) if grid is None else np.asarray(grid, float)
    return grid, p, gain(grid[None, :], p[:, None], cfg)
