"""Geometric multipath channel, pulse shapes and per-subcarrier channel matrices."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .arraylab import rx_steering, tx_steering
from .config import SPEED_OF_LIGHT, SystemConfig, subcarrier_frequency
from .exceptions import CpViolation, EmptyChannel, IndexOutOfRange, InvalidSpec, ParseError

CHANNEL_FIELDS = ("gain_re", "gain_im", "delay_s", "aod_rad", "aoa_rad")
_HALF_PI = np.pi / 2 + 1e-12


@dataclass(frozen=True)
class PathComponent:
    gain: complex
    delay: float
    aod: float
    aoa: float

    def __post_init__(self):
        object.__setattr__(self, "gain", complex(self.gain))
        for name in ("delay", "aod", "aoa"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not np.isfinite(self.delay) or self.delay < 0:
            raise InvalidSpec(f"path delay must be finite and >= 0, got {self.delay}")
        if abs(self.aod) > _HALF_PI or abs(self.aoa) > _HALF_PI:
            raise InvalidSpec("path angles must lie in [-pi/2, pi/2]")

    def carrier_gain(self, fc: float) -> complex:
        """``g * exp(-j 2 pi fc tau)``."""
        return self.gain * np.exp(-2j * np.pi * fc * self.delay)


@dataclass(frozen=True)
class MultipathChannel:
    paths: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))

    def __len__(self):
        return len(self.paths)

    def rho(self, ntx: int, nrx: int) -> float:
        """Normalisation ``sqrt(Ntx * Nrx / L)``; 0 for an empty channel."""
        return float(np.sqrt(ntx * nrx / len(self.paths))) if self.paths else 0.0

    @property
    def gains(self) -> np.ndarray:
        return np.array([p.gain for p in self.paths], dtype=complex)

    @property
    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.paths], dtype=float)

    @property
    def aods(self) -> np.ndarray:
        return np.array([p.aod for p in self.paths], dtype=float)

    @property
    def aoas(self) -> np.ndarray:
        return np.array([p.aoa for p in self.paths], dtype=float)

    def scaled(self, factor: complex) -> "MultipathChannel":
        return MultipathChannel(
            tuple(PathComponent(p.gain * factor, p.delay, p.aod, p.aoa) for p in self.paths)
        )


def los_channel(aoa: float = 0.0, aod: float = 0.0, gain: complex = 1.0, delay: float = 0.0):
    return MultipathChannel((PathComponent(gain, delay, aod, aoa),))


# -- pulse shapes -------------------------------------------------------------

PULSE_KINDS = ("ideal-sinc", "raised-cosine", "bandlimited")


@dataclass(frozen=True)
class PulseShape:
    """Combined hardware filter ``p_c(t)``.

    ``ideal-sinc`` and ``raised-cosine`` are truncated to ``|t| <= span*Ts/2``.
    ``bandlimited`` is the untruncated ideal low-pass filter as seen by a
    periodic (CP-extended) OFDM symbol: the Mtot-periodic sinc whose spectrum
    is flat on exactly the Mtot subcarriers ``[-BW/2, BW/2)``. It is complex
    valued (the band edge bin -BW/2 is not mirrored) and needs ``mtot``.
    """

    kind: str = "ideal-sinc"
    rolloff: float = 0.25
    span: int = 32

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise InvalidSpec(f"unknown pulse kind {self.kind!r}; expected one of {PULSE_KINDS}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise InvalidSpec("rolloff must lie in [0, 1]")
        if self.span < 2 or self.span % 2:
            raise InvalidSpec("span must be an even integer >= 2")

    @property
    def finite(self) -> bool:
        return self.kind != "bandlimited"

    def support(self, ts: float):
        """Closed support interval ``(t_min, t_max)``; None when unbounded."""
        if not self.finite:
            return None
        half = self.span * ts / 2.0
        return -half, half


def _raised_cosine(u, beta):
    if beta == 0.0:
        return np.sinc(u)
    x = 2.0 * beta * u
    singular = np.isclose(np.abs(x), 1.0, rtol=0.0, atol=1e-12)
    den = np.where(singular, 1.0, 1.0 - x**2)
    val = np.sinc(u) * np.cos(np.pi * beta * u) / den
    return np.where(singular, np.pi / 4.0 * np.sinc(1.0 / (2.0 * beta)), val)


def periodic_sinc(u, mtot: int):
    """``(1/M) sum_{k=-M/2}^{M/2-1} exp(j 2 pi k u / M)`` in closed form."""
    u = np.asarray(u, float)
    num = np.sin(np.pi * u)
    den = mtot * np.sin(np.pi * u / mtot)
    singular = np.abs(den) < 1e-9
    safe = np.where(singular, 1.0, den)
    # L'Hopital at u in M*Z
    mag = np.where(singular, np.cos(np.pi * u) / np.cos(np.pi * u / mtot), num / safe)
    return np.exp(-1j * np.pi * u / mtot) * mag


def pulse_value(p: PulseShape, t, ts: float, mtot: Optional[int] = None):
    """Evaluate ``p_c(t)``; exactly zero outside the truncated support."""
    u = np.asarray(t, float) / ts
    if p.kind == "bandlimited":
        if mtot is None:
            raise ValueError("the bandlimited pulse needs mtot")
        out = periodic_sinc(u, mtot)
    else:
        val = np.sinc(u) if p.kind == "ideal-sinc" else _raised_cosine(u, p.rolloff)
        out = np.where(np.abs(u) <= p.span / 2.0 + 1e-12, val, 0.0)
    return out[()] if out.ndim == 0 else out


def delay_response(p: PulseShape, tau, cfg: SystemConfig, m) -> np.ndarray:
    """``sum_{i=0}^{Mtot-1} exp(-j 2 pi i m / Mtot) p_c(i Ts - tau)``.

    Shape ``(len(tau), len(m))``. Finite pulses sum only over their support.
    """
    tau = np.atleast_1d(np.asarray(tau, float))
    m = np.atleast_1d(np.asarray(m))
    ts, mtot = cfg.ts, cfg.mtot
    if p.finite:
        t_lo, t_hi = p.support(ts)
        lo = np.clip(np.ceil((tau + t_lo) / ts - 1e-9).astype(int), 0, mtot - 1)
        hi = np.clip(np.floor((tau + t_hi) / ts + 1e-9).astype(int), 0, mtot - 1)
        width = int(np.max(hi - lo)) + 1 if tau.size else 0
        i = lo[:, None] + np.arange(max(width, 1))[None, :]
        valid = i <= hi[:, None]
        taps = np.where(valid, pulse_value(p, i * ts - tau[:, None], ts), 0.0)
        phase = np.exp(-2j * np.pi * np.multiply.outer(i, m) / mtot)
        return np.einsum("li,lim->lm", taps, phase)
    i = np.arange(mtot)
    taps = pulse_value(p, i[None, :] * ts - tau[:, None], ts, mtot=mtot)
    phase = np.exp(-2j * np.pi * np.outer(i, m) / mtot)
    return taps @ phase


# -- delays and channel matrices ----------------------------------------------

def path_delay(path: PathComponent, q: int, n: int, fc: float) -> float:
    """Propagation delay from tx element ``q`` to rx element ``n`` (1-based)."""
    if q < 1 or n < 1:
        raise IndexOutOfRange("element indices are 1-based")
    lam = SPEED_OF_LIGHT / fc
    return (
        path.delay
        - (q - 1) * lam * np.sin(path.aod) / (2.0 * SPEED_OF_LIGHT)
        + (n - 1) * lam * np.sin(path.aoa) / (2.0 * SPEED_OF_LIGHT)
    )


def _require_cp(cfg: SystemConfig, ch: MultipathChannel):
    if ch.paths and np.max(ch.delays) >= cfg.ncp * cfg.ts:
        raise CpViolation(
            f"path delay {np.max(ch.delays):.6g} s exceeds the CP budget {cfg.ncp * cfg.ts:.6g} s"
        )


def _path_factors(cfg, ch, p, m):
    m = np.atleast_1d(np.asarray(m))
    f = np.atleast_1d(subcarrier_frequency(cfg, m))
    rho = ch.rho(cfg.ntx, cfg.nrx)
    gt = np.array([path.carrier_gain(cfg.fc) for path in ch.paths], dtype=complex)
    coeff = rho * gt[:, None] * delay_response(p, ch.delays, cfg, m)  # (L, M)
    return m, f, coeff


def freq_channel(cfg: SystemConfig, ch: MultipathChannel, p: PulseShape, m) -> np.ndarray:
    """Channel matrix ``H[m]`` (Nrx x Ntx); a stack ``(len(m), Nrx, Ntx)`` for array ``m``."""
    scalar = np.ndim(m) == 0
    _require_cp(cfg, ch)
    m_arr = np.atleast_1d(m)
    out = np.zeros((m_arr.size, cfg.nrx, cfg.ntx), dtype=complex)
    if ch.paths:
        m_arr, f, coeff = _path_factors(cfg, ch, p, m_arr)
        for li, path in enumerate(ch.paths):
            a_r = rx_steering(path.aoa, f, cfg.nrx, cfg.fc)  # (M, Nrx)
            a_t = tx_steering(path.aod, f, cfg.ntx, cfg.fc)  # (M, Ntx)
            out += coeff[li][:, None, None] * a_r[:, :, None] * np.conj(a_t)[:, None, :]
    return out[0] if scalar else out


def channel_times_v(cfg: SystemConfig, ch: MultipathChannel, p: PulseShape, v, m=None,
                    check_cp: bool = True) -> np.ndarray:
    """``H[m] v`` for every requested subcarrier without forming ``H[m]``; shape (M, Nrx)."""
    if check_cp:
        _require_cp(cfg, ch)
    m = np.arange(cfg.mtot) if m is None else np.atleast_1d(m)
    out = np.zeros((m.size, cfg.nrx), dtype=complex)
    if not ch.paths:
        return out
    v = np.asarray(v, dtype=complex)
    m, f, coeff = _path_factors(cfg, ch, p, m)
    for li, path in enumerate(ch.paths):
        a_r = rx_steering(path.aoa, f, cfg.nrx, cfg.fc)
        tx_gain = np.conj(tx_steering(path.aod, f, cfg.ntx, cfg.fc)) @ v  # a_tx^H v
        out += (coeff[li] * tx_gain)[:, None] * a_r
    return out


def aligned_tx_beamformer(ch: MultipathChannel, cfg: SystemConfig, l: int = 0) -> np.ndarray:
    """Phase-only beamformer matched at ``fc`` to path ``l``'s AoD: ``a_tx^H v = Ntx``."""
    if not 0 <= l < len(ch.paths):
        raise IndexOutOfRange(f"path index {l} outside channel of {len(ch.paths)} paths")
    return tx_steering(ch.paths[l].aod, cfg.fc, cfg.ntx, cfg.fc)


# -- synthetic generation -----------------------------------------------------

@dataclass(frozen=True)
class PathSpec:
    """Recipe for :func:`generate_paths`.

    ``angle_dist`` is ``"uniform"`` (angles uniform on ``angle_range``) or
    ``"fixed"`` (every path uses ``aoa``/``aod``). ``gain_profile`` is
    ``"equal"`` or ``"exponential"`` (mean power ``exp(-delay/decay_s)``).
    """

    n_paths: int = 1
    delay_range: tuple = (0.0, 0.0)
    angle_dist: str = "uniform"
    angle_range: tuple = (-np.pi / 2, np.pi / 2)
    aoa: float = 0.0
    aod: float = 0.0
    gain_profile: str = "equal"
    decay_s: float = 50e-9


def generate_paths(seed, spec: PathSpec) -> MultipathChannel:
    """Seeded random multipath channel with total path power 1."""
    if spec.n_paths < 1:
        raise InvalidSpec("n_paths must be >= 1")
    lo, hi = spec.delay_range
    if not (0.0 <= lo <= hi) or not np.isfinite(hi):
        raise InvalidSpec(f"bad delay range {spec.delay_range}")
    if spec.angle_dist not in ("uniform", "fixed"):
        raise InvalidSpec(f"unknown angle distribution {spec.angle_dist!r}")
    if spec.gain_profile not in ("equal", "exponential"):
        raise InvalidSpec(f"unknown gain profile {spec.gain_profile!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    L = spec.n_paths
    delays = rng.uniform(lo, hi, L) if hi > lo else np.full(L, lo)
    if spec.angle_dist == "uniform":
        a_lo, a_hi = spec.angle_range
        if not (-_HALF_PI <= a_lo <= a_hi <= _HALF_PI):
            raise InvalidSpec(f"bad angle range {spec.angle_range}")
        aoas = rng.uniform(a_lo, a_hi, L)
        aods = rng.uniform(a_lo, a_hi, L)
    else:
        aoas = np.full(L, spec.aoa)
        aods = np.full(L, spec.aod)
    g = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / np.sqrt(2.0)
    if spec.gain_profile == "exponential":
        g = g * np.sqrt(np.exp(-delays / spec.decay_s))
    norm = np.sqrt(np.sum(np.abs(g) ** 2))
    if norm == 0:
        raise InvalidSpec("degenerate gain draw")
    g = g / norm
    return MultipathChannel(
        tuple(PathComponent(g[i], delays[i], aods[i], aoas[i]) for i in range(L))
    )


# -- channel files ------------------------------------------------------------

def parse_channel(text: str) -> MultipathChannel:
    """Parse channel CSV text.

    Header ``gain_re,gain_im,delay_s,aod_rad,aoa_rad`` is optional; blank lines
    and ``#`` comments are skipped.
    """
    rows = [
        row for row in csv.reader(io.StringIO(text))
        if row and any(c.strip() for c in row) and not row[0].lstrip().startswith("#")
    ]
    if rows and [c.strip() for c in rows[0]] == list(CHANNEL_FIELDS):
        rows = rows[1:]
    paths = []
    for idx, row in enumerate(rows):
        if len(row) != len(CHANNEL_FIELDS):
            raise ParseError(f"expected {len(CHANNEL_FIELDS)} fields, got {len(row)}", record=idx)
        vals = []
        for name, cell in zip(CHANNEL_FIELDS, row):
            try:
                val = float(cell)
            except ValueError:
                raise ParseError(f"not a number: {cell.strip()!r}", record=idx, field=name) from None
            if not np.isfinite(val):
                raise ParseError("non-finite value", record=idx, field=name)
            vals.append(val)
        try:
            paths.append(PathComponent(complex(vals[0], vals[1]), vals[2], vals[3], vals[4]))
        except InvalidSpec as exc:
            raise ParseError(str(exc), record=idx) from None
    if not paths:
        raise EmptyChannel("channel file holds no path records")
    return MultipathChannel(tuple(paths))


def load_channel(path) -> MultipathChannel:
    return parse_channel(Path(path).read_text())


def format_channel(ch: MultipathChannel) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CHANNEL_FIELDS)
    for p in ch.paths:
        writer.writerow(
            [f"{x:.17g}" for x in (p.gain.real, p.gain.imag, p.delay, p.aod, p.aoa)]
        )
    return buf.getvalue()


def save_channel(ch: MultipathChannel, path) -> None:
    Path(path).write_text(format_channel(ch))


def stack_paths(paths: Sequence[PathComponent]) -> MultipathChannel:
    return MultipathChannel(tuple(paths))
