"""scikit-learn style wrappers around the training algorithms.

Samples are received OFDM symbols: rows of complex ``Y[m]`` values. ``fit``
only precomputes the sounding state (pilots, LUT, resource blocks); nothing is
learned from data, so ``fit`` ignores its arguments.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .arraylab import build_lut
from .config import SystemConfig, make_config
from .phy import RB_HALF_WIDTH, pilot_values, resource_blocks, select_pilot_subcarriers
from .training import block_matrix, estimate_aoa, paa_beam_angles, paa_codebook, post_training_gain


def check_symbols(Y, n_features=None, name="Y", ndim=2) -> np.ndarray:
    """Coerce ``Y`` to a finite complex array of rank ``ndim`` with a leading sample axis.

    sklearn's ``check_array`` rejects complex input, hence this helper. A
    single sample (rank ``ndim - 1``) is promoted.
    """
    Y = np.asarray(Y)
    if Y.dtype == object or not (np.issubdtype(Y.dtype, np.number) or Y.dtype == bool):
        raise TypeError(f"{name} must be numeric, got dtype {Y.dtype}")
    Y = Y.astype(complex)
    if Y.ndim == ndim - 1:
        Y = Y[None, ...]
    if Y.ndim != ndim:
        raise ValueError(f"{name} must have {ndim - 1} or {ndim} dimensions, got {Y.ndim}")
    if Y.shape[0] == 0:
        raise ValueError(f"{name} has no samples")
    if not np.all(np.isfinite(Y)):
        raise ValueError(f"{name} contains NaN or inf")
    if n_features is not None and Y.shape[-1] != n_features:
        raise ValueError(f"{name} has {Y.shape[-1]} columns, expected {n_features}")
    return Y


class TTDBeamTrainer(TransformerMixin, BaseEstimator):
    """One-shot AoA estimation from a single TTD-combined OFDM symbol.

    ``transform`` maps symbols ``(n, Mtot)`` to per-pilot RSRP ``(n, P)``;
    ``predict`` returns the LUT angle of the strongest pilot.
    """

    def __init__(self, fc=28e9, bw=400e6, mtot=2048, delta_tau=2.5e-9, nrx=16,
                 n_beams=None, rb_half_width=RB_HALF_WIDTH, exact_lut=False):
        self.fc = fc
        self.bw = bw
        self.mtot = mtot
        self.delta_tau = delta_tau
        self.nrx = nrx
        self.n_beams = n_beams
        self.rb_half_width = rb_half_width
        self.exact_lut = exact_lut

    @classmethod
    def from_config(cls, cfg: SystemConfig, **kwargs):
        return cls(fc=cfg.fc, bw=cfg.bw, mtot=cfg.mtot, delta_tau=cfg.delta_tau, nrx=cfg.nrx, **kwargs)

    def fit(self, Y=None, y=None):
        self.config_ = make_config(fc=self.fc, bw=self.bw, mtot=self.mtot,
                                   delta_tau=self.delta_tau, nrx=self.nrx)
        n_beams = 2 * self.nrx if self.n_beams is None else int(self.n_beams)
        self.pilots_ = select_pilot_subcarriers(self.mtot, n_beams)
        self.lut_ = build_lut(self.config_, self.pilots_, exact=self.exact_lut)
        blocks = resource_blocks(self.pilots_, self.mtot, self.rb_half_width or 0)
        self.blocks_, _ = block_matrix(blocks, self.mtot)
        self.pilot_grid_ = pilot_values(self.config_, self.pilots_, self.rb_half_width)
        self.n_features_in_ = self.mtot
        return self

    def transform(self, Y):
        check_is_fitted(self, "lut_")
        Y = check_symbols(Y, self.n_features_in_)
        return (np.abs(Y) ** 2) @ self.blocks_.T

    def train(self, Y):
        """:class:`TrainingResult` for each symbol."""
        return [estimate_aoa(r, self.lut_) for r in self.transform(Y)]

    def predict(self, Y):
        return np.array([res.aoa_estimate for res in self.train(Y)])

    def score(self, Y, y):
        """Mean normalized post-training gain against true AoAs ``y``."""
        est = self.predict(Y)
        return float(np.mean(post_training_gain(est, np.asarray(y, float), self.nrx, self.fc)))


class PAABeamTrainer(BaseEstimator):
    """Exhaustive K-symbol DFT sweep with a frequency-flat phased array.

    Samples are ``(K, P)`` blocks: the pilot subcarriers of the K training
    symbols, symbol ``k`` received through DFT beam ``k``.
    """

    def __init__(self, k_beams=32, nrx=16, fc=28e9):
        self.k_beams = k_beams
        self.nrx = nrx
        self.fc = fc

    def fit(self, Y=None, y=None):
        if int(self.k_beams) < 1:
            raise ValueError("k_beams must be >= 1")
        self.codebook_ = paa_codebook(int(self.k_beams), self.nrx)
        self.angles_ = paa_beam_angles(int(self.k_beams))
        return self

    def transform(self, Y):
        check_is_fitted(self, "angles_")
        Y = check_symbols(Y, ndim=3)
        if Y.shape[1] != len(self.angles_):
            raise ValueError(f"expected {len(self.angles_)} training symbols, got {Y.shape[1]}")
        return np.sum(np.abs(Y) ** 2, axis=2)

    def predict(self, Y):
        best = np.argmax(self.transform(Y), axis=1)
        return self.angles_[best]

    def score(self, Y, y):
        est = self.predict(Y)
        return float(np.mean(post_training_gain(est, np.asarray(y, float), self.nrx, self.fc)))
