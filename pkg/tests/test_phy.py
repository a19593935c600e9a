import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ttd_beamtrain.arraylab import beam_center, ttd_combiner
from ttd_beamtrain.channel import MultipathChannel, PathSpec, PulseShape, aligned_tx_beamformer, generate_paths, los_channel
from ttd_beamtrain.config import make_config
from ttd_beamtrain.exceptions import CpViolation, EmptyPilotSet, IndexOutOfRange, NonDivisible
from ttd_beamtrain.phy import (
    make_pilots,
    pilot_values,
    receive_symbol,
    resource_block_expand,
    resource_blocks,
    select_pilot_subcarriers,
)


def test_pilot_amplitudes(los_cfg):
    X = make_pilots(los_cfg, select_pilot_subcarriers(2048, 8))
    assert np.allclose(X.values[X.active], 16.0)
    assert np.count_nonzero(X.values) == 8
    full = make_pilots(los_cfg, range(2048))
    assert np.allclose(full.values, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.sets(st.integers(0, 2047), min_size=1, max_size=300))
def test_pilot_power_is_mtot(pilots):
    cfg = make_config(fc=28e9, bw=400e6, mtot=2048, delta_tau=2.5e-9, nrx=16)
    assert make_pilots(cfg, pilots).power == pytest.approx(2048, abs=1e-9)


def test_pilot_errors(small_cfg):
    with pytest.raises(EmptyPilotSet):
        make_pilots(small_cfg, [])
    with pytest.raises(IndexOutOfRange):
        make_pilots(small_cfg, [64])


def test_select_pilots():
    assert np.array_equal(select_pilot_subcarriers(2048, 8), np.arange(0, 2048, 256))
    assert np.array_equal(select_pilot_subcarriers(64, 64), np.arange(64))
    with pytest.raises(NonDivisible):
        select_pilot_subcarriers(2048, 3)


@pytest.mark.parametrize("R", [4, 256])
def test_selected_combiners_match_small_system(R):
    small = make_config(fc=28e9, bw=400e6, mtot=8, delta_tau=2.5e-9, nrx=8)
    big = small.replace(mtot=8 * R, ncp=None)
    big = make_config(**{k: getattr(big, k) for k in ("fc", "bw", "mtot", "delta_tau", "nrx")})
    sel = select_pilot_subcarriers(big.mtot, 8)
    assert np.allclose(ttd_combiner(big, sel), ttd_combiner(small, np.arange(8)), rtol=0, atol=1e-12)


def test_resource_blocks():
    assert np.array_equal(resource_block_expand([256], 2048), np.arange(250, 263))
    assert np.array_equal(resource_block_expand([0], 2048), np.arange(0, 7))
    assert np.array_equal(resource_block_expand([2047], 2048), np.arange(2041, 2048))
    assert np.array_equal(resource_block_expand([10, 14], 2048), np.arange(4, 21))
    assert len(resource_blocks([10, 14], 2048)[14]) == 13


def test_pilot_values_cover_blocks(los_cfg):
    X = pilot_values(los_cfg, [0, 1024])
    assert X.active.size == 7 + 13
    assert pilot_values(los_cfg, [0, 1024], 0).active.size == 2


def test_identity_channel_returns_pilots():
    cfg = make_config(fc=28e9, bw=400e6, mtot=64, delta_tau=2.5e-9, nrx=1)
    X = make_pilots(cfg, range(0, 64, 4))
    y = receive_symbol(cfg, los_channel(), PulseShape(), [1.0], X, noiseless=True)
    assert np.allclose(y.y, X.values, atol=1e-12) and y.noise_variance == 0.0


@pytest.mark.parametrize("exact,aod,tol", [(True, 0.0, 1e-9), (False, 0.3, 5e-3)])
def test_peak_response_at_beam_centre(coverage_cfg, exact, aod, tol):
    # a nonzero AoD adds transmit-side squint: v is matched at fc only
    # 8-element reference array with a CP long enough for the 17.5 ns TTD aperture
    cfg = make_config(fc=coverage_cfg.fc, bw=coverage_cfg.bw, mtot=8, ncp=8, delta_tau=2.5e-9, nrx=8, ntx=4)
    m0 = 2
    ch = los_channel(aoa=beam_center(cfg, m0, exact=exact), aod=aod)
    v = aligned_tx_beamformer(ch, cfg)
    X = make_pilots(cfg, [m0])
    y = receive_symbol(cfg, ch, PulseShape(), v, X, noiseless=True).y
    rho = np.sqrt(cfg.ntx * cfg.nrx)
    assert abs(y[m0]) == pytest.approx(rho * cfg.ntx * cfg.nrx * abs(X.values[m0]), rel=tol)


def test_noise_variance_zero_channel():
    cfg = make_config(fc=28e9, bw=400e6, mtot=1000, delta_tau=2.5e-9, nrx=2, n0=3e-9)
    X = make_pilots(cfg, range(1000))
    rng = np.random.default_rng(11)
    Y = np.concatenate([receive_symbol(cfg, MultipathChannel(()), PulseShape(), [1.0], X, noise_seed=rng).y
                        for _ in range(1000)])
    assert np.var(Y) == pytest.approx(cfg.noise_variance, rel=0.02)
    assert cfg.noise_variance == pytest.approx(3e-9 * 400e6 / 2000)


def test_noise_independent_across_subcarriers():
    cfg = make_config(fc=28e9, bw=400e6, mtot=8, delta_tau=2.5e-9, nrx=1)
    X = make_pilots(cfg, range(8))
    rng = np.random.default_rng(5)
    Y = np.array([receive_symbol(cfg, MultipathChannel(()), PulseShape(), [1.0], X, noise_seed=rng).y
                  for _ in range(20000)])
    C = Y.T @ np.conj(Y) / len(Y)
    off = C[~np.eye(8, dtype=bool)]
    bound = 3 * cfg.noise_variance / np.sqrt(len(Y))
    assert np.all(np.abs(off) < 2 * bound)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000), st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_linear_in_pilots(seed, c):
    small_cfg = make_config(fc=28e9, bw=400e6, mtot=64, ncp=16, delta_tau=2.5e-9, nrx=4, ntx=2)
    ch = generate_paths(seed, PathSpec(n_paths=2, delay_range=(0, 5e-9)))
    rng = np.random.default_rng(seed)
    X1, X2 = rng.standard_normal((2, 64)) + 0j
    v = np.ones(small_cfg.ntx)
    Y = lambda X: receive_symbol(small_cfg, ch, PulseShape(), v, X, noiseless=True).y
    assert np.allclose(Y(X1 + c * X2), Y(X1) + c * Y(X2), atol=1e-9)


def test_cp_violation(small_cfg):
    with pytest.raises(CpViolation):
        receive_symbol(small_cfg, los_channel(delay=40e-9), PulseShape(), [1, 1], np.ones(64), noiseless=True)
