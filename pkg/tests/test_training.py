import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ttd_beamtrain.arraylab import DesignPoint, build_lut, in_design_subset, rx_steering, ttd_combiner
from ttd_beamtrain.channel import (
    MultipathChannel,
    PathSpec,
    PulseShape,
    aligned_tx_beamformer,
    freq_channel,
    generate_paths,
    los_channel,
)
from ttd_beamtrain.config import make_config, subcarrier_frequency
from ttd_beamtrain.exceptions import EmptyBlock
from ttd_beamtrain.phy import make_pilots, receive_symbol, resource_blocks
from ttd_beamtrain.training import (
    estimate_aoa,
    n0_for_snr,
    paa_beam_angles,
    paa_codebook,
    paa_dft_training,
    post_training_gain,
    rsrp,
    snr,
    snr_db,
    spectral_efficiency,
)

FC, BW = 28e9, 400e6
P = PulseShape()


def coverage_with_cp(ntx=1):
    return make_config(fc=FC, bw=BW, mtot=8, ncp=8, delta_tau=2.5e-9, nrx=8, ntx=ntx)


def noiseless_rsrp(cfg, ch, pilots):
    v = aligned_tx_beamformer(ch, cfg) if len(ch) else np.ones(cfg.ntx)
    y = receive_symbol(cfg, ch, P, v, make_pilots(cfg, pilots), noiseless=True)
    return rsrp(y, resource_blocks(pilots, cfg.mtot, 0))


def test_rsrp_zero_channel():
    cfg = coverage_with_cp()
    assert np.all(noiseless_rsrp(cfg, MultipathChannel(()), range(8)) == 0)


def test_rsrp_single_index_blocks():
    Y = np.array([1 + 1j, 2, -3j, 0.5])
    assert np.allclose(rsrp(Y, {m: [m] for m in range(4)}), np.abs(Y) ** 2)
    assert np.allclose(rsrp(Y, [[0, 1], [2, 3]]), [6.0, 9.25])
    with pytest.raises(EmptyBlock):
        rsrp(Y, [[0], []])


def test_rsrp_peaks_at_aligned_pilot():
    cfg = coverage_with_cp(ntx=2)
    lut = build_lut(cfg)
    for m0 in (0, 2, 5):
        r = noiseless_rsrp(cfg, los_channel(aoa=lut[m0], aod=0.2), range(8))
        assert int(np.argmax(r)) == m0


def test_estimate_unique_max_and_ties():
    cfg = coverage_with_cp()
    lut = build_lut(cfg)
    r = np.zeros(8)
    r[3] = 5.0
    res = estimate_aoa(r, lut)
    assert res.m_best == 3 and res.aoa_estimate == lut[3] and res.symbols_used == 1
    assert estimate_aoa(np.ones(8), lut).m_best == 0
    with pytest.raises(ValueError):
        estimate_aoa(np.ones(7), lut)


@pytest.mark.parametrize("aoa,freq", [(-np.pi / 6, 28.1e9), (np.pi / 6, 27.9e9)])
def test_sixty_degree_sector(aoa, freq):
    cfg = coverage_with_cp()
    res = estimate_aoa(noiseless_rsrp(cfg, los_channel(aoa=aoa), range(8)), build_lut(cfg))
    assert subcarrier_frequency(cfg, res.m_best) == freq


@settings(max_examples=30, deadline=None)
@given(st.floats(-np.pi / 2, np.pi / 2), st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3,
                                                             allow_nan=False, allow_infinity=False))
def test_decision_scale_invariant(aoa, c):
    cfg = coverage_with_cp()
    v = [1.0]
    y = receive_symbol(cfg, los_channel(aoa=aoa), P, v, make_pilots(cfg, range(8)), noiseless=True).y
    blocks = resource_blocks(range(8), 8, 0)
    lut = build_lut(cfg)
    assert estimate_aoa(rsrp(y, blocks), lut).m_best == estimate_aoa(rsrp(c * y, blocks), lut).m_best


def test_noiseless_lut_angle_recovered():
    cfg = make_config(fc=FC, bw=BW, mtot=16, ncp=8, delta_tau=2.5e-9, nrx=8)
    lut = build_lut(cfg, exact=True)
    for m0 in range(16):
        if abs(lut[m0]) == np.pi / 2:
            continue
        res = estimate_aoa(noiseless_rsrp(cfg, los_channel(aoa=lut[m0]), range(16)), lut)
        assert res.aoa_estimate == lut[m0]


def test_estimation_error_bound_in_design_subset():
    cfg = make_config(fc=FC, bw=BW, mtot=10, ncp=8, delta_tau=2.6e-9, nrx=8)
    assert in_design_subset(DesignPoint(cfg.delta_tau, cfg.mtot, 0.6), FC, BW, cfg.nrx)
    lut = build_lut(cfg)
    s = np.sort(np.sin(lut.angles))
    gaps = np.diff(np.concatenate([s, [s[0] + 2.0]]))  # beam space wraps at +-1
    squint = BW / (2 * FC)
    for aoa in np.linspace(-1.5, 1.5, 61):
        est = estimate_aoa(noiseless_rsrp(cfg, los_channel(aoa=aoa), range(10)), lut).aoa_estimate
        d = abs(np.sin(est) - np.sin(aoa))
        d = min(d, 2.0 - d)
        assert d <= gaps.max() / 2 + squint


def test_paa_recovers_dft_beam():
    cfg = make_config(fc=FC, bw=BW, mtot=64, ncp=8, delta_tau=2.5e-9, nrx=8, ntx=4)
    angles = paa_beam_angles(8)
    for k in (0, 3, 6):
        ch = los_channel(aoa=angles[k], aod=0.1)
        res = paa_dft_training(cfg, ch, P, aligned_tx_beamformer(ch, cfg), 8, noiseless=True)
        assert res.m_best == k and res.symbols_used == 8


def test_paa_single_beam():
    cfg = make_config(fc=FC, bw=BW, mtot=64, ncp=8, delta_tau=2.5e-9, nrx=8)
    res = paa_dft_training(cfg, los_channel(aoa=0.9), P, [1.0], 1, noise_seed=0)
    assert res.m_best == 0 and res.symbols_used == 1
    with pytest.raises(ValueError):
        paa_dft_training(cfg, los_channel(), P, [1.0], 0)


@pytest.mark.parametrize("K", [4, 8, 32])
def test_paa_angles_point_codebook_beams(K):
    W = paa_codebook(K, 16)
    a = rx_steering(paa_beam_angles(K), FC, 16, FC)
    assert np.allclose(np.abs(np.sum(np.conj(W) * a, axis=1)), 16.0)


@pytest.mark.parametrize("K", [4, 8, 16])
def test_ttd_mimics_dft_codebook(K):
    cfg = make_config(fc=FC, bw=BW, mtot=K, delta_tau=1 / BW, nrx=K)
    assert FC * cfg.delta_tau == 70.0
    assert np.allclose(ttd_combiner(cfg, np.arange(K)), paa_codebook(K, K), rtol=0, atol=1e-12)


def test_post_training_gain():
    assert post_training_gain(0.4, 0.4, 16, FC) == pytest.approx(1.0)
    assert post_training_gain(0.0, np.arcsin(2 / 16), 16, FC) == pytest.approx(0.0, abs=1e-20)
    assert post_training_gain(0.1, -0.5, 16, FC) == pytest.approx(post_training_gain(-0.5, 0.1, 16, FC))
    g = post_training_gain(np.linspace(-1, 1, 7), 0.2, 16, FC)
    assert np.all((g >= 0) & (g <= 1 + 1e-12))


def test_snr_properties(small_cfg):
    ch = generate_paths(2, PathSpec(n_paths=2, delay_range=(0, 5e-9)))
    v = aligned_tx_beamformer(ch, small_cfg)
    base = snr(small_cfg, ch, P, v)
    assert snr(small_cfg, MultipathChannel(()), P, v) == 0.0
    assert snr(small_cfg, ch.scaled(2.0), P, v) == pytest.approx(4 * base, rel=1e-12)
    assert snr(small_cfg.replace(n0=3.0), ch, P, v) == pytest.approx(base / 3, rel=1e-12)
    assert snr_db(small_cfg, ch, P, v) == pytest.approx(10 * np.log10(base))


@settings(max_examples=30, deadline=None)
@given(st.floats(-30, 40), st.integers(0, 10**6))
def test_snr_calibration(target, seed):
    cfg = make_config(fc=FC, bw=BW, mtot=64, ncp=16, delta_tau=2.5e-9, nrx=4, ntx=2)
    ch = generate_paths(seed, PathSpec(n_paths=2, delay_range=(0, 5e-9)))
    v = aligned_tx_beamformer(ch, cfg)
    sig = float(np.sum(np.abs(np.array([freq_channel(cfg, ch, P, m) @ v for m in range(64)])) ** 2))
    tuned = cfg.replace(n0=n0_for_snr(sig, cfg, target))
    assert snr_db(tuned, ch, P, v) == pytest.approx(target, abs=1e-9 * max(1, abs(target)))


def test_spectral_efficiency(small_cfg):
    ch = los_channel(aoa=0.3, aod=-0.2)
    v = aligned_tx_beamformer(ch, small_cfg)
    assert spectral_efficiency(small_cfg, MultipathChannel(()), P, v, 0.3) == 0.0
    # direct evaluation with the trained frequency-flat combiner
    w = rx_steering(0.3, FC, small_cfg.nrx, FC) / np.sqrt(small_cfg.nrx)
    H = freq_channel(small_cfg, ch, P, np.arange(64))
    power = np.abs(np.einsum("n,mnq,q->m", np.conj(w), H, v)) ** 2
    direct = np.mean(np.log2(1 + power / (small_cfg.nrx * small_cfg.noise_variance)))
    assert spectral_efficiency(small_cfg, ch, P, v, 0.3) == pytest.approx(direct, rel=1e-12)
    assert spectral_efficiency(small_cfg, ch, P, v, w * 5) == pytest.approx(direct, rel=1e-12)
    assert spectral_efficiency(small_cfg, ch, P, v, lambda m: w) == pytest.approx(direct, rel=1e-12)
    worse = spectral_efficiency(small_cfg, ch, P, v, 0.9)
    assert worse < direct
    with pytest.raises(ValueError):
        spectral_efficiency(small_cfg.replace(n0=0.0), ch, P, v, 0.3)
