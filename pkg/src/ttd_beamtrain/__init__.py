"""True-time-delay array beam training over CP-OFDM.

Sounding-beam design, one-shot AoA estimation, a phased-array DFT benchmark
and a sample-level oracle for the frequency-domain received-symbol model.
"""
from .arraylab import (
    DesignPoint,
    SoundingLUT,
    beam_center,
    beam_pattern,
    build_lut,
    epsilon_beamwidth,
    gain,
    in_design_subset,
    min_max_gain,
    required_subcarriers,
    rx_steering,
    ttd_combiner,
)
from .channel import (
    MultipathChannel,
    PathComponent,
    PathSpec,
    PulseShape,
    aligned_tx_beamformer,
    freq_channel,
    generate_paths,
    load_channel,
    los_channel,
    save_channel,
)
from .config import (
    SystemConfig,
    ValidatedConfig,
    check_cp_condition,
    load_config,
    make_config,
    subcarrier_frequency,
    validate,
)
from .estimators import PAABeamTrainer, TTDBeamTrainer
from .exceptions import *  # noqa: F401,F403
from .harness import ExperimentSpec, run_benchmark, run_design_scan, run_experiment, run_los_sweep, run_verify
from .oracle import discrete_channel_taps, simulate_time_domain, verify_proposition1
from .phy import PilotGrid, ReceivedSymbol, make_pilots, receive_symbol, select_pilot_subcarriers
from .training import (
    TrainingResult,
    estimate_aoa,
    paa_dft_training,
    post_training_gain,
    rsrp,
    snr,
    spectral_efficiency,
)

__version__ = "0.1.0"
