import pytest

from ttd_beamtrain.config import make_config


@pytest.fixture
def coverage_cfg():
    return make_config(fc=28e9, bw=400e6, mtot=8, delta_tau=2.5e-9, nrx=8)


@pytest.fixture
def los_cfg():
    return make_config(fc=28e9, bw=400e6, mtot=2048, delta_tau=2.5e-9, nrx=16, ntx=64)


@pytest.fixture
def small_cfg():
    return make_config(fc=28e9, bw=400e6, mtot=64, ncp=16, delta_tau=2.5e-9, nrx=4, ntx=2)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS, key=lambda k: (int(k.rstrip("abc")), k)):
            terminalreporter.write_line(RESULTS[key])
