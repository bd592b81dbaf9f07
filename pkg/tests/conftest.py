"""
Pytest configuration and shared fixtures for the narrowband sweeper receiver simulator.
"""

import os
import sys
import textwrap

import numpy as np
import pytest

# Add the src directory to the Python path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from nsr_sim.antenna import PatternEvaluator
from nsr_sim.passes import ReceiverChains
from nsr_sim.receiver import make_sweep_plan
from nsr_sim.schemas import (
    BOLTZMANN,
    AdcParams,
    ArrayGeometry,
    DlvaParams,
    PassScenario,
    PatternCut,
    PulseTrainParams,
)


@pytest.fixture
def line_array():
    """100-element line with 1.5 cm spacing."""
    return ArrayGeometry(m_count=100, n_count=1, spacing_x_m=0.015, spacing_y_m=0.015)


@pytest.fixture
def short_pulses():
    """40 MHz chirp, 4 us pulses every 20 us, sampled at 100 MHz."""
    return PulseTrainParams(
        center_frequency_hz=9.6e9,
        chirp_bandwidth_hz=40e6,
        pulse_width_s=4e-6,
        pri_s=20e-6,
        sample_rate_hz=100e6,
    )


@pytest.fixture
def lossless_dlva():
    """Detector with a floor far below unit-power signals."""
    return DlvaParams(slope_v_per_decade=0.25, offset_v=2.0, dynamic_range_db=100.0,
                      noise_floor_w=1e-8)


@pytest.fixture
def fine_adc():
    return AdcParams(bits=16, full_scale_v=5.0, sample_rate_hz=10e6)


@pytest.fixture
def pass_pulses():
    """X-band chirp filling the 400 MHz band, 0.1 ms pulses every 0.5 ms."""
    return PulseTrainParams(
        center_frequency_hz=9.6e9,
        chirp_bandwidth_hz=400e6,
        pulse_width_s=1e-4,
        pri_s=5e-4,
        sample_rate_hz=1e9,
    )


@pytest.fixture
def pass_scenario(line_array):
    """Seven second pass, 7 km/s at 600 km, 20 dB boresight SNR in 400 MHz."""
    scenario = PassScenario(
        transmit_power_w=1.0,
        range_m=6.0e5,
        ground_beam_speed_mps=7000.0,
        pass_duration_s=7.0,
        antenna_cut=PatternEvaluator(line_array),
    )
    return scenario.with_boresight_snr(20.0, 9.6e9, 400e6)


def chains_for(plan, temperature_k=290.0, adc_rate_hz=1e6, shape="butterworth"):
    adc = AdcParams(bits=12, full_scale_v=5.0, sample_rate_hz=adc_rate_hz)
    return ReceiverChains(
        plan=plan,
        nsr_dlva=DlvaParams(noise_floor_w=BOLTZMANN * temperature_k * plan.nbpf_hz),
        nsr_adc=adc,
        nbpf_shape=shape,
        sed_bpf_hz=plan.bpf_hz,
        sed_dlva=DlvaParams(noise_floor_w=BOLTZMANN * temperature_k * plan.bpf_hz),
        sed_adc=adc,
    )


@pytest.fixture
def make_chains():
    """Factory for receiver chains around a sweep plan."""
    return chains_for


@pytest.fixture
def pass_chains():
    """40 steps of 10 MHz over 9.4-9.8 GHz, 100 ms ramp, 1 MS/s video."""
    return chains_for(make_sweep_plan(400e6, 10e6, 0.1, start_frequency_hz=9.4e9))


SMALL_SCENARIO = textwrap.dedent("""\
    name: small
    emitter:
      center_frequency_hz: 9.6e9
      chirp_bandwidth_hz: 4.0e8
      pulse_width_s: 1.2e-4
      pri_s: 6.0e-4
      sample_rate_hz: 1.0e9
    antenna:
      m_count: 100
      spacing_x_m: 0.015
    pass:
      boresight_snr_db: 20.0
      range_m: 6.0e5
      ground_beam_speed_mps: 7000.0
      pass_duration_s: 1.0
    nsr:
      bpf_hz: 4.0e8
      nbpf_hz: 1.0e7
      ramp_period_s: 0.02
      start_frequency_hz: 9.4e9
      adc:
        sample_rate_hz: 1.0e6
    sed:
      adc:
        sample_rate_hz: 1.0e6
    output:
      directory: out
      formats: [csv]
    seeds: [3]
    """)


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario YAML, optionally with text replacements, and return its path."""
    def _write(replacements=None, text=SMALL_SCENARIO, name='scenario.yaml'):
        for old, new in (replacements or {}).items():
            assert old in text, f"replacement target {old!r} not in scenario"
            text = text.replace(old, new)
        path = tmp_path / name
        path.write_text(text)
        return path
    return _write


# Pytest markers for different test types
def pytest_configure(config):
    """Configure pytest markers."""
    config.addinivalue_line("markers", "unit: Unit tests")
    config.addinivalue_line("markers", "integration: Integration tests")
    config.addinivalue_line("markers", "slow: Slow running tests")


# Custom assertions
class Helpers:
    """Helper methods for testing."""

    @staticmethod
    def cut_from(frequency_hz, power_db, times=None, angles=None, dwell_s=None):
        """Build a normalized PatternCut from raw dB values."""
        power_db = np.asarray(power_db, dtype=float)
        times = np.arange(power_db.size, dtype=float) if times is None else times
        return PatternCut(
            frequency_hz=frequency_hz,
            times_s=times,
            power_db=power_db - power_db.max(),
            angles_rad=angles,
            dwell_s=dwell_s,
        )

    @staticmethod
    def assert_normalized(cut):
        """Assert that a cut peaks at exactly 0 dB."""
        assert np.max(cut.power_db) == pytest.approx(0.0, abs=1e-12)


@pytest.fixture
def helpers():
    """Provide helper methods for tests."""
    return Helpers
