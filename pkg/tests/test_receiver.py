"""
Tests for the sweep plan, detector chain, NSR and SED processing.
"""

import numpy as np
import pytest

from nsr_sim.receiver import (
    adc_quantize,
    bin_index,
    dlva_detect,
    dlva_to_power_db,
    make_sweep_plan,
    nbpf_response,
    nsr_process,
    reconstruct_spectrum,
    sed_process,
    validate_sweep_plan,
)
from nsr_sim.schemas import AdcParams, BasebandSignal, DlvaParams, InvalidArgumentError, PowerGrid
from nsr_sim.waveform import add_awgn, lfm_pulse_train


class TestSweepPlan:
    """Test plan construction and the stop-duration check."""

    def test_demo_plan(self):
        plan = make_sweep_plan(400e6, 10e6, 0.1, start_frequency_hz=9.4e9)
        assert plan.step_count == 40
        assert plan.stop_duration_s == pytest.approx(2.5e-3)

    def test_non_integer_ratio(self):
        with pytest.raises(InvalidArgumentError):
            make_sweep_plan(400e6, 30e6, 0.1)

    def test_nbpf_wider_than_bpf(self):
        with pytest.raises(InvalidArgumentError):
            make_sweep_plan(10e6, 20e6, 0.1)

    def test_stop_longer_than_pri_is_invalid(self):
        plan = make_sweep_plan(400e6, 10e6, 0.1)
        result = validate_sweep_plan(plan, 1.25e-3)
        assert not result.valid
        assert result.margin_s == pytest.approx(-1.25e-3)
        assert "T_stop < PRI" in result.message

    def test_stop_shorter_than_pri_is_valid(self):
        plan = make_sweep_plan(400e6, 10e6, 0.1)
        result = validate_sweep_plan(plan, 2.6e-3)
        assert result.valid
        assert result.margin_s == pytest.approx(0.1e-3)
        assert result.pulses_per_dwell == pytest.approx(2.5 / 2.6)

    def test_twice_pri_is_invalid(self):
        plan = make_sweep_plan(40e6, 4e6, 400e-6)
        assert plan.stop_duration_s == pytest.approx(40e-6)
        assert not validate_sweep_plan(plan, 20e-6).valid


class TestFilterAndDetector:
    """Test NBPF shape, DLVA and ADC."""

    def test_butterworth_half_power_edges(self):
        response = nbpf_response(np.array([-5e6, 0.0, 5e6]), 10e6)
        np.testing.assert_allclose(response ** 2, [0.5, 1.0, 0.5])

    def test_brickwall(self):
        response = nbpf_response(np.array([-6e6, 4e6]), 10e6, "brickwall")
        np.testing.assert_array_equal(response, [0.0, 1.0])

    def test_unknown_shape(self):
        with pytest.raises(InvalidArgumentError):
            nbpf_response(np.zeros(1), 10e6, "gaussian")

    def test_dlva_log_law_and_saturation(self):
        dlva = DlvaParams(slope_v_per_decade=0.25, offset_v=5.0, dynamic_range_db=60.0,
                          noise_floor_w=1e-12)
        volts = dlva_detect(np.array([1e-15, 1e-12, 1e-9, 1e-6, 1e-3]), dlva)
        np.testing.assert_allclose(volts, [2.0, 2.0, 2.75, 3.5, 3.5])
        assert np.all(np.diff(volts) >= 0)

    def test_dlva_inverse(self):
        dlva = DlvaParams(noise_floor_w=1e-13)
        power = np.array([1e-12, 3e-11, 5e-9])
        np.testing.assert_allclose(dlva_to_power_db(dlva_detect(power, dlva), dlva), 10 * np.log10(power))

    def test_adc_error_bound(self):
        adc = AdcParams(bits=8, full_scale_v=1.0)
        x = np.linspace(-0.99, 0.99, 1001)
        assert np.max(np.abs(adc_quantize(x, adc) - x)) <= adc.lsb_v / 2 + 1e-15

    def test_adc_zero_and_saturation(self):
        adc = AdcParams(bits=8, full_scale_v=1.0)
        q = adc_quantize(np.array([0.0, 2.0, -2.0]), adc)
        np.testing.assert_allclose(q, [adc.lsb_v / 2, 1 - adc.lsb_v / 2, -1 + adc.lsb_v / 2])

    def test_adc_idempotent(self):
        adc = AdcParams(bits=10, full_scale_v=5.0)
        x = np.random.default_rng(0).uniform(-6, 6, 500)
        once = adc_quantize(x, adc)
        np.testing.assert_array_equal(adc_quantize(once, adc), once)


class TestNsrProcess:
    """Test the stepped sweep on sample-level signals."""

    def _plan(self, pulses, stop_fraction):
        ramp = 10 * stop_fraction * pulses.pri_s
        start = pulses.center_frequency_hz - 20e6
        return make_sweep_plan(40e6, 4e6, ramp, start_frequency_hz=start)

    def test_dwell_spanning_a_full_pri_fills_every_bin(self, short_pulses, lossless_dlva, fine_adc):
        plan = self._plan(short_pulses, 1.1)
        signal = lfm_pulse_train(short_pulses, 2 * plan.ramp_period_s)
        grid = nsr_process(signal, plan, lossless_dlva, fine_adc)
        assert grid.power_db.shape == (2, 10)

        spectrum = reconstruct_spectrum(grid)
        assert spectrum.empty_interior_bins == []
        assert spectrum.bandwidth_hz == pytest.approx(40e6, abs=8e6)
        assert spectrum.center_frequency_hz == pytest.approx(short_pulses.center_frequency_hz, abs=2e6)

    def test_stop_just_under_pri_keeps_bandwidth(self, short_pulses, lossless_dlva, fine_adc):
        plan = self._plan(short_pulses, 0.9)
        signal = lfm_pulse_train(short_pulses, 2 * plan.ramp_period_s)
        spectrum = reconstruct_spectrum(nsr_process(signal, plan, lossless_dlva, fine_adc))
        assert spectrum.bandwidth_hz == pytest.approx(40e6, abs=2 * plan.nbpf_hz)

    def test_short_dwell_misses_bin_illumination(self, short_pulses, lossless_dlva, fine_adc):
        plan = self._plan(short_pulses, 0.45)
        assert validate_sweep_plan(plan, short_pulses.pri_s).valid
        signal = lfm_pulse_train(short_pulses, plan.ramp_period_s)
        grid = nsr_process(signal, plan, lossless_dlva, fine_adc)
        spectrum = reconstruct_spectrum(grid)
        assert set(spectrum.empty_interior_bins) >= {1, 3, 5}

    def test_tone_centroid(self, short_pulses, lossless_dlva, fine_adc):
        plan = self._plan(short_pulses, 1.1)
        times = np.arange(int(round(plan.ramp_period_s * 100e6))) / 100e6
        tone = BasebandSignal(samples=np.exp(2j * np.pi * 6e6 * times), sample_rate_hz=100e6,
                              center_frequency_hz=short_pulses.center_frequency_hz)
        spectrum = reconstruct_spectrum(nsr_process(tone, plan, lossless_dlva, fine_adc))
        assert spectrum.center_frequency_hz == pytest.approx(tone.center_frequency_hz + 6e6, abs=2e6)
        assert spectrum.bandwidth_hz == pytest.approx(4e6)

    def test_plan_outside_sampled_band(self, short_pulses, lossless_dlva, fine_adc):
        plan = make_sweep_plan(40e6, 4e6, 180e-6, start_frequency_hz=short_pulses.center_frequency_hz + 40e6)
        signal = lfm_pulse_train(short_pulses, 180e-6)
        with pytest.raises(InvalidArgumentError):
            nsr_process(signal, plan, lossless_dlva, fine_adc)

    def test_signal_shorter_than_ramp(self, short_pulses, lossless_dlva, fine_adc):
        plan = self._plan(short_pulses, 0.9)
        signal = lfm_pulse_train(short_pulses, plan.ramp_period_s / 2)
        with pytest.raises(InvalidArgumentError):
            nsr_process(signal, plan, lossless_dlva, fine_adc)

    def test_twice_pri_refused_yet_gap_free(self, short_pulses, lossless_dlva, fine_adc):
        plan = self._plan(short_pulses, 2.0)
        assert plan.stop_duration_s == pytest.approx(2 * short_pulses.pri_s)
        assert not validate_sweep_plan(plan, short_pulses.pri_s).valid
        signal = lfm_pulse_train(short_pulses, plan.ramp_period_s)
        spectrum = reconstruct_spectrum(nsr_process(signal, plan, lossless_dlva, fine_adc))
        assert spectrum.empty_interior_bins == []
        assert spectrum.bandwidth_hz == pytest.approx(40e6, abs=8e6)

    def _tones(self, plan, pulses, offsets_hz, amplitudes):
        fs = pulses.sample_rate_hz
        times = np.arange(int(round(plan.ramp_period_s * fs))) / fs
        samples = sum(a * np.exp(2j * np.pi * f * times) for f, a in zip(offsets_hz, amplitudes))
        return BasebandSignal(samples=samples, sample_rate_hz=fs,
                              center_frequency_hz=pulses.center_frequency_hz)

    def test_crossover_between_steps(self, short_pulses, lossless_dlva, fine_adc):
        plan = self._plan(short_pulses, 1.1)
        fc = short_pulses.center_frequency_hz
        between = nsr_process(self._tones(plan, short_pulses, [0.0], [1.0]), plan,
                              lossless_dlva, fine_adc)
        centered = nsr_process(self._tones(plan, short_pulses, [2e6], [1.0]), plan,
                               lossless_dlva, fine_adc)
        lower, upper = bin_index(between, fc - 2e6), bin_index(between, fc + 2e6)
        assert upper == lower + 1
        left, right = between.power_db[0, lower], between.power_db[0, upper]
        on_center = centered.power_db[0, upper]
        assert abs(left - right) < 0.5
        assert left - on_center == pytest.approx(-3.0, abs=0.5)
        assert right - on_center == pytest.approx(-3.0, abs=0.5)

    def test_matches_fixed_filter_on_stationary_input(self, short_pulses, lossless_dlva, fine_adc):
        plan = self._plan(short_pulses, 1.1)
        signal = self._tones(plan, short_pulses, [6e6, -10e6], [1.0, 0.5])
        grid = nsr_process(signal, plan, lossless_dlva, fine_adc)

        fs = signal.sample_rate_hz
        times = signal.times()
        frequencies = np.fft.fftfreq(signal.samples.size, d=1 / fs)
        offsets = plan.step_centers_hz - signal.center_frequency_hz
        for i, offset in enumerate(offsets):
            mixed = signal.samples * np.exp(-2j * np.pi * offset * times)
            filtered = np.fft.ifft(np.fft.fft(mixed) * nbpf_response(frequencies, plan.nbpf_hz))
            fixed_db = 10 * np.log10(np.max(np.abs(filtered) ** 2))
            if fixed_db > -70.0:
                assert grid.power_db[0, i] == pytest.approx(fixed_db, abs=1.0)


class TestSedProcess:
    """Test wideband envelope detection."""

    @pytest.fixture
    def dlva(self):
        return DlvaParams(slope_v_per_decade=0.25, offset_v=4.0, dynamic_range_db=140.0,
                          noise_floor_w=1e-12)

    @pytest.fixture
    def adc(self):
        return AdcParams(bits=12, full_scale_v=5.0, sample_rate_hz=1e6)

    def test_constant_tone_gives_constant_video(self, dlva, adc):
        tone = BasebandSignal(samples=np.full(4000, 0.1 + 0j), sample_rate_hz=4e6, center_frequency_hz=1e9)
        video = sed_process(tone, 4e6, dlva, adc)
        assert video.power_db.size == 1000
        assert np.ptp(video.power_db) == 0.0
        assert video.power_db[0] == pytest.approx(-20.0, abs=0.1)

    def test_noise_levels_track_bandwidth_ratio(self, dlva, adc):
        silent = BasebandSignal(samples=np.zeros(200_000), sample_rate_hz=1e6, center_frequency_hz=1e9)
        wide = sed_process(add_awgn(silent, 1.0, seed=1), 1e6, dlva, adc)
        narrow = sed_process(add_awgn(silent, 1.0 / 40, seed=2), 1e6, dlva, adc)
        difference = np.mean(wide.power_db) - np.mean(narrow.power_db)
        assert difference == pytest.approx(10 * np.log10(40), abs=0.1)


class TestReconstructSpectrum:
    """Test spectrum statistics on hand-built grids."""

    def _grid(self, levels):
        levels = np.asarray(levels, dtype=float)
        return PowerGrid(times_s=[0.0], frequencies_hz=1e9 + np.arange(levels.size) * 1e6,
                         power_db=levels[None, :], nbpf_hz=1e6, ramp_period_s=1e-3)

    def test_interior_gap_reported(self):
        spectrum = reconstruct_spectrum(self._grid([-80, -10, -10, -80, -10, -10, -80]))
        assert spectrum.empty_interior_bins == [3]
        assert spectrum.bandwidth_hz == pytest.approx(5e6)

    def test_bin_index(self):
        grid = self._grid([0, 0, 0])
        assert bin_index(grid, 1e9 + 1.4e6) == 1
        assert bin_index(grid, 1e9 + 5e6) is None
