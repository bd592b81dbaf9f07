"""
Emitter waveform and link models: LFM pulse trains, range resolution,
link-budget SNR, pass-geometry gain and additive white Gaussian noise.
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from .schemas import (
    SPEED_OF_LIGHT,
    BasebandSignal,
    InvalidArgumentError,
    PassScenario,
    PulseTrainParams,
)

logger = logging.getLogger(__name__)


def pulse_phase(params: PulseTrainParams, times_s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Time since the current pulse start and whether each instant lies inside a pulse."""
    t = np.asarray(times_s, dtype=float)
    # small guard so instants sitting exactly on a pulse start land in that pulse
    index = np.floor(t / params.pri_s + 1e-12)
    local = np.clip(t - index * params.pri_s, 0.0, None)
    return local, local < params.pulse_width_s


def instantaneous_frequency(params: PulseTrainParams, times_s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Baseband chirp frequency, swept from -BW/2 to +BW/2 across each pulse.

    Returns:
        (frequency offsets in Hz, in-pulse mask)
    """
    local, in_pulse = pulse_phase(params, times_s)
    offset = -params.chirp_bandwidth_hz / 2 + params.chirp_rate_hz_per_s * local
    return offset, in_pulse


def lfm_pulse_train(params: PulseTrainParams, duration_s: float,
                    start_time_s: float = 0.0) -> BasebandSignal:
    """Unit-amplitude LFM pulses starting at every multiple of the PRI, zero between pulses."""
    if duration_s <= 0 or not math.isfinite(duration_s):
        raise InvalidArgumentError("duration_s must be positive")
    if params.sample_rate_hz < 2.5 * params.chirp_bandwidth_hz:
        raise InvalidArgumentError(
            f"sample rate {params.sample_rate_hz:.4g} Hz too low for bandwidth "
            f"{params.chirp_bandwidth_hz:.4g} Hz"
        )
    count = int(round(duration_s * params.sample_rate_hz))
    times = start_time_s + np.arange(count) / params.sample_rate_hz
    local, in_pulse = pulse_phase(params, times)
    phase = 2 * np.pi * (-params.chirp_bandwidth_hz / 2 * local
                         + params.chirp_rate_hz_per_s / 2 * local ** 2)
    samples = np.where(in_pulse, np.exp(1j * phase), 0.0)
    logger.debug(f"Generated {count} samples, {int(np.count_nonzero(in_pulse))} in pulse")
    return BasebandSignal(
        samples=samples,
        sample_rate_hz=params.sample_rate_hz,
        start_time_s=start_time_s,
        center_frequency_hz=params.center_frequency_hz,
    )


def range_resolution(bandwidth_hz: float, incidence_rad: float) -> float:
    """Ground range resolution c / (2 * BW * sin(incidence))."""
    if bandwidth_hz <= 0:
        raise InvalidArgumentError("bandwidth_hz must be positive")
    if not 0 < incidence_rad <= math.pi / 2 + 1e-12:
        raise InvalidArgumentError("incidence_rad must lie in (0, pi/2]")
    return SPEED_OF_LIGHT / (2 * bandwidth_hz * math.sin(incidence_rad))


def received_power_w(scenario: PassScenario, frequency_hz: float) -> float:
    """Boresight received power from the Friis transmission equation."""
    if frequency_hz <= 0:
        raise InvalidArgumentError("frequency_hz must be positive")
    wavelength = SPEED_OF_LIGHT / frequency_hz
    return (scenario.transmit_power_w * scenario.tx_gain * scenario.rx_gain * wavelength ** 2
            / (4 * math.pi * scenario.range_m) ** 2)


def link_budget_snr(scenario: PassScenario, frequency_hz: float, bandwidth_hz: float) -> float:
    """Linear SNR Pt*Gt*Gr*lambda^2 / ((4*pi*R)^2 * k*T*B)."""
    if bandwidth_hz <= 0:
        raise InvalidArgumentError("bandwidth_hz must be positive")
    return received_power_w(scenario, frequency_hz) / scenario.noise_power_w(bandwidth_hz)


def _sample_frequencies(signal: BasebandSignal) -> np.ndarray:
    """Instantaneous baseband frequency of each sample from the phase increment."""
    samples = signal.samples
    if samples.size < 2:
        return np.zeros(samples.size)
    increment = np.angle(samples[1:] * np.conj(samples[:-1]))
    increment = np.append(increment, increment[-1])
    # the first sample of a pulse has no valid predecessor, borrow the next increment
    starts = np.flatnonzero((samples[1:] != 0) & (samples[:-1] == 0)) + 1
    increment[starts] = increment[np.minimum(starts + 1, samples.size - 1)]
    return increment * signal.sample_rate_hz / (2 * np.pi)


def apply_pass_gain(signal: BasebandSignal, scenario: PassScenario,
                    reference_frequency_hz: Optional[float] = None) -> BasebandSignal:
    """Scale a unit-amplitude signal by the link budget and the antenna cut along the pass.

    The receiver sits at angle arctan(v * (t - D/2) / R) from boresight, so each
    sample is weighted by the cut at its instantaneous RF frequency and that angle.
    Amplitude is chosen so |x|^2 equals the boresight received power in watts.
    """
    times = signal.times()
    theta = scenario.beam_angle_rad(times)
    limit = getattr(scenario.antenna_cut, 'max_angle_rad', math.pi / 2)
    if np.any(np.abs(theta) > limit):
        raise InvalidArgumentError("pass angle outside the pattern domain")

    reference = reference_frequency_hz or signal.center_frequency_hz
    amplitude = math.sqrt(received_power_w(scenario, reference))
    rf_frequency = signal.center_frequency_hz + _sample_frequencies(signal)
    active = signal.samples != 0
    gain = np.zeros(signal.samples.size)
    if np.any(active):
        gain[active] = scenario.gain(rf_frequency[active], theta[active])
    return signal.model_copy(update={'samples': _freeze(signal.samples * amplitude * gain)})


def complex_noise(count: int, noise_power_w: float, rng: np.random.Generator) -> np.ndarray:
    scale = math.sqrt(noise_power_w / 2)
    return scale * (rng.standard_normal(count) + 1j * rng.standard_normal(count))


def add_awgn(signal: BasebandSignal, noise_power_w: float, seed: Optional[int] = None) -> BasebandSignal:
    """Add circular complex Gaussian noise of the given total power per sample."""
    if noise_power_w < 0 or not math.isfinite(noise_power_w):
        raise InvalidArgumentError("noise_power_w must be non-negative")
    if noise_power_w == 0:
        return signal.model_copy(update={'samples': _freeze(np.array(signal.samples))})
    rng = np.random.default_rng(seed)
    noisy = signal.samples + complex_noise(signal.samples.size, noise_power_w, rng)
    return signal.model_copy(update={'samples': _freeze(noisy)})


def _freeze(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples, dtype=complex)
    samples.setflags(write=False)
    return samples
