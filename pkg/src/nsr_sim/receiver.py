"""
Receiver chains: the stepped narrowband sweeper (NSR) and the wideband
single-envelope detector (SED), with their DLVA and ADC stages and
spectrum reconstruction from the NSR power grid.
"""

import logging
import math
from typing import Literal, Optional

import numpy as np

from .schemas import (
    AdcParams,
    BasebandSignal,
    DlvaParams,
    InvalidArgumentError,
    PowerGrid,
    SpectrumEstimate,
    SweepPlan,
    SweepValidity,
    TIMING_RTOL,
    VideoSeries,
)

logger = logging.getLogger(__name__)

FilterShape = Literal["butterworth", "brickwall"]
BUTTERWORTH_ORDER = 4


def make_sweep_plan(bpf_hz: float, nbpf_hz: float, ramp_period_s: float,
                    start_frequency_hz: float = 0.0) -> SweepPlan:
    """Plan a ramp of BPF/NBPF steps, each held for (NBPF/BPF) * T."""
    if nbpf_hz <= 0 or bpf_hz <= 0 or ramp_period_s <= 0:
        raise InvalidArgumentError("bandwidths and ramp period must be positive")
    if nbpf_hz > bpf_hz:
        raise InvalidArgumentError(f"NBPF {nbpf_hz:.4g} Hz exceeds BPF {bpf_hz:.4g} Hz")
    ratio = bpf_hz / nbpf_hz
    step_count = int(round(ratio))
    if not math.isclose(step_count, ratio, rel_tol=TIMING_RTOL):
        raise InvalidArgumentError(
            f"BPF {bpf_hz:.6g} Hz is not an integer multiple of NBPF {nbpf_hz:.6g} Hz"
        )
    return SweepPlan(
        ramp_period_s=ramp_period_s,
        stop_duration_s=ramp_period_s / step_count,
        nbpf_hz=nbpf_hz,
        bpf_hz=bpf_hz,
        start_frequency_hz=start_frequency_hz,
        step_count=step_count,
    )


def validate_sweep_plan(plan: SweepPlan, pri_s: float) -> SweepValidity:
    """Check the stop-duration constraint T_stop < PRI."""
    if pri_s <= 0:
        raise InvalidArgumentError("pri_s must be positive")
    margin = pri_s - plan.stop_duration_s
    valid = margin > 0
    relation = "<" if valid else ">="
    message = (
        f"stop duration {plan.stop_duration_s * 1e3:.6g} ms {relation} PRI {pri_s * 1e3:.6g} ms; "
        f"constraint T_stop < PRI {'satisfied' if valid else 'violated'}"
    )
    if not valid:
        logger.warning(message)
    return SweepValidity(
        valid=valid,
        stop_duration_s=plan.stop_duration_s,
        pri_s=pri_s,
        margin_s=margin,
        pulses_per_dwell=plan.stop_duration_s / pri_s,
        message=message,
    )


def nbpf_response(offsets_hz: np.ndarray, nbpf_hz: float, shape: FilterShape = "butterworth") -> np.ndarray:
    """Magnitude response of the narrowband filter, -3 dB at +-NBPF/2 for the Butterworth shape."""
    normalized = 2 * np.asarray(offsets_hz, dtype=float) / nbpf_hz
    if shape == "brickwall":
        return (np.abs(normalized) <= 1).astype(float)
    if shape == "butterworth":
        return 1 / np.sqrt(1 + normalized ** (2 * BUTTERWORTH_ORDER))
    raise InvalidArgumentError(f"unknown filter shape {shape!r}")


def dlva_detect(power_w: np.ndarray, params: DlvaParams) -> np.ndarray:
    """Log video output slope*log10(P) + offset, clamped to the detector's dynamic range."""
    power = np.clip(np.asarray(power_w, dtype=float), params.noise_floor_w, params.ceiling_w)
    return params.slope_v_per_decade * np.log10(power) + params.offset_v


def dlva_to_power_db(volts: np.ndarray, params: DlvaParams) -> np.ndarray:
    """Invert the log transfer back to input power in dBW."""
    return 10 * (np.asarray(volts, dtype=float) - params.offset_v) / params.slope_v_per_decade


def adc_quantize(samples: np.ndarray, params: AdcParams) -> np.ndarray:
    """Mid-rise quantizer with saturation at the outermost code centers."""
    lsb = params.lsb_v
    codes = (np.floor(np.asarray(samples, dtype=float) / lsb) + 0.5) * lsb
    return np.clip(codes, -params.full_scale_v + lsb / 2, params.full_scale_v - lsb / 2)


def detect_to_db(power_w: np.ndarray, dlva: DlvaParams, adc: AdcParams) -> np.ndarray:
    """Full video chain: DLVA, ADC, then the reading expressed as input power in dB."""
    return dlva_to_power_db(adc_quantize(dlva_detect(power_w, dlva), adc), dlva)


def _filter_band(segments: np.ndarray, sample_rate_hz: float, response) -> np.ndarray:
    spectrum = np.fft.fft(segments, axis=-1)
    frequencies = np.fft.fftfreq(segments.shape[-1], d=1 / sample_rate_hz)
    return np.fft.ifft(spectrum * response(frequencies), axis=-1)


def nsr_process(signal: BasebandSignal, plan: SweepPlan, dlva: DlvaParams, adc: AdcParams,
                shape: FilterShape = "butterworth") -> PowerGrid:
    """Sweep the narrowband filter across the band and record the peak level per stop.

    Each stop window is mixed down by its step offset, filtered in the frequency
    domain, detected and reduced to its peak power.

    Args:
        signal: Baseband input centered on signal.center_frequency_hz
        plan: Sweep plan with RF step frequencies
        dlva: Detector for the narrowband chain
        adc: Video quantizer
        shape: Narrowband filter magnitude shape

    Returns:
        Power grid with one row per complete ramp
    """
    fs = signal.sample_rate_hz
    offsets = plan.step_centers_hz - signal.center_frequency_hz
    if np.any(np.abs(offsets) + plan.nbpf_hz / 2 > fs / 2 * (1 + 1e-9)):
        raise InvalidArgumentError("sweep plan extends beyond the sampled band")
    if signal.duration_s + 1 / fs < plan.ramp_period_s * (1 - TIMING_RTOL):
        raise InvalidArgumentError("signal is shorter than one ramp period")

    window = int(round(plan.stop_duration_s * fs))
    if window < 1:
        raise InvalidArgumentError("stop duration is shorter than one sample")
    ramp = window * plan.step_count
    ramps = max(1, signal.samples.size // ramp)
    times = signal.times()

    def response(frequencies):
        return nbpf_response(frequencies, plan.nbpf_hz, shape)

    levels = np.empty((ramps, plan.step_count))
    for row in range(ramps):
        block = slice(row * ramp, (row + 1) * ramp)
        segments = np.zeros((plan.step_count, window), dtype=complex)
        chunk = signal.samples[block]
        segments.reshape(-1)[:chunk.size] = chunk
        segment_times = np.zeros(plan.step_count * window)
        segment_times[:chunk.size] = times[block]
        segment_times = segment_times.reshape(plan.step_count, window)
        mixed = segments * np.exp(-2j * np.pi * offsets[:, None] * segment_times)
        filtered = _filter_band(mixed, fs, response)
        levels[row] = np.max(np.abs(filtered) ** 2, axis=1)

    logger.info(f"NSR processed {ramps} ramps of {plan.step_count} steps")
    return PowerGrid(
        times_s=signal.start_time_s + np.arange(ramps) * plan.ramp_period_s,
        frequencies_hz=plan.step_centers_hz,
        power_db=detect_to_db(levels, dlva, adc),
        nbpf_hz=plan.nbpf_hz,
        ramp_period_s=plan.ramp_period_s,
    )


def sed_process(signal: BasebandSignal, bpf_hz: float, dlva: DlvaParams, adc: AdcParams) -> VideoSeries:
    """Wideband envelope detection of the whole passband, sampled at the ADC rate."""
    if bpf_hz <= 0:
        raise InvalidArgumentError("bpf_hz must be positive")
    fs = signal.sample_rate_hz
    filtered = _filter_band(
        np.asarray(signal.samples), fs, lambda f: (np.abs(f) <= bpf_hz / 2).astype(float)
    )
    step = max(1, int(round(fs / adc.sample_rate_hz)))
    power = np.abs(filtered[::step]) ** 2
    return VideoSeries(
        times_s=signal.times()[::step],
        power_db=detect_to_db(power, dlva, adc),
        bandwidth_hz=bpf_hz,
    )


def reconstruct_spectrum(grid: PowerGrid, empty_threshold_db: float = 20.0) -> SpectrumEstimate:
    """Per-bin peak over all ramps, with centroid and -3 dB bandwidth.

    Bins more than empty_threshold_db below the strongest bin count as empty; the
    empty bins lying between the first and last occupied bin are reported.
    """
    levels = np.max(grid.power_db, axis=0)
    peak = float(np.max(levels))
    linear = 10 ** (levels / 10)
    weights = np.clip(linear - np.min(linear), 0.0, None)
    if np.sum(weights) > 0:
        center = float(np.sum(weights * grid.frequencies_hz) / np.sum(weights))
    else:
        center = float(np.mean(grid.frequencies_hz))

    strong = np.flatnonzero(levels >= peak - 3.0)
    bandwidth = (strong[-1] - strong[0] + 1) * grid.nbpf_hz

    occupied = np.flatnonzero(levels > peak - empty_threshold_db)
    interior = [
        int(i) for i in range(occupied[0] + 1, occupied[-1])
        if levels[i] <= peak - empty_threshold_db
    ]
    if interior:
        logger.warning(f"{len(interior)} empty interior bins in reconstructed spectrum")
    return SpectrumEstimate(
        frequencies_hz=grid.frequencies_hz,
        power_db=levels,
        center_frequency_hz=center,
        bandwidth_hz=float(bandwidth),
        resolution_hz=grid.nbpf_hz,
        empty_interior_bins=interior,
    )


def bin_index(grid: PowerGrid, frequency_hz: float) -> Optional[int]:
    """Nearest bin whose passband contains the frequency, or None outside the span."""
    index = int(np.argmin(np.abs(grid.frequencies_hz - frequency_hz)))
    if abs(grid.frequencies_hz[index] - frequency_hz) > grid.nbpf_hz / 2 * (1 + 1e-9):
        return None
    return index
