"""
Pass simulator working at the video sample rate.

A full flyover at the RF sample rate is far too long to synthesize, so each stop
window is modelled directly at the ADC rate: samples where the chirp sits inside
the active filter carry the pattern-weighted signal plus noise, and the
noise-only remainder of the window contributes the maximum of its noise draws,
sampled from the exact order-statistic distribution. Both receivers record the
peak level of every stop window.
"""

import logging
import math
from typing import Iterable, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from .analysis import compare_receivers, extract_pattern
from .receiver import FilterShape, detect_to_db, nbpf_response
from .schemas import (
    AdcParams,
    BasebandSignal,
    DlvaParams,
    InvalidArgumentError,
    PassScenario,
    PatternCut,
    PowerGrid,
    PulseTrainParams,
    SweepPlan,
    VideoSeries,
)
from .waveform import (
    add_awgn,
    apply_pass_gain,
    complex_noise,
    instantaneous_frequency,
    lfm_pulse_train,
    received_power_w,
)

logger = logging.getLogger(__name__)

# Butterworth skirt beyond which the filtered chirp is treated as absent
SKIRT_FACTOR = 3.0
TRUTH_FLOOR = 1e-10


class ReceiverChains(BaseModel):
    """Both receivers' settings for one pass"""
    model_config = ConfigDict(frozen=True)

    plan: SweepPlan
    nsr_dlva: DlvaParams
    nsr_adc: AdcParams
    nbpf_shape: FilterShape = "butterworth"
    sed_bpf_hz: float = Field(..., gt=0)
    sed_dlva: DlvaParams
    sed_adc: AdcParams


class PassResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    seed: int
    grid: PowerGrid
    sed: VideoSeries


def _pulse_sample_indices(t0: float, count: int, rate: float, pri: float,
                          lo: float, hi: float) -> np.ndarray:
    """Indices j of instants t0 + j/rate lying in [k*pri + lo, k*pri + hi) for some pulse k."""
    if hi <= lo:
        return np.empty(0, dtype=int)
    t1 = t0 + count / rate
    parts = []
    for k in range(math.floor((t0 - hi) / pri), math.floor((t1 - lo) / pri) + 1):
        start = max(math.ceil((k * pri + lo - t0) * rate - 1e-9), 0)
        stop = min(math.ceil((k * pri + hi - t0) * rate - 1e-9), count)
        if stop > start:
            parts.append(np.arange(start, stop))
    return np.concatenate(parts) if parts else np.empty(0, dtype=int)


def noise_maximum(count: int, noise_power_w: float, rng: np.random.Generator) -> float:
    """Largest of count exponential noise powers, drawn directly from its distribution."""
    if count <= 0:
        return 0.0
    u = rng.random() or np.finfo(float).tiny
    return float(-noise_power_w * math.log(-math.expm1(math.log(u) / count)))


def _window_peak(power: np.ndarray, remaining: int, noise_power_w: float,
                 rng: np.random.Generator) -> float:
    explicit = float(np.max(power)) if power.size else 0.0
    return max(explicit, noise_maximum(remaining, noise_power_w, rng))


def _crossing_interval(params: PulseTrainParams, offset_hz: float, half_width_hz: float):
    """In-pulse time span during which the chirp lies within half_width_hz of offset_hz."""
    bw = params.chirp_bandwidth_hz
    if bw == 0:
        return (0.0, params.pulse_width_s) if abs(offset_hz) <= half_width_hz else (0.0, 0.0)
    lo = (offset_hz - half_width_hz + bw / 2) / params.chirp_rate_hz_per_s
    hi = (offset_hz + half_width_hz + bw / 2) / params.chirp_rate_hz_per_s
    return max(lo, 0.0), min(hi, params.pulse_width_s)


def simulate_pass(params: PulseTrainParams, scenario: PassScenario, chains: ReceiverChains,
                  seed: int = 0) -> PassResult:
    """Simulate one flyover through both receivers.

    Args:
        params: Emitter pulse train, pulses start at every multiple of the PRI from t = 0
        scenario: Link budget and pass geometry, boresight at mid-pass
        chains: Receiver settings; the sweep plan frequencies are RF
        seed: Noise seed

    Returns:
        PassResult with the NSR power grid and the SED video held per stop window
    """
    plan = chains.plan
    ramps = int(math.floor(scenario.pass_duration_s / plan.ramp_period_s + 1e-9))
    if ramps < 1:
        raise InvalidArgumentError("pass is shorter than one ramp period")

    rng = np.random.default_rng(seed)
    amplitude = math.sqrt(received_power_w(scenario, params.center_frequency_hz))
    offsets = plan.step_centers_hz - params.center_frequency_hz
    nsr_noise = scenario.noise_power_w(plan.nbpf_hz)
    sed_noise = scenario.noise_power_w(chains.sed_bpf_hz)
    half_width = plan.nbpf_hz / 2 if chains.nbpf_shape == "brickwall" else SKIRT_FACTOR * plan.nbpf_hz
    sed_span = _crossing_interval(params, 0.0, chains.sed_bpf_hz / 2)

    nsr_rate = chains.nsr_adc.sample_rate_hz
    sed_rate = chains.sed_adc.sample_rate_hz
    nsr_count = max(1, int(round(plan.stop_duration_s * nsr_rate)))
    sed_count = max(1, int(round(plan.stop_duration_s * sed_rate)))
    spans = [_crossing_interval(params, offset, half_width) for offset in offsets]

    nsr_peaks = np.empty((ramps, plan.step_count))
    sed_peaks = np.empty((ramps, plan.step_count))
    for row in range(ramps):
        for i, offset in enumerate(offsets):
            t0 = row * plan.ramp_period_s + i * plan.stop_duration_s

            index = _pulse_sample_indices(t0, nsr_count, nsr_rate, params.pri_s, *spans[i])
            times = t0 + index / nsr_rate
            chirp, _ = instantaneous_frequency(params, times)
            gain = scenario.gain(params.center_frequency_hz + chirp, scenario.beam_angle_rad(times))
            signal = amplitude * gain * nbpf_response(chirp - offset, plan.nbpf_hz, chains.nbpf_shape)
            power = np.abs(signal + complex_noise(index.size, nsr_noise, rng)) ** 2
            nsr_peaks[row, i] = _window_peak(power, nsr_count - index.size, nsr_noise, rng)

            index = _pulse_sample_indices(t0, sed_count, sed_rate, params.pri_s, *sed_span)
            times = t0 + index / sed_rate
            chirp, _ = instantaneous_frequency(params, times)
            gain = scenario.gain(params.center_frequency_hz + chirp, scenario.beam_angle_rad(times))
            power = np.abs(amplitude * gain + complex_noise(index.size, sed_noise, rng)) ** 2
            sed_peaks[row, i] = _window_peak(power, sed_count - index.size, sed_noise, rng)

    logger.info(f"Simulated pass seed={seed}: {ramps} ramps x {plan.step_count} steps")
    grid = PowerGrid(
        times_s=np.arange(ramps) * plan.ramp_period_s,
        frequencies_hz=plan.step_centers_hz,
        power_db=detect_to_db(nsr_peaks, chains.nsr_dlva, chains.nsr_adc),
        nbpf_hz=plan.nbpf_hz,
        ramp_period_s=plan.ramp_period_s,
    )
    centers = (np.arange(ramps)[:, None] * plan.ramp_period_s
               + (np.arange(plan.step_count)[None, :] + 0.5) * plan.stop_duration_s)
    sed = VideoSeries(
        times_s=centers.ravel(),
        power_db=detect_to_db(sed_peaks, chains.sed_dlva, chains.sed_adc).ravel(),
        bandwidth_hz=chains.sed_bpf_hz,
    )
    return PassResult(seed=seed, grid=grid, sed=sed)


def truth_cut(scenario: PassScenario, frequency_hz: float, times_s: np.ndarray) -> PatternCut:
    """Noiseless received-power cut along the pass at one frequency."""
    times = np.asarray(times_s, dtype=float)
    angles = scenario.beam_angle_rad(times)
    gain = scenario.gain(np.full(times.shape, frequency_hz), angles)
    power_db = 20 * np.log10(np.maximum(gain, TRUTH_FLOOR))
    peak = float(np.max(power_db))
    return PatternCut(
        frequency_hz=frequency_hz,
        times_s=times,
        power_db=power_db - peak,
        normalization_db=peak,
        angles_rad=angles,
    )


def compare_pass(result: PassResult, scenario: PassScenario, frequency_hz: float,
                 statistic: str = "peak"):
    cut = extract_pattern(result.grid, frequency_hz)
    truth = truth_cut(scenario, cut.frequency_hz, cut.times_s)
    return compare_receivers(cut, result.sed, truth, statistic=statistic)


def monte_carlo(params: PulseTrainParams, scenario: PassScenario, chains: ReceiverChains,
                frequency_hz: float, seeds: Iterable[int]) -> pd.DataFrame:
    """Per-seed comparison metrics for repeated passes."""
    rows: List[dict] = []
    for seed in seeds:
        result = simulate_pass(params, scenario, chains, seed=seed)
        report = compare_pass(result, scenario, frequency_hz)
        rows.append({'seed': seed, **report.model_dump()})
    return pd.DataFrame(rows)


def sample_level_snippet(params: PulseTrainParams, scenario: PassScenario, duration_s: float,
                         start_time_s: Optional[float] = None, seed: int = 0) -> BasebandSignal:
    """Noisy sample-rate baseband of a short stretch of the pass, mid-pass by default."""
    start = scenario.pass_duration_s / 2 if start_time_s is None else start_time_s
    signal = apply_pass_gain(lfm_pulse_train(params, duration_s, start_time_s=start), scenario)
    return add_awgn(signal, scenario.noise_power_w(params.sample_rate_hz), seed=seed)
