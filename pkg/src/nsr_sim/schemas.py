"""
Pydantic schemas for the narrowband sweeper receiver simulator.
Every parameter object checks its physical invariants on construction.
"""

import math
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import constants

SPEED_OF_LIGHT = constants.c
BOLTZMANN = constants.k

# Relative tolerance used when checking derived timing quantities
TIMING_RTOL = 1e-9


class InvalidArgumentError(ValueError):
    """Raised when an operation receives an argument outside its domain."""


def as_real_array(value: Any) -> np.ndarray:
    array = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(array)):
        raise ValueError("array contains non-finite values")
    return array


class ArrayGeometry(BaseModel):
    """Planar array of m_count x n_count elements on a rectangular lattice"""
    model_config = ConfigDict(frozen=True)

    m_count: int = Field(..., ge=1, description="Elements along x")
    n_count: int = Field(1, ge=1, description="Elements along y")
    spacing_x_m: float = Field(..., gt=0, description="Element spacing along x in meters")
    spacing_y_m: float = Field(0.015, gt=0, description="Element spacing along y in meters")

    @property
    def shape(self) -> tuple:
        return (self.m_count, self.n_count)

    @property
    def aperture_x_m(self) -> float:
        return self.m_count * self.spacing_x_m


class ExcitationPlan(BaseModel):
    """Progressive phases plus optional per-element amplitudes and error factors"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alpha_phase_rad: float = Field(0.0, description="Progressive phase along x")
    beta_phase_rad: float = Field(0.0, description="Progressive phase along y")
    amplitudes: Optional[np.ndarray] = None
    error_matrix: Optional[np.ndarray] = None

    @field_validator('alpha_phase_rad', 'beta_phase_rad')
    def finite_phase(cls, v):
        if not math.isfinite(v):
            raise ValueError("phase must be finite")
        return v

    @field_validator('amplitudes', 'error_matrix', mode='before')
    def complex_matrix(cls, v):
        if v is None:
            return v
        matrix = np.asarray(v, dtype=complex)
        if matrix.ndim != 2:
            raise ValueError("per-element matrices must be two-dimensional")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("per-element matrices must be finite")
        return matrix

    def amplitude_matrix(self, geom: ArrayGeometry) -> np.ndarray:
        return self._matrix_for(self.amplitudes, geom, "amplitudes")

    def error_matrix_for(self, geom: ArrayGeometry) -> np.ndarray:
        return self._matrix_for(self.error_matrix, geom, "error_matrix")

    @staticmethod
    def _matrix_for(matrix: Optional[np.ndarray], geom: ArrayGeometry, name: str) -> np.ndarray:
        if matrix is None:
            return np.ones(geom.shape, dtype=complex)
        if matrix.shape != geom.shape:
            raise InvalidArgumentError(
                f"{name} has shape {matrix.shape}, array geometry is {geom.shape}"
            )
        return matrix

    def is_uniform(self) -> bool:
        return self.amplitudes is None or bool(np.all(self.amplitudes == 1))

    @classmethod
    def steered(cls, geom: ArrayGeometry, frequency_hz: float, theta0_rad: float) -> "ExcitationPlan":
        """Plan whose x-axis progressive phase points the main beam at theta0 for a frequency."""
        if frequency_hz <= 0:
            raise InvalidArgumentError("steering frequency must be positive")
        k0 = 2 * math.pi * frequency_hz / SPEED_OF_LIGHT
        return cls(alpha_phase_rad=-k0 * geom.spacing_x_m * math.sin(theta0_rad))


class ElementFactor(BaseModel):
    """Element pattern as a function of the angle off boresight"""
    model_config = ConfigDict(frozen=True)

    model: Literal["isotropic", "cosine_power"] = "isotropic"
    exponent: float = Field(1.0, ge=0)

    def evaluate(self, theta_rad: Any) -> np.ndarray:
        theta = np.asarray(theta_rad, dtype=float)
        if self.model == "isotropic":
            return np.ones_like(theta)
        cosine = np.clip(np.cos(theta), 0.0, None)
        return cosine ** self.exponent


class PulseTrainParams(BaseModel):
    """Periodic LFM pulse train emitted by the illuminating radar"""
    model_config = ConfigDict(frozen=True)

    center_frequency_hz: float = Field(..., gt=0)
    chirp_bandwidth_hz: float = Field(..., ge=0)
    pulse_width_s: float = Field(..., gt=0)
    pri_s: float = Field(..., gt=0)
    sample_rate_hz: float = Field(..., gt=0)
    duty_cycle: Optional[float] = Field(None, gt=0, le=1)

    @model_validator(mode='after')
    def check_timing(self):
        if self.pulse_width_s > self.pri_s:
            raise ValueError("pulse_width_s must not exceed pri_s")
        derived = self.pulse_width_s / self.pri_s
        if self.duty_cycle is None:
            object.__setattr__(self, 'duty_cycle', derived)
        elif not math.isclose(self.duty_cycle, derived, rel_tol=1e-9):
            raise ValueError(f"duty_cycle {self.duty_cycle} disagrees with pulse_width/pri {derived}")
        if self.sample_rate_hz < 2.5 * self.chirp_bandwidth_hz:
            raise ValueError("sample_rate_hz must be at least 2.5x chirp_bandwidth_hz")
        return self

    @property
    def chirp_rate_hz_per_s(self) -> float:
        return self.chirp_bandwidth_hz / self.pulse_width_s

    @property
    def time_bandwidth_product(self) -> float:
        return self.chirp_bandwidth_hz * self.pulse_width_s


class PassScenario(BaseModel):
    """Link and geometry of one flyover"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    transmit_power_w: float = Field(..., gt=0)
    tx_gain: float = Field(1.0, gt=0, description="Linear transmit antenna gain")
    rx_gain: float = Field(1.0, gt=0, description="Linear receive antenna gain")
    range_m: float = Field(..., gt=0)
    system_noise_temperature_k: float = Field(290.0, gt=0)
    boltzmann: float = Field(BOLTZMANN, gt=0)
    ground_beam_speed_mps: float = Field(..., gt=0)
    pass_duration_s: float = Field(..., gt=0)
    antenna_cut: Optional[Callable[..., Any]] = Field(
        None, description="Callable (frequency_hz, theta_rad) -> normalized gain magnitude"
    )

    def noise_power_w(self, bandwidth_hz: float) -> float:
        return self.boltzmann * self.system_noise_temperature_k * bandwidth_hz

    def beam_angle_rad(self, times_s: Any) -> np.ndarray:
        """Off-boresight angle of the receiver at the given times, boresight at mid-pass."""
        t = np.asarray(times_s, dtype=float)
        offset = self.ground_beam_speed_mps * (t - self.pass_duration_s / 2)
        return np.arctan(offset / self.range_m)

    def gain(self, frequency_hz: Any, theta_rad: Any) -> np.ndarray:
        if self.antenna_cut is None:
            return np.ones(np.broadcast(np.asarray(frequency_hz), np.asarray(theta_rad)).shape)
        return np.asarray(self.antenna_cut(frequency_hz, theta_rad), dtype=float)

    def with_boresight_snr(self, snr_db: float, frequency_hz: float,
                           bandwidth_hz: float) -> "PassScenario":
        """Copy whose transmit power gives the requested boresight SNR in a bandwidth."""
        wavelength = SPEED_OF_LIGHT / frequency_hz
        path = (4 * math.pi * self.range_m) ** 2 / (self.tx_gain * self.rx_gain * wavelength ** 2)
        power = 10 ** (snr_db / 10) * self.noise_power_w(bandwidth_hz) * path
        return self.model_copy(update={'transmit_power_w': power})


class BasebandSignal(BaseModel):
    """Complex baseband samples; amplitude squared is power in watts"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    samples: np.ndarray
    sample_rate_hz: float = Field(..., gt=0)
    start_time_s: float = 0.0
    center_frequency_hz: float = Field(..., gt=0)

    @field_validator('samples', mode='before')
    def complex_samples(cls, v):
        samples = np.array(v, dtype=complex).ravel()
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        samples.setflags(write=False)
        return samples

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(len(self.samples)) / self.sample_rate_hz

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))


class SweepPlan(BaseModel):
    """Stepped narrowband sweep across the wideband passband"""
    model_config = ConfigDict(frozen=True)

    ramp_period_s: float = Field(..., gt=0)
    stop_duration_s: float = Field(..., gt=0)
    nbpf_hz: float = Field(..., gt=0)
    bpf_hz: float = Field(..., gt=0)
    start_frequency_hz: float = Field(..., description="Low edge of the first step")
    step_count: int = Field(..., ge=1)

    @model_validator(mode='after')
    def check_plan(self):
        if self.nbpf_hz > self.bpf_hz:
            raise ValueError("nbpf_hz must not exceed bpf_hz")
        swept = self.step_count * self.stop_duration_s
        if not math.isclose(swept, self.ramp_period_s, rel_tol=TIMING_RTOL):
            raise ValueError(
                f"step_count * stop_duration_s = {swept} differs from ramp_period_s {self.ramp_period_s}"
            )
        return self

    @property
    def step_centers_hz(self) -> np.ndarray:
        return self.start_frequency_hz + (np.arange(self.step_count) + 0.5) * self.nbpf_hz


class SweepValidity(BaseModel):
    """Outcome of checking a sweep plan against the emitter PRI"""
    valid: bool
    stop_duration_s: float
    pri_s: float
    margin_s: float
    pulses_per_dwell: float
    message: str


class DlvaParams(BaseModel):
    """Detector log video amplifier transfer"""
    model_config = ConfigDict(frozen=True)

    slope_v_per_decade: float = Field(0.25, gt=0)
    offset_v: float = Field(5.0)
    dynamic_range_db: float = Field(70.0, gt=0)
    noise_floor_w: float = Field(..., gt=0)

    @property
    def ceiling_w(self) -> float:
        return self.noise_floor_w * 10 ** (self.dynamic_range_db / 10)


class AdcParams(BaseModel):
    """Mid-rise uniform quantizer"""
    model_config = ConfigDict(frozen=True)

    bits: int = Field(12, ge=4, le=24)
    full_scale_v: float = Field(5.0, gt=0)
    sample_rate_hz: float = Field(10e6, gt=0)

    @property
    def lsb_v(self) -> float:
        return 2 * self.full_scale_v / 2 ** self.bits


class PowerGrid(BaseModel):
    """NSR output: one row per ramp, one column per step bin.

    Row times are ramp start times; column i was observed over the stop window
    centered at times_s + (i + 0.5) * stop_duration_s.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times_s: np.ndarray
    frequencies_hz: np.ndarray
    power_db: np.ndarray
    nbpf_hz: float = Field(..., gt=0)
    ramp_period_s: float = Field(..., gt=0)

    @field_validator('times_s', 'frequencies_hz', mode='before')
    def axis_array(cls, v):
        axis = as_real_array(v).ravel()
        if axis.size == 0:
            raise ValueError("axes must be non-empty")
        return axis

    @field_validator('power_db', mode='before')
    def power_array(cls, v):
        return np.atleast_2d(np.asarray(v, dtype=float))

    @model_validator(mode='after')
    def check_grid(self):
        if self.power_db.shape != (self.times_s.size, self.frequencies_hz.size):
            raise ValueError(
                f"power_db shape {self.power_db.shape} does not match axes "
                f"({self.times_s.size}, {self.frequencies_hz.size})"
            )
        if self.frequencies_hz.size > 1:
            spacing = np.diff(self.frequencies_hz)
            if not np.allclose(spacing, self.nbpf_hz, rtol=1e-6):
                raise ValueError("frequency bins must be ascending and spaced by nbpf_hz")
        return self

    @property
    def stop_duration_s(self) -> float:
        return self.ramp_period_s / self.frequencies_hz.size

    def window_centers(self, bin_index: int) -> np.ndarray:
        return self.times_s + (bin_index + 0.5) * self.stop_duration_s


class VideoSeries(BaseModel):
    """Detected video (dB) from the wideband receiver"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times_s: np.ndarray
    power_db: np.ndarray
    bandwidth_hz: float = Field(..., gt=0)

    @field_validator('times_s', 'power_db', mode='before')
    def series_array(cls, v):
        return np.asarray(v, dtype=float).ravel()

    @model_validator(mode='after')
    def check_lengths(self):
        if self.times_s.size != self.power_db.size:
            raise ValueError("times_s and power_db must have equal length")
        return self


class SpectrumEstimate(BaseModel):
    """Spectrum recovered from the per-bin peak levels of a power grid"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    frequencies_hz: np.ndarray
    power_db: np.ndarray
    center_frequency_hz: float
    bandwidth_hz: float
    resolution_hz: float
    empty_interior_bins: List[int] = Field(default_factory=list)


class PatternCut(BaseModel):
    """Normalized received-power cut through the antenna pattern at one frequency"""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    frequency_hz: float = Field(..., gt=0)
    times_s: np.ndarray
    power_db: np.ndarray
    normalization_db: float = 0.0
    angles_rad: Optional[np.ndarray] = None
    dwell_s: Optional[float] = Field(None, gt=0)
    bandwidth_hz: Optional[float] = Field(None, gt=0, description="Filter width the cut was measured through")

    @field_validator('times_s', 'power_db', 'angles_rad', mode='before')
    def cut_array(cls, v):
        if v is None:
            return v
        return np.asarray(v, dtype=float).ravel()

    @model_validator(mode='after')
    def check_cut(self):
        if self.times_s.size != self.power_db.size:
            raise ValueError("times_s and power_db must have equal length")
        if self.angles_rad is not None and self.angles_rad.size != self.times_s.size:
            raise ValueError("angles_rad must match times_s")
        if self.times_s.size > 1 and np.any(np.diff(self.times_s) <= 0):
            raise ValueError("times_s must be strictly increasing")
        if self.power_db.size and np.nanmax(self.power_db) > 1e-9:
            raise ValueError("cut must be normalized to a 0 dB maximum")
        return self


class NullReport(BaseModel):
    """Nulls located in a pattern cut"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    frequency_hz: float
    axis: Literal["angle_rad", "time_s"]
    nulls: List[float] = Field(default_factory=list)
    depths_db: List[float] = Field(default_factory=list)

    @property
    def spacings(self) -> List[float]:
        return list(np.diff(self.nulls)) if len(self.nulls) > 1 else []

    @property
    def mean_spacing(self) -> Optional[float]:
        return float(np.mean(self.spacings)) if self.spacings else None


class ComparisonReport(BaseModel):
    """NSR and SED pattern estimates scored against a reference pattern"""
    frequency_hz: float
    points: int
    nsr_correlation: float
    sed_correlation: float
    nsr_rms_error_db: float
    sed_rms_error_db: float
    measured_snr_gain_db: Optional[float] = None
    analytic_snr_gain_db: float


class PatternMismatch(BaseModel):
    """Pointwise difference between two cuts on a shared time axis"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times_s: np.ndarray
    difference_db: np.ndarray
    threshold_db: float
    first_exceed_time_s: Optional[float] = None


class ManifestFile(BaseModel):
    path: str
    sha256: str
    bytes: int = Field(..., ge=0)


class RunManifest(BaseModel):
    """Index of every artifact a run wrote; written last"""
    config_digest: str
    tool_version: str
    seeds: List[int] = Field(default_factory=list)
    files: List[ManifestFile] = Field(default_factory=list)
    timings_s: Dict[str, float] = Field(default_factory=dict)


class RunStatus(BaseModel):
    """Tracks one pipeline stage execution"""
    run_id: str
    stage: str
    started_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    completed_at: Optional[datetime] = None
    files_written: List[str] = Field(default_factory=list)
    errors: List[str] = Field(default_factory=list)

    @property
    def succeeded(self) -> bool:
        return not self.errors

    @property
    def elapsed_s(self) -> float:
        end = self.completed_at or datetime.now(timezone.utc)
        return (end - self.started_at).total_seconds()
