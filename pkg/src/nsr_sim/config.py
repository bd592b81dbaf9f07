"""
Scenario configuration: YAML loading, validation and construction of the
simulation objects. Field names carry their SI unit as a suffix.
"""

import hashlib
import logging
import os
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .antenna import PatternEvaluator
from .passes import ReceiverChains
from .receiver import make_sweep_plan
from .schemas import (
    BOLTZMANN,
    AdcParams,
    ArrayGeometry,
    DlvaParams,
    ElementFactor,
    ExcitationPlan,
    PassScenario,
    PulseTrainParams,
    SweepPlan,
)

logger = logging.getLogger(__name__)

OUT_ENV = 'NSR_SIM_OUT'
LOG_LEVEL_ENV = 'NSR_SIM_LOG_LEVEL'


class ConfigError(ValueError):
    """Raised when a scenario file cannot be parsed or fails validation"""

    def __init__(self, path: Union[str, Path], violations: List[str]):
        self.path = str(path)
        self.violations = violations
        super().__init__(f"{path}: " + "; ".join(violations))


class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid')


class EmitterConfig(_Section):
    center_frequency_hz: float = Field(..., gt=0)
    chirp_bandwidth_hz: float = Field(..., ge=0)
    pulse_width_s: float = Field(..., gt=0)
    pri_s: float = Field(..., gt=0)
    sample_rate_hz: float = Field(1.0e9, gt=0)


class AntennaConfig(_Section):
    m_count: int = Field(..., ge=1)
    n_count: int = Field(1, ge=1)
    spacing_x_m: float = Field(..., gt=0)
    spacing_y_m: float = Field(0.015, gt=0)
    alpha_phase_rad: float = 0.0
    beta_phase_rad: float = 0.0
    element_model: Literal["isotropic", "cosine_power"] = "isotropic"
    element_exponent: float = Field(1.0, ge=0)


class PassConfig(_Section):
    transmit_power_w: float = Field(1.0, gt=0)
    boresight_snr_db: Optional[float] = Field(
        None, description="When set, transmit power is derived from this SNR in the wideband filter"
    )
    tx_gain: float = Field(1.0, gt=0)
    rx_gain: float = Field(1.0, gt=0)
    range_m: float = Field(..., gt=0)
    system_noise_temperature_k: float = Field(290.0, gt=0)
    ground_beam_speed_mps: float = Field(..., gt=0)
    pass_duration_s: float = Field(..., gt=0)


class DlvaConfig(_Section):
    slope_v_per_decade: float = Field(0.25, gt=0)
    offset_v: float = 5.0
    dynamic_range_db: float = Field(70.0, gt=0)


class AdcConfig(_Section):
    bits: int = Field(12, ge=4, le=24)
    full_scale_v: float = Field(5.0, gt=0)
    sample_rate_hz: float = Field(10.0e6, gt=0)


class NsrConfig(_Section):
    bpf_hz: float = Field(..., gt=0)
    nbpf_hz: float = Field(..., gt=0)
    ramp_period_s: float = Field(..., gt=0)
    start_frequency_hz: Optional[float] = None
    nbpf_shape: Literal["butterworth", "brickwall"] = "butterworth"
    dlva: DlvaConfig = Field(default_factory=DlvaConfig)
    adc: AdcConfig = Field(default_factory=AdcConfig)


class SedConfig(_Section):
    bpf_hz: Optional[float] = Field(None, gt=0)
    dlva: DlvaConfig = Field(default_factory=DlvaConfig)
    adc: AdcConfig = Field(default_factory=AdcConfig)


class OutputConfig(_Section):
    directory: str = 'out'
    formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ['csv'])
    iq_dump: bool = False
    iq_dump_duration_s: Optional[float] = Field(None, gt=0)
    analysis_frequencies_hz: List[float] = Field(default_factory=list)


class ScenarioConfig(_Section):
    """Top-level scenario file"""
    name: str = 'scenario'
    emitter: EmitterConfig
    antenna: AntennaConfig
    pass_: PassConfig = Field(..., alias='pass')
    nsr: NsrConfig
    sed: SedConfig = Field(default_factory=SedConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    seeds: List[int] = Field(default_factory=lambda: [0])

    model_config = ConfigDict(extra='forbid', populate_by_name=True)

    @model_validator(mode='after')
    def check_bands(self):
        if self.nsr.nbpf_hz > self.nsr.bpf_hz:
            raise ValueError("nsr.nbpf_hz must not exceed nsr.bpf_hz")
        if not self.seeds:
            raise ValueError("seeds must list at least one seed")
        return self

    @property
    def sed_bpf_hz(self) -> float:
        return self.sed.bpf_hz or self.nsr.bpf_hz


def _format_errors(error: ValidationError) -> List[str]:
    messages = []
    for item in error.errors():
        location = '.'.join(str(part) for part in item['loc']) or '<root>'
        messages.append(f"{location}: {item['msg']}")
    return messages


def load_config(path: Union[str, Path]) -> Tuple[ScenarioConfig, str]:
    """
    Load and validate a scenario file.

    Args:
        path: YAML scenario path

    Returns:
        (validated config, sha256 digest of the file bytes)
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigError(path, [f"cannot read file: {e}"]) from e
    try:
        data = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ''
        raise ConfigError(path, [f"{where}invalid YAML ({getattr(e, 'problem', e)})"]) from e
    if not isinstance(data, dict):
        raise ConfigError(path, ["top level must be a mapping"])
    try:
        config = ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(path, _format_errors(e)) from e
    logger.info(f"Loaded scenario '{config.name}' from {path}")
    return config, hashlib.sha256(raw).hexdigest()


def output_directory(config: ScenarioConfig, override: Optional[str] = None) -> Path:
    return Path(override or os.environ.get(OUT_ENV) or config.output.directory)


def build_pulse_params(config: ScenarioConfig) -> PulseTrainParams:
    e = config.emitter
    return PulseTrainParams(
        center_frequency_hz=e.center_frequency_hz,
        chirp_bandwidth_hz=e.chirp_bandwidth_hz,
        pulse_width_s=e.pulse_width_s,
        pri_s=e.pri_s,
        sample_rate_hz=e.sample_rate_hz,
    )


def build_geometry(config: ScenarioConfig) -> ArrayGeometry:
    a = config.antenna
    return ArrayGeometry(m_count=a.m_count, n_count=a.n_count,
                         spacing_x_m=a.spacing_x_m, spacing_y_m=a.spacing_y_m)


def build_antenna(config: ScenarioConfig) -> PatternEvaluator:
    a = config.antenna
    return PatternEvaluator(
        build_geometry(config),
        ExcitationPlan(alpha_phase_rad=a.alpha_phase_rad, beta_phase_rad=a.beta_phase_rad),
        ElementFactor(model=a.element_model, exponent=a.element_exponent),
    )


def build_scenario(config: ScenarioConfig) -> PassScenario:
    p = config.pass_
    scenario = PassScenario(
        transmit_power_w=p.transmit_power_w,
        tx_gain=p.tx_gain,
        rx_gain=p.rx_gain,
        range_m=p.range_m,
        system_noise_temperature_k=p.system_noise_temperature_k,
        ground_beam_speed_mps=p.ground_beam_speed_mps,
        pass_duration_s=p.pass_duration_s,
        antenna_cut=build_antenna(config),
    )
    if p.boresight_snr_db is not None:
        scenario = scenario.with_boresight_snr(
            p.boresight_snr_db, config.emitter.center_frequency_hz, config.sed_bpf_hz
        )
    return scenario


def build_sweep_plan(config: ScenarioConfig) -> SweepPlan:
    n = config.nsr
    start = n.start_frequency_hz
    if start is None:
        start = config.emitter.center_frequency_hz - n.bpf_hz / 2
    return make_sweep_plan(n.bpf_hz, n.nbpf_hz, n.ramp_period_s, start_frequency_hz=start)


def build_dlva(section: DlvaConfig, bandwidth_hz: float, temperature_k: float) -> DlvaParams:
    """Detector whose floor is the thermal noise power in the chain's bandwidth."""
    return DlvaParams(
        slope_v_per_decade=section.slope_v_per_decade,
        offset_v=section.offset_v,
        dynamic_range_db=section.dynamic_range_db,
        noise_floor_w=BOLTZMANN * temperature_k * bandwidth_hz,
    )


def build_adc(section: AdcConfig) -> AdcParams:
    return AdcParams(bits=section.bits, full_scale_v=section.full_scale_v,
                     sample_rate_hz=section.sample_rate_hz)


def build_chains(config: ScenarioConfig) -> ReceiverChains:
    temperature = config.pass_.system_noise_temperature_k
    return ReceiverChains(
        plan=build_sweep_plan(config),
        nsr_dlva=build_dlva(config.nsr.dlva, config.nsr.nbpf_hz, temperature),
        nsr_adc=build_adc(config.nsr.adc),
        nbpf_shape=config.nsr.nbpf_shape,
        sed_bpf_hz=config.sed_bpf_hz,
        sed_dlva=build_dlva(config.sed.dlva, config.sed_bpf_hz, temperature),
        sed_adc=build_adc(config.sed.adc),
    )
