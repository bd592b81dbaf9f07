"""
Planar phased-array patterns: array factor, closed-form uniform line pattern,
null positions, element-weighted patterns and the SAR beam with per-element errors.
"""

import logging
import math
from typing import Any, Optional, Tuple

import numpy as np

from .schemas import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    ElementFactor,
    ExcitationPlan,
    InvalidArgumentError,
)

logger = logging.getLogger(__name__)

# Below this |sin(psi/2)| the closed form takes its limit value of 1
_SINGULAR_TOL = 1e-12
# Rows evaluated per einsum call when the pattern cannot use the closed form
_CHUNK = 8192


def _require_finite(**values: Any) -> None:
    for name, value in values.items():
        if not np.all(np.isfinite(np.asarray(value, dtype=float))):
            raise InvalidArgumentError(f"{name} must be finite")


def _require_frequency(frequency_hz: Any) -> np.ndarray:
    frequency = np.asarray(frequency_hz, dtype=float)
    _require_finite(frequency_hz=frequency)
    if np.any(frequency <= 0):
        raise InvalidArgumentError("frequency_hz must be positive")
    return frequency


def wavenumber(frequency_hz: Any) -> np.ndarray:
    return 2 * np.pi * _require_frequency(frequency_hz) / SPEED_OF_LIGHT


def _line_factor(psi: np.ndarray, count: int) -> np.ndarray:
    """|sin(count*psi/2) / (count*sin(psi/2))| with the limit 1 at the singular points."""
    half = psi / 2
    denominator = count * np.sin(half)
    singular = np.abs(np.sin(half)) < _SINGULAR_TOL
    safe = np.where(singular, 1.0, denominator)
    value = np.where(singular, 1.0, np.sin(count * half) / safe)
    return np.abs(value)


def array_factor(geom: ArrayGeometry, exc: ExcitationPlan, frequency_hz: Any,
                 theta_rad: Any, phi_rad: Any = 0.0) -> Any:
    """Complex array factor summed over every element.

    Element (m, n) contributes its amplitude times
    exp(j*m*(k*dx*sin(theta)*cos(phi) + alpha)) * exp(j*n*(k*dy*sin(theta)*sin(phi) + beta)).

    Args:
        geom: Array lattice
        exc: Progressive phases and optional amplitudes
        frequency_hz: Frequency, scalar or broadcastable against the angles
        theta_rad: Polar angle off boresight
        phi_rad: Azimuthal angle of the cut

    Returns:
        Complex scalar for scalar inputs, otherwise an array of the broadcast shape
    """
    _require_finite(theta_rad=theta_rad, phi_rad=phi_rad)
    k0 = wavenumber(frequency_hz)
    theta, phi, k0 = np.broadcast_arrays(
        np.asarray(theta_rad, dtype=float), np.asarray(phi_rad, dtype=float), k0
    )
    psi_x = k0 * geom.spacing_x_m * np.sin(theta) * np.cos(phi) + exc.alpha_phase_rad
    psi_y = k0 * geom.spacing_y_m * np.sin(theta) * np.sin(phi) + exc.beta_phase_rad
    amplitudes = exc.amplitude_matrix(geom)
    m = np.arange(geom.m_count)
    n = np.arange(geom.n_count)

    flat_x = psi_x.ravel()
    flat_y = psi_y.ravel()
    out = np.empty(flat_x.size, dtype=complex)
    for start in range(0, flat_x.size, _CHUNK):
        stop = start + _CHUNK
        ex = np.exp(1j * np.multiply.outer(flat_x[start:stop], m))
        ey = np.exp(1j * np.multiply.outer(flat_y[start:stop], n))
        out[start:stop] = np.einsum('sm,mn,sn->s', ex, amplitudes, ey)
    return out.reshape(psi_x.shape)[()]


def normalized_pattern(geom: ArrayGeometry, alpha_rad: float, frequency_hz: Any,
                       theta_rad: Any) -> np.ndarray:
    """Closed-form normalized magnitude of a uniform line along x."""
    _require_finite(theta_rad=theta_rad, alpha_rad=alpha_rad)
    k0 = wavenumber(frequency_hz)
    psi = k0 * geom.spacing_x_m * np.sin(np.asarray(theta_rad, dtype=float)) + alpha_rad
    return _line_factor(psi, geom.m_count)[()]


def null_angles(geom: ArrayGeometry, alpha_rad: float, frequency_hz: float,
                k_range: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Angles where the uniform line pattern vanishes, ascending.

    Null k sits at arcsin(lambda*(k - alpha') / (M*dx)) with alpha' = M*alpha/(2*pi).
    Orders that are multiples of M are main or grating lobes and are skipped, as
    are orders whose arcsin argument leaves [-1, 1].

    Args:
        geom: Array lattice, only the x line is used
        alpha_rad: Progressive phase along x
        frequency_hz: Frequency
        k_range: Inclusive (k_min, k_max); defaults to every visible order

    Returns:
        Null angles in radians
    """
    _require_finite(alpha_rad=alpha_rad)
    wavelength = SPEED_OF_LIGHT / float(_require_frequency(frequency_hz))
    count = geom.m_count
    alpha_prime = count * alpha_rad / (2 * math.pi)
    aperture = count * geom.spacing_x_m
    if k_range is None:
        reach = aperture / wavelength
        k_range = (math.ceil(alpha_prime - reach), math.floor(alpha_prime + reach))
    k_min, k_max = k_range
    if k_min > k_max:
        raise InvalidArgumentError(f"empty null order range {k_range}")

    orders = np.arange(k_min, k_max + 1)
    orders = orders[orders % count != 0]
    argument = wavelength * (orders - alpha_prime) / aperture
    argument = argument[np.abs(argument) <= 1]
    return np.sort(np.arcsin(argument))


def combined_pattern(ef: ElementFactor, geom: ArrayGeometry, exc: ExcitationPlan,
                     frequency_hz: Any, theta_rad: Any, phi_rad: Any = 0.0,
                     normalize: bool = False) -> np.ndarray:
    """Element factor times array factor magnitude, optionally relative to boresight."""
    pattern = ef.evaluate(theta_rad) * np.abs(array_factor(geom, exc, frequency_hz, theta_rad, phi_rad))
    if normalize:
        reference = float(ef.evaluate(0.0)) * np.abs(array_factor(geom, exc, frequency_hz, 0.0, 0.0))
        if np.any(reference == 0):
            raise InvalidArgumentError("boresight value is zero, cannot normalize")
        pattern = pattern / reference
    return np.asarray(pattern)[()]


def sar_beam_pattern(geom: ArrayGeometry, exc: ExcitationPlan, ef: ElementFactor,
                     frequency_hz: float, elevation_rad: Any, azimuth_rad: Any) -> Any:
    """Complex SAR beam including per-element amplitude and error factors.

    Element phases are referenced to the array center, so the x term is
    k*cos(elevation)*sin(azimuth)*(m - (M-1)/2)*dx and the y term is
    k*sin(elevation)*cos(azimuth)*(n - (N-1)/2)*dy, plus the progressive
    steering phases of the excitation plan.
    """
    _require_finite(elevation_rad=elevation_rad, azimuth_rad=azimuth_rad)
    k0 = float(wavenumber(frequency_hz))
    elevation, azimuth = np.broadcast_arrays(
        np.asarray(elevation_rad, dtype=float), np.asarray(azimuth_rad, dtype=float)
    )
    u = np.cos(elevation) * np.sin(azimuth)
    v = np.sin(elevation) * np.cos(azimuth)
    off_boresight = np.arccos(np.sqrt(np.clip(1 - u ** 2 - v ** 2, 0.0, 1.0)))

    weights = exc.amplitude_matrix(geom) * exc.error_matrix_for(geom)
    m = np.arange(geom.m_count)
    n = np.arange(geom.n_count)
    mx = m - (geom.m_count - 1) / 2
    ny = n - (geom.n_count - 1) / 2

    flat_u = u.ravel()
    flat_v = v.ravel()
    out = np.empty(flat_u.size, dtype=complex)
    for start in range(0, flat_u.size, _CHUNK):
        stop = start + _CHUNK
        ex = np.exp(1j * (k0 * geom.spacing_x_m * np.multiply.outer(flat_u[start:stop], mx)
                          + m * exc.alpha_phase_rad))
        ey = np.exp(1j * (k0 * geom.spacing_y_m * np.multiply.outer(flat_v[start:stop], ny)
                          + n * exc.beta_phase_rad))
        out[start:stop] = np.einsum('sm,mn,sn->s', ex, weights, ey)
    beam = ef.evaluate(off_boresight) * out.reshape(u.shape)
    return beam[()]


class PatternEvaluator:
    """Callable antenna cut along phi = 0 normalized to the coherent maximum.

    Used as the antenna_cut of a pass scenario: gain(frequency_hz, theta_rad)
    evaluates elementwise over broadcast inputs.
    """

    max_angle_rad = math.pi / 2

    def __init__(self, geom: ArrayGeometry, exc: Optional[ExcitationPlan] = None,
                 ef: Optional[ElementFactor] = None):
        self.geom = geom
        self.exc = exc or ExcitationPlan()
        self.ef = ef or ElementFactor()
        self._peak = float(np.sum(np.abs(self.exc.amplitude_matrix(geom))))
        logger.debug(f"Pattern evaluator for {geom.m_count}x{geom.n_count} array")

    def __call__(self, frequency_hz: Any, theta_rad: Any) -> np.ndarray:
        theta = np.asarray(theta_rad, dtype=float)
        if np.any(np.abs(theta) > self.max_angle_rad):
            raise InvalidArgumentError("angle outside the pattern domain")
        if self.exc.is_uniform():
            k0 = wavenumber(frequency_hz)
            psi_x = k0 * self.geom.spacing_x_m * np.sin(theta) + self.exc.alpha_phase_rad
            # phi = 0 keeps the y progression at its steering phase only
            psi_y = np.full_like(psi_x, self.exc.beta_phase_rad)
            magnitude = (_line_factor(psi_x, self.geom.m_count)
                         * _line_factor(psi_y, self.geom.n_count))
            return self.ef.evaluate(theta) * magnitude
        return combined_pattern(self.ef, self.geom, self.exc, frequency_hz, theta) / self._peak
