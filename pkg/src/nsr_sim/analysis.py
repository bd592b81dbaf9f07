"""
Pattern analysis: cut extraction from the NSR grid, time-to-angle mapping,
null finding, the NSR/SED SNR ratio and receiver comparison metrics.
"""

import logging
import math
from typing import Iterable, List, Literal, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import signal as sps
from scipy import stats

from .receiver import bin_index
from .schemas import (
    SPEED_OF_LIGHT,
    ComparisonReport,
    InvalidArgumentError,
    NullReport,
    PatternCut,
    PatternMismatch,
    PowerGrid,
    VideoSeries,
)

logger = logging.getLogger(__name__)

# Error metrics treat anything below this as the floor
RMS_FLOOR_DB = -60.0
Statistic = Literal["peak", "mean"]


def extract_pattern(grid: PowerGrid, frequency_hz: float) -> PatternCut:
    """Time series of the bin containing frequency_hz, normalized to a 0 dB maximum."""
    index = bin_index(grid, frequency_hz)
    if index is None:
        raise InvalidArgumentError(
            f"{frequency_hz / 1e6:.6g} MHz outside grid span "
            f"{grid.frequencies_hz[0] / 1e6:.6g}-{grid.frequencies_hz[-1] / 1e6:.6g} MHz"
        )
    column = grid.power_db[:, index]
    peak = float(np.max(column))
    logger.info(f"Extracted {column.size}-point cut at {grid.frequencies_hz[index] / 1e6:.6g} MHz")
    return PatternCut(
        frequency_hz=float(grid.frequencies_hz[index]),
        times_s=grid.window_centers(index),
        power_db=column - peak,
        normalization_db=peak,
        dwell_s=grid.stop_duration_s,
        bandwidth_hz=grid.nbpf_hz,
    )


def normalize_cut(cut: PatternCut) -> PatternCut:
    peak = float(np.max(cut.power_db))
    return cut.model_copy(update={
        'power_db': cut.power_db - peak,
        'normalization_db': cut.normalization_db + peak,
    })


def time_to_angle(cut: PatternCut, ground_beam_speed_mps: float, range_m: float,
                  crossing_time_s: float) -> PatternCut:
    """Attach angles arctan(v * (t - t0) / R) to a cut."""
    if range_m <= 0:
        raise InvalidArgumentError("range_m must be positive")
    if ground_beam_speed_mps <= 0:
        raise InvalidArgumentError("ground_beam_speed_mps must be positive")
    angles = np.arctan(ground_beam_speed_mps * (cut.times_s - crossing_time_s) / range_m)
    return cut.model_copy(update={'angles_rad': angles})


def _null_position(x: np.ndarray, power_db: np.ndarray) -> float:
    """Zero crossing of the signed amplitude through three samples around a minimum.

    The field amplitude changes sign at a null, so one side of the sampled minimum
    is negated and a quadratic is fitted in linear amplitude. Of the two possible
    sign assignments the one giving the smoother quadratic is kept.
    """
    amplitude = 10 ** (power_db / 20)
    center = x[1]
    best = None
    for signs, lo, hi in (((1, 1, -1), x[1], x[2]), ((1, -1, -1), x[0], x[1])):
        coeffs = np.polyfit(x - center, amplitude * np.array(signs), 2)
        if best is None or abs(coeffs[0]) < abs(best[0][0]):
            best = (coeffs, min(lo, hi), max(lo, hi), signs)
    coeffs, lo, hi, signs = best
    roots = np.roots(coeffs) if coeffs[0] != 0 else np.roots(coeffs[1:])
    roots = roots[np.isreal(roots)].real + center
    inside = roots[(roots >= lo) & (roots <= hi)]
    if inside.size:
        return float(inside[0])
    # Linear interpolation across the sign change
    a, b = (0, 1) if signs[1] < 0 else (1, 2)
    weight = amplitude[a] / (amplitude[a] + amplitude[b])
    return float(x[a] + weight * (x[b] - x[a]))


def find_nulls(cut: PatternCut, prominence_db: float = 6.0) -> NullReport:
    """Local minima deeper than prominence_db, refined on the signed field amplitude.

    Positions are angles when the cut carries them, otherwise times.
    """
    if prominence_db <= 0:
        raise InvalidArgumentError("prominence_db must be positive")
    axis: Literal["angle_rad", "time_s"] = "angle_rad" if cut.angles_rad is not None else "time_s"
    x = cut.angles_rad if cut.angles_rad is not None else cut.times_s
    y = cut.power_db
    minima, _ = sps.find_peaks(-y, prominence=prominence_db)

    nulls: List[float] = []
    depths: List[float] = []
    for i in minima:
        nulls.append(_null_position(x[i - 1:i + 2], y[i - 1:i + 2]))
        depths.append(float(y[i]))
    order = np.argsort(nulls)
    logger.info(f"Found {len(nulls)} nulls at {cut.frequency_hz / 1e6:.6g} MHz")
    return NullReport(
        frequency_hz=cut.frequency_hz,
        axis=axis,
        nulls=[nulls[i] for i in order],
        depths_db=[depths[i] for i in order],
    )


def snr_ratio(bpf_hz: float, nbpf_hz: float) -> float:
    """Noise-bandwidth advantage of the narrowband chain, BPF/NBPF."""
    if nbpf_hz <= 0 or bpf_hz <= 0:
        raise InvalidArgumentError("bandwidths must be positive")
    if nbpf_hz > bpf_hz:
        raise InvalidArgumentError("nbpf_hz must not exceed bpf_hz")
    return bpf_hz / nbpf_hz


def snr_ratio_curve(bpf_hz: float, nbpf_values_hz: Iterable[float]) -> pd.DataFrame:
    rows = []
    for nbpf in nbpf_values_hz:
        ratio = snr_ratio(bpf_hz, nbpf)
        rows.append({'nbpf_hz': nbpf, 'ratio': ratio, 'ratio_db': 10 * math.log10(ratio)})
    return pd.DataFrame(rows, columns=['nbpf_hz', 'ratio', 'ratio_db'])


def aggregate_video(series: VideoSeries, centers_s: np.ndarray, dwell_s: float,
                    statistic: Statistic = "peak") -> np.ndarray:
    """Reduce a video series to one level per window of width dwell_s; NaN where empty."""
    if statistic not in ("peak", "mean"):
        raise InvalidArgumentError(f"unknown statistic {statistic!r}")
    order = np.argsort(series.times_s)
    times = series.times_s[order]
    linear = 10 ** (series.power_db[order] / 10)
    lo = np.searchsorted(times, centers_s - dwell_s / 2, side='left')
    hi = np.searchsorted(times, centers_s + dwell_s / 2, side='right')
    levels = np.full(centers_s.size, np.nan)
    for k, (a, b) in enumerate(zip(lo, hi)):
        if b > a:
            window = linear[a:b]
            levels[k] = np.max(window) if statistic == "peak" else np.mean(window)
    with np.errstate(divide='ignore'):
        return 10 * np.log10(levels)


def pearson(a: np.ndarray, b: np.ndarray) -> float:
    if np.std(a) == 0 or np.std(b) == 0:
        return 1.0 if np.allclose(a, b) else 0.0
    return float(stats.pearsonr(a, b)[0])


def rms_error_db(estimate_db: np.ndarray, truth_db: np.ndarray) -> float:
    difference = np.maximum(estimate_db, RMS_FLOOR_DB) - np.maximum(truth_db, RMS_FLOOR_DB)
    return float(np.sqrt(np.mean(difference ** 2)))


def residual_variance(estimate_db: np.ndarray, truth_db: np.ndarray) -> Optional[float]:
    """Amplitude noise variance after an affine fit to the true amplitude, in truth units."""
    estimate = 10 ** (estimate_db / 20)
    truth = 10 ** (truth_db / 20)
    if np.std(truth) == 0:
        return None
    fit = stats.linregress(truth, estimate)
    if fit.slope <= 0:
        return None
    residual = estimate - (fit.slope * truth + fit.intercept)
    return float(np.var(residual) / fit.slope ** 2)


def measured_gain_db(nsr_db: np.ndarray, sed_db: np.ndarray, truth_db: np.ndarray) -> Optional[float]:
    """10*log10 of the SED to NSR amplitude residual variance ratio; None when undefined."""
    v_nsr = residual_variance(nsr_db, truth_db)
    v_sed = residual_variance(sed_db, truth_db)
    if v_nsr is None or v_sed is None or v_nsr <= 1e-20 or v_sed <= 1e-20:
        return None
    return 10 * math.log10(v_sed / v_nsr)


def compare_receivers(nsr_cut: PatternCut, sed_series: VideoSeries, truth: PatternCut,
                      bpf_hz: Optional[float] = None, nbpf_hz: Optional[float] = None,
                      statistic: Statistic = "peak") -> ComparisonReport:
    """Score the NSR cut and the window-aggregated SED video against a reference cut.

    SED video is reduced to one level per NSR stop window using the same statistic
    the NSR applies, then both estimates and the truth are normalized to 0 dB.
    Correlation is Pearson on linear power; RMS error is in dB above a -60 dB floor.

    Args:
        nsr_cut: Cut extracted from the NSR grid
        sed_series: Wideband video covering the same pass
        truth: Reference cut, resampled onto the NSR times
        bpf_hz: Wideband filter width for the analytic gain, defaults to the SED bandwidth
        nbpf_hz: Narrowband filter width, defaults to the width recorded on the cut
        statistic: Window reduction for the SED video

    Returns:
        ComparisonReport with both receivers' metrics
    """
    dwell = nsr_cut.dwell_s
    if dwell is None:
        raise InvalidArgumentError("NSR cut carries no dwell duration")
    sed_db = aggregate_video(sed_series, nsr_cut.times_s, dwell, statistic)
    if truth.times_s[0] > nsr_cut.times_s[-1] or truth.times_s[-1] < nsr_cut.times_s[0]:
        raise InvalidArgumentError("reference cut does not overlap the NSR cut")
    truth_db = np.interp(nsr_cut.times_s, truth.times_s, truth.power_db)

    keep = np.isfinite(sed_db)
    if np.count_nonzero(keep) < 3:
        raise InvalidArgumentError("SED video does not overlap the NSR cut")
    nsr_db = nsr_cut.power_db[keep] - np.max(nsr_cut.power_db[keep])
    sed_db = sed_db[keep] - np.max(sed_db[keep])
    truth_db = truth_db[keep] - np.max(truth_db[keep])

    bpf = bpf_hz or sed_series.bandwidth_hz
    nbpf = nbpf_hz or nsr_cut.bandwidth_hz
    if nbpf is None:
        raise InvalidArgumentError("NSR filter width unknown, pass nbpf_hz")
    report = ComparisonReport(
        frequency_hz=nsr_cut.frequency_hz,
        points=int(np.count_nonzero(keep)),
        nsr_correlation=pearson(10 ** (nsr_db / 10), 10 ** (truth_db / 10)),
        sed_correlation=pearson(10 ** (sed_db / 10), 10 ** (truth_db / 10)),
        nsr_rms_error_db=rms_error_db(nsr_db, truth_db),
        sed_rms_error_db=rms_error_db(sed_db, truth_db),
        measured_snr_gain_db=measured_gain_db(nsr_db, sed_db, truth_db),
        analytic_snr_gain_db=10 * math.log10(snr_ratio(bpf, nbpf)),
    )
    logger.info(
        f"Comparison at {nsr_cut.frequency_hz / 1e6:.6g} MHz: "
        f"corr NSR {report.nsr_correlation:.3f} / SED {report.sed_correlation:.3f}"
    )
    return report


def spacing_vs_wavelength(reports: Sequence[NullReport]) -> dict:
    """Regress mean null spacing against wavelength; spacing should scale with lambda."""
    points = [(SPEED_OF_LIGHT / r.frequency_hz, r.mean_spacing) for r in reports
              if r.mean_spacing is not None]
    if len(points) < 2:
        raise InvalidArgumentError("need at least two cuts with two or more nulls")
    wavelengths, spacings = map(np.asarray, zip(*points))
    fit = stats.linregress(wavelengths, spacings)
    return {
        'slope': float(fit.slope),
        'intercept': float(fit.intercept),
        'r_squared': float(fit.rvalue ** 2) if len(points) > 2 else 1.0,
        'points': pd.DataFrame({'wavelength_m': wavelengths, 'mean_spacing': spacings}),
    }


def spacing_ratio(first: NullReport, second: NullReport) -> Optional[float]:
    """spacing(second)/spacing(first), expected near f_first/f_second."""
    if first.mean_spacing is None or second.mean_spacing is None:
        return None
    return second.mean_spacing / first.mean_spacing


def spectrum_snapshots(grid: PowerGrid, times_s: Iterable[float]) -> pd.DataFrame:
    """Spectrum rows of the ramps nearest the requested times, long format."""
    frames = []
    for t in times_s:
        row = int(np.argmin(np.abs(grid.times_s - t)))
        frames.append(pd.DataFrame({
            'requested_time_s': t,
            'ramp_time_s': grid.times_s[row],
            'frequency_hz': grid.frequencies_hz,
            'power_db': grid.power_db[row],
        }))
    if not frames:
        return pd.DataFrame(columns=['requested_time_s', 'ramp_time_s', 'frequency_hz', 'power_db'])
    return pd.concat(frames, ignore_index=True)


def pattern_mismatch(cut_a: PatternCut, cut_b: PatternCut, threshold_db: float = 3.0) -> PatternMismatch:
    """Pointwise |a - b| in dB on cut_a's times, and the first time it exceeds the threshold."""
    other = np.interp(cut_a.times_s, cut_b.times_s, cut_b.power_db)
    difference = np.abs(np.maximum(cut_a.power_db, RMS_FLOOR_DB) - np.maximum(other, RMS_FLOOR_DB))
    above = np.flatnonzero(difference > threshold_db)
    return PatternMismatch(
        times_s=cut_a.times_s,
        difference_db=difference,
        threshold_db=threshold_db,
        first_exceed_time_s=float(cut_a.times_s[above[0]]) if above.size else None,
    )
