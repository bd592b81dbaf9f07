"""
Analysis stage.
Extracts pattern cuts from a saved NSR grid, finds nulls and, given the
scenario, compares both receivers against the noiseless pattern.
"""

import hashlib
import logging
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import ValidationError

from .. import __version__
from ..analysis import (
    compare_receivers,
    extract_pattern,
    find_nulls,
    pattern_mismatch,
    spacing_ratio,
    spacing_vs_wavelength,
    spectrum_snapshots,
    time_to_angle,
)
from ..antenna import null_angles
from ..config import ConfigError, build_geometry, build_scenario, load_config
from ..passes import truth_cut
from ..schemas import InvalidArgumentError, NullReport, PatternCut, PowerGrid
from ..store import ArtifactStore, StoreError, load_grid, load_video
from .validate import EXIT_FAILED, EXIT_INVALID, EXIT_OK

logger = logging.getLogger(__name__)

MISMATCH_THRESHOLD_DB = 3.0


def _spacing_fit(reports: List[NullReport]) -> Optional[Dict[str, Any]]:
    spaced = [r for r in reports if r.mean_spacing is not None]
    if len({r.frequency_hz for r in spaced}) < 2 or len({r.axis for r in spaced}) != 1:
        return None
    fit = spacing_vs_wavelength(spaced)
    return {
        'axis': spaced[0].axis,
        'slope': fit['slope'],
        'intercept': fit['intercept'],
        'r_squared': fit['r_squared'],
        'points': fit['points'].to_dict(orient='records'),
    }


def _mismatches(cuts: List[PatternCut]) -> List[Dict[str, Any]]:
    entries = []
    for first, second in zip(cuts, cuts[1:]):
        mismatch = pattern_mismatch(first, second, threshold_db=MISMATCH_THRESHOLD_DB)
        entries.append({
            'frequency_hz': [first.frequency_hz, second.frequency_hz],
            'threshold_db': mismatch.threshold_db,
            'max_difference_db': float(np.max(mismatch.difference_db)),
            'first_exceed_time_s': mismatch.first_exceed_time_s,
        })
    return entries


def _snapshot_times(grid: PowerGrid, beam_center_s: Optional[float]) -> List[float]:
    """First ramp, beam centre (or middle ramp) and last ramp."""
    middle = beam_center_s if beam_center_s is not None else float(np.median(grid.times_s))
    return [float(grid.times_s[0]), middle, float(grid.times_s[-1])]


def run(grid_path: Union[str, Path], frequencies_hz: Optional[List[float]] = None,
        config_path: Optional[Union[str, Path]] = None, sed_path: Optional[Union[str, Path]] = None,
        out_dir: Optional[str] = None, fmt: str = 'csv', prominence_db: float = 6.0) -> Dict[str, Any]:
    """
    Analyze pattern cuts at the requested frequencies.

    Args:
        grid_path: NSR grid written by the simulate stage (CSV or JSON)
        frequencies_hz: Frequencies to cut at, each snapped to its bin. When empty,
            output.analysis_frequencies_hz from the scenario is used.
        config_path: Scenario file; enables angles, predicted nulls and receiver comparison
        sed_path: Wideband video CSV from the same run, compared when a config is given
        out_dir: Output directory, defaults to an 'analysis' folder beside the grid
        fmt: Cut file format
        prominence_db: Null depth threshold

    Returns:
        Dictionary with statusCode, per-frequency results and files written
    """
    started = time.perf_counter()
    grid_path = Path(grid_path)
    try:
        grid = load_grid(grid_path)
    except (OSError, ValueError) as e:
        logger.error(f"Cannot load grid {grid_path}: {e}")
        return {'statusCode': EXIT_FAILED if isinstance(e, OSError) else EXIT_INVALID,
                'errors': [str(e)]}

    scenario = geometry = None
    alpha = 0.0
    frequencies_hz = list(frequencies_hz or [])
    if config_path is not None:
        try:
            config, _ = load_config(config_path)
            scenario = build_scenario(config)
            geometry = build_geometry(config)
            alpha = config.antenna.alpha_phase_rad
        except (ConfigError, ValidationError, InvalidArgumentError) as e:
            logger.error(str(e))
            return {'statusCode': EXIT_INVALID, 'errors': [str(e)]}
        if not frequencies_hz:
            frequencies_hz = list(config.output.analysis_frequencies_hz)
            logger.info(f"Using {len(frequencies_hz)} analysis frequencies from {config_path}")
    if not frequencies_hz:
        message = "no cut frequencies: pass --freq or set output.analysis_frequencies_hz"
        logger.error(message)
        return {'statusCode': EXIT_INVALID, 'errors': [message]}

    cuts = []
    for frequency in frequencies_hz:
        try:
            cut = extract_pattern(grid, frequency)
        except InvalidArgumentError as e:
            logger.error(str(e))
            return {'statusCode': EXIT_INVALID, 'errors': [str(e)]}
        if scenario is not None:
            cut = time_to_angle(cut, scenario.ground_beam_speed_mps, scenario.range_m,
                                scenario.pass_duration_s / 2)
        cuts.append((frequency, cut))

    sed = None
    if sed_path is not None and scenario is not None:
        try:
            sed = load_video(sed_path, bandwidth_hz=grid.nbpf_hz * grid.frequencies_hz.size)
        except (OSError, ValueError, KeyError) as e:
            logger.error(f"Cannot load wideband video {sed_path}: {e}")
            return {'statusCode': EXIT_FAILED, 'errors': [str(e)]}

    root = Path(out_dir) if out_dir else grid_path.parent / 'analysis'
    results: List[Dict[str, Any]] = []
    reports: List[NullReport] = []
    try:
        store = ArtifactStore(root)
        store.discard_manifest()
        for requested, cut in cuts:
            stem = f'cut_{cut.frequency_hz / 1e6:.6f}MHz'
            store.save_cut(cut, stem, fmt)
            report = find_nulls(cut, prominence_db=prominence_db)
            reports.append(report)
            entry: Dict[str, Any] = {
                'requested_frequency_hz': requested,
                'frequency_hz': cut.frequency_hz,
                'points': int(cut.times_s.size),
                'null_axis': report.axis,
                'nulls': report.nulls,
                'null_depths_db': report.depths_db,
                'mean_spacing': report.mean_spacing,
            }
            if geometry is not None and cut.angles_rad is not None:
                predicted = null_angles(geometry, alpha, cut.frequency_hz)
                lo, hi = cut.angles_rad.min(), cut.angles_rad.max()
                entry['predicted_nulls_rad'] = [float(a) for a in predicted if lo <= a <= hi]
            if sed is not None:
                truth = truth_cut(scenario, cut.frequency_hz, cut.times_s)
                entry['comparison'] = compare_receivers(cut, sed, truth).model_dump()
            results.append(entry)

        ratios = []
        for first, second in zip(reports, reports[1:]):
            ratios.append({
                'frequency_hz': [first.frequency_hz, second.frequency_hz],
                'measured_spacing_ratio': spacing_ratio(first, second),
                'expected_spacing_ratio': first.frequency_hz / second.frequency_hz,
            })
        fit = _spacing_fit(reports)
        mismatches = _mismatches([cut for _, cut in cuts])
        store.save_json('nulls.json', {
            'cuts': results,
            'spacing_ratios': ratios,
            'spacing_fit': fit,
            'pattern_mismatch': mismatches,
        })

        beam_center = scenario.pass_duration_s / 2 if scenario is not None else None
        store.save_frame('spectrum_snapshots.csv',
                         spectrum_snapshots(grid, _snapshot_times(grid, beam_center)))

        digest = hashlib.sha256(grid_path.read_bytes()).hexdigest()
        manifest = store.build_manifest(digest, __version__, [],
                                        {'analyze': time.perf_counter() - started})
        store.save_manifest(manifest)
    except (StoreError, OSError) as e:
        logger.error(f"Analysis output failed: {e}")
        return {'statusCode': EXIT_FAILED, 'errors': [str(e)]}

    logger.info(f"Analyzed {len(cuts)} cuts into {root}")
    return {'statusCode': EXIT_OK, 'output_dir': str(root), 'cuts': results,
            'spacing_ratios': ratios, 'spacing_fit': fit, 'pattern_mismatch': mismatches,
            'files': [f.path for f in manifest.files]}
