"""
Simulation stage.
Runs one pass per seed and writes grids, wideband video, spectra and the manifest.
"""

import logging
import time
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import ValidationError

from .. import __version__
from ..config import (
    ConfigError,
    build_chains,
    build_pulse_params,
    build_scenario,
    load_config,
    output_directory,
)
from ..passes import sample_level_snippet, simulate_pass
from ..receiver import reconstruct_spectrum, validate_sweep_plan
from ..schemas import InvalidArgumentError, RunStatus
from ..store import ArtifactStore, StoreError
from .validate import EXIT_FAILED, EXIT_INVALID, EXIT_OK

logger = logging.getLogger(__name__)


def run(config_path: Union[str, Path], out_dir: Optional[str] = None,
        seeds: Optional[List[int]] = None, formats: Optional[List[str]] = None,
        iq_dump: Optional[bool] = None) -> Dict[str, Any]:
    """
    Simulate every seed of a scenario.

    Args:
        config_path: YAML scenario file
        out_dir: Output directory, overriding the config and environment
        seeds: Seeds overriding the config
        formats: Grid formats overriding the config
        iq_dump: Whether to write a sample-level I/Q snippet per seed

    Returns:
        Dictionary with statusCode, output directory and files written
    """
    try:
        config, digest = load_config(config_path)
    except ConfigError as e:
        logger.error(str(e))
        return {'statusCode': EXIT_INVALID, 'errors': e.violations}

    status = RunStatus(run_id=uuid.uuid4().hex[:12], stage='simulate')
    try:
        params = build_pulse_params(config)
        scenario = build_scenario(config)
        chains = build_chains(config)
    except (ValidationError, InvalidArgumentError) as e:
        logger.error(f"Scenario objects rejected: {e}")
        return {'statusCode': EXIT_INVALID, 'errors': [str(e)]}

    sweep = validate_sweep_plan(chains.plan, params.pri_s)
    if not sweep.valid:
        return {'statusCode': EXIT_INVALID, 'errors': [sweep.message]}

    seeds = seeds if seeds is not None else config.seeds
    formats = formats or config.output.formats
    dump = config.output.iq_dump if iq_dump is None else iq_dump
    root = output_directory(config, out_dir)
    timings: Dict[str, float] = {}

    try:
        store = ArtifactStore(root)
        store.discard_manifest()
        for seed in seeds:
            started = time.perf_counter()
            result = simulate_pass(params, scenario, chains, seed=seed)
            prefix = f'seed_{seed}'
            for fmt in formats:
                store.save_grid(result.grid, f'{prefix}/nsr_grid', fmt)
            store.save_video(result.sed, f'{prefix}/sed_video')
            spectrum = reconstruct_spectrum(result.grid)
            store.save_json(f'{prefix}/spectrum.json', {
                'center_frequency_hz': spectrum.center_frequency_hz,
                'bandwidth_hz': spectrum.bandwidth_hz,
                'resolution_hz': spectrum.resolution_hz,
                'empty_interior_bins': spectrum.empty_interior_bins,
                'frequencies_hz': spectrum.frequencies_hz.tolist(),
                'power_db': spectrum.power_db.tolist(),
            })
            if dump:
                duration = config.output.iq_dump_duration_s or 2 * params.pri_s
                snippet = sample_level_snippet(params, scenario, duration, seed=seed)
                store.save_iq(snippet, f'{prefix}/snippet.iq')
            timings[prefix] = time.perf_counter() - started
            logger.info(f"Seed {seed} done in {timings[prefix]:.2f} s")

        store.save_json('sweep_check.json', {
            **sweep.model_dump(),
            'bpf_hz': chains.plan.bpf_hz,
            'nbpf_hz': chains.plan.nbpf_hz,
        })
        manifest = store.build_manifest(digest, __version__, list(seeds), timings)
        store.save_manifest(manifest)
    except (StoreError, OSError) as e:
        logger.error(f"Simulation output failed: {e}")
        status.errors.append(str(e))
        return {'statusCode': EXIT_FAILED, 'errors': status.errors}
    except Exception as e:
        logger.exception(f"Simulation failed: {e}")
        status.errors.append(f"{type(e).__name__}: {e}")
        return {'statusCode': EXIT_FAILED, 'errors': status.errors}

    status.completed_at = datetime.now(timezone.utc)
    status.files_written = [f.path for f in manifest.files]
    logger.info(f"Run {status.run_id} wrote {len(status.files_written)} files in {status.elapsed_s:.1f} s")
    return {
        'statusCode': EXIT_OK,
        'output_dir': str(root),
        'files': status.files_written,
        'sweep': sweep.model_dump(),
    }
