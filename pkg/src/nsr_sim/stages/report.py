"""
Report stage.
Renders a Markdown summary of a finished run from its manifest and JSON outputs.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from jinja2 import Environment, PackageLoader, StrictUndefined

from ..analysis import snr_ratio_curve
from ..schemas import SPEED_OF_LIGHT, RunManifest
from ..store import MANIFEST_NAME, ArtifactStore
from .validate import EXIT_FAILED, EXIT_OK

logger = logging.getLogger(__name__)

# Filter widths tabulated against the configured NBPF
RATIO_TABLE_NBPF_HZ = (1e6, 2e6, 5e6, 10e6, 20e6, 50e6, 100e6, 200e6)


def _read_json(path: Path) -> Optional[Dict[str, Any]]:
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding='utf-8'))


def _ratio_rows(sweep: Optional[Dict[str, Any]]) -> List[Dict[str, Any]]:
    if not sweep or 'bpf_hz' not in sweep:
        return []
    bpf, nbpf = sweep['bpf_hz'], sweep['nbpf_hz']
    widths = sorted({w for w in RATIO_TABLE_NBPF_HZ if w <= bpf} | {nbpf})
    curve = snr_ratio_curve(bpf, widths)
    return [dict(row, configured=math.isclose(row['nbpf_hz'], nbpf))
            for row in curve.to_dict(orient='records')]


def _spacing_rows(cuts: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    rows = []
    for cut in cuts:
        spacing = cut.get('mean_spacing')
        on_angle = cut.get('null_axis') == 'angle_rad'
        rows.append({
            'frequency_hz': cut['frequency_hz'],
            'wavelength_mm': SPEED_OF_LIGHT / cut['frequency_hz'] * 1e3,
            'nulls': len(cut.get('nulls', [])),
            'mean_spacing': None if spacing is None else (math.degrees(spacing) if on_angle else spacing),
            'unit': 'deg' if on_angle else 's',
        })
    return rows


def render(context: Dict[str, Any]) -> str:
    env = Environment(
        loader=PackageLoader('nsr_sim', 'templates'),
        undefined=StrictUndefined,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    return env.get_template('report.md.j2').render(**context)


def run(run_dir: Union[str, Path], output: Optional[str] = None) -> Dict[str, Any]:
    """
    Render report.md for a simulate or analyze output directory.

    Args:
        run_dir: Directory holding manifest.json
        output: Report path, defaults to run_dir/report.md

    Returns:
        Dictionary with statusCode and the report path
    """
    root = Path(run_dir)
    try:
        manifest_data = _read_json(root / MANIFEST_NAME)
        if manifest_data is None:
            raise FileNotFoundError(f"{root / MANIFEST_NAME} not found, run is incomplete")
        manifest = RunManifest.model_validate(manifest_data)

        spectra = []
        for path in sorted(root.glob('seed_*/spectrum.json')):
            spectra.append((path.parent.name, _read_json(path)))
        nulls = _read_json(root / 'nulls.json') or {}
        sweep = _read_json(root / 'sweep_check.json')
        cuts = [dict(comparison=None, **cut) if 'comparison' not in cut else cut
                for cut in nulls.get('cuts', [])]
        context = {
            'run_dir': str(root),
            'manifest': manifest.model_dump(),
            'sweep': sweep,
            'ratio_rows': _ratio_rows(sweep),
            'spectra': spectra,
            'cuts': cuts,
            'spacing_rows': _spacing_rows(cuts),
            'spacing_ratios': nulls.get('spacing_ratios', []),
            'spacing_fit': nulls.get('spacing_fit'),
            'mismatches': nulls.get('pattern_mismatch', []),
        }
        text = render(context)
        target = Path(output) if output else root / 'report.md'
        ArtifactStore(target.parent).save_text(target.name, text)
    except (OSError, ValueError) as e:
        logger.error(f"Report failed for {root}: {e}")
        return {'statusCode': EXIT_FAILED, 'errors': [str(e)]}

    logger.info(f"Wrote report {target}")
    return {'statusCode': EXIT_OK, 'report': str(target)}
