"""
Local artifact storage for simulation runs.
Handles grid/series/cut persistence, the I/Q binary format and the run manifest.
"""

import hashlib
import json
import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from .schemas import (
    BasebandSignal,
    ManifestFile,
    PatternCut,
    PowerGrid,
    RunManifest,
    VideoSeries,
)

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.9g'
IQ_MAGIC = b'NSIQ'
IQ_VERSION = 1
IQ_HEADER = struct.Struct('<4sIddd')
MANIFEST_NAME = 'manifest.json'


class StoreError(OSError):
    """Raised when an artifact cannot be written or read back"""


def sha256_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for block in iter(lambda: handle.read(1 << 20), b''):
            digest.update(block)
    return digest.hexdigest()


class ArtifactStore:
    """Writes run artifacts under one root directory, atomically"""

    def __init__(self, root: Union[str, Path]):
        """
        Initialize the store, creating the root directory if needed.

        Args:
            root: Output directory for the run
        """
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            logger.info(f"Initialized ArtifactStore at: {self.root}")
        except OSError as e:
            logger.error(f"Failed to create output directory {self.root}: {e}")
            raise StoreError(f"cannot create output directory {self.root}: {e}") from e
        self.written: List[str] = []

    def _write_bytes(self, relative: str, payload: bytes) -> bool:
        target = self.root / relative
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            with tempfile.NamedTemporaryFile(dir=target.parent, delete=False,
                                             prefix=f'.{target.name}.') as handle:
                handle.write(payload)
                temporary = handle.name
            os.replace(temporary, target)
        except OSError as e:
            logger.error(f"Failed to write {target}: {e}")
            return False
        if relative not in self.written:
            self.written.append(relative)
        logger.debug(f"Wrote {len(payload)} bytes to {target}")
        return True

    def write_json(self, relative: str, data: Dict[str, Any]) -> bool:
        """
        Write a dictionary as indented, key-sorted JSON.

        Args:
            relative: Path below the store root
            data: JSON-serializable dictionary

        Returns:
            True if successful, False otherwise
        """
        text = json.dumps(data, indent=2, sort_keys=True, default=str, ensure_ascii=False)
        return self._write_bytes(relative, (text + '\n').encode('utf-8'))

    def write_text(self, relative: str, text: str) -> bool:
        return self._write_bytes(relative, text.encode('utf-8'))

    def save_text(self, relative: str, text: str) -> str:
        return self._require(self.write_text(relative, text), relative)

    def write_frame(self, relative: str, frame: pd.DataFrame) -> bool:
        text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        return self._write_bytes(relative, text.encode('utf-8'))

    def _require(self, ok: bool, relative: str) -> str:
        if not ok:
            raise StoreError(f"failed to write {self.root / relative}")
        return relative

    def save_grid(self, grid: PowerGrid, stem: str, fmt: str = 'csv') -> str:
        """Persist a power grid as CSV (time column plus one column per bin) or JSON."""
        if fmt == 'csv':
            relative = f'{stem}.csv'
            return self._require(self.write_frame(relative, grid_to_frame(grid)), relative)
        relative = f'{stem}.json'
        payload = {
            'times_s': grid.times_s.tolist(),
            'frequencies_hz': grid.frequencies_hz.tolist(),
            'power_db': grid.power_db.tolist(),
            'nbpf_hz': grid.nbpf_hz,
            'ramp_period_s': grid.ramp_period_s,
        }
        return self._require(self.write_json(relative, payload), relative)

    def save_json(self, relative: str, data: Dict[str, Any]) -> str:
        return self._require(self.write_json(relative, data), relative)

    def save_frame(self, relative: str, frame: pd.DataFrame) -> str:
        return self._require(self.write_frame(relative, frame), relative)

    def save_video(self, series: VideoSeries, stem: str) -> str:
        relative = f'{stem}.csv'
        frame = pd.DataFrame({'time_s': series.times_s, 'power_db': series.power_db})
        return self._require(self.write_frame(relative, frame), relative)

    def save_cut(self, cut: PatternCut, stem: str, fmt: str = 'csv') -> List[str]:
        """Persist a pattern cut plus its angle/power plot table."""
        angles = cut.angles_rad if cut.angles_rad is not None else np.full(cut.times_s.size, np.nan)
        frame = pd.DataFrame({'time_s': cut.times_s, 'angle_rad': angles, 'power_db': cut.power_db})
        if fmt == 'csv':
            relative = f'{stem}.csv'
            self._require(self.write_frame(relative, frame), relative)
        else:
            relative = f'{stem}.json'
            payload = {
                'frequency_hz': cut.frequency_hz,
                'normalization_db': cut.normalization_db,
                **{column: frame[column].tolist() for column in frame.columns},
            }
            self._require(self.write_json(relative, payload), relative)
        written = [relative]
        if cut.angles_rad is not None:
            plot = pd.DataFrame({'angle_deg': np.degrees(angles), 'power_db': cut.power_db})
            plot_relative = f'{stem}_plot.csv'
            written.append(self._require(self.write_frame(plot_relative, plot), plot_relative))
        return written

    def save_iq(self, signal: BasebandSignal, relative: str) -> str:
        return self._require(self._write_bytes(relative, encode_iq(signal)), relative)

    def discard_manifest(self) -> bool:
        """Remove a manifest left by an earlier run in the same directory."""
        stale = self.root / MANIFEST_NAME
        try:
            stale.unlink()
        except FileNotFoundError:
            return False
        except OSError as e:
            raise StoreError(f"cannot remove stale manifest {stale}: {e}") from e
        logger.info(f"Removed stale manifest {stale}")
        return True

    def build_manifest(self, config_digest: str, tool_version: str, seeds: List[int],
                       timings_s: Optional[Dict[str, float]] = None) -> RunManifest:
        files = [
            ManifestFile(path=relative, sha256=sha256_file(self.root / relative),
                         bytes=(self.root / relative).stat().st_size)
            for relative in sorted(self.written)
        ]
        return RunManifest(
            config_digest=config_digest,
            tool_version=tool_version,
            seeds=list(seeds),
            files=files,
            timings_s=timings_s or {},
        )

    def save_manifest(self, manifest: RunManifest) -> str:
        """Write the manifest last; its presence marks a complete run."""
        ok = self.write_json(MANIFEST_NAME, manifest.model_dump())
        logger.info(f"Manifest lists {len(manifest.files)} files")
        return self._require(ok, MANIFEST_NAME)


def grid_to_frame(grid: PowerGrid) -> pd.DataFrame:
    columns = [FLOAT_FORMAT % f for f in grid.frequencies_hz]
    frame = pd.DataFrame(grid.power_db, columns=columns)
    frame.insert(0, 'time_s', grid.times_s)
    return frame


def load_grid(path: Union[str, Path], nbpf_hz: Optional[float] = None,
              ramp_period_s: Optional[float] = None) -> PowerGrid:
    """Read a grid written by save_grid.

    CSV files carry no metadata; when omitted, nbpf_hz is taken from the bin
    spacing and ramp_period_s from the row spacing.
    """
    path = Path(path)
    if path.suffix == '.json':
        data = json.loads(path.read_text(encoding='utf-8'))
        return PowerGrid(**data)
    frame = pd.read_csv(path)
    if frame.columns[0] != 'time_s' or frame.shape[1] < 2:
        raise StoreError(f"{path} is not a power grid CSV")
    frequencies = np.array([float(c) for c in frame.columns[1:]])
    times = frame['time_s'].to_numpy(dtype=float)
    if nbpf_hz is None:
        nbpf_hz = float(frequencies[1] - frequencies[0]) if frequencies.size > 1 else None
    if ramp_period_s is None and times.size > 1:
        ramp_period_s = float(times[1] - times[0])
    if nbpf_hz is None or ramp_period_s is None:
        raise StoreError(f"{path} needs nbpf_hz and ramp_period_s to be supplied")
    return PowerGrid(
        times_s=times,
        frequencies_hz=frequencies,
        power_db=frame.iloc[:, 1:].to_numpy(dtype=float),
        nbpf_hz=nbpf_hz,
        ramp_period_s=ramp_period_s,
    )


def load_video(path: Union[str, Path], bandwidth_hz: float) -> VideoSeries:
    frame = pd.read_csv(path)
    missing = {'time_s', 'power_db'} - set(frame.columns)
    if missing:
        raise StoreError(f"{path} is not a video CSV, missing columns {sorted(missing)}")
    return VideoSeries(times_s=frame['time_s'], power_db=frame['power_db'], bandwidth_hz=bandwidth_hz)


def encode_iq(signal: BasebandSignal) -> bytes:
    header = IQ_HEADER.pack(IQ_MAGIC, IQ_VERSION, signal.sample_rate_hz,
                            signal.center_frequency_hz, signal.start_time_s)
    interleaved = np.empty(2 * signal.samples.size, dtype='<f4')
    interleaved[0::2] = signal.samples.real
    interleaved[1::2] = signal.samples.imag
    return header + interleaved.tobytes()


def read_iq(path: Union[str, Path]) -> BasebandSignal:
    """Read an I/Q dump: little-endian header then interleaved float32 I and Q."""
    payload = Path(path).read_bytes()
    if len(payload) < IQ_HEADER.size:
        raise StoreError(f"{path} is too short for an I/Q header")
    magic, version, sample_rate, center, start = IQ_HEADER.unpack_from(payload)
    if magic != IQ_MAGIC or version != IQ_VERSION:
        raise StoreError(f"{path} is not a version {IQ_VERSION} I/Q file")
    body = np.frombuffer(payload, dtype='<f4', offset=IQ_HEADER.size)
    if body.size % 2:
        raise StoreError(f"{path} has a truncated sample")
    return BasebandSignal(
        samples=body[0::2].astype(float) + 1j * body[1::2].astype(float),
        sample_rate_hz=sample_rate,
        center_frequency_hz=center,
        start_time_s=start,
    )
