"""
Tests for artifact persistence, the I/Q format and the run manifest.
"""

import json

import numpy as np
import pytest

from nsr_sim.schemas import BasebandSignal, PowerGrid, VideoSeries
from nsr_sim.store import (
    IQ_HEADER,
    MANIFEST_NAME,
    ArtifactStore,
    StoreError,
    encode_iq,
    load_grid,
    load_video,
    read_iq,
    sha256_file,
)


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(tmp_path / 'run')


@pytest.fixture
def small_grid():
    return PowerGrid(
        times_s=[0.0, 0.1],
        frequencies_hz=[9.405e9, 9.415e9, 9.425e9],
        power_db=[[-100.5, -90.25, -95.0], [-99.0, -88.125, -97.5]],
        nbpf_hz=10e6,
        ramp_period_s=0.1,
    )


class TestArtifactStore:
    """Test ArtifactStore functionality."""

    def test_init_creates_root(self, tmp_path):
        root = tmp_path / 'a' / 'b'
        ArtifactStore(root)
        assert root.is_dir()

    def test_init_fails_on_file(self, tmp_path):
        blocker = tmp_path / 'blocker'
        blocker.write_text('x')
        with pytest.raises(StoreError):
            ArtifactStore(blocker / 'run')

    def test_write_json_sorted(self, store):
        assert store.write_json('nested/data.json', {'b': 1, 'a': 2})
        text = (store.root / 'nested' / 'data.json').read_text()
        assert text.index('"a"') < text.index('"b"')
        assert store.written == ['nested/data.json']

    def test_no_temporary_files_left(self, store):
        assert store.save_text('report.md', '# Run report\n') == 'report.md'
        assert [p.name for p in store.root.iterdir()] == ['report.md']


class TestGridFiles:
    """Test grid CSV and JSON persistence."""

    def test_csv(self, store, small_grid):
        relative = store.save_grid(small_grid, 'seed_1/nsr_grid')
        assert relative == 'seed_1/nsr_grid.csv'
        header = (store.root / relative).read_text().splitlines()[0]
        assert header == 'time_s,9.405e+09,9.415e+09,9.425e+09'

        loaded = load_grid(store.root / relative)
        np.testing.assert_allclose(loaded.power_db, small_grid.power_db)
        np.testing.assert_allclose(loaded.frequencies_hz, small_grid.frequencies_hz)
        assert loaded.nbpf_hz == pytest.approx(10e6)
        assert loaded.ramp_period_s == pytest.approx(0.1)

    def test_json_keeps_metadata(self, store, small_grid):
        relative = store.save_grid(small_grid, 'grid', fmt='json')
        loaded = load_grid(store.root / relative)
        np.testing.assert_array_equal(loaded.power_db, small_grid.power_db)
        assert loaded.ramp_period_s == 0.1

    def test_single_row_csv_needs_ramp(self, store):
        grid = PowerGrid(times_s=[0.0], frequencies_hz=[1e9, 1.01e9], power_db=[[0.0, 1.0]],
                         nbpf_hz=10e6, ramp_period_s=0.5)
        relative = store.save_grid(grid, 'grid')
        with pytest.raises(StoreError):
            load_grid(store.root / relative)
        assert load_grid(store.root / relative, ramp_period_s=0.5).ramp_period_s == 0.5

    def test_not_a_grid(self, tmp_path):
        path = tmp_path / 'other.csv'
        path.write_text('a,b\n1,2\n')
        with pytest.raises(StoreError):
            load_grid(path)

    def test_video(self, store):
        series = VideoSeries(times_s=[0.0, 0.5], power_db=[-80.0, -70.5], bandwidth_hz=400e6)
        relative = store.save_video(series, 'sed_video')
        loaded = load_video(store.root / relative, 400e6)
        np.testing.assert_allclose(loaded.power_db, series.power_db)

    def test_video_missing_power_column(self, tmp_path):
        path = tmp_path / 'video.csv'
        path.write_text('time_s,level\n0.0,-10\n')
        with pytest.raises(StoreError, match='power_db'):
            load_video(path, 400e6)

    def test_cut_with_plot_table(self, store, helpers):
        cut = helpers.cut_from(9.6e9, [-3.0, 0.0], times=[0.0, 1.0], angles=[-0.01, 0.01])
        written = store.save_cut(cut, 'cut_9600MHz')
        assert written == ['cut_9600MHz.csv', 'cut_9600MHz_plot.csv']
        header = (store.root / 'cut_9600MHz_plot.csv').read_text().splitlines()[0]
        assert header == 'angle_deg,power_db'


class TestIqFormat:
    """Test the binary I/Q dump."""

    def test_layout(self):
        signal = BasebandSignal(samples=[1 + 2j, -0.5j], sample_rate_hz=1e9, center_frequency_hz=9.6e9,
                                start_time_s=3.5)
        payload = encode_iq(signal)
        assert payload[:4] == b'NSIQ'
        assert len(payload) == IQ_HEADER.size + 4 * 4
        body = np.frombuffer(payload, dtype='<f4', offset=IQ_HEADER.size)
        np.testing.assert_array_equal(body, [1.0, 2.0, 0.0, -0.5])

    def test_read_back(self, store):
        signal = BasebandSignal(samples=np.exp(1j * np.linspace(0, 3, 64)), sample_rate_hz=1e9,
                                center_frequency_hz=9.6e9, start_time_s=3.5)
        relative = store.save_iq(signal, 'snippet.iq')
        loaded = read_iq(store.root / relative)
        assert loaded.start_time_s == 3.5
        assert loaded.center_frequency_hz == 9.6e9
        np.testing.assert_allclose(loaded.samples, signal.samples, atol=1e-6)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / 'bad.iq'
        path.write_bytes(IQ_HEADER.pack(b'XXXX', 1, 1.0, 1.0, 0.0))
        with pytest.raises(StoreError):
            read_iq(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / 'short.iq'
        path.write_bytes(b'NSIQ')
        with pytest.raises(StoreError):
            read_iq(path)


class TestManifest:
    """Test manifest contents."""

    def test_lists_written_files_with_hashes(self, store, small_grid):
        store.save_grid(small_grid, 'seed_1/nsr_grid')
        store.save_json('seed_1/spectrum.json', {'center_frequency_hz': 9.6e9})
        manifest = store.build_manifest('abc', '0.1.0', [1], {'simulate': 0.5})
        store.save_manifest(manifest)

        data = json.loads((store.root / MANIFEST_NAME).read_text())
        assert [f['path'] for f in data['files']] == ['seed_1/nsr_grid.csv', 'seed_1/spectrum.json']
        first = data['files'][0]
        assert first['sha256'] == sha256_file(store.root / first['path'])
        assert first['bytes'] == (store.root / first['path']).stat().st_size
        assert data['seeds'] == [1]
        assert MANIFEST_NAME not in [f['path'] for f in data['files']]

    def test_discard_removes_previous_manifest(self, store):
        store.save_manifest(store.build_manifest('abc', '0.1.0', []))
        assert store.discard_manifest() is True
        assert not (store.root / MANIFEST_NAME).exists()

    def test_discard_without_manifest(self, store):
        assert store.discard_manifest() is False
