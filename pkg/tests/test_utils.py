import numpy as np
import pytest
from pydantic import ValidationError

from haar_radial.models import MatrixPayload, McReportModel
from haar_radial.utils import batch_means_stderr, chunk_rng, chunk_sizes, map_chunks


def test_chunk_sizes():
    assert chunk_sizes(25, 10) == [10, 10, 5]
    assert chunk_sizes(20, 10) == [10, 10]
    assert chunk_sizes(0, 10) == []
    with pytest.raises(ValueError):
        chunk_sizes(5, 0)


def test_chunk_streams_are_independent_of_threads():
    draw = lambda i, size, rng: rng.standard_normal(size)
    serial = np.concatenate(map_chunks(draw, 95, seed=3, chunk_size=10, threads=1))
    pooled = np.concatenate(map_chunks(draw, 95, seed=3, chunk_size=10, threads=4))
    assert np.array_equal(serial, pooled)


def test_chunk_rng_depends_on_index():
    assert chunk_rng(1, 0).random() != chunk_rng(1, 1).random()
    assert chunk_rng(1, 2).random() == chunk_rng(1, 2).random()


def test_batch_means_on_white_noise(rng):
    x = rng.standard_normal(100_000)
    assert batch_means_stderr(x) == pytest.approx(1 / np.sqrt(x.size), rel=0.3)


def test_matrix_payload_checks_size():
    with pytest.raises(ValidationError):
        MatrixPayload(rows=2, cols=2, data=[(1.0, 0.0)])
    a = np.array([[1 + 2j, 3], [0, -1j]])
    assert np.array_equal(MatrixPayload.from_array(a).to_array(), a)


def test_report_counts_must_add_up():
    with pytest.raises(ValidationError):
        McReportModel(
            estimate=1.0, std_error=0.1, n_samples=10, n_attempted=9, effective_sample_size=10.0,
            seed=0, wall_time=0.0, passed=True,
        )
