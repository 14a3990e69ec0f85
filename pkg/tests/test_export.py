import numpy as np
import pytest

from haar_radial.errors import DegenerateSampleError, RecordParseError
from haar_radial.models import SpectralRecord
from haar_radial.services.export import (
    read_spectral_records,
    spectral_header,
    spectral_row,
    write_csv,
)
from haar_radial.services.spectral import extract_direct, spectral_distance


def test_csv_column_order():
    assert spectral_header(2, 2) == [
        "arg_1", "arg_2",
        "c1_1", "c1_2_re", "c1_2_im",
        "c2_1", "c2_2_re", "c2_2_im",
        "u11_re", "u11_im", "u12_re", "u12_im", "u21_re", "u21_im", "u22_re", "u22_im",
    ]


def test_csv_read_back(haar_block, tmp_path):
    records = []
    while len(records) < 3:
        try:
            records.append(extract_direct(haar_block(2, 2), strict_u=True))
        except DegenerateSampleError:
            continue
    path = tmp_path / "records.csv"
    write_csv(str(path), spectral_header(2, 2), (spectral_row(sd) for sd in records))
    parsed = read_spectral_records(path)
    assert [line for line, _ in parsed] == [2, 3, 4]
    for (_, got), want in zip(parsed, records):
        assert spectral_distance(got, want) <= 1e-12


def test_csv_preamble_is_skipped(haar_block, tmp_path):
    sd = None
    while sd is None:
        try:
            sd = extract_direct(haar_block(1, 1), strict_u=True)
        except DegenerateSampleError:
            continue
    path = tmp_path / "records.csv"
    write_csv(str(path), spectral_header(1, 1), [spectral_row(sd)], preamble=["version: 0", "seed: 3"])
    assert path.read_text().startswith("# version: 0\n# seed: 3\n")
    ((line, got),) = read_spectral_records(path)
    assert line == 4
    assert spectral_distance(got, sd) <= 1e-12


def test_csv_bad_value_line_counts_preamble(tmp_path):
    path = tmp_path / "records.csv"
    header = ",".join(spectral_header(1, 1))
    path.write_text(f"# seed: 1\n{header}\n1.0,1.0,1.0,0.0\n2.0,oops,1.0,0.0\n")
    with pytest.raises(RecordParseError) as err:
        read_spectral_records(path)
    assert err.value.line == 4


def test_json_lines_with_bad_line(tmp_path):
    good = SpectralRecord(n=1, m=1, t=[(0.0, 1.0)], C={"rows": 1, "cols": 1, "data": [(1.0, 0.0)]},
                          U={"rows": 1, "cols": 1, "data": [(1.0, 0.0)]})
    path = tmp_path / "records.jsonl"
    path.write_text(good.model_dump_json() + "\n\n{not json}\n")
    with pytest.raises(RecordParseError) as err:
        read_spectral_records(path)
    assert err.value.line == 3


def test_json_lines_shape_error(tmp_path):
    path = tmp_path / "records.jsonl"
    path.write_text('{"n": 1, "m": 2, "t": [[0, 1]], "C": {"rows": 1, "cols": 1, "data": [[1, 0]]},'
                    ' "U": {"rows": 1, "cols": 1, "data": [[1, 0]]}}\n')
    with pytest.raises(RecordParseError) as err:
        read_spectral_records(path)
    assert err.value.line == 1


def test_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert read_spectral_records(path) == []


def test_bad_csv_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(RecordParseError):
        read_spectral_records(path)


def test_record_keeps_raw_coordinates():
    record = SpectralRecord(n=1, m=1, t=[(-1.0, 0.0)], C={"rows": 1, "cols": 1, "data": [(1.0, 0.0)]},
                            U={"rows": 1, "cols": 1, "data": [(1.0, 0.0)]})
    assert np.allclose(record.to_spectral().t, [-1.0])
