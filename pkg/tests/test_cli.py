import json
from math import log, pi

import pytest

from haar_radial import __version__
from haar_radial.main import EXIT_IO, main
from haar_radial.models import SpectralRecord
from haar_radial.services.spectral import SpectralData


def run_cli(capsys, *argv: str) -> tuple[int, str]:
    code = main(list(argv))
    return code, capsys.readouterr().out


def write_records(path, *records: SpectralData) -> str:
    path.write_text("".join(SpectralRecord.from_spectral(sd).model_dump_json() + "\n" for sd in records))
    return str(path)


def _body(csv_text: str) -> list[str]:
    return [line for line in csv_text.splitlines() if not line.startswith("#")]


# =============================================
# SAMPLE
# =============================================
def test_seeded_sample_is_byte_identical(capsys):
    _, first = run_cli(capsys, "sample", "--k", "4", "--samples", "10", "--seed", "7")
    _, second = run_cli(capsys, "sample", "--k", "4", "--samples", "10", "--seed", "7")
    assert first == second
    doc = json.loads(first)
    assert doc["seed"] == 7 and len(doc["payload"]["matrices"]) == 10


def test_seed_output_ignores_threads(capsys):
    _, one = run_cli(capsys, "sample", "--n", "2", "--m", "1", "--extract", "--samples", "5", "--format", "csv")
    _, many = run_cli(
        capsys, "sample", "--n", "2", "--m", "1", "--extract", "--samples", "5", "--format", "csv", "--threads", "4"
    )
    assert one != many  # the config line records --threads
    assert _body(one) == _body(many)


def test_zero_block_size_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["sample", "--n", "1", "--m", "0", "--extract"])
    assert exc.value.code == 2


def test_extract_without_sizes_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["sample", "--extract", "--k", "3"])
    assert exc.value.code == 2


@pytest.mark.parametrize("path", ["direct", "cayley"])
def test_extract_gives_requested_count(capsys, path):
    code, out = run_cli(capsys, "sample", "--n", "2", "--m", "2", "--extract", "--samples", "100", "--path", path)
    payload = json.loads(out)["payload"]
    assert code == 0
    assert len(payload["records"]) == 100
    assert payload["n_attempted"] == 100 + sum(payload["rejected_by_reason"].values())


def test_csv_header_for_extracted_samples(capsys):
    _, out = run_cli(capsys, "sample", "--n", "2", "--m", "1", "--extract", "--samples", "3", "--format", "csv")
    lines = _body(out)
    assert lines[0] == "arg_1,c1_1,c1_2_re,c1_2_im,u11_re,u11_im,u12_re,u12_im,u21_re,u21_im,u22_re,u22_im"
    assert len(lines) == 4


def test_csv_carries_artifact_envelope(capsys):
    _, out = run_cli(
        capsys, "sample", "--n", "2", "--m", "1", "--extract", "--samples", "3", "--format", "csv", "--seed", "11"
    )
    preamble = dict(line[2:].split(": ", 1) for line in out.splitlines()[:4])
    assert preamble["version"] == __version__
    assert preamble["command"] == "sample"
    assert preamble["seed"] == "11"
    config = json.loads(preamble["config"])
    assert config["args"]["seed"] == 11 and config["args"]["format"] == "csv"
    assert "tol_unitarity" in config["settings"]


def test_density_reads_csv_with_envelope(capsys, tmp_path):
    path = tmp_path / "samples.csv"
    argv = ["sample", "--n", "1", "--m", "2", "--extract", "--samples", "3", "--format", "csv", "--out", str(path)]
    assert main(argv) == 0
    code, out = run_cli(capsys, "density", str(path))
    rows = json.loads(out)["payload"]["records"]
    assert code == 0
    # four envelope lines and the header come first
    assert [r["line"] for r in rows] == [6, 7, 8]
    assert all(r["error"] is None for r in rows)


# =============================================
# DENSITY
# =============================================
def test_density_of_worked_record(capsys, tmp_path):
    path = write_records(tmp_path / "worked.jsonl", SpectralData(t=[1j], C=[[1.0]], U=[[1.0]]))
    code, out = run_cli(capsys, "density", path)
    (row,) = json.loads(out)["payload"]["records"]
    assert code == 0
    assert row["line"] == 1 and row["error"] is None
    assert row["log_density"] == pytest.approx(log(2 / (25 * pi)), abs=1e-12)


def test_density_marks_domain_errors(capsys, tmp_path):
    path = write_records(
        tmp_path / "mixed.jsonl",
        SpectralData(t=[-1.0], C=[[1.0]], U=[[1.0]]),
        SpectralData(t=[1j], C=[[1.0]], U=[[1.0]]),
    )
    code, out = run_cli(capsys, "density", path)
    rows = json.loads(out)["payload"]["records"]
    assert code == 0
    assert rows[0]["log_density"] is None and rows[0]["error"].startswith("DomainError")
    assert rows[1]["error"] is None


def test_density_reads_sample_artifact(capsys, tmp_path):
    artifact = tmp_path / "samples.json"
    assert main(["sample", "--n", "1", "--m", "2", "--extract", "--samples", "4", "--out", str(artifact)]) == 0
    code, out = run_cli(capsys, "density", str(artifact))
    rows = json.loads(out)["payload"]["records"]
    assert code == 0
    assert [r["line"] for r in rows] == [1, 2, 3, 4]
    assert all(r["error"] is None for r in rows)


def test_density_of_empty_input(capsys, tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    code, out = run_cli(capsys, "density", str(path))
    assert code == 0
    assert json.loads(out)["payload"]["records"] == []


def test_density_of_missing_input(tmp_path):
    assert main(["density", str(tmp_path / "nope.jsonl")]) == EXIT_IO


def test_density_of_malformed_input(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("{broken\n")
    assert main(["density", str(path)]) == EXIT_IO


# =============================================
# VERIFY
# =============================================
def test_verify_roundtrip_exit_codes(capsys):
    code, out = run_cli(capsys, "verify", "roundtrip", "--n", "1", "--m", "1", "--samples", "100")
    assert code == 0
    assert json.loads(out)["command"] == "verify roundtrip"
    code, _ = run_cli(capsys, "verify", "roundtrip", "--n", "2", "--m", "2", "--samples", "100", "--perturb", "1e-3")
    assert code == 1


def test_verify_records_resolved_settings(capsys):
    _, out = run_cli(capsys, "verify", "haar-moment", "--k", "2", "--samples", "2000", "--tol-unitarity", "1e-9")
    config = json.loads(out)["config"]
    assert config["settings"]["tol_unitarity"] == 1e-9
    assert config["args"]["suite"] == "haar-moment"


def test_staged_rejects_large_k():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "staged", "--k", "3", "--samples", "10"])
    assert exc.value.code == 2


def test_verify_accepts_json_format_only(capsys):
    code, out = run_cli(capsys, "verify", "haar-moment", "--k", "2", "--samples", "500", "--format", "json")
    assert json.loads(out)["config"]["args"]["format"] == "json"
    with pytest.raises(SystemExit) as exc:
        main(["verify", "haar-moment", "--format", "csv"])
    assert exc.value.code == 2
