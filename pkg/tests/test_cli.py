import csv
import io
import json

import numpy as np
import pytest

from cmfsolver.cli import main, no_rng
from cmfsolver.reports import CSV_COLUMNS, linear_fit

THREE_SPIN = "1.0 ZII\n1.0 IZI\n1.0 IIZ\n1.0 XXI\n1.0 IXX\n0.1 XXX\n"


@pytest.fixture
def files(tmp_path):
    h = tmp_path / "h3.txt"
    h.write_text(THREE_SPIN)
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"preset": "experiment"}))
    return tmp_path, str(h), str(cfg)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_report(files, capsys):
    _, h, cfg = files
    code, out, _ = run(["solve", "--hamiltonian", h, "--config", cfg], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == 1
    assert doc["config"]["first_stage_states"] == 1
    res = doc["results"]
    assert res["basis_dim"] == 4
    assert res["fidelity"] == pytest.approx(0.993, abs=0.002)
    assert sum(res["mz_cmf"].values()) == pytest.approx(1.0)


def test_solve_single_spin(tmp_path, capsys):
    path = tmp_path / "z.txt"
    path.write_text("1 Z\n")
    code, out, _ = run(["solve", "--hamiltonian", str(path)], capsys)
    res = json.loads(out)["results"]
    assert code == 0 and res["fidelity"] == pytest.approx(1.0) and res["energy"] == -1.0


def test_solve_chain8_reports_counts(tmp_path, capsys):
    from cmfsolver.models import chain_hamiltonian
    from cmfsolver.pauli import serialize_hamiltonian
    path = tmp_path / "c8.txt"
    path.write_text(serialize_hamiltonian(chain_hamiltonian(8)))
    code, out, _ = run(["solve", "--hamiltonian", str(path)], capsys)
    res = json.loads(out)["results"]
    assert code == 0
    assert res["diagnostics"] and res["reference_counts_n8"] == {"2": 50, "3": 5, "4": 16}


def test_report_is_deterministic(files, capsys):
    _, h, cfg = files
    docs = []
    for _ in range(2):
        _, out, _ = run(["solve", "--hamiltonian", h, "--config", cfg, "--seedless"], capsys)
        doc = json.loads(out)
        doc.pop("duration_s")
        docs.append(json.dumps(doc, sort_keys=True))
    assert docs[0] == docs[1]


def test_out_file_and_csv_schema(files, capsys):
    tmp, _, _ = files
    target = tmp / "scan.csv"
    code, out, _ = run(["chain-scan", "--n-min", "3", "--n-max", "5", "--out", str(target)],
                       capsys)
    assert code == 0 and out == ""
    rows = list(csv.DictReader(io.StringIO(target.read_text())))
    assert tuple(rows[0]) == CSV_COLUMNS["chain-scan"]
    assert [int(r["n"]) for r in rows] == [3, 4, 5]
    assert all(float(r["fidelity"]) > 0.994 for r in rows)


def test_chain_scan_json_summary(capsys):
    code, out, _ = run(["chain-scan", "--n-min", "3", "--n-max", "6", "--format", "json"], capsys)
    summary = json.loads(out)["results"]["summary"]
    assert code == 0 and summary["fit_e_cmf"]["r2"] > 0.99


def test_threespin_presets(capsys):
    code, out, _ = run(["threespin-scan", "--preset", "g3-sweep"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert [(float(r["g2"]), float(r["g3"])) for r in rows] == [(2, 0.1), (2, 1), (2, 2)]
    code, out, _ = run(["threespin-scan", "--g2", "0.5", "--g3", "0.3", "0.4"], capsys)
    assert len(list(csv.DictReader(io.StringIO(out)))) == 2


def test_truncate(files, capsys):
    _, h, cfg = files
    code, out, _ = run(["truncate", "--hamiltonian", h, "--config", cfg, "--keep", "2", "3", "4"],
                       capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert [int(r["keep"]) for r in rows] == [2, 3, 4]


def test_drag_and_vqe_traces(capsys):
    code, out, _ = run(["drag", "--steps", "50"], capsys)
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 151 and tuple(rows[0]) == CSV_COLUMNS["trace"]
    code, out, _ = run(["vqe", "--format", "json"], capsys)
    summary = json.loads(out)["results"]["summary"]
    assert code == 0 and summary["converged"] and summary["abs_error"] < 1e-6


def test_drag_with_empty_drives_is_flat(tmp_path, capsys):
    h = tmp_path / "ha.txt"
    h.write_text("1 ZI\n1 IZ\n")
    code, out, _ = run(["drag", "--hamiltonian", str(h), "--steps", "10"], capsys)
    energies = [float(r["energy"]) for r in csv.DictReader(io.StringIO(out))]
    assert code == 0
    np.testing.assert_allclose(energies, energies[0], atol=1e-12)


def test_oracle(files, capsys):
    _, h, _ = files
    code, out, _ = run(["oracle", "--hamiltonian", h, "--levels", "2"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["results"]["energies"]) == 2


@pytest.mark.parametrize("argv_extra, content", [
    ([], "1.0 ZZ\n1 Q\n"),
    ([], ""),
    (["--config", "{cfgdir}/bad.json"], THREE_SPIN),
    (["--config", "{cfgdir}/unknown.json"], THREE_SPIN),
    (["--config", "{cfgdir}/missing.json"], THREE_SPIN),
])
def test_input_errors_exit_2(tmp_path, capsys, argv_extra, content):
    (tmp_path / "bad.json").write_text("{not json")
    (tmp_path / "unknown.json").write_text('{"J": 3}')
    h = tmp_path / "h.txt"
    h.write_text(content)
    argv = ["solve", "--hamiltonian", str(h)] + [a.format(cfgdir=tmp_path) for a in argv_extra]
    code, _, err = run(argv, capsys)
    assert code == 2 and err.startswith("error:")


def test_missing_hamiltonian_file_exit_2(capsys):
    assert run(["solve", "--hamiltonian", "/nonexistent/h.txt"], capsys)[0] == 2


def test_bad_keep_exit_2(capsys):
    assert run(["truncate", "--keep", "9"], capsys)[0] == 2


def test_numeric_failure_exit_3(files, capsys):
    tmp, h, _ = files
    cfg = tmp / "big.json"
    cfg.write_text(json.dumps({"preset": "three_spin", "states_per_cluster": 4}))
    code, _, err = run(["solve", "--hamiltonian", h, "--config", str(cfg)], capsys)
    assert code == 3 and "partition" in err


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--format", "xml"])
    assert exc.value.code == 2


def test_no_rng_guard():
    with no_rng():
        with pytest.raises(AssertionError):
            np.random.default_rng(0)
    np.random.default_rng(0)


def test_linear_fit_exact_line():
    fit = linear_fit([1, 2, 3], [3, 5, 7])
    assert fit["slope"] == pytest.approx(2) and fit["intercept"] == pytest.approx(1)
    assert fit["r2"] == pytest.approx(1.0)
