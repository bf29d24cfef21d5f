"""The command-line interface: reports, determinism, exit codes."""

import json
from pathlib import Path

from logmonoid.cli import main

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_monoid_analyze_m_even(capsys):
    code, out, _ = run(capsys, "--format", "json", "monoid-analyze", DATA / "m_even.json")
    assert code == 0
    report = json.loads(out)
    assert len(report["faces"]) == 4
    assert len(report["facets"]) == 2
    assert report["semi_saturated"] is True
    assert report["saturated"] is True
    assert report["sharp"] is True
    # ambient coordinates survive the round trip
    assert [g["ambient"] for g in report["generators"]] == [[2, 0], [1, 1], [0, 2]]


def test_monoid_analyze_nm1(capsys):
    code, out, _ = run(capsys, "--format", "json", "monoid-analyze", DATA / "nm1.json")
    assert code == 0
    report = json.loads(out)
    assert report["semi_saturated"] is True
    assert report["saturated"] is False


def test_monoid_analyze_torsion(capsys):
    code, out, _ = run(capsys, "--format", "json", "monoid-analyze", DATA / "torsion.json")
    assert code == 0
    report = json.loads(out)
    assert report["semi_saturated"] is False
    assert report["gp"]["torsion"] == [2]


def test_reports_are_byte_stable(capsys):
    runs = []
    for _ in range(2):
        code, out, _ = run(
            capsys, "--format", "json", "connection", "shear", DATA / "rank2_connection.json"
        )
        assert code == 0
        runs.append(out)
    assert runs[0] == runs[1]


def test_connection_exponents(capsys):
    code, out, _ = run(
        capsys, "--format", "json", "connection", "exponents", DATA / "rank2_connection.json"
    )
    assert code == 0
    report = json.loads(out)
    assert report["integrable"] is True
    assert sorted(report["exponents"]) == [["0"], ["1/2"]]


def test_connection_shear_report(capsys):
    code, out, _ = run(
        capsys, "--format", "json", "connection", "shear", DATA / "rank2_connection.json"
    )
    assert code == 0
    report = json.loads(out)
    assert report["bound_violations"] == 0
    assert report["constant_model"] == [[["0", "0"], ["0", "1/2"]]]


def test_connection_unipotent_all_faces(capsys):
    code, out, _ = run(
        capsys, "--format", "json", "connection", "unipotent",
        DATA / "vertex_counterexample.json", "--sigma", DATA / "sigma_zero.json", "--all-faces",
    )
    assert code == 0
    report = json.loads(out)
    verdicts = {tuple(row["face"]): row["verdict"] for row in report["faces"]}
    assert verdicts[()] is False
    assert verdicts[(0,)] is True
    assert verdicts[(2,)] is True
    assert report["all_unipotent"] is False


def test_connection_unipotent_single_face(capsys):
    code, out, _ = run(
        capsys, "--format", "json", "connection", "unipotent",
        DATA / "vertex_counterexample.json", "--sigma", DATA / "sigma_zero.json", "--face", "0",
    )
    assert code == 0
    report = json.loads(out)
    assert len(report["faces"]) == 1


def test_connection_homotopy(capsys):
    code, out, _ = run(
        capsys, "--format", "json", "connection", "homotopy",
        DATA / "n2_sigma_pair_connection.json", "--sigma", DATA / "sigma_pair.json",
    )
    assert code == 0
    assert json.loads(out)["residuals_zero"] is True


def test_connection_logconv(capsys):
    code, out, _ = run(
        capsys, "--format", "json", "connection", "logconv",
        DATA / "rank2_connection.json", "--depth", "5",
    )
    assert code == 0
    assert json.loads(out)["log_convergent"] is True


def test_exit_code_parse_error(capsys, tmp_path):
    code, _, err = run(capsys, "monoid-analyze", tmp_path / "missing.json")
    assert code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "monoid-analyze", bad)
    assert code == 2


def test_exit_code_hypothesis_violation(capsys, tmp_path):
    doc = {
        "monoid": {"generators": 1, "relations": []},
        "embedding": [[1]],
        "rank": 2,
        "truncation": 6,
        "matrices": [
            {"i": 0, "terms": [
                {"m": {"free": [0]}, "entries": [["0", "0"], ["0", "1"]]},
                {"m": {"free": [1]}, "entries": [["0", "1"], ["0", "0"]]},
            ]}
        ],
    }
    path = tmp_path / "bad_exponents.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "connection", "shear", path)
    assert code == 4
    assert "NI" in err


def test_exit_code_budget(capsys, tmp_path):
    # a wide free monoid at a large weight bound trips the enumeration budget
    doc = {"generators": 1, "relations": []}
    path = tmp_path / "n.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "--weight-bound", "3", "monoid-analyze", path)
    assert code == 0  # sane run stays fine


def test_text_format_renders(capsys):
    code, out, _ = run(capsys, "monoid-analyze", DATA / "m_even.json")
    assert code == 0
    assert "semi_saturated: True" in out


def test_selftest_passes(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0
    assert "FAIL" not in out


def test_selftest_prime_7(capsys):
    code, out, _ = run(capsys, "--prime", "7", "selftest")
    assert code == 0


def test_selftest_detects_corruption():
    from logmonoid import selftest

    results = selftest.run(5, corrupt=True)
    assert any(not ok for _, ok, _ in results)
