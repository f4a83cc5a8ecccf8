import json

import pytest

from nilfill.cli import auto_strategy, fit_slope, resolve_presentation, run


def out_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_algebra_show_and_validate(capsys):
    assert run(["algebra", "validate", "model_filiform", "5"]) == 0
    capsys.readouterr()
    assert run(["algebra", "show", "l55"]) == 0
    data = out_json(capsys)
    assert data["schema"] == "nilfill/1"


def test_unknown_algebra_is_usage_error(capsys):
    assert run(["algebra", "show", "nothing"]) == 2


def test_bch_with_dynkin_check(capsys):
    assert run(["bch", "--algebra", "model_filiform", "--params", "4", "--x", "1,0,0,0", "--y", "0,1,0,0",
                "--check"]) == 0


def test_fill_and_verify_roundtrip(tmp_path, capsys):
    cert = tmp_path / "c.json"
    assert run(["fill", "--presentation", "H3", "--word", "comm(x1^3,x2^2) x3^-6", "--emit", str(cert)]) == 0
    data = out_json(capsys)
    assert data["area"] == 27 and data["verified"]
    assert run(["verify", "--cert", str(cert)]) == 0
    assert out_json(capsys)["area"] == 27


def test_verify_rejects_tampered_area(tmp_path, capsys):
    cert = tmp_path / "c.json"
    run(["fill", "--presentation", "H3", "--word", "comm(x1,x2) x3^-1", "--emit", str(cert)])
    capsys.readouterr()
    data = json.loads(cert.read_text())
    data["area"] += 1
    cert.write_text(json.dumps(data))
    assert run(["verify", "--cert", str(cert)]) == 1
    assert out_json(capsys)["verified"] is False


def test_verify_missing_file(tmp_path):
    assert run(["verify", "--cert", str(tmp_path / "none.json")]) == 2


def test_fill_rejects_non_null_word(capsys):
    assert run(["fill", "--presentation", "H3", "--word", "x1"]) == 2


def test_oracle(capsys):
    assert run(["oracle", "--presentation", "H3", "--word", "comm(x1,x2) x3^-1"]) == 0
    assert out_json(capsys)["min_area"] == 1


def test_lower_winding(tmp_path, capsys):
    ext = tmp_path / "e.json"
    ext.write_text(json.dumps({"presentation": "L55xL32", "cocycle": [[2, 3, 1]]}))
    assert run(["lower", "winding", "--extension", str(ext), "--word", "comm(x2^4,x3^4)"]) == 0
    assert "16" in capsys.readouterr().out


def test_lower_beta_csv_header(tmp_path):
    out = tmp_path / "b.csv"
    assert run(["lower", "beta", "--p", "4", "--ell", "1,2", "--group", "L4xL3", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# nilfill/1")


def test_catalog_list(capsys):
    assert run(["catalog", "list"]) == 0
    assert "model_filiform" in capsys.readouterr().out


def test_cohomology_betti_single(capsys):
    assert run(["cohomology", "betti", "--name", "L55xL32"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "# nilfill/1 betti"
    assert lines[2] == "L55xL32,1 5 10 11 11 10 5 1,1 5 11 15 15 11 5 1"


@pytest.mark.parametrize("family,group,sizes", [("heisenberg", "L32xL32", "2,4"), ("witness", "L4xL3", "1,2"),
                                                ("commutator", "L55xL32", "2,4"), ("random", "L55xL32", "8,16")])
def test_experiment_is_deterministic(tmp_path, family, group, sizes):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["experiment", "dehn", "--group", group, "--family", family, "--sizes", sizes, "--seed", "7"]
    assert run(argv + ["--out", str(a)]) == 0
    assert run(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("# nilfill/1")


def test_present_verify(capsys):
    assert run(["present", "verify", "P5", "--random", "5"]) == 0


def test_auto_strategy():
    assert auto_strategy(resolve_presentation("L55xL32")) == "l55h3"
    assert auto_strategy(resolve_presentation("L55xL43")) == "l55l43"
    assert auto_strategy(resolve_presentation("L55xL55")) == "l55l55"
    assert auto_strategy(resolve_presentation("H3")) == "heisenberg"
    assert auto_strategy(resolve_presentation("P5")) == "collect"


def test_fit_slope_drops_smallest_size():
    assert fit_slope([1, 2, 4, 8], [5, 4, 16, 64]) == pytest.approx(2.0)
