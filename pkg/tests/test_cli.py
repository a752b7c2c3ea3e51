import json
from pathlib import Path

import pytest

from kmroth.cli import main
from kmroth.serialize import canonical_dumps


def _write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


@pytest.fixture
def a_z5(tmp_path):
    return _write(tmp_path, "a.json", {"group": "Z5", "elements": [[0], [1], [3]]})


def test_count_aps_golden(a_z5, capsys):
    assert main(["count-aps", "--set", a_z5]) == 0
    assert capsys.readouterr().out.strip() == "5"


def test_count_aps_json_reproducible(a_z5, capsys):
    assert main(["count-aps", "--set", a_z5, "--json"]) == 0
    out1 = capsys.readouterr().out
    assert main(["count-aps", "--set", a_z5, "--json"]) == 0
    out2 = capsys.readouterr().out
    assert out1 == out2
    obj = json.loads(out1)
    assert obj["schema_version"] == 1
    assert obj["results"]["count"] == 5
    assert "constants" in obj and "inputs_digest" in obj


def test_behrend_roundtrip(tmp_path, capsys):
    out = tmp_path / "b.json"
    assert main(["behrend", "--n", "100", "--strategy", "ternary", "--verify",
                 "--out", str(out), "--json"]) == 0
    env = json.loads(capsys.readouterr().out)
    assert env["results"]["size"] == 24
    saved = json.loads(out.read_text())
    assert saved["n"] == 100 and len(saved["elements"]) == 24

    # feeding the file back: roth-znz accepts it
    assert main(["roth-znz", "--set", str(out), "--eps", "0.25", "--json"]) == 0
    env2 = json.loads(capsys.readouterr().out)
    assert env2["results"]["kind"] == "znz"


def test_behrend_invalid_n(capsys):
    assert main(["behrend", "--n", "0"]) == 2


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_missing_file_exit_2(capsys):
    assert main(["count-aps", "--set", "/nonexistent.json"]) == 2


def test_bohr_info_and_extract(tmp_path, capsys):
    b = _write(tmp_path, "b.json", {"group": "Z101", "freqs": [[1]], "widths": [0.5]})
    assert main(["bohr", "info", "--bohr", b, "--json"]) == 0
    env = json.loads(capsys.readouterr().out)
    assert env["results"]["size"] == 17
    assert env["results"]["regularity"] == "certified-regular"
    assert main(["bohr", "extract-ap", "--bohr", b, "--json"]) == 0
    env = json.loads(capsys.readouterr().out)
    assert env["results"]["ap"]["length"] == 17


def test_increment_cli(tmp_path, capsys):
    a = _write(tmp_path, "a.json", {
        "group": "Z3^2",
        "elements": [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [1, 2]]})
    assert main(["increment", "--set", a, "--eps", "0.125", "--codim-max", "4",
                 "--seed", "1", "--json"]) == 0
    env = json.loads(capsys.readouterr().out)
    assert env["results"]["outcome"] == "increment"
    assert env["results"]["new_density"] == 1.0
    assert env["seed"] == 1


def test_sift_cli(tmp_path, capsys):
    a = _write(tmp_path, "a.json", {"group": "Z7", "elements": [[0], [1], [2]]})
    assert main(["sift", "--set", a, "--p", "2", "--eps", "0.25", "--delta",
                 "0.25", "--trials", "10000", "--seed", "42", "--json"]) == 0
    env = json.loads(capsys.readouterr().out)
    assert env["results"]["outcome"] == "ok"
    assert env["results"]["inner_on_S"] >= 0.75


def test_roth_ffq_cli_with_trace(tmp_path, capsys):
    a = _write(tmp_path, "a.json", {
        "group": "Z3^2", "elements": [[0, 0], [0, 1], [1, 0], [1, 1]]})
    trace_path = tmp_path / "trace.json"
    assert main(["roth-ffq", "--set", a, "--eps", "0.25", "--trace",
                 str(trace_path), "--json"]) == 0
    env = json.loads(capsys.readouterr().out)
    on_disk = json.loads(trace_path.read_text())
    assert env["results"] == on_disk
    assert on_disk["terminal"]["kind"] in ("near-uniform", "budget-exceeded")


def test_three_sum_cli(tmp_path, capsys):
    s = _write(tmp_path, "s.json", {"n": 101, "elements": list(range(1, 102))})
    assert main(["three-sum", "--n", "101", "--set", s, "--json"]) == 0
    env = json.loads(capsys.readouterr().out)
    assert env["results"]["verified"] is True


def test_verify_cli(capsys):
    assert main(["verify", "bohrsiz", "--instances", "10", "--seed", "7",
                 "--json"]) == 0
    env = json.loads(capsys.readouterr().out)
    assert env["results"]["failures"] == []
    # deterministic re-run
    assert main(["verify", "bohrsiz", "--instances", "10", "--seed", "7",
                 "--json"]) == 0
    env2 = json.loads(capsys.readouterr().out)
    assert env == env2


def test_verify_failure_exit_code(capsys, monkeypatch):
    import kmroth.cli as cli_mod
    from kmroth.constants import Constants

    monkeypatch.setattr(cli_mod, "load_constants",
                        lambda: Constants(k_regconv=1e-9))
    assert main(["verify", "regconv", "--instances", "5", "--seed", "3"]) == 1


def test_dump_spectrum(tmp_path, a_z5, capsys):
    spath = tmp_path / "spec.json"
    assert main(["count-aps", "--set", a_z5, "--dump-spectrum", str(spath)]) == 0
    rows = json.loads(spath.read_text())
    assert len(rows) == 5 and rows[0][0] == [0]


def test_size_cap_env(tmp_path, capsys, monkeypatch):
    big = _write(tmp_path, "big.json", {"group": "Z3001", "elements": [[5]]})
    monkeypatch.setenv("KM_SIZE_CAP", "1000")
    assert main(["count-aps", "--set", big]) == 2
