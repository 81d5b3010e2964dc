from __future__ import annotations

import json
from importlib import resources

import pytest

from vocalc import cli, dataio
from vocalc.errors import InvariantViolation, SchemaError, UnknownSuite
from vocalc.graded import GradedMap1n
from vocalc.moduli import ModuliElement
from vocalc.voc import VocData, trivial_voc

DATA = resources.files("vocalc") / "data"


def fixture(name):
    return str(DATA / name)


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_loads_each_type():
    assert isinstance(dataio.validate_and_load(fixture("trivial_voc.json")), VocData)
    assert isinstance(dataio.validate_and_load(fixture("moduli_k2.json")), ModuliElement)
    assert isinstance(dataio.validate_and_load(fixture("graded_map.json")), GradedMap1n)


def test_trivial_file_is_the_trivial_voc():
    V = dataio.validate_and_load(fixture("trivial_voc.json"))
    T = trivial_voc()
    assert (V.delta, V.c, V.rho, V.rank_d) == (T.delta, T.c, T.rho, T.rank_d)


def test_voc_dump_roundtrip(tmp_path):
    V = dataio.validate_and_load(fixture("group_like_voc.json"))
    p = tmp_path / "v.json"
    p.write_text(json.dumps(dataio.dump_voc(V)))
    W = dataio.validate_and_load(p)
    assert W.delta == V.delta and W.c == V.c


def test_weight_law_violation_names_the_law():
    with pytest.raises(InvariantViolation, match="weight law"):
        dataio.validate_and_load(fixture("weight_law_violation.json"))


def test_duplicate_positions_rejected():
    with pytest.raises(InvariantViolation, match="distinct"):
        dataio.validate_and_load(fixture("duplicate_positions.json"))


def test_json_syntax_error_has_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "type": "voc",\n  "space": oops\n}\n')
    with pytest.raises(SchemaError, match="line 3"):
        dataio.validate_and_load(p)


def test_schema_error_names_field(tmp_path):
    doc = json.loads((DATA / "trivial_voc.json").read_text())
    doc["delta"][0][5] = "one half"
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(SchemaError, match="delta/0/5"):
        dataio.validate_and_load(p)


def test_rationals_parsed_exactly(tmp_path):
    doc = json.loads((DATA / "trivial_voc.json").read_text())
    doc["c"][0][2] = "1/3"
    p = tmp_path / "v.json"
    p.write_text(json.dumps(doc))
    V = dataio.validate_and_load(p)
    assert V.c[(0, 0)].denominator == 3


def test_basis_outside_space(tmp_path):
    doc = json.loads((DATA / "trivial_voc.json").read_text())
    doc["c"].append([0, 5, "1"])
    p = tmp_path / "v.json"
    p.write_text(json.dumps(doc))
    with pytest.raises(InvariantViolation, match="outside"):
        dataio.validate_and_load(p)


def test_delta_suite_at_order_ten(capsys):
    code, out, _ = run(["--suite", "delta", "--order", "10"], capsys)
    assert code == 0
    assert "delta/laws/radius-10" in out


def test_voc_axioms_on_trivial_file(capsys):
    code, out, _ = run(["--suite", "voc-axioms", "--input", fixture("trivial_voc.json")], capsys)
    assert code == 0
    assert "7 pass" in out


def test_mutated_file_fails_with_witness(capsys):
    code, out, _ = run(["--suite", "voc-axioms", "--input", fixture("mutated_voc.json")], capsys)
    assert code == 1
    assert "FAIL" in out and "witness" in out


def test_witness_replays_under_single_check(capsys):
    code, out, _ = run(["--suite", "voc-axioms", "--input", fixture("mutated_voc.json"), "--report", "machine"], capsys)
    failed = [c for c in json.loads(out)["checks"] if c["status"] == "fail"]
    assert failed
    for c in failed:
        code, out, _ = run(["--check", c["id"], "--input", fixture("mutated_voc.json"), "--report", "machine"], capsys)
        again = json.loads(out)["checks"]
        assert code == 1
        assert again == [c]


def test_machine_report_is_deterministic(capsys):
    args = ["--suite", "contraction-laws", "--report", "machine"]
    _, a, _ = run(args, capsys)
    _, b, _ = run(args, capsys)
    assert a == b
    assert "wall" not in a


def test_input_errors_exit_3(capsys):
    code, _, err = run(["--suite", "voc-axioms", "--input", fixture("weight_law_violation.json")], capsys)
    assert code == 3 and "InvariantViolation" in err
    code, _, err = run(["--suite", "bch", "--input", fixture("trivial_voc.json")], capsys)
    assert code == 3 and "does not take" in err
    code, _, err = run(["--suite", "nonsense"], capsys)
    assert code == 3 and "UnknownSuite" in err


def test_unknown_check_id():
    with pytest.raises(UnknownSuite):
        cli.run_suite(cli.SuiteConfig(check="delta/no-such-check"))


def test_config_invariants():
    with pytest.raises(ValueError):
        cli.SuiteConfig(order=1)
    with pytest.raises(ValueError):
        cli.SuiteConfig(degree=0)


def test_window_limited_exit_code():
    rep = cli.Report("x", 8, 3, [{"id": "a", "status": "pass", "detail": {}}, {"id": "b", "status": "window-limited", "detail": {}}])
    assert rep.exit_code == 2
    rep.checks.append({"id": "c", "status": "fail", "detail": {"witness": {}}})
    assert rep.exit_code == 1


def test_moduli_and_graded_inputs(capsys):
    code, out, _ = run(["--suite", "moduli-laws", "--input", fixture("moduli_k2.json")], capsys)
    assert code == 0 and "moduli-laws/input/permutation" in out
    code, out, _ = run(["--suite", "contraction-laws", "--input", fixture("graded_map.json")], capsys)
    assert code == 0
