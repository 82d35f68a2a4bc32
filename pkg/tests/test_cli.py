import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from ddequiv import report
from ddequiv.circuit import Circuit, random_circuit
from ddequiv.cli import format_amplitude, instance_seed, main
from ddequiv.qasm import emit, parse_file

DATA = Path(__file__).parent / "data"
G, GP, GT = (str(DATA / f) for f in ("g.qasm", "gprime.qasm", "gtilde.qasm"))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("strategy", ["reference", "naive", "proportional", "lookahead"])
def test_check_equivalent(capsys, strategy):
    code, out, _ = run(capsys, "check", G, GP, "--strategy", strategy)
    assert code == report.EXIT_EQUIVALENT == 0
    assert "equivalent" in out


def test_check_same_file_no_sims(capsys):
    code, _, _ = run(capsys, "check", G, G, "--sims", "0", "--strategy", "reference")
    assert code == 0


def test_check_not_equivalent_dumps_states(capsys):
    code, out, _ = run(capsys, "check", G, GT)
    assert code == report.EXIT_NOT_EQUIVALENT == 1
    assert "counterexample: |" in out and "output of gtilde.qasm" in out
    code, out, _ = run(capsys, "check", G, GT, "--sims", "0")
    assert code == 1
    assert "counterexample: |100> fidelity 0.853553" in out
    assert "010: 0.70710678" in out and "110: 0.70710678" in out
    assert "output of gtilde.qasm" in out


def test_check_timeout_probably_equivalent(capsys):
    code, out, _ = run(capsys, "check", G, GP, "--timeout", "0")
    assert code == report.EXIT_PROBABLY_EQUIVALENT == 2
    assert "probably" in out


def test_check_json_validates(capsys):
    schema = report.load_schema()
    for other, verdict in ((GP, "equivalent"), (GT, "not_equivalent")):
        code, out, _ = run(capsys, "check", G, other, "--json", "--sims", "0")
        rep = json.loads(out)
        jsonschema.validate(rep, schema)
        assert rep["verdict"] == verdict
        assert list(rep) == ["benchmark", "n", "gates_g", "gates_g2", "verdict", "phase",
                             "counterexample", "num_sims", "t_sim", "t_ec", "t_total",
                             "max_nodes", "avg_nodes", "strategy", "seed", "timed_out"]
        assert rep["t_total"] >= rep["t_sim"]
    assert rep["counterexample"]["indices"] == [4]
    assert abs(rep["counterexample"]["fidelity"] - 0.8536) < 1e-3


def test_check_json_byte_identical(capsys):
    outs = set()
    for _ in range(3):
        code, out, _ = run(capsys, "check", G, GT, "--json", "--no-timings", "--seed", "5")
        outs.add(out)
    assert len(outs) == 1
    rep = json.loads(outs.pop())
    assert rep["t_sim"] is None and rep["t_total"] is None


def test_check_json_global_phase(capsys, tmp_path):
    c = parse_file(G)
    from ddequiv.circuit import Gate
    p = tmp_path / "phase.qasm"
    p.write_text(emit(c.with_gates(c.gates + tuple(Gate(k, (0,)) for k in "xzxz"))))
    code, out, _ = run(capsys, "check", G, str(p), "--json", "--sims", "0")
    rep = json.loads(out)
    jsonschema.validate(rep, report.load_schema())
    assert code == 0
    assert rep["verdict"] == "equivalent_up_to_global_phase"
    assert abs(rep["phase"] - 3.141592653589793) < 1e-9


def test_check_missing_file(capsys):
    code, _, err = run(capsys, "check", G, "/nonexistent/x.qasm")
    assert code == report.EXIT_INPUT == 4
    assert "error" in err


def test_check_parse_error_positioned(capsys, tmp_path):
    p = tmp_path / "bad.qasm"
    p.write_text('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[3];\nfoo q[0];\n')
    code, _, err = run(capsys, "check", G, str(p))
    assert code == 4
    assert f"{p}:4:1" in err


def test_check_width_mismatch(capsys, tmp_path):
    p = tmp_path / "w.qasm"
    p.write_text(emit(Circuit(2)))
    code, _, err = run(capsys, "check", G, str(p))
    assert code == 4 and "qubits" in err


@pytest.mark.parametrize("argv", [
    ["check", G],
    ["check", G, GP, "--strategy", "bogus"],
    ["check", G, GP, "--sims", "-1"],
    ["check", G, GP, "--tolerance", "0"],
    ["check", G, GP, "--timeout", "-2"],
    ["nosuch"],
    [],
])
def test_usage_errors_exit_3(capsys, argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == report.EXIT_USAGE == 3


def test_sim_state_4(capsys):
    code, out, _ = run(capsys, "sim", G, "--state", "4")
    assert code == 0
    assert out.splitlines() == ["010: 0.70710678", "110: 0.70710678"]


def test_sim_empty_circuit(capsys, tmp_path):
    p = tmp_path / "e.qasm"
    p.write_text(emit(Circuit(2)))
    code, out, _ = run(capsys, "sim", str(p), "--state", "3")
    assert code == 0 and out.strip() == "11: 1.0"


def test_sim_state_out_of_range(capsys):
    code, _, err = run(capsys, "sim", G, "--state", "8")
    assert code == 3 and "out of range" in err


def test_sim_matches_oracle(capsys, tmp_path):
    import numpy as np
    from oracle import circuit_unitary
    c = random_circuit(3, 20, 8)
    p = tmp_path / "r.qasm"
    p.write_text(emit(c))
    u = circuit_unitary(c)
    for i in (0, 5):
        code, out, _ = run(capsys, "sim", str(p), "--state", str(i))
        got = np.zeros(8, dtype=complex)
        for line in out.splitlines():
            bits, amp = line.split(": ")
            got[int(bits, 2)] = complex(amp)
        assert np.allclose(got, u[:, i], atol=1e-7)


def test_format_amplitude():
    assert format_amplitude(1 + 0j) == "1.0"
    assert format_amplitude(-0.5j) == "0.0-0.5j"
    assert format_amplitude(0.25 + 0.125j) == "0.25+0.125j"


def test_inject_to_file_and_stdout(capsys, tmp_path):
    out_path = tmp_path / "inj.qasm"
    code, _, _ = run(capsys, "inject", GP, "--remove", "3", "--seed", "4", "--out", str(out_path))
    assert code == 0
    assert len(parse_file(out_path).gates) == 13
    code, out, _ = run(capsys, "inject", GP, "--remove", "3", "--seed", "4")
    assert out == out_path.read_text()


def test_inject_too_many(capsys):
    code, _, err = run(capsys, "inject", G, "--remove", "20")
    assert code == 3 and "remove" in err


def _study_dir(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    shutil.copy(G, d / "pair.qasm")
    shutil.copy(GP, d / "pair.g2.qasm")
    (d / "rand.qasm").write_text(emit(random_circuit(5, 30, 3)))
    (d / "broken.qasm").write_text("OPENQASM 2.0;\nqreg q[1];\nnope q[0];\n")
    return d


def test_study_schema_and_reproducible(capsys, tmp_path):
    d = _study_dir(tmp_path)
    argv = ["study", str(d), "--instances", "20", "--remove", "1", "--no-timings"]
    code, out1, err = run(capsys, *argv)
    assert code == 0
    assert "broken.qasm" in err
    code, out2, _ = run(capsys, *argv, "--jobs", "4")
    assert out1 == out2
    rep = json.loads(out1)
    jsonschema.validate(rep, report.load_schema("study_schema.json"))
    assert [r["benchmark"] for r in rep["rows"]] == ["pair", "rand"]
    assert rep["rows"][0]["gates"] == 16
    assert [e["file"] for e in rep["errors"]] == ["broken.qasm"]


def test_study_k0_never_detects(capsys, tmp_path):
    d = _study_dir(tmp_path)
    code, out, _ = run(capsys, "study", str(d), "--instances", "5", "--remove", "0")
    rep = json.loads(out)
    jsonschema.validate(rep, report.load_schema("study_schema.json"))
    assert all(r["p_success"] == 0 for r in rep["rows"])


def test_study_k3_detects_mostly(capsys, tmp_path):
    d = _study_dir(tmp_path)
    code, out, _ = run(capsys, "study", str(d), "--instances", "20", "--remove", "3")
    rows = json.loads(out)["rows"]
    assert all(r["p_success"] >= 0.9 for r in rows)
    assert all(r["avg_sims"] >= 1 for r in rows)


def test_study_missing_dir(capsys):
    code, _, _ = run(capsys, "study", "/nonexistent/dir")
    assert code == 4


def test_study_bad_instances(capsys, tmp_path):
    code, _, _ = run(capsys, "study", str(tmp_path), "--instances", "0")
    assert code == 3


def test_instance_seed_distinct():
    seeds = {instance_seed(s, t) for s in range(5) for t in range(100)}
    assert len(seeds) == 500


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "ddequiv.cli", "check", G, GT],
                       capture_output=True, text=True)
    assert r.returncode == 1
    exe = shutil.which("ddequiv")
    if exe:
        assert subprocess.run([exe, "sim", G, "--state", "4"],
                              capture_output=True).returncode == 0
