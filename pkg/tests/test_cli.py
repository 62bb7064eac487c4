import io
import json
import subprocess
import sys

import pytest

from artifact.cli import (
    EXIT_FAIL, EXIT_PASS, EXIT_USAGE, SCHEMA_VERSION, SuiteConfig, coalgebra_from_json,
    coalgebra_to_json, default_truncation, primitive_coalgebra, run, suite_coring, suite_homology_F,
)
from artifact.coeff import Q, Z, Z2, RingSpec
from artifact.diffract import AWCoRing
from artifact.operad import nonrealizable_coalgebra
from artifact.symmetric import TruncationProfile


def invoke(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def test_homology_json_report():
    code, text = invoke("homology-f", "--max-level", "3", "--format", "json")
    assert code == EXIT_PASS
    rep = json.loads(text)
    assert rep["schema_version"] == SCHEMA_VERSION
    assert rep["summary"]["h0_ranks"] == [1, 2, 6]
    assert all(c["status"] == "pass" and c["anchor"] for c in rep["checks"])
    assert [c["name"] for c in rep["checks"]] == sorted(c["name"] for c in rep["checks"])


def test_reports_are_deterministic():
    a = invoke("duality-roundtrip", "--ring", "z", "--max-level", "2", "--seed", "9", "--format", "json")
    b = invoke("duality-roundtrip", "--ring", "z", "--max-level", "2", "--seed", "9", "--format", "json")
    assert a == b and a[0] == EXIT_PASS


def test_usage_errors():
    assert invoke("counterexample", "--ring", "q")[0] == EXIT_USAGE
    for argv in (["tor", "--ring", "reals"], ["no-such-suite"], ["tor", "--format", "xml"], []):
        with pytest.raises(SystemExit) as exc:
            run(argv, stdout=io.StringIO())
        assert exc.value.code == EXIT_USAGE
    assert invoke("tor", "--input", "x.json")[0] == EXIT_USAGE


def test_fault_injected_coring_fails_with_witness():
    class Faulty(AWCoRing):
        def node_boundary(self, node):
            terms = super().node_boundary(node)
            if sum(len(b) for b in node[1]) == 3:
                return [(self.ring.neg(c), r) if len(r) == 2 else (c, r) for c, r in terms]
            return terms
    cfg = SuiteConfig("verify-coring", Z, TruncationProfile(3))
    rep = suite_coring(cfg, coring=Faulty(TruncationProfile(3), Z))
    assert not rep.passed
    bad = {r.name for r in rep.failures()}
    assert "F(3) differential squares to zero" in bad
    assert all(r.witness is not None for r in rep.failures())
    assert suite_coring(cfg).passed


def test_level_one_is_trivial():
    rep = suite_coring(SuiteConfig("verify-coring", Q, TruncationProfile(1)))
    assert rep.passed
    h = suite_homology_F(SuiteConfig("homology-f", Q, TruncationProfile(1)))
    assert h.summary["h0_ranks"] == [1]


def test_default_truncation():
    assert default_truncation(Z2).max_level == 5
    assert default_truncation(Z).max_level == 4 and default_truncation(Q).max_level == 4
    assert default_truncation(Z2).max_degree == 12


def test_counterexample_and_exit_code():
    code, text = invoke("counterexample")
    assert code == EXIT_PASS
    assert text.count("[ok]") == 6


def test_coalgebra_serialization_roundtrip():
    M = nonrealizable_coalgebra()
    M2 = coalgebra_from_json(coalgebra_to_json(M))
    assert coalgebra_to_json(M2) == coalgebra_to_json(M)
    assert M2.counit == "1" and M2.delta("v") == M.delta("v")


def test_cosimplicial_from_input(tmp_path):
    path = tmp_path / "g.json"
    path.write_text(coalgebra_to_json(primitive_coalgebra(RingSpec.parse("zp:5"))))
    code, text = invoke("cosimplicial", "--ring", "zp:5", "--input", str(path))
    assert code == EXIT_PASS and "T(G)" in text


def test_dcsh_problem_roundtrip(tmp_path):
    K = {"kind": "chain_coalgebra", "ring": "z", "name": "E", "counit": None,
         "generators": [{"label": "e0", "degree": 0}, {"label": "e1", "degree": 1}],
         "differential": [["e1", "e0", "1"]],
         "diagonal": [["e0", "e0", "e0", "1"], ["e1", "e1", "e0", "1"]]}
    problem = {"source": K, "target": K, "tau": [["e0", [["e0", "1"]]], ["e1", [["e1", "1"]]]],
               "contraction": [["e0", [["e1", "1"]]]]}
    src = tmp_path / "problem.json"
    src.write_text(json.dumps(problem))
    out = tmp_path / "report.json"
    code = run(["dcsh-extend", "--ring", "z", "--input", str(src), "--output", str(out), "--format", "json"])
    assert code == EXIT_PASS
    rep = json.loads(out.read_text())
    assert rep["status"] == "pass"
    fam = rep["result"]["family"]
    assert {tuple(r["sizes"]) for r in fam} >= {(1,), (2,), (3,), (4,)}
    # a map into labels the target lacks is rejected before any lifting
    problem["tau"] = [["e0", [["e0", "1"]]], ["e1", [["e1", "1"]]]]
    problem["target"] = dict(K, generators=K["generators"][:1], differential=[], diagonal=[["e0", "e0", "e0", "1"]])
    src.write_text(json.dumps(problem | {"contraction": None}))
    assert invoke("dcsh-extend", "--ring", "z", "--input", str(src))[0] == EXIT_USAGE


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "artifact", "tor", "--max-level", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "Tor(J,J)(3)" in proc.stdout


def test_failed_check_exit_code(monkeypatch):
    import artifact.cli as cli

    def broken(config):
        rep = cli.SuiteReport("tor", config)
        rep.record("always fails", "tor-J-A-is-J", lambda: ({"computed": 1}, None))
        return rep
    monkeypatch.setitem(cli.SUITES, "tor", broken)
    code, text = invoke("tor")
    assert code == EXIT_FAIL and "witness=" in text


def test_obstructed_input_problem(tmp_path):
    gens = [{"label": "a", "degree": 1}, {"label": "b", "degree": 1}, {"label": "c", "degree": 2}]
    C = {"kind": "chain_coalgebra", "ring": "z", "generators": gens, "diagonal": [["c", "a", "b", "1"]]}
    Cp = {"kind": "chain_coalgebra", "ring": "z", "generators": gens}
    ident = [[g["label"], [[g["label"], "1"]]] for g in gens]
    src = tmp_path / "p.json"
    src.write_text(json.dumps({"source": C, "target": Cp, "tau": ident}))
    code, text = invoke("dcsh-extend", "--ring", "z", "--input", str(src))
    assert code == EXIT_FAIL and "no lift at (c, f_2)" in text
    src.write_text(json.dumps({"source": C, "target": Cp, "tau": ident, "expect_lift": False}))
    assert invoke("dcsh-extend", "--ring", "z", "--input", str(src))[0] == EXIT_PASS
