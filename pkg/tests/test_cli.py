import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from localcy.ainf import from_dg
from localcy.algebras import dual_numbers, massey_algebra, upper_triangular
from localcy.cli import main
from localcy.ncsym import DeRhamElement, FormalContext, d_de_rham, pairing_to_two_form
from localcy.serialize import save, serialize


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_cech_example():
    code, out = run("cech", "--n", "1", "--d", "-3")
    assert code == 0
    assert out == "H0=0 H1=2\n"


def test_ext_negative_twists():
    code, out = run("ext", "--n", "1", "--src", "0,1", "--dst", "-2,-1")
    assert code == 0
    assert out.splitlines()[0] == "Ext0=0 Ext1=4"


def test_local_cy_n1(tmp_path):
    rep = tmp_path / "r.txt"
    code, out = run("local-cy", "--n", "1", "--report", str(rep))
    assert code == 0
    assert "lhs_dims=4,0,4" in out and "rhs_dims=4,0,4" in out
    assert "witness: found" in out
    text = rep.read_text(encoding="utf-8")
    assert "--- minimal-cyclic-model ---" in text


def test_check_stasheff_ok_and_corrupted(tmp_path):
    A = from_dg(upper_triangular(2), max_arity=4)
    good = tmp_path / "good.json"
    save(A, good)
    assert run("check-stasheff", str(good))[0] == 0
    doc = json.loads(serialize(A))
    c = next(c for c in doc["coefficients"] if c["arity"] == 2)
    c["value"] = str(Fraction(c["value"]) + 1)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out = run("check-stasheff", str(bad))
    assert code == 1
    assert "arity=3" in out


def test_minimal_model_of_massey(tmp_path):
    f = tmp_path / "m.json"
    save(from_dg(massey_algebra(), max_arity=4), f)
    rep = tmp_path / "r.txt"
    code, out = run("minimal-model", str(f), "--max-arity", "4", "--report", str(rep))
    assert code == 0
    assert "status=ok" in out
    assert "entries[3]" in out


def test_trivial_extension_then_cyclic_check(tmp_path):
    f = tmp_path / "a.json"
    save(from_dg(upper_triangular(2), max_arity=4), f)
    rep = tmp_path / "t.txt"
    code, out = run("trivial-extension", str(f), "--shift", "-2", "--report", str(rep))
    assert code == 0
    blocks = rep.read_text(encoding="utf-8").split("--- ")
    T = [b for b in blocks if b.startswith("trivial-extension ---")][0].split("\n", 1)[1]
    P = [b for b in blocks if b.startswith("pairing ---")][0].split("\n", 1)[1]
    (tmp_path / "T.json").write_text(T, encoding="utf-8")
    (tmp_path / "P.json").write_text(P, encoding="utf-8")
    code, out = run("cyclic-check", str(tmp_path / "T.json"), str(tmp_path / "P.json"))
    assert code == 0, out


def test_darboux(tmp_path):
    ctx = FormalContext([0, 0], 6)
    omega0 = pairing_to_two_form(ctx, {(0, 1): Fraction(1), (1, 0): Fraction(-1)})
    beta = DeRhamElement(ctx, 1, {((0, 0), (0, 0), (1, 1)): Fraction(1)})
    f = tmp_path / "w.json"
    save(omega0 + d_de_rham(beta), f)
    code, out = run("darboux", str(f), "--order", "6", "--graded")
    assert code == 0
    assert "pullback_verified=true" in out
    save(DeRhamElement(ctx, 2, {((1, 0), (1, 0)): Fraction(1)}), f)
    assert run("darboux", str(f), "--order", "6")[0] == 1


def test_usage_errors(tmp_path):
    with pytest.raises(SystemExit) as e:
        run("cech", "--n", "1")
    assert e.value.code == 2
    assert run("check-stasheff", str(tmp_path / "missing.json"))[0] == 2
    (tmp_path / "junk.json").write_text("{")
    assert run("check-stasheff", str(tmp_path / "junk.json"))[0] == 2
    assert run("ext", "--n", "1", "--src", "a,b", "--dst", "0")[0] == 2


def test_deterministic_output(tmp_path):
    outs = [run("ext", "--n", "2", "--src", "0,1,2", "--dst", "0,1,2", "--report", str(tmp_path / f"{r}.txt"))
            for r in range(2)]
    assert outs[0] == outs[1]
    assert (tmp_path / "0.txt").read_bytes() == (tmp_path / "1.txt").read_bytes()


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "localcy", "cech", "--n", "2", "--d", "-3"],
                       capture_output=True, text=True)
    assert p.returncode == 0
    assert p.stdout == "H0=0 H1=0 H2=1\n"
