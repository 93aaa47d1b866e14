"""Command-line behavior: outputs, exit codes, determinism."""
import json
import subprocess
from fractions import Fraction as Q

import pytest

import tsinorm
from tsinorm import fj_norm, import_norming_set, parse_vector, tau, tsirelson_spec
from tsinorm.cli import main


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def no_floats(doc):
    if isinstance(doc, float):
        return False
    if isinstance(doc, dict):
        return all(no_floats(v) for v in doc.values())
    if isinstance(doc, list):
        return all(no_floats(v) for v in doc)
    return True


class TestNorm:
    def test_fj_example(self, capsys):
        assert run(capsys, ["norm", "fj", "3:1 4:1 5:1"]) == (0, "3/2\n", "")

    def test_dual_example(self, capsys):
        code, out, _ = run(capsys, ["norm", "dual", "--space", "tsirelson",
                                    "3:1 4:1 5:1"])
        assert (code, out) == (0, "2\n")

    def test_fj_zero(self, capsys):
        assert run(capsys, ["norm", "fj", ""]) == (0, "0\n", "")

    def test_mixed_tsirelson_matches_fj(self, capsys):
        code, out, _ = run(capsys, ["norm", "mixed", "4:1 5:1 6:1 7:1"])
        assert (code, out) == (0, "2\n")

    def test_mixed_schlumprecht_point(self, capsys):
        code, out, _ = run(capsys, ["norm", "mixed", "--space", "schlumprecht",
                                    "1:1 2:1 3:1"])
        assert code == 0
        assert out == "[3/2, 3/2]\n"

    def test_dual_bounds_enclosure(self, capsys):
        code, out, _ = run(capsys, ["norm", "dual-bounds", "--space",
                                    "schlumprecht", "1:1 2:1",
                                    "--precision", "16"])
        assert code == 0
        assert out.startswith("[") and out.rstrip().endswith("]")
        lo, hi = out.strip()[1:-1].split(", ")
        assert Q(lo) <= Q(hi)

    def test_fj_certify(self, capsys):
        code, out, _ = run(capsys, ["norm", "fj", "3:1 4:1 5:1", "--certify"])
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "3/2"
        assert lines[1].startswith("witness: (split 0 1/2 ")

    def test_dual_certify(self, capsys):
        code, out, _ = run(capsys, ["norm", "dual", "3:1 4:1 5:1", "--certify"])
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "2"
        assert any(l.startswith("hull ") for l in lines)
        assert any(l.startswith("ball-vector: ") for l in lines)
        assert any(l.startswith("ball-witness: ") for l in lines)

    def test_json_no_floats(self, capsys):
        code, out, _ = run(capsys, ["norm", "dual", "3:1 4:1 5:1",
                                    "--format", "json", "--certify"])
        assert code == 0
        doc = json.loads(out)
        assert no_floats(doc)
        assert doc["value"] == "2"
        assert doc["decimal"] == "2"
        assert doc["certificate"]["hull"][0]["weight"] == "2"

    def test_json_interval(self, capsys):
        code, out, _ = run(capsys, ["norm", "dual-bounds", "--space",
                                    "schlumprecht", "1:1 2:1", "--format", "json"])
        doc = json.loads(out)
        assert code == 0
        assert set(doc["value"]) == {"lo", "hi", "lo_decimal", "hi_decimal"}
        assert no_floats(doc)

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "v.txt"
        code, out, _ = run(capsys, ["norm", "fj", "3:1 4:1 5:1",
                                    "--out", str(path)])
        assert code == 0 and out == ""
        assert path.read_text() == "3/2\n"


class TestNormErrors:
    def test_unknown_space(self, capsys):
        code, _, err = run(capsys, ["norm", "fj", "3:1", "--space", "nosuch"])
        assert code == 2
        assert "unknown space" in err

    def test_bad_vector(self, capsys):
        code, _, err = run(capsys, ["norm", "fj", "not a vector"])
        assert code == 2

    def test_fj_rejects_other_space(self, capsys):
        code, _, err = run(capsys, ["norm", "fj", "1:1", "--space",
                                    "schlumprecht"])
        assert code == 2
        assert "mixed" in err

    def test_dual_rejects_symbolic(self, capsys):
        code, _, err = run(capsys, ["norm", "dual", "--space", "schlumprecht",
                                    "1:1"])
        assert code == 2
        assert "dual-bounds" in err

    def test_dual_bounds_rejects_certify(self, capsys):
        code, _, err = run(capsys, ["norm", "dual-bounds", "1:1", "--certify"])
        assert code == 2

    def test_bad_precision(self, capsys):
        code, _, err = run(capsys, ["norm", "dual-bounds", "--space",
                                    "schlumprecht", "1:1", "--precision", "0"])
        assert code == 2

    def test_budget_exhaustion(self, capsys):
        tsinorm.clear_caches()
        code, _, err = run(capsys, ["norm", "dual", "1:1 2:1", "--budget", "2"])
        assert code == 3
        assert "budget" in err

    def test_budget_env(self, capsys, monkeypatch):
        tsinorm.clear_caches()
        monkeypatch.setenv("TSINORM_BUDGET", "3")
        code, _, _ = run(capsys, ["norm", "dual", "1:1 2:1"])
        assert code == 3
        # the flag wins over the environment
        tsinorm.clear_caches()
        code, out, _ = run(capsys, ["norm", "dual", "1:1 2:1",
                                    "--budget", "1000"])
        assert (code, out) == (0, "2\n")

    def test_budget_env_garbage(self, capsys, monkeypatch):
        monkeypatch.setenv("TSINORM_BUDGET", "banana")
        code, _, err = run(capsys, ["norm", "dual", "1:1 2:1"])
        assert code == 2
        assert "TSINORM_BUDGET" in err

    def test_bad_format_choice(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["norm", "fj", "1:1", "--format", "csv"])
        assert exc.value.code == 2


class TestConfigFile:
    def test_roundtrip_preset_config(self, capsys, tmp_path):
        path = tmp_path / "space.json"
        path.write_text(json.dumps(
            tsinorm.spec_to_config(tsirelson_spec())))
        code, out, _ = run(capsys, ["norm", "dual", "3:1 4:1 5:1",
                                    "--space", str(path)])
        assert (code, out) == (0, "2\n")

    def test_custom_card_space(self, capsys, tmp_path):
        doc = {"name": "card-demo",
               "levels": [{"family": "schreier1", "theta": "1/2"},
                          {"family": {"card_at_most": 2}, "theta": "1/3"}]}
        path = tmp_path / "card.json"
        path.write_text(json.dumps(doc))
        code, out, _ = run(capsys, ["norm", "mixed", "1:1 2:1 3:1",
                                    "--space", str(path)])
        assert code == 0
        assert Q(out.strip()) >= 1

    def test_malformed_config(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        code, _, err = run(capsys, ["norm", "fj", "1:1", "--space", str(path)])
        assert code == 2


class TestTable:
    def test_basis_growth_example(self, capsys):
        code, out, _ = run(capsys, ["table", "basis-growth",
                                    "--start", "2", "--end", "4"])
        assert code == 0
        assert out == "n,value,decimal\n2,1,1\n3,3/2,1.5\n4,2,2\n"

    def test_schreier_block_growth(self, capsys):
        code, out, _ = run(capsys, ["table", "schreier-block-growth",
                                    "--start", "1", "--end", "6"])
        assert code == 0
        rows = [line.split(",") for line in out.splitlines()[1:]]
        values = {int(n): Q(v) for n, v, _ in rows}
        # initial segments: e1+...+en
        assert values[1] == 1 and values[4] == 1
        assert values[5] == Q(3, 2) and values[6] == Q(3, 2)

    def test_byte_identical(self, capsys):
        a = run(capsys, ["table", "basis-growth", "--start", "2", "--end", "5"])
        b = run(capsys, ["table", "basis-growth", "--start", "2", "--end", "5"])
        assert a == b

    def test_empty_range_header_only(self, capsys):
        code, out, _ = run(capsys, ["table", "basis-growth",
                                    "--start", "5", "--end", "4"])
        assert (code, out) == (0, "n,value,decimal\n")

    def test_json_rows(self, capsys):
        code, out, _ = run(capsys, ["table", "basis-growth", "--start", "2",
                                    "--end", "3", "--format", "json"])
        doc = json.loads(out)
        assert code == 0 and no_floats(doc)
        assert doc["rows"] == [
            {"n": 2, "value": "1", "decimal": "1"},
            {"n": 3, "value": "3/2", "decimal": "1.5"}]

    def test_symbolic_space_rejected(self, capsys):
        code, _, err = run(capsys, ["table", "basis-growth",
                                    "--space", "schlumprecht"])
        assert code == 2

    def test_bad_start(self, capsys):
        code, _, err = run(capsys, ["table", "basis-growth", "--start", "0"])
        assert code == 2


class TestCheck:
    def test_lemmas_pass(self, capsys):
        code, out, _ = run(capsys, ["check", "lemmas", "--support", "4",
                                    "--sample", "25", "--pairs", "30"])
        assert code == 0
        assert out.count("PASS") == 4
        assert "seed: 0" in out

    def test_lemmas_deterministic(self, capsys):
        argv = ["check", "lemmas", "--support", "4", "--sample", "15",
                "--pairs", "15", "--seed", "7"]
        assert run(capsys, argv) == run(capsys, argv)

    def test_duality_reports_lp_size(self, capsys):
        code, out, _ = run(capsys, ["check", "duality", "--support", "4",
                                    "--sample", "12"])
        assert code == 0
        assert "PASS lp-duality-and-certificates" in out
        assert "max-hull-columns:" in out and "max-ball-rows:" in out

    def test_implicit_eq(self, capsys):
        code, out, _ = run(capsys, ["check", "implicit-eq", "--support", "4",
                                    "--sample", "10"])
        assert code == 0
        assert "PASS implicit-equation" in out

    def test_falsify_exhausted(self, capsys):
        code, out, _ = run(capsys, ["check", "ell1-falsify", "--support", "4",
                                    "--entries", "1,-1"])
        assert code == 0
        assert out == "exhausted after 3240 pairs (cap hits: 0)\n"

    def test_falsify_counterexample(self, capsys):
        code, out, _ = run(capsys, ["check", "ell1-falsify", "--support", "5",
                                    "--entries", "1,-1"])
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "counterexample"
        data = dict(l.split(" = ") for l in lines[1:])
        x = parse_vector(data["x"])
        y = parse_vector(data["y"])
        sx, conv = tsinorm.sigma_ell1_variant(tsirelson_spec(), x)
        sy, conv2 = tsinorm.sigma_ell1_variant(tsirelson_spec(), y)
        ss, conv3 = tsinorm.sigma_ell1_variant(tsirelson_spec(), x + y)
        assert conv and conv2 and conv3
        assert (sx, sy, ss) == (Q(data["sigma(x)"]), Q(data["sigma(y)"]),
                                Q(data["sigma(x+y)"]))
        assert ss > sx + sy

    def test_falsify_json(self, capsys):
        code, out, _ = run(capsys, ["check", "ell1-falsify", "--support", "5",
                                    "--entries", "1,-1", "--format", "json"])
        doc = json.loads(out)
        assert code == 0 and no_floats(doc)
        assert doc["status"] == "counterexample"
        assert doc["witness"]["sigma_x"] == "5"

    def test_falsify_bad_entries(self, capsys):
        code, _, err = run(capsys, ["check", "ell1-falsify",
                                    "--entries", "1,zebra"])
        assert code == 2

    def test_falsify_bad_support(self, capsys):
        code, _, err = run(capsys, ["check", "ell1-falsify", "--support", "0"])
        assert code == 2

    def test_symbolic_space_rejected(self, capsys):
        code, _, err = run(capsys, ["check", "lemmas", "--space",
                                    "schlumprecht", "--sample", "2"])
        assert code == 2


class TestNormingSet:
    def test_window_one(self, capsys):
        code, out, err = run(capsys, ["norming-set", "1"])
        assert code == 0
        body = [l for l in out.splitlines() if l and not l.startswith("#")]
        assert len(body) == 2
        assert "cardinality=2" in err

    def test_window_three_contains_half_pair(self, capsys):
        code, out, err = run(capsys, ["norming-set", "3"])
        assert code == 0
        assert any("2:1/2 3:1/2" in line for line in out.splitlines())

    def test_out_file_and_reimport(self, capsys, tmp_path):
        path = tmp_path / "v3.txt"
        code, out, _ = run(capsys, ["norming-set", "3", "--out", str(path)])
        assert code == 0
        assert "cardinality=" in out and "generation=" in out
        vset = import_norming_set(path.read_text(), tsirelson_spec())
        for literal in ("1:1", "1:1 2:-1", "1:1 2:1 3:1", "2:2 3:-1/2", ""):
            x = parse_vector(literal)
            assert tau(vset, x) == fj_norm(x)[0]

    def test_json(self, capsys):
        code, out, _ = run(capsys, ["norming-set", "2", "--format", "json"])
        doc = json.loads(out)
        assert code == 0
        # pairs starting at 1 fail admissibility, so only the four signed units
        assert doc["cardinality"] == 4
        assert doc["stabilized"] is True

    def test_bad_window(self, capsys):
        code, _, err = run(capsys, ["norming-set", "0"])
        assert code == 2


class TestCertify:
    def test_roundtrip(self, capsys, tmp_path):
        path = tmp_path / "cert.txt"
        code, out, _ = run(capsys, ["certify", "3:1 4:1 5:1",
                                    "--out", str(path)])
        assert code == 0
        assert "value=2" in out
        code, out, _ = run(capsys, ["certify", "--check", str(path)])
        assert code == 0
        assert out.startswith("certificate ok:")

    def test_stdout_document(self, capsys):
        code, out, _ = run(capsys, ["certify", "1:1 2:-1"])
        assert code == 0
        assert out.startswith("tsinorm-certificate\n")
        assert "value: 2" in out

    def test_tampered_value(self, capsys, tmp_path):
        path = tmp_path / "cert.txt"
        run(capsys, ["certify", "3:1 4:1 5:1", "--out", str(path)])
        path.write_text(path.read_text().replace("value: 2", "value: 3"))
        code, out, _ = run(capsys, ["certify", "--check", str(path)])
        assert code == 1
        assert out.startswith("certificate rejected:")

    def test_tampered_witness(self, capsys, tmp_path):
        path = tmp_path / "cert.txt"
        run(capsys, ["certify", "3:1 4:1 5:1", "--out", str(path)])
        path.write_text(path.read_text().replace(
            "ball-vector: 3:1 4:1", "ball-vector: 3:1 4:1 5:1"))
        code, out, _ = run(capsys, ["certify", "--check", str(path)])
        assert code == 1

    def test_check_json(self, capsys, tmp_path):
        path = tmp_path / "cert.txt"
        run(capsys, ["certify", "3:1 4:1 5:1", "--out", str(path)])
        code, out, _ = run(capsys, ["certify", "--check", str(path),
                                    "--format", "json"])
        doc = json.loads(out)
        assert code == 0
        assert doc["status"] == "ok" and doc["value"] == "2"

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, ["certify", "--check", "/nonexistent/c.txt"])
        assert code == 2

    def test_no_vector_no_check(self, capsys):
        code, _, err = run(capsys, ["certify"])
        assert code == 2

    def test_symbolic_space_rejected(self, capsys):
        code, _, err = run(capsys, ["certify", "1:1", "--space",
                                    "schlumprecht"])
        assert code == 2


def test_console_script():
    result = subprocess.run(
        ["tsinorm", "norm", "fj", "3:1 4:1 5:1"],
        capture_output=True, text=True)
    assert result.returncode == 0
    assert result.stdout == "3/2\n"
