from __future__ import annotations

import io
import subprocess
import sys
from pathlib import Path

import pytest

from prymkp.bundle import emit_bundle, example_names, example_text, load_example, parse_bundle, parse_bundle_text
from prymkp.cli import main
from prymkp.errors import ParseError, ValidationError
from prymkp.grassmann import base_point, format_frame
from prymkp.loop import TypeVector

GOLDEN = Path(__file__).parent / "golden"


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


# -- bundles ----------------------------------------------------------------


def test_shipped_examples():
    assert example_names() == ["basepoint-n2", "cusp-kdv", "cusp-pair", "cusp-prym"]
    ex = load_example("basepoint-n2")
    assert ex.tv == TypeVector.of(1, 1) and ex.W.same_point(base_point(2, 0, 12))
    ex = load_example("cusp-kdv")
    assert ex.W.n == 1 and ex.expected_ints()["g0"] == 1 and ex.expected["origin"] == "elimination"


@pytest.mark.parametrize("name", example_names())
def test_emit_parse_identity(name):
    text = example_text(name)
    assert emit_bundle(parse_bundle_text(text, name)) == text


def test_malformed_header_points_at_token():
    text = example_text("cusp-kdv").replace("[type]", "[tyep]")
    with pytest.raises(ParseError) as exc:
        parse_bundle_text(text)
    line = text.splitlines().index("[tyep]") + 1
    assert exc.value.line == line and exc.value.column == 2
    with pytest.raises(ParseError):
        parse_bundle_text("[name]\nx\n[frame\n")


def test_frame_errors_map_to_file_lines():
    text = example_text("cusp-kdv")
    lines = text.splitlines()
    k = lines.index("[frame]") + 2
    lines[k] = "1,0 : 1,1 : oops"
    with pytest.raises(ParseError) as exc:
        parse_bundle_text("\n".join(lines) + "\n")
    assert exc.value.line == k + 1


def test_type_mismatch_rejected():
    text = example_text("cusp-kdv").replace("[type]\n(1)", "[type]\n(2)")
    with pytest.raises(ValidationError):
        parse_bundle_text(text)


def test_defaults_for_type_and_y():
    body = "[frame]\n" + format_frame(base_point(2, 0, 4))
    ex = parse_bundle_text(body, "bare")
    assert ex.tv == TypeVector.of(1, 1) and ex.y.coeffs == {1: 1} and ex.name == "bare"


# -- command line -----------------------------------------------------------


def test_example_list_and_emit():
    code, out = run("example", "list")
    assert code == 0 and out.split() == example_names()
    code, out = run("example", "emit", "cusp-prym")
    assert code == 0 and out == example_text("cusp-prym")


@pytest.mark.parametrize("name", example_names())
def test_invariants_command_matches_golden(name):
    code, out = run("invariants", name, "--check")
    assert code == 0
    assert out == (GOLDEN / f"{name}.invariants").read_text()


def test_invariants_on_bundle_file(tmp_path):
    p = tmp_path / "cusp-prym.bundle"
    p.write_text(example_text("cusp-prym"))
    assert parse_bundle(p).name == "cusp-prym"
    code, out = run("invariants", str(p))
    assert code == 0 and out.startswith("g0=0 gn=1 prym=1 ")


def test_invariants_check_failure_exits_one(tmp_path):
    p = tmp_path / "wrong.bundle"
    p.write_text(example_text("cusp-prym").replace("gn=1", "gn=3"))
    code, out = run("invariants", str(p), "--check")
    assert code == 1 and "expected" in out


def test_usage_errors_exit_two(tmp_path, capsys):
    assert run("frobnicate")[0] == 2
    assert run("invariants", str(tmp_path / "missing.bundle"))[0] == 2
    bad = tmp_path / "bad.bundle"
    bad.write_text("[nmae]\nx\n")
    assert run("invariants", str(bad))[0] == 2
    assert "line 1" in capsys.readouterr().err
    assert run("sato", "to-operator")[0] == 2
    assert run("verify", "everything")[0] == 2


def test_sato_roundtrip_is_deterministic():
    a = run("sato", "roundtrip", "--n", "2", "--seed", "7", "--count", "3")
    b = run("sato", "roundtrip", "--n", "2", "--seed", "7", "--count", "3")
    assert a == b and a[0] == 0 and a[1].count("pass roundtrip") == 3


def test_sato_file_commands(tmp_path):
    code, frame = run("sato", "to-frame", _write(tmp_path, "S.txt", "n=1 ; m=0 : (i,j)=(1,1) : 0:1 ; m=-1 : (i,j)=(1,1) : 1:1"), "--tail", "6")
    assert code == 0 and frame.startswith("n=1 M=1 N=6 index=0")
    W = _write(tmp_path, "W.txt", format_frame(base_point(1, 11, 10)))
    code, op = run("sato", "to-operator", W)
    assert code == 0 and op.startswith("n=1 ")


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_verify_roundtrip_passes():
    code, out = run("verify", "roundtrip", "--seed", "1", "--n", "2", "--count", "2")
    assert code == 0 and out.startswith("suite=roundtrip seed=1") and "0 failed" in out


def test_verify_all_is_deterministic():
    a = run("verify", "all", "--seed", "1", "--count", "2")
    b = run("verify", "all", "--seed", "1", "--count", "2")
    assert a == b and a[0] == 0 and "FAIL" not in a[1]


def test_flow_command(tmp_path):
    code, out = run("flow", "basepoint-n2", "--dirs", "1:1,2:1")
    assert code == 0 and out.startswith("n=2 ")
    frame = _write(tmp_path, "f.txt", format_frame(base_point(3, 0, 8)))
    ys = _write(tmp_path, "y.txt", "var=z d=1 T=inf ; 1:1")
    emit = tmp_path / "jets.txt"
    code, out = run("flow", "--frame", frame, "--type", "2,1", "--y", ys, "--dirs", "1:1,1:2,2:1", "--jet", "2", "--emit", str(emit))
    assert code == 0 and out == "" and emit.read_text().startswith("n=3 ")
    assert run("flow", "--frame", frame, "--type", "2", "--dirs", "1:1")[0] == 2
    assert run("flow", "basepoint-n2", "--dirs", "1-1")[0] == 2


def test_commute_command():
    code, out = run("commute", "cusp-kdv")
    assert code == 0
    assert "B0[1] n=1 " in out and "FAIL" not in out


def test_spectral_command(tmp_path, capsys):
    p = _write(tmp_path, "s.txt", "# x^2 - (y + y^3) x + y^3\nvar=y d=1 T=inf ; 1:-1 3:-1\nvar=y d=1 T=inf ; 3:1\n")
    code, out = run("spectral", p, "--prec", "4")
    assert code == 0 and out.startswith("type=(1,1)\n")
    assert "2 branches" in capsys.readouterr().err


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "prymkp.cli", "example", "list"], capture_output=True, text=True)
    assert res.returncode == 0 and "cusp-kdv" in res.stdout
