import json
import subprocess
import sys

import numpy as np
import pytest

from expdec import io
from expdec.cli import run_cli
from expdec.instances import PRESETS


def run(argv, capsys):
    code = run_cli([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_code_roundtrip(name, tmp_path):
    code = PRESETS[name]()
    p = tmp_path / "c.json"
    io.save_json(io.code_to_dict(code), p)
    back = io.load_code(p)
    assert io.code_to_dict(back) == io.code_to_dict(code)


def test_nested_file_references(tmp_path):
    (tmp_path / "g.json").write_text(io.dumps(PRESETS["tensor"]().graph.to_dict()))
    (tmp_path / "c.json").write_text(json.dumps({"kind": "tanner", "graph": "g.json", "inner": {"kind": "linear", "q": 2, "generator": [[1, 0, 1], [0, 1, 1]]}}))
    code = io.load_code(tmp_path / "c.json")
    assert len(code.codewords()) == 16


def test_bijection_mismatch_rejected():
    d = io.code_to_dict(PRESETS["ael-k44"]())
    d["bijection"] = d["bijection"][::-1]
    with pytest.raises(ValueError):
        io.code_from_dict(d)


def test_unknown_kind():
    with pytest.raises(ValueError):
        io.code_from_dict({"kind": "polar"})


def test_parse_word_forms():
    assert io.parse_word("010010000") == (0, 1, 0, 0, 1, 0, 0, 0, 0)
    assert io.parse_word("0 3 12") == (0, 3, 12)
    assert io.parse_word("0,1 1,1") == ((0, 1), (1, 1))
    assert io.parse_word("7") == (7,)
    for w in [(0, 3, 12), ((0, 1), (1, 1))]:
        assert io.parse_word(io.format_word(w)) == w


def test_read_words_skips_comments(tmp_path):
    p = tmp_path / "w.txt"
    p.write_text("# header\n0 1\n\n1 1\n")
    assert io.read_words(p) == [(0, 1), (1, 1)]


def test_weights_roundtrip(tmp_path):
    W = np.array([[0.7, 0.3], [0.25, 0.75]])
    io.write_weights(W, tmp_path / "w.csv")
    assert np.array_equal(io.read_weights(tmp_path / "w.csv"), W)
    (tmp_path / "bad.csv").write_text("0.5,-0.1\n")
    with pytest.raises(ValueError):
        io.read_weights(tmp_path / "bad.csv")


def test_manifest_has_no_timestamp(tmp_path):
    p = tmp_path / "x"
    p.write_text("abc")
    a = io.manifest("cmd", {"k": 1}, [p], [3])
    assert a == io.manifest("cmd", {"k": 1}, [p], [3])
    assert set(a) == {"command", "config", "config_hash", "seeds", "inputs", "version"}


def test_johnson_command(capsys):
    code, out, _ = run(["johnson", "--q", 2, "--delta", "4/9"], capsys)
    assert code == 0
    assert out.strip() == '{"beta":"1/9","johnson":"1/3"}'


def test_bad_input_exit_codes(capsys):
    assert run(["johnson", "--q", 2, "--delta", "3/4"], capsys)[0] == 2
    assert run(["johnson", "--q", 2, "--delta", "abc"], capsys)[0] == 2
    assert run(["no-such-command"], capsys)[0] == 2


def test_worked_example_pipeline(tmp_path, capsys):
    code = tmp_path / "tensor.json"
    assert run(["build-code", "tanner", "--preset", "tensor", "--out", code], capsys)[0] == 0
    w = tmp_path / "w.txt"
    w.write_text("010010000\n")
    out = tmp_path / "list.json"
    rc, _, _ = run(["list-decode", "--kind", "tanner", "--code", code, "--received", w, "--eps", "0.05", "--out", out], capsys)
    assert rc == 0
    assert len(json.loads(out.read_text())["list"]) == 2
    rc, _, _ = run(
        ["list-decode", "--kind", "tanner", "--code", code, "--received", w, "--eps", "0.05", "--k-max", 1, "--t", 12, "--out", out],
        capsys,
    )
    data = json.loads(out.read_text())
    assert rc == 0 and len(data["list"]) == 3
    assert {e["distance"] for e in data["list"]} == {"2/9"}


def test_list_decode_kind_mismatch(tmp_path, capsys):
    code = tmp_path / "c.json"
    run(["build-code", "concat", "--preset", "concat-rs-parity", "--out", code], capsys)
    w = tmp_path / "w.txt"
    w.write_text("0" * 12 + "\n")
    assert run(["list-decode", "--kind", "tanner", "--code", code, "--received", w, "--eps", "0.02"], capsys)[0] == 2


def test_list_decode_empty_exit(tmp_path, capsys):
    code = tmp_path / "tensor.json"
    run(["build-code", "tanner", "--preset", "tensor", "--out", code], capsys)
    w = tmp_path / "w.txt"
    w.write_text("100000000\n")
    # eps close to J leaves a radius below 1/9
    rc, out, _ = run(["list-decode", "--code", code, "--received", w, "--eps", "0.3"], capsys)
    assert rc == 1 and json.loads(out)["list"] == []


def test_nonconvergence_exit(tmp_path, capsys):
    code = tmp_path / "tensor.json"
    run(["build-code", "tanner", "--preset", "tensor", "--out", code], capsys)
    w = tmp_path / "w.txt"
    w.write_text("010010000\n")
    assert run(["list-decode", "--code", code, "--received", w, "--eps", "0.05", "--max-iters", 2], capsys)[0] == 3


def test_jobs_do_not_change_output(tmp_path, capsys):
    code = tmp_path / "tensor.json"
    run(["build-code", "tanner", "--preset", "tensor", "--out", code], capsys)
    w = tmp_path / "w.txt"
    w.write_text("010010000\n110000000\n000000000\n")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(["list-decode", "--code", code, "--received", w, "--eps", "0.05", "--out", a], capsys)
    run(["list-decode", "--code", code, "--received", w, "--eps", "0.05", "--jobs", 2, "--out", b], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_corrupt_deterministic(tmp_path, capsys):
    c = tmp_path / "c.txt"
    c.write_text("011011000\n000000000\n")
    outs = []
    for name in ("x", "y"):
        o = tmp_path / name
        assert run(["corrupt", "--word", c, "--errors", 2, "--seed", 1, "--out", o], capsys)[0] == 0
        outs.append(o.read_bytes())
    assert outs[0] == outs[1]
    words = io.read_words(tmp_path / "x")
    assert [sum(a != b for a, b in zip(w, v)) for w, v in zip(words, io.read_words(c))] == [2, 2]


@pytest.mark.parametrize(
    "family, extra, msg",
    [
        ("tanner", ["--preset", "tensor"], "1 0 1 1"),
        ("tanner", ["--preset", "hamming-tanner"], "1 0 1 1 0 0 1 0 1 1 0 0 1 0 1 1"),
        ("ael", ["--preset", "ael-k44"], "2 3"),
        ("concat", ["--preset", "concat-rs-parity"], "1 2"),
        ("rs", ["--q", 5, "--n", 5, "--k", 2], "1 2"),
    ],
)
def test_build_encode_corrupt_decode_roundtrip(family, extra, msg, tmp_path, capsys):
    code, m, cw, rx, dec = (tmp_path / n for n in ("code.json", "m.txt", "c.txt", "r.txt", "d.txt"))
    assert run(["build-code", family, *extra, "--out", code], capsys)[0] == 0
    m.write_text(msg + "\n")
    assert run(["encode", "--code", code, "--message", m, "--out", cw], capsys)[0] == 0
    assert run(["corrupt", "--word", cw, "--errors", 0, "--code", code, "--out", rx], capsys)[0] == 0
    assert run(["unique-decode", "--code", code, "--received", rx, "--method", "nearest", "--out", dec], capsys)[0] == 0
    assert io.read_words(dec) == io.read_words(m)


def test_manifest_and_byte_identical_reruns(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        g, man = tmp_path / f"{name}.json", tmp_path / f"{name}.man.json"
        run(["gen-graph", "--kind", "random_regular", "--n", 10, "--d", 3, "--seed", 5, "--out", g, "--manifest", man], capsys)
        outs.append((g.read_bytes(), json.loads(man.read_text())))
    assert outs[0][0] == outs[1][0]
    assert outs[0][1]["config_hash"] == outs[1][1]["config_hash"]
    assert outs[0][1]["seeds"] == [5]


def test_near_mds_command(capsys):
    rc, out, _ = run(["near-mds-params", "--eps1", "1/8"], capsys)
    data = json.loads(out)
    assert rc == 0 and data["delta_dec"] == "1/64" and data["lambda"] == "1/512"


def test_verify_command(capsys):
    rc, out, _ = run(["verify", "--suite", "distance"], capsys)
    assert rc == 0 and json.loads(out)["distance"]["passed"]


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "expdec.cli", "johnson", "--q", "2", "--delta", "1/2"], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout) == {"beta": "0", "johnson": "1/2"}
