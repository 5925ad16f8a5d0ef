import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from ramitree.cli import InvalidInput, main, parse_n_range

CORPUS = Path(__file__).parent / "fixtures" / "corpus.txt"


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv)
    return code, json.loads(text)


def test_info_first_group():
    code, report = run_json("info", "(012)")
    assert code == 0
    assert report["threshold_m"] == 7
    preds = report["predicted_orders"]
    assert [preds[w] for w in ("ab", "ac", "ad")] == [16, 8, 4]


def test_info_sigma_constant():
    code, report = run_json("info", "2(0)")
    assert code == 0
    assert report["threshold_m"] == 4 and report["threshold_case"] == "sigma-constant"


def test_constant_sequence_exits_3(capsys):
    code, _ = run("info", "(000)")
    assert code == 3
    assert "constant sequence excluded" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ["info", "012"],
        ["verify", "(012)"],
        ["verify", "(012)", "-n", "0"],
        ["verify", "(012)", "-n", "1"],
        ["order", "(012)", "-n", "4", "--word", "abx"],
        ["verify", "2(0)", "-n", "4", "--threads", "-2"],
        ["frobnicate"],
    ],
)
def test_invalid_input_exit_code(argv):
    try:
        code, _ = run(*argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 3


def test_verify_sigma_constant_exact():
    code, report = run_json("verify", "2(0)", "-n", "4")
    assert code == 0
    assert report["mode"] == "exact" and report["verdict"] == "PASS"
    assert all(p["evidence"]["kind"] == "exact" for p in report["pairs"])


def test_verify_below_threshold_reported():
    code, report = run_json("verify", "(012)", "-n", "3")
    assert report["theorem_claim"] == "below-threshold"
    assert code in (0, 1, 2)


def test_verify_exact_cap_exit_2():
    code, report = run_json("verify", "(012)", "-n", "5", "--mode", "exact", "--max-elements", "1000")
    assert code == 2
    assert report["verdict"] == "INCONCLUSIVE" and report["cap"] == "max_elements"


def test_order_match():
    code, report = run_json("order", "(012)", "-n", "5", "--word", "ab")
    assert code == 0
    assert report["measured"] == 16 and report["predicted"] == 16 and report["flag"] == "MATCH"


def test_order_unpredicted_word():
    code, report = run_json("order", "(012)", "-n", "4", "--word", "abcd")
    assert code == 0 and report["flag"] == "UNPREDICTED"


def test_enumerate_writes_dump(tmp_path):
    code, report = run_json("enumerate", "2(0)", "-n", "4", "--fixture-dir", str(tmp_path))
    assert code == 0 and report["order"] == 512
    dump = Path(report["dump"])
    assert dump.name == "G_2_0_n4.keys"
    assert len(dump.read_text().splitlines()) == 513


def test_semiabelian_found():
    code, report = run_json("semiabelian", "2(0)", "-n", "4")
    assert code == 0
    assert report["result"] == "found" and report["exhaustive"]


def test_tsv_matches_json():
    _, as_json = run_json("order", "(012)", "-n", "5", "--word", "ac")
    code, text = run("order", "(012)", "-n", "5", "--word", "ac", "--format", "tsv")
    header, row = text.rstrip("\n").split("\n")
    cells = dict(zip(header.split("\t"), row.split("\t")))
    assert code == 0
    assert set(cells) == set(as_json)
    assert cells["measured"] == str(as_json["measured"]) and cells["flag"] == as_json["flag"]


def test_sweep_empty_corpus(tmp_path):
    corpus = tmp_path / "empty.txt"
    corpus.write_text("# nothing here\n\n")
    code, text = run("sweep", str(corpus))
    assert code == 0 and text == ""


def test_sweep_constant_line_named(tmp_path, capsys):
    corpus = tmp_path / "bad.txt"
    corpus.write_text("2(0)\n(000)\n")
    code, text = run("sweep", str(corpus))
    assert code == 3 and text == ""
    assert f"{corpus}:2" in capsys.readouterr().err


def test_sweep_lines(tmp_path):
    corpus = tmp_path / "small.txt"
    corpus.write_text("2(0)\n1(2)\n")
    code, text = run("sweep", str(corpus), "--n-range", "4:5")
    lines = [json.loads(line) for line in text.splitlines()]
    assert code == 0
    assert [(r["omega"], r["depth"]) for r in lines] == [("2(0)", 4), ("2(0)", 5), ("1(2)", 4), ("1(2)", 5)]
    assert all(r["theorem_claim"] == "confirmed" for r in lines)


@pytest.mark.slow
def test_sweep_corpus_threshold_range():
    code, text = run("sweep", str(CORPUS))
    lines = [json.loads(line) for line in text.splitlines()]
    assert code == 0
    assert len(lines) == 26
    assert all(r["verdict"] == "PASS" for r in lines)


def test_parse_n_range():
    assert parse_n_range("M:M+1", 7) == range(7, 9)
    assert parse_n_range("4:6", 7) == range(4, 7)
    assert parse_n_range("5", 7) == range(5, 6)
    assert parse_n_range("1:M-4", 7) == range(2, 4)
    with pytest.raises(InvalidInput):
        parse_n_range("x:5", 7)


def test_threads_do_not_change_reports():
    _, one = run("verify", "2(01)", "-n", "6", "--mode", "certified", "--threads", "1")
    _, four = run("verify", "2(01)", "-n", "6", "--mode", "certified", "--threads", "4")
    assert one == four


def test_timings_opt_in():
    _, report = run_json("verify", "2(0)", "-n", "4", "--timings")
    assert isinstance(report["elapsed_ms"], int)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ramitree", "info", "2(0)"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["threshold_m"] == 4
