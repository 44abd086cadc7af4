import io
import json
from pathlib import Path

import pytest

from sia.belief import categorical
from sia.cli import main
from sia.harness import asia_ground_truth
from sia.network import EvidentialNetwork
from sia.propagation import propagate


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def tree_bytes(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


# every subcommand with fixed seeds and scripted providers, written under ``base``
def cli_session(base: Path) -> list[int]:
    asia = base / "asia"
    codes = [
        main(["generate-asia", "--seed", "0", "--cases", "20", "--out", str(asia)]),
        main(["generate-asia", "--variant", "ambiguity", "--seed", "0", "--cases", "10", "--out", str(base / "amb")]),
        main(["build", "--corpus", str(asia / "corpus.json"), "--root", str(asia / "root.json"),
              "--fixture", str(asia / "fixture.json"), "--out", str(base / "built.json")]),
        main(["run", "--network", "@demo/network.json", "--cases", "@demo/cases.jsonl",
              "--out", str(base / "run" / "demo.json")]),
        main(["bench", "--network", str(asia / "truth.json"), "--cases", str(asia / "cases.jsonl"),
              "--out", str(base / "bench"), "--seed", "0"]),
        main(["inspect", "--network", str(asia / "truth.json"), "--marginals", str(base / "marg.json")]),
    ]
    return codes


def test_every_subcommand_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli_session(a) == [0] * 6
    out_a = capsys.readouterr().out
    assert cli_session(b) == [0] * 6
    out_b = capsys.readouterr().out
    ta, tb = tree_bytes(a), tree_bytes(b)
    assert ta.keys() == tb.keys() and len(ta) > 10
    for k in ta:
        assert ta[k] == tb[k], k
    assert out_a.replace(str(a), "") == out_b.replace(str(b), "")


# build

def test_build_bundled_asia(tmp_path, capsys):
    out = tmp_path / "net.json"
    code, text, _ = run(["build", "--corpus", "@asia/corpus.json", "--root", "@asia/root.json",
                         "--fixture", "@asia/fixture.json", "--out", str(out), "--truth", "@asia/truth.json"], capsys)
    assert code == 0
    net = EvidentialNetwork.loads(out.read_text())
    # the diagnosis plus eight findings, risk factors and mechanisms
    assert len(net.variables) - 1 == 8
    assert "shd" in text


def test_build_missing_fixture_is_usage_error(tmp_path, capsys):
    code, _, err = run(["build", "--corpus", "@asia/corpus.json", "--root", "@asia/root.json",
                        "--fixture", str(tmp_path / "nope.json"), "--out", str(tmp_path / "n.json")], capsys)
    assert code == 2 and "not found" in err


def test_build_depth_limit(tmp_path, capsys):
    out = tmp_path / "net.json"
    code, _, _ = run(["build", "--corpus", "@asia/corpus.json", "--root", "@asia/root.json",
                      "--fixture", "@asia/fixture.json", "--out", str(out), "--max-depth", "1"], capsys)
    assert code == 0
    net = EvidentialNetwork.loads(out.read_text())
    assert all(e.parent == net.root for e in net.edges)


# run

def test_run_demo_case(tmp_path, capsys):
    out = tmp_path / "o.json"
    code, text, _ = run(["run", "--network", "@demo/network.json", "--cases", "@demo/cases.jsonl",
                         "--fixture", "@demo/fixture.json", "--out", str(out)], capsys)
    assert code == 0 and "decision flu after 1 turn" in text
    data = json.loads(out.read_text())
    assert data["decision"] == "flu" and data["turns_used"] == 1
    assert data["transcript"][0]["question"] == "Have you had a fever?"
    assert out.with_suffix(".trace.csv").exists()


def test_run_mode_tag(tmp_path, capsys):
    out = tmp_path / "o.json"
    code, text, _ = run(["run", "--network", "@demo/network.json", "--cases", "@demo/cases.jsonl",
                         "--mode", "ig_bayesian", "--out", str(out)], capsys)
    assert code == 0 and "[ig_bayesian]" in text
    assert json.loads(out.read_text())["mode"] == "ig_bayesian"


def test_repl_unknown_everywhere_abstains(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO("unknown\n\n"))
    code, text, _ = run(["run", "--network", "@demo/network.json", "--interactive", "--t-max", "2"], capsys)
    assert code == 0 and "abstain after 2 turn(s) (budget)" in text


def test_repl_grammar(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO("maybe\nprobably present\nyes\n"))
    code, text, _ = run(["run", "--network", "@demo/network.json", "--interactive",
                         "--hedge-mass", "0.7"], capsys)
    assert code == 0
    assert "not a state of fever" in text
    # hedged fever leaves {flu}:0.7 and 0.3 on the frame; against the uniform prior
    # Dempster gives flu 0.5 / 0.65, and fatigue cannot push it further
    assert "turn 1: flu=0.769" in text
    assert "abstain after 2 turn(s) (no_candidates)" in text


def test_run_usage_errors(tmp_path, capsys):
    assert run(["run", "--network", "@demo/network.json"], capsys)[0] == 2
    assert run(["run", "--network", str(tmp_path / "x.json"), "--cases", "@demo/cases.jsonl"], capsys)[0] == 2
    assert run(["run", "--network", "@demo/network.json", "--cases", "@demo/cases.jsonl", "--tau-conf", "2"],
               capsys)[0] == 2
    assert run(["run", "--network", "@demo/network.json", "--cases", "@demo/cases.jsonl", "--case-id", "zz"],
               capsys)[0] == 2
    assert run(["frobnicate"], capsys)[0] == 2


def test_run_runtime_error_exit_3(tmp_path, capsys):
    # a fixture without the encodings this case needs fails mid-dialogue
    fx = tmp_path / "fx.json"
    fx.write_text(json.dumps({"version": 1, "proposals": {}, "elicitations": {}, "encodings": {}, "phrasings": {}}))
    code, _, err = run(["run", "--network", "@demo/network.json", "--cases", "@demo/cases.jsonl",
                        "--fixture", str(fx)], capsys)
    assert code == 3 and "no encodings entry" in err


def test_config_file_and_flag_override(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "sia.ini"
    cfg.write_text("[engine]\ntau_conf = 0.99\nt_max = 1\n")
    monkeypatch.setattr("sys.stdin", io.StringIO(""))
    code, text, _ = run(["run", "--network", "@demo/network.json", "--interactive", "--config", str(cfg)], capsys)
    assert code == 0 and "abstain after 1 turn(s) (budget)" in text
    code, text, _ = run(["run", "--network", "@demo/network.json", "--interactive", "--config", str(cfg),
                         "--t-max", "2"], capsys)
    assert "abstain after 2 turn(s)" in text


# bench

def test_bench_report(tmp_path, capsys):
    code, text, _ = run(["bench", "--network", "@asia/truth.json", "--cases", "@asia/cases.jsonl",
                         "--out", str(tmp_path)], capsys)
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    for key in ("success_rate", "mean_turns", "abstention_rate"):
        assert key in report and key in text
    assert report["n_cases"] == 60
    assert (tmp_path / "traces").is_dir()


# inspect

def test_inspect_prior_and_evidence(tmp_path, capsys):
    code, text, _ = run(["inspect", "--network", "@demo/network.json"], capsys)
    assert code == 0 and "flu" in text and "fever" in text
    ev = tmp_path / "ev.json"
    ev.write_text(json.dumps({"xray": "abnormal"}))
    marg = tmp_path / "m.json"
    code, text, _ = run(["inspect", "--network", "@asia/truth.json", "--evidence", str(ev),
                         "--marginals", str(marg)], capsys)
    assert code == 0
    expected = propagate(asia_ground_truth(), {"xray": categorical(asia_ground_truth().variables["xray"].frame,
                                                                    "abnormal")})
    assert marg.read_text() == expected.dumps()


def test_inspect_dot(capsys):
    code, text, _ = run(["inspect", "--network", "@demo/network.json", "--dot"], capsys)
    assert code == 0 and text.startswith("digraph")


def test_inspect_bad_evidence_is_runtime_error(tmp_path, capsys):
    ev = tmp_path / "ev.json"
    ev.write_text(json.dumps({"nope": "x"}))
    assert run(["inspect", "--network", "@demo/network.json", "--evidence", str(ev)], capsys)[0] == 3


@pytest.mark.parametrize("argv", [["--help"], ["run", "--help"]])
def test_help_exits_zero(argv, capsys):
    assert main(argv) == 0
