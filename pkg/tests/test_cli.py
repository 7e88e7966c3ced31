"""End-to-end command-line behavior, driven through subprocesses."""

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
STRIP = DATA / "strip_loop.py"
STRIP_CALL = 'test_rstrip("  hello world  ")'


def cli(*args, stdin=None, env_extra=None, check=True):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    proc = subprocess.run(
        [sys.executable, "-m", "tracekit", *args],
        input=stdin, capture_output=True, text=True, env=env, timeout=120)
    if check and proc.returncode != 0:
        raise AssertionError(
            f"tracekit {' '.join(args)} -> {proc.returncode}\n{proc.stderr}")
    return proc


def records(text):
    return [json.loads(ln) for ln in text.splitlines() if ln.strip()]


def instance_line():
    return json.dumps({
        "id": "t1", "code": STRIP.read_text(), "call": STRIP_CALL,
        "expected": "'  hello world'", "provenance": "raw", "level": 3})


# ---------------------------------------------------------------------------
# trace

def test_trace_emits_header_and_steps():
    proc = cli("trace", str(STRIP), "--call", STRIP_CALL)
    recs = records(proc.stdout)
    assert recs[0] == {"program_id": "1f66b69900", "call": STRIP_CALL,
                       "status": "ok"}
    assert len(recs) == 48
    assert recs[1]["line"] == 1


def test_trace_error_record_and_exit_code(tmp_path):
    bad = tmp_path / "bad.py"
    bad.write_text("def f(:\n")
    proc = cli("trace", str(bad), "--call", "f(1)", check=False)
    assert proc.returncode == 1
    assert records(proc.stdout)[0]["error"]["kind"] == "LexError"


def test_trace_fuel_flag(tmp_path):
    prog = tmp_path / "loop.py"
    prog.write_text("def f(x):\n    while True:\n        x = x + 1\n"
                    "    return x\n")
    proc = cli("trace", str(prog), "--call", "f(0)", "--fuel", "40",
               check=False)
    assert proc.returncode == 1
    assert records(proc.stdout)[0]["status"] == "fuel-exhausted"


def test_usage_errors_exit_2():
    assert cli("trace", str(STRIP), check=False).returncode == 2
    assert cli("nosuchcmd", check=False).returncode == 2
    assert cli("filter", "-i", "-", check=False, stdin="").returncode == 2


# ---------------------------------------------------------------------------
# ask

def test_ask_writes_questions_and_prompt(tmp_path):
    out = tmp_path / "q.jsonl"
    prompt = tmp_path / "prompt.txt"
    cli("ask", str(STRIP), "--call", STRIP_CALL, "--cap", "4", "--seed", "0",
        "-o", str(out), "--prompt", str(prompt))
    recs = records(out.read_text())
    assert len(recs) == 4
    assert {r["kind"] for r in recs} <= {"cf", "df"}
    text = prompt.read_text()
    assert "Question1: Fill the assertion statement." in text
    assert "Question5:" in text and "Question6:" not in text


def test_ask_cap_one_yields_two_prompt_questions(tmp_path):
    prompt = tmp_path / "p.txt"
    cli("ask", str(STRIP), "--call", STRIP_CALL, "--cap", "1",
        "--prompt", str(prompt))
    text = prompt.read_text()
    assert "Question2:" in text and "Question3:" not in text


def test_ask_failing_execution_is_an_error(tmp_path):
    prog = tmp_path / "div.py"
    prog.write_text("def f(x):\n    return 1 // x\n")
    proc = cli("ask", str(prog), "--call", "f(0)", check=False)
    assert proc.returncode == 1
    assert records(proc.stdout)[0]["error"]["kind"] == "ExecutionFailed"


# ---------------------------------------------------------------------------
# score

def scoring_record():
    ask = cli("ask", str(STRIP), "--call", STRIP_CALL, "--cap", "5",
              "--seed", "2")
    qs = records(ask.stdout)
    answers = ["'  hello world'"]
    for q in qs:
        if q["kind"] == "cf":
            answers.append(q["gt_stmt"])
        else:
            answers.append(f"{q['gt_val']}; {q['gt_ty']}")
    completion = ("<reasoning>\nok\n</reasoning>\n<answer>\n"
                  + "\n".join(answers) + "\n</answer>")
    return {"episode_id": "e1", "program": STRIP.read_text(),
            "entry_call": STRIP_CALL, "alpha": 0.5, "qset": qs,
            "completion": completion, "mode": "whitebox"}


def test_score_round_trip():
    rec = scoring_record()
    proc = cli("score", stdin=json.dumps(rec) + "\n")
    out = records(proc.stdout)[0]
    assert out["reward"] == 2.0
    assert out["r_io"] == 1
    assert out["r_white"] == 1.0


def test_score_strict_cf_flag_controls_indentation():
    rec = scoring_record()
    # dedent every control-flow answer
    block = rec["completion"].split("<answer>\n")[1].split("</answer>")[0]
    lines = block.strip("\n").split("\n")
    lines = [lines[0]] + [ln.lstrip() for ln in lines[1:]]
    rec["completion"] = "<answer>\n" + "\n".join(lines) + "\n</answer>"
    has_cf = any(q["kind"] == "cf" for q in rec["qset"])
    assert has_cf

    strict = records(cli("score", stdin=json.dumps(rec) + "\n").stdout)[0]
    lenient = records(cli("score", "--no-strict-cf",
                          stdin=json.dumps(rec) + "\n").stdout)[0]
    assert strict["r_white"] < 1.0
    assert lenient["r_white"] == 1.0


def test_score_bad_line_stays_in_band():
    proc = cli("score", stdin="{nope\n")
    out = records(proc.stdout)[0]
    assert out["error"]["kind"] == "BadJSON"


# ---------------------------------------------------------------------------
# mutate and filter

def test_mutate_emits_reexecuted_instances():
    proc = cli("mutate", "--pool", str(DATA / "pool.json"), "--count", "3",
               "--seed", "1", stdin=instance_line() + "\n")
    recs = records(proc.stdout)
    assert recs
    for k, rec in enumerate(recs, start=1):
        assert rec["id"] == f"t1-m{k}"
        assert rec["provenance"] == "mutated"
        assert rec["call"] != STRIP_CALL


def test_filter_execution_splits_keeps_and_drops(tmp_path):
    bad = json.dumps({"id": "broken", "code": "def f(x):\n    return 1 // x\n",
                      "call": "f(0)", "expected": "0"})
    proc = cli("filter", "--execution", stdin=instance_line() + "\n" + bad + "\n")
    kept = records(proc.stdout)
    dropped = records(proc.stderr)
    assert [r["id"] for r in kept] == ["t1"]
    assert dropped == [{"id": "broken", "drop": "runtime-error"}]


def test_filter_difficulty_annotates_pass_count():
    proc = cli("filter", "--difficulty", "--oracle", "always-wrong",
               stdin=instance_line() + "\n")
    kept = records(proc.stdout)
    assert kept[0]["pass_count"] == 0

    proc = cli("filter", "--difficulty", "--oracle", "always-correct",
               stdin=instance_line() + "\n")
    assert records(proc.stdout) == []
    assert records(proc.stderr) == [
        {"id": "t1", "drop": "too-easy", "pass_count": 10}]


def test_filter_unknown_oracle_fails():
    proc = cli("filter", "--difficulty", "--oracle", "magic",
               stdin=instance_line() + "\n", check=False)
    assert proc.returncode == 1


# ---------------------------------------------------------------------------
# stats and scan

def test_stats_writes_summary_and_figure(tmp_path):
    rows = []
    for k, pc in enumerate([0, 1, 1, 4, 10]):
        rec = json.loads(instance_line())
        rec["id"] = f"r{k}"
        rec["pass_count"] = pc
        rows.append(json.dumps(rec))
    out = tmp_path / "stats.json"
    cli("stats", "-i", "-", "-o", str(out), stdin="\n".join(rows) + "\n")
    summary = json.loads(out.read_text())
    assert summary["n"] == 5
    assert summary["difficulty_histogram"]["1"] == 2
    assert (tmp_path / "stats_difficulty.png").exists()


def test_scan_vectors_reports_and_figure(tmp_path):
    out = tmp_path / "scan.jsonl"
    cli("scan", "--train", str(DATA / "train.vec"),
        "--bench", str(DATA / "bench.vec"), "-o", str(out))
    recs = records(out.read_text())
    assert recs[0] == {"row": 0, "max_sim": 1.0, "flagged": True}
    assert recs[1]["max_sim"] == 0.8 and not recs[1]["flagged"]
    assert recs[-1]["flagged"] == [0]
    assert (tmp_path / "scan_sims.png").exists()


def test_scan_blacklist_mode():
    rows = [json.dumps({"id": "a", "code": "import random\n"}),
            json.dumps({"id": "b", "code": "x = 1\n"})]
    proc = cli("scan", "--blacklist", stdin="\n".join(rows) + "\n")
    recs = records(proc.stdout)
    assert recs[0]["flagged"] is True
    assert recs[1]["flagged"] is False


def test_scan_requires_exactly_one_mode():
    proc = cli("scan", stdin="", check=False)
    assert proc.returncode == 1


# ---------------------------------------------------------------------------
# case

def test_case_builds_and_renders(tmp_path):
    rec = {"id": "lib1", "prompt": (DATA / "library_prompt.txt").read_text(),
           "solution": (DATA / "library_solution.py").read_text()}
    prompt_out = tmp_path / "problems.txt"
    proc = cli("case", "--prompt", str(prompt_out),
               stdin=json.dumps(rec) + "\n")
    out = records(proc.stdout)[0]
    assert out["id"] == "lib1"
    assert out["task"] == "fill-the-assertion"
    assert "assert count_dict == ????" in prompt_out.read_text()


def test_case_rejects_blacklisted():
    rec = {"id": "lib2", "prompt": (DATA / "library_prompt.txt").read_text(),
           "solution": "import random\n"
           + (DATA / "library_solution.py").read_text()}
    out = records(cli("case", stdin=json.dumps(rec) + "\n").stdout)[0]
    assert out == {"id": "lib2", "rejected": "blacklist"}


# ---------------------------------------------------------------------------
# serve

def test_serve_stdio_scores_lines():
    rec = scoring_record()
    proc = cli("serve", "--stdio", stdin=json.dumps(rec) + "\n")
    out = records(proc.stdout)
    assert out[0]["reward"] == 2.0


# ---------------------------------------------------------------------------
# determinism (also exercised by the acceptance gate)

def test_outputs_identical_across_runs_and_hash_seeds(tmp_path):
    rec = scoring_record()
    jobs = [
        ("trace", str(STRIP), "--call", STRIP_CALL),
        ("ask", str(STRIP), "--call", STRIP_CALL, "--cap", "6", "--seed", "5"),
    ]
    for args in jobs:
        a = cli(*args, env_extra={"PYTHONHASHSEED": "0"}, check=False).stdout
        b = cli(*args, env_extra={"PYTHONHASHSEED": "777"}, check=False).stdout
        assert a == b, f"divergent output for {args}"
    a = cli("score", stdin=json.dumps(rec) + "\n",
            env_extra={"PYTHONHASHSEED": "0"}).stdout
    b = cli("score", stdin=json.dumps(rec) + "\n",
            env_extra={"PYTHONHASHSEED": "777"}).stdout
    assert a == b
