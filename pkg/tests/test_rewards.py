"""Answer parsing, answer verification, reward arithmetic, episode scoring."""

import json
import math

import pytest
from hypothesis import given, strategies as st

from tracekit import errors, interp, questions, rewards, syntax

SRC = ("def f(x):\n"
       "    y = x + 1\n"
       "    z = y * 2\n"
       "    return z\n"
       "assert f(3) == 8\n")


def qset_for(src, call, cap=10, seed=0):
    program, tree = syntax.load_program(src)
    qset, result = questions.questions_for_call(program, tree, call,
                                                cap=cap, seed=seed)
    assert result.status == "ok"
    return program, tree, qset


# ---------------------------------------------------------------------------
# answer block parsing

def test_parse_answer_block_basic():
    completion = ("<reasoning>\nblah\n</reasoning>\n"
                  "<answer>\n42\nline two\n</answer>")
    answers = rewards.parse_answer_block(completion)
    assert answers.io_answer == "42"
    assert answers.wb_answers == ("line two",)


def test_parse_answer_block_missing_returns_none():
    assert rewards.parse_answer_block("no tags at all") is None
    assert rewards.parse_answer_block("<answer>unclosed") is None


def test_parse_answer_block_last_match_wins():
    completion = ("<answer>\nfirst\n</answer>\n"
                  "text\n"
                  "<answer>\nsecond\nwb\n</answer>")
    answers = rewards.parse_answer_block(completion)
    assert answers.io_answer == "second"


def test_parse_answer_block_preserves_indentation():
    completion = "<answer>\n'v'\n        return x\n</answer>"
    answers = rewards.parse_answer_block(completion)
    assert answers.wb_answers == ("        return x",)


def test_parse_answer_block_skips_blank_lines():
    completion = "<answer>\n\n1\n\n2; int\n\n</answer>"
    answers = rewards.parse_answer_block(completion)
    assert answers.io_answer == "1"
    assert answers.wb_answers == ("2; int",)


# ---------------------------------------------------------------------------
# control-flow verification

def test_cf_strict_requires_exact_indentation():
    gt = "        return x"
    assert rewards.verify_cf_answer("        return x", gt)
    assert not rewards.verify_cf_answer("return x", gt)
    assert not rewards.verify_cf_answer("    return x", gt)


def test_cf_strict_ignores_trailing_newline_only():
    gt = "        return x"
    assert rewards.verify_cf_answer("        return x\n", gt)
    assert not rewards.verify_cf_answer("        return x  ", gt)


def test_cf_lenient_forgives_leading_indentation_only():
    gt = "        return x"
    assert rewards.verify_cf_answer("return x", gt, lenient=True)
    assert rewards.verify_cf_answer("  return x", gt, lenient=True)
    assert not rewards.verify_cf_answer("return x  ", gt, lenient=True)
    assert not rewards.verify_cf_answer("return y", gt, lenient=True)


# ---------------------------------------------------------------------------
# data-flow verification

def test_df_exact_match():
    assert rewards.verify_df_answer("3; int", "3", "int")
    assert not rewards.verify_df_answer("3; str", "3", "int")
    assert not rewards.verify_df_answer("4; int", "3", "int")


def test_df_splits_on_last_separator():
    assert rewards.verify_df_answer("[1, 2]; list", "[1, 2]", "list")
    assert rewards.verify_df_answer("'a; b'; str", "'a; b'", "str")


def test_df_accepts_literal_equivalent_spellings():
    assert rewards.verify_df_answer('"hi"; str', "'hi'", "str")
    assert rewards.verify_df_answer("1.50; float", "1.5", "float")
    assert not rewards.verify_df_answer("1; float", "1.0", "float")


def test_df_strict_values_requires_exact_text():
    assert not rewards.verify_df_answer('"hi"; str', "'hi'", "str",
                                        strict_values=True)
    assert rewards.verify_df_answer("'hi'; str", "'hi'", "str",
                                    strict_values=True)


def test_df_no_separator_fails():
    assert not rewards.verify_df_answer("3 int", "3", "int")
    assert not rewards.verify_df_answer("", "3", "int")


def test_df_bool_is_not_int():
    assert not rewards.verify_df_answer("True; int", "1", "int")
    assert rewards.verify_df_answer("True; bool", "True", "bool")


# ---------------------------------------------------------------------------
# reward arithmetic

def test_formula_spot_values():
    cfg = rewards.RewardConfig(alpha=0.5)
    assert rewards.reward_whitebox(1, 1.0, cfg) == 2.0
    assert rewards.reward_whitebox(0, 0.0, cfg) == 0.0
    assert rewards.reward_whitebox(1, 0.0, cfg) == 1.0
    assert rewards.reward_whitebox(0, 1.0, cfg) == 1.0
    assert rewards.reward_whitebox(1, 0.5, cfg) == 1.5


@given(st.floats(0, 1, allow_nan=False), st.integers(0, 1),
       st.floats(0, 1, allow_nan=False))
def test_formula_properties(alpha, r_io, r_white):
    cfg = rewards.RewardConfig(alpha=alpha)
    value = rewards.reward_whitebox(r_io, r_white, cfg)
    exact = 2.0 * ((1.0 - alpha) * r_io + alpha * r_white)
    assert value == exact
    assert 0.0 <= value <= 2.0
    if alpha == 0.0:
        assert value == 2.0 * r_io
    if alpha == 1.0:
        assert value == 2.0 * r_white


@given(st.floats(0, 1, allow_nan=False), st.integers(0, 1),
       st.floats(0, 1, allow_nan=False), st.floats(0, 1, allow_nan=False))
def test_formula_monotonic_in_r_white(alpha, r_io, a, b):
    lo, hi = min(a, b), max(a, b)
    cfg = rewards.RewardConfig(alpha=alpha)
    assert rewards.reward_whitebox(r_io, lo, cfg) <= \
        rewards.reward_whitebox(r_io, hi, cfg)


def test_alpha_validation():
    with pytest.raises(errors.ConfigError):
        rewards.RewardConfig(alpha=-0.1)
    with pytest.raises(errors.ConfigError):
        rewards.RewardConfig(alpha=1.1)


def test_reward_white_is_mean_of_verdicts():
    assert rewards.reward_white([True, False, True, True]) == 0.75
    with pytest.raises(errors.ConfigError):
        rewards.reward_white([])


def test_reward_io_compares_parsed_literals():
    assert rewards.reward_io('"  hello world"', "  hello world") == 1
    assert rewards.reward_io("'  hello world'", "  hello world") == 1
    assert rewards.reward_io("'nope'", "  hello world") == 0
    assert rewards.reward_io("not a literal(", "  hello world") == 0


def test_reward_gen_is_pass_fraction():
    assert rewards.reward_gen(3, 4) == 0.75
    assert rewards.reward_gen(0, 4) == 0.0


# ---------------------------------------------------------------------------
# whitebox episode scoring

def _correct_completion(program, tree, call, qset):
    program2, tree2 = program, tree
    result = interp.execute(program2, tree2, call)
    answers = [result.rendered_return]
    for q in qset:
        if q.kind == "cf":
            answers.append(q.gt_stmt)
        else:
            answers.append(f"{q.gt_val}; {q.gt_ty}")
    return ("<reasoning>\nsimulated\n</reasoning>\n<answer>\n"
            + "\n".join(answers) + "\n</answer>")


def test_score_whitebox_full_marks():
    program, tree, qset = qset_for(SRC, "f(3)")
    completion = _correct_completion(program, tree, "f(3)", qset)
    score = rewards.score_whitebox(program, tree, "f(3)", list(qset),
                                   completion)
    assert score.r_io == 1
    assert score.r_white == 1.0
    assert score.reward == 2.0
    assert all(score.verdicts)


def test_score_whitebox_no_answer_block_scores_zero():
    program, tree, qset = qset_for(SRC, "f(3)")
    score = rewards.score_whitebox(program, tree, "f(3)", list(qset),
                                   "I refuse to answer in the format")
    assert score.r_io == 0
    assert score.r_white == 0.0
    assert score.reward == 0.0
    assert score.verdicts == tuple([False] * len(qset))


def test_score_whitebox_missing_answers_score_false():
    program, tree, qset = qset_for(SRC, "f(3)")
    result = interp.execute(program, tree, "f(3)")
    partial = ("<answer>\n" + result.rendered_return + "\n</answer>")
    score = rewards.score_whitebox(program, tree, "f(3)", list(qset), partial)
    assert score.r_io == 1
    assert score.r_white == 0.0
    assert score.reward == 1.0


def test_score_whitebox_empty_questions_falls_back_to_io_only():
    program, tree, _ = qset_for(SRC, "f(3)")
    score = rewards.score_whitebox(program, tree, "f(3)", [],
                                   "<answer>\n8\n</answer>")
    assert score.r_io == 1
    assert score.r_white == 0.0
    assert score.reward == 2.0
    wrong = rewards.score_whitebox(program, tree, "f(3)", [],
                                   "<answer>\n9\n</answer>")
    assert wrong.reward == 0.0


def test_score_whitebox_alpha_extremes():
    program, tree, qset = qset_for(SRC, "f(3)")
    completion = _correct_completion(program, tree, "f(3)", qset)
    wrong_io = completion.replace("<answer>\n8\n", "<answer>\n99\n")
    io_only = rewards.score_whitebox(
        program, tree, "f(3)", list(qset), wrong_io,
        config=rewards.RewardConfig(alpha=0.0))
    assert io_only.reward == 0.0
    wb_only = rewards.score_whitebox(
        program, tree, "f(3)", list(qset), wrong_io,
        config=rewards.RewardConfig(alpha=1.0))
    assert wb_only.reward == 2.0


def test_expected_return_requires_ok_run():
    program, tree = syntax.load_program("def f(x):\n    return 1 // x\n")
    with pytest.raises(errors.ConfigError):
        rewards.expected_return(program, tree, "f(0)")


# ---------------------------------------------------------------------------
# output-to-input scoring

def test_score_oi_runs_predicted_call():
    src = ("def f(x):\n    return x * 2\nassert f(3) == 6\n")
    program, tree = syntax.load_program(src)
    good = rewards.score_oi(program, tree, "f(3)", "<answer>\nf(3)\n</answer>")
    assert good.reward == 2.0 and good.r_io == 1
    alt = rewards.score_oi(program, tree, "f(3)", "f(3)")
    assert alt.reward == 2.0  # bare completion accepted when no block
    bad = rewards.score_oi(program, tree, "f(3)", "<answer>\nf(4)\n</answer>")
    assert bad.reward == 0.0 and bad.r_io == 0
    garbage = rewards.score_oi(program, tree, "f(3)", "not a call")
    assert garbage.reward == 0.0


# ---------------------------------------------------------------------------
# generated-test scoring

GEN_COMPLETION = '''Here is my solution:
```python
def double(x):
    return x * 2
```
'''


def test_score_gen_counts_passing_tests():
    tests = [{"call": "double(2)", "expected": "4"},
             {"call": "double(3)", "expected": "6"},
             {"call": "double(4)", "expected": "9"}]
    score = rewards.score_gen(tests, GEN_COMPLETION)
    assert score.verdicts == (True, True, False)
    assert score.reward == pytest.approx(2 / 3)


def test_score_gen_unloadable_code_fails_all():
    tests = [{"call": "double(2)", "expected": "4"}]
    score = rewards.score_gen(tests, "```python\nimport os\n```")
    assert score.verdicts == (False,)
    assert score.reward == 0.0


def test_score_gen_requires_tests():
    with pytest.raises(errors.ConfigError):
        rewards.score_gen([], GEN_COMPLETION)


# ---------------------------------------------------------------------------
# record protocol

def make_record(**over):
    program, tree, qset = qset_for(SRC, "f(3)")
    completion = _correct_completion(program, tree, "f(3)", qset)
    rec = {"episode_id": "e1", "program": SRC, "entry_call": "f(3)",
           "alpha": 0.5, "qset": [questions.question_to_record(q)
                                  for q in qset],
           "completion": completion, "mode": "whitebox"}
    rec.update(over)
    return rec


def test_score_record_whitebox():
    out = rewards.score_record(make_record())
    assert list(out) == ["episode_id", "r_io", "r_white", "reward", "verdicts"]
    assert out["reward"] == 2.0


def test_score_record_error_paths_are_in_band():
    missing = rewards.score_record({"episode_id": "x", "mode": "io"})
    assert missing["error"]["kind"] == "MissingField"
    bad_mode = rewards.score_record(make_record(mode="nope"))
    assert bad_mode["error"]["kind"] == "BadMode"
    bad_prog = rewards.score_record(make_record(program="def f(:\n"))
    assert bad_prog["error"]["kind"] == "LexError"
    not_dict = rewards.score_record([1, 2])
    assert not_dict["error"]["kind"] == "BadRecord"


def test_score_stream_preserves_order_and_skips_blanks():
    lines = [json.dumps(make_record(episode_id="a")), "", "  ",
             "{broken", json.dumps(make_record(episode_id="b"))]
    out = [json.loads(t) for t in rewards.score_stream(lines)]
    assert [o.get("episode_id") for o in out] == ["a", None, "b"]
    assert out[1]["error"]["kind"] == "BadJSON"


def test_score_stream_respects_default_alpha():
    rec = make_record(episode_id="c")
    del rec["alpha"]
    rec["completion"] = "<answer>\n8\n</answer>"  # io right, wb wrong
    out = [json.loads(t) for t in
           rewards.score_stream([json.dumps(rec)], default_alpha=0.0)]
    assert out[0]["reward"] == 2.0
