"""Answer parsing, per-question verification, and reward computation.

The combined score is 2 * ((1 - alpha) * r_io + alpha * r_white): r_io is the
binary final-output check, r_white the fraction of intermediate-state
questions answered correctly, and the factor of 2 keeps the scale of a pure
I/O reward. When an episode has no questions the score degenerates to
2 * r_io.
"""

import json
import re
import statistics
from dataclasses import dataclass

from . import interp
from .errors import ConfigError, LexError, ParseError
from .questions import question_from_record
from .syntax import load_program

_ANSWER_RE = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)
_CODE_FENCE_RE = re.compile(r"```python\n(.*?)```", re.DOTALL)


@dataclass(frozen=True)
class EpisodeAnswers:
    io_answer: str | None
    wb_answers: tuple


@dataclass(frozen=True)
class RewardConfig:
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class EpisodeScore:
    r_io: int
    r_white: float
    reward: float
    verdicts: tuple


def parse_answer_block(completion):
    """Last <answer>...</answer> region, split into the I/O answer (first
    non-blank line) and positional white-box answers. None when no block
    exists."""
    blocks = _ANSWER_RE.findall(completion or "")
    if not blocks:
        return None
    lines = [ln for ln in blocks[-1].splitlines() if ln.strip() != ""]
    if not lines:
        return EpisodeAnswers(io_answer=None, wb_answers=())
    return EpisodeAnswers(io_answer=lines[0], wb_answers=tuple(lines[1:]))


def verify_cf_answer(answer, ground_truth_line, lenient=False):
    if answer is None:
        return False
    a = answer.rstrip("\n")
    g = ground_truth_line.rstrip("\n")
    if a == g:
        return True
    if lenient:
        return a.lstrip() == g.lstrip()
    return False


def verify_df_answer(answer, gt_value, gt_type, strict_values=False):
    if answer is None:
        return False
    parts = answer.strip().rsplit("; ", 1)
    if len(parts) != 2:
        return False
    val_text, ty_text = parts
    if ty_text != gt_type:
        return False
    if val_text == gt_value:
        return True
    if strict_values:
        return False
    try:
        predicted = interp.parse_literal(val_text)
        truth = interp.parse_literal(gt_value)
    except ParseError:
        return False
    return predicted == truth and interp.type_name(predicted) == gt_type


def verify_answer(question, answer, lenient_cf=False, strict_df=False):
    if question.kind == "cf":
        return verify_cf_answer(answer, question.gt_stmt, lenient=lenient_cf)
    return verify_df_answer(answer, question.gt_val, question.gt_ty,
                            strict_values=strict_df)


def reward_io(predicted_output, expected):
    """1 iff the prediction parses as a literal equal to the expected value."""
    if predicted_output is None:
        return 0
    try:
        predicted = interp.parse_literal(predicted_output)
    except ParseError:
        return 0
    return 1 if predicted == expected else 0


def reward_white(verdicts):
    if not verdicts:
        raise ConfigError("reward_white is undefined for an empty question set")
    return statistics.fmean(1.0 if v else 0.0 for v in verdicts)


def reward_whitebox(r_io, r_white, config=None):
    config = config or RewardConfig()
    return 2.0 * ((1.0 - config.alpha) * r_io + config.alpha * r_white)


def reward_oi(program, tree, predicted_call, expected_output, limits=None):
    """2 iff executing the predicted entry call returns the expected value."""
    if predicted_call is None:
        return 0
    try:
        result = interp.execute(program, tree, predicted_call, limits=limits,
                                trace_enabled=False)
    except ParseError:
        return 0
    if result.status == "ok" and result.return_value == expected_output:
        return 2
    return 0


def reward_gen(passed, total):
    if total < 1:
        raise ConfigError("unit-test reward needs at least one test")
    if not 0 <= passed <= total:
        raise ConfigError(f"pass count {passed} outside [0, {total}]")
    return passed / total


def extract_code_block(completion):
    blocks = _CODE_FENCE_RE.findall(completion or "")
    if blocks:
        return blocks[-1]
    return completion or ""


def run_generated_tests(code_text, tests, limits=None):
    """Run each {call, expected} test against the submitted code. Returns
    per-test verdicts; any parse failure fails everything."""
    verdicts = []
    try:
        program, tree = load_program(code_text)
    except (LexError, ParseError):
        return [False] * len(tests)
    for test in tests:
        call = test.get("call")
        expected_text = test.get("expected", "")
        if not call:
            verdicts.append(False)
            continue
        try:
            result = interp.execute(program, tree, call, limits=limits,
                                    trace_enabled=False)
        except ParseError:
            verdicts.append(False)
            continue
        if result.status != "ok":
            verdicts.append(False)
            continue
        try:
            expected = interp.parse_literal(expected_text)
            verdicts.append(result.return_value == expected)
        except ParseError:
            verdicts.append(result.rendered_return == expected_text)
    return verdicts


# ---------------------------------------------------------------------------
# episode scoring

def expected_return(program, tree, entry_call, limits=None):
    result = interp.execute(program, tree, entry_call, limits=limits,
                            trace_enabled=False)
    if result.status != "ok":
        raise ConfigError(
            f"ground-truth execution failed with status {result.status}")
    return result.return_value


def score_whitebox(program, tree, entry_call, questions, completion,
                   config=None, limits=None, lenient_cf=False,
                   strict_df=False):
    config = config or RewardConfig()
    expected = expected_return(program, tree, entry_call, limits=limits)
    answers = parse_answer_block(completion)
    if answers is None:
        return EpisodeScore(r_io=0, r_white=0.0, reward=0.0,
                            verdicts=(False,) * len(questions))
    r_io = reward_io(answers.io_answer, expected)
    verdicts = []
    for j, q in enumerate(questions):
        ans = answers.wb_answers[j] if j < len(answers.wb_answers) else None
        verdicts.append(verify_answer(q, ans, lenient_cf=lenient_cf,
                                      strict_df=strict_df))
    if verdicts:
        r_white = reward_white(verdicts)
        reward = reward_whitebox(r_io, r_white, config)
    else:
        r_white = 0.0
        reward = 2.0 * r_io
    return EpisodeScore(r_io=r_io, r_white=r_white, reward=reward,
                        verdicts=tuple(verdicts))


def score_io(program, tree, entry_call, completion, limits=None):
    expected = expected_return(program, tree, entry_call, limits=limits)
    answers = parse_answer_block(completion)
    if answers is None:
        return EpisodeScore(r_io=0, r_white=0.0, reward=0.0, verdicts=())
    r_io = reward_io(answers.io_answer, expected)
    return EpisodeScore(r_io=r_io, r_white=0.0, reward=float(r_io),
                        verdicts=())


def score_oi(program, tree, entry_call, completion, limits=None):
    expected = expected_return(program, tree, entry_call, limits=limits)
    answers = parse_answer_block(completion)
    predicted = answers.io_answer if answers is not None \
        else (completion or "").strip()
    value = reward_oi(program, tree, predicted, expected, limits=limits)
    r_io = 1 if value == 2 else 0
    return EpisodeScore(r_io=r_io, r_white=0.0, reward=float(value),
                        verdicts=())


def score_gen(tests, completion, limits=None):
    if not tests:
        raise ConfigError("generation scoring needs a non-empty test list")
    code = extract_code_block(completion)
    verdicts = run_generated_tests(code, tests, limits=limits)
    reward = reward_gen(sum(verdicts), len(verdicts))
    return EpisodeScore(r_io=0, r_white=0.0, reward=reward,
                        verdicts=tuple(verdicts))


# ---------------------------------------------------------------------------
# batch record protocol

def score_record(record, default_mode="whitebox", default_alpha=0.5,
                 limits=None, lenient_cf=False, strict_df=False):
    """One input record -> one output dict (score or in-band error)."""
    episode_id = record.get("episode_id") if isinstance(record, dict) else None

    def error(kind, message):
        return {"episode_id": episode_id,
                "error": {"kind": kind, "message": message}}

    if not isinstance(record, dict):
        return error("BadRecord", "record is not an object")
    mode = record.get("mode", default_mode)
    try:
        if mode == "gen":
            score = score_gen(record.get("tests") or [],
                              record.get("completion", ""), limits=limits)
        else:
            program, tree = load_program(record["program"])
            entry_call = record["entry_call"]
            completion = record.get("completion", "")
            if mode == "whitebox":
                questions = [question_from_record(r)
                             for r in record.get("qset") or []]
                alpha = record.get("alpha")
                config = RewardConfig(
                    alpha=default_alpha if alpha is None else alpha)
                score = score_whitebox(program, tree, entry_call, questions,
                                       completion, config=config,
                                       limits=limits, lenient_cf=lenient_cf,
                                       strict_df=strict_df)
            elif mode == "io":
                score = score_io(program, tree, entry_call, completion,
                                 limits=limits)
            elif mode == "oi":
                score = score_oi(program, tree, entry_call, completion,
                                 limits=limits)
            else:
                return error("BadMode", f"unknown mode {mode!r}")
    except KeyError as exc:
        return error("MissingField", f"record lacks field {exc.args[0]!r}")
    except (LexError, ParseError, ConfigError) as exc:
        return error(type(exc).__name__, str(exc))
    except TypeError as exc:
        return error("BadRecord", str(exc))
    return {"episode_id": episode_id, "r_io": score.r_io,
            "r_white": score.r_white, "reward": score.reward,
            "verdicts": list(score.verdicts)}


def score_stream(lines, **kwargs):
    """Line-delimited scoring: yields one JSON text per input line, order
    preserved; malformed lines produce in-band error records."""
    for raw in lines:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            out = {"episode_id": None,
                   "error": {"kind": "BadJSON", "message": str(exc)}}
        else:
            out = score_record(record, **kwargs)
        yield json.dumps(out, ensure_ascii=False)
