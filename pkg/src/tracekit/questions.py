"""Turn execution traces into verifiable questions about intermediate state.

Two kinds are generated. Control-flow questions ask which source line runs
immediately after a given (line, occurrence) step; they anchor on branch and
loop headers and on backward jumps. Data-flow questions ask for a variable's
value and type right after the step that changed it. Ground truths come
straight from the trace, so every question is machine-checkable.
"""

import json
import random
from dataclasses import dataclass, replace

from . import interp, syntax
from .errors import ConfigError, ParseError
from .tracing import diff_states

DEFAULT_CAP = 10

DF_TEMPLATE = ("What is the value and type of the variable {var} after "
               "Line {line} ({stmt}) is executed for the {nth} time?")
CF_TEMPLATE = ("Tracing the execution, which line is executed immediately "
               "after Line {line} ({stmt}) is executed for the {nth} time?")


@dataclass(frozen=True)
class Question:
    kind: str                   # "cf" | "df"
    line: int
    occ: int
    text: str
    var: str | None = None
    gt_val: str | None = None
    gt_ty: str | None = None
    gt_stmt: str | None = None

    @property
    def key(self):
        return (self.kind, self.line, self.occ, self.var)


@dataclass(frozen=True)
class QuestionSet:
    questions: tuple = ()
    program_id: str = ""
    entry_call: str = ""

    def __len__(self):
        return len(self.questions)

    def __iter__(self):
        return iter(self.questions)


def ordinal(n):
    if 11 <= n % 100 <= 13:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"


def _header_lines(tree):
    lines = set()
    for node in syntax.walk(tree):
        if node.kind in ("ifarm", "while", "for"):
            lines.add(node.line)
    return lines


def generate_questions(trace, program, tree=None):
    """Full candidate list in trace order. Empty when the trace has fewer
    than two steps."""
    steps = trace.steps
    if len(steps) < 2:
        return []
    if tree is None:
        tree = syntax.parse_source(program.text)
    headers = _header_lines(tree)
    driver = interp.find_driver(tree, program.entry_point)
    driver_line = driver.line if driver is not None else len(program.lines) + 1

    seen = set()
    out = []

    def add(q):
        if q.key in seen:
            return
        seen.add(q.key)
        out.append(q)

    for i, step in enumerate(steps):
        if i > 0:
            for var, val, ty in diff_states(steps[i - 1].state, step.state):
                add(Question(kind="df", line=step.line, occ=step.occ,
                             var=var, gt_val=val, gt_ty=ty,
                             text=DF_TEMPLATE.format(var=var, line=step.line,
                                                     stmt=step.stmt.strip(),
                                                     nth=ordinal(step.occ))))
        if i + 1 >= len(steps) or step.line == driver_line:
            continue
        nxt = steps[i + 1]
        if step.line in headers or nxt.line < step.line:
            add(Question(kind="cf", line=step.line, occ=step.occ,
                         gt_stmt=nxt.stmt,
                         text=CF_TEMPLATE.format(line=step.line,
                                                 stmt=step.stmt.strip(),
                                                 nth=ordinal(step.occ))))
    return out


def sample_questions(candidates, cap=DEFAULT_CAP, seed=0):
    if cap < 1:
        raise ConfigError(f"question cap must be at least 1, got {cap}")
    pool = list(candidates)
    rng = random.Random(seed)
    rng.shuffle(pool)
    return QuestionSet(questions=tuple(pool[:cap]))


def questions_for_call(program, tree, entry_call, limits=None,
                       cap=DEFAULT_CAP, seed=0):
    """Execute, generate, sample. Non-ok executions yield an empty set."""
    result = interp.execute(program, tree, entry_call, limits=limits)
    if result.status != "ok":
        qset = QuestionSet(program_id=result.trace.program_id,
                           entry_call=entry_call)
        return qset, result
    candidates = generate_questions(result.trace, program, tree)
    qset = replace(sample_questions(candidates, cap=cap, seed=seed),
                   program_id=result.trace.program_id, entry_call=entry_call)
    return qset, result


# ---------------------------------------------------------------------------
# wire format

def question_to_record(q):
    rec = {"kind": q.kind, "line": q.line, "occ": q.occ}
    if q.kind == "df":
        rec["var"] = q.var
        rec["gt_val"] = q.gt_val
        rec["gt_ty"] = q.gt_ty
    else:
        rec["gt_stmt"] = q.gt_stmt
    rec["text"] = q.text
    return rec


def question_from_record(rec):
    try:
        kind = rec["kind"]
        line = rec["line"]
        occ = rec["occ"]
        text = rec.get("text", "")
        if kind == "df":
            return Question(kind="df", line=line, occ=occ, text=text,
                            var=rec["var"], gt_val=rec["gt_val"],
                            gt_ty=rec["gt_ty"])
        if kind == "cf":
            return Question(kind="cf", line=line, occ=occ, text=text,
                            gt_stmt=rec["gt_stmt"])
    except (KeyError, TypeError):
        pass
    raise ParseError(f"malformed question record: {rec!r}")


def serialize_questions(qset):
    lines = [json.dumps(question_to_record(q), ensure_ascii=False)
             for q in qset.questions]
    return "\n".join(lines) + ("\n" if lines else "")


def deserialize_questions(text):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    qs = []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError:
            raise ParseError(f"malformed question record {len(qs) + 1}") from None
        qs.append(question_from_record(rec))
    return QuestionSet(questions=tuple(qs))


# ---------------------------------------------------------------------------
# prompt rendering

_PROMPT_HEAD = """\
You are a programming expert.
Your task is to analyze the Python code and answer the questions by simulating the execution step by step.

Here is the code content:
"""

_PROMPT_GUIDELINES = """\
Guidelines for "next statement" questions:
- Determine the next line executed after the given statement.
- CRITICAL: Your answer MUST be the exact, verbatim source code of the next line, copied character-for-character, including indentation.
- Do NOT include line numbers, quotes, backticks, comments, or any extra words.

Guidelines for "type & value" questions:
- STRICT FORMAT: value; type (Exactly one semicolon and one space).
- Example: 1; int   'hello'; str   [1, 2]; list

ABSOLUTE FORMAT RULES (MUST FOLLOW):
- Output all answers one per line and in the listed order.
- For "next statement" answers: output ONLY the code statement string. Do not output line numbers!
"""


def masked_listing_lines(program, tree=None):
    """Source lines with the driver assertion's expected value replaced by
    the ???? placeholder."""
    if tree is None:
        tree = syntax.parse_source(program.text)
    lines = list(program.lines)
    if lines and lines[-1] == "":
        lines.pop()
    driver = interp.find_driver(tree, program.entry_point)
    if driver is not None and driver.kind == "assert" \
            and driver.test.kind == "compare" and driver.test.ops == ["=="]:
        comparator = driver.test.comparators[-1]
        idx = driver.line - 1
        if 0 <= idx < len(lines):
            lines[idx] = lines[idx][: comparator.col] + "????"
    return lines


def masked_driver_text(program, entry_call=None, tree=None):
    """The masked assertion as shown to a solver: 'assert CALL == ????'."""
    if tree is None:
        tree = syntax.parse_source(program.text)
    lines = masked_listing_lines(program, tree)
    driver = interp.find_driver(tree, program.entry_point)
    if driver is not None and driver.kind == "assert" and "????" in lines[driver.line - 1]:
        return lines[driver.line - 1].strip()
    call = entry_call if entry_call is not None else f"{program.entry_point}()"
    return f"assert {call} == ????"


def render_prompt(program, qset, tree=None):
    if tree is None:
        tree = syntax.parse_source(program.text)
    listing = "\n".join(f"{n}\t{line}"
                        for n, line in enumerate(masked_listing_lines(program, tree), 1))
    numbered = ["Question1: Fill the assertion statement."]
    for i, q in enumerate(qset.questions, 2):
        numbered.append(f"Question{i}: {q.text}")
    n_total = 1 + len(qset.questions)
    parts = [
        _PROMPT_HEAD + listing,
        "Here are the questions:\n" + "\n".join(numbered),
        _PROMPT_GUIDELINES,
        ("Format your response strictly as follows:\n"
         "<reasoning>\n"
         "your step-by-step reasoning here\n"
         "</reasoning>\n"
         "<answer>\n"
         "Answer for question1\n"
         "...\n"
         f"Answer for question{n_total}\n"
         "</answer>"),
    ]
    return "\n\n".join(parts) + "\n"
