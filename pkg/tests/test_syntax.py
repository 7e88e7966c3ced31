"""Tokenizer, parser, complexity metrics, constraints, blacklist scan."""

import pytest

from tracekit import errors, syntax


def parse(text):
    return syntax.parse_source(text)


# ---------------------------------------------------------------------------
# tokenizer

def test_tokenize_basic_stream():
    toks = syntax.tokenize_source("x = 1 + 2\n")
    kinds = [t.kind for t in toks]
    assert "NAME" in kinds and "NUMBER" in kinds and "OP" in kinds


def test_tokenize_rejects_broken_source():
    with pytest.raises(errors.LexError):
        syntax.tokenize_source("def f(:\n")


def test_tokenize_string_contents_are_single_tokens():
    toks = syntax.tokenize_source('s = "a.b.c"\n')
    strings = [t for t in toks if t.kind == "STRING"]
    assert len(strings) == 1


# ---------------------------------------------------------------------------
# parser: acceptance

def test_parse_function_and_driver():
    tree = parse("def f(x):\n    return x + 1\nassert f(1) == 2\n")
    kinds = [n.kind for n in tree.body]
    assert kinds == ["func", "assert"]


def test_parse_if_elif_else_arm_lines():
    src = ("def f(x):\n"
           "    if x > 0:\n"
           "        return 1\n"
           "    elif x < 0:\n"
           "        return -1\n"
           "    else:\n"
           "        return 0\n")
    tree = parse(src)
    ifnode = tree.body[0].body[0]
    assert ifnode.kind == "if"
    assert [arm.line for arm in ifnode.arms] == [2, 4]
    assert ifnode.orelse[0].line == 7


def test_parse_comprehensions():
    tree = parse("def f(xs):\n"
                 "    a = [x * 2 for x in xs if x > 0]\n"
                 "    b = {x for x in xs}\n"
                 "    c = {x: x + 1 for x in xs}\n"
                 "    return a, b, c\n")
    assert tree is not None


def test_parse_slice_and_subscript():
    tree = parse("def f(xs):\n    return xs[1:3] + xs[::-1] + [xs[0]]\n")
    assert tree is not None


def test_parse_chained_compare_and_boolops():
    tree = parse("def f(x):\n    return 0 < x < 10 and x != 5 or not x\n")
    assert tree is not None


# ---------------------------------------------------------------------------
# parser: rejection with positions

@pytest.mark.parametrize("src,construct", [
    ("import os\n", "import"),
    ("from os import path\n", "import"),
    ("class A:\n    pass\n", "class"),
    ("def f():\n    try:\n        pass\n    except:\n        pass\n", "try"),
    ("def f():\n    with open('x') as h:\n        pass\n", "with"),
    ("f = lambda x: x\n", "lambda"),
    ("def f():\n    yield 1\n", "yield"),
    ("def f(*args):\n    return args\n", "star"),
    ("def f(**kw):\n    return kw\n", "star"),
    ("async def f():\n    return 1\n", "async"),
    ("def f():\n    global x\n", "global"),
    ("x = f'{1}'\n", "f-string"),
    ("def f(x):\n    del x\n", "del"),
])
def test_parse_rejects_unsupported(src, construct):
    with pytest.raises(errors.ParseError):
        parse(src)


def test_parse_error_carries_line():
    try:
        parse("def f(x):\n    return x\nimport os\n")
    except errors.ParseError as exc:
        assert exc.line == 3
    else:
        pytest.fail("expected ParseError")


def test_break_outside_loop_rejected():
    with pytest.raises(errors.ParseError):
        parse("def f():\n    break\n")
    with pytest.raises(errors.ParseError):
        parse("def f():\n    continue\n")


def test_break_inside_loop_ok():
    tree = parse("def f(xs):\n"
                 "    for x in xs:\n"
                 "        if x:\n"
                 "            break\n"
                 "    return 1\n")
    assert tree is not None


# ---------------------------------------------------------------------------
# load_program

def test_load_program_infers_entry_point():
    program, tree = syntax.load_program(
        "def helper(x):\n    return x\n"
        "def main(x):\n    return helper(x)\n"
        "assert main(3) == 3\n")
    assert program.entry_point == "main"


def test_load_program_single_function():
    program, _ = syntax.load_program("def only(x):\n    return x\n")
    assert program.entry_point == "only"


def test_load_program_requires_a_function():
    with pytest.raises(errors.ParseError):
        syntax.load_program("x = 1\n")


# ---------------------------------------------------------------------------
# complexity

def test_complexity_flat_function():
    _, tree = syntax.load_program("def f(x):\n    return x + 1\n")
    rep = syntax.measure_complexity(tree)
    assert rep.loc == 2
    assert rep.branch_count == 0
    assert rep.loop_count == 0
    assert rep.cf_nesting_depth == 1


def test_complexity_elif_counts_two_branches():
    _, tree = syntax.load_program(
        "def f(x):\n"
        "    if x > 0:\n"
        "        return 1\n"
        "    elif x < 0:\n"
        "        return -1\n"
        "    return 0\n")
    rep = syntax.measure_complexity(tree)
    assert rep.branch_count == 2
    assert rep.cf_nesting_depth == 2


def test_complexity_comprehension_counts_as_loop():
    _, tree = syntax.load_program("def f(xs):\n    return [x for x in xs]\n")
    rep = syntax.measure_complexity(tree)
    assert rep.loop_count == 1


def test_complexity_elif_does_not_deepen_nesting():
    flat = ("def f(x):\n"
            "    if x == 1:\n"
            "        return 1\n"
            "    elif x == 2:\n"
            "        return 2\n"
            "    elif x == 3:\n"
            "        return 3\n"
            "    return 0\n")
    _, tree = syntax.load_program(flat)
    assert syntax.measure_complexity(tree).cf_nesting_depth == 2


def test_complexity_nested_loops():
    _, tree = syntax.load_program(
        "def f(n):\n"
        "    total = 0\n"
        "    for i in range(n):\n"
        "        for j in range(n):\n"
        "            if i < j:\n"
        "                total = total + 1\n"
        "    return total\n")
    rep = syntax.measure_complexity(tree)
    assert rep.loop_count == 2
    assert rep.branch_count == 1
    assert rep.cf_nesting_depth == 4


# ---------------------------------------------------------------------------
# constraints

def test_constraint_file_round_trip():
    spec = syntax.parse_constraint_file(
        "level = 1\ntype = str\nmethod = strip\n")
    assert spec.level == 1
    assert spec.required_type == "str"
    assert spec.required_method == "strip"


def test_constraint_file_rejects_unknown_keys():
    with pytest.raises(errors.ConfigError):
        syntax.parse_constraint_file("level = 1\ncolor = red\n")


def test_constraint_file_requires_level():
    with pytest.raises(errors.ConfigError):
        syntax.parse_constraint_file("type = str\n")


def test_constraint_unknown_method_rejected():
    with pytest.raises(errors.ConfigError):
        syntax.parse_constraint_file("level = 1\ntype = str\nmethod = fly\n")


def test_level1_requires_flat_single_call():
    _, tree = syntax.load_program(
        "def f(s):\n    return s.strip()\nassert f(' a ') == 'a'\n")
    spec = syntax.parse_constraint_file("level = 1\nmethod = strip\n")
    assert syntax.validate_constraints(tree, spec).passed

    _, loopy = syntax.load_program(
        "def f(s):\n"
        "    for c in s:\n"
        "        s = s.strip(c)\n"
        "    return s\n")
    report = syntax.validate_constraints(loopy, spec)
    assert not report.passed
    assert any(name == "no-control-flow" for name, ok, _ in report.rules if not ok)


def test_level2_requires_shallow_control_flow():
    _, tree = syntax.load_program(
        "def f(s):\n"
        "    out = s.strip()\n"
        "    for c in out:\n"
        "        out = out.replace(c, c.upper())\n"
        "    return out\n")
    spec = syntax.parse_constraint_file("level = 2\n")
    assert syntax.validate_constraints(tree, spec).passed


def test_level3_requires_nesting_within_bound():
    _, tree = syntax.load_program(open("tests/data/strip_loop.py").read())
    spec = syntax.parse_constraint_file("level = 3\nmax_cf_depth = 3\n")
    assert syntax.validate_constraints(tree, spec).passed

    tight = syntax.parse_constraint_file("level = 3\nmax_cf_depth = 2\n")
    assert not syntax.validate_constraints(tree, tight).passed


# ---------------------------------------------------------------------------
# blacklist

def test_blacklist_matches_bare_and_dotted():
    verdict = syntax.scan_blacklist(
        "import random\nx = random.choice([1])\n")
    assert verdict.flagged
    assert "random" in verdict.matches
    assert "random.choice" in verdict.matches


def test_blacklist_ignores_string_literals():
    verdict = syntax.scan_blacklist("s = 'random.choice'\n")
    assert not verdict.flagged


def test_blacklist_attribute_entries_match_any_receiver():
    verdict = syntax.scan_blacklist("data = handle.read()\n")
    assert verdict.flagged
    assert ".read" in verdict.matches


def test_blacklist_bare_entry_needs_chain_head():
    # pandas.read_csv should not trip the bare "csv" entry
    verdict = syntax.scan_blacklist("df = pandas.read_csv('x')\n")
    assert "csv" not in verdict.matches
    assert "pandas.read_csv" in verdict.matches


def test_blacklist_custom_file():
    bl = syntax.load_blacklist("eval  # dynamic\n\nexec\n")
    assert bl == ("eval", "exec")
    assert syntax.scan_blacklist("x = eval('1')\n", bl).flagged
    assert not syntax.scan_blacklist("x = 1\n", bl).flagged
