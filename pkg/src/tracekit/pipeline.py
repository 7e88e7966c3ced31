"""Dataset-construction operations.

Covers the offline steps between raw program corpora and scorable
instances: type-aware input mutation, execution and difficulty filtering
behind a pluggable solver oracle, cosine-similarity contamination scanning
over precomputed embedding vectors, corpus statistics, and construction of
library-involved output-prediction cases from docstring examples.
"""

import hashlib
import json
import random
import re
import shlex
import statistics
import subprocess
from dataclasses import dataclass

import numpy as np

from . import interp, rewards, syntax
from .errors import ConfigError, LexError, ParseError

MUTATION_RETRY_FACTOR = 10
DEFAULT_TRIALS = 10
DEFAULT_MAX_PASS = 3
DEFAULT_THRESHOLD = 0.95
_MUTATE_DEPTH_CAP = 3


@dataclass(frozen=True)
class DatasetInstance:
    id: str
    code: str
    call: str
    expected: str            # rendered return value
    provenance: str = "raw"  # raw | mutated
    level: int = 0

    def load(self):
        return syntax.load_program(self.code)


def instance_to_record(inst):
    return {"id": inst.id, "code": inst.code, "call": inst.call,
            "expected": inst.expected, "provenance": inst.provenance,
            "level": inst.level}


def instance_from_record(rec):
    try:
        return DatasetInstance(id=rec["id"], code=rec["code"],
                               call=rec["call"],
                               expected=rec.get("expected", ""),
                               provenance=rec.get("provenance", "raw"),
                               level=rec.get("level", 0))
    except (KeyError, TypeError):
        raise ParseError(f"malformed instance record: {rec!r}") from None


def serialize_instances(instances):
    lines = [json.dumps(instance_to_record(i), ensure_ascii=False)
             for i in instances]
    return "\n".join(lines) + ("\n" if lines else "")


def deserialize_instances(text):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    out = []
    for raw in text.splitlines():
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError:
            raise ParseError(
                f"malformed instance record {len(out) + 1}") from None
        out.append(instance_from_record(rec))
    return out


# ---------------------------------------------------------------------------
# input mutation

@dataclass(frozen=True)
class ValuePool:
    integers: tuple
    strings: tuple


def load_pool(text):
    try:
        obj = json.loads(text)
        integers = tuple(obj["integers"])
        strings = tuple(obj["strings"])
    except (json.JSONDecodeError, KeyError, TypeError):
        raise ConfigError(
            'pool file must be JSON {"integers": [...], "strings": [...]}'
        ) from None
    if not all(isinstance(v, int) and not isinstance(v, bool)
               for v in integers):
        raise ConfigError("pool integers must be plain ints")
    if not all(isinstance(v, str) for v in strings):
        raise ConfigError("pool strings must be strings")
    return ValuePool(integers=integers, strings=strings)


def _grown_elements(templates, pool, rng, depth):
    extras = []
    for _ in range(rng.randint(1, 3)):
        if templates:
            template = templates[rng.randrange(len(templates))]
            extras.append(_mutate_value(template, pool, rng, depth + 1))
        else:
            extras.append(rng.choice(pool.integers))
    return extras


def _mutate_value(v, pool, rng, depth=0):
    if isinstance(v, bool):
        return rng.choice((False, True))
    if isinstance(v, int):
        return rng.choice(pool.integers)
    if isinstance(v, float):
        return float(rng.choice(pool.integers))
    if isinstance(v, str):
        # replacement and extension both keep length nondecreasing
        longer = [s for s in pool.strings if len(s) >= len(v)]
        if longer and rng.random() < 0.7:
            return rng.choice(longer)
        return v + rng.choice(pool.strings)
    if v is None or depth >= _MUTATE_DEPTH_CAP:
        return v
    if isinstance(v, list):
        return list(v) + _grown_elements(list(v), pool, rng, depth)
    if isinstance(v, tuple):
        return tuple(v) + tuple(_grown_elements(list(v), pool, rng, depth))
    if isinstance(v, set):
        # canonical member order keeps draws independent of hash seeding
        out = set(v)
        templates = interp.canonical_set_order(v)
        target = len(v) + rng.randint(1, 3)
        for _ in range(20):
            if len(out) >= target:
                break
            extras = _grown_elements(templates or [], pool, rng, depth)
            for e in extras:
                try:
                    out.add(e)
                except TypeError:
                    pass
        return out
    if isinstance(v, dict):
        out = dict(v)
        keys = list(v.keys())
        values = list(v.values())
        for _ in range(rng.randint(1, 3)):
            for _attempt in range(10):
                if keys:
                    key = _mutate_value(keys[rng.randrange(len(keys))],
                                        pool, rng, depth + 1)
                else:
                    key = rng.choice(pool.integers)
                try:
                    fresh = key not in out
                except TypeError:
                    continue
                if fresh:
                    if values:
                        template = values[rng.randrange(len(values))]
                        out[key] = _mutate_value(template, pool, rng,
                                                 depth + 1)
                    else:
                        out[key] = rng.choice(pool.integers)
                    break
        return out
    return v


def render_call(name, args, kwargs=()):
    parts = [interp.render_value(a) for a in args]
    parts += [f"{k}={interp.render_value(v)}" for k, v in kwargs]
    return f"{name}({', '.join(parts)})"


def _rewrite_driver(code, program, tree, new_call, expected_text):
    driver = interp.find_driver(tree, program.entry_point)
    if driver is None or driver.kind != "assert" \
            or driver.test.kind != "compare" or driver.test.ops != ["=="]:
        return code
    lines = code.split("\n")
    lines[driver.line - 1] = f"assert {new_call} == {expected_text}"
    return "\n".join(lines)


def mutate_inputs(instance, pool, count, seed=0, limits=None):
    """Deterministic rule-based argument mutation; every surviving mutant
    re-executes ok and carries its own expected output."""
    if not pool.integers or not pool.strings:
        raise ConfigError("mutation needs non-empty integer and string pools")
    if count < 1:
        return []
    program, tree = instance.load()
    name, args, kwargs = interp.parse_entry_call(instance.call)
    rng = random.Random(seed)
    out = []
    seen = {instance.call}
    attempts = 0
    budget = count * MUTATION_RETRY_FACTOR + MUTATION_RETRY_FACTOR
    while len(out) < count and attempts < budget:
        attempts += 1
        new_args = [_mutate_value(a, pool, rng) for a in args]
        new_kwargs = [(k, _mutate_value(v, pool, rng)) for k, v in kwargs]
        call = render_call(name, new_args, new_kwargs)
        if call in seen:
            continue
        result = interp.execute(program, tree, call, limits=limits,
                                trace_enabled=False)
        if result.status != "ok":
            continue
        seen.add(call)
        code = _rewrite_driver(instance.code, program, tree, call,
                               result.rendered_return)
        out.append(DatasetInstance(id=f"{instance.id}-m{len(out) + 1}",
                                   code=code, call=call,
                                   expected=result.rendered_return,
                                   provenance="mutated",
                                   level=instance.level))
    return out


# ---------------------------------------------------------------------------
# filtering

@dataclass(frozen=True)
class FilterDecision:
    keep: bool
    reason: str | None = None
    pass_count: int | None = None


def filter_execution(instance, limits=None):
    try:
        program, tree = instance.load()
    except (LexError, ParseError):
        return FilterDecision(keep=False, reason="parse-error")
    try:
        result = interp.execute(program, tree, instance.call, limits=limits,
                                trace_enabled=False)
    except ParseError:
        return FilterDecision(keep=False, reason="parse-error")
    if result.status == "ok":
        return FilterDecision(keep=True)
    return FilterDecision(keep=False, reason=result.status)


def masked_assertion(call):
    return f"assert {call} == ????"


def _call_from_masked(masked):
    text = masked.strip()
    if text.startswith("assert "):
        text = text[len("assert "):]
    if text.endswith("== ????"):
        text = text[: -len("== ????")].rstrip()
    return text


class SolverOracle:
    """Predicts an output literal for (code, masked assertion). A given
    (name, seed, instance key, trial) must be deterministic."""

    name = "oracle"

    def predict(self, code, masked_call, instance_key, trial):
        raise NotImplementedError


class AlwaysCorrectOracle(SolverOracle):
    name = "always-correct"

    def __init__(self, limits=None):
        self.limits = limits

    def predict(self, code, masked_call, instance_key, trial):
        try:
            program, tree = syntax.load_program(code)
            result = interp.execute(program, tree,
                                    _call_from_masked(masked_call),
                                    limits=self.limits, trace_enabled=False)
        except (LexError, ParseError):
            return None
        return result.rendered_return if result.status == "ok" else None


class AlwaysWrongOracle(SolverOracle):
    name = "always-wrong"

    def predict(self, code, masked_call, instance_key, trial):
        return "'__wrong__'"


class BernoulliOracle(SolverOracle):
    """Answers correctly with probability p, decided by a keyed hash so
    trials are reproducible run to run."""

    def __init__(self, p, seed=0, limits=None, name=None):
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"bernoulli rate must lie in [0, 1], got {p}")
        self.p = p
        self.seed = seed
        self.name = name or f"bernoulli:{p:g}"
        self.correct = AlwaysCorrectOracle(limits=limits)

    def predict(self, code, masked_call, instance_key, trial):
        key = f"{self.name}|{self.seed}|{instance_key}|{trial}"
        digest = hashlib.sha256(key.encode("utf-8")).hexdigest()
        u = int(digest[:16], 16) / 2 ** 64
        if u < self.p:
            return self.correct.predict(code, masked_call, instance_key, trial)
        return "'__wrong__'"


class CommandOracle(SolverOracle):
    """Spawns a child per trial: one JSON request line in, one predicted
    literal line out; nonzero exit or timeout counts as a non-pass."""

    def __init__(self, argv, timeout=30.0):
        if not argv:
            raise ConfigError("command oracle needs a command")
        self.argv = list(argv)
        self.timeout = timeout
        self.name = "cmd:" + " ".join(argv)

    def predict(self, code, masked_call, instance_key, trial):
        request = json.dumps({"code": code, "masked_call": masked_call},
                             ensure_ascii=False)
        try:
            proc = subprocess.run(self.argv, input=request + "\n",
                                  capture_output=True, text=True,
                                  timeout=self.timeout)
        except (OSError, subprocess.TimeoutExpired):
            return None
        if proc.returncode != 0:
            return None
        lines = proc.stdout.splitlines()
        return lines[0] if lines else None


def make_oracle(spec, seed=0, limits=None):
    if spec == "always-correct":
        return AlwaysCorrectOracle(limits=limits)
    if spec == "always-wrong":
        return AlwaysWrongOracle()
    if spec.startswith("bernoulli:"):
        try:
            p = float(spec[len("bernoulli:"):])
        except ValueError:
            raise ConfigError(f"bad bernoulli rate in {spec!r}") from None
        return BernoulliOracle(p, seed=seed, limits=limits, name=spec)
    if spec.startswith("cmd:"):
        return CommandOracle(shlex.split(spec[len("cmd:"):]))
    raise ConfigError(f"unknown oracle {spec!r}")


def filter_difficulty(instance, oracle, trials=DEFAULT_TRIALS,
                      max_pass=DEFAULT_MAX_PASS, limits=None):
    """Keep instances the oracle solves at most max_pass times in trials."""
    if trials < 1:
        raise ConfigError(f"difficulty filtering needs trials >= 1, got {trials}")
    try:
        expected = interp.parse_literal(instance.expected)
    except ParseError:
        program, tree = instance.load()
        result = interp.execute(program, tree, instance.call, limits=limits,
                                trace_enabled=False)
        if result.status != "ok":
            raise ConfigError(
                f"instance {instance.id} does not execute ok") from None
        expected = result.return_value
    masked = masked_assertion(instance.call)
    key = f"{instance.id}|{instance.call}"
    passes = 0
    for trial in range(trials):
        prediction = oracle.predict(instance.code, masked, key, trial)
        if prediction is None:
            continue
        if rewards.reward_io(prediction, expected) == 1:
            passes += 1
    return FilterDecision(keep=passes <= max_pass, pass_count=passes,
                          reason=None if passes <= max_pass else "too-easy")


# ---------------------------------------------------------------------------
# contamination scan

@dataclass(frozen=True)
class ContaminationReport:
    threshold: float
    sims: tuple          # per train row: float, or None for skipped rows
    flagged: tuple       # train row indices with similarity > threshold
    skipped_train: tuple
    skipped_bench: tuple


def contamination_scan(train_vectors, bench_vectors,
                       threshold=DEFAULT_THRESHOLD):
    train = np.asarray(train_vectors, dtype=np.float64)
    bench = np.asarray(bench_vectors, dtype=np.float64)
    if train.ndim != 2 or bench.ndim != 2:
        raise ConfigError("vector sets must be 2-D")
    if train.shape[1] != bench.shape[1]:
        raise ConfigError(
            f"dimension mismatch: train {train.shape[1]} vs bench {bench.shape[1]}")
    train_norms = np.linalg.norm(train, axis=1)
    bench_norms = np.linalg.norm(bench, axis=1)
    skipped_train = tuple(int(i) for i in np.nonzero(train_norms == 0.0)[0])
    skipped_bench = tuple(int(i) for i in np.nonzero(bench_norms == 0.0)[0])
    bench_ok = bench_norms != 0.0
    if not bench_ok.any():
        raise ConfigError("no usable benchmark vectors")
    bench_unit = bench[bench_ok] / bench_norms[bench_ok, None]
    sims = []
    flagged = []
    for i in range(train.shape[0]):
        if train_norms[i] == 0.0:
            sims.append(None)
            continue
        row = train[i] / train_norms[i]
        best = float(np.max(bench_unit @ row))
        sims.append(best)
        if best > threshold:
            flagged.append(i)
    return ContaminationReport(threshold=threshold, sims=tuple(sims),
                               flagged=tuple(flagged),
                               skipped_train=skipped_train,
                               skipped_bench=skipped_bench)


def read_vectors(text):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ConfigError("empty vector file")
    head = lines[0].split()
    if len(head) != 2:
        raise ConfigError("vector file header must be 'n dim'")
    try:
        n, dim = int(head[0]), int(head[1])
    except ValueError:
        raise ConfigError("vector file header must be 'n dim'") from None
    if len(lines) - 1 != n:
        raise ConfigError(f"vector file declares {n} rows, has {len(lines) - 1}")
    rows = []
    for idx, raw in enumerate(lines[1:], 1):
        parts = raw.split()
        if len(parts) != dim:
            raise ConfigError(f"vector row {idx} has {len(parts)} values, "
                              f"expected {dim}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ConfigError(f"vector row {idx} is not numeric") from None
    return np.array(rows, dtype=np.float64).reshape(n, dim)


def write_vectors(matrix):
    arr = np.asarray(matrix, dtype=np.float64)
    lines = [f"{arr.shape[0]} {arr.shape[1]}"]
    for row in arr:
        lines.append(" ".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# corpus statistics

REFERENCE_AGGREGATES = {
    "note": ("reference corpus aggregates, echoed for comparison only; "
             "never asserted against local data"),
    "loc": {"mean": 9.93, "median": 9},
    "ast_depth": {"mean": 9.74, "median": 10},
    "cf_nesting_depth": {"mean": 2.86, "median": 3},
    "level_shares_pct": {"1": 20.9, "2": 14.2, "3": 64.9},
    "questions_per_program": {"total": 7.8, "cf": 3.2, "df": 4.6},
}


def corpus_stats(records):
    """Aggregate difficulty, complexity, argument-type, and level stats over
    instance records (dicts; pass_count optional)."""
    if not records:
        raise ConfigError("empty corpus")
    hist = {str(i): 0 for i in range(11)}
    invalid_pass = 0
    metrics = {"loc": [], "ast_depth": [], "branch_count": [],
               "loop_count": [], "cf_nesting_depth": []}
    parse_failures = 0
    type_counts = {}
    level_counts = {}
    for rec in records:
        pc = rec.get("pass_count")
        if pc is not None:
            if isinstance(pc, int) and 0 <= pc <= 10:
                hist[str(pc)] += 1
            else:
                invalid_pass += 1
        try:
            tree = syntax.parse_source(rec["code"])
            report = syntax.measure_complexity(tree)
        except (KeyError, LexError, ParseError):
            parse_failures += 1
        else:
            metrics["loc"].append(report.loc)
            metrics["ast_depth"].append(report.ast_depth)
            metrics["branch_count"].append(report.branch_count)
            metrics["loop_count"].append(report.loop_count)
            metrics["cf_nesting_depth"].append(report.cf_nesting_depth)
        tag = rec.get("type")
        if tag is None:
            try:
                _, args, kwargs = interp.parse_entry_call(rec.get("call", ""))
                if args:
                    tag = interp.type_name(args[0])
                elif kwargs:
                    tag = interp.type_name(kwargs[0][1])
                else:
                    tag = "none"
            except ParseError:
                tag = "unknown"
        type_counts[tag] = type_counts.get(tag, 0) + 1
        level = rec.get("level")
        if level is not None:
            level_counts[str(level)] = level_counts.get(str(level), 0) + 1
    complexity = {}
    for name, values in metrics.items():
        if values:
            complexity[name] = {"mean": statistics.fmean(values),
                                "median": statistics.median(values)}
    n_level = sum(level_counts.values())
    level_shares = {k: level_counts[k] / n_level
                    for k in sorted(level_counts)} if n_level else {}
    return {
        "n": len(records),
        "parse_failures": parse_failures,
        "difficulty_histogram": hist,
        "invalid_pass_counts": invalid_pass,
        "complexity": complexity,
        "type_distribution": dict(sorted(type_counts.items())),
        "level_counts": dict(sorted(level_counts.items())),
        "level_shares": level_shares,
        "reference": REFERENCE_AGGREGATES,
    }


# ---------------------------------------------------------------------------
# library-involved output-prediction cases

@dataclass(frozen=True)
class ExampleBlock:
    statements: tuple
    stdout: str


@dataclass(frozen=True)
class CaseResult:
    case: dict | None
    rejected: str | None

    @property
    def accepted(self):
        return self.rejected is None


def extract_example(prompt_text):
    """Pull the last '>>> statements / echoed output' block out of a
    docstring-style prompt. Returns None when no complete block exists."""
    lines = (prompt_text or "").splitlines()
    best = None
    i = 0
    while i < len(lines):
        stripped = lines[i].lstrip()
        if not stripped.startswith(">>> "):
            i += 1
            continue
        statements = []
        while i < len(lines) and lines[i].lstrip().startswith(">>> "):
            statements.append(lines[i].lstrip()[4:])
            i += 1
        outputs = []
        while i < len(lines):
            out = lines[i].strip()
            if not out or out.startswith(">>>") or out.startswith('"""') \
                    or out.startswith("'''"):
                break
            outputs.append(out)
            i += 1
        if statements and outputs:
            best = ExampleBlock(statements=tuple(statements),
                                stdout="\n".join(outputs))
    return best


def build_library_io_case(example, solution, blacklist=None,
                          prompt_text=None):
    """Assemble an output-prediction case, rejecting nondeterministic or
    external-resource tasks via the keyword blacklist."""
    if example is None or not example.statements or not example.stdout.strip():
        return CaseResult(case=None, rejected="no-example")
    to_scan = [solution, "\n".join(example.statements)]
    if prompt_text:
        to_scan.append(prompt_text)
    for text in to_scan:
        try:
            verdict = syntax.scan_blacklist(text, blacklist)
        except LexError:
            return CaseResult(case=None, rejected="lex-error")
        if verdict.flagged:
            return CaseResult(case=None, rejected="blacklist")
    case = {"source": solution, "driver": list(example.statements),
            "expected": example.stdout, "task": "fill-the-assertion"}
    return CaseResult(case=case, rejected=None)


_PRINT_RE = re.compile(r"print\((.+)\)$")


def render_case_problem(case):
    driver = list(case["driver"])
    if driver:
        match = _PRINT_RE.fullmatch(driver[-1].strip())
        if match:
            driver[-1] = f"assert {match.group(1)} == ????"
    parts = ["Your task is to fill the assert statement.", "",
             case["source"].rstrip("\n"), "", "\n".join(driver)]
    return "\n".join(parts) + "\n"
