"""Tree-walking interpreter for the subset, with fuel budget and line tracing.

Values are the nine built-in kinds held as native objects, so equality,
hashing and method semantics come from the host runtime. Set iteration and
rendering are canonicalized (sorted by rendered member text); this is the one
deliberate divergence from the reference language and the reason oracle
comparisons treat sets as multisets.
"""

import ast
import hashlib
import operator
from dataclasses import dataclass

from . import syntax
from .errors import (
    FuelExhausted,
    InterpRuntimeError,
    OutputOverflow,
    ParseError,
)
from .tracing import StateSnapshot, Trace, TraceStep

DEFAULT_FUEL = 100_000
DEFAULT_MAX_OUTPUT = 4_096
DEFAULT_MAX_RENDER = 2_048

# hard cap on materialized sequence sizes (list * n, list(range(...)), zip, ...)
_SEQ_CAP = 10_000_000
_CALL_DEPTH_CAP = 200


@dataclass(frozen=True)
class ExecutionLimits:
    fuel: int = DEFAULT_FUEL
    max_output_chars: int = DEFAULT_MAX_OUTPUT
    max_value_render_chars: int = DEFAULT_MAX_RENDER

    def __post_init__(self):
        if self.fuel <= 0 or self.max_output_chars <= 0 or self.max_value_render_chars <= 0:
            raise ValueError("execution limits must be positive")


@dataclass(frozen=True)
class ExecutionResult:
    status: str                  # ok | runtime-error | fuel-exhausted | output-overflow
    return_value: object
    rendered_return: str | None
    stdout: str
    trace: Trace
    error: tuple | None          # (kind, message, line)

    @property
    def ok(self):
        return self.status == "ok"


class FunctionValue:
    def __init__(self, name, params, defaults, body, assigned):
        self.name = name
        self.params = params
        self.defaults = defaults  # values for the trailing params
        self.body = body
        self.assigned = assigned  # statically assigned local names


class BuiltinFunction:
    def __init__(self, name):
        self.name = name


class TypeRef:
    def __init__(self, pytype):
        self.pytype = pytype

    def __eq__(self, other):
        return isinstance(other, TypeRef) and self.pytype is other.pytype

    def __hash__(self):
        return hash(self.pytype)


_TYPE_NAMES = {
    type(None): "NoneType", bool: "bool", int: "int", float: "float",
    str: "str", list: "list", tuple: "tuple", set: "set", dict: "dict",
    range: "range",
}


def type_name(v):
    if isinstance(v, TypeRef):
        return "type"
    if isinstance(v, FunctionValue):
        return "function"
    if isinstance(v, BuiltinFunction):
        return "builtin_function_or_method"
    return _TYPE_NAMES[type(v)]


def render_value(v, limit=None):
    """Canonical text per the reference language's repr convention; set
    members sorted by their rendered text. Raises OutputOverflow when the
    result would exceed limit."""
    text = _render(v)
    if limit is not None and len(text) > limit:
        raise OutputOverflow(what="rendered value")
    return text


def _render(v):
    if v is None or isinstance(v, (bool, int, float, str, range)):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_render(e) for e in v) + "]"
    if isinstance(v, tuple):
        if len(v) == 1:
            return "(" + _render(v[0]) + ",)"
        return "(" + ", ".join(_render(e) for e in v) + ")"
    if isinstance(v, set):
        if not v:
            return "set()"
        return "{" + ", ".join(sorted(_render(e) for e in v)) + "}"
    if isinstance(v, dict):
        return "{" + ", ".join(_render(k) + ": " + _render(val)
                               for k, val in v.items()) + "}"
    if isinstance(v, TypeRef):
        return f"<class '{_TYPE_NAMES.get(v.pytype, v.pytype.__name__)}'>"
    if isinstance(v, FunctionValue):
        return f"<function {v.name}>"
    if isinstance(v, BuiltinFunction):
        return f"<built-in function {v.name}>"
    raise AssertionError(f"unrenderable value {type(v)!r}")


def parse_literal(text):
    """Parse a literal display (the nine kinds, containers of literals,
    signed numbers) into a native value. Raises ParseError otherwise."""
    try:
        mod = ast.parse(text.strip(), mode="eval")
    except (SyntaxError, ValueError, MemoryError):
        raise ParseError("not a literal") from None
    return _literal_from_ast(mod.body)


def _literal_from_ast(a):
    if isinstance(a, ast.Constant):
        v = a.value
        if v is None or isinstance(v, (bool, int, float, str)):
            return v
        raise ParseError("not a literal")
    if isinstance(a, ast.UnaryOp) and isinstance(a.op, (ast.USub, ast.UAdd)):
        operand = _literal_from_ast(a.operand)
        if isinstance(operand, bool) or not isinstance(operand, (int, float)):
            raise ParseError("not a literal")
        return -operand if isinstance(a.op, ast.USub) else +operand
    if isinstance(a, ast.List):
        return [_literal_from_ast(e) for e in a.elts]
    if isinstance(a, ast.Tuple):
        return tuple(_literal_from_ast(e) for e in a.elts)
    if isinstance(a, ast.Set):
        return set(_literal_from_ast(e) for e in a.elts)
    if isinstance(a, ast.Dict):
        if any(k is None for k in a.keys):
            raise ParseError("not a literal")
        return {_literal_from_ast(k): _literal_from_ast(v)
                for k, v in zip(a.keys, a.values)}
    if isinstance(a, ast.Call) and isinstance(a.func, ast.Name) \
            and a.func.id == "set" and not a.args and not a.keywords:
        return set()
    raise ParseError("not a literal")


def parse_entry_call(text):
    """Parse an entry-call expression; returns (function name, args, kwargs)
    with literal argument values."""
    try:
        mod = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"entry call does not parse: {exc.msg}") from None
    call = mod.body
    if not isinstance(call, ast.Call) or not isinstance(call.func, ast.Name):
        raise ParseError("entry call must be a plain call of the entry function")
    args = []
    for arg in call.args:
        try:
            args.append(_literal_from_ast(arg))
        except ParseError:
            raise ParseError("entry call arguments must be literals") from None
    kwargs = []
    for kw in call.keywords:
        if kw.arg is None:
            raise ParseError("entry call arguments must be literals")
        try:
            kwargs.append((kw.arg, _literal_from_ast(kw.value)))
        except ParseError:
            raise ParseError("entry call arguments must be literals") from None
    return call.func.id, args, kwargs


def default_program_id(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:10]


# ---------------------------------------------------------------------------
# environments

class Env:
    """Scope with the local-if-assigned rule. assigned=None means fully
    dynamic (module scope)."""

    def __init__(self, parent=None, assigned=None):
        self.vars = {}
        self.parent = parent
        self.assigned = assigned

    def lookup(self, name):
        if self.assigned is not None and name in self.assigned:
            if name in self.vars:
                return self.vars[name]
            raise InterpRuntimeError(
                "UnboundLocalError",
                f"local variable {name!r} referenced before assignment")
        if name in self.vars:
            return self.vars[name]
        if self.parent is not None:
            return self.parent.lookup(name)
        builtin = _BUILTIN_ENV.get(name)
        if builtin is not None:
            return builtin
        raise InterpRuntimeError("NameError", f"name {name!r} is not defined")

    def assign(self, name, value):
        self.vars[name] = value


_BUILTIN_TYPES = {"int": int, "float": float, "str": str, "bool": bool,
                  "list": list, "tuple": tuple, "set": set, "dict": dict}
_BUILTIN_ENV = {}
for _name in syntax.BUILTIN_FUNCTIONS:
    if _name in _BUILTIN_TYPES:
        _BUILTIN_ENV[_name] = TypeRef(_BUILTIN_TYPES[_name])
    else:
        _BUILTIN_ENV[_name] = BuiltinFunction(_name)


def _collect_assigned(stmts):
    """Names statically bound by the statements (params added separately).
    Comprehension targets live in their own scope and are excluded."""
    names = set()

    def target_names(node):
        if node.kind == "name":
            names.add(node.id)
        elif node.kind == "tuple":
            for e in node.elts:
                target_names(e)
        # subscript targets bind no name

    def visit(stmt):
        k = stmt.kind
        if k == "assign":
            for t in stmt.targets:
                target_names(t)
        elif k == "augassign":
            target_names(stmt.target)
        elif k == "for":
            target_names(stmt.target)
            for s in stmt.body:
                visit(s)
        elif k == "while":
            for s in stmt.body:
                visit(s)
        elif k == "if":
            for arm in stmt.arms:
                for s in arm.body:
                    visit(s)
            for s in stmt.orelse:
                visit(s)
        elif k == "func":
            names.add(stmt.name)

    for s in stmts:
        visit(s)
    return names


# control-flow signals
class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Break(Exception):
    pass


class _Continue(Exception):
    pass


# ---------------------------------------------------------------------------
# interpreter

_BIN_FUNCS = {
    "+": operator.add, "-": operator.sub, "*": operator.mul,
    "/": operator.truediv, "//": operator.floordiv, "%": operator.mod,
    "**": operator.pow, "<<": operator.lshift, ">>": operator.rshift,
    "|": operator.or_, "^": operator.xor, "&": operator.and_,
}
_IBIN_FUNCS = {
    "+": operator.iadd, "-": operator.isub, "*": operator.imul,
    "/": operator.itruediv, "//": operator.ifloordiv, "%": operator.imod,
    "**": operator.ipow, "<<": operator.ilshift, ">>": operator.irshift,
    "|": operator.ior, "^": operator.ixor, "&": operator.iand,
}
_CMP_FUNCS = {
    "==": operator.eq, "!=": operator.ne, "<": operator.lt,
    "<=": operator.le, ">": operator.gt, ">=": operator.ge,
    "is": operator.is_, "is not": operator.is_not,
}

_NATIVE_ERRORS = (
    ZeroDivisionError, TypeError, ValueError, IndexError, KeyError,
    AttributeError, OverflowError, MemoryError, RecursionError,
    ArithmeticError, StopIteration, RuntimeError,
)


class Interp:
    def __init__(self, program, tree, limits=None, trace_enabled=True,
                 program_id=None, entry_call_text=""):
        self.program = program
        self.tree = tree
        self.limits = limits or ExecutionLimits()
        self.trace_enabled = trace_enabled
        self.program_id = program_id or default_program_id(program.text)
        self.entry_call_text = entry_call_text
        self.steps = []
        self.line_counts = {}
        self.out_parts = []
        self.out_len = 0
        self.fuel = self.limits.fuel
        self.module_env = Env()
        self.call_depth = 0
        self.current_line = 0
        self.current_src = ""
        self.current_env = self.module_env

    # -- bookkeeping

    def charge(self, line):
        self.fuel -= 1
        if self.fuel < 0:
            raise FuelExhausted(line)

    def snapshot(self, env, truncate=False):
        pairs = []
        for name, value in env.vars.items():
            if isinstance(value, (FunctionValue, BuiltinFunction)):
                continue
            try:
                val = render_value(value, self.limits.max_value_render_chars)
            except OutputOverflow:
                if not truncate:
                    raise
                val = _render(value)[: self.limits.max_value_render_chars]
            pairs.append((name, val, type_name(value)))
        return StateSnapshot.from_pairs(pairs)

    def step(self, line, src, env, truncate=False):
        if not self.trace_enabled:
            return
        snap = self.snapshot(env, truncate=truncate)
        occ = self.line_counts.get(line, 0) + 1
        self.line_counts[line] = occ
        self.steps.append(TraceStep(t=len(self.steps) + 1, line=line,
                                    occ=occ, stmt=src, state=snap))

    def mark(self, stmt, env):
        self.current_line = stmt.line
        self.current_src = getattr(stmt, "src", "")
        self.current_env = env

    def write_out(self, text):
        self.out_len += len(text)
        if self.out_len > self.limits.max_output_chars:
            raise OutputOverflow(self.current_line, what="captured output")
        self.out_parts.append(text)

    def fail(self, kind, message):
        raise InterpRuntimeError(kind, message, self.current_line)

    def translate(self, exc):
        return InterpRuntimeError(type(exc).__name__, str(exc), self.current_line)

    # -- statements

    def exec_block(self, stmts, env):
        for stmt in stmts:
            self.exec_stmt(stmt, env)

    def exec_stmt(self, stmt, env):
        self.mark(stmt, env)
        k = stmt.kind
        if k in ("if", "while", "for"):
            getattr(self, "exec_" + k)(stmt, env)
            return
        self.charge(stmt.line)
        try:
            if k == "assign":
                value = self.eval_expr(stmt.value, env)
                for target in stmt.targets:
                    self.assign_target(target, value, env)
            elif k == "augassign":
                self.exec_augassign(stmt, env)
            elif k == "exprstmt":
                self.eval_expr(stmt.value, env)
            elif k == "return":
                value = self.eval_expr(stmt.value, env) if stmt.value else None
                self.step(stmt.line, stmt.src, env)
                raise _Return(value)
            elif k == "break":
                self.step(stmt.line, stmt.src, env)
                raise _Break()
            elif k == "continue":
                self.step(stmt.line, stmt.src, env)
                raise _Continue()
            elif k == "pass":
                pass
            elif k == "assert":
                self.exec_assert(stmt, env)
            elif k == "func":
                self.bind_function(stmt, env)
            else:
                raise AssertionError(f"unexpected statement kind {k!r}")
        except _NATIVE_ERRORS as exc:
            raise self.translate(exc) from None
        self.step(stmt.line, stmt.src, env)

    def exec_augassign(self, stmt, env):
        target = stmt.target
        value = self.eval_expr(stmt.value, env)
        ifunc = _IBIN_FUNCS[stmt.op]
        if target.kind == "name":
            current = env.lookup(target.id)
            self.guard_binop(stmt.op, current, value)
            env.assign(target.id, ifunc(current, value))
        else:  # subscript; receiver and index evaluated once
            receiver = self.eval_expr(target.value, env)
            index = self.eval_index(target.index, env)
            current = receiver[index]
            self.guard_binop(stmt.op, current, value)
            receiver[index] = ifunc(current, value)

    def exec_assert(self, stmt, env):
        test = self.eval_expr(stmt.test, env)
        if not test:
            if stmt.msg is not None:
                msg_value = self.eval_expr(stmt.msg, env)
                msg = msg_value if isinstance(msg_value, str) else _render(msg_value)
            else:
                msg = ""
            self.fail("AssertionError", msg)

    def bind_function(self, stmt, env):
        defaults = [self.eval_expr(d, env) for d in stmt.defaults]
        assigned = _collect_assigned(stmt.body) | set(stmt.params)
        env.assign(stmt.name, FunctionValue(stmt.name, stmt.params, defaults,
                                            stmt.body, assigned))

    def exec_if(self, stmt, env):
        for arm in stmt.arms:
            self.mark(arm, env)
            self.charge(arm.line)
            try:
                test = self.eval_expr(arm.test, env)
                truthy = bool(test)
            except _NATIVE_ERRORS as exc:
                raise self.translate(exc) from None
            self.step(arm.line, arm.src, env)
            if truthy:
                self.exec_block(arm.body, env)
                return
        self.exec_block(stmt.orelse, env)

    def exec_while(self, stmt, env):
        while True:
            self.mark(stmt, env)
            self.charge(stmt.line)
            try:
                test = self.eval_expr(stmt.test, env)
                truthy = bool(test)
            except _NATIVE_ERRORS as exc:
                raise self.translate(exc) from None
            self.step(stmt.line, stmt.src, env)
            if not truthy:
                return
            try:
                self.exec_block(stmt.body, env)
            except _Break:
                return
            except _Continue:
                continue

    def exec_for(self, stmt, env):
        self.mark(stmt, env)
        self.charge(stmt.line)
        try:
            iterable = self.eval_expr(stmt.iter, env)
            it = self.make_iterator(iterable)
        except _NATIVE_ERRORS as exc:
            raise self.translate(exc) from None
        first = True
        while True:
            if not first:
                self.mark(stmt, env)
                self.charge(stmt.line)
            first = False
            try:
                try:
                    item = next(it)
                except StopIteration:
                    self.step(stmt.line, stmt.src, env)
                    return
                self.assign_target(stmt.target, item, env)
            except _NATIVE_ERRORS as exc:
                raise self.translate(exc) from None
            self.step(stmt.line, stmt.src, env)
            try:
                self.exec_block(stmt.body, env)
            except _Break:
                return
            except _Continue:
                continue

    # -- assignment

    def assign_target(self, target, value, env):
        k = target.kind
        if k == "name":
            env.assign(target.id, value)
        elif k == "tuple":
            items = list(self.make_iterator(value))
            if len(items) < len(target.elts):
                self.fail("ValueError",
                          f"not enough values to unpack (expected {len(target.elts)}, "
                          f"got {len(items)})")
            if len(items) > len(target.elts):
                self.fail("ValueError",
                          f"too many values to unpack (expected {len(target.elts)})")
            for sub, item in zip(target.elts, items):
                self.assign_target(sub, item, env)
        elif k == "subscript":
            receiver = self.eval_expr(target.value, env)
            index = self.eval_index(target.index, env)
            receiver[index] = value
        else:
            raise AssertionError(f"bad assignment target {k!r}")

    # -- iteration

    def make_iterator(self, v):
        if isinstance(v, list):
            return _live_list_iter(v)
        if isinstance(v, (tuple, str, range)):
            return iter(v)
        if isinstance(v, dict):
            return iter(list(v.keys()))
        if isinstance(v, set):
            return iter(canonical_set_order(v))
        self.fail("TypeError", f"'{type_name(v)}' object is not iterable")

    # -- expressions

    def eval_expr(self, node, env):
        k = node.kind
        if k == "const":
            return node.value
        if k == "name":
            return env.lookup(node.id)
        if k == "binop":
            left = self.eval_expr(node.left, env)
            right = self.eval_expr(node.right, env)
            return self.apply_binop(node.op, left, right)
        if k == "unaryop":
            operand = self.eval_expr(node.operand, env)
            if node.op == "not":
                return not operand
            if node.op == "-":
                return operator.neg(operand)
            if node.op == "+":
                return operator.pos(operand)
            return operator.invert(operand)
        if k == "boolop":
            result = None
            for sub in node.values:
                result = self.eval_expr(sub, env)
                truthy = bool(result)
                if node.op == "and" and not truthy:
                    return result
                if node.op == "or" and truthy:
                    return result
            return result
        if k == "compare":
            left = self.eval_expr(node.left, env)
            for op, comp_node in zip(node.ops, node.comparators):
                right = self.eval_expr(comp_node, env)
                if op == "in":
                    ok = right.__contains__(left) if hasattr(right, "__contains__") \
                        else self.fail("TypeError",
                                       f"argument of type '{type_name(right)}' is not iterable")
                elif op == "not in":
                    if not hasattr(right, "__contains__"):
                        self.fail("TypeError",
                                  f"argument of type '{type_name(right)}' is not iterable")
                    ok = not right.__contains__(left)
                else:
                    ok = _CMP_FUNCS[op](left, right)
                if not ok:
                    return False
                left = right
            return True
        if k == "call":
            return self.eval_call(node, env)
        if k == "subscript":
            receiver = self.eval_expr(node.value, env)
            index = self.eval_index(node.index, env)
            return receiver[index]
        if k == "list":
            return [self.eval_expr(e, env) for e in node.elts]
        if k == "tuple":
            return tuple(self.eval_expr(e, env) for e in node.elts)
        if k == "set":
            return set(self.eval_expr(e, env) for e in node.elts)
        if k == "dict":
            out = {}
            for key_node, val_node in zip(node.keys, node.values):
                key = self.eval_expr(key_node, env)
                out[key] = self.eval_expr(val_node, env)
            return out
        if k in ("listcomp", "setcomp", "dictcomp"):
            return self.eval_comp(node, env)
        if k == "ifexp":
            if self.eval_expr(node.test, env):
                return self.eval_expr(node.body, env)
            return self.eval_expr(node.orelse, env)
        if k == "attr":
            self.fail("TypeError", "attribute access outside a method call")
        raise AssertionError(f"unexpected expression kind {k!r}")

    def guard_binop(self, op, left, right):
        # size guards so runaway arithmetic fails fast instead of hanging
        if op == "*":
            seq, n = None, None
            if isinstance(left, (str, list, tuple)) and isinstance(right, int):
                seq, n = left, right
            elif isinstance(right, (str, list, tuple)) and isinstance(left, int):
                seq, n = right, left
            if seq is not None and n > 0 and len(seq) * n > _SEQ_CAP:
                self.fail("MemoryError", "sequence repetition result too large")
        if op == "**" and isinstance(left, int) and isinstance(right, int) \
                and abs(right) > 1_000_000 and abs(left) > 1:
            self.fail("MemoryError", "integer power result too large")

    def apply_binop(self, op, left, right):
        self.guard_binop(op, left, right)
        return _BIN_FUNCS[op](left, right)

    def eval_index(self, node, env):
        if node.kind == "slice":
            lower = self.eval_expr(node.lower, env) if node.lower else None
            upper = self.eval_expr(node.upper, env) if node.upper else None
            step = self.eval_expr(node.step, env) if node.step else None
            return slice(lower, upper, step)
        return self.eval_expr(node, env)

    def eval_comp(self, node, env):
        if node.kind == "listcomp":
            result = []
            emit = result.append
        elif node.kind == "setcomp":
            result = set()
            emit = result.add
        else:
            result = {}
            emit = None
        assigned = set()
        collect = [assigned]

        def grab(t):
            if t.kind == "name":
                collect[0].add(t.id)
            elif t.kind == "tuple":
                for e in t.elts:
                    grab(e)

        for gen in node.generators:
            grab(gen.target)
        scope = Env(parent=env, assigned=assigned)

        def run(idx, outer_env):
            gen = node.generators[idx]
            iterable = self.eval_expr(gen.iter, outer_env)
            for item in self.make_iterator(iterable):
                self.charge(node.line)
                self.assign_target(gen.target, item, scope)
                if not all(bool(self.eval_expr(cond, scope)) for cond in gen.ifs):
                    continue
                if idx + 1 < len(node.generators):
                    run(idx + 1, scope)
                elif node.kind == "dictcomp":
                    key = self.eval_expr(node.key, scope)
                    result[key] = self.eval_expr(node.value, scope)
                else:
                    emit(self.eval_expr(node.element, scope))

        run(0, env)
        return result

    # -- calls

    def eval_call(self, node, env):
        if node.func.kind == "attr":
            receiver = self.eval_expr(node.func.value, env)
            args = [self.eval_expr(a, env) for a in node.args]
            kwargs = {name: self.eval_expr(v, env) for name, v in node.kwargs}
            return self.call_method(receiver, node.func.attr, args, kwargs)
        func = self.eval_expr(node.func, env)
        args = [self.eval_expr(a, env) for a in node.args]
        kwargs = {name: self.eval_expr(v, env) for name, v in node.kwargs}
        return self.call_value(func, args, kwargs)

    def call_value(self, func, args, kwargs=None):
        kwargs = kwargs or {}
        if isinstance(func, FunctionValue):
            return self.call_function(func, args, kwargs)
        if isinstance(func, BuiltinFunction):
            return self.call_builtin(func.name, args, kwargs)
        if isinstance(func, TypeRef):
            return self.call_constructor(func, args, kwargs)
        self.fail("TypeError", f"'{type_name(func)}' object is not callable")

    def call_function(self, func, args, kwargs, entry_step=None):
        if self.call_depth >= _CALL_DEPTH_CAP:
            self.fail("RecursionError", "maximum recursion depth exceeded")
        frame = Env(parent=self.module_env, assigned=func.assigned)
        self.bind_params(func, args, kwargs, frame)
        if entry_step is not None:
            line, src = entry_step
            self.step(line, src, frame)
        self.call_depth += 1
        try:
            self.exec_block(func.body, frame)
        except _Return as ret:
            return ret.value
        finally:
            self.call_depth -= 1
        return None

    def bind_params(self, func, args, kwargs, frame):
        params = func.params
        if len(args) > len(params):
            self.fail("TypeError",
                      f"{func.name}() takes {len(params)} positional arguments "
                      f"but {len(args)} were given")
        bound = dict(zip(params, args))
        for name, value in kwargs.items():
            if name not in params:
                self.fail("TypeError",
                          f"{func.name}() got an unexpected keyword argument {name!r}")
            if name in bound:
                self.fail("TypeError",
                          f"{func.name}() got multiple values for argument {name!r}")
            bound[name] = value
        n_defaults = len(func.defaults)
        for idx, name in enumerate(params):
            if name not in bound:
                default_idx = idx - (len(params) - n_defaults)
                if default_idx < 0:
                    self.fail("TypeError",
                              f"{func.name}() missing required argument: {name!r}")
                bound[name] = func.defaults[default_idx]
        for name, value in bound.items():
            frame.assign(name, value)

    def as_callable(self, f):
        if f is None or isinstance(f, (FunctionValue, BuiltinFunction, TypeRef)):
            if f is None:
                return None
            return lambda *xs: self.call_value(f, list(xs))
        self.fail("TypeError", f"'{type_name(f)}' object is not callable")

    def materialize(self, iterator):
        out = []
        for item in iterator:
            out.append(item)
            if len(out) > _SEQ_CAP:
                self.fail("MemoryError", "materialized sequence too large")
        return out

    def call_builtin(self, name, args, kwargs):
        if name == "print":
            sep = kwargs.pop("sep", " ")
            end = kwargs.pop("end", "\n")
            if kwargs:
                self.fail("TypeError",
                          f"print() got an unexpected keyword argument "
                          f"{next(iter(kwargs))!r}")
            sep = " " if sep is None else sep
            end = "\n" if end is None else end
            parts = [a if isinstance(a, str) else _render(a) for a in args]
            self.write_out(sep.join(parts) + end)
            return None
        if name == "len":
            (v,) = args
            if isinstance(v, (str, list, tuple, set, dict, range)):
                return len(v)
            self.fail("TypeError", f"object of type '{type_name(v)}' has no len()")
        if name == "range":
            return range(*args)
        if name == "enumerate":
            it = args[0]
            start = kwargs.get("start", args[1] if len(args) > 1 else 0)
            return [(i, v) for i, v in
                    enumerate(self.materialize(self.make_iterator(it)), start=start)]
        if name == "zip":
            iters = [self.make_iterator(a) for a in args]
            return self.materialize(tuple(vals) for vals in zip(*iters))
        if name == "sorted":
            (v,) = args
            key = self.as_callable(kwargs.pop("key", None))
            reverse = kwargs.pop("reverse", False)
            return sorted(self.materialize(self.make_iterator(v)),
                          key=key, reverse=bool(reverse))
        if name == "reversed":
            (v,) = args
            if isinstance(v, (list, tuple, str, range)):
                return list(reversed(v))
            self.fail("TypeError", "argument to reversed() must be a sequence")
        if name == "filter":
            f, it = args
            pred = self.as_callable(f) or bool
            return [x for x in self.materialize(self.make_iterator(it)) if pred(x)]
        if name == "map":
            f = self.as_callable(args[0])
            iters = [self.materialize(self.make_iterator(a)) for a in args[1:]]
            return self.materialize(f(*vals) for vals in zip(*iters))
        if name == "sum":
            it = self.materialize(self.make_iterator(args[0]))
            start = kwargs.get("start", args[1] if len(args) > 1 else 0)
            return sum(it, start)
        if name in ("min", "max"):
            fn = min if name == "min" else max
            key = self.as_callable(kwargs.pop("key", None))
            if len(args) == 1:
                items = self.materialize(self.make_iterator(args[0]))
                if not items and "default" in kwargs:
                    return kwargs["default"]
                if not items:
                    self.fail("ValueError", f"{name}() arg is an empty sequence")
                return fn(items, key=key) if key else fn(items)
            return fn(args, key=key) if key else fn(args)
        if name == "abs":
            return abs(args[0])
        if name == "any":
            return any(bool(x) for x in self.materialize(self.make_iterator(args[0])))
        if name == "all":
            return all(bool(x) for x in self.materialize(self.make_iterator(args[0])))
        if name == "ord":
            return ord(args[0])
        if name == "chr":
            return chr(args[0])
        if name == "round":
            return round(*args)
        if name == "isinstance":
            value, spec = args
            return isinstance(value, self.typeref_classes(spec))
        if name == "type":
            (v,) = args
            cls = type(v)
            if cls not in _TYPE_NAMES:
                self.fail("TypeError", "type() argument outside the supported kinds")
            return TypeRef(cls)
        raise AssertionError(f"builtin {name!r} not dispatched")

    def typeref_classes(self, spec):
        if isinstance(spec, TypeRef):
            return spec.pytype
        if isinstance(spec, tuple):
            return tuple(self.typeref_classes(s) for s in spec)
        self.fail("TypeError",
                  "isinstance() arg 2 must be a type or tuple of types")

    def call_constructor(self, ref, args, kwargs):
        cls = ref.pytype
        if cls in (list, tuple, set):
            if not args:
                return cls()
            (v,) = args
            return cls(self.materialize(self.make_iterator(v)))
        if cls is dict:
            if not args and not kwargs:
                return {}
            if kwargs:
                out = dict(args[0]) if args else {}
                out.update(kwargs)
                return out
            (v,) = args
            if isinstance(v, dict):
                return dict(v)
            return dict(self.materialize(self.make_iterator(v)))
        if cls is str:
            if not args:
                return ""
            (v,) = args
            return v if isinstance(v, str) else _render(v)
        return cls(*args)  # int/float/bool; native errors translated upstream

    def call_method(self, receiver, method, args, kwargs):
        table = syntax.SUPPORTED_METHODS.get(type_name(receiver))
        if table is None or method not in table:
            if hasattr(type(receiver), method):
                self.fail("UnsupportedMethodError",
                          f"{type_name(receiver)}.{method} is outside the supported "
                          f"method table")
            self.fail("AttributeError",
                      f"'{type_name(receiver)}' object has no attribute {method!r}")
        if isinstance(receiver, set) and method == "pop":
            if not receiver:
                self.fail("KeyError", "pop from an empty set")
            member = min(receiver, key=_render)
            receiver.remove(member)
            return member
        if isinstance(receiver, dict) and method in ("keys", "values", "items"):
            if args or kwargs:
                self.fail("TypeError", f"{method}() takes no arguments")
            if method == "keys":
                return list(receiver.keys())
            if method == "values":
                return list(receiver.values())
            return list(receiver.items())
        if isinstance(receiver, list) and method == "sort":
            key = self.as_callable(kwargs.pop("key", None))
            reverse = bool(kwargs.pop("reverse", False))
            if kwargs or args:
                self.fail("TypeError", "sort() takes no positional arguments")
            receiver.sort(key=key, reverse=reverse)
            return None
        bound = getattr(receiver, method)
        return bound(*args, **kwargs)


def find_driver(tree, entry_point):
    """First module-level non-def statement containing a call of the entry
    function; None when the program has no driver."""
    for stmt in tree.body:
        if stmt.kind == "func":
            continue
        for node in syntax.walk(stmt):
            if node.kind == "call" and node.func.kind == "name" \
                    and node.func.id == entry_point:
                return stmt
    return None


def execute(program, tree, entry_call, limits=None, trace_enabled=True,
            program_id=None):
    """Run the program's entry call under the given limits.

    The driver statement (first module statement invoking the entry point)
    is traced once with the callee frame bound; module statements after it do
    not run. The comparison in the driver's own assert is never evaluated;
    entry_call is what is invoked.
    """
    limits = limits or ExecutionLimits()
    name, args, kwargs = parse_entry_call(entry_call)
    if name != program.entry_point:
        raise ParseError(
            f"entry call names {name!r} but the entry point is "
            f"{program.entry_point!r}")

    interp = Interp(program, tree, limits, trace_enabled,
                    program_id=program_id, entry_call_text=entry_call)
    driver = find_driver(tree, program.entry_point)

    status = "ok"
    return_value = None
    rendered = None
    error = None
    try:
        ran_entry = False
        for stmt in tree.body:
            if driver is not None and stmt is driver:
                return_value = _run_entry(interp, driver.line, driver.src,
                                          args, kwargs)
                ran_entry = True
                break
            interp.exec_stmt(stmt, interp.module_env)
        if not ran_entry:
            virtual_line = len(program.lines) + 1
            return_value = _run_entry(interp, virtual_line, entry_call,
                                      args, kwargs)
        rendered = render_value(return_value, limits.max_value_render_chars)
    except InterpRuntimeError as exc:
        status = "runtime-error"
        error = (exc.kind, exc.message, exc.line or interp.current_line)
        _record_failure(interp)
    except FuelExhausted:
        status = "fuel-exhausted"
        error = ("FuelExhausted", "statement budget exhausted",
                 interp.current_line)
        _record_failure(interp)
    except OutputOverflow as exc:
        status = "output-overflow"
        error = ("OutputOverflow", f"{exc.what} exceeded the configured limit",
                 interp.current_line)
        _record_failure(interp)

    trace = Trace(program_id=interp.program_id, entry_call=entry_call,
                  status=status, steps=tuple(interp.steps))
    return ExecutionResult(status=status,
                           return_value=return_value if status == "ok" else None,
                           rendered_return=rendered if status == "ok" else None,
                           stdout="".join(interp.out_parts),
                           trace=trace, error=error)


def _run_entry(interp, line, src, args, kwargs):
    interp.current_line = line
    interp.current_src = src
    interp.charge(line)
    func = interp.module_env.vars.get(interp.program.entry_point)
    if not isinstance(func, FunctionValue):
        interp.fail("NameError",
                    f"name {interp.program.entry_point!r} is not defined")
    return interp.call_function(func, list(args), dict(kwargs),
                                entry_step=(line, src))


def _record_failure(interp):
    """Append the faulting statement as the trace's last entry."""
    if not interp.trace_enabled:
        return
    last = interp.steps[-1] if interp.steps else None
    if last is not None and last.line == interp.current_line:
        state_now = interp.snapshot(interp.current_env, truncate=True)
        if last.state == state_now:
            return
    interp.step(interp.current_line, interp.current_src, interp.current_env,
                truncate=True)


def canonical_set_order(v):
    return sorted(v, key=_render)


def _live_list_iter(lst):
    i = 0
    while i < len(lst):
        yield lst[i]
        i += 1
