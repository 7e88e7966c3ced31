"""Tokenizer, subset parser, complexity metrics, constraint checks, blacklist scan.

The object language is a small Python subset: top-level function definitions
over the nine built-in value types, with if/for/while control flow,
comprehensions, and a fixed table of built-in methods and free functions.
Everything else (imports, classes, try, with, lambdas, generators, f-strings,
star-args, ...) is rejected at parse time with a structured error.
"""

import ast
import io
import tokenize as _tokenize
from dataclasses import dataclass

from .errors import ConfigError, LexError, ParseError, UnsupportedConstructError

# ---------------------------------------------------------------------------
# language tables

VALUE_TYPE_NAMES = (
    "NoneType",
    "bool",
    "int",
    "float",
    "str",
    "list",
    "tuple",
    "set",
    "dict",
)

SUPPORTED_METHODS = {
    "str": (
        "rstrip", "lstrip", "strip", "split", "join", "upper", "lower",
        "replace", "find", "count", "startswith", "endswith", "isalpha",
        "isdigit", "isalnum", "index", "title", "capitalize", "zfill",
    ),
    "list": (
        "append", "extend", "pop", "insert", "remove", "sort", "reverse",
        "index", "count", "copy", "clear",
    ),
    "set": (
        "add", "remove", "discard", "union", "intersection", "difference",
        "issubset", "issuperset", "pop", "copy",
    ),
    "dict": (
        "get", "keys", "values", "items", "pop", "update", "setdefault",
        "copy", "clear",
    ),
    "tuple": ("index", "count"),
}

BUILTIN_FUNCTIONS = (
    "len", "range", "enumerate", "zip", "sorted", "reversed", "filter",
    "map", "sum", "min", "max", "abs", "any", "all", "print", "str", "int",
    "float", "bool", "list", "tuple", "set", "dict", "ord", "chr", "round",
    "isinstance", "type",
)

# Keyword table for the determinism scan. Entries are matched against the
# token stream: a bare name matches a dotted-chain head, `a.b` matches a
# chain prefix, and a leading-dot entry matches any attribute position.
DEFAULT_BLACKLIST = (
    # randomness / stochasticity
    "random", "random.shuffle", "random.randint", "random.choice",
    "random.choices", "random.seed", "numpy.random", "np.random",
    "torch.rand", "torch.randn", "secrets",
    # file I/O and filesystem traversal
    "open", ".read", ".write", "fileinput", "pathlib", "os.path",
    "os.listdir", "os.walk", "os.scandir", "os.remove", "os.unlink",
    "os.rmdir", "os.mkdir", "os.makedirs", "os.rename", "os.replace",
    "os.stat", "os.chmod", "os.chown", "os.getcwd", "os.chdir",
    "shutil", "glob", "tempfile",
    # archives and compression
    "zipfile", "tarfile", "gzip", "bz2", "lzma",
    # structured file readers/writers and external formats
    "csv", "csv.reader", "csv.DictReader", "csv.writer", "csv.DictWriter",
    "pandas.read_csv", "pandas.read_table", "pandas.read_excel",
    "pandas.read_parquet", "pandas.read_feather", "pandas.read_json",
    "pandas.read_pickle", "pd.read_csv", "pd.read_table", "pd.read_excel",
    "pd.read_parquet", "pd.read_feather", "pd.read_json", "pd.read_pickle",
    ".to_csv", ".to_excel", "openpyxl",
    # serialization / persistence
    "numpy.load", "numpy.save", "numpy.savez", "numpy.savez_compressed",
    "np.load", "np.save", "np.savez", "np.savez_compressed",
    "torch.save", "torch.load", "pickle", "pickle.load", "pickle.dump",
    "joblib.load", "joblib.dump", "json.load", "yaml.load", "yaml.safe_load",
    # databases
    "sqlite3.connect",
)

_BINOPS = {
    ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/",
    ast.FloorDiv: "//", ast.Mod: "%", ast.Pow: "**", ast.LShift: "<<",
    ast.RShift: ">>", ast.BitOr: "|", ast.BitXor: "^", ast.BitAnd: "&",
}
_UNARYOPS = {ast.USub: "-", ast.UAdd: "+", ast.Not: "not", ast.Invert: "~"}
_CMPOPS = {
    ast.Eq: "==", ast.NotEq: "!=", ast.Lt: "<", ast.LtE: "<=",
    ast.Gt: ">", ast.GtE: ">=", ast.In: "in", ast.NotIn: "not in",
    ast.Is: "is", ast.IsNot: "is not",
}


# ---------------------------------------------------------------------------
# source text

@dataclass(frozen=True)
class SourceProgram:
    """Program text plus its entry point, with 1-indexed line access."""

    text: str
    entry_point: str

    @property
    def lines(self):
        return self.text.split("\n")

    def line(self, n):
        """Verbatim text of 1-indexed line n; empty for out-of-range."""
        lines = self.lines
        if 1 <= n <= len(lines):
            return lines[n - 1]
        return ""


def infer_entry_point(tree):
    """Pick the entry function: the one invoked by the driver statement,
    else the sole top-level definition."""
    defs = [s.name for s in tree.body if s.kind == "func"]
    if not defs:
        raise ParseError("no function definition found", 1)
    called = []
    for stmt in tree.body:
        if stmt.kind == "func":
            continue
        for node in walk(stmt):
            if node.kind == "call" and node.func.kind == "name" and node.func.id in defs:
                called.append(node.func.id)
    if called:
        return called[0]
    if len(defs) == 1:
        return defs[0]
    raise ParseError("entry point is ambiguous: no driver call and multiple definitions", 1)


def load_program(text, entry_point=None):
    """Parse text and wrap it as a SourceProgram; returns (program, tree)."""
    tree = parse_source(text)
    if entry_point is None:
        entry_point = infer_entry_point(tree)
    else:
        defs = [s.name for s in tree.body if s.kind == "func"]
        if defs.count(entry_point) != 1:
            raise ParseError(f"entry point {entry_point!r} does not name exactly one definition", 1)
    return SourceProgram(text=text, entry_point=entry_point), tree


# ---------------------------------------------------------------------------
# tokens

@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_KEEP = {
    _tokenize.NAME: "NAME",
    _tokenize.OP: "OP",
    _tokenize.NUMBER: "NUMBER",
    _tokenize.STRING: "STRING",
    _tokenize.NEWLINE: "NEWLINE",
    _tokenize.INDENT: "INDENT",
    _tokenize.DEDENT: "DEDENT",
}


def tokenize_source(text):
    """Token stream of the source; comments and blank-line tokens dropped."""
    out = []
    reader = io.StringIO(text).readline
    try:
        for tok in _tokenize.generate_tokens(reader):
            kind = _TOKEN_KEEP.get(tok.type)
            if kind is None:
                continue
            out.append(Token(kind, tok.string, tok.start[0], tok.start[1]))
    except (_tokenize.TokenError, IndentationError, SyntaxError) as exc:
        line = None
        if isinstance(exc, _tokenize.TokenError) and len(exc.args) > 1:
            line = exc.args[1][0]
        elif isinstance(exc, SyntaxError):
            line = exc.lineno
        raise LexError(str(exc.args[0] if exc.args else exc), line) from None
    return out


# ---------------------------------------------------------------------------
# syntax tree

class Node:
    """Tree node: a kind tag, a source span, and kind-specific fields."""

    def __init__(self, kind, line, col, end_col, **fields):
        self.kind = kind
        self.line = line
        self.col = col
        self.end_col = end_col
        for name, value in fields.items():
            setattr(self, name, value)

    def __repr__(self):
        return f"<{self.kind} L{self.line}>"


def child_nodes(node):
    k = node.kind
    if k == "module":
        return list(node.body)
    if k == "func":
        return list(node.defaults) + list(node.body)
    if k == "assign":
        return list(node.targets) + [node.value]
    if k == "augassign":
        return [node.target, node.value]
    if k == "exprstmt":
        return [node.value]
    if k == "return":
        return [node.value] if node.value is not None else []
    if k == "if":
        return list(node.arms) + list(node.orelse)
    if k == "ifarm":
        return [node.test] + list(node.body)
    if k == "for":
        return [node.target, node.iter] + list(node.body)
    if k == "while":
        return [node.test] + list(node.body)
    if k == "assert":
        out = [node.test]
        if node.msg is not None:
            out.append(node.msg)
        return out
    if k in ("break", "continue", "pass", "const", "name"):
        return []
    if k == "binop":
        return [node.left, node.right]
    if k == "unaryop":
        return [node.operand]
    if k == "boolop":
        return list(node.values)
    if k == "compare":
        return [node.left] + list(node.comparators)
    if k == "call":
        return [node.func] + list(node.args) + [v for _, v in node.kwargs]
    if k == "attr":
        return [node.value]
    if k == "subscript":
        return [node.value, node.index]
    if k == "slice":
        return [p for p in (node.lower, node.upper, node.step) if p is not None]
    if k in ("list", "tuple", "set"):
        return list(node.elts)
    if k == "dict":
        return list(node.keys) + list(node.values)
    if k in ("listcomp", "setcomp"):
        return [node.element] + list(node.generators)
    if k == "dictcomp":
        return [node.key, node.value] + list(node.generators)
    if k == "compgen":
        return [node.target, node.iter] + list(node.ifs)
    if k == "ifexp":
        return [node.test, node.body, node.orelse]
    raise AssertionError(f"unknown node kind {k!r}")


def walk(node):
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(child_nodes(n)))


# ---------------------------------------------------------------------------
# parsing

def parse_source(text):
    """Parse source text into a module Node, enforcing the subset boundary."""
    tokenize_source(text)  # surfaces lex errors with the lex-error kind first
    try:
        mod = ast.parse(text)
    except SyntaxError as exc:
        raise ParseError(exc.msg or "invalid syntax", exc.lineno) from None
    lines = text.split("\n")
    conv = _Converter(lines)
    body = [conv.stmt(s, top=True) for s in mod.body]
    module = Node("module", 1, 0, 0, body=body, text=text, lines=lines)
    return module


class _Converter:
    def __init__(self, lines):
        self.lines = lines
        self.loop_depth = 0

    def src(self, a):
        # verbatim first physical line of the statement
        return self.lines[a.lineno - 1]

    def unsupported(self, what, a):
        raise UnsupportedConstructError(what, getattr(a, "lineno", None))

    def node(self, kind, a, **fields):
        end_col = getattr(a, "end_col_offset", a.col_offset)
        return Node(kind, a.lineno, a.col_offset, end_col, **fields)

    # -- statements

    def stmt(self, a, top=False):
        fn = getattr(self, "_stmt_" + type(a).__name__, None)
        if fn is None:
            self.unsupported(_STMT_NAMES.get(type(a).__name__, type(a).__name__), a)
        return fn(a, top)

    def _stmt_FunctionDef(self, a, top):
        if not top:
            self.unsupported("nested function definition", a)
        if a.decorator_list:
            self.unsupported("decorator", a)
        args = a.args
        if args.vararg or args.kwarg or args.kwonlyargs or args.posonlyargs:
            self.unsupported("star/keyword-only parameters", a)
        if a.returns or any(p.annotation for p in args.args):
            self.unsupported("type annotation", a)
        params = [p.arg for p in args.args]
        defaults = [self.expr(d) for d in args.defaults]
        body = [self.stmt(s) for s in a.body]
        return self.node("func", a, name=a.name, params=params,
                         defaults=defaults, body=body, src=self.src(a))

    def _stmt_Assign(self, a, top):
        targets = [self.target(t) for t in a.targets]
        return self.node("assign", a, targets=targets,
                         value=self.expr(a.value), src=self.src(a))

    def _stmt_AugAssign(self, a, top):
        op = _BINOPS.get(type(a.op))
        if op is None:
            self.unsupported("matrix-multiply operator", a)
        target = self.target(a.target)
        if target.kind not in ("name", "subscript"):
            self.unsupported("augmented assignment to this target", a)
        return self.node("augassign", a, target=target, op=op,
                         value=self.expr(a.value), src=self.src(a))

    def _stmt_Expr(self, a, top):
        return self.node("exprstmt", a, value=self.expr(a.value), src=self.src(a))

    def _stmt_Return(self, a, top):
        value = self.expr(a.value) if a.value is not None else None
        return self.node("return", a, value=value, src=self.src(a))

    def _stmt_If(self, a, top):
        arms = []
        orelse = []
        current = a
        while True:
            arm = self.node("ifarm", current,
                            test=self.expr(current.test),
                            body=[self.stmt(s) for s in current.body],
                            src=self.src(current))
            arms.append(arm)
            rest = current.orelse
            if len(rest) == 1 and isinstance(rest[0], ast.If) and \
                    self.lines[rest[0].lineno - 1].lstrip().startswith("elif"):
                current = rest[0]
                continue
            orelse = [self.stmt(s) for s in rest]
            break
        return self.node("if", a, arms=arms, orelse=orelse, src=self.src(a))

    def _stmt_For(self, a, top):
        if a.orelse:
            self.unsupported("loop else clause", a)
        target = self.target(a.target)
        it = self.expr(a.iter)
        self.loop_depth += 1
        try:
            body = [self.stmt(s) for s in a.body]
        finally:
            self.loop_depth -= 1
        return self.node("for", a, target=target, iter=it, body=body,
                         src=self.src(a))

    def _stmt_While(self, a, top):
        if a.orelse:
            self.unsupported("loop else clause", a)
        test = self.expr(a.test)
        self.loop_depth += 1
        try:
            body = [self.stmt(s) for s in a.body]
        finally:
            self.loop_depth -= 1
        return self.node("while", a, test=test, body=body, src=self.src(a))

    def _stmt_Break(self, a, top):
        if self.loop_depth == 0:
            raise ParseError("'break' outside loop", a.lineno)
        return self.node("break", a, src=self.src(a))

    def _stmt_Continue(self, a, top):
        if self.loop_depth == 0:
            raise ParseError("'continue' not properly in loop", a.lineno)
        return self.node("continue", a, src=self.src(a))

    def _stmt_Pass(self, a, top):
        return self.node("pass", a, src=self.src(a))

    def _stmt_Assert(self, a, top):
        msg = self.expr(a.msg) if a.msg is not None else None
        return self.node("assert", a, test=self.expr(a.test), msg=msg,
                         src=self.src(a))

    # -- assignment targets

    def target(self, a):
        if isinstance(a, ast.Name):
            return self.node("name", a, id=a.id)
        if isinstance(a, ast.Subscript):
            return self._expr_Subscript(a)
        if isinstance(a, (ast.Tuple, ast.List)):
            elts = [self.target(e) for e in a.elts]
            return self.node("tuple", a, elts=elts)
        if isinstance(a, ast.Starred):
            self.unsupported("starred assignment target", a)
        if isinstance(a, ast.Attribute):
            self.unsupported("attribute assignment", a)
        self.unsupported("assignment target", a)

    # -- expressions

    def expr(self, a):
        fn = getattr(self, "_expr_" + type(a).__name__, None)
        if fn is None:
            self.unsupported(_EXPR_NAMES.get(type(a).__name__, type(a).__name__), a)
        return fn(a)

    def _expr_Constant(self, a):
        v = a.value
        if v is None or isinstance(v, (bool, int, float, str)):
            return self.node("const", a, value=v)
        if isinstance(v, bytes):
            self.unsupported("bytes literal", a)
        if isinstance(v, complex):
            self.unsupported("complex literal", a)
        if v is Ellipsis:
            self.unsupported("ellipsis literal", a)
        self.unsupported(f"{type(v).__name__} literal", a)

    def _expr_Name(self, a):
        return self.node("name", a, id=a.id)

    def _expr_BinOp(self, a):
        op = _BINOPS.get(type(a.op))
        if op is None:
            self.unsupported("matrix-multiply operator", a)
        return self.node("binop", a, op=op, left=self.expr(a.left),
                         right=self.expr(a.right))

    def _expr_UnaryOp(self, a):
        return self.node("unaryop", a, op=_UNARYOPS[type(a.op)],
                         operand=self.expr(a.operand))

    def _expr_BoolOp(self, a):
        op = "and" if isinstance(a.op, ast.And) else "or"
        return self.node("boolop", a, op=op, values=[self.expr(v) for v in a.values])

    def _expr_Compare(self, a):
        ops = [_CMPOPS[type(o)] for o in a.ops]
        return self.node("compare", a, left=self.expr(a.left), ops=ops,
                         comparators=[self.expr(c) for c in a.comparators])

    def _expr_Call(self, a):
        if isinstance(a.func, ast.Name):
            func = self.node("name", a.func, id=a.func.id)
        elif isinstance(a.func, ast.Attribute):
            func = self.node("attr", a.func, value=self.expr(a.func.value),
                             attr=a.func.attr)
        else:
            self.unsupported("call of a computed expression", a)
        args = []
        for arg in a.args:
            if isinstance(arg, ast.Starred):
                self.unsupported("starred argument", a)
            args.append(self.expr(arg))
        kwargs = []
        for kw in a.keywords:
            if kw.arg is None:
                self.unsupported("double-star argument", a)
            kwargs.append((kw.arg, self.expr(kw.value)))
        return self.node("call", a, func=func, args=args, kwargs=kwargs)

    def _expr_Attribute(self, a):
        self.unsupported("attribute access outside a method call", a)

    def _expr_Subscript(self, a):
        if isinstance(a.slice, ast.Slice):
            s = a.slice
            index = self.node(
                "slice", a,
                lower=self.expr(s.lower) if s.lower else None,
                upper=self.expr(s.upper) if s.upper else None,
                step=self.expr(s.step) if s.step else None)
        elif isinstance(a.slice, ast.Tuple) and any(
                isinstance(e, ast.Slice) for e in a.slice.elts):
            self.unsupported("multi-dimensional slice", a)
        else:
            index = self.expr(a.slice)
        return self.node("subscript", a, value=self.expr(a.value), index=index)

    def _expr_List(self, a):
        return self.node("list", a, elts=[self.expr(e) for e in a.elts])

    def _expr_Tuple(self, a):
        for e in a.elts:
            if isinstance(e, ast.Starred):
                self.unsupported("starred element", a)
        return self.node("tuple", a, elts=[self.expr(e) for e in a.elts])

    def _expr_Set(self, a):
        return self.node("set", a, elts=[self.expr(e) for e in a.elts])

    def _expr_Dict(self, a):
        if any(k is None for k in a.keys):
            self.unsupported("double-star dict expansion", a)
        return self.node("dict", a, keys=[self.expr(k) for k in a.keys],
                         values=[self.expr(v) for v in a.values])

    def _comp_generators(self, a):
        gens = []
        for g in a.generators:
            if g.is_async:
                self.unsupported("async comprehension", a)
            gens.append(self.node("compgen", a, target=self.target(g.target),
                                  iter=self.expr(g.iter),
                                  ifs=[self.expr(i) for i in g.ifs]))
        return gens

    def _expr_ListComp(self, a):
        return self.node("listcomp", a, element=self.expr(a.elt),
                         generators=self._comp_generators(a))

    def _expr_SetComp(self, a):
        return self.node("setcomp", a, element=self.expr(a.elt),
                         generators=self._comp_generators(a))

    def _expr_DictComp(self, a):
        return self.node("dictcomp", a, key=self.expr(a.key),
                         value=self.expr(a.value),
                         generators=self._comp_generators(a))

    def _expr_IfExp(self, a):
        return self.node("ifexp", a, test=self.expr(a.test),
                         body=self.expr(a.body), orelse=self.expr(a.orelse))


_STMT_NAMES = {
    "Import": "import", "ImportFrom": "import", "ClassDef": "class definition",
    "Try": "try/except", "TryStar": "try/except", "With": "with block",
    "Raise": "raise", "Delete": "del", "Global": "global declaration",
    "Nonlocal": "nonlocal declaration", "Match": "match statement",
    "AsyncFunctionDef": "async function", "AsyncFor": "async for",
    "AsyncWith": "async with", "AnnAssign": "annotated assignment",
}
_EXPR_NAMES = {
    "Lambda": "lambda", "JoinedStr": "f-string", "FormattedValue": "f-string",
    "GeneratorExp": "generator expression", "Yield": "yield",
    "YieldFrom": "yield from", "Await": "await", "NamedExpr": "walrus operator",
    "Starred": "starred expression",
}


# ---------------------------------------------------------------------------
# complexity metrics

@dataclass(frozen=True)
class ComplexityReport:
    loc: int
    ast_depth: int
    branch_count: int
    loop_count: int
    cf_nesting_depth: int


def measure_complexity(tree):
    """Structural metrics over a parsed module.

    loc counts non-empty, non-comment physical lines. Comprehension for-clauses
    count as loops; each if/elif arm and each conditional expression counts as
    one branch. Nesting depth counts only block constructs (function, if, for,
    while), with elif arms staying at their if's depth.
    """
    loc = 0
    for raw in tree.lines:
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            loc += 1

    branch_count = 0
    loop_count = 0
    for node in walk(tree):
        if node.kind in ("ifarm", "ifexp"):
            branch_count += 1
        elif node.kind in ("for", "while", "compgen"):
            loop_count += 1

    def depth(n):
        if n.kind == "module":
            return max((depth(c) for c in n.body), default=0)
        if n.kind == "func":
            return 1 + max((depth(c) for c in n.body), default=0)
        if n.kind == "if":
            inner = [depth(s) for arm in n.arms for s in arm.body]
            inner += [depth(s) for s in n.orelse]
            return 1 + max(inner, default=0)
        if n.kind in ("for", "while"):
            return 1 + max((depth(c) for c in n.body), default=0)
        return 0

    def tree_depth(n):
        children = child_nodes(n)
        if not children:
            return 1
        return 1 + max(tree_depth(c) for c in children)

    return ComplexityReport(
        loc=loc,
        ast_depth=tree_depth(tree),
        branch_count=branch_count,
        loop_count=loop_count,
        cf_nesting_depth=depth(tree),
    )


# ---------------------------------------------------------------------------
# curriculum constraints

_CONSTRAINT_KEYS = ("level", "type", "method", "min_method_calls", "max_cf_depth")


@dataclass(frozen=True)
class ConstraintSpec:
    level: int
    required_type: str | None = None
    required_method: str | None = None
    min_method_calls: int | None = None
    max_cf_depth: int | None = None

    def __post_init__(self):
        if self.level not in (1, 2, 3):
            raise ConfigError(f"level must be 1, 2 or 3, got {self.level!r}")
        if self.required_type is not None and self.required_type not in VALUE_TYPE_NAMES:
            raise ConfigError(f"unknown type name {self.required_type!r}")
        if self.required_method is not None:
            if self.required_type in SUPPORTED_METHODS:
                table = SUPPORTED_METHODS[self.required_type]
                if self.required_method not in table:
                    raise ConfigError(
                        f"{self.required_method!r} is not a supported "
                        f"{self.required_type} method")
            elif not any(self.required_method in t for t in SUPPORTED_METHODS.values()):
                raise ConfigError(f"unknown method name {self.required_method!r}")


def parse_constraint_file(text):
    """key=value lines -> ConstraintSpec. Keys: level, type, method,
    min_method_calls, max_cf_depth."""
    values = {}
    for idx, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"constraint line {idx} is not key=value: {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONSTRAINT_KEYS:
            raise ConfigError(f"unknown constraint key {key!r}")
        values[key] = value
    if "level" not in values:
        raise ConfigError("constraint file missing required key: level")
    try:
        ints = {k: int(values[k]) for k in ("level", "min_method_calls", "max_cf_depth")
                if k in values}
    except ValueError as exc:
        raise ConfigError(f"non-integer constraint value: {exc}") from None
    return ConstraintSpec(
        level=ints["level"],
        required_type=values.get("type"),
        required_method=values.get("method"),
        min_method_calls=ints.get("min_method_calls"),
        max_cf_depth=ints.get("max_cf_depth"),
    )


@dataclass(frozen=True)
class ConstraintReport:
    passed: bool
    rules: tuple  # of (rule name, ok, detail)

    def violations(self):
        return [r for r in self.rules if not r[1]]


def validate_constraints(tree, spec):
    report = measure_complexity(tree)
    method_calls = []
    for node in walk(tree):
        if node.kind == "call" and node.func.kind == "attr":
            method_calls.append(node.func.attr)

    rules = []

    def rule(name, ok, detail):
        rules.append((name, bool(ok), detail))

    min_calls = spec.min_method_calls
    if min_calls is None:
        min_calls = 1
    if spec.required_method is not None:
        n = method_calls.count(spec.required_method)
        rule("required-method-count", n >= min_calls,
             f"{spec.required_method} called {n} time(s), need >= {min_calls}")

    if spec.level == 1:
        rule("no-control-flow",
             report.branch_count == 0 and report.loop_count == 0,
             "control-flow constructs are forbidden at level 1")
        rule("single-method-call", len(method_calls) == max(1, min_calls),
             f"level 1 expects exactly {max(1, min_calls)} method call(s), "
             f"found {len(method_calls)}")
    else:
        rule("multiple-method-calls", len(method_calls) >= 2,
             f"need >= 2 method calls, found {len(method_calls)}")
        if spec.required_method is not None:
            others = sorted(set(method_calls) - {spec.required_method})
            rule("additional-distinct-method", len(others) >= 1,
                 "need at least one method besides "
                 f"{spec.required_method}, found {others or 'none'}")

    if spec.level == 2:
        has_shallow = False
        for node in walk(tree):
            if node.kind in ("if", "for"):
                has_shallow = True
                break
        rule("has-shallow-control-flow", has_shallow,
             "level 2 requires at least one if or for")
        rule("no-nested-control-flow", report.cf_nesting_depth <= 2,
             f"nesting depth {report.cf_nesting_depth} exceeds the shallow limit")

    if spec.level == 3:
        rule("nested-control-flow", report.cf_nesting_depth >= 3,
             "missing nested control flow")
        max_depth = spec.max_cf_depth if spec.max_cf_depth is not None else 3
        rule("max-nesting-depth", report.cf_nesting_depth <= max_depth,
             f"nesting depth {report.cf_nesting_depth} exceeds max {max_depth}")

    return ConstraintReport(passed=all(ok for _, ok, _ in rules), rules=tuple(rules))


# ---------------------------------------------------------------------------
# determinism blacklist scan

@dataclass(frozen=True)
class BlacklistVerdict:
    flagged: bool
    matches: tuple  # sorted matched keywords


def load_blacklist(text):
    """One keyword per line; `#` starts a comment; dotted names permitted."""
    entries = []
    for raw in text.split("\n"):
        entry = raw.split("#", 1)[0].strip()
        if entry:
            entries.append(entry)
    return tuple(entries)


def scan_blacklist(text, blacklist=None):
    """Token-level scan: string-literal contents never match.

    A bare keyword matches a dotted-chain head, `a.b` matches a chain prefix,
    and a `.m` entry matches a name in attribute position.
    """
    if blacklist is None:
        blacklist = DEFAULT_BLACKLIST
    tokens = tokenize_source(text)

    chains = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind == "NAME":
            preceded_by_dot = i > 0 and tokens[i - 1].kind == "OP" and tokens[i - 1].text == "."
            chain = [tok.text]
            j = i + 1
            while (j + 1 < len(tokens) and tokens[j].kind == "OP"
                   and tokens[j].text == "." and tokens[j + 1].kind == "NAME"):
                chain.append(tokens[j + 1].text)
                j += 2
            chains.append((chain, preceded_by_dot))
            i = j
        else:
            i += 1

    matched = set()
    for entry in blacklist:
        if entry.startswith("."):
            member = entry[1:]
            for chain, preceded in chains:
                if member in chain[1:] or (preceded and chain[0] == member):
                    matched.add(entry)
                    break
        elif "." in entry:
            parts = entry.split(".")
            for chain, preceded in chains:
                if not preceded and chain[:len(parts)] == parts:
                    matched.add(entry)
                    break
        else:
            for chain, preceded in chains:
                if not preceded and chain[0] == entry:
                    matched.add(entry)
                    break

    matches = tuple(sorted(matched))
    return BlacklistVerdict(flagged=bool(matches), matches=matches)
