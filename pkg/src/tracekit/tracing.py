"""Execution traces: snapshots, diffing, line-delimited serialization.

A trace is an ordered sequence of (executed statement, post-state snapshot)
pairs. Snapshots store canonical renderings, not live values, so a trace is
self-contained and immune to later mutation of the program's containers.
"""

import json
from dataclasses import dataclass

from .errors import ParseError


@dataclass(frozen=True)
class StateSnapshot:
    """In-scope locals of the active frame: (name, rendered value, type name),
    sorted by name."""

    entries: tuple

    @classmethod
    def from_pairs(cls, pairs):
        return cls(entries=tuple(sorted(pairs, key=lambda e: e[0])))

    def as_map(self):
        return {var: (val, ty) for var, val, ty in self.entries}

    def get(self, var):
        for name, val, ty in self.entries:
            if name == var:
                return (val, ty)
        return None


@dataclass(frozen=True)
class TraceStep:
    t: int           # 1-based step index
    line: int        # executed source line
    occ: int         # k-th execution of this line, 1-based
    stmt: str        # verbatim source line text
    state: StateSnapshot


@dataclass(frozen=True)
class Trace:
    program_id: str
    entry_call: str
    status: str      # ok | runtime-error | fuel-exhausted | output-overflow
    steps: tuple

    def step_at(self, line, occ):
        for step in self.steps:
            if step.line == line and step.occ == occ:
                return step
        return None


def diff_states(prev, next_):
    """Variables added or changed between consecutive snapshots, sorted by
    name. Changed means the rendered value or the type name differs."""
    before = prev.as_map()
    out = []
    for var, val, ty in next_.entries:
        old = before.get(var)
        if old is None or old != (val, ty):
            out.append((var, val, ty))
    return out


def serialize_trace(trace):
    """One header record then one record per step; UTF-8 JSON lines."""
    out = []
    out.append(json.dumps(
        {"program_id": trace.program_id, "call": trace.entry_call,
         "status": trace.status},
        ensure_ascii=False))
    for step in trace.steps:
        state = [{"var": var, "val": val, "ty": ty}
                 for var, val, ty in step.state.entries]
        out.append(json.dumps(
            {"t": step.t, "line": step.line, "occ": step.occ,
             "stmt": step.stmt, "state": state},
            ensure_ascii=False))
    return "\n".join(out) + "\n"


def deserialize_trace(text):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise ParseError("empty trace stream")
    records = []
    for num, raw in enumerate(lines, start=1):
        try:
            records.append(json.loads(raw))
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed trace record {num}: {exc.msg}") from None
    header = records[0]
    for key in ("program_id", "call", "status"):
        if key not in header:
            raise ParseError(f"malformed trace record 1: missing {key!r}")
    steps = []
    for num, rec in enumerate(records[1:], start=2):
        try:
            state = StateSnapshot(entries=tuple(
                (e["var"], e["val"], e["ty"]) for e in rec["state"]))
            steps.append(TraceStep(t=rec["t"], line=rec["line"], occ=rec["occ"],
                                   stmt=rec["stmt"], state=state))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed trace record {num}: {exc}") from None
    return Trace(program_id=header["program_id"], entry_call=header["call"],
                 status=header["status"], steps=tuple(steps))
