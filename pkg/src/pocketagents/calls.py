"""Function-call grammar: parsing, serialization, and catalog validation.

Accepted surface forms, all normalized to a plain list of calls:

  1. bracketed call list:     ``[f(a='x'); g(b="y")]``   (also ',' separators)
  2. bare single call:        ``f(a='x')``
  3. quoted-string list:      ``["f(a='x')", 'g()']``    (each string holds one call)

String literals may be single- or double-quoted with backslash escapes.
Values are strings or numbers; timestamps travel as strings and are only
validated at execution time. Name resolution does NOT happen here: unknown
function names must survive parsing so the evaluator can score hallucinated
calls. Use validate_calls for catalog checks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .catalog import ToolCatalog

Value = Union[str, int, float]

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"-?\d+(\.\d+)?([eE][-+]?\d+)?")

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"'}


class ParseError(ValueError):
    """Syntax error with the byte offset and a hint of what was expected."""

    def __init__(self, message: str, offset: int, expected: str):
        super().__init__(f"{message} at offset {offset} (expected {expected})")
        self.offset = offset
        self.expected = expected


@dataclass(frozen=True)
class FunctionCall:
    """A parsed invocation: name plus keyword arguments in textual order."""

    name: str
    args: dict[str, Value] = field(default_factory=dict)

    def __post_init__(self):
        # dict keys are unique by construction; normalize to a plain dict copy
        object.__setattr__(self, "args", dict(self.args))

    def __hash__(self):
        return hash((self.name, tuple(sorted((k, repr(v)) for k, v in self.args.items()))))


class _Scanner:
    """Cursor over the input with the shared token-level helpers."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, expected: str, message: str | None = None) -> ParseError:
        found = self.text[self.pos : self.pos + 12] or "end of input"
        return ParseError(message or f"unexpected {found!r}", self.pos, expected)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, char: str) -> None:
        if self.peek() != char:
            raise self.error(repr(char))
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        m = _IDENT_RE.match(self.text, self.pos)
        if not m:
            raise self.error("identifier")
        self.pos = m.end()
        return m.group()

    def string(self) -> str:
        quote = self.peek()
        if quote not in "'\"":
            raise self.error("string literal")
        self.pos += 1
        out = []
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == "\\":
                if self.pos + 1 >= len(self.text):
                    raise self.error("escaped character", "dangling backslash")
                nxt = self.text[self.pos + 1]
                out.append(_ESCAPES.get(nxt, nxt))
                self.pos += 2
            elif ch == quote:
                self.pos += 1
                return "".join(out)
            else:
                out.append(ch)
                self.pos += 1
        raise self.error(f"closing {quote}", "unterminated string")

    def number(self) -> Value:
        self.skip_ws()
        m = _NUMBER_RE.match(self.text, self.pos)
        if not m:
            raise self.error("number")
        self.pos = m.end()
        lit = m.group()
        if "." in lit or "e" in lit or "E" in lit:
            return float(lit)
        return int(lit)

    def value(self) -> Value:
        ch = self.peek()
        if ch in "'\"":
            return self.string()
        if ch.isdigit() or ch == "-":
            return self.number()
        raise self.error("string or number value")

    def call(self) -> FunctionCall:
        name = self.ident()
        self.expect("(")
        args: dict[str, Value] = {}
        if self.peek() == ")":
            self.pos += 1
            return FunctionCall(name, args)
        while True:
            key_offset = self.pos
            key = self.ident()
            if key in args:
                raise ParseError(f"duplicate parameter {key!r}", key_offset, "distinct parameter name")
            self.expect("=")
            args[key] = self.value()
            ch = self.peek()
            if ch == ",":
                self.pos += 1
                continue
            if ch == ")":
                self.pos += 1
                return FunctionCall(name, args)
            raise self.error("',' or ')'")


def parse_call(text: str) -> FunctionCall:
    """Parse exactly one call, rejecting trailing input."""
    scanner = _Scanner(text)
    call = scanner.call()
    if not scanner.at_end():
        raise scanner.error("end of input")
    return call


def parse_call_list(text: str) -> list[FunctionCall]:
    """Parse any accepted surface form into a list of calls in textual order.

    Total: every input produces either a list or a ParseError; nothing else.
    """
    scanner = _Scanner(text)
    if scanner.at_end():
        raise scanner.error("call or '['", "empty input")
    if scanner.peek() != "[":
        # bare single call
        call = scanner.call()
        if not scanner.at_end():
            raise scanner.error("end of input")
        return [call]
    scanner.pos += 1
    if scanner.peek() == "]":
        scanner.pos += 1
        if not scanner.at_end():
            raise scanner.error("end of input")
        return []

    quoted_form = scanner.peek() in "'\""
    calls = []
    while True:
        if quoted_form:
            inner = scanner.string()
            calls.append(parse_call(inner))
        else:
            calls.append(scanner.call())
        ch = scanner.peek()
        if ch in ";,":
            scanner.pos += 1
            if scanner.peek() == "]":  # tolerate a trailing separator
                scanner.pos += 1
                break
            continue
        if ch == "]":
            scanner.pos += 1
            break
        raise scanner.error("';', ',' or ']'")
    if not scanner.at_end():
        raise scanner.error("end of input")
    return calls


def _quote(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def serialize_value(value: Value) -> str:
    if isinstance(value, str):
        return _quote(value)
    return repr(value)


def serialize_call(call: FunctionCall, catalog: ToolCatalog | None = None) -> str:
    """Render one call. With a catalog, args follow the tool's declaration
    order (unknown params last, in textual order); otherwise textual order.
    """
    keys = list(call.args)
    tool = catalog.get(call.name) if catalog is not None else None
    if tool is not None:
        declared = [n for n in tool.param_names if n in call.args]
        keys = declared + [k for k in keys if k not in declared]
    body = ", ".join(f"{k}={serialize_value(call.args[k])}" for k in keys)
    return f"{call.name}({body})"


def serialize_call_list(calls: list[FunctionCall], catalog: ToolCatalog | None = None) -> str:
    """Canonical form: bracketed, semicolon-separated."""
    return "[" + "; ".join(serialize_call(c, catalog) for c in calls) + "]"


ISSUE_UNKNOWN_FUNCTION = "unknown-function"
ISSUE_UNKNOWN_PARAM = "unknown-param"
ISSUE_MISSING_REQUIRED = "missing-required-param"
ISSUE_ENUM_VALUE = "enum-value-out-of-domain"


@dataclass(frozen=True)
class CallIssue:
    call_index: int
    kind: str
    detail: str


@dataclass
class ValidationReport:
    issues: list[CallIssue] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return not self.issues

    def for_call(self, index: int) -> list[CallIssue]:
        return [i for i in self.issues if i.call_index == index]


def validate_calls(calls: list[FunctionCall], catalog: ToolCatalog) -> ValidationReport:
    """Report-only name/param/domain checks; never mutates or raises."""
    report = ValidationReport()
    for idx, call in enumerate(calls):
        tool = catalog.get(call.name)
        if tool is None:
            report.issues.append(CallIssue(idx, ISSUE_UNKNOWN_FUNCTION, call.name))
            continue
        for key, value in call.args.items():
            spec = tool.param(key)
            if spec is None:
                report.issues.append(CallIssue(idx, ISSUE_UNKNOWN_PARAM, f"{call.name}.{key}"))
            elif spec.domain.kind == "enum" and str(value) not in spec.domain.values:
                report.issues.append(
                    CallIssue(idx, ISSUE_ENUM_VALUE, f"{call.name}.{key}={value!r}")
                )
        for spec in tool.params:
            if spec.required and spec.name not in call.args:
                report.issues.append(
                    CallIssue(idx, ISSUE_MISSING_REQUIRED, f"{call.name}.{spec.name}")
                )
    return report
