"""Line-oriented parser for the constraint language.

One statement per line; ``#`` starts a comment. Grammar::

    statement  := keyword arguments
    exactly_one REF
    free        REF
    at_most_one LIT LIT ...
    or          LIT LIT ...
    nand        LIT LIT
    imply       LIT (('&' | ',' | 'and') LIT)* '->' LIT
    iff         LIT LIT
    forbid_seq  NAME LABEL LABEL

    LIT   := ['!' | 'not'] REF '.' LABEL
    REF   := NAME ['[' INDEX ']']
    INDEX := INT | 'i' | 'i' ('+' | '-') INT
    LABEL := NAME | INT | quoted string
"""

from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = ("exactly_one", "free", "at_most_one", "or", "nand", "imply", "iff", "forbid_seq")
TEMPLATE_VAR = "i"


class ConstraintSyntaxError(ValueError):
    """Parse failure; ``code`` is stable per error class."""

    def __init__(self, code: str, message: str, line: int, column: int):
        self.code = code
        self.line = line
        self.column = column
        self.message = message
        super().__init__(f"{code} line {line}, column {column}: {message}")


@dataclass(frozen=True)
class GroupRef:
    name: str
    index: int | None = None
    templated: bool = False

    @property
    def offset(self) -> int:
        return self.index or 0

    def __str__(self):
        if self.index is None and not self.templated:
            return self.name
        if not self.templated:
            return f"{self.name}[{self.index}]"
        if self.offset == 0:
            return f"{self.name}[i]"
        return f"{self.name}[i{self.offset:+d}]"


@dataclass(frozen=True)
class LiteralRef:
    ref: GroupRef
    label: str
    negated: bool = False

    def __str__(self):
        lab = self.label if re.fullmatch(r"[A-Za-z0-9_]+", self.label) else f'"{self.label}"'
        return f"{'!' if self.negated else ''}{self.ref}.{lab}"


@dataclass(frozen=True)
class Statement:
    """``literals`` is the argument list; for ``imply`` the last one is the consequent."""

    kind: str
    line: int
    literals: tuple[LiteralRef, ...] = ()
    ref: GroupRef | None = None
    labels: tuple[str, ...] = ()

    @property
    def templated(self) -> bool:
        refs = [lit.ref for lit in self.literals]
        if self.ref is not None:
            refs.append(self.ref)
        return any(r.templated for r in refs) or self.kind == "forbid_seq"


@dataclass(frozen=True)
class ConstraintAst:
    statements: tuple[Statement, ...]

    @property
    def free_refs(self) -> tuple[GroupRef, ...]:
        return tuple(s.ref for s in self.statements if s.kind == "free")


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<string>"[^"]*"|'[^']*')
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>\d+)
  | (?P<op>[\[\]\.\!&,+\-])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(text: str, line: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ConstraintSyntaxError("E101", f"unexpected character {text[pos]!r}", line, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            value = m.group()
            if kind == "op":
                kind = value
            elif kind == "string":
                value = value[1:-1]
            toks.append(_Tok(kind, value, pos + 1))
        pos = m.end()
    return toks


class _LineParser:
    def __init__(self, toks: list[_Tok], line: int, width: int):
        self.toks = toks
        self.pos = 0
        self.line = line
        self.width = width

    def error(self, msg: str, tok: _Tok | None = None, code: str = "E101"):
        col = tok.col if tok else self.width + 1
        raise ConstraintSyntaxError(code, msg, self.line, col)

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self, kind: str | None = None) -> _Tok:
        tok = self.peek()
        if tok is None:
            self.error(f"expected {kind or 'token'}, found end of line")
        if kind is not None and tok.kind != kind:
            self.error(f"expected {kind!r}, found {tok.text!r}", tok)
        self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    def ref(self) -> GroupRef:
        name = self.take("name")
        tok = self.peek()
        if tok is None or tok.kind != "[":
            return GroupRef(name.text)
        self.take("[")
        tok = self.take()
        if tok.kind == "int":
            self.take("]")
            return GroupRef(name.text, int(tok.text), templated=False)
        if tok.kind != "name":
            self.error(f"expected index, found {tok.text!r}", tok)
        if tok.text != TEMPLATE_VAR:
            self.error(f"undeclared template variable {tok.text!r}", tok, code="E102")
        offset = 0
        nxt = self.peek()
        if nxt is not None and nxt.kind in ("+", "-"):
            self.take()
            num = self.take("int")
            offset = int(num.text) * (1 if nxt.kind == "+" else -1)
        self.take("]")
        return GroupRef(name.text, offset, templated=True)

    def label(self) -> str:
        tok = self.take()
        if tok.kind not in ("name", "int", "string"):
            self.error(f"expected label, found {tok.text!r}", tok)
        if not tok.text:
            self.error("empty label", tok)
        return tok.text

    def literal(self) -> LiteralRef:
        negated = False
        tok = self.peek()
        if tok is not None and (tok.kind == "!" or (tok.kind == "name" and tok.text == "not")):
            self.take()
            negated = True
        ref = self.ref()
        self.take(".")
        return LiteralRef(ref, self.label(), negated)

    def literals(self, count: int | None = None, minimum: int = 1) -> tuple[LiteralRef, ...]:
        out = []
        while not self.at_end():
            out.append(self.literal())
        if count is not None and len(out) != count:
            self.error(f"expected {count} literals, found {len(out)}")
        if len(out) < minimum:
            self.error(f"expected at least {minimum} literals, found {len(out)}")
        return tuple(out)

    def implication(self) -> tuple[LiteralRef, ...]:
        ante = [self.literal()]
        while True:
            tok = self.peek()
            if tok is None:
                self.error("expected '->' in implication")
            if tok.kind == "arrow":
                self.take()
                break
            if tok.kind in ("&", ",") or (tok.kind == "name" and tok.text == "and"):
                self.take()
                ante.append(self.literal())
                continue
            self.error(f"expected '&' or '->', found {tok.text!r}", tok)
        cons = self.literal()
        if not self.at_end():
            self.error(f"unexpected {self.peek().text!r} after consequent", self.peek())
        return (*ante, cons)


def parse_statement(text: str, line: int = 1) -> Statement | None:
    """Parse one line. Returns None for blank or comment-only lines."""
    code = text.split("#", 1)[0]
    if not code.strip():
        return None
    toks = _tokenize(code, line)
    p = _LineParser(toks, line, len(code.rstrip()))
    head = p.take()
    if head.kind != "name" or head.text not in KEYWORDS:
        raise ConstraintSyntaxError("E100", f"unknown statement keyword {head.text!r}", line, head.col)
    kind = head.text
    if kind in ("exactly_one", "free"):
        ref = p.ref()
        if not p.at_end():
            p.error(f"unexpected {p.peek().text!r}", p.peek())
        return Statement(kind, line, ref=ref)
    if kind == "forbid_seq":
        name = p.take("name").text
        a, b = p.label(), p.label()
        if not p.at_end():
            p.error(f"unexpected {p.peek().text!r}", p.peek())
        return Statement(kind, line, ref=GroupRef(name, 0, templated=True), labels=(a, b))
    if kind == "imply":
        return Statement(kind, line, literals=p.implication())
    if kind in ("nand", "iff"):
        return Statement(kind, line, literals=p.literals(count=2))
    return Statement(kind, line, literals=p.literals(minimum=1))


def parse_constraints(text: str) -> ConstraintAst:
    statements = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stmt = parse_statement(raw, lineno)
        if stmt is not None:
            statements.append(stmt)
    return ConstraintAst(tuple(statements))
