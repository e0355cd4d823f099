"""Surface syntax: a recursive-descent parser and a minimal-parenthesis printer.

Grammar::

    expr     := term (("+" | "-") term)*
    term     := factor ("*" factor)*
    factor   := rational "*" factor | rational | "1"
              | "E(" var "," var ")" | "P" int "(" var ")"
              | "[" var ("=" | "!=") var "]"
              | "sum" var ":" expr
              | "agg" "@" name var (":" | "|" "E(" var "," var ")" ":") expr
              | "@" name "(" expr ("," expr)* ")" | "(" expr ")"

The bare literal ``1`` is the constant one; any other number is a scaling
coefficient (``1/1 * e`` scales by one). ``a - b`` is ``a + (-1) * b``.
Bodies of ``sum`` and ``agg`` extend as far right as possible.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .expr import (
    Add, Apply, EdgePred, EqPred, Expr, ExprError, GuardedAgg, LabelPred, One, Product, Scale, SumAgg,
    UncondAgg,
)
from .registry import DEFAULT_AGGREGATIONS, DEFAULT_FUNCTIONS


@dataclass(frozen=True)
class SourceSpan:
    start: int
    end: int


class ParseError(ValueError):
    def __init__(self, message: str, span: SourceSpan, text: str = ""):
        self.span = span
        self.text = text
        super().__init__(f"{message} at bytes {span.start}..{span.end}")


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<num>\d+/\d+|\d+\.\d+|\d+)
  | (?P<word>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<op>!=|[-+*()\[\]=,:|@])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str  # num, word, op, eof
    text: str
    start: int  # character offsets
    end: int


def _byte_offset(text: str, i: int) -> int:
    return len(text[:i].encode("utf-8"))


def tokenize(text: str) -> list[Token]:
    toks, i = [], 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            span = SourceSpan(_byte_offset(text, i), _byte_offset(text, i + 1))
            raise ParseError(f"unexpected character {text[i]!r}", span, text)
        if m.lastgroup != "ws":
            toks.append(Token(m.lastgroup, m.group(), m.start(), m.end()))
        i = m.end()
    toks.append(Token("eof", "", len(text), len(text)))
    return toks


_VAR = re.compile(r"x(\d+)$")
_LABEL = re.compile(r"P(\d+)$")


class _Parser:
    def __init__(self, text, functions, aggregations):
        self.text = text
        self.toks = tokenize(text)
        self.pos = 0
        self.functions = functions
        self.aggregations = aggregations

    # helpers
    def peek(self, k=0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.pos += 1
        return t

    def span(self, start: int, end: int) -> SourceSpan:
        return SourceSpan(_byte_offset(self.text, start), _byte_offset(self.text, end))

    def error(self, msg, start, end=None):
        if end is None or end <= start:
            end = min(start + 1, len(self.text))
        raise ParseError(msg, self.span(start, end), self.text)

    def unexpected(self, tok: Token, wanted: str):
        shown = "end of input" if tok.kind == "eof" else repr(tok.text)
        self.error(f"expected {wanted}, found {shown}", tok.start, tok.end)

    def expect(self, text: str, opened: Token | None = None) -> Token:
        t = self.peek()
        if t.text == text and t.kind in ("op", "word"):
            return self.next()
        if t.kind == "eof" and opened is not None:
            self.error(f"unterminated {opened.text!r}: expected {text!r}", opened.start, len(self.text))
        self.unexpected(t, repr(text))

    def var(self) -> int:
        t = self.next()
        m = _VAR.match(t.text) if t.kind == "word" else None
        if m is None:
            self.unexpected(t, "a variable like x1")
        i = int(m.group(1))
        if i == 0:
            self.error("variable indices start at x1", t.start, t.end)
        return i

    def name(self) -> Token:
        t = self.next()
        if t.kind != "word":
            self.unexpected(t, "a name")
        return t

    # grammar
    def parse(self) -> Expr:
        e = self.expr()
        t = self.peek()
        if t.kind != "eof":
            self.unexpected(t, "end of input")
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.next().text
            right = self.term()
            left = Add(left, right if op == "+" else Scale(-1, right))
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.peek().kind == "op" and self.peek().text == "*":
            self.next()
            left = Product(left, self.factor())
        return left

    def rational(self) -> tuple[Fraction, bool, Token]:
        t = self.peek()
        neg = False
        if t.kind == "op" and t.text == "-" and self.peek(1).kind == "num":
            self.next()
            neg = True
        tok = self.next()
        value = Fraction(tok.text)
        return (-value if neg else value), (not neg and tok.text == "1"), tok

    def factor(self) -> Expr:
        t = self.peek()
        if t.kind == "num" or (t.kind == "op" and t.text == "-" and self.peek(1).kind == "num"):
            try:
                value, is_one, tok = self.rational()
            except ZeroDivisionError:
                self.error("zero denominator", t.start, self.peek().start)
            if is_one:
                return One()
            if self.peek().kind == "op" and self.peek().text == "*":
                self.next()
                return Scale(value, self.factor())
            return Scale(value, One())
        if t.kind == "word":
            if t.text == "E" and self.peek(1).text == "(":
                self.next()
                opened = self.next()
                i = self.var()
                self.expect(",", opened)
                j = self.var()
                self.expect(")", opened)
                return EdgePred(i, j)
            m = _LABEL.match(t.text)
            if m:
                self.next()
                s = int(m.group(1))
                if s == 0:
                    self.error("label indices start at P1", t.start, t.end)
                opened = self.expect("(")
                i = self.var()
                self.expect(")", opened)
                return LabelPred(s, i)
            if t.text == "sum":
                self.next()
                v = self.var()
                self.expect(":")
                return SumAgg(v, self.expr())
            if t.text == "agg":
                return self.aggregation()
            self.unexpected(t, "an expression")
        if t.kind == "op":
            if t.text == "[":
                opened = self.next()
                i = self.var()
                op = self.peek()
                if op.text not in ("=", "!="):
                    if op.kind == "eof":
                        self.error("unterminated '[': expected '=' or '!='", opened.start, len(self.text))
                    self.unexpected(op, "'=' or '!='")
                self.next()
                j = self.var()
                self.expect("]", opened)
                return EqPred(i, j, "eq" if op.text == "=" else "neq")
            if t.text == "(":
                opened = self.next()
                e = self.expr()
                self.expect(")", opened)
                return e
            if t.text == "@":
                self.next()
                name = self.name()
                if name.text not in self.functions:
                    self.error(f"unknown function @{name.text}", t.start, name.end)
                opened = self.expect("(")
                args = [self.expr()]
                while self.peek().text == ",":
                    self.next()
                    args.append(self.expr())
                self.expect(")", opened)
                arity = getattr(self.functions[name.text], "arity", None)
                if arity is not None and arity != len(args):
                    self.error(f"@{name.text} takes {arity} arguments, got {len(args)}", t.start, self.toks[self.pos - 1].end)
                return Apply(name.text, tuple(args))
        self.unexpected(t, "an expression")

    def aggregation(self) -> Expr:
        start = self.next()
        self.expect("@")
        name = self.name()
        if name.text not in self.aggregations:
            self.error(f"unknown aggregation @{name.text}", start.start, name.end)
        v = self.var()
        if self.peek().text == "|":
            self.next()
            e_tok = self.peek()
            if e_tok.text != "E":
                self.unexpected(e_tok, "a guard E(xi,xj)")
            self.next()
            opened = self.expect("(")
            a = self.var()
            self.expect(",", opened)
            b = self.var()
            close = self.expect(")", opened)
            if b == v:
                guard = a
            elif a == v:
                guard = b
            else:
                self.error(f"guard must mention the aggregated variable x{v}", e_tok.start, close.end)
            self.expect(":")
            body = self.expr()
            try:
                return GuardedAgg(name.text, guard, v, body)
            except ExprError as exc:
                self.error(str(exc), start.start, self.toks[self.pos - 1].end)
        self.expect(":")
        return UncondAgg(name.text, v, self.expr())


def parse(text: str, functions=None, aggregations=None) -> Expr:
    """Parse surface syntax. Names after ``@`` must be in the given registries."""
    functions = DEFAULT_FUNCTIONS if functions is None else functions
    aggregations = DEFAULT_AGGREGATIONS if aggregations is None else aggregations
    return _Parser(text, functions, aggregations).parse()


# ---------------------------------------------------------------- printing

def render_rational(c: Fraction) -> str:
    if c == 1:
        return "1/1"
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def render(e: Expr) -> str:
    """Print with as few parentheses as the grammar allows; parse(render(e)) == e."""
    memo: dict = {}

    def go(x, prec: int, tail: bool) -> str:
        key = (id(x), prec, tail)
        if key in memo:
            return memo[key]
        s = _go(x, prec, tail)
        memo[key] = s
        return s

    def paren(x) -> str:
        return "(" + go(x, 0, False) + ")"

    def _go(x, prec, tail):
        if isinstance(x, One):
            return "1"
        if isinstance(x, EqPred):
            return f"[x{x.i}{'=' if x.op == 'eq' else '!='}x{x.j}]"
        if isinstance(x, EdgePred):
            return f"E(x{x.i},x{x.j})"
        if isinstance(x, LabelPred):
            return f"P{x.s}(x{x.i})"
        if isinstance(x, Add):
            if prec > 0:
                return paren(x)
            left = go(x.left, 0, True)
            r = x.right
            if isinstance(r, Scale) and r.coef == -1:
                return f"{left} - {go(r.body, 1, tail)}"
            return f"{left} + {go(r, 1, tail)}"
        if isinstance(x, Product):
            if prec > 1:
                return paren(x)
            return f"{go(x.left, 1, True)} * {go(x.right, 2, tail)}"
        if isinstance(x, Scale):
            return f"{render_rational(x.coef)} * {go(x.body, 2, tail)}"
        if isinstance(x, Apply):
            return f"@{x.fn}(" + ", ".join(go(a, 0, False) for a in x.args) + ")"
        if isinstance(x, (SumAgg, UncondAgg, GuardedAgg)):
            if tail:
                return paren(x)
            if isinstance(x, SumAgg):
                head = f"sum x{x.var} : "
            elif isinstance(x, UncondAgg):
                head = f"agg @{x.agg} x{x.var} : "
            else:
                head = f"agg @{x.agg} x{x.bound} | E(x{x.guard},x{x.bound}) : "
            return head + go(x.body, 0, False)
        raise TypeError(f"cannot render {x!r}")

    return go(e, 0, False)


# ---------------------------------------------------------------- files

def load_expressions(path, functions=None, aggregations=None) -> list[tuple[str, Expr]]:
    """A file holds one expression, or a JSON list of {"name", "expr"} objects."""
    path = Path(path)
    text = path.read_text()
    stripped = text.strip()
    if stripped.startswith("[") and stripped.endswith("]"):
        try:
            items = json.loads(stripped)
        except json.JSONDecodeError:
            items = None
        if isinstance(items, list) and all(isinstance(it, dict) for it in items):
            out = []
            for k, it in enumerate(items):
                if "expr" not in it:
                    raise ValueError(f"{path}: entry {k} has no 'expr' field")
                out.append((str(it.get("name", f"{path.stem}[{k}]")), parse(it["expr"], functions, aggregations)))
            return out
    return [(path.stem, parse(text, functions, aggregations))]
