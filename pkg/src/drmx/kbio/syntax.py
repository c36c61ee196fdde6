"""Tokenizer and recursive-descent parser for the clause syntax.

The grammar is a small Prolog subset: ``head.`` / ``head :- b1, ..., bn.``,
lowercase or single-quoted atoms, uppercase/underscore variables, decimal
numbers, lists, and the three mode placemarkers ``+t``, ``-t``, ``#t``.
``pred/arity`` is accepted as a term so relevance files parse, and a
parenthesised clause may appear as an argument (features files).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Tuple

from ..errors import NonDefiniteClause, ParseError
from ..logic import Clause, Compound, Const, Literal, Num, Program, Term, Var

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<block>/\*.*?\*/)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<atom>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\]|\\.|'')*')
  | (?P<punct>:-|[()\[\],|/+\-#*])
  | (?P<end>\.(?=\s|%|$))
""", re.VERBOSE | re.DOTALL)

_ARG_START = {"(", ",", "[", "|"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int
    value: object = None


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError("unexpected character", line, col, text[pos])
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "num":
            value = Fraction(lexeme)
            prev = tokens[-1] if tokens else None
            if prev is not None and prev.text == "-" and prev.kind == "punct" \
                    and prev.line == line and prev.col + 1 == col \
                    and (len(tokens) < 2 or tokens[-2].text in _ARG_START):
                tokens.pop()
                tokens.append(Token("num", "-" + lexeme, prev.line, prev.col, -value))
            else:
                tokens.append(Token("num", lexeme, line, col, value))
        elif kind == "quoted":
            body = lexeme[1:-1].replace("''", "'")
            body = re.sub(r"\\(.)", r"\1", body)
            if not body:
                raise ParseError("empty quoted atom", line, col, lexeme)
            tokens.append(Token("atom", lexeme, line, col, body))
        elif kind in ("atom", "var"):
            tokens.append(Token(kind, lexeme, line, col, lexeme))
        elif kind in ("punct", "end"):
            tokens.append(Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rindex("\n") + 1
        pos = m.end()
    return tokens


@dataclass(frozen=True)
class Statement:
    """One parsed ``.``-terminated statement; ``body`` empty for facts."""

    head: Optional[Term]
    body: Tuple[Term, ...]
    line: int
    col: int


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> Optional[Token]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            line = last.line if last else 1
            col = (last.col + len(last.text)) if last else 1
            return ParseError(message, line, col, "<end of input>")
        return ParseError(message, tok.line, tok.col, tok.text)

    def take(self, text: Optional[str] = None, kind: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok is None or (text is not None and tok.text != text) \
                or (kind is not None and tok.kind != kind):
            want = repr(text) if text else kind
            raise self.error(f"expected {want}")
        self.i += 1
        return tok

    def accept(self, text: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.text == text and tok.kind in ("punct", "end"):
            self.i += 1
            return True
        return False

    def statements(self) -> Iterator[Statement]:
        while self.peek() is not None:
            start = self.peek()
            if start.text == ":-":
                self.i += 1
                body = self.conjunction()
                self.take(".", "end")
                yield Statement(None, tuple(body), start.line, start.col)
                continue
            head = self.term()
            body: list = []
            if self.accept(":-"):
                body = self.conjunction()
            self.take(".", "end")
            yield Statement(head, tuple(body), start.line, start.col)

    def conjunction(self) -> list:
        items = [self.term()]
        while self.accept(","):
            items.append(self.term())
        return items

    def term(self) -> Term:
        tok = self.peek()
        if tok is not None and tok.kind == "punct" and tok.text in "+-#" and len(tok.text) == 1:
            self.i += 1
            return Compound(tok.text, (self.primary(),))
        t = self.primary()
        if self.accept("/"):
            t = Compound("/", (t, self.primary()))
        return t

    def primary(self) -> Term:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of input")
        if tok.kind == "num":
            self.i += 1
            return Num(tok.value)
        if tok.kind == "var":
            self.i += 1
            return Var(tok.value)
        if tok.kind == "atom":
            self.i += 1
            nxt = self.peek()
            if nxt is not None and nxt.text == "(" and nxt.line == tok.line \
                    and nxt.col == tok.col + len(tok.text):
                self.i += 1
                args = self.conjunction()
                self.take(")")
                return Compound(tok.value, tuple(args))
            return Const(tok.value)
        if tok.kind == "punct" and tok.text == "*":
            self.i += 1
            return Const("*")
        if tok.text == "[":
            self.i += 1
            if self.accept("]"):
                return Const("[]")
            items = self.conjunction()
            tail: Term = Const("[]")
            if self.accept("|"):
                tail = self.term()
            self.take("]")
            for item in reversed(items):
                tail = Compound(".", (item, tail))
            return tail
        if tok.text == "(":
            self.i += 1
            head = self.term()
            if self.accept(":-"):
                body = self.conjunction()
                self.take(")")
                return Compound(":-", (head,) + tuple(body))
            if self.accept(","):
                rest = self.conjunction()
                self.take(")")
                return Compound(",", (head,) + tuple(rest))
            self.take(")")
            return head
        raise self.error("unexpected token")


def parse_statements(text: str) -> List[Statement]:
    return list(_Parser(text).statements())


def parse_term(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    if p.peek() is not None:
        raise p.error("trailing input after term")
    return t


def term_to_literal(t: Term, line=None, col=None) -> Literal:
    if isinstance(t, Const):
        return Literal(t.name, ())
    if isinstance(t, Compound) and t.functor not in (":-", ","):
        return Literal(t.functor, t.args)
    raise ParseError(f"{t} is not a literal", line, col, str(t))


def statement_to_clause(st: Statement) -> Clause:
    if st.head is None:
        raise NonDefiniteClause("goal clause (no head) in program", st.line, st.col, ":-")
    if isinstance(st.head, (Var, Num)):
        raise NonDefiniteClause("clause head must be an atom or compound",
                                st.line, st.col, str(st.head))
    head = term_to_literal(st.head, st.line, st.col)
    body = tuple(term_to_literal(b, st.line, st.col) for b in st.body)
    return Clause(head, body)


def clause_from_term(t: Term, line=None, col=None) -> Clause:
    """Convert a parenthesised ``(H :- B)`` argument back into a clause."""
    if isinstance(t, Compound) and t.functor == ":-":
        head, *body = t.args
        return Clause(term_to_literal(head, line, col),
                      tuple(term_to_literal(b, line, col) for b in body))
    return Clause(term_to_literal(t, line, col), ())


def parse_program(text: str) -> Program:
    return Program(statement_to_clause(st) for st in parse_statements(text))


def parse_clause(text: str) -> Clause:
    clauses = parse_program(text)
    if len(clauses) != 1:
        raise ParseError(f"expected exactly one clause, found {len(clauses)}")
    return clauses.clauses[0]


def format_program(program) -> str:
    return "".join(f"{c}\n" for c in program)


def list_items(t: Term) -> list:
    items = []
    while isinstance(t, Compound) and t.functor == "." and len(t.args) == 2:
        items.append(t.args[0])
        t = t.args[1]
    if t != Const("[]"):
        raise ValueError(f"not a proper list: {t}")
    return items
