"""Mode declarations: ``modeh(Recall, Template).`` and ``modeb(Recall, Template).``"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..errors import NoHeadMode, ParseError, UnproducibleInputType
from ..logic import Compound, Const, Literal, Num, Term
from .syntax import parse_statements, term_to_literal

PLACEMARKERS = ("+", "-", "#")


@dataclass(frozen=True)
class Slot:
    position: int
    kind: str  # '+', '-', '#', or '' for a fixed term
    type: Optional[str] = None
    fixed: Optional[Term] = None


@dataclass(frozen=True)
class ModeDecl:
    kind: str  # 'head' | 'body'
    recall: Optional[int]  # None means '*'
    template: Literal
    line: Optional[int] = field(default=None, compare=False)

    @property
    def key(self):
        return self.template.key

    @property
    def slots(self) -> Tuple[Slot, ...]:
        out = []
        for i, a in enumerate(self.template.args):
            if isinstance(a, Compound) and a.functor in PLACEMARKERS and len(a.args) == 1:
                out.append(Slot(i, a.functor, str(a.args[0])))
            else:
                out.append(Slot(i, "", None, a))
        return tuple(out)

    def positions(self, kind: str) -> Tuple[int, ...]:
        return tuple(s.position for s in self.slots if s.kind == kind)

    def types(self, kind: str) -> Tuple[str, ...]:
        return tuple(s.type for s in self.slots if s.kind == kind)

    def effective_recall(self, recall_cap: int) -> int:
        return recall_cap if self.recall is None else min(self.recall, recall_cap)

    def __str__(self):
        recall = "*" if self.recall is None else str(self.recall)
        args = ",".join(f"{s.kind}{s.type}" if s.kind else str(s.fixed) for s in self.slots)
        name = self.template.predicate
        tmpl = f"{name}({args})" if args else name
        return f"mode{self.kind[0]}({recall}, {tmpl})."


def parse_modes(text: str) -> List[ModeDecl]:
    modes: List[ModeDecl] = []
    for st in parse_statements(text):
        head = st.head
        if st.body or not isinstance(head, Compound) or head.functor not in ("modeh", "modeb") \
                or len(head.args) != 2:
            raise ParseError("expected modeh(Recall, Template). or modeb(Recall, Template).",
                             st.line, st.col, str(head))
        recall_term, template = head.args
        if recall_term == Const("*"):
            recall = None
        elif isinstance(recall_term, Num) and recall_term.value.denominator == 1 \
                and recall_term.value > 0:
            recall = int(recall_term.value)
        else:
            raise ParseError("recall must be a positive integer or '*'",
                             st.line, st.col, str(recall_term))
        kind = "head" if head.functor == "modeh" else "body"
        modes.append(ModeDecl(kind, recall, term_to_literal(template, st.line, st.col), st.line))
    validate_modes(modes)
    return modes


def head_mode(modes) -> ModeDecl:
    heads = [m for m in modes if m.kind == "head"]
    if not heads:
        raise NoHeadMode("no modeh declaration")
    return heads[0]


def body_modes(modes) -> List[ModeDecl]:
    return [m for m in modes if m.kind == "body"]


def validate_modes(modes) -> None:
    heads = [m for m in modes if m.kind == "head"]
    if not heads:
        raise NoHeadMode("no modeh declaration")
    seen = set()
    for m in heads:
        if m.key in seen:
            raise ParseError(f"more than one head mode for {m.key[0]}/{m.key[1]}", m.line, 1)
        seen.add(m.key)
    produced = set()
    for m in heads:
        produced.update(m.types("+"))
    for m in body_modes(modes):
        produced.update(m.types("-"))
    for m in body_modes(modes):
        for t in m.types("+"):
            if t not in produced:
                raise UnproducibleInputType(t, line=m.line, col=1, token=str(m.template))


def format_modes(modes) -> str:
    return "".join(f"{m}\n" for m in modes)
