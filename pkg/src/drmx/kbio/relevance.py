"""Relevance files: a declared label order plus predicate/arity assignments."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

from ..errors import MissingAssignment, ParseError, UnknownLabel
from ..logic import Compound, Const, Num, Term, format_atom, is_builtin
from .syntax import list_items, parse_statements

# what to do when a predicate has no label
STRICT = "strict"     # raise MissingAssignment
LOWEST = "lowest"     # treat as the lowest-ranked label
INHERIT = "inherit"   # ignore it; the other predicates set the interval
POLICIES = (STRICT, LOWEST, INHERIT)


def _label_text(t: Term) -> str:
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Num):
        return str(t)
    raise ValueError(f"relevance label must be an atom or number, got {t}")


@dataclass(frozen=True)
class RelevanceMap:
    labels: Tuple[str, ...]
    assignment: Dict[Tuple[str, int], str] = field(hash=False)
    missing: str = STRICT

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ParseError("duplicate relevance label")
        if self.missing not in POLICIES:
            raise ValueError(f"unknown missing-assignment policy {self.missing!r}")
        for key, label in self.assignment.items():
            if label not in self.labels:
                raise UnknownLabel(f"label {label!r} for {key[0]}/{key[1]} is not declared")

    def rank(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(f"label {label!r} is not declared") from None

    def rank_of(self, key) -> Optional[int]:
        """Rank of a predicate/arity, or None when it should not contribute."""
        if key in self.assignment:
            return self.labels.index(self.assignment[key])
        if is_builtin(key) or self.missing == INHERIT:
            return None
        if self.missing == LOWEST:
            return 0
        raise MissingAssignment(f"no relevance label for {key[0]}/{key[1]}")

    def label(self, rank: int) -> str:
        return self.labels[rank]

    def with_policy(self, missing: str) -> "RelevanceMap":
        return RelevanceMap(self.labels, dict(self.assignment), missing)

    def check_modes(self, modes) -> None:
        if self.missing != STRICT:
            return
        for m in modes:
            if m.kind == "body" and not is_builtin(m.key):
                self.rank_of(m.key)


def parse_relevance(text: str, missing: str = STRICT) -> RelevanceMap:
    labels: Optional[list] = None
    raw: Dict[Tuple[str, int], Tuple[str, int, int]] = {}
    for st in parse_statements(text):
        h = st.head
        if st.body or not isinstance(h, Compound):
            raise ParseError("expected relevance_order/1 or relevance/2", st.line, st.col, str(h))
        if h.functor == "relevance_order" and len(h.args) == 1:
            if labels is not None:
                raise ParseError("relevance_order declared twice", st.line, st.col)
            if raw:
                raise ParseError("relevance_order must precede assignments", st.line, st.col)
            try:
                labels = [_label_text(t) for t in list_items(h.args[0])]
            except ValueError as exc:
                raise ParseError(str(exc), st.line, st.col) from None
            if len(set(labels)) != len(labels):
                raise ParseError("duplicate relevance label", st.line, st.col)
        elif h.functor == "relevance" and len(h.args) == 2:
            spec, label_t = h.args
            if not (isinstance(spec, Compound) and spec.functor == "/"
                    and isinstance(spec.args[0], Const) and isinstance(spec.args[1], Num)):
                raise ParseError("expected pred/arity", st.line, st.col, str(spec))
            key = (spec.args[0].name, int(spec.args[1].value))
            try:
                label = _label_text(label_t)
            except ValueError as exc:
                raise ParseError(str(exc), st.line, st.col) from None
            if labels is not None and label not in labels:
                raise UnknownLabel(f"label {label!r} is not declared", st.line, st.col, label)
            if key in raw and raw[key][0] != label:
                raise ParseError(f"conflicting labels for {key[0]}/{key[1]}", st.line, st.col)
            raw[key] = (label, st.line, st.col)
        else:
            raise ParseError("expected relevance_order/1 or relevance/2", st.line, st.col, str(h))
    if labels is None:
        # numeric labels order numerically when no order is declared
        found = list(dict.fromkeys(v[0] for v in raw.values()))
        try:
            labels = sorted(found, key=lambda s: float(s))
        except ValueError:
            line, col = next(iter(raw.values()))[1:]
            raise UnknownLabel("symbolic labels need a relevance_order declaration",
                               line, col) from None
    return RelevanceMap(tuple(labels), {k: v[0] for k, v in raw.items()}, missing)


def _format_label(label: str) -> str:
    try:
        Fraction(label)
        return label
    except ValueError:
        return format_atom(label)


def format_relevance(rm: RelevanceMap) -> str:
    lines = [f"relevance_order([{','.join(map(_format_label, rm.labels))}]).\n"]
    for (pred, arity), label in rm.assignment.items():
        lines.append(f"relevance({format_atom(pred)}/{arity}, {_format_label(label)}).\n")
    return "".join(lines)
