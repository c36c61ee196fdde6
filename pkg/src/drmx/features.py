"""Feature definitions ``f_i(X) :- Body`` and ordered feature sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Tuple

from .logic import Clause, Literal, Term, Var


@dataclass(frozen=True)
class FeatureDef:
    index: int
    clause: Clause
    source_example: Optional[Term] = None
    source_class: Optional[Term] = None

    def __post_init__(self):
        head = self.clause.head
        if head is None or head.arity != 1 or not isinstance(head.args[0], Var):
            raise ValueError("feature head must be f(X) with a single variable")
        if not self.clause.body:
            raise ValueError("feature body must be non-empty")
        if not is_head_connected(self.clause):
            raise ValueError(f"feature body is not connected to the head: {self.clause}")

    @property
    def name(self) -> str:
        return self.clause.head.predicate

    @property
    def var(self) -> Var:
        return self.clause.head.args[0]

    @property
    def body(self) -> Tuple[Literal, ...]:
        return self.clause.body

    def body_predicates(self) -> list:
        return list(dict.fromkeys(lit.key for lit in self.clause.body))

    def as_classification(self, class_predicate: str, label: Term) -> Clause:
        return Clause(Literal(class_predicate, (self.var, label)), self.clause.body)

    def __str__(self):
        return str(self.clause)


def feature_name(index: int) -> str:
    return f"f_{index}"


def make_feature(index: int, head_var: Var, body, source_example=None,
                 source_class=None) -> FeatureDef:
    clause = Clause(Literal(feature_name(index), (head_var,)), tuple(body))
    return FeatureDef(index, clause, source_example, source_class)


def is_head_connected(clause: Clause) -> bool:
    """Every body literal shares a variable chain with the head (ground ones excepted)."""
    reached = set(clause.head.variables()) if clause.head else set()
    pending = [lit for lit in clause.body if lit.variables()]
    changed = True
    while pending and changed:
        changed = False
        for lit in list(pending):
            vs = set(lit.variables())
            if vs & reached:
                reached |= vs
                pending.remove(lit)
                changed = True
    return not pending


class FeatureSet:
    """Features in canonical order; bit ``i`` of a vector is ``features[i]``."""

    def __init__(self, features: Iterable[FeatureDef] = ()):
        self.features: Tuple[FeatureDef, ...] = tuple(features)
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        self._pos = {n: i for i, n in enumerate(names)}

    def __len__(self):
        return len(self.features)

    def __iter__(self) -> Iterator[FeatureDef]:
        return iter(self.features)

    def __getitem__(self, i) -> FeatureDef:
        return self.features[i]

    @property
    def count(self) -> int:
        return len(self.features)

    def position(self, name: str) -> int:
        return self._pos[name]

    def definitions(self) -> list:
        return [f.clause for f in self.features]

    def __eq__(self, other):
        return isinstance(other, FeatureSet) and self.features == other.features

    def __repr__(self):
        return f"FeatureSet({len(self.features)} features)"
