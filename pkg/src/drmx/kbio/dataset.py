"""Labelled examples and the per-instance split of the knowledge file."""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Sequence, Tuple

from ..errors import ParseError
from ..logic import Clause, Compound, Program, Term, is_ground
from .modes import body_modes, head_mode
from .syntax import parse_statements


def parse_examples(text: str) -> List[Tuple[Term, Term]]:
    """``example(Id, Class).`` statements, in file order."""
    out = []
    seen = set()
    for st in parse_statements(text):
        h = st.head
        if st.body or not (isinstance(h, Compound) and h.functor == "example" and len(h.args) == 2):
            raise ParseError("expected example(Id, Class).", st.line, st.col, str(h))
        ident, label = h.args
        if not (is_ground(ident) and is_ground(label)):
            raise ParseError("example id and class must be ground", st.line, st.col, str(h))
        if ident in seen:
            raise ParseError(f"duplicate example {ident}", st.line, st.col, str(ident))
        seen.add(ident)
        out.append((ident, label))
    return out


def format_examples(examples) -> str:
    return "".join(f"example({i}, {c}).\n" for i, c in examples)


def class_order(labels) -> Tuple[Term, ...]:
    """Canonical class order: sorted by printed form."""
    return tuple(sorted(set(labels), key=str))


@dataclass(frozen=True)
class Dataset:
    ids: Tuple[Term, ...]
    labels: Dict[Term, Term] = field(hash=False)
    instances: Dict[Term, FrozenSet[Clause]] = field(hash=False)
    class_set: Tuple[Term, ...] = ()

    def __post_init__(self):
        if not self.class_set:
            object.__setattr__(self, "class_set", class_order(self.labels.values()))
        for i in self.ids:
            if self.labels[i] not in self.class_set:
                raise ValueError(f"label of {i} not in class set")

    def __len__(self):
        return len(self.ids)

    def subset(self, ids: Sequence[Term]) -> "Dataset":
        ids = tuple(ids)
        return Dataset(ids, {i: self.labels[i] for i in ids},
                       {i: self.instances.get(i, frozenset()) for i in ids}, self.class_set)

    def examples(self) -> List[Tuple[Term, Term]]:
        return [(i, self.labels[i]) for i in self.ids]


class KnowledgeBase:
    """Background clauses shared by all instances plus each instance's facts.

    A ground fact belongs to an instance when it is reachable from the
    instance identifier through body-mode input positions, following output
    positions outward. Proofs for an instance see only the shared background
    and that instance's facts.
    """

    def __init__(self, program: Program, examples, modes):
        self.modes = list(modes)
        self.head = head_mode(self.modes)
        ids = [i for i, _ in examples]
        instance_facts = _reachable_facts(program, ids, self.modes)
        owned = set().union(*instance_facts.values()) if instance_facts else set()
        self.background = Program(c for c in program if c not in owned)
        self.dataset = Dataset(tuple(ids), dict(examples),
                               {i: frozenset(instance_facts[i]) for i in ids})
        self._fact_order = {c: n for n, c in enumerate(program)}
        self._scoped: Dict[Term, Program] = {}

    @property
    def class_predicate(self) -> str:
        return self.head.template.predicate

    def facts(self, ident: Term) -> List[Clause]:
        facts = self.dataset.instances.get(ident, frozenset())
        return sorted(facts, key=self._fact_order.__getitem__)

    def scoped(self, ident: Term) -> Program:
        prog = self._scoped.get(ident)
        if prog is None:
            prog = self.background.extend(self.facts(ident))
            self._scoped[ident] = prog
        return prog

    def full_program(self) -> Program:
        extra = [c for i in self.dataset.ids for c in self.facts(i)]
        return self.background.extend(dict.fromkeys(extra))


def _reachable_facts(program: Program, ids, modes) -> Dict[Term, set]:
    by_input: Dict[Term, list] = defaultdict(list)
    moded = defaultdict(list)
    for m in body_modes(modes):
        moded[m.key].append((m.positions("+"), m.positions("-")))
    for c in program:
        if not c.is_fact or not c.head.is_ground():
            continue
        for inputs, outputs in moded.get(c.head.key, ()):
            for p in inputs:
                by_input[c.head.args[p]].append((c, outputs))
    result: Dict[Term, set] = {}
    for ident in ids:
        facts: set = set()
        seen = {ident}
        queue = deque([ident])
        while queue:
            const = queue.popleft()
            for fact, outputs in by_input.get(const, ()):
                facts.add(fact)
                for p in outputs:
                    t = fact.head.args[p]
                    if t not in seen:
                        seen.add(t)
                        queue.append(t)
        result[ident] = facts
    return result
