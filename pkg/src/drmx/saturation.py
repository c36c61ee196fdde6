"""Depth-bounded most-specific (bottom) clauses under mode declarations."""

from __future__ import annotations

import itertools
import logging
import string
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .errors import NoHeadMode
from .kbio.modes import ModeDecl, body_modes, head_mode
from .logic import (DEFAULT_DEPTH_BOUND, Clause, Literal, Program, SLDSearch, Term, Var,
                    apply_literal)

log = logging.getLogger(__name__)

DEFAULT_LITERAL_CAP = 256


def _var_names():
    for n in itertools.count():
        for letter in string.ascii_uppercase:
            yield letter if n == 0 else f"{letter}{n}"


@dataclass(frozen=True)
class BottomClause:
    clause: Clause
    var_depth: Dict[Var, int] = field(hash=False)
    provenance: Tuple[Tuple[int, int], ...]  # per body literal: (body-mode index, recall slot)
    modes: Tuple[ModeDecl, ...]              # the body modes the indices refer to
    bindings: Dict[Var, Term] = field(hash=False)
    example: Tuple[Term, Term] = None
    truncated: bool = False

    @property
    def head(self) -> Literal:
        return self.clause.head

    @property
    def body(self) -> Tuple[Literal, ...]:
        return self.clause.body

    def mode_of(self, i: int) -> ModeDecl:
        return self.modes[self.provenance[i][0]]

    def input_vars(self, i: int) -> Tuple[Var, ...]:
        lit = self.body[i]
        return tuple(lit.args[p] for p in self.mode_of(i).positions("+"))

    def output_vars(self, i: int) -> Tuple[Var, ...]:
        lit = self.body[i]
        return tuple(lit.args[p] for p in self.mode_of(i).positions("-"))

    def head_vars(self) -> Tuple[Var, ...]:
        return tuple(v for v, d in self.var_depth.items() if d == 0)

    def ground_literal(self, i: int) -> Literal:
        return apply_literal(self.body[i], self.bindings)


def build_bottom_clause(program: Program, example: Tuple[Term, Term], modes: Sequence[ModeDecl],
                        depth: int, recall_cap: int = 10,
                        literal_cap: int = DEFAULT_LITERAL_CAP,
                        proof_depth: int = DEFAULT_DEPTH_BOUND) -> BottomClause:
    """Layered saturation of ``example = (instance_id, class)``.

    Layer ``l`` queries every body mode with each not-yet-tried tuple of
    known terms (depth <= l) for its ``+`` slots, keeping up to ``recall``
    distinct ground answers. ``-`` slots become variables (fresh ones at
    depth l+1), ``#`` slots keep the proved constant.
    """
    hm = head_mode(modes)
    bmodes = tuple(body_modes(modes))
    ident, label = example
    names = _var_names()

    term_var: Dict[Term, Var] = {}
    var_depth: Dict[Var, int] = {}
    var_types: Dict[Var, set] = {}
    bindings: Dict[Var, Term] = {}
    order: List[Var] = []

    def var_for(const: Term, type_name: str, d: int) -> Var:
        v = term_var.get(const)
        if v is None:
            v = Var(next(names))
            term_var[const] = v
            var_depth[v] = d
            var_types[v] = set()
            bindings[v] = const
            order.append(v)
        var_types[v].add(type_name)
        return v

    head_args = []
    in_slots = [s for s in hm.slots if s.kind in "+-" and s.kind]
    if len(in_slots) != 1:
        raise NoHeadMode(f"head mode {hm} must have exactly one +/- slot for the instance")
    for s in hm.slots:
        if s.kind in ("+", "-"):
            head_args.append(var_for(ident, s.type, 0))
        elif s.kind == "#":
            head_args.append(label)
        else:
            head_args.append(s.fixed)
    head = Literal(hm.template.predicate, tuple(head_args))

    body: List[Literal] = []
    seen = set()
    provenance: List[Tuple[int, int]] = []
    tried = set()
    truncated = False

    for layer in range(depth):
        if truncated:
            break
        for mi, mode in enumerate(bmodes):
            if truncated:
                break
            slots = mode.slots
            inputs = [s for s in slots if s.kind == "+"]
            choices = [[v for v in order if s.type in var_types[v] and var_depth[v] <= layer]
                       for s in inputs]
            for combo in itertools.product(*choices):
                if (mi, combo) in tried:
                    continue
                tried.add((mi, combo))
                goal_args, fresh = [], 0
                inputs_iter = iter(combo)
                for s in slots:
                    if s.kind == "+":
                        goal_args.append(bindings[next(inputs_iter)])
                    elif s.kind in ("-", "#"):
                        goal_args.append(Var(f"_Q{fresh}"))
                        fresh += 1
                    else:
                        goal_args.append(s.fixed)
                goal = Literal(mode.template.predicate, tuple(goal_args))
                recall = mode.effective_recall(recall_cap)
                answers = set()
                for ans in SLDSearch(program, proof_depth).solve([goal]):
                    inst = apply_literal(goal, ans)
                    if not inst.is_ground() or inst in answers:
                        continue
                    answers.add(inst)
                    lit_args = []
                    inputs_iter = iter(combo)
                    for s in slots:
                        if s.kind == "+":
                            lit_args.append(next(inputs_iter))
                        elif s.kind == "-":
                            lit_args.append(var_for(inst.args[s.position], s.type, layer + 1))
                        else:
                            lit_args.append(inst.args[s.position])
                    lit = Literal(mode.template.predicate, tuple(lit_args))
                    if lit not in seen:
                        seen.add(lit)
                        body.append(lit)
                        provenance.append((mi, len(answers) - 1))
                        if len(body) >= literal_cap:
                            truncated = True
                            log.warning("bottom clause for %s truncated at %d literals",
                                        ident, literal_cap)
                            break
                    if len(answers) >= recall:
                        break
                if truncated:
                    break

    used = set(head.variables())
    for lit in body:
        used.update(lit.variables())
    return BottomClause(
        clause=Clause(head, tuple(body)),
        var_depth={v: var_depth[v] for v in order if v in used},
        provenance=tuple(provenance),
        modes=bmodes,
        bindings={v: bindings[v] for v in order if v in used},
        example=(ident, label),
        truncated=truncated,
    )


def most_specific_feature_clause(vector, features, label: Term,
                                 class_predicate: str = "class") -> Clause:
    """``class(X, label) :- f_i(X), ...`` over the active bits of ``vector``.

    Returns a head-only clause (and logs it) when no feature is active.
    """
    x = Var("X")
    body = tuple(Literal(features[i].name, (x,)) for i in vector.active())
    if not body:
        log.warning("instance %s has no active features", vector.instance_id)
    return Clause(Literal(class_predicate, (x, label)), body)
