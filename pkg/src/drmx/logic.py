"""First-order terms, definite clauses and the proof machinery built on them.

Everything here is immutable: terms, literals and clauses are frozen
dataclasses, substitutions are plain dicts that are copied rather than
mutated once handed out.
"""

from __future__ import annotations

import itertools
import operator
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from .errors import ResourceExceeded, UniverseTooLarge

DEFAULT_DEPTH_BOUND = 64
DEFAULT_SUBSUMPTION_BUDGET = 10 ** 6
DEFAULT_UNIVERSE_CAP = 10 ** 6

_PLAIN_ATOM = re.compile(r"^[a-z][A-Za-z0-9_]*$")


# --------------------------------------------------------------------------
# Terms

@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Const:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("constant symbol must be non-empty")

    def __str__(self):
        return format_atom(self.name)


@dataclass(frozen=True, slots=True)
class Num:
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    def __str__(self):
        return format_number(self.value)


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: tuple

    def __post_init__(self):
        if not self.functor:
            raise ValueError("functor symbol must be non-empty")
        if not self.args:
            raise ValueError("compound term needs at least one argument")

    def __str__(self):
        if self.functor == "." and len(self.args) == 2:
            items, t = [], self
            while isinstance(t, Compound) and t.functor == "." and len(t.args) == 2:
                items.append(str(t.args[0]))
                t = t.args[1]
            tail = "" if t == Const("[]") else f"|{t}"
            return f"[{','.join(items)}{tail}]"
        return f"{format_atom(self.functor)}({','.join(map(str, self.args))})"


Term = Union[Var, Const, Num, Compound]
Substitution = Dict[Var, Term]


def format_atom(name: str) -> str:
    if _PLAIN_ATOM.match(name) or name == "[]":
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_number(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    # parsed numbers are finite decimals; print them back exactly
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return repr(float(value))
    places = max(twos, fives)
    scaled = abs(value) * 10 ** places
    digits = str(scaled.numerator).rjust(places + 1, "0")
    text = digits[:-places] + "." + digits[-places:]
    return ("-" if value < 0 else "") + text


def term_vars(t: Term, acc: Optional[list] = None) -> list:
    """Variables of ``t`` in left-to-right first-occurrence order."""
    if acc is None:
        acc = []
    if isinstance(t, Var):
        if t not in acc:
            acc.append(t)
    elif isinstance(t, Compound):
        for a in t.args:
            term_vars(a, acc)
    return acc


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, Compound):
        return all(is_ground(a) for a in t.args)
    return True


# --------------------------------------------------------------------------
# Literals, clauses, programs

@dataclass(frozen=True, slots=True)
class Literal:
    predicate: str
    args: tuple = ()
    positive: bool = True

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def key(self) -> Tuple[str, int]:
        return (self.predicate, len(self.args))

    def variables(self) -> list:
        acc: list = []
        for a in self.args:
            term_vars(a, acc)
        return acc

    def is_ground(self) -> bool:
        return all(is_ground(a) for a in self.args)

    def __str__(self):
        text = format_atom(self.predicate)
        if self.args:
            text += "(" + ",".join(map(str, self.args)) + ")"
        return text if self.positive else "\\+" + text


@dataclass(frozen=True)
class Clause:
    """``head :- body``; a goal clause when ``head`` is None.

    The body is kept as an ordered tuple for SLD resolution; subsumption and
    variant checks treat it as a set.
    """

    head: Optional[Literal]
    body: tuple = ()

    @property
    def is_definite(self) -> bool:
        return self.head is not None

    @property
    def is_fact(self) -> bool:
        return self.head is not None and not self.body

    @cached_property
    def variables(self) -> tuple:
        acc: list = []
        for lit in ((self.head,) if self.head else ()) + tuple(self.body):
            for a in lit.args:
                term_vars(a, acc)
        return tuple(acc)

    def body_set(self) -> frozenset:
        return frozenset(self.body)

    def __len__(self):
        return len(self.body)

    def __str__(self):
        if self.head is None:
            return ":- " + ", ".join(map(str, self.body)) + "."
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- " + ", ".join(map(str, self.body)) + "."


class Program:
    """An ordered list of definite clauses indexed by predicate/arity."""

    def __init__(self, clauses: Iterable[Clause] = ()):
        self.clauses: Tuple[Clause, ...] = tuple(clauses)
        index: Dict[Tuple[str, int], List[int]] = defaultdict(list)
        for pos, c in enumerate(self.clauses):
            if c.head is None:
                raise ValueError(f"program clause {pos} has no head")
            index[c.head.key].append(pos)
        self.index = {k: tuple(v) for k, v in index.items()}

    def clauses_for(self, key) -> Iterator[Clause]:
        for pos in self.index.get(key, ()):
            yield self.clauses[pos]

    def extend(self, more: Iterable[Clause]) -> "Program":
        return Program(self.clauses + tuple(more))

    def predicates(self) -> set:
        return set(self.index)

    def __len__(self):
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)

    def __repr__(self):
        return f"Program({len(self.clauses)} clauses)"


# --------------------------------------------------------------------------
# Substitutions and unification

def walk(t: Term, s: Substitution) -> Term:
    while isinstance(t, Var) and t in s:
        t = s[t]
    return t


def apply(t: Term, s: Substitution) -> Term:
    t = walk(t, s)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(apply(a, s) for a in t.args))
    return t


def apply_literal(lit: Literal, s: Substitution) -> Literal:
    if not s:
        return lit
    return Literal(lit.predicate, tuple(apply(a, s) for a in lit.args), lit.positive)


def apply_clause(c: Clause, s: Substitution) -> Clause:
    head = apply_literal(c.head, s) if c.head is not None else None
    return Clause(head, tuple(apply_literal(b, s) for b in c.body))


def _occurs(v: Var, t: Term, s: Substitution) -> bool:
    t = walk(t, s)
    if t == v:
        return True
    if isinstance(t, Compound):
        return any(_occurs(v, a, s) for a in t.args)
    return False


def _unify_terms(x: Term, y: Term, s: Substitution) -> bool:
    """Extend ``s`` in place; returns False on clash. Caller owns the copy."""
    stack = [(x, y)]
    while stack:
        a, b = stack.pop()
        a = walk(a, s)
        b = walk(b, s)
        if a == b:
            continue
        if isinstance(a, Var):
            if _occurs(a, b, s):
                return False
            s[a] = b
        elif isinstance(b, Var):
            if _occurs(b, a, s):
                return False
            s[b] = a
        elif isinstance(a, Compound) and isinstance(b, Compound):
            if a.functor != b.functor or len(a.args) != len(b.args):
                return False
            stack.extend(zip(a.args, b.args))
        else:
            return False
    return True


def _unify_literals(a: Literal, b: Literal, s: Substitution) -> Optional[Substitution]:
    if a.key != b.key or a.positive != b.positive:
        return None
    s2 = dict(s)
    for x, y in zip(a.args, b.args):
        if not _unify_terms(x, y, s2):
            return None
    return s2


def resolve(s: Substitution) -> Substitution:
    """Idempotent form of a triangular substitution."""
    return {v: apply(v, s) for v in s}


def unify(a: Literal, b: Literal) -> Optional[Substitution]:
    """Most general unifier of two literals (occurs check on), or None."""
    s = _unify_literals(a, b, {})
    return None if s is None else resolve(s)


def rename_clause(c: Clause, tag) -> Clause:
    if not c.variables:
        return c
    s = {v: Var(f"{v.name}#{tag}") for v in c.variables}
    return apply_clause(c, s)


# --------------------------------------------------------------------------
# Built-in numeric comparisons (ground only)

BUILTINS = {
    ("gteq", 2): operator.ge,
    ("lteq", 2): operator.le,
    ("gt", 2): operator.gt,
    ("lt", 2): operator.lt,
}


def is_builtin(key) -> bool:
    return key in BUILTINS


def _eval_builtin(lit: Literal, s: Substitution) -> bool:
    x, y = (walk(a, s) for a in lit.args)
    if isinstance(x, Num) and isinstance(y, Num):
        return BUILTINS[lit.key](x.value, y.value)
    return False


# --------------------------------------------------------------------------
# SLD resolution

@dataclass
class ProofResult:
    answers: List[Substitution]
    cut: bool = False

    def __bool__(self):
        return bool(self.answers)

    def __len__(self):
        return len(self.answers)

    def __iter__(self):
        return iter(self.answers)


class SLDSearch:
    """Depth-first SLD resolution with a bound on proof-tree depth.

    A goal literal introduced by resolving a literal at depth ``k`` sits at
    depth ``k + 1``; literals deeper than ``depth_bound`` fail and set ``cut``.
    """

    def __init__(self, program: Program, depth_bound: int = DEFAULT_DEPTH_BOUND):
        if depth_bound < 1:
            raise ValueError("depth_bound must be positive")
        self.program = program
        self.depth_bound = depth_bound
        self.cut = False
        self._fresh = itertools.count()

    def solve(self, goal: Iterable[Literal]) -> Iterator[Substitution]:
        goal = tuple(goal)
        goal_vars: list = []
        for lit in goal:
            for a in lit.args:
                term_vars(a, goal_vars)
        stack = [(tuple((lit, 1) for lit in goal), {})]
        while stack:
            goals, s = stack.pop()
            if not goals:
                yield {v: apply(v, s) for v in goal_vars}
                continue
            (lit, depth), rest = goals[0], goals[1:]
            if not lit.positive:
                raise ValueError(f"negative goal literal {lit} not supported")
            if is_builtin(lit.key):
                if _eval_builtin(lit, s):
                    stack.append((rest, s))
                continue
            if depth > self.depth_bound:
                self.cut = True
                continue
            children = []
            for clause in self.program.clauses_for(lit.key):
                if clause.variables:
                    clause = rename_clause(clause, next(self._fresh))
                s2 = _unify_literals(lit, clause.head, s)
                if s2 is None:
                    continue
                children.append((tuple((b, depth + 1) for b in clause.body) + rest, s2))
            stack.extend(reversed(children))


def sld_prove(program: Program, goal: Iterable[Literal],
              depth_bound: int = DEFAULT_DEPTH_BOUND,
              answer_cap: int = 1) -> ProofResult:
    """Up to ``answer_cap`` answers for ``goal`` in program clause order."""
    if answer_cap < 1:
        raise ValueError("answer_cap must be positive")
    search = SLDSearch(program, depth_bound)
    answers = list(itertools.islice(search.solve(goal), answer_cap))
    return ProofResult(answers, search.cut)


# --------------------------------------------------------------------------
# Theta-subsumption

def _match(pattern: Term, target: Term, s: Substitution) -> bool:
    """One-way matching: only pattern variables bind; target vars are rigid."""
    if isinstance(pattern, Var):
        bound = s.get(pattern)
        if bound is None:
            s[pattern] = target
            return True
        return bound == target
    if isinstance(pattern, Compound):
        if not isinstance(target, Compound) or pattern.functor != target.functor \
                or len(pattern.args) != len(target.args):
            return False
        return all(_match(p, t, s) for p, t in zip(pattern.args, target.args))
    return pattern == target


def _match_args(pattern: tuple, target: tuple, s: Substitution,
                injective: bool) -> Optional[Substitution]:
    s2 = dict(s)
    for p, t in zip(pattern, target):
        if not _match(p, t, s2):
            return None
    if injective:
        images = list(s2.values())
        if any(not isinstance(t, Var) for t in images) or len(set(images)) != len(images):
            return None
    return s2


class _Matcher:
    def __init__(self, budget: int, injective: bool):
        self.budget = budget
        self.injective = injective
        self.nodes = 0

    def run(self, c: Clause, d: Clause) -> bool:
        if (c.head is None) != (d.head is None):
            return False
        s: Substitution = {}
        if c.head is not None:
            if c.head.key != d.head.key:
                return False
            s = _match_args(c.head.args, d.head.args, s, self.injective)
            if s is None:
                return False
        targets: Dict[tuple, list] = defaultdict(list)
        for lit in dict.fromkeys(d.body):
            targets[(lit.key, lit.positive)].append(lit)
        pending = list(dict.fromkeys(c.body))
        for lit in pending:
            if (lit.key, lit.positive) not in targets:
                return False
        return self._search(pending, s, targets)

    def _search(self, pending, s, targets) -> bool:
        self.nodes += 1
        if self.nodes > self.budget:
            raise ResourceExceeded(f"subsumption search exceeded {self.budget} nodes")
        if not pending:
            return True
        best_i, best = -1, None
        for i, lit in enumerate(pending):
            cands = []
            for t in targets[(lit.key, lit.positive)]:
                s2 = _match_args(lit.args, t.args, s, self.injective)
                if s2 is not None:
                    cands.append(s2)
            if not cands:
                return False
            if best is None or len(cands) < len(best):
                best_i, best = i, cands
                if len(cands) == 1:
                    break
        rest = pending[:best_i] + pending[best_i + 1:]
        return any(self._search(rest, s2, targets) for s2 in best)


def theta_subsumes(c: Clause, d: Clause, budget: int = DEFAULT_SUBSUMPTION_BUDGET) -> bool:
    """True iff some substitution maps ``c`` into ``d`` (literal-set inclusion).

    Heads must have the same predicate/arity. Raises ResourceExceeded once
    the backtracking matcher visits more than ``budget`` nodes.
    """
    return _Matcher(budget, injective=False).run(c, d)


def subsumption_equivalent(c: Clause, d: Clause,
                           budget: int = DEFAULT_SUBSUMPTION_BUDGET) -> bool:
    return theta_subsumes(c, d, budget) and theta_subsumes(d, c, budget)


def is_variant(c: Clause, d: Clause, budget: int = DEFAULT_SUBSUMPTION_BUDGET) -> bool:
    """Equality up to variable renaming and body order."""
    if len(set(c.body)) != len(set(d.body)):
        return False
    if len(c.variables) != len(d.variables):
        return False
    return _Matcher(budget, injective=True).run(c, d)


def _shape(t: Term):
    if isinstance(t, Var):
        return "_"
    if isinstance(t, Compound):
        return (t.functor,) + tuple(_shape(a) for a in t.args)
    return str(t)


def clause_signature(c: Clause) -> tuple:
    """Renaming- and order-invariant bucket key; equal for all variants."""
    head = (c.head.key, tuple(_shape(a) for a in c.head.args)) if c.head else None
    body = Counter((lit.predicate, lit.positive, tuple(_shape(a) for a in lit.args))
                   for lit in set(c.body))
    return (head, tuple(sorted(body.items(), key=repr)))


# --------------------------------------------------------------------------
# Ground minimal model (bottom-up oracle)

def ground_minimal_model(program: Program, universe: Iterable[Term],
                         cap: int = DEFAULT_UNIVERSE_CAP) -> frozenset:
    """Least fixpoint of the immediate-consequence operator.

    Every clause is instantiated over all assignments of its variables to
    ``universe``; intended as an independent oracle for small fixtures.
    """
    universe = list(dict.fromkeys(universe))
    total = sum(len(universe) ** len(c.variables) for c in program)
    if total > cap:
        raise UniverseTooLarge(f"{total} ground instances exceed cap {cap}")
    model: set = set()
    while True:
        added = False
        for c in program:
            vs = c.variables
            for combo in itertools.product(universe, repeat=len(vs)):
                s = dict(zip(vs, combo))
                head = apply_literal(c.head, s)
                if head in model:
                    continue
                ok = True
                for b in c.body:
                    g = apply_literal(b, s)
                    if is_builtin(g.key):
                        if not _eval_builtin(g, {}):
                            ok = False
                            break
                    elif g not in model:
                        ok = False
                        break
                if ok:
                    if not head.is_ground():
                        raise ValueError(f"clause {c} is not range-restricted")
                    model.add(head)
                    added = True
        if not added:
            return frozenset(model)


def program_constants(program: Program) -> list:
    """Ground non-compound terms occurring anywhere in ``program``."""
    seen: dict = {}

    def visit(t):
        if isinstance(t, Compound):
            for a in t.args:
                visit(a)
        elif not isinstance(t, Var):
            seen.setdefault(t, None)

    for c in program:
        for lit in ((c.head,) if c.head else ()) + tuple(c.body):
            for a in lit.args:
                visit(a)
    return list(seen)
