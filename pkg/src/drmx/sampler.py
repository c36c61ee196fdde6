"""Rejection sampling of relevant, non-redundant features from bottom clauses."""

from __future__ import annotations

import logging
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Sequence

from .errors import EmptyBottom, ResourceExceeded
from .features import FeatureDef, FeatureSet, make_feature
from .logic import DEFAULT_SUBSUMPTION_BUDGET, Clause, Literal,subsumption_equivalent
from .saturation import BottomClause, build_bottom_clause

log = logging.getLogger(__name__)

_REDUNDANCY_HEAD = "feature"


def draw_clause(bottom: BottomClause, rng: random.Random, max_len: int) -> Clause:
    """A random head-connected sub-clause of ``bottom``.

    The target length is uniform on 1..min(max_len, |body|); literals are
    then added one at a time, uniformly among those whose input variables
    are already in scope. Stops early if no literal can extend the clause.
    """
    n = len(bottom.body)
    if n == 0:
        raise EmptyBottom(f"bottom clause for {bottom.example} has an empty body")
    target = rng.randint(1, min(max_len, n))
    scope = set(bottom.head_vars())
    chosen: List[int] = []
    remaining = list(range(n))
    while len(chosen) < target:
        ready = [i for i in remaining if all(v in scope for v in bottom.input_vars(i))]
        if not ready:
            break
        pick = ready[rng.randrange(len(ready))]
        chosen.append(pick)
        remaining.remove(pick)
        scope.update(bottom.output_vars(pick))
    chosen.sort()
    return Clause(bottom.head, tuple(bottom.body[i] for i in chosen))


def _redundancy_form(c: Clause) -> Clause:
    # compare bodies only: drawn clauses of different classes still collide
    return Clause(Literal(_REDUNDANCY_HEAD, (c.head.args[0],)), c.body)


def is_redundant(c: Clause, drawn: Sequence[Clause],
                 budget: int = DEFAULT_SUBSUMPTION_BUDGET) -> bool:
    """True iff some drawn clause has the same body length and is
    subsumption-equivalent to ``c``. Budget overruns count as redundant."""
    n = len(set(c.body))
    for d in drawn:
        if len(set(d.body)) != n:
            continue
        try:
            if subsumption_equivalent(c, d, budget):
                return True
        except ResourceExceeded:
            log.warning("subsumption budget exceeded; treating %s as redundant", c)
            return True
    return False


@dataclass
class SamplingStats:
    draws: int = 0
    empty_bottoms: int = 0
    redundant: int = 0
    accepted: int = 0
    truncated_bottoms: int = 0


class FeatureSampler:
    """Stateful form of the draw loop; keeps bottom clauses cached per example."""

    def __init__(self, kb, depth: int, recall_cap: int = 10, literal_cap: int = 256,
                 max_clause_len: int = 4, proof_depth: int = 64,
                 budget: int = DEFAULT_SUBSUMPTION_BUDGET):
        self.kb = kb
        self.depth = depth
        self.recall_cap = recall_cap
        self.literal_cap = literal_cap
        self.max_clause_len = max_clause_len
        self.proof_depth = proof_depth
        self.budget = budget
        self._bottoms: Dict[object, BottomClause] = {}
        self.stats = SamplingStats()

    def bottom(self, example) -> BottomClause:
        b = self._bottoms.get(example)
        if b is None:
            ident = example[0]
            b = build_bottom_clause(self.kb.scoped(ident), example, self.kb.modes, self.depth,
                                    self.recall_cap, self.literal_cap, self.proof_depth)
            if b.truncated:
                self.stats.truncated_bottoms += 1
            self._bottoms[example] = b
        return b

    def draw(self, examples, max_draws: int, rng: random.Random) -> FeatureSet:
        examples = list(examples)
        features: List[FeatureDef] = []
        by_length: Dict[int, List[Clause]] = defaultdict(list)
        if max_draws > 0 and not examples:
            raise ValueError("no examples to draw from")
        for _ in range(max_draws):
            self.stats.draws += 1
            example = examples[rng.randrange(len(examples))]
            bottom = self.bottom(example)
            if not bottom.body:
                self.stats.empty_bottoms += 1
                continue
            c = draw_clause(bottom, rng, self.max_clause_len)
            form = _redundancy_form(c)
            if is_redundant(form, by_length[len(set(c.body))], self.budget):
                self.stats.redundant += 1
                continue
            by_length[len(set(c.body))].append(form)
            features.append(make_feature(len(features) + 1, c.head.args[0], c.body,
                                         example[0], example[1]))
            self.stats.accepted += 1
        return FeatureSet(features)


def draw_features(kb, examples, depth: int, max_draws: int, rng: random.Random,
                  **kw) -> FeatureSet:
    """Draw up to ``max_draws`` features; every attempt counts as a draw."""
    return FeatureSampler(kb, depth, **kw).draw(examples, max_draws, rng)
