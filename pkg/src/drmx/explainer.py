"""Local symbolic explanations for single predictions.

An explanation is a feature-clause ``class(X, c) :- f_i(X), ...`` over the
features active in the query's vector, scored by its agreement with the
black-box predictor on a Hamming neighbourhood of training vectors. Bodies
may be regrouped into invented features, and explanations are ranked by
fidelity and then by the relevance intervals of what they mention.
"""

from __future__ import annotations

import enum
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import (ClassMismatch, DenominatorMismatch, EmptyNeighborhood,
                     InvariantViolation, MissingAssignment, MissingDefinition,
                     NoActiveFeatures, NonUniqueDefinition, UnknownFeature)
from .features import FeatureSet
from .kbio.relevance import RelevanceMap
from .logic import Clause, Literal, Term, Var
from .vectorizer import FeatureVector, VectorizedDataset, hamming

log = logging.getLogger(__name__)

UNSTRUCTURED = "unstructured"
STRUCTURED = "structured"
_X = Var("X")


# --- neighbourhoods ----------------------------------------------------------

@dataclass(frozen=True)
class Neighborhood:
    center: Term
    k: int
    prediction: Term
    e_pos: Tuple[Term, ...]
    e_neg: Tuple[Term, ...]
    vectors: Dict[Term, FeatureVector] = field(hash=False, repr=False)
    fallback: bool = False   # nothing in range: E+ = {center}, E- = {}

    @property
    def size(self) -> int:
        return len(self.e_pos) + len(self.e_neg)


def neighborhood(center: FeatureVector, train: VectorizedDataset, predictor, k: int,
                 fallback: bool = False) -> Neighborhood:
    """Training vectors within ``k`` bits of ``center``, split by whether the
    predictor gives them the center's predicted class.

    With ``fallback`` an empty scan yields E+ = {center}, flagged.
    """
    c = predictor.predict(center)
    pos, neg, vecs = [], [], {}
    for v in train.vectors:
        if hamming(center, v) <= k:
            vecs[v.instance_id] = v
            (pos if predictor.predict(v) == c else neg).append(v.instance_id)
    if not pos and not neg and fallback:
        return Neighborhood(center.instance_id, k, c, (center.instance_id,), (),
                            {center.instance_id: center}, True)
    return Neighborhood(center.instance_id, k, c, tuple(pos), tuple(neg), vecs)


# --- explanations ------------------------------------------------------------

@dataclass(frozen=True)
class Explanation:
    kind: str
    top: Clause
    invented: Tuple[Tuple[str, Clause], ...] = ()

    def __post_init__(self):
        if self.kind not in (UNSTRUCTURED, STRUCTURED):
            raise ValueError(f"unknown explanation kind {self.kind!r}")
        if (self.kind == STRUCTURED) != bool(self.invented):
            raise ValueError("structured explanations and only they carry invented features")

    @property
    def label(self) -> Term:
        return self.top.head.args[1]

    @property
    def body_names(self) -> Tuple[str, ...]:
        return tuple(lit.predicate for lit in self.top.body)

    def size(self) -> int:
        return len(self.top.body)

    def __str__(self):
        lines = [str(c) for _, c in self.invented]
        lines.append(str(self.top))
        return "\n".join(lines)


def feature_clause(names: Iterable[str], label: Term, class_predicate: str = "class") -> Clause:
    return Clause(Literal(class_predicate, (_X, label)),
                  tuple(Literal(n, (_X,)) for n in names))


def unstructured(names: Iterable[str], label: Term, class_predicate: str = "class") -> Explanation:
    return Explanation(UNSTRUCTURED, feature_clause(names, label, class_predicate))


def _body_names(c: Clause) -> List[str]:
    out = []
    for lit in c.body:
        if lit.arity != 1 or lit.args[0] != c.head.args[0]:
            raise ValueError(f"{lit} is not a feature literal on the head variable")
        out.append(lit.predicate)
    return out


def unfold_explanation(h: Explanation) -> Explanation:
    """Replace invented literals by their definitions until only base features remain."""
    if h.kind == UNSTRUCTURED:
        return h
    defs: Dict[str, List[Clause]] = {}
    for name, c in h.invented:
        defs.setdefault(name, []).append(c)

    def expand(name: str, trail: Tuple[str, ...]) -> List[str]:
        if name not in defs:
            return [name]
        if len(defs[name]) > 1:
            raise NonUniqueDefinition(f"invented feature {name} has {len(defs[name])} clauses")
        if name in trail:
            raise InvariantViolation(f"invented feature {name} is defined in terms of itself")
        out = []
        for sub in _body_names(defs[name][0]):
            out.extend(expand(sub, trail + (name,)))
        return out

    names: List[str] = []
    for lit in h.top.body:
        if lit.predicate not in defs:
            raise MissingDefinition(lit.predicate)
        names.extend(expand(lit.predicate, ()))
    names = list(dict.fromkeys(names))
    return Explanation(UNSTRUCTURED, Clause(h.top.head, tuple(Literal(n, (h.top.head.args[0],))
                                                              for n in names)))


def base_features(h: Explanation) -> frozenset:
    return frozenset(unfold_explanation(h).body_names)


def _mask(names: Iterable[str], features: FeatureSet) -> int:
    m = 0
    for n in names:
        try:
            m |= 1 << features.position(n)
        except KeyError:
            raise UnknownFeature(n) from None
    return m


def covers(c, v: FeatureVector, features: FeatureSet) -> bool:
    """Does the (unfolded) body hold for ``v``: every body feature's bit set."""
    names = base_features(c) if isinstance(c, Explanation) else _body_names(c)
    m = _mask(names, features)
    return v.bits & m == m


@dataclass(frozen=True)
class Agreement:
    tp: int     # E+ members covered
    tn: int     # E- members not covered
    total: int

    @property
    def fpn(self) -> int:
        return self.total - self.tp - self.tn

    @property
    def fidelity(self) -> Fraction:
        if self.total == 0:
            raise EmptyNeighborhood("fidelity on an empty neighbourhood")
        return Fraction(self.tp + self.tn, self.total)


def _agreement_mask(m: int, nbd: Neighborhood) -> Agreement:
    tp = sum(1 for i in nbd.e_pos if nbd.vectors[i].bits & m == m)
    tn = sum(1 for i in nbd.e_neg if nbd.vectors[i].bits & m != m)
    return Agreement(tp, tn, nbd.size)


def agreement(h, nbd: Neighborhood, features: FeatureSet) -> Agreement:
    names = base_features(h) if isinstance(h, Explanation) else _body_names(h)
    return _agreement_mask(_mask(names, features), nbd)


def fidelity(h, nbd: Neighborhood, features: FeatureSet) -> Fraction:
    if nbd.size == 0:
        raise EmptyNeighborhood(f"neighbourhood of {nbd.center} is empty")
    return agreement(h, nbd, features).fidelity


# --- likelihood --------------------------------------------------------------

@dataclass(frozen=True)
class LikelihoodConfig:
    epsilon: float = 0.05

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")


def clamp_theta(covered: int, n: int) -> float:
    if n <= 0:
        raise ValueError("need at least one training vector to estimate coverage")
    lo = 1 / (2 * n)
    return min(max(covered / n, lo), 1 - lo)


def estimate_theta(h, features: FeatureSet, train: VectorizedDataset) -> float:
    names = base_features(h) if isinstance(h, Explanation) else _body_names(h)
    m = _mask(names, features)
    return clamp_theta(sum(1 for v in train.vectors if v.bits & m == m), len(train))


def log_likelihood_counts(tp: int, tn: int, fpn: int, theta: float, epsilon: float) -> float:
    if epsilon == 1:
        return 0.0
    value = 0.0
    if tp:
        value += tp * math.log((1 - epsilon) / theta + epsilon)
    if tn:
        value += tn * math.log((1 - epsilon) / (1 - theta) + epsilon)
    if fpn:
        value += fpn * math.log(epsilon)
    return value


def log_likelihood(h, nbd: Neighborhood, features: FeatureSet, train: VectorizedDataset,
                   cfg: LikelihoodConfig = LikelihoodConfig()) -> float:
    a = agreement(h, nbd, features)
    return log_likelihood_counts(a.tp, a.tn, a.fpn, estimate_theta(h, features, train),
                                 cfg.epsilon)


# --- unstructured search -----------------------------------------------------

def _beam_key(item):
    score, body = item
    return (-score, len(body), body)


def construct_unstruct(center: FeatureVector, features: FeatureSet, nbd: Neighborhood,
                       beam_width: int = 5, max_body: int = 4, class_predicate: str = "class",
                       label: Optional[Term] = None) -> List[Explanation]:
    """Beam search over subsets of the center's active features.

    Level ``l`` keeps the best ``beam_width`` bodies of ``l`` features;
    children add one more active feature. Every body reaching the best
    fidelity seen is returned (fewest features first), at most
    ``beam_width`` of them.
    """
    _, bodies = beam_search(center, nbd, beam_width, max_body)
    label = nbd.prediction if label is None else label
    return [unstructured((features[i].name for i in body), label, class_predicate)
            for body in bodies[:beam_width]]


def beam_search(center: FeatureVector, nbd: Neighborhood, beam_width: int,
                max_body: int) -> Tuple[Fraction, List[Tuple[int, ...]]]:
    """Best fidelity and every scored body reaching it, uncapped."""
    active = center.active()
    if not active:
        raise NoActiveFeatures(f"{center.instance_id} has no active features")
    if nbd.size == 0:
        raise EmptyNeighborhood(f"neighbourhood of {nbd.center} is empty")
    scored: Dict[Tuple[int, ...], Fraction] = {}

    def score(body):
        s = scored.get(body)
        if s is None:
            m = 0
            for i in body:
                m |= 1 << i
            s = scored[body] = _agreement_mask(m, nbd).fidelity
        return s

    level = sorted(((score((i,)), (i,)) for i in active), key=_beam_key)[:beam_width]
    depth = 1
    while level and depth < max_body:
        children = {}
        for _, body in level:
            for i in active:
                if i not in body:
                    child = tuple(sorted(body + (i,)))
                    if child not in children:
                        children[child] = score(child)
        level = sorted(((s, b) for b, s in children.items()), key=_beam_key)[:beam_width]
        depth += 1
    top = max(scored.values())
    winners = sorted((b for b, s in scored.items() if s == top), key=lambda b: (len(b), b))
    return top, winners


def exhaustive_optimum(center: FeatureVector, nbd: Neighborhood, max_body: int) -> Fraction:
    """Best fidelity over every non-empty body of at most ``max_body`` active features."""
    active = center.active()
    best = None
    for size in range(1, min(max_body, len(active)) + 1):
        for body in itertools.combinations(active, size):
            m = sum(1 << i for i in body)
            f = _agreement_mask(m, nbd).fidelity
            if best is None or f > best:
                best = f
    if best is None:
        raise NoActiveFeatures(f"{center.instance_id} has no active features")
    return best


# --- relevance ---------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Interval:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty relevance interval [{self.lo},{self.hi}]")

    def show(self, relmap: Optional[RelevanceMap] = None) -> str:
        if relmap is None:
            return f"[{self.lo},{self.hi}]"
        return f"[{relmap.label(self.lo)},{relmap.label(self.hi)}]"


def _ranks(f, relmap: RelevanceMap) -> List[int]:
    return [r for r in (relmap.rank_of(key) for key in f.body_predicates()) if r is not None]


def relev_feature(f, relmap: RelevanceMap) -> Interval:
    """[min, max] rank over the feature body's predicates.

    Predicates the map leaves out under the inherit policy do not count; a
    body with nothing left gets the lowest rank.
    """
    ranks = _ranks(f, relmap)
    if not ranks:
        if relmap.missing == "strict":
            raise MissingAssignment(f"no relevance information for {f.name}")
        return Interval(0, 0)
    return Interval(min(ranks), max(ranks))


def relev_names(names: Iterable[str], features: FeatureSet, relmap: RelevanceMap,
                cache: Optional[Dict[str, Interval]] = None) -> Interval:
    ivs = []
    for n in names:
        if cache is not None and n in cache:
            ivs.append(cache[n])
            continue
        try:
            iv = relev_feature(features[features.position(n)], relmap)
        except KeyError:
            raise UnknownFeature(n) from None
        if cache is not None:
            cache[n] = iv
        ivs.append(iv)
    if not ivs:
        raise ValueError("relevance of an empty body")
    return Interval(min(i.lo for i in ivs), max(i.hi for i in ivs))


def relev_explanation(h: Explanation, features: FeatureSet, relmap: RelevanceMap,
                      cache=None) -> frozenset:
    if h.kind == UNSTRUCTURED:
        return frozenset({relev_names(h.body_names, features, relmap, cache)})
    out = set()
    for name, _ in h.invented:
        part = Explanation(STRUCTURED, Clause(h.top.head, (Literal(name, (_X,)),)), h.invented)
        out.add(relev_names(base_features(part), features, relmap, cache))
    return frozenset(out)


class Order(enum.Enum):
    LESS = "less"
    EQUAL = "equal"
    GREATER = "greater"
    INCOMPARABLE = "incomparable"


def _combine(le: bool, ge: bool) -> Order:
    if le and ge:
        return Order.EQUAL
    if le:
        return Order.LESS
    if ge:
        return Order.GREATER
    return Order.INCOMPARABLE


def _set_le(s, t) -> bool:
    return all(any(a.lo <= c.lo and a.hi <= c.hi for c in t) for a in s)


def compare_interval_sets(s, t) -> Order:
    return _combine(_set_le(s, t), _set_le(t, s))


@dataclass(frozen=True)
class ExplanationLabel:
    agree: int
    total: int
    intervals: frozenset

    @property
    def fidelity(self) -> Fraction:
        return Fraction(self.agree, self.total)


def compare_labels(a: ExplanationLabel, b: ExplanationLabel, mode: str = "dictionary") -> Order:
    if a.total != b.total:
        raise DenominatorMismatch(f"labels over {a.total} and {b.total} instances")
    fa, fb = a.fidelity, b.fidelity
    prior = compare_interval_sets(a.intervals, b.intervals)
    if mode == "dictionary":
        if fa != fb:
            return Order.LESS if fa < fb else Order.GREATER
        return prior
    if mode == "qualitative":
        le = fa <= fb and prior in (Order.LESS, Order.EQUAL)
        ge = fa >= fb and prior in (Order.GREATER, Order.EQUAL)
        return _combine(le, ge)
    raise ValueError(f"unknown comparison mode {mode!r}")


# --- structuring -------------------------------------------------------------

def set_partitions(items: Sequence, k: int) -> Iterator[List[Tuple]]:
    """Partitions of ``items`` into exactly ``k`` non-empty blocks, each once."""
    items = list(items)
    n = len(items)
    if k < 1 or k > n:
        return

    def grow(i, blocks):
        if i == n:
            if len(blocks) == k:
                yield [tuple(b) for b in blocks]
            return
        if len(blocks) + (n - i) < k:
            return
        for b in blocks:
            b.append(items[i])
            yield from grow(i + 1, blocks)
            b.pop()
        if len(blocks) < k:
            blocks.append([items[i]])
            yield from grow(i + 1, blocks)
            blocks.pop()

    yield from grow(0, [])


def construct_struct(h: Explanation, features: FeatureSet, relmap: RelevanceMap, k: int = 2,
                     tag: int = 1, cache=None) -> Optional[Explanation]:
    """Regroup ``h``'s body into ``k`` invented features, if that can raise relevance.

    A partition qualifies when some block has two or more features and some
    block's lowest rank is strictly above ``h``'s lowest rank. Among the
    qualifying partitions with a maximal interval set, the one with fewest
    mixed blocks (lo != hi), then the lexicographically first, is used.
    Returns None when nothing qualifies.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if h.kind != UNSTRUCTURED:
        raise ValueError("construct_struct expects an unstructured explanation")
    names = sorted(set(h.body_names), key=features.position)
    alpha = relev_names(names, features, relmap, cache).lo
    candidates = []
    for blocks in set_partitions(names, k):
        ivs = [relev_names(b, features, relmap, cache) for b in blocks]
        if not any(len(b) >= 2 for b in blocks):
            continue
        if not any(iv.lo > alpha for iv in ivs):
            continue
        key = tuple(sorted(tuple(features.position(n) for n in b) for b in blocks))
        candidates.append((frozenset(ivs), sum(iv.lo != iv.hi for iv in ivs), key, blocks))
    if not candidates:
        return None
    maximal = [c for c in candidates
               if not any(compare_interval_sets(c[0], d[0]) == Order.LESS for d in candidates)]
    _, _, key, _ = min(maximal, key=lambda c: (c[1], c[2]))
    invented = []
    top_body = []
    for j, block in enumerate(key, 1):
        name = f"inv{tag}_{j}"
        invented.append((name, Clause(Literal(name, (_X,)),
                                      tuple(Literal(features[i].name, (_X,)) for i in block))))
        top_body.append(Literal(name, (_X,)))
    return Explanation(STRUCTURED, Clause(h.top.head, tuple(top_body)), tuple(invented))


def invented_program(h: Explanation) -> List[Clause]:
    return [c for _, c in h.invented]


def feature_clause_lgg(c1: Clause, c2: Clause) -> Clause:
    """Least general generalisation of two feature-clauses for the same class."""
    if c1.head.predicate != c2.head.predicate or c1.head.args[1:] != c2.head.args[1:]:
        raise ClassMismatch(f"{c1.head} and {c2.head} are not for the same class")
    shared = set(_body_names(c2))
    body = [n for n in dict.fromkeys(_body_names(c1)) if n in shared]
    if not body:
        log.warning("lgg of %s and %s has an empty body", c1, c2)
    x = c1.head.args[0]
    return Clause(c1.head, tuple(Literal(n, (x,)) for n in body))


# --- the pipeline ------------------------------------------------------------

@dataclass(frozen=True)
class RankedExplanation:
    explanation: Explanation
    label: ExplanationLabel
    tie_rank: int
    source: int                 # position of the unstructured explanation it came from
    log_likelihood: float


@dataclass(frozen=True)
class ExplainResult:
    instance_id: Term
    prediction: Term
    neighborhood: Neighborhood
    ranked: Tuple[RankedExplanation, ...]
    relevance_effect: bool
    beam_capped: bool
    notes: Tuple[str, ...] = ()

    @property
    def top(self) -> Optional[RankedExplanation]:
        return self.ranked[0] if self.ranked else None


def label_of(h: Explanation, nbd: Neighborhood, features: FeatureSet, relmap: RelevanceMap,
             cache=None) -> ExplanationLabel:
    a = agreement(h, nbd, features)
    return ExplanationLabel(a.tp + a.tn, a.total, relev_explanation(h, features, relmap, cache))


def explain(center: FeatureVector, features: FeatureSet, train: VectorizedDataset, predictor,
            relmap: RelevanceMap, cfg, class_predicate: str = "class") -> ExplainResult:
    """Neighbourhood, beam search, structuring, labelling and ranking for one query."""
    nbd = neighborhood(center, train, predictor, cfg.hamming_k, fallback=True)
    notes = []
    if nbd.fallback:
        notes.append(f"no training vector within {cfg.hamming_k} bits; "
                     "neighbourhood is the query alone")
    _, bodies = beam_search(center, nbd, cfg.beam_width, cfg.max_body)
    beam_capped = len(bodies) > cfg.beam_width
    bodies = bodies[:cfg.beam_width]
    if beam_capped:
        notes.append(f"more than {cfg.beam_width} bodies reach the best fidelity; "
                     f"showing {cfg.beam_width}")
    cache: Dict[str, Interval] = {}
    lcfg = LikelihoodConfig(cfg.epsilon)
    generated = []
    for n, body in enumerate(bodies):
        h = unstructured((features[i].name for i in body), nbd.prediction, class_predicate)
        lab = label_of(h, nbd, features, relmap, cache)
        generated.append((h, lab, n))
        s = construct_struct(h, features, relmap, cfg.partition_count, tag=n + 1, cache=cache)
        if s is not None:
            slab = label_of(s, nbd, features, relmap, cache)
            _check_structuring(h, lab, s, slab)
            generated.append((s, slab, n))
    ranks = []
    for h, lab, _ in generated:
        ranks.append(1 + sum(compare_labels(o, lab, cfg.compare_mode) == Order.GREATER
                             for _, o, _ in generated))
    order = sorted(range(len(generated)), key=lambda i: (ranks[i], i))
    ranked = tuple(RankedExplanation(generated[i][0], generated[i][1], ranks[i], generated[i][2],
                                     log_likelihood(generated[i][0], nbd, features, train, lcfg))
                   for i in order)
    base = generated[0][1]
    effect = any(compare_labels(lab, base, cfg.compare_mode) == Order.GREATER
                 for _, lab, _ in generated)
    return ExplainResult(center.instance_id, nbd.prediction, nbd, ranked, effect, beam_capped,
                         tuple(notes))


def _check_structuring(h, hl: ExplanationLabel, s, sl: ExplanationLabel) -> None:
    if hl.agree != sl.agree or hl.total != sl.total:
        raise InvariantViolation(f"structuring changed fidelity of {h.top}")
    if compare_interval_sets(hl.intervals, sl.intervals) not in (Order.LESS, Order.EQUAL):
        raise InvariantViolation(f"structuring lowered relevance of {h.top}")
    if base_features(s) != base_features(h):
        raise InvariantViolation(f"structured form of {h.top} does not unfold back to it")
