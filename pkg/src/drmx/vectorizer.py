"""Boolean feature vectors for relational instances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import WidthMismatch
from .features import FeatureDef, FeatureSet
from .logic import DEFAULT_DEPTH_BOUND, Program, Term, apply_literal, sld_prove


@dataclass(frozen=True)
class FeatureVector:
    """Packed bits: bit ``i`` (``(bits >> i) & 1``) is feature ``i``."""

    bits: int
    width: int
    instance_id: Optional[Term] = None

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.width:
            raise ValueError("bits outside vector width")

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.width:
            raise IndexError(i)
        return (self.bits >> i) & 1

    def __len__(self):
        return self.width

    def active(self) -> List[int]:
        return [i for i in range(self.width) if (self.bits >> i) & 1]

    def to_bitstring(self) -> str:
        return "".join(str((self.bits >> i) & 1) for i in range(self.width))

    def to_array(self) -> np.ndarray:
        return np.array([(self.bits >> i) & 1 for i in range(self.width)], dtype=float)

    @classmethod
    def from_bits(cls, seq: Sequence[int], instance_id=None) -> "FeatureVector":
        bits = 0
        for i, b in enumerate(seq):
            if b not in (0, 1, "0", "1", True, False):
                raise ValueError(f"not a bit: {b!r}")
            if int(b):
                bits |= 1 << i
        return cls(bits, len(seq), instance_id)


@dataclass(frozen=True)
class EvalOutcome:
    value: bool
    cut: bool


def evaluate_feature(feature: FeatureDef, program: Program, instance: Term,
                     depth_bound: int = DEFAULT_DEPTH_BOUND) -> EvalOutcome:
    """Prove the feature body with the head variable bound to ``instance``.

    ``program`` must already hold the instance's facts (see
    ``KnowledgeBase.scoped``).
    """
    s = {feature.var: instance}
    goal = [apply_literal(lit, s) for lit in feature.body]
    result = sld_prove(program, goal, depth_bound, answer_cap=1)
    return EvalOutcome(bool(result.answers), result.cut)


def feature_vector(instance: Term, features: FeatureSet, program: Program,
                   depth_bound: int = DEFAULT_DEPTH_BOUND) -> FeatureVector:
    bits = 0
    for i, f in enumerate(features):
        if evaluate_feature(f, program, instance, depth_bound).value:
            bits |= 1 << i
    return FeatureVector(bits, len(features), instance)


def hamming(u: FeatureVector, v: FeatureVector) -> int:
    if u.width != v.width:
        raise WidthMismatch(f"vector widths differ: {u.width} vs {v.width}")
    return (u.bits ^ v.bits).bit_count()


@dataclass(frozen=True)
class VectorizedDataset:
    vectors: Tuple[FeatureVector, ...]
    labels: Tuple[Term, ...]
    feature_count: int
    class_set: Tuple[Term, ...] = ()

    def __post_init__(self):
        if len(self.vectors) != len(self.labels):
            raise ValueError("vectors and labels are not aligned")
        if any(v.width != self.feature_count for v in self.vectors):
            raise WidthMismatch("vectors differ in width")
        if not self.class_set:
            object.__setattr__(self, "class_set", tuple(sorted(set(self.labels), key=str)))

    def __len__(self):
        return len(self.vectors)

    @property
    def ids(self) -> Tuple[Term, ...]:
        return tuple(v.instance_id for v in self.vectors)

    def by_id(self) -> Dict[Term, FeatureVector]:
        return {v.instance_id: v for v in self.vectors}

    def matrix(self) -> np.ndarray:
        if not self.vectors:
            return np.zeros((0, self.feature_count))
        return np.stack([v.to_array() for v in self.vectors])

    def targets(self) -> np.ndarray:
        index = {c: i for i, c in enumerate(self.class_set)}
        return np.array([index[c] for c in self.labels], dtype=int)

    def subset(self, ids) -> "VectorizedDataset":
        pos = {v.instance_id: n for n, v in enumerate(self.vectors)}
        rows = [pos[i] for i in ids]
        return VectorizedDataset(tuple(self.vectors[r] for r in rows),
                                 tuple(self.labels[r] for r in rows),
                                 self.feature_count, self.class_set)


def vectorize(kb, features: FeatureSet, ids=None,
              depth_bound: int = DEFAULT_DEPTH_BOUND) -> VectorizedDataset:
    """Vectorize ``ids`` (default: every example) of a KnowledgeBase."""
    ds = kb.dataset
    ids = ds.ids if ids is None else tuple(ids)
    vectors = tuple(feature_vector(i, features, kb.scoped(i), depth_bound) for i in ids)
    return VectorizedDataset(vectors, tuple(ds.labels[i] for i in ids), len(features),
                             ds.class_set)
