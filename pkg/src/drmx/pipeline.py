"""End-to-end runs: loading inputs, featurizing, and cross-validated evaluation."""

from __future__ import annotations

import logging
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import drm, explainer
from .errors import NoActiveFeatures, TooFewInstances
from .features import FeatureSet
from .kbio.config import RunConfig
from .kbio.dataset import KnowledgeBase, parse_examples
from .kbio.modes import parse_modes
from .kbio.relevance import RelevanceMap, parse_relevance
from .kbio.syntax import parse_program
from .sampler import FeatureSampler
from .vectorizer import VectorizedDataset, vectorize

log = logging.getLogger(__name__)


def read_text(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def load_kb(kb_path, modes_path, examples_path) -> KnowledgeBase:
    program = parse_program(read_text(kb_path))
    modes = parse_modes(read_text(modes_path))
    examples = parse_examples(read_text(examples_path))
    return KnowledgeBase(program, examples, modes)


def load_relevance(path, policy: str, modes=()) -> RelevanceMap:
    rm = parse_relevance(read_text(path), policy)
    rm.check_modes(modes)
    return rm


def sample_features(kb: KnowledgeBase, examples, cfg: RunConfig,
                    seed: Optional[int] = None) -> Tuple[FeatureSet, FeatureSampler]:
    sampler = FeatureSampler(kb, cfg.depth, cfg.recall_cap, cfg.literal_cap, cfg.max_clause_len,
                             cfg.proof_depth, cfg.subsumption_budget)
    rng = random.Random(cfg.seed if seed is None else seed)
    return sampler.draw(examples, cfg.max_draws, rng), sampler


def stratified_folds(ids: Sequence, labels: Dict, folds: int, seed: int) -> List[List]:
    """Deal each class's shuffled ids round-robin over the folds."""
    if folds < 2:
        raise TooFewInstances("need at least two folds")
    if len(ids) < folds:
        raise TooFewInstances(f"{len(ids)} instances cannot fill {folds} folds")
    rng = random.Random(seed)
    by_class: Dict = {}
    for i in ids:
        by_class.setdefault(labels[i], []).append(i)
    out: List[List] = [[] for _ in range(folds)]
    slot = 0
    for c in sorted(by_class, key=str):
        members = list(by_class[c])
        rng.shuffle(members)
        for i in members:
            out[slot % folds].append(i)
            slot += 1
    position = {i: n for n, i in enumerate(ids)}
    return [sorted(f, key=position.__getitem__) for f in out]


METRICS = ("accuracy", "mean_fidelity", "mean_size", "fraction_structured", "relevance_effect")


@dataclass
class FoldResult:
    fold: int
    seed: int
    n_train: int
    n_test: int
    n_features: int
    accuracy: float
    mean_fidelity: float
    mean_size: float
    fraction_structured: float
    relevance_effect: float
    results: List = field(default_factory=list, repr=False)   # ExplainResult per test id
    features: Optional[FeatureSet] = field(default=None, repr=False)

    def row(self) -> Dict:
        return {k: getattr(self, k) for k in ("fold", "seed", "n_train", "n_test", "n_features",
                                              *METRICS)}


@dataclass
class EvalSummary:
    folds: List[FoldResult]
    mean: Dict[str, float]
    sd: Dict[str, float]

    def to_dict(self) -> Dict:
        return {"folds": [f.row() for f in self.folds], "mean": self.mean, "sd": self.sd}


def empty_result(center, train: VectorizedDataset, predictor, k: int, note: str):
    nbd = explainer.neighborhood(center, train, predictor, k, fallback=True)
    return explainer.ExplainResult(center.instance_id, nbd.prediction, nbd, (), False, False,
                                   (note,))


def explain_one(center, features, train, predictor, relmap, cfg, class_predicate):
    try:
        return explainer.explain(center, features, train, predictor, relmap, cfg, class_predicate)
    except NoActiveFeatures:
        return empty_result(center, train, predictor, cfg.hamming_k,
                            "query has no active features; nothing to explain")


def run_fold(kb: KnowledgeBase, relmap: RelevanceMap, cfg: RunConfig, fold: int, seed: int,
             train_ids, test_ids) -> FoldResult:
    ds = kb.dataset
    examples = [(i, ds.labels[i]) for i in train_ids]
    features, _ = sample_features(kb, examples, cfg, seed)
    train = vectorize(kb, features, train_ids, cfg.proof_depth)
    test = vectorize(kb, features, test_ids, cfg.proof_depth)
    net, _ = drm.train(train, cfg.update(seed=seed))
    predictor = drm.NetworkPredictor(net, train.class_set)
    results = [explain_one(v, features, train, predictor, relmap, cfg, kb.class_predicate)
               for v in test.vectors]
    explained = [r for r in results if r.ranked]
    fids = [r.top.label.fidelity for r in explained]
    sizes = [len(explainer.base_features(r.top.explanation)) for r in explained]
    structured = [r.top.explanation.kind == explainer.STRUCTURED for r in explained]
    n = len(results)
    return FoldResult(
        fold=fold, seed=seed, n_train=len(train_ids), n_test=len(test_ids),
        n_features=len(features),
        accuracy=drm.accuracy(predictor, test),
        mean_fidelity=float(sum(fids) / len(fids)) if fids else 0.0,
        mean_size=sum(sizes) / len(sizes) if sizes else 0.0,
        fraction_structured=sum(structured) / n if n else 0.0,
        relevance_effect=sum(r.relevance_effect for r in results) / n if n else 0.0,
        results=results, features=features)


def _fold_job(args):
    return run_fold(*args)


def crossval(kb: KnowledgeBase, relmap: RelevanceMap, cfg: RunConfig, folds: int,
             workers: int = 1) -> EvalSummary:
    ds = kb.dataset
    parts = stratified_folds(ds.ids, ds.labels, folds, cfg.seed)
    seeder = random.Random(cfg.seed)
    jobs = []
    for f, test_ids in enumerate(parts):
        held = set(test_ids)
        train_ids = [i for i in ds.ids if i not in held]
        jobs.append((kb, relmap, cfg, f + 1, seeder.randrange(2 ** 31), train_ids, test_ids))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_fold_job, jobs))
    else:
        rows = [_fold_job(j) for j in jobs]
    mean, sd = {}, {}
    for m in METRICS:
        vals = [getattr(r, m) for r in rows]
        mean[m] = statistics.fmean(vals)
        sd[m] = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return EvalSummary(rows, mean, sd)
