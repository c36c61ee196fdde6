"""Explanation reports: a readable text block and an equivalent JSON document."""

from __future__ import annotations

import json
from typing import Dict, List, Tuple

from ..explainer import (STRUCTURED, ExplainResult, Interval, base_features,
                         relev_names)
from ..features import FeatureSet
from .formats import header_lines
from .relevance import RelevanceMap


def _fid_text(f) -> str:
    return repr(float(f))


def _intervals(ivs, relmap: RelevanceMap) -> List[List[str]]:
    return [[relmap.label(i.lo), relmap.label(i.hi)] for i in sorted(ivs)]


def _set_text(ivs, relmap: RelevanceMap) -> str:
    return "{" + ",".join(i.show(relmap) for i in sorted(ivs)) + "}"


def report_document(result: ExplainResult, features: FeatureSet, relmap: RelevanceMap,
                    run: Dict) -> Dict:
    nbd = result.neighborhood
    cache: Dict[str, Interval] = {}
    explanations = []
    for r in result.ranked:
        h = r.explanation
        invented = []
        for name, clause in h.invented:
            iv = relev_names((lit.predicate for lit in clause.body), features, relmap, cache)
            invented.append({"name": name, "clause": str(clause),
                             "interval": [relmap.label(iv.lo), relmap.label(iv.hi)]})
        explanations.append({
            "kind": h.kind,
            "fidelity": float(r.label.fidelity),
            "fidelity_exact": f"{r.label.agree}/{r.label.total}",
            "relevance_intervals": _intervals(r.label.intervals, relmap),
            "top_clause": str(h.top),
            "invented": invented,
            "tie_rank": r.tie_rank,
        })
    return {
        "run": {"seed": run.get("seed"), "config": run.get("config")},
        "instance_id": str(result.instance_id),
        "prediction": str(result.prediction),
        "neighborhood": {"k": nbd.k, "n_pos": len(nbd.e_pos), "n_neg": len(nbd.e_neg)},
        "explanations": explanations,
        "notes": list(result.notes),
        "relevance_effect": result.relevance_effect,
    }


def report_text(result: ExplainResult, features: FeatureSet, relmap: RelevanceMap,
                run: Dict) -> str:
    nbd = result.neighborhood
    out = [header_lines({"seed": run.get("seed"), "config": run.get("config")})]
    out.append(f"Instance: {result.instance_id}\n")
    out.append(f"Prediction: {result.prediction}\n")
    out.append(f"Neighbourhood: k={nbd.k}, |E+|={len(nbd.e_pos)}, |E-|={len(nbd.e_neg)}\n")
    for note in result.notes:
        out.append(f"Note: {note}\n")
    if not result.ranked:
        out.append("\nNo explanations.\n")
        return "".join(out)
    used = set()
    for n, r in enumerate(result.ranked, 1):
        h = r.explanation
        heading = "Structured explanation" if h.kind == STRUCTURED else "Unstructured explanation"
        out.append(f"\n{heading} H{n} (rank {r.tie_rank}):\n")
        out.append(f"Label: ⟨L={_fid_text(r.label.fidelity)}, "
                   f"P={_set_text(r.label.intervals, relmap)}⟩\n")
        for _, clause in h.invented:
            out.append(f"  {clause}\n")
        out.append(f"  {h.top}\n")
        used |= base_features(h)
    out.append("\nFeature definitions:\n")
    cache: Dict[str, Interval] = {}
    for name in sorted(used, key=features.position):
        f = features[features.position(name)]
        iv = relev_names([name], features, relmap, cache)
        out.append(f"  {f.clause}  (Relev = {iv.show(relmap)})\n")
    return "".join(out)


def serialize_report(result: ExplainResult, features: FeatureSet, relmap: RelevanceMap,
                     run: Dict) -> Tuple[str, str]:
    """(text block, JSON document) describing one explained instance."""
    doc = report_document(result, features, relmap, run)
    return (report_text(result, features, relmap, run),
            json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n")
