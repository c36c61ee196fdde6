"""Hand-built feature sets and relevance maps shared by several test modules."""

from drmx.drm import TablePredictor
from drmx.features import FeatureSet, make_feature
from drmx.kbio import parse_clause, parse_relevance
from drmx.logic import Const
from drmx.vectorizer import FeatureVector, VectorizedDataset


def features_from(defs):
    out = []
    for index, text in defs:
        c = parse_clause(text)
        out.append(make_feature(index, c.head.args[0], c.body))
    return FeatureSet(out)


# the worked trains example: two ranks, has_car left out of the assignment
EXAMPLE_FS = features_from([
    (2, "f(X) :- has_car(X, Y), short(Y)."),
    (3, "f(X) :- has_car(X, Y), closed(Y)."),
    (4, "f(X) :- has_car(X, Y), wheels(Y, 3)."),
    (9, "f(X) :- has_car(X, Y), load(Y, triangle)."),
])
EXAMPLE_REL = """
relevance_order([r1, r2]).
relevance(wheels/2, r1). relevance(load/2, r1).
relevance(short/1, r2). relevance(closed/1, r2).
"""

APPENDIX_FS = features_from([
    (537, "f(X) :- atm(X, Y, h, 3, Z), gteq(Z, 0.115)."),
    (1196, "f(X) :- atm(X, Y, c, 22, Z), gteq(Z, -0.111), atm(X, W, c, 22, Z)."),
    (610, "f(X) :- non_ar_hetero_6_ring(X, U), has_property(X, ames, p)."),
    (611, "f(X) :- has_property(X, salmonella, n), has_property(X, mouse_lymph, p)."),
    (1657, "f(X) :- has_property(X, cytogen_ca, n), has_property(X, mouse_lymph, p), "
           "has_property(X, cytogen_sce, p)."),
])
APPENDIX_REL = parse_relevance("""
relevance(atm/5, 1). relevance(gteq/2, 1).
relevance(non_ar_hetero_6_ring/2, 2). relevance(has_property/3, 4).
relevance(alert/2, 3).
""")

POS, NEG = Const("pos"), Const("neg")


def appendix_case():
    """(center, train, predictor): five negatives, each missing one feature,
    so only the full five-feature body separates the center from all of them."""
    rows = [("q", "11111", POS)]
    rows += [(f"n{j}", "".join("0" if i == j else "1" for i in range(5)), NEG)
             for j in range(5)]
    vs = tuple(FeatureVector.from_bits(b, Const(n)) for n, b, _ in rows)
    train = VectorizedDataset(vs, tuple(l for *_, l in rows), 5, (NEG, POS))
    p = TablePredictor({FeatureVector.from_bits(b).bits: l for _, b, l in rows}, NEG, 5)
    return vs[0], train, p
