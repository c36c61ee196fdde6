import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from drmx import explainer as ex
from drmx.drm import TablePredictor
from drmx.errors import (ClassMismatch, DenominatorMismatch, EmptyNeighborhood,
                         MissingAssignment, MissingDefinition, NoActiveFeatures,
                         NonUniqueDefinition, UnknownFeature)
from drmx.explainer import Interval, Order
from drmx.kbio import RunConfig, parse_program, parse_relevance
from drmx.logic import Clause, Const, Literal, Var, ground_minimal_model, program_constants, \
    sld_prove
from drmx.vectorizer import FeatureVector, VectorizedDataset, hamming

from fixtures import (APPENDIX_FS, APPENDIX_REL, EXAMPLE_FS, EXAMPLE_REL, appendix_case,
                      features_from)
from oracles import lattice_optimum

EAST, WEST = Const("east"), Const("west")
X = Var("X")


@pytest.fixture
def rel():
    return parse_relevance(EXAMPLE_REL, "inherit")


def structured(top_names, defs, label=EAST):
    invented = tuple((name, Clause(Literal(name, (X,)), tuple(Literal(n, (X,)) for n in body)))
                     for name, body in defs)
    return ex.Explanation(ex.STRUCTURED, ex.feature_clause(top_names, label), invented)


H1 = structured(["f_11", "f_12"], [("f_11", ["f_2", "f_3"]), ("f_12", ["f_4", "f_9"])])
H = ex.unstructured(["f_2", "f_3", "f_4", "f_9"], EAST)


def dataset(rows, width):
    vs = tuple(FeatureVector.from_bits(bits, Const(name)) for name, bits, _ in rows)
    return VectorizedDataset(vs, tuple(lbl for _, _, lbl in rows), width, (EAST, WEST))


def table(rows, width, default=EAST):
    return TablePredictor({FeatureVector.from_bits(b).bits: p for _, b, p in rows}, default, width)


# --- neighbourhoods ------------------------------------------------------------

def test_hamming_examples():
    a, b = FeatureVector.from_bits("0101"), FeatureVector.from_bits("0000")
    assert hamming(a, a) == 0
    assert hamming(b, FeatureVector.from_bits("1111")) == 4


ROWS = [("a", "1100", EAST), ("b", "1100", WEST), ("c", "1110", EAST), ("d", "0011", WEST)]


def test_radius_zero_keeps_duplicates():
    train = dataset(ROWS, 4)
    p = TablePredictor({FeatureVector.from_bits("1100").bits: EAST}, WEST, 4)
    nbd = ex.neighborhood(train.vectors[0], train, p, 0)
    assert set(nbd.e_pos) == {Const("a"), Const("b")} and nbd.e_neg == ()
    p2 = table(ROWS, 4)
    nbd2 = ex.neighborhood(train.vectors[0], train, p2, 0)
    assert Const("a") in nbd2.e_pos


def test_full_radius_is_whole_training_set():
    train = dataset(ROWS, 4)
    nbd = ex.neighborhood(train.vectors[0], train, table(ROWS, 4), 4)
    assert set(nbd.e_pos) | set(nbd.e_neg) == set(train.ids)
    assert not set(nbd.e_pos) & set(nbd.e_neg)


def test_empty_neighbourhood_fallback():
    train = dataset(ROWS, 4)
    center = FeatureVector.from_bits("0000", Const("q"))
    assert ex.neighborhood(center, train, table(ROWS, 4), 1).size == 0
    nbd = ex.neighborhood(center, train, table(ROWS, 4), 1, fallback=True)
    assert nbd.fallback and nbd.e_pos == (Const("q"),) and nbd.e_neg == ()


def test_trains_neighbourhood_matches_scan(trains_vectors, trains_network):
    _, _, p = trains_network
    for center in trains_vectors.vectors:
        nbd = ex.neighborhood(center, trains_vectors, p, 5)
        c = p.predict(center)
        pos, neg = [], []
        for v in trains_vectors.vectors:
            d = sum(a != b for a, b in zip(center.to_bitstring(), v.to_bitstring()))
            if d <= 5:
                (pos if p.predict(v) == c else neg).append(v.instance_id)
        assert (list(nbd.e_pos), list(nbd.e_neg)) == (pos, neg)


# --- coverage and fidelity -----------------------------------------------------

def test_covers_single_and_pair():
    fs = features_from([(1, "f(X) :- a(X)."), (2, "f(X) :- b(X).")])
    v = FeatureVector.from_bits("10")
    assert ex.covers(ex.feature_clause(["f_1"], EAST), v, fs)
    assert not ex.covers(ex.feature_clause(["f_1", "f_2"], EAST), v, fs)
    with pytest.raises(UnknownFeature):
        ex.covers(ex.feature_clause(["f_7"], EAST), v, fs)


def test_coverage_matches_sld(trains_kb, trains_features, trains_vectors):
    fs, _ = trains_features
    rng = random.Random(5)
    defs = fs.definitions()
    checked = 0
    for v in trains_vectors.vectors:
        prog = trains_kb.scoped(v.instance_id).extend(defs)
        for _ in range(30):
            names = rng.sample([f.name for f in fs], rng.randint(1, 3))
            h = ex.unstructured(names, EAST)
            goal = [Literal(n, (v.instance_id,)) for n in names]
            assert ex.covers(h, v, fs) == bool(sld_prove(prog, goal).answers)
            checked += 1
    assert checked == 300


def test_fidelity_four_fifths():
    fs = features_from([(1, "f(X) :- a(X).")])
    rows = [(n, "1", EAST) for n in "pqr"] + [("s", "0", EAST), ("t", "0", WEST)]
    train = dataset(rows, 1)
    nbd = ex.Neighborhood(Const("p"), 1, EAST, tuple(Const(c) for c in "pqrs"), (Const("t"),),
                          train.by_id())
    assert ex.fidelity(ex.unstructured(["f_1"], EAST), nbd, fs) == Fraction(4, 5)


def test_most_specific_clause_of_lone_center_has_fidelity_one():
    fs = features_from([(1, "f(X) :- a(X)."), (2, "f(X) :- b(X).")])
    v = FeatureVector.from_bits("11", Const("q"))
    nbd = ex.Neighborhood(Const("q"), 0, EAST, (Const("q"),), (), {Const("q"): v}, True)
    assert ex.fidelity(ex.unstructured(["f_1", "f_2"], EAST), nbd, fs) == 1


def test_empty_neighbourhood_has_no_fidelity():
    fs = features_from([(1, "f(X) :- a(X).")])
    nbd = ex.Neighborhood(Const("q"), 0, EAST, (), (), {})
    with pytest.raises(EmptyNeighborhood):
        ex.fidelity(ex.unstructured(["f_1"], EAST), nbd, fs)


# --- likelihood --------------------------------------------------------------

def test_epsilon_one_gives_zero():
    assert ex.log_likelihood_counts(7, 3, 2, 0.3, 1.0) == 0.0


def test_half_theta_small_epsilon_limit():
    value = ex.log_likelihood_counts(4, 3, 0, 0.5, 1e-12)
    assert value == pytest.approx(7 * math.log(2), abs=1e-9)


def test_theta_clamp():
    assert ex.clamp_theta(0, 10) == 1 / 20
    assert ex.clamp_theta(10, 10) == 1 - 1 / 20
    assert ex.clamp_theta(3, 10) == 0.3


@settings(max_examples=200)
@given(st.integers(1, 40), st.data(), st.floats(0.01, 0.99), st.floats(0.001, 0.999))
def test_dominance_orders_fidelity_and_likelihood_alike(total, data, theta, eps):
    tp1 = data.draw(st.integers(0, total))
    tn1 = data.draw(st.integers(0, total - tp1))
    tp2 = data.draw(st.integers(0, tp1))
    tn2 = data.draw(st.integers(0, tn1))
    f1, f2 = Fraction(tp1 + tn1, total), Fraction(tp2 + tn2, total)
    l1 = ex.log_likelihood_counts(tp1, tn1, total - tp1 - tn1, theta, eps)
    l2 = ex.log_likelihood_counts(tp2, tn2, total - tp2 - tn2, theta, eps)
    assert f1 >= f2 and l1 >= l2
    assert (f1 > f2) == (l1 > l2)


# --- unstructured search -----------------------------------------------------

def test_no_negatives_any_single_feature_is_perfect():
    rows = [("a", "1101", EAST), ("b", "0111", EAST)]
    train = dataset(rows, 4)
    fs = features_from([(i, f"f(X) :- p{i}(X).") for i in range(1, 5)])
    nbd = ex.neighborhood(train.vectors[0], train, TablePredictor({}, EAST, 4), 1)
    assert nbd.e_pos == (Const("a"),) and nbd.e_neg == ()
    out = ex.construct_unstruct(train.vectors[0], fs, nbd, beam_width=5, max_body=3)
    assert len(out) == 5 and all(ex.fidelity(h, nbd, fs) == 1 for h in out)
    assert [h.body_names for h in out][:3] == [("f_1",), ("f_2",), ("f_4",)]


def test_lgg_seed_body_is_perfect():
    rows = [("t1", "111", EAST), ("t2", "110", EAST)]
    train = dataset(rows, 3)
    fs = features_from([(i, f"f(X) :- p{i}(X).") for i in range(1, 4)])
    nbd = ex.neighborhood(train.vectors[0], train, TablePredictor({}, EAST, 3), 3)
    c1 = ex.feature_clause(["f_1", "f_2", "f_3"], EAST)
    c2 = ex.feature_clause(["f_1", "f_2"], EAST)
    lgg = ex.feature_clause_lgg(c1, c2)
    assert ex._body_names(lgg) == ["f_1", "f_2"]
    assert ex.fidelity(lgg, nbd, fs) == 1


def test_lgg_identical_and_disjoint(caplog):
    c = ex.feature_clause(["f_1", "f_2"], EAST)
    assert ex.feature_clause_lgg(c, c) == c
    d = ex.feature_clause_lgg(c, ex.feature_clause(["f_3"], EAST))
    assert d.body == () and "empty body" in caplog.text
    with pytest.raises(ClassMismatch):
        ex.feature_clause_lgg(c, ex.feature_clause(["f_1"], WEST))


def test_no_active_features():
    rows = [("a", "00", EAST)]
    train = dataset(rows, 2)
    nbd = ex.neighborhood(train.vectors[0], train, TablePredictor({}, EAST, 2), 2)
    with pytest.raises(NoActiveFeatures):
        ex.beam_search(train.vectors[0], nbd, 5, 3)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_beam_matches_lattice_oracle(seed):
    rng = random.Random(seed)
    width = rng.randint(1, 10)
    rows = []
    for n in range(rng.randint(1, 12)):
        bits = "".join(rng.choice("01") for _ in range(width))
        rows.append((f"i{n}", bits, rng.choice([EAST, WEST])))
    center_bits = "".join(rng.choice("01") for _ in range(width))
    assume("1" in center_bits)
    train = dataset(rows, width)
    center = FeatureVector.from_bits(center_bits, Const("q"))
    p = table(rows, width)
    nbd = ex.neighborhood(center, train, p, rng.randint(0, width), fallback=True)
    max_body = rng.randint(1, 4)
    best, winners = ex.beam_search(center, nbd, beam_width=width + 1, max_body=max_body)
    pos = [nbd.vectors[i].bits for i in nbd.e_pos]
    neg = [nbd.vectors[i].bits for i in nbd.e_neg]
    assert best == lattice_optimum(center.active(), pos, neg, max_body)
    assert best == ex.exhaustive_optimum(center, nbd, max_body)
    assert winners == sorted(winners, key=lambda b: (len(b), b))


# --- unfolding ---------------------------------------------------------------

def test_unfold_worked_example():
    u = ex.unfold_explanation(H1)
    assert str(u.top) == "class(X,east) :- f_2(X), f_3(X), f_4(X), f_9(X)."


def test_unfold_with_trivial_invented_feature():
    h = structured(["g_1", "g_2"], [("g_1", ["f_1"]), ("g_2", ["f_3", "f_9"])])
    assert ex.unfold_explanation(h).body_names == ("f_1", "f_3", "f_9")


def test_unfold_errors():
    h = ex.Explanation(ex.STRUCTURED, ex.feature_clause(["g_1", "f_2"], EAST), H1.invented)
    with pytest.raises(MissingDefinition):
        ex.unfold_explanation(h)
    dup = ex.Explanation(ex.STRUCTURED, ex.feature_clause(["f_11"], EAST),
                         H1.invented + (("f_11", Clause(Literal("f_11", (X,)),
                                                        (Literal("f_4", (X,)),))),))
    with pytest.raises(NonUniqueDefinition):
        ex.unfold_explanation(dup)


# --- relevance ---------------------------------------------------------------

def test_feature_intervals_of_worked_example(rel):
    ivs = [ex.relev_feature(f, rel) for f in EXAMPLE_FS]
    assert [iv.show(rel) for iv in ivs] == ["[r2,r2]", "[r2,r2]", "[r1,r1]", "[r1,r1]"]


def test_single_predicate_is_degenerate(rel):
    f = features_from([(1, "f(X) :- short(X).")])[0]
    assert ex.relev_feature(f, rel) == Interval(1, 1)


def test_strict_policy_needs_every_predicate(rel):
    with pytest.raises(MissingAssignment):
        ex.relev_feature(EXAMPLE_FS[0], rel.with_policy("strict"))
    lowest = rel.with_policy("lowest")
    assert ex.relev_feature(EXAMPLE_FS[0], lowest) == Interval(0, 1)


def test_explanation_intervals_of_worked_example(rel):
    r_h = ex.relev_explanation(H, EXAMPLE_FS, rel)
    r_h1 = ex.relev_explanation(H1, EXAMPLE_FS, rel)
    assert r_h == {Interval(0, 1)}
    assert r_h1 == {Interval(0, 0), Interval(1, 1)}
    assert ex.compare_interval_sets(r_h, r_h1) == Order.LESS


def test_construct_struct_worked_example(rel):
    s = ex.construct_struct(H, EXAMPLE_FS, rel, k=2)
    blocks = {frozenset(ex._body_names(c)) for _, c in s.invented}
    assert blocks == {frozenset({"f_2", "f_3"}), frozenset({"f_4", "f_9"})}
    assert ex.relev_explanation(s, EXAMPLE_FS, rel) == {Interval(0, 0), Interval(1, 1)}
    assert ex.base_features(s) == ex.base_features(H)


def test_construct_struct_absent_cases(rel):
    assert ex.construct_struct(ex.unstructured(["f_2", "f_3"], EAST), EXAMPLE_FS, rel) is None
    assert ex.construct_struct(ex.unstructured(["f_4"], EAST), EXAMPLE_FS, rel) is None


def test_set_partitions_counts():
    # Stirling numbers of the second kind
    assert sum(1 for _ in ex.set_partitions(range(5), 2)) == 15
    assert sum(1 for _ in ex.set_partitions(range(5), 3)) == 25
    assert list(ex.set_partitions(range(2), 3)) == []
    for part in ex.set_partitions("abcd", 2):
        assert sorted(itertools.chain(*part)) == list("abcd")


def test_appendix_feature_intervals():
    shown = [ex.relev_feature(f, APPENDIX_REL).show(APPENDIX_REL) for f in APPENDIX_FS]
    assert shown == ["[1,1]", "[1,1]", "[2,4]", "[4,4]", "[4,4]"]


def test_appendix_structured_alternatives_share_one_label():
    names = [f.name for f in APPENDIX_FS]
    h = ex.unstructured(names, Const("pos"))
    assert {iv.show(APPENDIX_REL) for iv in ex.relev_explanation(h, APPENDIX_FS, APPENDIX_REL)} \
        == {"[1,4]"}
    rest = ["f_537", "f_1196", "f_610"]
    for block in (["f_1657"], ["f_611"], ["f_1657", "f_611"]):
        other = rest + [n for n in ("f_611", "f_1657") if n not in block]
        s = structured(["g_1", "g_2"], [("g_1", block), ("g_2", other)], Const("pos"))
        ivs = ex.relev_explanation(s, APPENDIX_FS, APPENDIX_REL)
        assert {iv.show(APPENDIX_REL) for iv in ivs} == {"[1,4]", "[4,4]"}
    built = ex.construct_struct(h, APPENDIX_FS, APPENDIX_REL)
    assert {iv.show(APPENDIX_REL)
            for iv in ex.relev_explanation(built, APPENDIX_FS, APPENDIX_REL)} == {"[1,4]", "[4,4]"}


def test_appendix_shape_through_explain():
    center, train, p = appendix_case()
    cfg = RunConfig(hamming_k=5, beam_width=5, max_body=5)
    res = ex.explain(center, APPENDIX_FS, train, p, APPENDIX_REL, cfg)
    assert [r.explanation.kind for r in res.ranked] == [ex.STRUCTURED, ex.UNSTRUCTURED]
    top, unstr = res.ranked
    assert top.label.fidelity == unstr.label.fidelity == 1
    assert top.tie_rank == 1 and unstr.tie_rank == 2
    assert ex.compare_labels(unstr.label, top.label) == Order.LESS
    assert res.relevance_effect
    again = ex.explain(center, APPENDIX_FS, train, p, APPENDIX_REL, cfg)
    assert again == res


# --- ordering ----------------------------------------------------------------

def I(a, b):
    return Interval(a, b)


def test_interval_set_examples():
    assert ex.compare_interval_sets({I(0, 1)}, {I(0, 0), I(1, 1)}) == Order.LESS
    assert ex.compare_interval_sets({I(0, 0)}, {I(1, 1)}) == Order.LESS
    assert ex.compare_interval_sets({I(1, 1)}, {I(0, 0)}) == Order.GREATER
    assert ex.compare_interval_sets({I(0, 1)}, {I(0, 1)}) == Order.EQUAL
    assert ex.compare_interval_sets({I(0, 2)}, {I(1, 1)}) == Order.INCOMPARABLE
    # mutually below yet unequal: a preorder reports equal
    assert ex.compare_interval_sets({I(0, 1), I(1, 1)}, {I(1, 1)}) == Order.EQUAL


intervals = st.tuples(st.integers(0, 4), st.integers(0, 4)).map(lambda t: I(min(t), max(t)))
interval_sets = st.frozensets(intervals, min_size=1, max_size=4)


@given(interval_sets, interval_sets, interval_sets)
def test_interval_order_is_a_preorder(a, b, c):
    le = lambda s, t: ex.compare_interval_sets(s, t) in (Order.LESS, Order.EQUAL)
    assert le(a, a)
    if le(a, b) and le(b, c):
        assert le(a, c)
    flip = {Order.LESS: Order.GREATER, Order.GREATER: Order.LESS}
    ab, ba = ex.compare_interval_sets(a, b), ex.compare_interval_sets(b, a)
    assert ba == flip.get(ab, ab)


def L(agree, total, *ivs):
    return ex.ExplanationLabel(agree, total, frozenset(ivs))


def test_label_comparison_examples():
    assert ex.compare_labels(L(9, 10, I(0, 0)), L(10, 10, I(0, 1))) == Order.LESS
    assert ex.compare_labels(L(10, 10, I(0, 1)), L(10, 10, I(0, 0), I(1, 1))) == Order.LESS
    assert ex.compare_labels(L(9, 10, I(1, 1)), L(10, 10, I(0, 0)), "qualitative") \
        == Order.INCOMPARABLE
    assert ex.compare_labels(L(9, 10, I(0, 0)), L(10, 10, I(1, 1)), "qualitative") == Order.LESS
    assert ex.compare_labels(L(10, 10, I(0, 2)), L(10, 10, I(1, 1))) == Order.INCOMPARABLE
    with pytest.raises(DenominatorMismatch):
        ex.compare_labels(L(1, 2, I(0, 0)), L(1, 3, I(0, 0)))


labels = st.builds(lambda a, s: L(a, 6, *s), st.integers(0, 6), interval_sets)


@given(st.lists(labels, min_size=1, max_size=6), st.sampled_from(["dictionary", "qualitative"]))
def test_top_rank_is_never_dominated_on_both(ls, mode):
    ranks = [1 + sum(ex.compare_labels(o, l, mode) == Order.GREATER for o in ls) for l in ls]
    best = ls[ranks.index(min(ranks))]
    for o in ls:
        both = o.fidelity > best.fidelity and \
            ex.compare_interval_sets(best.intervals, o.intervals) == Order.LESS
        assert not both


# --- structuring invariants on fixtures ---------------------------------------

@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=1, max_size=6), st.integers(2, 3),
       st.integers(0, 2 ** 32))
def test_structuring_invariants(ranks, k, seed):
    defs = [(i + 1, f"f(X) :- q{r}(X, Y).") for i, r in enumerate(ranks)]
    fs = features_from(defs)
    rel = parse_relevance("relevance_order([lo, mid, hi]). relevance(q0/2, lo). "
                          "relevance(q1/2, mid). relevance(q2/2, hi).")
    rng = random.Random(seed)
    width = len(ranks)
    rows = [(f"i{n}", "".join(rng.choice("01") for _ in range(width)), EAST) for n in range(8)]
    train = dataset(rows, width)
    p = TablePredictor({FeatureVector.from_bits(b).bits: rng.choice([EAST, WEST])
                        for _, b, _ in rows}, EAST, width)
    nbd = ex.neighborhood(train.vectors[0], train, p, width)
    h = ex.unstructured([f.name for f in fs], EAST)
    s = ex.construct_struct(h, fs, rel, k)
    if s is None:
        return
    assert ex.fidelity(s, nbd, fs) == ex.fidelity(h, nbd, fs)
    assert ex.compare_interval_sets(ex.relev_explanation(h, fs, rel),
                                    ex.relev_explanation(s, fs, rel)) in (Order.LESS, Order.EQUAL)
    assert ex.base_features(s) == ex.base_features(h)
    assert any(len(c.body) >= 2 for _, c in s.invented)


def test_minimal_models_agree_after_structuring(rel):
    b = parse_program("""
        has_car(t1, c1). has_car(t1, c2). short(c1). closed(c1). wheels(c2, 3).
        load(c2, triangle).
        has_car(t2, c3). short(c3). closed(c3).
        has_car(t3, c4). wheels(c4, 3). load(c4, triangle). short(c4).
    """).extend(EXAMPLE_FS.definitions())
    s = ex.construct_struct(H, EXAMPLE_FS, rel)
    universe = program_constants(b) + [EAST]
    m_h = ground_minimal_model(b.extend([H.top]), universe)
    m_s = ground_minimal_model(b.extend([s.top, *ex.invented_program(s)]), universe)
    cls = lambda m: {l for l in m if l.key == ("class", 2)}
    assert cls(m_h) == cls(m_s) == {Literal("class", (Const("t1"), EAST))}


def test_explain_on_trains_is_optimal_and_covers_center(trains_vectors, trains_features,
                                                        trains_network, trains_relmap):
    fs, _ = trains_features
    _, _, p = trains_network
    cfg = RunConfig(hamming_k=40, max_body=3)
    for center in trains_vectors.vectors[:3]:
        res = ex.explain(center, fs, trains_vectors, p, trains_relmap, cfg)
        top = res.top
        assert ex.covers(top.explanation, center, fs)
        assert top.label.fidelity == ex.exhaustive_optimum(center, res.neighborhood, cfg.max_body)
