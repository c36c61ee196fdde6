
import pytest
from hypothesis import given, settings, strategies as st

from drmx.errors import (ConfigError, MissingAssignment, NoHeadMode, NonDefiniteClause,
                         ParseError, UnknownLabel, UnproducibleInputType)
from drmx.kbio import (RunConfig, format_examples, format_modes, format_program,
                       format_relevance, load_config, parse_clause, parse_examples, parse_modes,
                       parse_program, parse_relevance)
from drmx.kbio.relevance import INHERIT, LOWEST
from drmx.logic import Const, Literal, Num, Var, is_variant

# --- programs ----------------------------------------------------------------

def test_fact():
    c = parse_clause("short(c1).")
    assert c.head == Literal("short", (Const("c1"),)) and c.body == ()


def test_rule():
    c = parse_clause("f2(X) :- has_car(X,Y), closed(Y).")
    assert len(c.body) == 2 and c.head.args == (Var("X"),)


@pytest.mark.parametrize("text,line,col", [
    ("p(X) :- .", 1, 9),
    ("p(a).\nq(b) :- r(.", 2, 11),
    ("p(a)", 1, 5),
    ("p(a). 'unterminated", 1, 7),
])
def test_syntax_errors_carry_positions(text, line, col):
    with pytest.raises(ParseError) as info:
        parse_program(text)
    assert (info.value.line, info.value.col) == (line, col)


def test_goal_clause_is_not_definite():
    with pytest.raises(NonDefiniteClause):
        parse_program(":- p(a).")


def test_numbers_quoted_atoms_comments():
    prog = parse_program("""
        % a comment
        w(c1, -2.5).   /* block */
        name('Hello world', x).
    """)
    w, name = list(prog)
    assert w.head.args[1] == Num(__import__("fractions").Fraction(-5, 2))
    assert name.head.args[0] == Const("Hello world")


def test_lists_parse():
    c = parse_clause("p([a,b|T]).")
    assert str(c) == "p([a,b|T])."


@st.composite
def programs(draw):
    names = st.sampled_from(["p", "q", "has_car", "'Odd name'"])
    terms = st.sampled_from(["X", "Y", "_Z", "a", "c1", "3", "-2", "0.5", "'b c'", "f(X,a)", "[a,X]"])
    clauses = []
    for _ in range(draw(st.integers(1, 5))):
        head = f"{draw(names)}({', '.join(draw(st.lists(terms, min_size=1, max_size=3)))})"
        body = [f"{draw(names)}({', '.join(draw(st.lists(terms, min_size=1, max_size=3)))})"
                for _ in range(draw(st.integers(0, 3)))]
        clauses.append(head + (" :- " + ", ".join(body) if body else "") + ".")
    return "\n".join(clauses)


@settings(max_examples=150, deadline=None)
@given(programs())
def test_program_round_trip(text):
    prog = parse_program(text)
    again = parse_program(format_program(prog))
    assert len(prog) == len(again)
    for c, d in zip(prog, again):
        assert c == d or is_variant(c, d)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="pqXa(),.:- '%\n1", max_size=30))
def test_parsing_is_total(text):
    try:
        parse_program(text)
    except ParseError as exc:
        assert exc.line is not None or exc.message


# --- modes -------------------------------------------------------------------

def test_head_mode():
    (m,) = parse_modes("modeh(1, class(+train,#label)).")
    assert m.kind == "head" and m.recall == 1
    assert [s.kind for s in m.slots] == ["+", "#"]


def test_body_mode_and_star_recall():
    ms = parse_modes("modeh(1, class(+train,#label)). modeb(2, has_car(+train,-car)). "
                     "modeb(*, short(+car)).")
    assert ms[1].recall == 2 and ms[2].recall is None
    assert ms[2].effective_recall(10) == 10 and ms[1].effective_recall(1) == 1


def test_unproducible_input_type():
    with pytest.raises(UnproducibleInputType) as info:
        parse_modes("modeh(1, class(+train,#label)). modeb(1, spokes(+wheel,#int)).")
    assert info.value.type_name == "wheel"


def test_no_head_mode():
    with pytest.raises(NoHeadMode):
        parse_modes("modeb(1, short(+car)).")


def test_modes_round_trip():
    text = "modeh(1, class(+train,#label)).\nmodeb(*, has_car(+train,-car)).\nmodeb(1, load(+car,#shape,#int)).\n"
    assert format_modes(parse_modes(text)) == text


# --- relevance ---------------------------------------------------------------

MUT_STYLE = """
relevance(atm/5, 1). relevance(bond/4, 1).
relevance(ind1/1, 5). relevance(inda/1, 5).
relevance(benzene/2, 2). relevance(lumo/2, 3). relevance(ames/1, 4).
"""


def test_numeric_labels_order_numerically():
    rm = parse_relevance(MUT_STYLE)
    assert rm.labels == ("1", "2", "3", "4", "5")
    assert rm.rank_of(("ind1", 1)) == 4 and rm.rank_of(("atm", 5)) == 0


def test_single_label_map():
    rm = parse_relevance("relevance(atm/5, 1). relevance(bond/4, 1).")
    assert rm.labels == ("1",)


def test_declared_order_and_unknown_label():
    rm = parse_relevance("relevance_order([r1,r2]). relevance(short/1, r2).")
    assert rm.rank("r1") < rm.rank("r2")
    with pytest.raises(UnknownLabel):
        parse_relevance("relevance_order([r1,r2]). relevance(short/1, r3).")


def test_symbolic_labels_need_order():
    with pytest.raises(UnknownLabel):
        parse_relevance("relevance(short/1, high).")


def test_missing_policies():
    rm = parse_relevance("relevance_order([r1,r2]). relevance(short/1, r2).")
    with pytest.raises(MissingAssignment):
        rm.rank_of(("has_car", 2))
    assert rm.with_policy(LOWEST).rank_of(("has_car", 2)) == 0
    assert rm.with_policy(INHERIT).rank_of(("has_car", 2)) is None
    assert rm.rank_of(("gteq", 2)) is None


def test_relevance_round_trip():
    rm = parse_relevance("relevance_order([r1,'r 2',3]). relevance(short/1, 'r 2'). relevance('Odd'/2, 3).")
    assert parse_relevance(format_relevance(rm)) == rm


@given(st.permutations(["lo", "mid", "hi", "top"]))
def test_rank_is_total_and_follows_declaration(order):
    rm = parse_relevance(f"relevance_order([{','.join(order)}]).")
    ranks = [rm.rank(l) for l in order]
    assert ranks == sorted(ranks) == list(range(4))


# --- examples and instance scoping ---------------------------------------------

def test_examples_and_duplicates():
    ex = parse_examples("example(east1, east). example(west6, west).")
    assert ex == [(Const("east1"), Const("east")), (Const("west6"), Const("west"))]
    assert parse_examples(format_examples(ex)) == ex
    with pytest.raises(ParseError):
        parse_examples("example(a, x). example(a, y).")


def test_instance_facts_are_scoped(trains_kb):
    facts = trains_kb.facts(Const("east1"))
    assert len(facts) == 24
    consts = {str(a) for f in facts for a in f.head.args}
    assert "car_21" not in consts and "car_11" in consts
    prog = trains_kb.scoped(Const("east1"))
    assert all(str(c.head.args[0]) != "east2" for c in prog if c.head.predicate == "has_car")


# --- config ------------------------------------------------------------------

def test_config_defaults_and_validation(tmp_path):
    cfg = RunConfig()
    assert (cfg.beam_width, cfg.hamming_k, cfg.partition_count, cfg.epsilon) == (5, 5, 2, 0.05)
    for bad in ({"epsilon": 0}, {"partition_count": 1}, {"beam_width": 0}, {"hamming_k": -1},
                {"hidden": []}, {"dropout": [1.0, 0.0]}, {"compare_mode": "bayes"}):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(bad)
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"nonsense": 1})
    path = tmp_path / "c.json"
    path.write_text(cfg.update(seed=9, hidden=(8,), dropout=(0.1,)).to_json())
    back = load_config(path)
    assert back.seed == 9 and back.hidden == (8,) and back.dropout == (0.1,)
