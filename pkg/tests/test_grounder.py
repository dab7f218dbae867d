from collections import Counter

import pytest

from npasp.errors import CapExceeded, GroundingError
from npasp.grounder import atom_str, ground, rule_multiset, strip_annotations
from npasp.loader import load_text

def digits_program(extra: str) -> str:
    facts = " ".join(f"digit(0,{v}). digit(1,{v})." for v in range(10))
    return facts + "\n" + extra


def test_sum_rule_grounds_to_100_instances():
    gp = ground(load_text(digits_program("sum(Z) :- digit(0,X), digit(1,Y), Z=X+Y.")))
    sums = [r for r in gp.rules if gp.atoms[r.head[0]][0] == "sum"]
    assert len(sums) == 100
    heads = Counter(gp.atoms[r.head[0]][1][0] for r in sums)
    assert sorted(heads) == list(range(19))
    assert heads[9] == 10 and heads[0] == 1


def test_modulo_filter_grounds_to_25_instances():
    gp = ground(load_text(digits_program(r"both_even :- digit(0,X), digit(1,Y), X\2=0, Y\2=0.")))
    rules = [r for r in gp.rules if gp.atoms[r.head[0]][0] == "both_even"]
    assert len(rules) == 25


def test_ground_program_is_identity():
    src = "a :- b, not c. b. c ; d :- b. :- a, d. 0.3::e :- b."
    gp = ground(load_text(src))
    assert gp.to_source().split("\n")[:4] == ["a :- b, not c.", "b.", "c; d :- b.", ":- a, d."]
    again = ground(load_text(gp.to_source()))
    assert rule_multiset(gp, gp.rules) == rule_multiset(again, again.rules)


def test_neural_adr_grounds_per_instance():
    src = """
    img(0) ~ test(@t0), train(@r0).
    img(1) ~ test(@t1), train(@r1).
    ?::digit(X, {0..2}) as @net :- img(X).
    sum(Z) :- digit(0, X), digit(1, Y), Z = X + Y.
    #query sum(Z).
    """
    gp = ground(load_text(src))
    neural = [c for c in gp.components if c.kind == "neural"]
    assert [c.data for c in neural] == [("img", 0), ("img", 1)]
    assert all(c.arity == 3 and c.net == "net" for c in neural)
    assert len([r for r in gp.rules if gp.atoms[r.head[0]][0] == "sum"]) == 9
    assert [str(q) for q in gp.queries] == [f"sum({z})" for z in range(5)]


def test_outcome_values_are_constants():
    src = "i(0) ~ test(@a). ?::c(X, {red, blue}) as @n :- i(X). warm(X) :- c(X, red)."
    gp = ground(load_text(src))
    assert "red" in gp.constants and "blue" in gp.constants
    assert ("warm", (0,)) in gp.index


def test_phantom_outcome_materialized():
    gp = ground(load_text("0.3::x; 0.6::y."))
    (c,) = gp.components
    assert c.outcomes[-1] is None
    assert c.probs == pytest.approx((0.3, 0.6, 0.1))
    assert sum(c.probs) == pytest.approx(1.0, abs=1e-15)


def test_grounding_is_deterministic():
    src = digits_program("sum(Z) :- digit(0,X), digit(1,Y), Z=X+Y. p(X) :- sum(X), not q(X). q(3).")
    a, b = ground(load_text(src)), ground(load_text(src))
    assert a.atoms == b.atoms and a.rules == b.rules
    assert [r.source for r in a.rules] == [r.source for r in b.rules]


def test_every_rule_has_one_source():
    src = "n(1). n(2). e(X, Y) :- n(X), n(Y), X < Y. 0.5::f(X) :- n(X)."
    p = load_text(src)
    gp = ground(p)
    for r in gp.rules:
        assert 0 <= r.source < len(p.statements)
    for c in gp.components:
        assert 0 <= c.source < len(p.statements)
    assert sum(1 for r in gp.rules if r.source == 2) == 1


def test_strip_then_ground_commutes():
    src = """
    n(1). n(2). n(3).
    0.4::e(X, Y) :- n(X), n(Y), X < Y.
    [0.1, 0.2]::special(2).
    r(X) :- e(1, X), not special(X).
    0.5::a; 0.2::b :- r(3).
    """
    p = load_text(src)
    stripped = ground(strip_annotations(p))
    gp = ground(p)
    assert rule_multiset(gp, gp.stripped()) == rule_multiset(stripped, stripped.rules)


def test_comparisons_and_arithmetic():
    gp = ground(load_text("n(-2). n(3). n(7). p(X, Y) :- n(X), Y = X / 2, Y != 1. "
                          "q(X) :- n(X), X >= 0, X \\ 3 = 1."))
    names = {atom_str(a) for a in gp.atoms}
    assert {"p(-2,-1)", "p(7,3)", "q(7)"} <= names
    assert "p(3,1)" not in names and "q(3)" not in names


def test_non_integer_arithmetic_rejected():
    with pytest.raises(GroundingError, match="non-integer"):
        ground(load_text("n(a). p(Y) :- n(X), Y = X + 1."))


def test_division_by_zero_drops_instance():
    gp = ground(load_text("n(0). n(2). p(Y) :- n(X), Y = 4 / X."))
    assert {atom_str(a) for a in gp.atoms if a[0] == "p"} == {"p(2)"}


def test_rule_cap():
    with pytest.raises(CapExceeded):
        ground(load_text(digits_program("s(X,Y) :- digit(0,X), digit(1,Y).")), max_rules=50)


def test_body_only_atoms_enter_the_base():
    gp = ground(load_text("a. b :- c. #query c."))
    (q,) = gp.queries
    assert gp.atoms[q.query[0].id] == ("c", ())
