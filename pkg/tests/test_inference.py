import math
import os
import random

import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_probabilistic_source
from npasp.errors import CapExceeded, InferenceError, SemanticsError
from npasp.grounder import GroundLiteral, GroundQuery, ground
from npasp.inference import (Engine, enumerate_total_choices, infer, literal_matches,
                             maxent_prob)
from npasp.loader import load_program, load_text
from npasp.semantics import FALSE, TRUE, UNDEF, Interpretation

PROGRAMS = os.path.join(os.path.dirname(__file__), "..", "programs")
EVEN_LOOP = "0.4::r. a :- not b, r. b :- not a, r. q :- a. #query q."
SMOKERS = """
smokes(X) :- stress(X).
smokes(X) :- influences(Y, X), smokes(Y).
stress(anna).
0.8::influences(anna, bill).
#query smokes(bill).
"""


def answers(src, logic=None, prob=None, **kw):
    return [r.text() for r in infer(ground(load_text(src)), logic, prob, **kw)]


def test_total_choice_products():
    gp = ground(load_text("0.8::a. 0.5::b."))
    ps = [tc.probability for tc, _ in enumerate_total_choices(gp)]
    assert ps == pytest.approx([0.4, 0.4, 0.1, 0.1])


def test_total_choice_counts_and_phantom():
    gp = ground(load_text("0.3::x; 0.7::y."))
    assert len(list(enumerate_total_choices(gp))) == 2
    gp = ground(load_text("0.3::x; 0.6::y."))
    choices = list(enumerate_total_choices(gp))
    assert len(choices) == 3
    tc, induced = choices[2]
    assert tc.probability == pytest.approx(0.1)
    assert len(induced.rules) == len(gp.rules)


def test_choice_cap():
    src = " ".join(f"0.5::a{i}." for i in range(12))
    with pytest.raises(CapExceeded):
        Engine(ground(load_text(src)), max_choices=1000)


def test_maxent_examples():
    assert answers(EVEN_LOOP, prob="maxent") == ["P(q) = 0.200000"]
    assert answers("q. 0.3::z. #query q.", prob="maxent") == ["P(q) = 1.000000"]
    assert answers(SMOKERS, prob="maxent") == ["P(smokes(bill)) = 0.800000"]


def test_credal_examples():
    assert answers(EVEN_LOOP) == ["P(q) = [0.000000, 0.400000]"]
    assert answers("q. #query q.") == ["P(q) = [1.000000, 1.000000]"]
    src = "0.4::r. p :- not p, r. #semantics lstable. #query undef p."
    assert answers(src) == ["P(undef p) = [0.400000, 0.400000]"]
    assert answers(src, prob="maxent") == ["P(undef p) = 0.400000"]


def test_smproblog_undefined_atoms():
    src = "0.4::r. p :- not p, r. a. #semantics smproblog, maxent. #query undef a. #query a."
    assert answers(src) == ["P(undef a) = 0.400000", "P(a) = 0.600000"]


def test_conditional_query():
    src = "0.5::a. 0.5::b. c :- a. c :- b. #query a | c."
    (r,) = infer(ground(load_text(src)), prob="maxent")
    assert r.value == pytest.approx(2 / 3, abs=1e-15)
    assert r.text() == "P(a | c) = 0.666667"


def test_impossible_evidence():
    gp = ground(load_text("0.5::a. b :- a, not a. #query a | b."))
    with pytest.raises(InferenceError, match="undefined"):
        infer(gp, prob="maxent")
    with pytest.raises(InferenceError):
        infer(gp, prob="credal")


def test_empty_stable_set_names_the_choice():
    gp = ground(load_text("0.4::r. p :- not p, r. #query p."))
    with pytest.raises(SemanticsError, match=r"\{r\}.*lstable"):
        infer(gp)


def test_literal_target_matrix():
    I = Interpretation((TRUE, FALSE, UNDEF))
    for atom, code in enumerate((TRUE, FALSE, UNDEF)):
        for target in (TRUE, FALSE, UNDEF):
            assert literal_matches(I, GroundLiteral("x", atom, target)) == int(code == target)
    assert literal_matches(I, GroundLiteral("y", None, FALSE)) == 1
    assert literal_matches(I, GroundLiteral("y", None, TRUE)) == 0


def test_json_and_text_agree():
    (r,) = infer(ground(load_text(EVEN_LOOP)))
    assert r.to_json() == {"query": "q", "evidence": "", "kind": "interval", "interval": [0.0, 0.4]}


# properties ---------------------------------------------------------------

def random_programs(seed: int, count: int, logics=("stable", "lstable", "partial", "smproblog")):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        logic = logics[len(out) % len(logics)]
        gp = ground(load_text(random_probabilistic_source(rng, logic=logic)))
        eng = Engine(gp, logic)
        try:
            eng.all_models()
        except SemanticsError:
            continue
        out.append(eng)
    return out


ENGINES = random_programs(99, 100)


def test_choice_probabilities_sum_to_one():
    for eng in ENGINES:
        assert abs(math.fsum(eng.theta_probs()) - 1.0) <= 1e-12


def test_maxent_inside_credal_interval():
    for eng in ENGINES:
        for q in eng.gp.queries:
            try:
                p = eng.maxent(q)
            except InferenceError:
                continue
            lo, hi = eng.credal(q)
            assert lo - 1e-12 <= p <= hi + 1e-12


def test_interval_collapses_when_models_unique():
    seen = 0
    for eng in ENGINES:
        if not (eng.n_models == 1).all():
            continue
        seen += 1
        for q in eng.gp.queries:
            try:
                p = eng.maxent(q)
            except InferenceError:
                continue
            lo, hi = eng.credal(q)
            assert abs(lo - p) <= 1e-12 and abs(hi - p) <= 1e-12
    assert seen > 10


def test_complementary_queries():
    for eng in ENGINES[:40]:
        for a in range(eng.gp.n_atoms):
            qs = [GroundQuery((GroundLiteral(eng.gp.atoms[a], a, t),)) for t in (FALSE, UNDEF, TRUE)]
            total = math.fsum(eng.maxent(q) for q in qs)
            assert total == pytest.approx(1.0, abs=1e-12)


def test_threads_do_not_change_results():
    for eng in ENGINES[:30]:
        par = Engine(eng.gp, eng.logic, threads=4)
        assert [m.models for m in par.all_models()] == [m.models for m in eng.all_models()]
        assert [par.maxent(q) for q in par.gp.queries if len(q.evidence) == 0] == \
            [eng.maxent(q) for q in eng.gp.queries if len(q.evidence) == 0]


def test_oracle_method_agrees():
    for eng in ENGINES[:30]:
        oracle = Engine(eng.gp, eng.logic, method="oracle")
        for q in eng.gp.queries:
            try:
                assert oracle.credal(q) == eng.credal(q)
            except InferenceError:
                pass


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=4))
def test_independent_facts_multiply(ps):
    src = " ".join(f"{p!r}::a{i}." for i, p in enumerate(ps))
    src += " all :- " + ", ".join(f"a{i}" for i in range(len(ps))) + ". #query all."
    gp = ground(load_text(src))
    assert maxent_prob(gp.queries[0], gp) == pytest.approx(math.prod(ps), rel=1e-12)


def test_shipped_programs_answer():
    gp = ground(load_program(os.path.join(PROGRAMS, "smokers.plp")))
    (r,) = infer(gp)
    assert r.value == 0.8
    (r,) = infer(gp, prob="credal")
    assert r.interval == (0.8, 0.8)
