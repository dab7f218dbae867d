import math
import os

import numpy as np
import pytest

from helpers import neural_learner, obs, random_learners
from npasp.errors import LearningError
from npasp.grounder import ground
from npasp.learning import (LearnConfig, Learner, fixpoint_step, grad_lagrange, grad_neurasp,
                            joint_marginal, learn, partials)
from npasp.loader import load_observations, load_program, load_text
from npasp.neural import Classifier

PROGRAMS = os.path.join(os.path.dirname(__file__), "..", "programs")
EVEN_LOOP = "0.4::r. a :- not b, r. b :- not a, r. q :- a."


def gp_of(src):
    return ground(load_text(src))


# joint marginals ----------------------------------------------------------

def test_joint_marginal_examples():
    gp = gp_of("0.3::a.")
    assert joint_marginal(gp, 0, 0, obs(gp, "a")) == pytest.approx(0.3, abs=1e-15)
    gp = gp_of(EVEN_LOOP)
    assert joint_marginal(gp, 0, 0, obs(gp, "q")) == pytest.approx(0.2, abs=1e-15)
    assert joint_marginal(gp, 0, 1, obs(gp, "q")) == 0.0


# fixed-point rule --------------------------------------------------------

def test_fixpoint_single_fact_one_step():
    gp = gp_of("?::a.")
    data = [obs(gp, "a"), obs(gp, "a"), obs(gp, "not a")]
    (p,) = fixpoint_step(gp, data).values()
    assert p[0] == pytest.approx(2 / 3, abs=1e-15)
    (again,) = fixpoint_step(gp, data, {0: p}).values()
    assert np.abs(again - p).max() <= 1e-15


def test_fixpoint_tautology_keeps_params():
    gp = gp_of("0.3?::x; 0.5?::y. z :- x.")
    (p,) = fixpoint_step(gp, [obs(gp), obs(gp)]).values()
    assert p == pytest.approx([0.3, 0.5, 0.2], abs=1e-15)


def test_fixpoint_symmetric_adr():
    gp = gp_of("0.2?::x; 0.8?::y.")
    data = [obs(gp, "x"), obs(gp, "x"), obs(gp, "y"), obs(gp, "y")]
    state = learn(gp, data, LearnConfig(alg="fixpoint", niters=10))
    (p,) = state.params.values()
    assert p == pytest.approx([0.5, 0.5], abs=1e-12) and state.converged


def test_fixpoint_converges_to_frequency():
    gp = gp_of("?::a.")
    data = [obs(gp, "a"), obs(gp, "a"), obs(gp, "not a")]
    state = learn(gp, data, LearnConfig(alg="fixpoint", niters=10))
    assert abs(state.params[0][0] - 2 / 3) <= 1e-9
    assert len(state.trace) <= 11


def test_impossible_observation_names_row():
    gp = gp_of("?::a. b :- a.")
    with pytest.raises(LearningError, match="observation 2"):
        learn(gp, [obs(gp, "a"), obs(gp, "b", "not a")], LearnConfig(alg="fixpoint"))


def sprinkler():
    path = os.path.join(PROGRAMS, "sprinkler.plp")
    gp = ground(load_program(path))
    return gp, load_observations(os.path.join(PROGRAMS, "sprinkler_obs.csv"), gp)


def test_multi_adr_fixpoint_reaches_critical_point():
    gp, data = sprinkler()
    lr = Learner(gp, data)
    state = lr.run(LearnConfig(alg="fixpoint", niters=20000, tol=1e-9))
    assert state.converged
    new = lr.fixpoint_update()
    residual = max(float(np.abs(new[s] - lr.params[s]).max()) for s in new)
    assert residual < 1e-8
    # KKT on the simplex: equal partials on the support, no larger off it
    grads = lr.gradients(alg="lagrange").groups
    for s, g in grads.items():
        inside = lr.params[s] > 1e-4
        assert np.ptp(g[inside]) < 1e-5
        assert (g[~inside] <= g[inside].min() + 1e-5).all()


def test_fixpoint_loglik_non_decreasing():
    for name, csv_name in [("sprinkler", "sprinkler_obs.csv"), ("coin", "coin_obs.csv")]:
        gp = ground(load_program(os.path.join(PROGRAMS, f"{name}.plp")))
        data = load_observations(os.path.join(PROGRAMS, csv_name), gp)
        state = learn(gp, data, LearnConfig(alg="fixpoint", niters=300))
        ll = [t[1] for t in state.trace]
        assert all(b >= a - 1e-12 for a, b in zip(ll, ll[1:])), name


# gradient identities ------------------------------------------------------

def test_neurasp_binary_fact():
    gp = gp_of("?::a.")
    g = grad_neurasp(gp, 0, [obs(gp, "a")])
    assert g == pytest.approx([2.0, -2.0], abs=1e-15)


def test_independent_observation_cancels():
    gp = gp_of("?::a. 0.5::b.")
    assert grad_neurasp(gp, 0, [obs(gp, "b")]) == pytest.approx([0.0, 0.0], abs=1e-15)


def test_neurasp_leaves_the_simplex():
    gp = gp_of("?::x; ?::y; ?::z.")
    g = grad_neurasp(gp, 0, [obs(gp, "x")])
    assert abs(g.sum()) > 0.5
    assert abs(grad_lagrange(gp, 0, [obs(gp, "x")]).sum()) <= 1e-12


LEARNERS = random_learners(5, 20)


def test_lagrange_is_half_neurasp_for_binary_components():
    for lr in LEARNERS:
        lag = lr.gradients(alg="lagrange").components
        nra = lr.gradients(alg="neurasp").components
        for j, c in enumerate(lr.gp.components):
            if c.arity == 2:
                assert np.abs(lag[j] - 0.5 * nra[j]).max() <= 1e-12
            assert abs(lag[j].sum()) <= 1e-10


def test_adr_gradients_match_finite_differences():
    h = 1e-5
    for lr in LEARNERS:
        analytic = lr.gradients(alg="lagrange").groups
        for s, p in lr.params.items():
            fd = np.zeros_like(p)
            for v in range(p.size):
                old = p[v]
                p[v] = old + h
                up = lr.loglik()
                p[v] = old - h
                down = lr.loglik()
                p[v] = old
                fd[v] = (up - down) / (2 * h)
            expected = partials(fd, "lagrange")
            scale = max(np.abs(expected).max(), 1e-3)
            assert np.abs(analytic[s] - expected).max() / scale <= 1e-4


@pytest.mark.parametrize("seed", range(20))
def test_network_gradients_match_finite_differences(seed):
    lr = neural_learner(seed, "mlp" if seed % 2 else "softmax-linear")
    grads = lr.gradients(alg="lagrange").networks["net"]
    net = lr.nets["net"]
    h = 1e-5
    rng = np.random.default_rng(seed + 100)
    for p, g in zip(net.params, grads):
        for _ in range(4):
            idx = tuple(int(rng.integers(0, d)) for d in p.shape)
            old = p[idx]
            p[idx] = old + h
            up = lr.loglik()
            p[idx] = old - h
            down = lr.loglik()
            p[idx] = old
            fd = (up - down) / (2 * h)
            assert abs(fd - g[idx]) <= 1e-3 * max(abs(fd), 1e-4)


def test_frozen_network_is_untouched():
    lr = neural_learner(3, frozen=True)  # has sum(2) rows, which bear on bonus
    before = [p.copy() for p in lr.nets["net"].params]
    (bonus_before,) = [p.copy() for p in lr.params.values()]
    lr.run(LearnConfig(alg="lagrange", lr=0.5, niters=5))
    assert all(np.array_equal(a, b) for a, b in zip(before, lr.nets["net"].params))
    assert not np.array_equal(bonus_before, next(iter(lr.params.values())))


def test_zero_learning_rate_changes_nothing():
    for lr in LEARNERS[:5]:
        before = {s: p.copy() for s, p in lr.params.items()}
        state = lr.run(LearnConfig(alg="lagrange", lr=0.0, niters=4))
        assert all(np.array_equal(before[s], lr.params[s]) for s in before)
        assert len({t[1] for t in state.trace}) == 1


@pytest.mark.parametrize("alg", ["lagrange", "neurasp"])
def test_params_stay_on_simplex(alg):
    for lr in random_learners(8, 10):
        config = LearnConfig(alg=alg, lr=5.0, niters=1)
        for step in range(6):
            lr.step(np.arange(lr.n), config, {})
            for p in lr.params.values():
                assert (p >= 0).all() and abs(p.sum() - 1) <= 1e-9


def test_learning_is_deterministic():
    runs = []
    for _ in range(2):
        lr = neural_learner(3, "mlp")
        state = lr.run(LearnConfig(alg="lagrange", niters=3, batch=2, seed=1))
        runs.append((state.trace_csv().split("\n")[1:], [p.copy() for p in lr.nets["net"].params]))
    (t1, w1), (t2, w2) = runs
    assert [r.split(",")[:2] for r in t1] == [r.split(",")[:2] for r in t2]
    assert all(np.array_equal(a, b) for a, b in zip(w1, w2))


def test_trace_format():
    gp = gp_of("?::a.")
    state = learn(gp, [obs(gp, "a")], LearnConfig(alg="lagrange", niters=2))
    lines = state.trace_csv().splitlines()
    assert lines[0] == "epoch,loglik,seconds" and len(lines) == 4
    assert lines[1].startswith("0,") and math.isclose(float(lines[1].split(",")[1]), math.log(0.5))


# configuration errors ------------------------------------------------------

def test_config_errors():
    gp = gp_of("?::a.")
    with pytest.raises(LearningError, match="stable"):
        Learner(gp, [], logic="partial")
    with pytest.raises(LearningError, match="credal"):
        Learner(gp_of("[0.1, 0.2]::c. ?::a."), [])
    with pytest.raises(LearningError, match="fixpoint"):
        neural_learner(0).run(LearnConfig(alg="fixpoint"))
    with pytest.raises(LearningError, match="unknown"):
        LearnConfig.from_params({"momentum": 1})
    with pytest.raises(LearningError, match="batch"):
        LearnConfig(batch=0).check(False)
    assert LearnConfig.from_params({"lr": "0.5", "niters": 3}, alg="neurasp").lr == 0.5


def test_classifier_spec_reused_for_shared_network():
    lr = neural_learner(1)
    assert isinstance(lr.nets["net"], Classifier) and lr.nets["net"].n_out == 3
