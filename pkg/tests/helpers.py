"""Random program generators shared by the property tests and the acceptance suite."""
from __future__ import annotations

import math
import random
import re

import numpy as np

from npasp.errors import LearningError, SemanticsError
from npasp.grounder import GroundProgram, GroundRule, ground
from npasp.learning import Learner
from npasp.loader import load_text
from npasp.neural import NetSpec
from npasp.parser import parse_literal
from npasp.semantics import LogicProgram


def random_ground_program(rng: random.Random, max_atoms: int = 6, max_rules: int = 8,
                          disjunction: bool = True, constraints: bool = True,
                          negation: bool = True) -> LogicProgram:
    n = rng.randint(1, max_atoms)
    rules = []
    for _ in range(rng.randint(1, max_rules)):
        sizes = [1, 1, 1, 2] if disjunction else [1]
        if constraints:
            sizes.append(0)
        k = min(rng.choice(sizes), n)
        head = tuple(rng.sample(range(n), k))
        pos = tuple(rng.sample(range(n), rng.randint(0, min(2, n))))
        neg = tuple(rng.sample(range(n), rng.randint(0, min(2, n)))) if negation else ()
        rules.append(GroundRule(head, pos, neg))
    return LogicProgram(tuple(rules), n)


def corpus(seed: int = 2024, size: int = 200, **kw) -> list[LogicProgram]:
    rng = random.Random(seed)
    return [random_ground_program(rng, **kw) for _ in range(size)]


def definite_program(rng: random.Random, max_atoms: int = 6, max_rules: int = 8) -> LogicProgram:
    return random_ground_program(rng, max_atoms, max_rules, disjunction=False,
                                 constraints=False, negation=False)


def _prob(rng: random.Random) -> float:
    return round(rng.uniform(0.05, 0.95), 2)


def random_probabilistic_source(rng: random.Random, n_atoms: int = 5,
                                max_components: int = 4, max_rules: int = 6,
                                logic: str = "stable") -> str:
    """Normal program text with up to ``max_components`` probabilistic facts/ADRs and queries."""
    atoms = [f"a{i}" for i in range(n_atoms)]
    lines = []
    for _ in range(rng.randint(1, max_components)):
        if rng.random() < 0.5:
            lines.append(f"{_prob(rng)}::{rng.choice(atoms)}.")
        else:
            x, y = rng.sample(atoms, 2)
            p = _prob(rng)
            q = math.floor(rng.uniform(0.0, 1.0 - p) * 100) / 100
            body = ""
            if rng.random() < 0.3:
                body = f" :- {rng.choice(atoms)}"
            lines.append(f"{p}::{x}; {q}::{y}{body}.")
    for _ in range(rng.randint(1, max_rules)):
        h = rng.choice(atoms)
        body = [rng.choice(atoms) for _ in range(rng.randint(0, 2))]
        body += [f"not {rng.choice(atoms)}" for _ in range(rng.randint(0, 2))]
        lines.append(h + (f" :- {', '.join(body)}" if body else "") + ".")
    lines.append(f"#semantics {logic}.")
    targets = ["", "not "] + (["undef "] if logic != "stable" else [])
    text = " ".join(lines)
    used = [a for a in atoms if re.search(rf"\b{a}\b", text)]
    for a in used:
        lines.append(f"#query {rng.choice(targets)}{a}.")
    if len(used) >= 2:
        x, y = rng.sample(used, 2)
        lines.append(f"#query {x} | {rng.choice(['', 'not '])}{y}.")
    return "\n".join(lines) + "\n"


def obs(gp: GroundProgram, *lits: str):
    return tuple(gp.literal(parse_literal(s)) for s in lits)


def learnable_source(rng):
    src = random_probabilistic_source(rng, n_atoms=5, max_components=3, max_rules=5)
    src = re.sub(r"(\d\.\d+)::", r"\1?::", src)
    return "0.2?::a0; 0.5?::a1; 0.3?::a4.\n" + src


def random_learners(seed, count, n_obs=4):
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        gp = ground(load_text(learnable_source(rng)))
        names = sorted({gp.name(a) for a in range(gp.n_atoms)})
        data = []
        for _ in range(n_obs):
            k = rng.randint(1, 2)
            data.append(obs(gp, *(rng.choice(["", "not "]) + a for a in rng.sample(names, k))))
        try:
            lr = Learner(gp, data)
            lr.loglik()
        except (LearningError, SemanticsError):
            continue
        out.append(lr)
    return out


NEURAL = """
img(0) ~ test(@t0), train(@r0).
img(1) ~ test(@t1), train(@r1).
?::digit(X, {0..2}) as @net :- img(X).
0.3?::bonus.
sum(Z) :- digit(0, X), digit(1, Y), Z = X + Y.
high :- sum(Z), Z > 2.
high :- bonus, digit(0, 2).
"""


def neural_learner(seed, arch="softmax-linear", frozen=False):
    rng = np.random.default_rng(seed)
    src = NEURAL.replace("?::digit", "!::digit") if frozen else NEURAL
    gp = ground(load_text(src))
    n = 6
    feats = {("img", 0): rng.normal(size=(n, 4)), ("img", 1): rng.normal(size=(n, 4))}
    # labels from sampled digits and bonus, so every observation is possible
    digits = rng.integers(0, 3, size=(n, 2))
    bonus = rng.random(n) < 0.3
    data = []
    for (x, y), b in zip(digits, bonus):
        high = x + y > 2 or (b and x == 2)
        data.append(obs(gp, f"sum({x + y})", "high" if high else "not high"))
    spec = NetSpec(arch=arch, hidden=5, seed=seed)
    return Learner(gp, data, feats, {"net": spec})
