"""Synthetic digit-addition task: noisy class prototypes standing in for images.

Each "digit" is a feature vector drawn around one of ``n_classes`` mutually
orthogonal prototypes of length ``spread``, with isotropic Gaussian noise.  An example shows two digits and is labelled only
with their sum, so the classifier has to be learned through the logic program.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .grounder import GroundProgram
from .inference import Engine
from .neural import Classifier

PROGRAM = """\
% Two digits, observed only through their sum.
input(0) ~ test(@test_0), train(@train_0).
input(1) ~ test(@test_1), train(@train_1).
?::digit(X, {{0..{top}}}) as @net :- input(X).
sum(Z) :- digit(0, X), digit(1, Y), Z = X + Y.
#semantics maxent.
#learn @observed, alg = lagrange, lr = 0.1, niters = {epochs}, batch = 50.
#query sum(Z).
"""


@dataclass
class DigitData:
    train_x: list[np.ndarray]   # one (n_train, n_features) matrix per digit position
    train_digits: np.ndarray    # (n_train, 2)
    test_x: list[np.ndarray]
    test_digits: np.ndarray
    n_classes: int

    @property
    def train_sums(self) -> np.ndarray:
        return self.train_digits.sum(axis=1)

    @property
    def test_sums(self) -> np.ndarray:
        return self.test_digits.sum(axis=1)


def make_digit_data(n_train: int = 600, n_test: int = 200, n_classes: int = 3,
                    n_features: int = 8, spread: float = 3.5, noise: float = 1.0,
                    seed: int = 0) -> DigitData:
    rng = np.random.default_rng(seed)
    if n_classes > n_features:
        raise ValueError("need at least as many features as classes")
    # orthogonal prototypes: every seed gets the same class separation
    q, _ = np.linalg.qr(rng.normal(0.0, 1.0, (n_features, n_classes)))
    protos = spread * q.T

    def sample(n):
        digits = rng.integers(0, n_classes, size=(n, 2))
        xs = [protos[digits[:, i]] + rng.normal(0.0, noise, (n, n_features)) for i in range(2)]
        return xs, digits

    tr_x, tr_d = sample(n_train)
    te_x, te_d = sample(n_test)
    return DigitData(tr_x, tr_d, te_x, te_d, n_classes)


def _write_matrix(path: str, X: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for row in X:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def write_digit_task(directory: str, data: DigitData, epochs: int = 20, seed: int = 0,
                     lr: float = 0.05, arch: str = "softmax-linear") -> str:
    """Write the program, feature CSVs, observations and network config; return the program path."""
    os.makedirs(directory, exist_ok=True)
    for i in range(2):
        _write_matrix(os.path.join(directory, f"train_{i}.csv"), data.train_x[i])
        _write_matrix(os.path.join(directory, f"test_{i}.csv"), data.test_x[i])
    with open(os.path.join(directory, "observed.csv"), "w", encoding="utf-8") as f:
        f.write("observation\n")
        for s in data.train_sums:
            f.write(f"sum({int(s)})\n")
    path = os.path.join(directory, "digits.plp")
    with open(path, "w", encoding="utf-8") as f:
        f.write(PROGRAM.format(top=data.n_classes - 1, epochs=epochs))
    cfg = {"net": {"arch": arch, "hidden": 16, "seed": seed, "optim": "adam", "lr": lr}}
    with open(os.path.join(directory, "digits.models.json"), "w", encoding="utf-8") as f:
        json.dump(cfg, f, indent=2)
        f.write("\n")
    return path


def evaluate(gp: GroundProgram, net: Classifier, data: DigitData) -> tuple[float, float]:
    """Held-out (sum accuracy, per-digit accuracy) of ``net`` inside the digit program."""
    eng = Engine(gp, "stable")
    probs = [net.predict(data.test_x[c.data[1]]) for c in gp.components]
    queries = [q for q in gp.queries if not q.evidence and q.query[0].atom[0] == "sum"]
    values = np.array([q.query[0].atom[1][0] for q in queries])
    P = np.stack([eng.maxent_rows(q, probs) for q in queries], axis=1)
    sum_acc = float((values[P.argmax(axis=1)] == data.test_sums).mean())
    digit_acc = float(np.mean([(net.predict(data.test_x[i]).argmax(axis=1) == data.test_digits[:, i])
                               .mean() for i in range(2)]))
    return sum_acc, digit_acc
