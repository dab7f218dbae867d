"""Exact inference by enumerating total choices.

:class:`Engine` owns the choice space of one ground program and caches the
model set of every induced logic program.  Model sets never depend on the
component probabilities, so one engine serves repeated queries, per-example
neural probabilities during learning, and every vertex of a credal box.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .credal import CountStats, CredalPolynomials, credal_interval, optimize_credal
from .errors import CapExceeded, InferenceError, SemanticsError
from .grounder import GroundLiteral, GroundProgram, GroundQuery, GroundRule
from .semantics import DEFAULT_MAX_ATOMS, Interpretation, LogicProgram, ModelSet, models

DEFAULT_MAX_CHOICES = 1 << 20


@dataclass(frozen=True)
class TotalChoice:
    selection: tuple[int, ...]
    probability: float


@dataclass(frozen=True)
class QueryResult:
    query: str
    evidence: str
    kind: str  # "point" | "interval"
    value: Optional[float] = None
    interval: Optional[tuple[float, float]] = None

    def label(self) -> str:
        return f"P({self.query} | {self.evidence})" if self.evidence else f"P({self.query})"

    def text(self) -> str:
        if self.kind == "point":
            return f"{self.label()} = {self.value:.6f}"
        lo, hi = self.interval
        return f"{self.label()} = [{lo:.6f}, {hi:.6f}]"

    def to_json(self) -> dict:
        out = {"query": self.query, "evidence": self.evidence, "kind": self.kind}
        if self.kind == "point":
            out["value"] = self.value
        else:
            out["interval"] = list(self.interval)
        return out


def literal_matches(I: Interpretation, lit: GroundLiteral) -> int:
    """1 if ``I`` gives the literal's atom its target value; atoms outside the base are false."""
    code = 0 if lit.id is None else I.values[lit.id]
    return int(code == lit.target)


def component_probs(gp: GroundProgram) -> list[np.ndarray]:
    return [np.asarray(c.probs, dtype=float) for c in gp.components]


class Engine:
    """Total-choice space and per-choice model cache for a ground program."""

    def __init__(self, gp: GroundProgram, logic: Optional[str] = None, *,
                 method: Optional[str] = None, max_choices: int = DEFAULT_MAX_CHOICES,
                 max_atoms: int = DEFAULT_MAX_ATOMS, threads: int = 1):
        self.gp = gp
        self.logic = logic or gp.semantics[0]
        self.method = method
        self.max_atoms = max_atoms
        self.threads = max(1, threads)
        self.arities = [c.arity for c in gp.components]
        size = math.prod(self.arities)
        if size > max_choices:
            raise CapExceeded(f"{size} total choices exceed the cap of {max_choices}")
        self.size = size
        grids = np.indices(self.arities, dtype=np.int32) if self.arities else np.zeros((0,))
        self.C = grids.reshape(len(self.arities), size).T.copy() if self.arities \
            else np.zeros((1, 0), dtype=np.int32)
        self._models: list[Optional[ModelSet]] = [None] * size
        self._counts: dict[tuple, np.ndarray] = {}
        self.credal_index = [j for j, c in enumerate(gp.components) if c.kind == "credal"]

    # choices --------------------------------------------------------------

    def selection(self, i: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.C[i])

    def induced(self, i: int) -> LogicProgram:
        rules = list(self.gp.rules)
        for c, v in zip(self.gp.components, self.C[i]):
            atom = c.outcomes[v]
            if atom is not None:
                rules.append(GroundRule((atom,), c.pos, c.neg, c.source))
        return LogicProgram(tuple(rules), self.gp.n_atoms)

    def describe(self, i: int) -> str:
        chosen = []
        for c, v in zip(self.gp.components, self.C[i]):
            atom = c.outcomes[v]
            if atom is not None:
                chosen.append(self.gp.name(atom))
            else:
                chosen.append("not " + " ; ".join(self.gp.name(o) for o in c.outcomes
                                                 if o is not None))
        return "{" + ", ".join(chosen) + "}"

    def theta_probs(self, probs: Optional[Sequence[np.ndarray]] = None,
                    skip: Sequence[int] = ()) -> np.ndarray:
        """``P(theta)`` for every choice; components listed in ``skip`` contribute factor 1."""
        if probs is None:
            probs = component_probs(self.gp)
        P = np.ones(self.size)
        for j, p in enumerate(probs):
            if j in skip:
                continue
            P *= np.asarray(p, dtype=float)[self.C[:, j]]
        return P

    def total_choices(self, probs=None) -> Iterator[TotalChoice]:
        P = self.theta_probs(probs)
        for i in range(self.size):
            yield TotalChoice(self.selection(i), float(P[i]))

    # models ---------------------------------------------------------------

    def _compute(self, i: int) -> ModelSet:
        ms = models(self.induced(i), self.logic, self.method, self.max_atoms)
        if len(ms) == 0:
            hint = " (try '#semantics lstable.' or '--sem lstable')" if self.logic == "stable" else ""
            raise SemanticsError(f"total choice {self.describe(i)} has no {self.logic} "
                                 f"models{hint}")
        return ms

    def models(self, i: int) -> ModelSet:
        ms = self._models[i]
        if ms is None:
            ms = self._models[i] = self._compute(i)
        return ms

    def all_models(self) -> list[ModelSet]:
        missing = [i for i in range(self.size) if self._models[i] is None]
        if missing and self.threads > 1:
            chunks = [missing[k::self.threads] for k in range(self.threads)]
            with ThreadPoolExecutor(self.threads) as pool:
                done = pool.map(lambda idx: [(i, self._compute(i)) for i in idx], chunks)
                for part in done:
                    for i, ms in part:
                        self._models[i] = ms
        else:
            for i in missing:
                self.models(i)
        return list(self._models)

    @property
    def n_models(self) -> np.ndarray:
        return self.count(())

    def count(self, lits: Sequence[GroundLiteral]) -> np.ndarray:
        """Per choice, the number of models satisfying every literal in ``lits``."""
        key = tuple(sorted(set(lits), key=lambda l: (l.id is None, l.id or 0, l.target, str(l))))
        got = self._counts.get(key)
        if got is not None:
            return got
        out = np.empty(self.size, dtype=np.int64)
        impossible = any(l.id is None and l.target != 0 for l in key)
        checks = [(l.id, l.target) for l in key if l.id is not None]
        for i, ms in enumerate(self.all_models()):
            if impossible:
                out[i] = 0
                continue
            arr = ms.array
            mask = np.ones(len(ms), dtype=bool)
            for a, t in checks:
                mask &= arr[:, a] == t
            out[i] = int(mask.sum())
        self._counts[key] = out
        return out

    # queries --------------------------------------------------------------

    def maxent(self, q: GroundQuery, probs=None) -> float:
        N = self.n_models
        P = self.theta_probs(probs)
        num = math.fsum(P * self.count(q.query + q.evidence) / N)
        if not q.evidence:
            return num
        den = math.fsum(P * self.count(q.evidence) / N)
        if den == 0:
            raise InferenceError(f"P({', '.join(map(str, q.evidence))}) = 0: "
                                 f"conditional probability undefined")
        return num / den

    def maxent_rows(self, q: GroundQuery, probs: Sequence[np.ndarray]) -> np.ndarray:
        """Max-ent probabilities for a batch; ``probs[j]`` is a (B, k_j) matrix per component."""
        P = np.ones((np.shape(probs[0])[0] if probs else 1, self.size))
        for j, p in enumerate(probs):
            P = P * np.asarray(p, dtype=float)[:, self.C[:, j]]
        N = self.n_models
        num = P @ (self.count(q.query + q.evidence) / N)
        if not q.evidence:
            return num
        den = P @ (self.count(q.evidence) / N)
        if np.any(den == 0):
            raise InferenceError(f"P({', '.join(map(str, q.evidence))}) = 0 for some rows")
        return num / den

    def class_masks(self, q: GroundQuery) -> np.ndarray:
        """Boolean (choices, 4) matrix of membership in classes a, b, c, d."""
        N = self.n_models
        qe = self.count(q.query + q.evidence)
        e = self.count(q.evidence) if q.evidence else N
        e_not_q = e - qe
        return np.stack([qe == N, qe > 0, e_not_q == N, e_not_q > 0], axis=1)

    def count_stats(self, q: GroundQuery, probs=None) -> CountStats:
        P = self.theta_probs(probs)
        m = self.class_masks(q)
        return CountStats(*(math.fsum(P[m[:, j]]) for j in range(4)))

    def credal_polynomials(self, q: GroundQuery, probs=None) -> CredalPolynomials:
        cred = self.credal_index
        P = self.theta_probs(probs, skip=cred)
        sigma = np.zeros(self.size, dtype=np.int64)
        for bit, j in enumerate(cred):
            sigma |= (self.C[:, j] == 0).astype(np.int64) << bit  # outcome 0: the fact holds
        m = self.class_masks(q)
        coeffs = np.zeros((1 << len(cred), 4))
        for s in range(1 << len(cred)):
            sel = sigma == s
            for j in range(4):
                coeffs[s, j] = math.fsum(P[sel & m[:, j]])
        comps = self.gp.components
        names = tuple(self.gp.name(comps[j].outcomes[0]) for j in cred)
        box = tuple(comps[j].interval for j in cred)
        return CredalPolynomials(names, box, coeffs)

    def credal(self, q: GroundQuery, probs=None) -> tuple[float, float]:
        if not self.credal_index:
            return self.count_stats(q, probs).interval()
        return optimize_credal(self.credal_polynomials(q, probs))

    def answer(self, q: GroundQuery, prob: str, probs=None) -> QueryResult:
        qs = ", ".join(map(str, q.query))
        es = ", ".join(map(str, q.evidence))
        if prob == "maxent":
            return QueryResult(qs, es, "point", value=self.maxent(q, probs))
        lo, hi = self.credal(q, probs)
        return QueryResult(qs, es, "interval", interval=(lo, hi))


def enumerate_total_choices(gp: GroundProgram, max_choices: int = DEFAULT_MAX_CHOICES,
                            probs=None) -> Iterator[tuple[TotalChoice, LogicProgram]]:
    eng = Engine(gp, max_choices=max_choices)
    P = eng.theta_probs(probs)
    for i in range(eng.size):
        yield TotalChoice(eng.selection(i), float(P[i])), eng.induced(i)


def _engine(gp_or_engine: Union[GroundProgram, Engine], logic: Optional[str]) -> Engine:
    if isinstance(gp_or_engine, Engine):
        return gp_or_engine
    return Engine(gp_or_engine, logic)


def maxent_prob(q: GroundQuery, gp, logic: Optional[str] = None, probs=None) -> float:
    return _engine(gp, logic).maxent(q, probs)


def credal_prob(q: GroundQuery, gp, logic: Optional[str] = None,
                probs=None) -> tuple[float, float]:
    return _engine(gp, logic).credal(q, probs)


def build_credal_polynomials(q: GroundQuery, gp, logic: Optional[str] = None,
                             probs=None) -> CredalPolynomials:
    return _engine(gp, logic).credal_polynomials(q, probs)


def infer(gp: GroundProgram, logic: Optional[str] = None, prob: Optional[str] = None, *,
          queries: Optional[Sequence[GroundQuery]] = None, probs=None, **engine_kw
          ) -> list[QueryResult]:
    """Answer every query of ``gp`` (or ``queries``) under the given semantics."""
    logic = logic or gp.semantics[0]
    prob = prob or gp.semantics[1]
    eng = Engine(gp, logic, **engine_kw)
    eng.all_models()
    return [eng.answer(q, prob, probs) for q in (gp.queries if queries is None else queries)]


__all__ = [
    "DEFAULT_MAX_CHOICES", "Engine", "QueryResult", "TotalChoice", "build_credal_polynomials",
    "component_probs", "credal_interval", "credal_prob", "enumerate_total_choices", "infer",
    "literal_matches", "maxent_prob",
]
