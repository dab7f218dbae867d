"""Model enumeration under the stable, partial, L-stable and SMProbLog semantics.

Truth values are stored as integer codes ``0`` (false), ``1`` (undefined) and
``2`` (true), i.e. twice the usual ``{0, 0.5, 1}`` valuation, so that all
comparisons are exact.  The reserved atoms *t*, *f* and *u* get ids
``n``, ``n + 1`` and ``n + 2`` for a program over ``n`` atoms.

Two routes exist for the stable and partial semantics:

``oracle``
    Exhaustive enumeration straight from the definitions: every candidate
    interpretation is tested for being a minimal model of its own reduct, and
    minimality is decided by listing every interpretation below it.
``search`` / ``translation``
    A backtracking search with unit and support propagation for stable models;
    partial stable models are obtained by running that search on a dual-atom
    translation (see :func:`translate_partial`).

The optimized routes are what inference uses; the oracles exist to check them.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import CapExceeded
from .grounder import GroundProgram, GroundRule

FALSE, UNDEF, TRUE = 0, 1, 2
DEFAULT_MAX_ATOMS = 24
_CHUNK = 1 << 15

LOGICS = ("stable", "partial", "lstable", "smproblog")


@dataclass(frozen=True)
class LogicProgram:
    """Ground rules over atoms ``0..n-1`` (no probabilities)."""

    rules: tuple[GroundRule, ...]
    n: int

    @classmethod
    def of(cls, program) -> "LogicProgram":
        if isinstance(program, LogicProgram):
            return program
        if isinstance(program, GroundProgram):
            return cls(tuple(program.rules), program.n_atoms)
        rules, n = program
        return cls(tuple(rules), n)

    @property
    def t(self) -> int:
        return self.n

    @property
    def f(self) -> int:
        return self.n + 1

    @property
    def u(self) -> int:
        return self.n + 2

    @property
    def is_disjunctive(self) -> bool:
        return any(len(r.head) > 1 for r in self.rules)

    @property
    def has_negation(self) -> bool:
        return any(r.neg for r in self.rules)


@dataclass(frozen=True)
class Interpretation:
    """Three-valued interpretation; ``values[i]`` is the code of atom ``i``."""

    values: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.values)

    def code(self, i: int) -> int:
        if i < self.n:
            return self.values[i]
        return (TRUE, FALSE, UNDEF)[i - self.n]

    def value(self, i: int) -> float:
        return self.code(i) / 2

    def __getitem__(self, i: int) -> float:
        return self.value(i)

    @cached_property
    def true(self) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self.values) if v == TRUE)

    @cached_property
    def false(self) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self.values) if v == FALSE)

    @cached_property
    def undef(self) -> frozenset[int]:
        return frozenset(i for i, v in enumerate(self.values) if v == UNDEF)

    @property
    def is_total(self) -> bool:
        return UNDEF not in self.values

    def key(self) -> tuple[int, int]:
        """Atom-id bitmasks (true, undefined); the canonical sort key."""
        t = u = 0
        for i, v in enumerate(self.values):
            if v == TRUE:
                t |= 1 << i
            elif v == UNDEF:
                u |= 1 << i
        return t, u

    def __le__(self, other: "Interpretation") -> bool:
        return all(a <= b for a, b in zip(self.values, other.values))

    @classmethod
    def from_sets(cls, n: int, true: Iterable[int] = (), undef: Iterable[int] = ()):
        vals = [FALSE] * n
        for i in undef:
            vals[i] = UNDEF
        for i in true:
            vals[i] = TRUE
        return cls(tuple(vals))

    @classmethod
    def all_undefined(cls, n: int) -> "Interpretation":
        return cls((UNDEF,) * n)

    def render(self, name=str) -> str:
        """Canonical text form: atoms sorted by name, undefined ones prefixed ``undef``."""
        items = [name(i) for i in self.true] + [f"undef {name(i)}" for i in self.undef]
        items.sort(key=lambda s: (s[6:] if s.startswith("undef ") else s))
        return "{" + ", ".join(items) + "}"


@dataclass(frozen=True)
class ModelSet:
    models: tuple[Interpretation, ...]
    semantics: str
    n: int = 0

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def __getitem__(self, i):
        return self.models[i]

    @cached_property
    def array(self) -> np.ndarray:
        a = np.array([m.values for m in self.models], dtype=np.int8)
        return a.reshape(len(self.models), self.n)


def _model_set(models, semantics: str, n: int) -> ModelSet:
    uniq = {m.values: m for m in models}
    ordered = sorted(uniq.values(), key=Interpretation.key)
    return ModelSet(tuple(ordered), semantics, n)


# ----------------------------------------------------------------------------
# definitions


def eval_rule(I: Interpretation, r: GroundRule) -> bool:
    """``I(head) >= I(body)`` with min over the body, max over the head."""
    body = TRUE
    for a in r.pos:
        body = min(body, I.code(a))
    for a in r.neg:
        body = min(body, TRUE - I.code(a))
    head = max((I.code(h) for h in r.head), default=FALSE)
    return head >= body


def is_model(I: Interpretation, rules: Iterable[GroundRule]) -> bool:
    return all(eval_rule(I, r) for r in rules)


@dataclass(frozen=True)
class Reduct:
    """Negation-free program; negated atoms replaced by reserved t/f/u ids."""

    rules: tuple[GroundRule, ...]
    n: int


def reduct(program, I: Interpretation) -> Reduct:
    """Replace each negated ``A`` by t if ``A`` is false, f if true, u if undefined."""
    lp = LogicProgram.of(program)
    sub = {FALSE: lp.t, TRUE: lp.f, UNDEF: lp.u}
    out = []
    for r in lp.rules:
        if not r.neg:
            out.append(r)
            continue
        extra = tuple(sub[I.code(a)] for a in r.neg)
        out.append(GroundRule(r.head, r.pos + extra, (), r.source))
    return Reduct(tuple(out), lp.n)


def _extend(V: np.ndarray) -> np.ndarray:
    m = V.shape[0]
    res = np.empty((m, 3), dtype=np.int8)
    res[:, 0], res[:, 1], res[:, 2] = TRUE, FALSE, UNDEF
    return np.concatenate([V, res], axis=1)


def models_mask(V: np.ndarray, rules: Sequence[GroundRule]) -> np.ndarray:
    """Which rows of the (m, n) code matrix ``V`` satisfy every rule."""
    X = _extend(V)
    ok = np.ones(V.shape[0], dtype=bool)
    for r in rules:
        if r.pos:
            body = X[:, list(r.pos)].min(axis=1)
        else:
            body = np.full(V.shape[0], TRUE, dtype=np.int8)
        if r.neg:
            body = np.minimum(body, TRUE - X[:, list(r.neg)].max(axis=1))
        if r.head:
            head = X[:, list(r.head)].max(axis=1)
        else:
            head = np.zeros(V.shape[0], dtype=np.int8)
        ok &= head >= body
    return ok


def _product_rows(ranges: Sequence[Sequence[int]]) -> Iterable[np.ndarray]:
    """Cartesian product of per-atom value lists, yielded in bounded chunks."""
    n = len(ranges)
    if n == 0:
        yield np.zeros((1, 0), dtype=np.int8)
        return
    sizes = [len(r) for r in ranges]
    total = int(np.prod(sizes, dtype=np.int64))
    arrs = [np.asarray(r, dtype=np.int8) for r in ranges]
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(total, start + _CHUNK), dtype=np.int64)
        out = np.empty((idx.size, n), dtype=np.int8)
        for j in range(n - 1, -1, -1):
            out[:, j] = arrs[j][idx % sizes[j]]
            idx //= sizes[j]
        yield out


def is_minimal_model(I: Interpretation, red: Reduct) -> bool:
    """True iff ``I`` models ``red`` and no ``J <= I, J != I`` does.

    Exhaustive over interpretations below ``I``; atoms false in ``I`` are
    forced false in ``J``.  For total ``I`` only total ``J`` are listed, which
    is equivalent (rounding undefined values of a model ``J <= I`` down to
    false gives a smaller total model).
    """
    if not is_model(I, red.rules):
        return False
    if I.is_total:
        ranges = [(FALSE, TRUE) if v == TRUE else (FALSE,) for v in I.values]
    else:
        ranges = [tuple(range(v + 1)) for v in I.values]
    target = np.asarray(I.values, dtype=np.int8)
    for V in _product_rows(ranges):
        mask = models_mask(V, red.rules)
        if mask.any():
            strict = (V[mask] != target).any(axis=1)
            if strict.any():
                return False
    return True


def _check_cap(n: int, max_atoms: int):
    if n > max_atoms:
        raise CapExceeded(f"{n} atoms exceed the exhaustive enumeration cap of {max_atoms}")


def stable_models_oracle(program, max_atoms: int = DEFAULT_MAX_ATOMS) -> ModelSet:
    lp = LogicProgram.of(program)
    _check_cap(lp.n, max_atoms)
    out = []
    for V in _product_rows([(FALSE, TRUE)] * lp.n):
        for row in V[models_mask(V, lp.rules)]:
            I = Interpretation(tuple(int(x) for x in row))
            if is_minimal_model(I, reduct(lp, I)):
                out.append(I)
    return _model_set(out, "stable", lp.n)


def partial_models_oracle(program, max_atoms: int = DEFAULT_MAX_ATOMS) -> ModelSet:
    lp = LogicProgram.of(program)
    _check_cap(lp.n, max_atoms)
    out = []
    for V in _product_rows([(FALSE, UNDEF, TRUE)] * lp.n):
        # I models P/I exactly when I models P: the reduct preserves body values
        for row in V[models_mask(V, lp.rules)]:
            I = Interpretation(tuple(int(x) for x in row))
            if is_minimal_model(I, reduct(lp, I)):
                out.append(I)
    return _model_set(out, "partial", lp.n)


# ----------------------------------------------------------------------------
# search


def _sat(clauses: list[tuple[tuple[int, ...], tuple[int, ...]]], nvars: int) -> bool:
    """DPLL over clauses given as (negative vars, positive vars)."""
    def solve(assign: list[int]) -> bool:
        while True:
            unit = None
            for neg, pos in clauses:
                unknown = []
                sat = False
                for v in neg:
                    a = assign[v]
                    if a == 0:
                        sat = True
                        break
                    if a == -1:
                        unknown.append((v, 0))
                if sat:
                    continue
                for v in pos:
                    a = assign[v]
                    if a == 1:
                        sat = True
                        break
                    if a == -1:
                        unknown.append((v, 1))
                if sat:
                    continue
                if not unknown:
                    return False
                if len(unknown) == 1:
                    unit = unknown[0]
                    break
            if unit is None:
                break
            assign[unit[0]] = unit[1]
        try:
            v = assign.index(-1)
        except ValueError:
            return True
        for val in (0, 1):
            nxt = list(assign)
            nxt[v] = val
            if solve(nxt):
                return True
        return False

    return solve([-1] * nvars)


class _StableSearch:
    """Backtracking enumeration of stable models with unit and support propagation."""

    def __init__(self, lp: LogicProgram):
        self.lp = lp
        self.rules = lp.rules
        self.n = lp.n
        self.heads: list[list[GroundRule]] = [[] for _ in range(lp.n)]
        for r in lp.rules:
            for h in r.head:
                self.heads[h].append(r)
        self.disjunctive = lp.is_disjunctive

    @staticmethod
    def _body_false(r, A) -> bool:
        return any(A[p] == 0 for p in r.pos) or any(A[q] == 1 for q in r.neg)

    def propagate(self, A: list[int]) -> bool:
        changed = True
        while changed:
            changed = False
            for r in self.rules:
                open_lits = []
                dead = False
                for p in r.pos:
                    v = A[p]
                    if v == 0:
                        dead = True
                        break
                    if v == -1:
                        open_lits.append((p, 0))  # value that falsifies the literal
                if dead:
                    continue
                for q in r.neg:
                    v = A[q]
                    if v == 1:
                        dead = True
                        break
                    if v == -1:
                        open_lits.append((q, 1))
                if dead:
                    continue
                open_heads = []
                satisfied = False
                for h in r.head:
                    v = A[h]
                    if v == 1:
                        satisfied = True
                        break
                    if v == -1:
                        open_heads.append(h)
                if satisfied:
                    continue
                if not open_lits:
                    if not open_heads:
                        return False
                    if len(open_heads) == 1:
                        A[open_heads[0]] = 1
                        changed = True
                elif not open_heads and len(open_lits) == 1:
                    a, val = open_lits[0]
                    A[a] = val
                    changed = True
            for a in range(self.n):
                if A[a] == 0:
                    continue
                supported = False
                for r in self.heads[a]:
                    if self._body_false(r, A):
                        continue
                    if any(A[h] == 1 for h in r.head if h != a):
                        continue
                    supported = True
                    break
                if not supported:
                    if A[a] == 1:
                        return False
                    A[a] = 0
                    changed = True
        return True

    def is_stable(self, A: list[int]) -> bool:
        M = {i for i, v in enumerate(A) if v == 1}
        red = [r for r in self.rules if not any(q in M for q in r.neg)]
        for r in red:
            if all(p in M for p in r.pos) and not any(h in M for h in r.head):
                return False
        if not self.disjunctive:
            least: set[int] = set()
            changed = True
            while changed:
                changed = False
                for r in red:
                    if r.head and r.head[0] not in least and all(p in least for p in r.pos):
                        least.add(r.head[0])
                        changed = True
            return least == M
        # minimality: no model of the reduct strictly inside M
        order = sorted(M)
        pos_of = {a: i for i, a in enumerate(order)}
        clauses = []
        for r in red:
            if not all(p in M for p in r.pos):
                continue
            clauses.append((tuple(pos_of[p] for p in r.pos),
                            tuple(pos_of[h] for h in r.head if h in M)))
        clauses.append((tuple(range(len(order))), ()))
        return not _sat(clauses, len(order))

    def run(self) -> list[Interpretation]:
        out = []

        def rec(A):
            if not self.propagate(A):
                return
            try:
                v = A.index(-1)
            except ValueError:
                if self.is_stable(A):
                    out.append(Interpretation(tuple(TRUE if x == 1 else FALSE for x in A)))
                return
            for val in (0, 1):
                nxt = list(A)
                nxt[v] = val
                rec(nxt)

        rec([-1] * self.n)
        return out


def stable_models(program, method: str = "search",
                  max_atoms: int = DEFAULT_MAX_ATOMS) -> ModelSet:
    """All total interpretations that are minimal models of their reduct."""
    lp = LogicProgram.of(program)
    if method == "oracle":
        return stable_models_oracle(lp, max_atoms)
    return _model_set(_StableSearch(lp).run(), "stable", lp.n)


def translate_partial(program) -> LogicProgram:
    """Dual-atom encoding whose stable models are the partial stable models.

    Atom ``a`` becomes ``a`` ("certainly true", id ``a``) and ``a'``
    ("possibly true", id ``a + n``).  Each rule ``H :- B+, not B-`` yields
    ``H :- B+, not B-'`` and ``H' :- B+', not B-``, and every atom gets
    ``a' :- a``.  Splitting a three-valued rule check ``I(H) >= I(B)`` into
    its two thresholds gives exactly these two rules, and the subset order on
    the doubled atoms is the pointwise order on interpretations, so the
    encoding is exact for disjunctive rules and constraints as well.
    """
    lp = LogicProgram.of(program)
    n = lp.n
    P = lambda ids: tuple(i + n for i in ids)
    rules = []
    for r in lp.rules:
        rules.append(GroundRule(r.head, r.pos, P(r.neg), r.source))
        rules.append(GroundRule(P(r.head), P(r.pos), r.neg, r.source))
    for a in range(n):
        rules.append(GroundRule((a + n,), (a,), ()))
    return LogicProgram(tuple(rules), 2 * n)


def _decode_partial(I2: Interpretation, n: int) -> Interpretation:
    vals = []
    for a in range(n):
        if I2.values[a] == TRUE:
            vals.append(TRUE)
        elif I2.values[a + n] == TRUE:
            vals.append(UNDEF)
        else:
            vals.append(FALSE)
    return Interpretation(tuple(vals))


def partial_stable_models(program, method: str = "translation",
                          max_atoms: int = DEFAULT_MAX_ATOMS) -> ModelSet:
    """All three-valued minimal models of their own reduct."""
    lp = LogicProgram.of(program)
    if method == "oracle":
        return partial_models_oracle(lp, max_atoms)
    tr = translate_partial(lp)
    found = _StableSearch(tr).run()
    return _model_set([_decode_partial(I, lp.n) for I in found], "partial", lp.n)


def least_undefined(models: Iterable[Interpretation]) -> list[Interpretation]:
    ms = list(models)
    return [m for m in ms if not any(o.undef < m.undef for o in ms)]


def lstable_models(program, method: str = "search",
                   max_atoms: int = DEFAULT_MAX_ATOMS) -> ModelSet:
    """Stable models if any, else the partial stable models with subset-minimal undefined set."""
    lp = LogicProgram.of(program)
    st = stable_models(lp, "oracle" if method == "oracle" else "search", max_atoms)
    if len(st):
        return ModelSet(st.models, "lstable", lp.n)
    part = partial_stable_models(lp, "oracle" if method == "oracle" else "translation", max_atoms)
    return _model_set(least_undefined(part), "lstable", lp.n)


def smproblog_models(program, method: str = "search",
                     max_atoms: int = DEFAULT_MAX_ATOMS) -> ModelSet:
    """Stable models if any, else the single interpretation with every atom undefined."""
    lp = LogicProgram.of(program)
    st = stable_models(lp, "oracle" if method == "oracle" else "search", max_atoms)
    if len(st):
        return ModelSet(st.models, "smproblog", lp.n)
    return ModelSet((Interpretation.all_undefined(lp.n),), "smproblog", lp.n)


def models(program, logic: str = "stable", method: Optional[str] = None,
           max_atoms: int = DEFAULT_MAX_ATOMS) -> ModelSet:
    """Dispatch on the logic semantics name."""
    oracle = method == "oracle"
    if logic == "stable":
        return stable_models(program, "oracle" if oracle else "search", max_atoms)
    if logic == "partial":
        return partial_stable_models(program, "oracle" if oracle else "translation", max_atoms)
    if logic == "lstable":
        return lstable_models(program, "oracle" if oracle else "search", max_atoms)
    if logic == "smproblog":
        return smproblog_models(program, "oracle" if oracle else "search", max_atoms)
    raise ValueError(f"unknown logic semantics {logic!r}")
