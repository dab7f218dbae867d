"""Syntax tree for neural-probabilistic answer set programs.

Terms are plain Python values where possible: ``int`` for integers and
``str`` for symbolic constants (quoted strings keep their quotes).  Variables
and arithmetic get their own node types.  Every statement node carries a
:class:`Pos` that is excluded from equality, so two trees parsed from
differently formatted sources compare equal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

ADR_MASS_EPS = 1e-9

LOGIC_SEMANTICS = ("stable", "partial", "lstable", "smproblog")
PROB_SEMANTICS = ("credal", "maxent")
DEFAULT_LOGIC = "stable"
DEFAULT_PROB = "credal"


@dataclass(frozen=True)
class Pos:
    line: int = 0
    column: int = 0

    def __str__(self):
        return f"{self.line}:{self.column}"


NOPOS = Pos()


def _pos():
    return field(default=NOPOS, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / \
    left: "Term"
    right: "Term"

    def __str__(self):
        return f"({term_str(self.left)} {self.op} {term_str(self.right)})"


@dataclass(frozen=True)
class Neg:
    operand: "Term"

    def __str__(self):
        return f"-{term_str(self.operand)}"


Term = Union[int, str, Var, BinOp, Neg]


def term_str(t: Term) -> str:
    return str(t)


def term_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, BinOp):
        return term_vars(t.left) | term_vars(t.right)
    if isinstance(t, Neg):
        return term_vars(t.operand)
    return set()


def is_ground_term(t: Term) -> bool:
    return isinstance(t, (int, str))


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple = ()
    pos: Pos = _pos()

    def __str__(self):
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(term_str(a) for a in self.args)})"

    @property
    def signature(self) -> tuple[str, int]:
        return self.pred, len(self.args)

    def vars(self) -> set[str]:
        out: set[str] = set()
        for a in self.args:
            out |= term_vars(a)
        return out

    def is_ground(self) -> bool:
        return all(is_ground_term(a) for a in self.args)


@dataclass(frozen=True)
class Literal:
    """Body literal: an atom, possibly under default negation."""

    atom: Atom
    negated: bool = False

    def __str__(self):
        return f"not {self.atom}" if self.negated else str(self.atom)

    def vars(self) -> set[str]:
        return self.atom.vars()


COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Comparison:
    op: str
    left: Term
    right: Term

    def __str__(self):
        return f"{term_str(self.left)} {self.op} {term_str(self.right)}"

    def vars(self) -> set[str]:
        return term_vars(self.left) | term_vars(self.right)


BodyItem = Union[Literal, Comparison]


def body_str(body: tuple) -> str:
    return ", ".join(str(b) for b in body)


def _rule_tail(body: tuple) -> str:
    return f" :- {body_str(body)}." if body else "."


@dataclass(frozen=True)
class Rule:
    """Logic rule.  Empty head is an integrity constraint; 2+ heads is a disjunction."""

    head: tuple[Atom, ...]
    body: tuple[BodyItem, ...] = ()
    pos: Pos = _pos()

    def __str__(self):
        if not self.head:
            return f":- {body_str(self.body)}."
        return "; ".join(str(h) for h in self.head) + _rule_tail(self.body)

    @property
    def is_fact(self) -> bool:
        return len(self.head) == 1 and not self.body

    @property
    def is_constraint(self) -> bool:
        return not self.head

    @property
    def is_disjunctive(self) -> bool:
        return len(self.head) >= 2


def fmt_prob(p: float) -> str:
    return repr(float(p))


@dataclass(frozen=True)
class ADREntry:
    atom: Atom
    prob: Optional[float] = None  # None means "?" without an initial value
    learnable: bool = False

    def __str__(self):
        if self.learnable:
            lab = "?" if self.prob is None else f"{fmt_prob(self.prob)}?"
        else:
            lab = fmt_prob(self.prob)
        return f"{lab}::{self.atom}"


@dataclass(frozen=True)
class ADR:
    """Annotated disjunctive rule; a probabilistic fact is the one-entry, bodiless case."""

    entries: tuple[ADREntry, ...]
    body: tuple[BodyItem, ...] = ()
    pos: Pos = _pos()

    def __str__(self):
        return "; ".join(str(e) for e in self.entries) + _rule_tail(self.body)

    @property
    def learnable(self) -> bool:
        return any(e.learnable for e in self.entries)

    @property
    def given_mass(self) -> float:
        return math.fsum(e.prob for e in self.entries if e.prob is not None)

    def normalized(self) -> tuple[list[float], float]:
        """Entry masses and the phantom (never-true) mass; together they sum to 1.

        Learnable entries without an initial value share the remaining mass
        uniformly.  A lone learnable entry shares it with the phantom outcome,
        so ``?::a.`` starts at 0.5.
        """
        given = self.given_mass
        rest = max(0.0, 1.0 - given)
        free = [i for i, e in enumerate(self.entries) if e.prob is None]
        probs = [e.prob if e.prob is not None else 0.0 for e in self.entries]
        if free:
            share_with_phantom = len(self.entries) == 1
            n = len(free) + (1 if share_with_phantom else 0)
            for i in free:
                probs[i] = rest / n
        phantom = max(0.0, 1.0 - math.fsum(probs))
        if phantom <= ADR_MASS_EPS:
            # absorb rounding dust so the distribution sums to exactly 1
            total = math.fsum(probs)
            vals = _sum_to_one([p / total for p in probs])
            return vals, 0.0
        vals = _sum_to_one(probs + [phantom])
        return vals[:-1], vals[-1]


def _sum_to_one(vals: list[float]) -> list[float]:
    """Nudge the largest entry until the exactly rounded sum is 1.0."""
    vals = list(vals)
    k = max(range(len(vals)), key=vals.__getitem__)
    for _ in range(8):
        err = math.fsum(vals) - 1.0
        if err == 0.0:
            break
        vals[k] = math.nextafter(vals[k], -math.inf if err > 0 else math.inf)
    return vals


@dataclass(frozen=True)
class CredalFact:
    atom: Atom
    lower: float
    upper: float
    pos: Pos = _pos()

    def __str__(self):
        return f"[{fmt_prob(self.lower)}, {fmt_prob(self.upper)}]::{self.atom}."


@dataclass(frozen=True)
class NeuralADR:
    """``?::f(X, {v1,...,vk}) as @net with k=v :- data(X), ...``"""

    pred: str
    inst: Term
    outcomes: tuple
    net: str
    learnable: bool = True
    params: tuple[tuple[str, object], ...] = ()
    body: tuple[BodyItem, ...] = ()
    pos: Pos = _pos()

    def __str__(self):
        lab = "?" if self.learnable else "!"
        outs = ",".join(term_str(v) for v in self.outcomes)
        s = f"{lab}::{self.pred}({term_str(self.inst)}, {{{outs}}}) as @{self.net}"
        if self.params:
            s += " with " + ", ".join(f"{k} = {fmt_value(v)}" for k, v in self.params)
        return s + _rule_tail(self.body)

    def head_atoms(self) -> list[Atom]:
        return [Atom(self.pred, (self.inst, v)) for v in self.outcomes]


def fmt_value(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return fmt_prob(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Source):
        return str(v)
    return '"' + str(v).replace('"', '\\"') + '"'


@dataclass(frozen=True)
class Source:
    """Data reference: ``@name`` (resolved to ``name.csv``) or a quoted path."""

    name: str
    quoted: bool = False

    def __str__(self):
        return f'"{self.name}"' if self.quoted else f"@{self.name}"

    def path(self) -> str:
        return self.name if self.quoted else f"{self.name}.csv"


@dataclass(frozen=True)
class DataBinding:
    """``input(0) ~ test(@a), train(@b).``"""

    pred: str
    const: Union[int, str]
    test: Optional[Source] = None
    train: Optional[Source] = None
    pos: Pos = _pos()

    def __str__(self):
        parts = []
        if self.test is not None:
            parts.append(f"test({self.test})")
        if self.train is not None:
            parts.append(f"train({self.train})")
        return f"{self.pred}({term_str(self.const)}) ~ {', '.join(parts)}."

    @property
    def atom(self) -> Atom:
        return Atom(self.pred, (self.const,))


TARGETS = ("true", "false", "undef")


@dataclass(frozen=True)
class QueryLiteral:
    atom: Atom
    target: str = "true"

    def __str__(self):
        if self.target == "true":
            return str(self.atom)
        if self.target == "false":
            return f"not {self.atom}"
        return f"undef {self.atom}"


@dataclass(frozen=True)
class Query:
    query: tuple[QueryLiteral, ...]
    evidence: tuple[QueryLiteral, ...] = ()
    pos: Pos = _pos()

    def __str__(self):
        s = "#query " + ", ".join(str(q) for q in self.query)
        if self.evidence:
            s += " | " + ", ".join(str(e) for e in self.evidence)
        return s + "."

    def literals(self):
        return self.query + self.evidence


@dataclass(frozen=True)
class SemanticsDirective:
    options: tuple[str, ...]
    pos: Pos = _pos()

    def __str__(self):
        return "#semantics " + ", ".join(self.options) + "."


@dataclass(frozen=True)
class LearnDirective:
    source: Source
    params: tuple[tuple[str, object], ...] = ()
    pos: Pos = _pos()

    def __str__(self):
        parts = [str(self.source)] + [f"{k} = {fmt_value(v)}" for k, v in self.params]
        return "#learn " + ", ".join(parts) + "."


Statement = Union[Rule, ADR, CredalFact, NeuralADR, DataBinding, Query,
                  SemanticsDirective, LearnDirective]


@dataclass(frozen=True)
class Directives:
    logic: str = DEFAULT_LOGIC
    prob: str = DEFAULT_PROB
    queries: tuple[Query, ...] = ()
    learn: Optional[LearnDirective] = None


@dataclass(frozen=True)
class Program:
    statements: tuple[Statement, ...]
    directives: Directives = Directives()
    path: Optional[str] = field(default=None, compare=False)

    def __str__(self):
        return pretty(self)

    def _of(self, cls):
        return [s for s in self.statements if isinstance(s, cls)]

    @property
    def rules(self) -> list[Rule]:
        return self._of(Rule)

    @property
    def adrs(self) -> list[ADR]:
        return self._of(ADR)

    @property
    def credal_facts(self) -> list[CredalFact]:
        return self._of(CredalFact)

    @property
    def neural(self) -> list[NeuralADR]:
        return self._of(NeuralADR)

    @property
    def bindings(self) -> list[DataBinding]:
        return self._of(DataBinding)

    @property
    def queries(self) -> tuple[Query, ...]:
        return self.directives.queries

    @property
    def semantics(self) -> tuple[str, str]:
        return self.directives.logic, self.directives.prob


def pretty(program: Program) -> str:
    """Source text that parses back to an equal program."""
    return "\n".join(str(s) for s in program.statements) + "\n"
