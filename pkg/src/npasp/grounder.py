"""Instantiate a checked program into a propositional (ground) program.

Grounding is bottom-up: an over-approximation of the derivable atoms is
computed first by ignoring default negation, then every rule schema is
instantiated by joining its positive body against that set.  Built-in
comparisons and integer arithmetic are evaluated during the join.  Rules
that are already ground are copied verbatim (only their built-ins are
evaluated), so grounding a ground program is the identity.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .errors import GroundingError, CapExceeded
from .syntax import (
    ADR, Atom, BinOp, Comparison, CredalFact, DataBinding, Literal, Neg, NeuralADR, Program,
    Query, QueryLiteral, Rule, Var, fmt_prob, term_vars,
)

DEFAULT_MAX_RULES = 10**7

GAtom = tuple  # (pred, args)
Const = Union[int, str]

TARGET_CODE = {"false": 0, "undef": 1, "true": 2}
CODE_TARGET = {v: k for k, v in TARGET_CODE.items()}


def atom_str(a: GAtom) -> str:
    pred, args = a
    if not args:
        return pred
    return f"{pred}({','.join(str(x) for x in args)})"


@dataclass(frozen=True)
class GroundRule:
    head: tuple[int, ...]
    pos: tuple[int, ...] = ()
    neg: tuple[int, ...] = ()
    source: int = field(default=-1, compare=False)


@dataclass
class Component:
    """One independent random choice of the ground program.

    ``outcomes`` holds atom ids, ``None`` marking the phantom outcome whose
    selection adds no rule.  The component's rule fires with the chosen atom
    as its head and ``pos``/``neg`` as its body.
    """

    kind: str  # "adr" | "neural" | "credal"
    outcomes: tuple[Optional[int], ...]
    probs: tuple[float, ...]
    pos: tuple[int, ...] = ()
    neg: tuple[int, ...] = ()
    source: int = -1
    learnable: bool = False
    net: Optional[str] = None
    data: Optional[tuple[str, Const]] = None
    interval: Optional[tuple[float, float]] = None

    @property
    def arity(self) -> int:
        return len(self.outcomes)


@dataclass(frozen=True)
class GroundLiteral:
    atom: GAtom
    id: Optional[int]  # None: atom outside the Herbrand base, false everywhere
    target: int        # 0 false, 1 undef, 2 true

    def __str__(self):
        s = atom_str(self.atom)
        return {2: s, 0: f"not {s}", 1: f"undef {s}"}[self.target]


@dataclass(frozen=True)
class GroundQuery:
    query: tuple[GroundLiteral, ...]
    evidence: tuple[GroundLiteral, ...] = ()

    def __str__(self):
        q = ", ".join(str(x) for x in self.query)
        if self.evidence:
            return f"{q} | {', '.join(str(x) for x in self.evidence)}"
        return q


@dataclass
class GroundProgram:
    atoms: list[GAtom]
    index: dict[GAtom, int]
    rules: list[GroundRule]
    components: list[Component]
    queries: list[GroundQuery]
    program: Optional[Program] = None
    constants: tuple = ()

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def semantics(self) -> tuple[str, str]:
        return self.program.semantics if self.program is not None else ("stable", "credal")

    def atom_id(self, atom: GAtom) -> Optional[int]:
        return self.index.get(atom)

    def literal(self, lit: QueryLiteral) -> GroundLiteral:
        a = ground_atom(lit.atom)
        return GroundLiteral(a, self.index.get(a), TARGET_CODE[lit.target])

    def name(self, i: Optional[int]) -> str:
        return "f" if i is None else atom_str(self.atoms[i])

    def logic_rules(self) -> list[GroundRule]:
        return list(self.rules)

    def stripped(self) -> list[GroundRule]:
        """Rules with probability annotations dropped: components become disjunctions."""
        out = list(self.rules)
        for c in self.components:
            head = tuple(o for o in c.outcomes if o is not None)
            out.append(GroundRule(head, c.pos, c.neg, c.source))
        return out

    def to_source(self) -> str:
        lines = [self._rule_str(r) for r in self.rules]
        for c in self.components:
            lines.append(self._component_str(c))
        return "\n".join(lines) + ("\n" if lines else "")

    def _body_str(self, pos, neg) -> str:
        items = [self.name(i) for i in pos] + [f"not {self.name(i)}" for i in neg]
        return f" :- {', '.join(items)}." if items else "."

    def _rule_str(self, r: GroundRule) -> str:
        if not r.head:
            return ":- " + self._body_str(r.pos, r.neg)[4:]
        return "; ".join(self.name(h) for h in r.head) + self._body_str(r.pos, r.neg)

    def _component_str(self, c: Component) -> str:
        tail = self._body_str(c.pos, c.neg)
        if c.kind == "credal":
            lo, hi = c.interval
            return f"[{fmt_prob(lo)}, {fmt_prob(hi)}]::{self.name(c.outcomes[0])}{tail}"
        if c.kind == "neural":
            pred, args = self.atoms[c.outcomes[0]]
            inst = args[0]
            vals = ",".join(str(self.atoms[o][1][1]) for o in c.outcomes)
            lab = "?" if c.learnable else "!"
            return f"{lab}::{pred}({inst}, {{{vals}}}) as @{c.net}{tail}"
        parts = []
        for o, p in zip(c.outcomes, c.probs):
            if o is None:
                continue
            lab = f"{fmt_prob(p)}?" if c.learnable else fmt_prob(p)
            parts.append(f"{lab}::{self.name(o)}")
        return "; ".join(parts) + tail


# ----------------------------------------------------------------------------
# terms


def _int(v, expr) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise GroundingError(f"arithmetic on non-integer constant {v!r} in '{expr}'")
    return v


def eval_term(t, binding: dict) -> Optional[Const]:
    """Evaluate a term under ``binding``; ``None`` when the operation is undefined (x/0)."""
    if isinstance(t, (int, str)):
        return t
    if isinstance(t, Var):
        return binding[t.name]
    if isinstance(t, Neg):
        v = eval_term(t.operand, binding)
        return None if v is None else -_int(v, t)
    if isinstance(t, BinOp):
        a = eval_term(t.left, binding)
        b = eval_term(t.right, binding)
        if a is None or b is None:
            return None
        a, b = _int(a, t), _int(b, t)
        if t.op == "+":
            return a + b
        if t.op == "-":
            return a - b
        if t.op == "*":
            return a * b
        if b == 0:
            return None
        q = abs(a) // abs(b) * (1 if (a >= 0) == (b >= 0) else -1)
        return q if t.op == "/" else a - b * q
    raise GroundingError(f"cannot evaluate term {t!r}")


def _order_key(v: Const):
    return (0, v) if isinstance(v, int) else (1, v)


def eval_comparison(c: Comparison, binding: dict) -> bool:
    a = eval_term(c.left, binding)
    b = eval_term(c.right, binding)
    if a is None or b is None:
        return False
    if c.op == "=":
        return a == b
    if c.op == "!=":
        return a != b
    ka, kb = _order_key(a), _order_key(b)
    return {"<": ka < kb, "<=": ka <= kb, ">": ka > kb, ">=": ka >= kb}[c.op]


def ground_atom(a: Atom, binding: Optional[dict] = None) -> GAtom:
    binding = binding or {}
    args = []
    for t in a.args:
        v = eval_term(t, binding)
        if v is None:
            raise GroundingError(f"undefined arithmetic in {a}")
        args.append(v)
    return a.pred, tuple(args)


# ----------------------------------------------------------------------------
# join planning


@dataclass
class _Schema:
    index: int
    stmt: object
    heads: list[Atom]
    body: tuple
    ground: bool
    steps: list = field(default_factory=list)


def _plan(body) -> list[tuple[str, object]]:
    """Order body items so each built-in runs as soon as its variables are bound."""
    bound: set[str] = set()
    pending = list(body)
    steps = []
    while pending:
        progressed = False
        for item in list(pending):
            if isinstance(item, Comparison):
                if item.vars() <= bound:
                    steps.append(("test", item))
                    pending.remove(item)
                    progressed = True
                elif item.op == "=":
                    for lhs, rhs in ((item.left, item.right), (item.right, item.left)):
                        if isinstance(lhs, Var) and lhs.name not in bound and term_vars(rhs) <= bound:
                            steps.append(("assign", (lhs.name, rhs)))
                            bound.add(lhs.name)
                            pending.remove(item)
                            progressed = True
                            break
        if progressed:
            continue
        lit = next((i for i in pending if isinstance(i, Literal) and not i.negated), None)
        if lit is None:
            break
        steps.append(("match", lit.atom))
        bound |= lit.vars()
        pending.remove(lit)
    for item in pending:
        if isinstance(item, Literal) and item.negated and item.vars() <= bound:
            continue
        raise GroundingError(f"cannot ground '{item}': unsafe variables")
    return steps


def _unify(pattern: Atom, args: tuple, binding: dict) -> Optional[dict]:
    out = None
    for t, v in zip(pattern.args, args):
        if isinstance(t, (int, str)):
            if t != v:
                return None
        elif isinstance(t, Var):
            cur = (out or binding).get(t.name, _MISSING)
            if cur is _MISSING:
                if out is None:
                    out = dict(binding)
                out[t.name] = v
            elif cur != v:
                return None
        else:
            if not term_vars(t) <= (out or binding).keys():
                raise GroundingError(f"arithmetic argument in '{pattern}' has unbound variables")
            if eval_term(t, out or binding) != v:
                return None
    return binding if out is None else out


_MISSING = object()


class _AtomSet:
    """Insertion-ordered set of ground atoms indexed by predicate signature."""

    def __init__(self):
        self.order: dict[GAtom, None] = {}
        self.by_sig: dict[tuple[str, int], list[GAtom]] = {}

    def add(self, a: GAtom) -> bool:
        if a in self.order:
            return False
        self.order[a] = None
        self.by_sig.setdefault((a[0], len(a[1])), []).append(a)
        return True

    def __contains__(self, a):
        return a in self.order

    def candidates(self, sig):
        return self.by_sig.get(sig, ())


def _substitutions(steps, atoms: _AtomSet, binding: dict, i: int = 0) -> Iterator[dict]:
    if i == len(steps):
        yield binding
        return
    kind, arg = steps[i]
    if kind == "test":
        if eval_comparison(arg, binding):
            yield from _substitutions(steps, atoms, binding, i + 1)
    elif kind == "assign":
        name, expr = arg
        v = eval_term(expr, binding)
        if v is not None:
            b = dict(binding)
            b[name] = v
            yield from _substitutions(steps, atoms, b, i + 1)
    else:
        # snapshot: the set may grow while the fixpoint is running
        for cand in list(atoms.candidates(arg.signature)):
            b = _unify(arg, cand[1], binding)
            if b is not None:
                yield from _substitutions(steps, atoms, b, i + 1)


def _schemas(program: Program) -> list[_Schema]:
    out = []
    for idx, s in enumerate(program.statements):
        if isinstance(s, Rule):
            heads, body = list(s.head), s.body
        elif isinstance(s, ADR):
            heads, body = [e.atom for e in s.entries], s.body
        elif isinstance(s, NeuralADR):
            heads, body = s.head_atoms(), s.body
        elif isinstance(s, CredalFact):
            heads, body = [s.atom], ()
        elif isinstance(s, DataBinding):
            heads, body = [s.atom], ()
        else:
            continue
        ground = all(h.is_ground() for h in heads) and all(
            (isinstance(b, Literal) and b.atom.is_ground()) or
            (isinstance(b, Comparison) and not b.vars()) for b in body)
        sch = _Schema(idx, s, heads, body, ground)
        sch.steps = _plan(body)
        out.append(sch)
    return out


def _instances(sch: _Schema, atoms: _AtomSet) -> Iterator[dict]:
    if sch.ground:
        if all(eval_comparison(c, {}) for c in sch.body if isinstance(c, Comparison)):
            yield {}
        return
    yield from _substitutions(sch.steps, atoms, {})


def herbrand_candidates(program: Program) -> _AtomSet:
    """Least fixpoint of the negation-free over-approximation of the program."""
    atoms = _AtomSet()
    schemas = _schemas(program)
    changed = True
    while changed:
        changed = False
        for sch in schemas:
            for b in list(_fixpoint_instances(sch, atoms)):
                for h in sch.heads:
                    if atoms.add(ground_atom(h, b)):
                        changed = True
    return atoms


def _fixpoint_instances(sch: _Schema, atoms: _AtomSet) -> Iterator[dict]:
    if sch.ground:
        pos = [b.atom for b in sch.body if isinstance(b, Literal) and not b.negated]
        if all(ground_atom(a) in atoms for a in pos) and \
                all(eval_comparison(c, {}) for c in sch.body if isinstance(c, Comparison)):
            yield {}
        return
    yield from _substitutions(sch.steps, atoms, {})


def ground(program: Program, max_rules: int = DEFAULT_MAX_RULES) -> GroundProgram:
    """Ground a validated program."""
    possible = herbrand_candidates(program)
    schemas = _schemas(program)

    raw_rules = []      # (head atoms, pos atoms, neg atoms, source)
    raw_comps = []      # (schema, binding, pos atoms, neg atoms)
    count = 0
    for sch in schemas:
        for b in _instances(sch, possible):
            count += 1
            if count > max_rules:
                raise CapExceeded(f"grounding exceeds {max_rules} ground rules")
            pos = tuple(ground_atom(x.atom, b) for x in sch.body
                        if isinstance(x, Literal) and not x.negated)
            neg = tuple(ground_atom(x.atom, b) for x in sch.body
                        if isinstance(x, Literal) and x.negated)
            if isinstance(sch.stmt, (Rule, DataBinding)):
                heads = tuple(ground_atom(h, b) for h in sch.heads)
                raw_rules.append((heads, pos, neg, sch.index))
            else:
                raw_comps.append((sch, b, pos, neg))

    index: dict[GAtom, int] = {}
    atoms: list[GAtom] = []

    def intern(a: GAtom) -> int:
        i = index.get(a)
        if i is None:
            i = index[a] = len(atoms)
            atoms.append(a)
        return i

    for a in possible.order:
        intern(a)
    rules = []
    for heads, pos, neg, src in raw_rules:
        rules.append(GroundRule(tuple(map(intern, heads)), tuple(map(intern, pos)),
                                tuple(map(intern, neg)), src))
    comps = []
    for sch, b, pos, neg in raw_comps:
        pos_i = tuple(map(intern, pos))
        neg_i = tuple(map(intern, neg))
        comps.append(_component(sch, b, pos_i, neg_i, intern, program))

    gp = GroundProgram(atoms, index, rules, comps, [], program,
                       tuple(sorted({v for a in atoms for v in a[1]}, key=_order_key)))
    gp.queries = [q for src in program.queries for q in ground_query(gp, src)]
    return gp


def _component(sch, b, pos_i, neg_i, intern, program) -> Component:
    s = sch.stmt
    if isinstance(s, ADR):
        probs, phantom = s.normalized()
        outs = [intern(ground_atom(e.atom, b)) for e in s.entries]
        if phantom > 0:
            outs.append(None)
            probs = probs + [phantom]
        return Component("adr", tuple(outs), tuple(probs), pos_i, neg_i, sch.index,
                         s.learnable)
    if isinstance(s, CredalFact):
        return Component("credal", (intern(ground_atom(s.atom, b)), None),
                         (s.lower, 1.0 - s.lower), pos_i, neg_i, sch.index,
                         interval=(s.lower, s.upper))
    # neural
    inst = eval_term(s.inst, b)
    outs = tuple(intern(ground_atom(h, b)) for h in s.head_atoms())
    data_preds = {d.pred for d in program.bindings}
    key = None
    for x in s.body:
        if isinstance(x, Literal) and not x.negated and len(x.atom.args) == 1 \
                and x.atom.pred in data_preds and eval_term(x.atom.args[0], b) == inst:
            key = (x.atom.pred, inst)
            break
    k = len(outs)
    return Component("neural", outs, tuple([1.0 / k] * k), pos_i, neg_i, sch.index,
                     s.learnable, net=s.net, data=key)


def _match_all(patterns: list[Atom], atoms: list[GAtom]) -> Iterator[dict]:
    base = _AtomSet()
    for a in atoms:
        base.add(a)
    steps = [("match", p) for p in patterns]
    yield from _substitutions(steps, base, {})


def ground_query(gp: GroundProgram, q: Query) -> list[GroundQuery]:
    """Ground a ``#query``; variables range over matching atoms of the Herbrand base."""
    lits = q.literals()
    if all(lit.atom.is_ground() for lit in lits):
        bindings = [{}]
    else:
        bindings = list(_match_all([lit.atom for lit in lits if not lit.atom.is_ground()],
                                   gp.atoms))
    out = []
    seen = set()
    for b in bindings:
        def g(lit: QueryLiteral) -> GroundLiteral:
            a = ground_atom(lit.atom, b)
            return GroundLiteral(a, gp.index.get(a), TARGET_CODE[lit.target])
        gq = GroundQuery(tuple(map(g, q.query)), tuple(map(g, q.evidence)))
        if gq not in seen:
            seen.add(gq)
            out.append(gq)
    return out


def strip_annotations(program: Program) -> Program:
    """Drop probabilities: ADRs and neural rules become disjunctive rules, credal facts facts."""
    stmts = []
    for s in program.statements:
        if isinstance(s, ADR):
            stmts.append(Rule(tuple(e.atom for e in s.entries), s.body, s.pos))
        elif isinstance(s, NeuralADR):
            stmts.append(Rule(tuple(s.head_atoms()), s.body, s.pos))
        elif isinstance(s, CredalFact):
            stmts.append(Rule((s.atom,), (), s.pos))
        else:
            stmts.append(s)
    return Program(tuple(stmts), program.directives, program.path)


def rule_multiset(gp: GroundProgram, rules) -> Counter:
    """Rules keyed by atom names, for comparing ground programs with different id orders."""
    def names(ids):
        return tuple(gp.atoms[i] for i in ids)
    return Counter((names(r.head), names(r.pos), names(r.neg)) for r in rules)
