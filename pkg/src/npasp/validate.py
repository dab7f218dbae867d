"""Static checks on a parsed program: safety, data bindings, declared query predicates."""
from __future__ import annotations

from .errors import Diagnostic, ValidationError
from .syntax import (
    ADR, Atom, Comparison, CredalFact, DataBinding, Literal, NeuralADR, Program, Rule, Var,
    term_vars,
)


def bound_variables(body) -> set[str]:
    """Variables bound by positive atoms, closed under ``V = expr`` assignments."""
    bound: set[str] = set()
    for item in body:
        if isinstance(item, Literal) and not item.negated:
            bound |= item.vars()
    changed = True
    while changed:
        changed = False
        for item in body:
            if not isinstance(item, Comparison) or item.op != "=":
                continue
            for lhs, rhs in ((item.left, item.right), (item.right, item.left)):
                if isinstance(lhs, Var) and lhs.name not in bound and term_vars(rhs) <= bound:
                    bound.add(lhs.name)
                    changed = True
    return bound


def _needed(head_atoms, body) -> set[str]:
    need: set[str] = set()
    for a in head_atoms:
        need |= a.vars()
    for item in body:
        if isinstance(item, Comparison) or (isinstance(item, Literal) and item.negated):
            need |= item.vars()
    return need


def unsafe_variables(head_atoms, body) -> list[str]:
    return sorted(_needed(head_atoms, body) - bound_variables(body))


def _head_atoms(stmt) -> list[Atom]:
    if isinstance(stmt, Rule):
        return list(stmt.head)
    if isinstance(stmt, ADR):
        return [e.atom for e in stmt.entries]
    if isinstance(stmt, NeuralADR):
        return stmt.head_atoms()
    if isinstance(stmt, CredalFact):
        return [stmt.atom]
    if isinstance(stmt, DataBinding):
        return [stmt.atom]
    return []


def declared_signatures(program: Program) -> set[tuple[str, int]]:
    sigs = set()
    for s in program.statements:
        for a in _head_atoms(s):
            sigs.add(a.signature)
        for item in getattr(s, "body", ()):
            if isinstance(item, Literal):
                sigs.add(item.atom.signature)
    return sigs


def diagnostics(program: Program) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    bindings = {}
    for b in program.bindings:
        key = (b.pred, b.const)
        if key in bindings:
            out.append(Diagnostic(f"duplicate data binding for {b.atom}", b.pos, "binding"))
        bindings[key] = b
    data_preds = {b.pred for b in program.bindings}

    for s in program.statements:
        if not isinstance(s, (Rule, ADR, NeuralADR, CredalFact)):
            continue
        body = getattr(s, "body", ())
        bad = unsafe_variables(_head_atoms(s), body)
        if bad:
            out.append(Diagnostic(f"unsafe variable(s) {', '.join(bad)} in '{s}'", s.pos, "unsafe"))
        if isinstance(s, NeuralADR):
            data_lits = [b for b in body if isinstance(b, Literal) and not b.negated
                         and len(b.atom.args) == 1 and b.atom.args[0] == s.inst]
            if not data_lits:
                out.append(Diagnostic(
                    f"neural rule for '{s.pred}' needs a data predicate over {s.inst} in its body",
                    s.pos, "binding"))
            elif not any(b.atom.pred in data_preds for b in data_lits):
                preds = ", ".join(sorted({b.atom.pred for b in data_lits}))
                out.append(Diagnostic(f"data predicate(s) {preds} of neural rule '{s.pred}' "
                                      f"have no '~' binding", s.pos, "binding"))

    sigs = declared_signatures(program)
    for q in program.queries:
        for lit in q.literals():
            if lit.atom.signature not in sigs:
                name, arity = lit.atom.signature
                out.append(Diagnostic(f"query predicate {name}/{arity} is not declared",
                                      q.pos, "query"))
    return out


def validate(program: Program) -> Program:
    """Return ``program`` unchanged, or raise :class:`ValidationError` listing every problem."""
    diags = diagnostics(program)
    if diags:
        raise ValidationError(diags)
    return program
