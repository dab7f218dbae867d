"""Source text to :class:`~npasp.syntax.Program`."""
from __future__ import annotations

import functools
import os
from importlib import resources

import lark
from lark import Transformer, v_args

from .errors import ParseError
from .syntax import (
    ADR, ADR_MASS_EPS, ADREntry, Atom, BinOp, Comparison, CredalFact, DataBinding,
    Directives, LearnDirective, Literal, LOGIC_SEMANTICS, Neg, NeuralADR, Pos,
    PROB_SEMANTICS, Program, Query, QueryLiteral, Rule, SemanticsDirective, Source, Var,
)


@functools.lru_cache(maxsize=None)
def _lark() -> lark.Lark:
    text = resources.files("npasp").joinpath("grammar.lark").read_text()
    return lark.Lark(text, parser="lalr", propagate_positions=True,
                     start=["start", "qlit"], maybe_placeholders=False)


def _pos(meta) -> Pos:
    if getattr(meta, "empty", True):
        return Pos()
    return Pos(meta.line, meta.column)


def _number(tok: str):
    if any(c in tok for c in ".eE"):
        return float(tok)
    return int(tok)


def _unquote(tok: str) -> str:
    return bytes(tok[1:-1], "utf-8").decode("unicode_escape")


class _Labels:
    FIXED, INIT, FREE, BANG = range(4)


@v_args(inline=True)
class _ToSyntax(Transformer):
    def __init__(self):
        super().__init__()
        self._anon = 0

    # terms
    def t_int(self, tok):
        return int(tok)

    def t_const(self, tok):
        return str(tok)

    def t_string(self, tok):
        return str(tok)

    def t_var(self, tok):
        name = str(tok)
        if name == "_":
            self._anon += 1
            return Var(f"_{self._anon}")
        return Var(name)

    def binop(self, left, op, right):
        return BinOp(str(op), left, right)

    def neg(self, operand):
        if isinstance(operand, int):
            return -operand
        return Neg(operand)

    def c_int(self, tok):
        return int(tok)

    def c_negint(self, tok):
        return -int(tok)

    def c_name(self, tok):
        return str(tok)

    def c_string(self, tok):
        return str(tok)

    @v_args(meta=True, inline=False)
    def atom(self, meta, children):
        name, *args = children
        return Atom(str(name), tuple(args), _pos(meta))

    # bodies
    def pos_lit(self, atom):
        return Literal(atom, False)

    def neg_lit(self, atom):
        return Literal(atom, True)

    def comparison(self, left, op, right):
        return Comparison(str(op), left, right)

    @v_args(inline=False)
    def body(self, items):
        return tuple(items)

    @v_args(inline=False)
    def body_opt(self, items):
        return items[0] if items else ()

    @v_args(inline=False)
    def head(self, atoms):
        return tuple(atoms)

    # statements
    @v_args(meta=True, inline=True)
    def rule(self, meta, head, body):
        return Rule(head, body, _pos(meta))

    @v_args(meta=True, inline=True)
    def constraint(self, meta, body):
        return Rule((), body, _pos(meta))

    def lab_fixed(self, tok):
        return _Labels.FIXED, _number(tok)

    def lab_init(self, tok):
        return _Labels.INIT, _number(tok)

    def lab_free(self):
        return _Labels.FREE, None

    def lab_bang(self):
        return _Labels.BANG, None

    def ad_entry(self, label, atom):
        return label, atom

    @v_args(meta=True, inline=False)
    def adr(self, meta, children):
        *entries, body = children
        pos = _pos(meta)
        out = []
        for (kind, p), atom in entries:
            if kind == _Labels.BANG:
                raise ParseError("'!' is only allowed on neural annotated disjunctions", atom.pos)
            if p is not None and not 0.0 <= p <= 1.0:
                raise ParseError(f"probability {p} outside [0, 1]", atom.pos)
            out.append(ADREntry(atom, None if p is None else float(p), kind != _Labels.FIXED))
        mass = sum(e.prob for e in out if e.prob is not None)
        if mass > 1.0 + ADR_MASS_EPS:
            raise ParseError(f"head mass {mass:g} > 1", pos)
        if len(out) == 1 and not out[0].learnable and out[0].prob == 1.0:
            return Rule((out[0].atom,), body, pos)
        return ADR(tuple(out), body, pos)

    def outcome_range(self, lo, hi=None):
        if hi is None:
            return (lo,)
        if not isinstance(lo, int) or not isinstance(hi, int):
            raise ParseError("interval outcomes need integer bounds")
        if hi < lo:
            raise ParseError(f"empty outcome interval {lo}..{hi}")
        return tuple(range(lo, hi + 1))

    @v_args(inline=False)
    def outcome_enum(self, values):
        return tuple(values)

    def outcomes(self, values):
        return values

    def kv(self, key, value):
        return str(key), value

    def v_number(self, tok):
        return _number(tok)

    def v_negnumber(self, tok):
        return -_number(tok)

    def v_string(self, tok):
        return _unquote(str(tok))

    def v_name(self, tok):
        s = str(tok)
        return {"true": True, "false": False}.get(s, s)

    @v_args(inline=False)
    def with_opt(self, kvs):
        return tuple(kvs)

    @v_args(meta=True, inline=True)
    def nadr(self, meta, label, pred, inst, outcomes, net, params, body):
        kind, _ = label
        pos = _pos(meta)
        if kind not in (_Labels.FREE, _Labels.BANG):
            raise ParseError("neural annotated disjunctions take '?' or '!' labels", pos)
        if len(outcomes) < 2:
            raise ParseError("neural annotated disjunctions need at least two outcomes", pos)
        if len(set(outcomes)) != len(outcomes):
            raise ParseError("duplicate outcome value", pos)
        return NeuralADR(str(pred), inst, outcomes, str(net), kind == _Labels.FREE,
                         params, body, pos)

    @v_args(meta=True, inline=True)
    def credal(self, meta, lo, hi, atom):
        lo, hi = float(_number(lo)), float(_number(hi))
        if not 0.0 <= lo <= hi <= 1.0:
            raise ParseError(f"credal interval [{lo}, {hi}] must satisfy 0 <= lower <= upper <= 1",
                             _pos(meta))
        return CredalFact(atom, lo, hi, _pos(meta))

    def src_name(self, tok):
        return Source(str(tok), False)

    def src_path(self, tok):
        return Source(_unquote(str(tok)), True)

    def data_src(self, kind, source):
        return str(kind), source

    @v_args(meta=True, inline=False)
    def binding(self, meta, children):
        atom, *srcs = children
        pos = _pos(meta)
        if len(atom.args) != 1 or not isinstance(atom.args[0], (int, str)):
            raise ParseError("data binding needs a one-place atom with a constant argument", pos)
        kinds = [k for k, _ in srcs]
        if len(set(kinds)) != len(kinds):
            raise ParseError("duplicate data source in binding", pos)
        d = dict(srcs)
        return DataBinding(atom.pred, atom.args[0], d.get("test"), d.get("train"), pos)

    def q_true(self, atom):
        return QueryLiteral(atom, "true")

    def q_false(self, atom):
        return QueryLiteral(atom, "false")

    def q_undef(self, atom):
        return QueryLiteral(atom, "undef")

    @v_args(inline=False)
    def qlits(self, lits):
        return tuple(lits)

    @v_args(meta=True, inline=False)
    def query(self, meta, children):
        q = children[0]
        e = children[1] if len(children) > 1 else ()
        return Query(q, e, _pos(meta))

    @v_args(meta=True, inline=False)
    def semantics(self, meta, names):
        opts = tuple(str(n) for n in names)
        pos = _pos(meta)
        for o in opts:
            if o not in LOGIC_SEMANTICS + PROB_SEMANTICS:
                raise ParseError(f"unknown semantics '{o}'", pos,
                                 expected=LOGIC_SEMANTICS + PROB_SEMANTICS)
        if sum(o in LOGIC_SEMANTICS for o in opts) > 1 or sum(o in PROB_SEMANTICS for o in opts) > 1:
            raise ParseError("conflicting semantics options", pos)
        return SemanticsDirective(opts, pos)

    @v_args(meta=True, inline=False)
    def learn(self, meta, children):
        source, *params = children
        return LearnDirective(source, tuple(params), _pos(meta))

    @v_args(inline=False)
    def start(self, statements):
        return statements


def resolve_directives(statements) -> Directives:
    """Collect queries and fold ``#semantics``/``#learn``; later directives override earlier ones."""
    logic, prob = Directives().logic, Directives().prob
    queries, learn = [], None
    for s in statements:
        if isinstance(s, SemanticsDirective):
            for o in s.options:
                if o in LOGIC_SEMANTICS:
                    logic = o
                else:
                    prob = o
        elif isinstance(s, Query):
            queries.append(s)
        elif isinstance(s, LearnDirective):
            learn = s
    return Directives(logic, prob, tuple(queries), learn)


def check_semantics(program: Program) -> None:
    """Reject constructs the selected semantics cannot express."""
    logic, prob = program.semantics
    if logic == "stable":
        for q in program.queries:
            for lit in q.literals():
                if lit.target == "undef":
                    raise ParseError("'undef' queries need partial, lstable or smproblog semantics",
                                     q.pos)
    if prob == "maxent" and program.credal_facts:
        raise ParseError("credal facts are only available under the credal semantics",
                         program.credal_facts[0].pos)


def _terminal(name: str) -> str:
    """Readable form of a grammar terminal: its literal text, or a lowercase class name."""
    try:
        pat = _lark().get_terminal(name).pattern
    except KeyError:
        return name.lower()
    if isinstance(pat, lark.lexer.PatternStr):
        return repr(pat.value)
    return {"NAME": "name", "VARIABLE": "variable", "NUMBER": "number", "INT": "integer",
            "STRING": "string", "ADDOP": "'+' or '-'", "MULOP": "'*', '/' or '\\'",
            "CMP": "comparison", "DATA_KIND": "'test' or 'train'"}.get(name, name.lower())


def _syntax_error(ex: lark.exceptions.UnexpectedInput) -> ParseError:
    pos = Pos(getattr(ex, "line", 0) or 0, getattr(ex, "column", 0) or 0)
    expected = set()
    if isinstance(ex, lark.exceptions.UnexpectedToken):
        expected = {_terminal(t) for t in ex.expected}
        if ex.token.type == "$END":
            tok = "unexpected end of input"
        else:
            tok = f"unexpected {ex.token.value!r}"
    elif isinstance(ex, lark.exceptions.UnexpectedCharacters):
        expected = {_terminal(t) for t in (ex.allowed or ())}
        tok = f"unexpected character {ex.char!r}"
    else:
        tok = "unexpected end of input"
        expected = getattr(ex, "expected", set()) or set()
    return ParseError(f"syntax error: {tok}", pos, expected=expected)


def _parse_tree(text: str, start: str):
    try:
        return _lark().parse(text, start=start)
    except lark.exceptions.UnexpectedInput as ex:
        raise _syntax_error(ex) from None


def _transform(tree):
    try:
        return _ToSyntax().transform(tree)
    except lark.exceptions.VisitError as ex:
        if isinstance(ex.orig_exc, ParseError):
            raise ex.orig_exc from None
        raise


def parse(text: str, path: str | None = None) -> Program:
    """Parse a whole program.  Raises :class:`ParseError` on any rejected input."""
    statements = _transform(_parse_tree(text, "start"))
    program = Program(tuple(statements), resolve_directives(statements), path)
    check_semantics(program)
    return program


def parse_file(path: str | os.PathLike) -> Program:
    path = os.fspath(path)
    with open(path, encoding="utf-8") as f:
        return parse(f.read(), path)


def parse_literal(text: str) -> QueryLiteral:
    """Parse ``a``, ``not a`` or ``undef a`` as a query/observation literal."""
    return _transform(_parse_tree(text.strip(), "qlit"))
