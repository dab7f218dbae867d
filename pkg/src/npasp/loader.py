"""Program files plus the data they reference: feature matrices and observation CSVs."""
from __future__ import annotations

import csv
import os
from typing import Optional

import numpy as np

from .errors import DataError, ParseError
from .grounder import GroundLiteral, GroundProgram, ground
from .neural import load_matrix
from .parser import parse, parse_file, parse_literal
from .syntax import Program, Source
from .validate import declared_signatures, validate


def load_program(path: str) -> Program:
    return validate(parse_file(path))


def load_text(text: str, path: Optional[str] = None) -> Program:
    return validate(parse(text, path))


def compile_program(program_or_text, max_rules: Optional[int] = None) -> GroundProgram:
    """Parse (if given text), validate and ground."""
    program = program_or_text
    if isinstance(program, str):
        program = load_text(program)
    if max_rules is None:
        return ground(program)
    return ground(program, max_rules)


def base_dir(program: Program) -> str:
    return os.path.dirname(os.path.abspath(program.path)) if program.path else os.getcwd()


def resolve(program: Program, source: Source) -> str:
    path = source.path()
    return path if os.path.isabs(path) else os.path.join(base_dir(program), path)


def load_features(program: Program, split: str) -> dict[tuple, np.ndarray]:
    """Feature matrix per data-bound instance ``(pred, const)`` for ``split`` (train or test)."""
    out = {}
    for b in program.bindings:
        src = b.train if split == "train" else b.test
        if src is None:
            raise DataError(f"data binding {b.atom} has no {split} source", b.pos)
        out[(b.pred, b.const)] = load_matrix(resolve(program, src))
    rows = {m.shape[0] for m in out.values()}
    if len(rows) > 1:
        raise DataError(f"{split} feature matrices disagree on row count: {sorted(rows)}")
    for key, m in out.items():
        if m.shape[0] == 0:
            raise DataError(f"{split} feature matrix for {key[0]}({key[1]}) is empty")
    return out


def _literal_cells(row: list[str]):
    return [parse_literal(c) for c in row if c.strip()]


def load_observations(path: str, gp: GroundProgram) -> list[tuple[GroundLiteral, ...]]:
    """One observation per CSV row; each non-empty cell is a literal such as ``not both_even``.

    The first row is a header when it does not parse as literals or names a
    predicate the program never mentions.
    """
    with open(path, newline="", encoding="utf-8") as f:
        rows = [r for r in csv.reader(f)]
    sigs = {(a[0], len(a[1])) for a in gp.atoms}
    if gp.program is not None:
        sigs |= declared_signatures(gp.program)
    out = []
    for lineno, row in enumerate(rows, start=1):
        if not any(c.strip() for c in row):
            continue
        try:
            lits = _literal_cells(row)
        except ParseError as ex:
            if not out and lineno == 1:
                continue
            raise DataError(f"{path}: line {lineno}: {ex.message}") from None
        if lineno == 1 and any(l.atom.signature not in sigs for l in lits):
            continue
        out.append(tuple(gp.literal(l) for l in lits))
    return out
