"""Lower/upper probabilities from the four model-count classes, and credal-fact boxes.

For a query ``q`` with evidence ``e`` every total choice falls into some of
four classes: every model satisfies ``q, e`` (a), some model does (b), every
model satisfies ``e`` but not ``q`` (c), some model does (d).  The
probability-weighted class totals give the credal interval directly.

Credal facts turn each class total into a multilinear polynomial in the fact
probabilities ``x_i``.  The lower bound ``a / (a + d)`` and upper bound
``b / (b + c)`` are linear-fractional in each ``x_i`` separately, hence
monotone along every axis, so their extrema over the box sit at vertices.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InferenceError


@dataclass(frozen=True)
class CountStats:
    a: float
    b: float
    c: float
    d: float

    def interval(self) -> tuple[float, float]:
        return credal_interval(self.a, self.b, self.c, self.d)


def credal_interval(a: float, b: float, c: float, d: float) -> tuple[float, float]:
    if a == b == c == d == 0:
        raise InferenceError("evidence has probability zero: conditional probability undefined")
    if b + c == 0 and d > 0:
        return 0.0, 0.0
    if a + d == 0 and b > 0:
        return 1.0, 1.0
    return a / (a + d), b / (b + c)


def sigma_weights(x: np.ndarray) -> np.ndarray:
    """Weight of each true/false assignment ``sigma`` at point ``x``.

    Bit ``i`` of the assignment index is set when credal fact ``i`` is true.
    """
    x = np.asarray(x, dtype=float)
    k = x.size
    w = np.ones(1 << k)
    idx = np.arange(1 << k)
    for i in range(k):
        bit = (idx >> i) & 1
        w *= np.where(bit == 1, x[i], 1.0 - x[i])
    return w


@dataclass(frozen=True)
class CredalPolynomials:
    """Class totals a, b, c, d as multilinear polynomials in the credal-fact probabilities.

    ``coeffs[s, j]`` is the fixed-part probability mass of class ``j`` (a, b,
    c, d in order) among total choices whose credal facts follow assignment
    ``s``; the polynomial term is that coefficient times ``x_i`` or
    ``1 - x_i`` per fact.
    """

    names: tuple[str, ...]
    box: tuple[tuple[float, float], ...]
    coeffs: np.ndarray

    @property
    def k(self) -> int:
        return len(self.names)

    def evaluate(self, x) -> CountStats:
        w = sigma_weights(np.asarray(x, dtype=float).reshape(self.k))
        vals = [math.fsum(w * self.coeffs[:, j]) for j in range(4)]
        return CountStats(*vals)

    def interval_at(self, x) -> tuple[float, float]:
        return self.evaluate(x).interval()

    def expand(self, which: str) -> dict[tuple[int, ...], float]:
        """Monomial coefficients: exponent vector (0/1 per fact) -> coefficient."""
        j = "abcd".index(which)
        out: dict[tuple[int, ...], float] = {}
        for s in range(1 << self.k):
            coef = self.coeffs[s, j]
            if coef == 0:
                continue
            # prod over facts of x_i (bit set) or (1 - x_i); expand binomially
            true_bits = [i for i in range(self.k) if (s >> i) & 1]
            false_bits = [i for i in range(self.k) if not (s >> i) & 1]
            for r in range(len(false_bits) + 1):
                for chosen in itertools.combinations(false_bits, r):
                    exp = [0] * self.k
                    for i in true_bits + list(chosen):
                        exp[i] = 1
                    key = tuple(exp)
                    out[key] = out.get(key, 0.0) + coef * (-1) ** r
        return {m: c for m, c in out.items() if abs(c) > 1e-15}

    def __str__(self):
        parts = []
        for which in "abcd":
            terms = []
            for exp, c in sorted(self.expand(which).items()):
                mono = "*".join(n for n, e in zip(self.names, exp) if e)
                terms.append(f"{c:g}" + (f"*{mono}" if mono else ""))
            parts.append(f"{which} = {' + '.join(terms) if terms else '0'}")
        return "\n".join(parts)


def _vertices(box):
    axes = [sorted({lo, hi}) for lo, hi in box]
    return itertools.product(*axes)


def _extremes(poly: CredalPolynomials, points) -> tuple[float, float]:
    lows, highs = [], []
    for x in points:
        try:
            lo, hi = poly.interval_at(x)
        except InferenceError:
            continue
        lows.append(lo)
        highs.append(hi)
    if not lows:
        raise InferenceError("degenerate query: evidence has probability zero everywhere in the box")
    return min(lows), max(highs)


def optimize_credal(poly: CredalPolynomials) -> tuple[float, float]:
    """Exact lower/upper probability over the credal box by vertex enumeration."""
    return _extremes(poly, _vertices(poly.box))


def grid_search(poly: CredalPolynomials, points: int = 10) -> tuple[float, float]:
    """Reference optimizer: evaluate on a regular grid with ``points`` values per axis."""
    axes = [np.linspace(lo, hi, points) for lo, hi in poly.box]
    return _extremes(poly, itertools.product(*axes))
