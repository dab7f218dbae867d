"""
Interval-valued facts
=====================

A credal fact ``[l, u]::f`` says only that the probability of ``f`` lies in
an interval.  Queries then get a lower and an upper probability, found by
evaluating four multilinear count polynomials at the corners of the box.
"""

import os

import numpy as np

from npasp.credal import grid_search, optimize_credal
from npasp.grounder import ground
from npasp.inference import build_credal_polynomials
from npasp.loader import load_program

here = os.path.dirname(os.path.abspath(__file__))
gp = ground(load_program(os.path.join(here, "..", "programs", "credal_alarm.plp")))

for q in gp.queries:
    poly = build_credal_polynomials(q, gp)
    print(f"query {q}")
    # a, b, c, d as polynomials in the credal probabilities
    for line in str(poly).splitlines():
        print("   ", line)
    lo, hi = optimize_credal(poly)
    glo, ghi = grid_search(poly, points=10)
    print(f"    vertices [{lo:.6f}, {hi:.6f}]   grid [{glo:.6f}, {ghi:.6f}]")

# The bounds move monotonically along each axis, which is why corners
# suffice.  Sweep the burglary probability with the others at their lows.
poly = build_credal_polynomials(gp.queries[0], gp)
for x in np.linspace(0.1, 0.3, 5):
    lo, hi = poly.interval_at([x, 0.05, 0.6])
    print(f"burglary = {x:.2f}: lower {lo:.4f}")
