"""
Four readings of the same program
=================================

One probabilistic fact ``r`` switches on an odd loop ``p :- not p``.  With
``r`` chosen the program has no stable model at all, and each logic
semantics decides differently what the models of that choice are.
"""

from npasp.errors import SemanticsError
from npasp.grounder import ground
from npasp.inference import Engine, infer
from npasp.loader import load_text
from npasp.semantics import LOGICS

source = """
0.4::r.
p :- not p, r.
a.
#semantics lstable.
#query undef p.
#query undef a.
#query a.
"""
gp = ground(load_text(source))

# Per total choice, the selected models under each semantics.  Stable
# semantics has nothing to offer for the choice {r}.
for logic in LOGICS:
    eng = Engine(gp, logic)
    print(f"--- {logic}")
    for i in range(eng.size):
        try:
            ms = [m.render(gp.name) for m in eng.models(i)]
        except SemanticsError as ex:
            ms = [f"error: {ex}"]
        print(f"  {eng.describe(i)}: {', '.join(ms)}")

# Max-ent answers.  L-stable keeps a true and p undefined; SMProbLog leaves
# everything undefined, a included, which is what the third query exposes.
for logic in ("lstable", "smproblog"):
    print(f"--- answers under {logic}")
    for r in infer(gp, logic, "maxent"):
        print("  " + r.text())

# Partial semantics also keeps the all-undefined model of an even loop,
# which L-stable discards once stable models exist.
loop = ground(load_text("a :- not b. b :- not a."))
for logic in ("stable", "partial", "lstable"):
    print(logic, [m.render(loop.name) for m in Engine(loop, logic).models(0)])
