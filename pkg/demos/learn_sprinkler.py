"""
Learning fact probabilities from partial observations
=====================================================

Each observation fixes a few atoms (``wet``, ``not dark``...) and leaves
the rest hidden.  The fixed-point rule and the Lagrangian gradient rule both
climb the same log-likelihood; the fixed-point rule needs no step size.
"""

import os

from npasp.grounder import ground
from npasp.learning import LearnConfig, Learner
from npasp.loader import load_observations, load_program

here = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "programs")
program = load_program(os.path.join(here, "sprinkler.plp"))
gp = ground(program)
data = load_observations(os.path.join(here, "sprinkler_obs.csv"), gp)
print(f"{len(data)} observations, {len(gp.components)} probabilistic components")


def show(learner):
    for src, p in learner.params.items():
        print(f"    {program.statements[src]}  ->  {[round(float(v), 4) for v in p]}")


for alg, lr, niters in [("fixpoint", 0.0, 5000), ("lagrange", 0.5, 400)]:
    learner = Learner(gp, data)
    state = learner.run(LearnConfig(alg=alg, lr=lr, niters=niters))
    first, last = state.trace[0][1], state.trace[-1][1]
    print(f"{alg}: loglik {first:.4f} -> {last:.4f} in {len(state.trace) - 1} epochs")
    show(learner)

# cloudy is driven to the edge of the simplex, so the optimum is a boundary
# point: the remaining partials are equal there, not zero.
