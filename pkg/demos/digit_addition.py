"""
Learning digits from their sums
===============================

Two noisy "images" (8-dimensional feature vectors) each show a digit in
{0, 1, 2}.  Training labels only give the sum.  A softmax classifier sits
inside a neural ADR, and gradients reach it through the logic program.

Pass a directory to keep the generated task, e.g.
``python demos/digit_addition.py programs/digits``.
"""

import io
import os
import sys
import tempfile
import time

from npasp.cli import run
from npasp.grounder import ground
from npasp.loader import load_program
from npasp.neural import Classifier, load_weights
from npasp.toydata import evaluate, make_digit_data, write_digit_task

out_dir = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="digits-")
data = make_digit_data(n_train=600, n_test=200, seed=0)
path = write_digit_task(out_dir, data, epochs=20, seed=0)
print(open(path).read())

# Same as ``npasp learn digits.plp --save-weights DIR``
t = time.perf_counter()
out = io.StringIO()
code = run(["learn", path, "--save-weights", out_dir], out, sys.stderr)
print(out.getvalue())
print(f"exit {code}, {time.perf_counter() - t:.2f} s")

net = Classifier("softmax-linear", data.test_x[0].shape[1], data.n_classes)
net.params = load_weights(os.path.join(out_dir, "net.npw"))
sum_acc, digit_acc = evaluate(ground(load_program(path)), net, data)
print(f"held-out sum accuracy {sum_acc:.3f}, per-digit accuracy {digit_acc:.3f}")
