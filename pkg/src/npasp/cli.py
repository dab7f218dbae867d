"""Command-line front end: ``npasp {query,learn,ground,models} PROGRAM``.

Exit status is 0 on success, 1 when the program or its data is rejected (the
diagnostic goes to standard error with its source position) and 2 when a
size cap is exceeded.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .errors import CapExceeded, NpaspError, ValidationError
from .grounder import GroundProgram, ground
from .inference import DEFAULT_MAX_CHOICES, Engine, component_probs
from .learning import LearnConfig, Learner
from .loader import base_dir, load_features, load_observations, load_program, resolve
from .neural import NetSpec, load_model_config, model_config_path, save_weights
from .parser import check_semantics
from .semantics import DEFAULT_MAX_ATOMS, LOGICS
from .syntax import ADR, PROB_SEMANTICS, Program


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="npasp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("program")
    common.add_argument("--sem", choices=LOGICS, help="logic semantics (overrides #semantics)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--max-choices", type=int, default=DEFAULT_MAX_CHOICES)
    common.add_argument("--max-atoms", type=int, default=DEFAULT_MAX_ATOMS,
                        help="atom cap for the exhaustive oracle")
    common.add_argument("--method", choices=("search", "oracle"), default="search",
                        help="model enumeration: pruned search or definitional oracle")
    common.add_argument("--seed", type=int, default=None)
    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--row", type=int, default=0,
                      help="test-set row feeding the neural ADRs (query/models)")

    q = sub.add_parser("query", parents=[common, data], help="answer #query directives")
    q.add_argument("--prob", choices=PROB_SEMANTICS, help="probabilistic semantics")
    q.add_argument("--json", action="store_true")
    q.add_argument("--dump-ground", action="store_true")
    q.add_argument("--dump-models", action="store_true")

    ln = sub.add_parser("learn", parents=[common], help="run the #learn directive")
    ln.add_argument("--alg", choices=("fixpoint", "lagrange", "neurasp"))
    ln.add_argument("--lr", type=float)
    ln.add_argument("--niters", type=int)
    ln.add_argument("--batch", type=int)
    ln.add_argument("--data", help="observations CSV (overrides #learn source)")
    ln.add_argument("--trace", help="write the epoch,loglik,seconds trace here instead of stdout")
    ln.add_argument("--save-weights", metavar="DIR", help="directory for trained network weights")
    ln.add_argument("--json", action="store_true")
    ln.add_argument("--dump-ground", action="store_true")

    sub.add_parser("ground", parents=[common], help="print the ground program")
    sub.add_parser("models", parents=[common, data], help="print the selected models per total choice")
    return ap


def _with_semantics(program: Program, logic: Optional[str], prob: Optional[str]) -> Program:
    d = program.directives
    d = dataclasses.replace(d, logic=logic or d.logic, prob=prob or d.prob)
    out = dataclasses.replace(program, directives=d)
    check_semantics(out)
    return out


def _specs(program: Program, seed: Optional[int]):
    specs = load_model_config(model_config_path(program.path)) if program.path else {}
    if seed is not None:
        specs = {k: dataclasses.replace(v, seed=seed) for k, v in specs.items()}
    for s in program.neural:
        params = dict(s.params)
        if seed is not None:
            params.setdefault("seed", seed)
        base = specs.get(s.net) or NetSpec()
        specs[s.net] = base.updated(params) if params else base
    return specs


def _row_probs(program: Program, gp: GroundProgram, args) -> list[np.ndarray]:
    """Component probabilities, with neural ADRs evaluated on one test row."""
    probs = component_probs(gp)
    if not any(c.kind == "neural" for c in gp.components):
        return probs
    feats = load_features(program, "test")
    n = next(iter(feats.values())).shape[0]
    if not 0 <= args.row < n:
        raise NpaspError(f"--row {args.row} outside the {n} test rows")
    nets = {}
    specs = _specs(program, args.seed)
    for j, c in enumerate(gp.components):
        if c.kind != "neural":
            continue
        X = feats[c.data][args.row:args.row + 1]
        net = nets.get(c.net)
        if net is None:
            net = nets[c.net] = specs.get(c.net, NetSpec()).build(
                X.shape[1], c.arity, base_dir(program))
        probs[j] = net.predict(X)[0]
    return probs


def _engine(gp: GroundProgram, logic: str, args) -> Engine:
    eng = Engine(gp, logic, method="oracle" if args.method == "oracle" else None,
                 max_choices=args.max_choices, max_atoms=args.max_atoms, threads=args.threads)
    eng.all_models()
    return eng


def _dump_models(eng: Engine, probs, out) -> None:
    gp = eng.gp
    P = eng.theta_probs(probs)
    for i in range(eng.size):
        out.write(f"% choice {i} {eng.describe(i)} p = {P[i]:.6f}\n")
        for m in eng.models(i):
            out.write("  " + m.render(gp.name) + "\n")


def cmd_query(args, out) -> None:
    program = _with_semantics(load_program(args.program), args.sem, args.prob)
    gp = ground(program)
    if args.dump_ground:
        out.write(gp.to_source())
    logic, prob = program.semantics
    eng = _engine(gp, logic, args)
    probs = _row_probs(program, gp, args)
    if args.dump_models:
        _dump_models(eng, probs, out)
    results = [eng.answer(q, prob, probs) for q in gp.queries]
    if args.json:
        out.write(json.dumps([r.to_json() for r in results], indent=2) + "\n")
    else:
        for r in results:
            out.write(r.text() + "\n")


def cmd_models(args, out) -> None:
    program = _with_semantics(load_program(args.program), args.sem, None)
    gp = ground(program)
    eng = _engine(gp, program.semantics[0], args)
    _dump_models(eng, _row_probs(program, gp, args), out)


def cmd_ground(args, out) -> None:
    program = load_program(args.program)
    out.write(ground(program).to_source())


def _param_lines(program: Program, learner: Learner) -> list[tuple[str, float]]:
    rows = []
    for src, p in learner.params.items():
        stmt = program.statements[src]
        if not isinstance(stmt, ADR):
            continue
        for e, v in zip(stmt.entries, p):
            rows.append((f"p_{e.atom}", float(v)))
    return rows


def cmd_learn(args, out) -> None:
    program = _with_semantics(load_program(args.program), args.sem, None)
    gp = ground(program)
    if args.dump_ground:
        out.write(gp.to_source())
    d = program.directives.learn
    if args.data:
        obs_path = args.data
    elif d is not None:
        obs_path = resolve(program, d.source)
    else:
        raise NpaspError("no #learn directive and no --data file given")
    params = dict(d.params) if d is not None else {}
    config = LearnConfig.from_params(params, alg=args.alg, lr=args.lr, niters=args.niters,
                                     batch=args.batch, seed=args.seed)
    observations = load_observations(obs_path, gp)
    features = load_features(program, "train") if program.bindings else {}
    learner = Learner(gp, observations, features, _specs(program, args.seed),
                      base_dir=base_dir(program), logic=program.semantics[0],
                      max_choices=args.max_choices, threads=args.threads)
    state = learner.run(config)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as f:
            f.write(state.trace_csv())
    elif not args.json:
        out.write(state.trace_csv())
    saved = {}
    if args.save_weights:
        os.makedirs(args.save_weights, exist_ok=True)
        for name, net in learner.nets.items():
            path = os.path.join(args.save_weights, f"{name}.npw")
            save_weights(path, net.params)
            saved[name] = path
    params_out = _param_lines(program, learner)
    if args.json:
        out.write(json.dumps({
            "params": {k: v for k, v in params_out},
            "trace": [{"epoch": e, "loglik": ll, "seconds": s} for e, ll, s in state.trace],
            "converged": state.converged,
            "weights": saved,
        }, indent=2) + "\n")
        return
    for k, v in params_out:
        out.write(f"{k} = {v:.6f}\n")
    for name, path in saved.items():
        out.write(f"weights {name} -> {path}\n")


COMMANDS = {"query": cmd_query, "learn": cmd_learn, "ground": cmd_ground, "models": cmd_models}


def _report(err: NpaspError, path: str, stream) -> None:
    if isinstance(err, ValidationError):
        for d in err.diagnostics:
            stream.write(f"{path}:{d}\n")
    else:
        stream.write(f"{path}:{err}\n" if err.pos is not None and err.pos.line
                     else f"{path}: {err}\n")


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    args = _parser().parse_args(argv)
    try:
        COMMANDS[args.command](args, out)
    except CapExceeded as ex:
        _report(ex, args.program, err)
        return 2
    except NpaspError as ex:
        _report(ex, args.program, err)
        return 1
    except OSError as ex:
        err.write(f"{args.program}: {ex.strerror or ex}: {ex.filename or ''}\n")
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
