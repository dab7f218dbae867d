"""Maximum-likelihood learning of ADR probabilities and classifier weights.

All quantities come from one table: for total choice ``theta`` and
observation ``O``, ``R[O, theta] = N(theta |= O) / N(theta)`` under the
max-ent stable semantics.  For a component ``X`` with outcome ``v`` let
``S[v] = sum over theta choosing v of P_rest(theta) * R[O, theta]`` where
``P_rest`` multiplies the probabilities of every *other* component.  Then

* ``P(O) = sum_v p_v S[v]`` and ``P(X = v, O) = p_v S[v]``;
* the fixed-point update is ``p_v <- mean_O p_v S[v] / P(O)``;
* with ``g = S / P(O)``, the NeurASP partial is ``2 g_v - sum(g)`` and the
  Lagrangian partial is ``g_v - mean(g)``.

Ground instances of one learnable ADR share a single parameter vector, so
their statistics are pooled.  Network weights receive the chain rule through
the classifier's backward pass; because softmax rows sum to one, feeding the
Lagrangian partials yields the exact gradient of the log-likelihood.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import LearningError
from .grounder import GroundLiteral, GroundProgram
from .inference import DEFAULT_MAX_CHOICES, Engine
from .neural import Classifier, NetSpec, make_optimizer

ALGS = ("fixpoint", "lagrange", "neurasp")
PROB_FLOOR = 1e-6

Observation = tuple[GroundLiteral, ...]


@dataclass
class LearnConfig:
    alg: str = "lagrange"
    lr: float = 0.1
    niters: int = 100
    batch: Optional[int] = None
    tol: float = 1e-9
    seed: int = 0

    def check(self, has_neural: bool) -> None:
        if self.alg not in ALGS:
            raise LearningError(f"unknown learning algorithm {self.alg!r}; expected one of {ALGS}")
        if self.lr < 0:
            raise LearningError("learning rate must be nonnegative")
        if self.niters < 0:
            raise LearningError("niters must be nonnegative")
        if self.batch is not None and self.batch < 1:
            raise LearningError("batch size must be at least 1")
        if self.alg == "fixpoint" and has_neural:
            raise LearningError("the fixpoint rule cannot train neural ADRs; use lagrange or neurasp")

    @classmethod
    def from_params(cls, params: dict, **overrides) -> "LearnConfig":
        casts = {"alg": str, "lr": float, "niters": int, "batch": int, "tol": float, "seed": int}
        cfg = cls()
        merged = {**dict(params), **{k: v for k, v in overrides.items() if v is not None}}
        for k, v in merged.items():
            if k not in casts:
                raise LearningError(f"unknown #learn parameter '{k}'")
            try:
                setattr(cfg, k, casts[k](v))
            except (TypeError, ValueError):
                raise LearningError(f"bad value {v!r} for #learn parameter '{k}'") from None
        return cfg


@dataclass
class GradientReport:
    loglik: float
    components: dict[int, np.ndarray]       # component -> dL/dp summed over the batch
    groups: dict[int, np.ndarray]           # tied ADR source -> pooled dL/dp
    networks: dict[str, list[np.ndarray]]   # network -> dL/dw
    upstream: dict[int, np.ndarray] = field(default_factory=dict)  # component -> (B, k)


@dataclass
class LearnState:
    params: dict[int, np.ndarray]
    nets: dict[str, Classifier]
    trace: list[tuple[int, float, float]] = field(default_factory=list)
    converged: bool = False

    def trace_csv(self) -> str:
        lines = ["epoch,loglik,seconds"]
        lines += [f"{e},{ll:.10g},{s:.3f}" for e, ll, s in self.trace]
        return "\n".join(lines) + "\n"


def project(p: np.ndarray) -> np.ndarray:
    """Clamp to ``[1e-6, 1]`` and rescale to sum 1."""
    q = np.clip(p, PROB_FLOOR, 1.0)
    return q / q.sum()


def partials(g: np.ndarray, alg: str) -> np.ndarray:
    if alg == "neurasp":
        return 2 * g - g.sum(axis=-1, keepdims=True)
    return g - g.mean(axis=-1, keepdims=True)


class Learner:
    """Likelihood statistics and parameter updates for one ground program and dataset."""

    def __init__(self, gp: GroundProgram, observations: Sequence[Observation],
                 features: Optional[dict] = None, specs: Optional[dict[str, NetSpec]] = None,
                 nets: Optional[dict[str, Classifier]] = None, base_dir: str = ".",
                 logic: str = "stable", max_choices: int = DEFAULT_MAX_CHOICES,
                 threads: int = 1):
        if logic != "stable":
            raise LearningError(f"learning is only defined under the stable semantics, not {logic}")
        self.gp = gp
        comps = gp.components
        if any(c.kind == "credal" for c in comps):
            raise LearningError("credal facts cannot be learned; learning uses max-ent semantics")
        self.engine = Engine(gp, "stable", max_choices=max_choices, threads=threads)
        self.engine.all_models()
        self.C = self.engine.C
        self.size = self.engine.size

        self.groups: dict[int, list[int]] = {}
        for j, c in enumerate(comps):
            if c.kind == "adr" and c.learnable:
                self.groups.setdefault(c.source, []).append(j)
        self.params = {s: np.asarray(comps[js[0]].probs, dtype=float).copy()
                       for s, js in self.groups.items()}
        self.group_of = {j: s for s, js in self.groups.items() for j in js}

        self.neural: dict[str, list[int]] = {}
        for j, c in enumerate(comps):
            if c.kind == "neural":
                self.neural.setdefault(c.net, []).append(j)
        self.features = features or {}
        self.nets: dict[str, Classifier] = dict(nets or {})
        self.specs = specs = dict(specs or {})
        for name, js in self.neural.items():
            for j in js:
                if comps[j].data not in self.features:
                    pred, const = comps[j].data
                    raise LearningError(f"no features for data instance {pred}({const})")
            if name in self.nets:
                continue
            spec = specs.get(name, NetSpec())
            dims = {self.features[comps[j].data].shape[1] for j in js}
            arity = {comps[j].arity for j in js}
            if len(dims) != 1 or len(arity) != 1:
                raise LearningError(f"network '{name}' is shared by instances with different "
                                    f"feature or outcome dimensions")
            self.nets[name] = spec.build(dims.pop(), arity.pop(), base_dir)
        self.trainable = {name: any(comps[j].learnable for j in js)
                          for name, js in self.neural.items()}

        self.observations = [tuple(o) for o in observations]
        n_rows = {m.shape[0] for m in self.features.values()}
        if self.neural and n_rows and n_rows != {len(self.observations)}:
            raise LearningError(f"{len(self.observations)} observations but feature matrices "
                                f"have {sorted(n_rows)} rows")
        uniq: dict[Observation, int] = {}
        self.obs_index = np.array([uniq.setdefault(o, len(uniq)) for o in self.observations],
                                  dtype=np.int64)
        N = self.engine.n_models
        self.R = np.stack([self.engine.count(o) / N for o in uniq]) if uniq \
            else np.zeros((0, self.size))
        self.onehot = [np.eye(c.arity)[self.C[:, j]] for j, c in enumerate(comps)]

    @property
    def n(self) -> int:
        return len(self.observations)

    # probabilities --------------------------------------------------------

    def component_probs(self, rows: np.ndarray, cache: bool = False) -> list[np.ndarray]:
        """Per component a (B, k) matrix of outcome probabilities for the given rows."""
        comps = self.gp.components
        B = len(rows)
        out: list[Optional[np.ndarray]] = [None] * len(comps)
        for j, c in enumerate(comps):
            if c.kind == "neural":
                continue
            p = self.params[self.group_of[j]] if j in self.group_of else np.asarray(c.probs)
            out[j] = np.broadcast_to(p, (B, c.arity))
        for name, js in self.neural.items():
            X = np.concatenate([self.features[comps[j].data][rows] for j in js])
            net = self.nets[name]
            P = net.forward(X) if cache and self.trainable[name] else net.predict(X)
            for t, j in enumerate(js):
                out[j] = P[t * B:(t + 1) * B]
        return out

    def statistics(self, rows: np.ndarray, probs: list[np.ndarray]):
        """``P(O)`` per row and ``S_j`` per component (see module docstring)."""
        F = [p[:, self.C[:, j]] for j, p in enumerate(probs)]
        Rb = self.R[self.obs_index[rows]]
        m = len(F)
        prefix = [np.ones_like(Rb)]
        for j in range(m):
            prefix.append(prefix[-1] * F[j])
        Ptheta = prefix[-1]
        PO = (Ptheta * Rb).sum(axis=1)
        bad = np.flatnonzero(PO <= 0)
        if bad.size:
            r = int(rows[bad[0]])
            obs = ", ".join(map(str, self.observations[r])) or "(empty)"
            raise LearningError(f"observation {r + 1} ({obs}) has probability zero")
        S = [None] * m
        suffix = np.ones_like(Rb)
        for j in range(m - 1, -1, -1):
            S[j] = (prefix[j] * suffix * Rb) @ self.onehot[j]
            suffix = suffix * F[j]
        return PO, S

    def loglik(self, rows: Optional[np.ndarray] = None) -> float:
        rows = np.arange(self.n) if rows is None else rows
        if len(rows) == 0:
            return 0.0
        PO, _ = self.statistics(rows, self.component_probs(rows))
        return math.fsum(np.log(PO))

    # statistics used by the update rules ----------------------------------

    def joint_marginals(self, rows=None) -> tuple[np.ndarray, list[np.ndarray]]:
        """``P(O)`` per row and ``P(X_j = v, O)`` per component as (B, k) matrices."""
        rows = np.arange(self.n) if rows is None else rows
        probs = self.component_probs(rows)
        PO, S = self.statistics(rows, probs)
        return PO, [p * s for p, s in zip(probs, S)]

    def fixpoint_update(self, rows=None) -> dict[int, np.ndarray]:
        """New tied parameters ``mean over rows and instances of P(X=v, O) / P(O)``."""
        PO, joint = self.joint_marginals(rows)
        out = {}
        for s, js in self.groups.items():
            ratios = [joint[j] / PO[:, None] for j in js]
            out[s] = np.mean(np.concatenate(ratios), axis=0)
        return out

    def gradients(self, rows=None, alg: str = "lagrange") -> GradientReport:
        rows = np.arange(self.n) if rows is None else rows
        probs = self.component_probs(rows, cache=True)
        PO, S = self.statistics(rows, probs)
        up = {j: partials(S[j] / PO[:, None], alg) for j in range(len(S))}
        comps = {j: u.sum(axis=0) for j, u in up.items()}
        groups = {s: sum(comps[j] for j in js) for s, js in self.groups.items()}
        nets = {}
        for name, js in self.neural.items():
            if not self.trainable[name]:
                continue
            dP = np.concatenate([up[j] for j in js])
            nets[name] = self.nets[name].backward(dP)
        return GradientReport(math.fsum(np.log(PO)), comps, groups, nets, up)

    # training loop ---------------------------------------------------------

    def run(self, config: LearnConfig, optimizers: Optional[dict] = None,
            clock=time.perf_counter) -> LearnState:
        config.check(bool(self.neural))
        rng = np.random.default_rng(config.seed)
        opts = optimizers or {}
        for name in self.nets:
            if name not in opts:
                spec = self._spec(name)
                opts[name] = make_optimizer(spec.optim, spec.lr)
        state = LearnState(self.params, self.nets)
        start = clock()
        state.trace.append((0, self.loglik(), 0.0))
        batch = config.batch or max(self.n, 1)
        for epoch in range(1, config.niters + 1):
            order = np.arange(self.n)
            if batch < self.n:
                order = rng.permutation(self.n)
            delta = 0.0
            for k in range(0, self.n, batch):
                rows = order[k:k + batch]
                delta = max(delta, self.step(rows, config, opts))
            state.trace.append((epoch, self.loglik(), clock() - start))
            if config.alg == "fixpoint" and delta < config.tol:
                state.converged = True
                break
        return state

    def _spec(self, name: str) -> NetSpec:
        return self.specs.get(name) or NetSpec()

    def step(self, rows: np.ndarray, config: LearnConfig, opts: dict) -> float:
        """One update on ``rows``; returns the largest ADR parameter change."""
        if config.alg == "fixpoint":
            new = self.fixpoint_update(rows)
            delta = max((float(np.abs(new[s] - self.params[s]).max()) for s in new), default=0.0)
            for s, p in new.items():
                self.params[s][:] = p
            return delta
        rep = self.gradients(rows, config.alg)
        B = len(rows)
        delta = 0.0
        for s, g in rep.groups.items():
            new = project(self.params[s] + config.lr * g / B)
            delta = max(delta, float(np.abs(new - self.params[s]).max()))
            self.params[s][:] = new
        for name, grads in rep.networks.items():
            opts[name].step(self.nets[name].params, [-g / B for g in grads])
        return delta


def learn(gp: GroundProgram, observations: Sequence[Observation], config: LearnConfig,
          features=None, specs=None, base_dir: str = ".", **kw) -> LearnState:
    return Learner(gp, observations, features, specs, base_dir=base_dir, **kw).run(config)


# single-component views used by tests and documentation ------------------------


def joint_marginal(gp: GroundProgram, component: int, outcome: int, obs: Observation) -> float:
    """``P(X = x, O)`` for one component outcome under the program's current probabilities."""
    _, joint = Learner(gp, [obs]).joint_marginals()
    return float(joint[component][0, outcome])


def fixpoint_step(gp: GroundProgram, dataset: Sequence[Observation],
                  params: Optional[dict[int, np.ndarray]] = None) -> dict[int, np.ndarray]:
    lr = Learner(gp, dataset)
    if params is not None:
        for s, p in params.items():
            lr.params[s][:] = p
    return lr.fixpoint_update()


def _component_partials(gp, component, dataset, alg) -> np.ndarray:
    return Learner(gp, dataset).gradients(alg=alg).components[component]


def grad_neurasp(gp: GroundProgram, component: int, dataset: Sequence[Observation]) -> np.ndarray:
    return _component_partials(gp, component, dataset, "neurasp")


def grad_lagrange(gp: GroundProgram, component: int, dataset: Sequence[Observation]) -> np.ndarray:
    return _component_partials(gp, component, dataset, "lagrange")


def grad_network(report: GradientReport, classifier: Classifier, component_rows: np.ndarray
                 ) -> list[np.ndarray]:
    """Chain rule through ``classifier`` given upstream ``dL/dp`` rows (after a cached forward)."""
    return classifier.backward(component_rows)
