"""Small dense classifiers for neural ADRs, feature-matrix ingestion and weight files."""
from __future__ import annotations

import csv
import json
import os
import struct
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, LearningError

ARCHS = ("softmax-linear", "mlp")
_MAGIC = b"NPW1"


def load_matrix(path: str | os.PathLike) -> np.ndarray:
    """Read a CSV of reals; a first line with any non-numeric cell is a header and is skipped.

    An empty file yields a ``(0, 0)`` matrix.
    """
    with open(path, newline="", encoding="utf-8") as f:
        rows = [r for r in csv.reader(f) if r and any(c.strip() for c in r)]
    if not rows:
        return np.zeros((0, 0))
    start = 0
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        start = 1
    data = []
    width = None
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DataError(f"{path}: line {lineno} has {len(row)} cells, expected {width}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise DataError(f"{path}: line {lineno} has a non-numeric cell") from None
        if not all(np.isfinite(vals)):
            raise DataError(f"{path}: line {lineno} has a non-finite value")
        data.append(vals)
    if not data:
        return np.zeros((0, len(rows[0])))
    return np.asarray(data, dtype=float)


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class Classifier:
    """Softmax-linear or one-hidden-layer ReLU network producing class distributions."""

    def __init__(self, arch: str, n_in: int, n_out: int, hidden: int = 16, seed: int = 0):
        if arch not in ARCHS:
            raise ValueError(f"unknown architecture {arch!r}; expected one of {ARCHS}")
        if n_out < 2:
            raise ValueError("a classifier needs at least two outputs")
        self.arch, self.n_in, self.n_out, self.hidden = arch, n_in, n_out, hidden
        rng = np.random.default_rng(seed)
        if arch == "softmax-linear":
            self.params = [glorot(rng, n_in, n_out), np.zeros(n_out)]
        else:
            self.params = [glorot(rng, n_in, hidden), np.zeros(hidden),
                           glorot(rng, hidden, n_out), np.zeros(n_out)]
        self._cache = None

    def _run(self, X: np.ndarray):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_in:
            raise DataError(f"classifier expects {self.n_in} features, got shape {X.shape}")
        if self.arch == "softmax-linear":
            W, b = self.params
            return softmax(X @ W + b), (X,)
        W1, b1, W2, b2 = self.params
        pre = X @ W1 + b1
        H = np.maximum(pre, 0.0)
        return softmax(H @ W2 + b2), (X, pre, H)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Forward pass without touching the backward cache."""
        return self._run(X)[0]

    def forward(self, X: np.ndarray) -> np.ndarray:
        P, acts = self._run(X)
        self._cache = (P, acts)
        return P

    def backward(self, dP: np.ndarray) -> list[np.ndarray]:
        """Gradients of ``sum(dP * P)`` with respect to every parameter; consumes the cache."""
        if self._cache is None:
            raise LearningError("backward called without a matching forward pass")
        P, acts = self._cache
        self._cache = None
        dP = np.asarray(dP, dtype=float)
        if dP.shape != P.shape:
            raise LearningError(f"upstream gradient shape {dP.shape} != output shape {P.shape}")
        dz = P * (dP - (dP * P).sum(axis=1, keepdims=True))
        if self.arch == "softmax-linear":
            (X,) = acts
            return [X.T @ dz, dz.sum(axis=0)]
        X, pre, H = acts
        W2 = self.params[2]
        dH = dz @ W2.T
        dpre = dH * (pre > 0)
        return [X.T @ dpre, dpre.sum(axis=0), H.T @ dz, dz.sum(axis=0)]


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: list[np.ndarray], grads: Sequence[np.ndarray]):
        """Descent step; ``grads`` are gradients of the loss being minimized."""
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m: Optional[list[np.ndarray]] = None
        self.v: Optional[list[np.ndarray]] = None

    def step(self, params: list[np.ndarray], grads: Sequence[np.ndarray]):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1 ** self.t)
            vhat = v / (1 - b2 ** self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def make_optimizer(name: str, lr: float):
    if name == "sgd":
        return SGD(lr)
    if name == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {name!r}; expected sgd or adam")


def save_weights(path: str | os.PathLike, arrays: Sequence[np.ndarray]) -> None:
    """Binary layout: magic, uint32 count, then per array uint32 ndim, uint64 dims, float64 data."""
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(arrays)))
        for a in arrays:
            a = np.asarray(a, dtype="<f8")
            f.write(struct.pack("<I", a.ndim))
            f.write(struct.pack(f"<{a.ndim}Q", *a.shape))
            f.write(a.tobytes(order="C"))


def load_weights(path: str | os.PathLike) -> list[np.ndarray]:
    with open(path, "rb") as f:
        buf = f.read()
    if buf[:4] != _MAGIC:
        raise DataError(f"{path}: not a weight file")
    (n,) = struct.unpack_from("<I", buf, 4)
    off = 8
    out = []
    for _ in range(n):
        (ndim,) = struct.unpack_from("<I", buf, off)
        off += 4
        shape = struct.unpack_from(f"<{ndim}Q", buf, off)
        off += 8 * ndim
        size = int(np.prod(shape, dtype=np.int64))
        a = np.frombuffer(buf, dtype="<f8", count=size, offset=off).reshape(shape)
        off += 8 * size
        out.append(a.astype(float))
    if off != len(buf):
        raise DataError(f"{path}: trailing bytes after {n} arrays")
    return out


@dataclass
class NetSpec:
    arch: str = "softmax-linear"
    hidden: int = 16
    seed: int = 0
    optim: str = "adam"
    lr: float = 0.01
    weights: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def updated(self, params: dict) -> "NetSpec":
        known = {k: v for k, v in params.items() if k in ("arch", "hidden", "seed", "optim", "lr",
                                                          "weights")}
        new = NetSpec(**{**asdict(self), **known})
        new.extra = {**self.extra, **{k: v for k, v in params.items() if k not in known}}
        return new

    def build(self, n_in: int, n_out: int, base_dir: str = ".") -> Classifier:
        clf = Classifier(self.arch, n_in, n_out, self.hidden, self.seed)
        if self.weights:
            path = os.path.join(base_dir, self.weights)
            arrays = load_weights(path)
            if [a.shape for a in arrays] != [p.shape for p in clf.params]:
                raise DataError(f"{path}: weight shapes do not match network '{self.arch}' "
                                f"({n_in} inputs, {n_out} outputs)")
            clf.params = [a.copy() for a in arrays]
        return clf


def model_config_path(program_path: str) -> str:
    stem, _ = os.path.splitext(program_path)
    return stem + ".models.json"


def load_model_config(path: str | os.PathLike) -> dict[str, NetSpec]:
    """Sidecar JSON mapping network names to :class:`NetSpec` fields; missing file means defaults."""
    if not os.path.exists(path):
        return {}
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    out = {}
    for name, cfg in raw.items():
        out[name] = NetSpec().updated(cfg)
    return out
