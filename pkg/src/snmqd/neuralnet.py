"""Two-hidden-layer ReLU network with a three-unit head, trained with Adam.

The head is ordered ``(upper, point, lower)``. That order is internal: every
public output is converted to an :class:`~snmqd.metrics.IntervalBatch`.

Checkpoint layout (``.npz``, written by :func:`save_mlp`)::

    format_version  int, currently 1
    arch            int array [n_inputs, hidden_1, hidden_2, 3]
    head_order      str array ["upper", "point", "lower"]
    W1, b1, W2, b2, W3, b3
                    float64 arrays, C (row-major) order, W_k of shape
                    (fan_in, fan_out)
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .losses import LossParams, compute_loss, LOSS_KINDS
from .metrics import IntervalBatch, integrity_violations, mpiw, mse, picp

log = logging.getLogger(__name__)

HEAD_ORDER = ("upper", "point", "lower")
CHECKPOINT_VERSION = 1
_PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")


class TrainingFailure(RuntimeError):
    """A training run diverged or ended in a state counted as failed."""


class Mlp:
    """Fully connected ``d -> h1 -> h2 -> 3`` network."""

    def __init__(self, params):
        missing = [k for k in _PARAM_NAMES if k not in params]
        if missing:
            raise ValueError(f"missing parameters {missing}")
        self.params = {k: np.array(params[k], dtype=float) for k in _PARAM_NAMES}
        d, h1 = self.params["W1"].shape
        h1b, h2 = self.params["W2"].shape
        h2b, out = self.params["W3"].shape
        if h1 != h1b or h2 != h2b or out != 3:
            raise ValueError("inconsistent layer shapes")
        if (self.params["b1"].shape, self.params["b2"].shape, self.params["b3"].shape) != ((h1,), (h2,), (3,)):
            raise ValueError("inconsistent bias shapes")
        self._arch = (d, h1, h2, 3)

    @property
    def arch(self):
        return self._arch

    @property
    def n_inputs(self):
        return self._arch[0]

    @property
    def n_params(self):
        return sum(v.size for v in self.params.values())

    def copy(self):
        return Mlp({k: v.copy() for k, v in self.params.items()})

    def forward_raw(self, X):
        """Head outputs of shape (n, 3) and the activations needed by :meth:`backward`."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.n_inputs:
            raise ValueError(f"expected {self.n_inputs} input features, got {X.shape[1]}")
        p = self.params
        z1 = X @ p["W1"] + p["b1"]
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ p["W2"] + p["b2"]
        a2 = np.maximum(z2, 0.0)
        out = a2 @ p["W3"] + p["b3"]
        return out, (X, z1, a1, z2, a2)

    def forward(self, X):
        out, _ = self.forward_raw(X)
        return IntervalBatch(lower=out[:, 2], point=out[:, 1], upper=out[:, 0])

    predict = forward

    def backward(self, cache, d_lower, d_point, d_upper):
        """Parameter gradients given upstream gradients on each output channel."""
        X, z1, a1, z2, a2 = cache
        n = X.shape[0]
        d_lower, d_point, d_upper = (np.asarray(g, dtype=float).reshape(-1) for g in (d_lower, d_point, d_upper))
        if not d_lower.size == d_point.size == d_upper.size == n:
            raise ValueError("upstream gradients must match the batch size")
        d_out = np.stack([d_upper, d_point, d_lower], axis=1)
        p = self.params
        grads = {
            "W3": a2.T @ d_out,
            "b3": d_out.sum(axis=0),
        }
        d_a2 = d_out @ p["W3"].T
        d_z2 = d_a2 * (z2 > 0)
        grads["W2"] = a1.T @ d_z2
        grads["b2"] = d_z2.sum(axis=0)
        d_a1 = d_z2 @ p["W2"].T
        d_z1 = d_a1 * (z1 > 0)
        grads["W1"] = X.T @ d_z1
        grads["b1"] = d_z1.sum(axis=0)
        return grads


def init_mlp(n_inputs, hidden=(50, 50), seed=0, head_spread=2.0):
    """He-normal hidden layers; small output weights with head biases ``(+spread, 0, -spread)``.

    The bias spread keeps the initial intervals wide and uncrossed on
    standardised data.
    """
    if n_inputs < 1 or len(hidden) != 2 or min(hidden) < 1:
        raise ValueError("architecture needs n_inputs >= 1 and two positive hidden widths")
    rng = np.random.default_rng(seed)
    h1, h2 = hidden
    params = {
        "W1": rng.normal(0.0, np.sqrt(2.0 / n_inputs), (n_inputs, h1)),
        "b1": np.zeros(h1),
        "W2": rng.normal(0.0, np.sqrt(2.0 / h1), (h1, h2)),
        "b2": np.zeros(h2),
        "W3": rng.normal(0.0, 0.1 / np.sqrt(h2), (h2, 3)),
        "b3": np.array([head_spread, 0.0, -head_spread]),
    }
    return Mlp(params)


def save_mlp(model: Mlp, path):
    np.savez(
        path,
        format_version=np.array(CHECKPOINT_VERSION),
        arch=np.array(model.arch),
        head_order=np.array(HEAD_ORDER),
        **model.params,
    )


def load_mlp(path):
    with np.load(path, allow_pickle=False) as f:
        version = int(f["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        if tuple(str(s) for s in f["head_order"]) != HEAD_ORDER:
            raise ValueError("checkpoint head order does not match")
        model = Mlp({k: f[k] for k in _PARAM_NAMES})
        if tuple(int(v) for v in f["arch"]) != model.arch:
            raise ValueError("checkpoint arch record disagrees with parameter shapes")
    return model


class Adam:
    """Adaptive moment estimation over a dict of arrays, updated in place."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads, lr):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            self.params[k] -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    decay_rate: float = 0.995
    epochs: int = 300
    batch_size: int = 100
    seed: int = 0
    loss: str = "qd_plus"
    loss_params: LossParams = field(default_factory=LossParams)
    hidden: tuple = (50, 50)
    # failure criteria, see ``diagnose``
    min_train_picp: float = 0.5
    max_crossing_fraction: float = 0.01

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.decay_rate > 0):
            raise ValueError("learning and decay rates must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be at least 1")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.loss!r}")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class TrainResult:
    model: Mlp
    trace: dict
    failure: str = None

    @property
    def failed(self):
        return self.failure is not None


def diagnose(model: Mlp, X, y, cfg: TrainConfig):
    """Failure reason for a finished model, or ``None``.

    Interval models fail when training PICP falls below ``min_train_picp`` or
    more than ``max_crossing_fraction`` of training outputs break the ordering
    (crossed bounds, or for QD+ a point outside its interval). Models trained
    on squared error alone only fail on non-finite output.
    """
    pred = model.forward(X)
    if not (np.all(np.isfinite(pred.lower)) and np.all(np.isfinite(pred.upper)) and np.all(np.isfinite(pred.point))):
        return "non-finite output"
    if cfg.loss == "mse":
        return None
    cov = picp(pred, y)
    if cov < cfg.min_train_picp:
        return f"training PICP {cov:.3f} below {cfg.min_train_picp}"
    crossings, outside = integrity_violations(pred)
    bad = crossings + (outside if cfg.loss == "qd_plus" else 0)
    if bad > cfg.max_crossing_fraction * len(pred):
        return f"{bad} of {len(pred)} training outputs violate the interval ordering"
    return None


def _summary(model, X, y):
    pred = model.forward(X)
    return picp(pred, y), mpiw(pred), mse(pred.point, y)


def train(model: Mlp, X, y, cfg: TrainConfig, X_val=None, y_val=None, loss_fn=None):
    """Mini-batch Adam with per-epoch learning-rate decay ``lr * decay_rate**epoch``.

    The model is updated in place and returned inside a :class:`TrainResult`.
    ``loss_fn(kind, batch, y, params)`` replaces :func:`~snmqd.losses.compute_loss`
    when given.

    Raises
    ------
    TrainingFailure
        As soon as the loss becomes non-finite.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.size or y.size == 0:
        raise ValueError("inputs and targets must be non-empty and aligned")
    loss_fn = loss_fn or compute_loss
    rng = np.random.default_rng(cfg.seed + 7919)
    opt = Adam(model.params)
    n = y.size
    trace = {"loss": [], "val_picp": [], "val_mpiw": [], "val_mse": []}
    lr = cfg.learning_rate
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            out, cache = model.forward_raw(X[idx])
            batch = IntervalBatch(lower=out[:, 2], point=out[:, 1], upper=out[:, 0])
            res = loss_fn(cfg.loss, batch, y[idx], cfg.loss_params)
            if not np.isfinite(res.value):
                raise TrainingFailure(f"non-finite loss at epoch {epoch}")
            total += res.value * idx.size
            opt.step(model.backward(cache, *res.grads), lr)
        trace["loss"].append(total / n)
        if X_val is not None:
            vp, vw, vm = _summary(model, X_val, y_val)
            trace["val_picp"].append(vp)
            trace["val_mpiw"].append(vw)
            trace["val_mse"].append(vm)
        lr *= cfg.decay_rate
    return TrainResult(model, trace, diagnose(model, X, y, cfg))


def fit_mlp(X, y, cfg: TrainConfig, X_val=None, y_val=None, loss_fn=None):
    """Initialise from ``cfg.seed`` and train."""
    X = np.asarray(X, dtype=float)
    n_in = 1 if X.ndim == 1 else X.shape[1]
    model = init_mlp(n_in, cfg.hidden, cfg.seed)
    return train(model, X, y, cfg, X_val, y_val, loss_fn)
