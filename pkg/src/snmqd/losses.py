"""Training objectives on (lower, point, upper) outputs.

Each loss returns a :class:`LossOutput` holding the scalar value and its
partial derivatives with respect to every sample's lower, point and upper
output, ready to be fed into the network's backward pass.
"""

from dataclasses import dataclass, replace

import numpy as np

from .metrics import IntervalBatch

__all__ = [
    "LossParams",
    "LossOutput",
    "soft_k",
    "loss_mpiw_captured",
    "loss_picp",
    "loss_qd",
    "loss_mse",
    "loss_penalty",
    "loss_qd_plus",
    "compute_loss",
    "LOSS_KINDS",
]

LOSS_KINDS = ("qd_plus", "qd", "mse")


@dataclass(frozen=True)
class LossParams:
    """Hyper-parameters shared by the interval losses.

    ``lambda1`` trades width against coverage, ``lambda2`` weighs the squared
    error of the point estimate against both, ``xi`` scales the ordering
    penalty. ``lambda_qd`` is the coverage weight of the original QD loss.
    ``softness`` is the steepness of the sigmoid coverage indicator.
    ``scale_picp`` multiplies the QD+ coverage term by ``n / (alpha (1 - alpha))``
    as the original QD loss does.
    """

    alpha: float = 0.05
    lambda1: float = 0.99
    lambda2: float = 0.05
    xi: float = 10.0
    lambda_qd: float = 15.0
    softness: float = 160.0
    scale_picp: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        # the sensitivity grid deliberately visits the closed border values
        if not (0.0 <= self.lambda1 <= 1.0 and 0.0 <= self.lambda2 <= 1.0):
            raise ValueError("lambda1 and lambda2 must lie in [0, 1]")
        if self.xi < 0 or self.lambda_qd < 0:
            raise ValueError("xi and lambda_qd must be non-negative")
        if not self.softness > 0:
            raise ValueError("softness must be positive")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class LossOutput:
    value: float
    d_lower: np.ndarray
    d_point: np.ndarray
    d_upper: np.ndarray

    def __add__(self, other):
        return LossOutput(
            self.value + other.value,
            self.d_lower + other.d_lower,
            self.d_point + other.d_point,
            self.d_upper + other.d_upper,
        )

    def scaled(self, c):
        return LossOutput(c * self.value, c * self.d_lower, c * self.d_point, c * self.d_upper)

    @property
    def grads(self):
        return self.d_lower, self.d_point, self.d_upper


def _zero(n):
    return LossOutput(0.0, np.zeros(n), np.zeros(n), np.zeros(n))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _unpack(batch, y):
    if not isinstance(batch, IntervalBatch):
        batch = IntervalBatch(*batch)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != len(batch):
        raise ValueError("batch and targets differ in length")
    if y.size == 0:
        raise ValueError("empty batch")
    return batch, y


def soft_k(lower, y, upper, s):
    """Smooth coverage indicator ``sigmoid(s (y - lower)) * sigmoid(s (upper - y))``."""
    if not s > 0:
        raise ValueError("softness must be positive")
    lower, y, upper = (np.asarray(v, dtype=float) for v in (lower, y, upper))
    return _sigmoid(s * (y - lower)) * _sigmoid(s * (upper - y))


def loss_mpiw_captured(batch, y):
    """Mean width over the intervals that contain their target.

    Membership uses the hard indicator and is treated as a constant, so only
    the widths of captured samples receive gradient. Nothing captured gives 0.
    """
    b, y = _unpack(batch, y)
    k = ((b.lower <= y) & (y <= b.upper)).astype(float)
    c = k.sum()
    if c == 0:
        return _zero(y.size)
    value = float(np.sum((b.upper - b.lower) * k) / c)
    return LossOutput(value, -k / c, np.zeros(y.size), k / c)


def _soft_picp(b, y, s):
    za = _sigmoid(s * (y - b.lower))
    zb = _sigmoid(s * (b.upper - y))
    k = za * zb
    n = y.size
    d_lower = -s * za * (1.0 - za) * zb / n
    d_upper = s * zb * (1.0 - zb) * za / n
    return float(k.mean()), d_lower, d_upper


def loss_picp(batch, y, alpha=0.05, s=160.0):
    """``max(0, (1 - alpha) - PICP_soft)^2``."""
    b, y = _unpack(batch, y)
    cov, d_lo, d_up = _soft_picp(b, y, s)
    short = max(0.0, (1.0 - alpha) - cov)
    if short == 0.0:
        return _zero(y.size)
    return LossOutput(short * short, -2.0 * short * d_lo, np.zeros(y.size), -2.0 * short * d_up)


def loss_mse(batch, y):
    b, y = _unpack(batch, y)
    r = b.point - y
    n = y.size
    return LossOutput(float(np.mean(r * r)), np.zeros(n), 2.0 * r / n, np.zeros(n))


def loss_penalty(batch, y=None):
    """Ordering penalty ``mean(max(0, lower - point) + max(0, point - upper))``.

    Subgradient at the kink is 0.
    """
    if y is None:
        b = batch if isinstance(batch, IntervalBatch) else IntervalBatch(*batch)
    else:
        b, _ = _unpack(batch, y)
    n = len(b)
    if n == 0:
        raise ValueError("empty batch")
    lo_gap = b.lower - b.point
    up_gap = b.point - b.upper
    value = float(np.mean(np.maximum(0.0, lo_gap) + np.maximum(0.0, up_gap)))
    a = (lo_gap > 0).astype(float) / n
    c = (up_gap > 0).astype(float) / n
    return LossOutput(value, a, c - a, -c)


def loss_qd(batch, y, params: LossParams = LossParams()):
    """Original quality-driven loss ``L_MPIW + lambda n / (alpha (1 - alpha)) L_PICP``."""
    b, y = _unpack(batch, y)
    n = y.size
    width = loss_mpiw_captured(b, y)
    cover = loss_picp(b, y, params.alpha, params.softness)
    weight = params.lambda_qd * n / (params.alpha * (1.0 - params.alpha))
    return width + cover.scaled(weight)


def loss_qd_plus(batch, y, params: LossParams = LossParams()):
    """Extended loss with a squared-error term and an ordering penalty::

        (1 - l1)(1 - l2) L_MPIW + l1 (1 - l2) L_PICP + l2 L_MSE + xi L_P
    """
    b, y = _unpack(batch, y)
    n = y.size
    l1, l2 = params.lambda1, params.lambda2
    cover = loss_picp(b, y, params.alpha, params.softness)
    if params.scale_picp:
        cover = cover.scaled(n / (params.alpha * (1.0 - params.alpha)))
    return (
        loss_mpiw_captured(b, y).scaled((1.0 - l1) * (1.0 - l2))
        + cover.scaled(l1 * (1.0 - l2))
        + loss_mse(b, y).scaled(l2)
        + loss_penalty(b).scaled(params.xi)
    )


def compute_loss(kind, batch, y, params: LossParams = LossParams()):
    """Dispatch on ``kind`` in :data:`LOSS_KINDS`."""
    if kind == "qd_plus":
        return loss_qd_plus(batch, y, params)
    if kind == "qd":
        return loss_qd(batch, y, params)
    if kind == "mse":
        return loss_mse(batch, y)
    raise ValueError(f"unknown loss kind {kind!r}")
