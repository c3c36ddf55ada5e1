"""Quality measures for prediction intervals and point estimates.

Intervals are passed either as :class:`IntervalPrediction` objects or as three
aligned arrays ``(lower, point, upper)``; every function here accepts both.
"""

from dataclasses import asdict, dataclass

import numpy as np

__all__ = [
    "IntervalPrediction",
    "IntervalBatch",
    "EvalReport",
    "coverage_indicator",
    "picp",
    "mpiw",
    "nmpiw",
    "mse",
    "integrity_violations",
    "evaluate",
]


@dataclass(frozen=True)
class IntervalPrediction:
    """One ``(lower, point, upper)`` triple. Ordering is checked, not enforced."""

    lower: float
    point: float
    upper: float

    @property
    def ordered(self):
        return self.lower <= self.point <= self.upper


@dataclass(frozen=True)
class IntervalBatch:
    """Column-oriented batch of interval predictions."""

    lower: np.ndarray
    point: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo, pt, up = (np.asarray(v, dtype=float).reshape(-1) for v in (self.lower, self.point, self.upper))
        if not lo.shape == pt.shape == up.shape:
            raise ValueError("lower, point and upper must have the same length")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "point", pt)
        object.__setattr__(self, "upper", up)

    def __len__(self):
        return self.lower.size

    def __getitem__(self, idx):
        if np.isscalar(idx) or isinstance(idx, (int, np.integer)):
            return IntervalPrediction(float(self.lower[idx]), float(self.point[idx]), float(self.upper[idx]))
        return IntervalBatch(self.lower[idx], self.point[idx], self.upper[idx])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def from_predictions(cls, preds):
        preds = list(preds)
        return cls(
            np.array([p.lower for p in preds], dtype=float),
            np.array([p.point for p in preds], dtype=float),
            np.array([p.upper for p in preds], dtype=float),
        )

    def affine(self, scale, shift):
        """Map every column through ``x * scale + shift``."""
        return IntervalBatch(self.lower * scale + shift, self.point * scale + shift, self.upper * scale + shift)


def _as_batch(preds):
    if isinstance(preds, IntervalBatch):
        return preds
    if isinstance(preds, IntervalPrediction):
        return IntervalBatch.from_predictions([preds])
    return IntervalBatch.from_predictions(preds)


def _nonempty(n):
    if n == 0:
        raise ValueError("metrics need at least one sample")


def coverage_indicator(pred, y):
    """1 where ``lower <= y <= upper`` (both ends inclusive), else 0."""
    if isinstance(pred, IntervalPrediction):
        return int(pred.lower <= y <= pred.upper)
    b = _as_batch(pred)
    y = np.asarray(y, dtype=float)
    return ((b.lower <= y) & (y <= b.upper)).astype(int)


def picp(preds, ys):
    """Prediction interval coverage probability ``c / n``."""
    b = _as_batch(preds)
    ys = np.asarray(ys, dtype=float).reshape(-1)
    if ys.size != len(b):
        raise ValueError("predictions and targets differ in length")
    _nonempty(ys.size)
    return float(coverage_indicator(b, ys).sum() / ys.size)


def mpiw(preds):
    """Mean interval width. Crossed intervals contribute negative widths."""
    b = _as_batch(preds)
    _nonempty(len(b))
    return float(np.mean(b.upper - b.lower))


def nmpiw(mpiw_value, target_range):
    if not target_range > 0:
        raise ValueError(f"target range must be positive, got {target_range}")
    return float(mpiw_value / target_range)


def mse(points, ys):
    points = np.asarray(points, dtype=float).reshape(-1)
    ys = np.asarray(ys, dtype=float).reshape(-1)
    if points.size != ys.size:
        raise ValueError("points and targets differ in length")
    _nonempty(points.size)
    return float(np.mean((points - ys) ** 2))


def integrity_violations(preds):
    """Count ``(crossings, point_outside)``.

    A crossing is ``lower > upper``. Among the remaining intervals a point
    estimate below ``lower`` or above ``upper`` counts as outside.
    """
    b = _as_batch(preds)
    crossed = b.lower > b.upper
    outside = ~crossed & ((b.point < b.lower) | (b.point > b.upper))
    return int(crossed.sum()), int(outside.sum())


@dataclass
class EvalReport:
    picp: float
    mpiw: float
    nmpiw: float
    mse: float
    n: int
    target_range: float
    crossings: int = 0
    point_outside: int = 0

    @property
    def covered(self):
        return int(round(self.picp * self.n))

    @property
    def integrity_violation_count(self):
        return self.crossings + self.point_outside

    def to_dict(self):
        return asdict(self)


def evaluate(preds, ys, target_range=None):
    """Bundle every measure into an :class:`EvalReport`.

    ``target_range`` defaults to ``max(ys) - min(ys)``.
    """
    b = _as_batch(preds)
    ys = np.asarray(ys, dtype=float).reshape(-1)
    if target_range is None:
        target_range = float(ys.max() - ys.min())
    width = mpiw(b)
    crossings, outside = integrity_violations(b)
    return EvalReport(
        picp=picp(b, ys),
        mpiw=width,
        nmpiw=nmpiw(width, target_range),
        mse=mse(b.point, ys),
        n=int(ys.size),
        target_range=float(target_range),
        crossings=crossings,
        point_outside=outside,
    )
