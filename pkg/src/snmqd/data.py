"""Regression datasets: CSV loading, z-scoring, trial splits and a synthetic sinusoid."""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "Dataset",
    "DatasetFormatError",
    "Stats",
    "TrialSplit",
    "MANIFEST",
    "load_csv",
    "write_csv",
    "standardize",
    "to_full_scope",
    "make_trials",
    "make_validation_folds",
    "synth_sinusoid",
    "SINUSOID",
]


class DatasetFormatError(ValueError):
    """The input file is not a rectangular numeric table."""


# (rows, input dimension, source). The UCI files are not shipped with the package.
MANIFEST = {
    "boston": (506, 13, "https://archive.ics.uci.edu/ml/machine-learning-databases/housing/"),
    "concrete": (1030, 8, "https://archive.ics.uci.edu/ml/datasets/concrete+compressive+strength"),
    "energy": (768, 8, "https://archive.ics.uci.edu/ml/datasets/energy+efficiency"),
    "kin8nm": (8192, 8, "https://www.openml.org/d/189"),
    "naval": (11934, 16, "https://archive.ics.uci.edu/ml/datasets/condition+based+maintenance+of+naval+propulsion+plants"),
    "power": (9568, 4, "https://archive.ics.uci.edu/ml/datasets/combined+cycle+power+plant"),
    "protein": (45730, 9, "https://archive.ics.uci.edu/ml/datasets/Physicochemical+Properties+of+Protein+Tertiary+Structure"),
    "wine": (1599, 11, "https://archive.ics.uci.edu/ml/datasets/wine+quality"),
    "yacht": (308, 6, "https://archive.ics.uci.edu/ml/datasets/yacht+hydrodynamics"),
    "year": (515345, 90, "https://archive.ics.uci.edu/ml/datasets/yearpredictionmsd"),
}


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    name: str = ""
    source: str = ""

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.size:
            raise ValueError("X and y have different numbers of rows")
        if y.size < 1 or X.shape[1] < 1:
            raise ValueError("a dataset needs at least one row and one feature")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("dataset contains non-finite values")
        self.X = X
        self.y = y

    @property
    def n(self):
        return self.y.size

    @property
    def d(self):
        return self.X.shape[1]

    def subset(self, idx):
        return Dataset(self.X[idx], self.y[idx], self.name, self.source)


def load_csv(path, has_header=False, delimiter=",", expected=None):
    """Read a numeric table whose last column is the target.

    Parameters
    ----------
    path : str or Path
    has_header : bool
        Skip the first row.
    delimiter : str or None
        ``None`` splits on runs of whitespace (the raw UCI ``.data`` files).
    expected : str or tuple, optional
        A :data:`MANIFEST` key or an explicit ``(n, d)`` to validate against.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        if delimiter is None:
            rows = [line.split() for line in fh]
        else:
            rows = list(csv.reader(fh, delimiter=delimiter))
    start = 1 if has_header else 0
    values = []
    width = None
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not c.strip() for c in row):
            continue
        if width is None:
            width = len(row)
            if width < 2:
                raise DatasetFormatError(f"{path}:{lineno}: need at least one feature and a target column")
        elif len(row) != width:
            raise DatasetFormatError(f"{path}:{lineno}: expected {width} columns, found {len(row)}")
        parsed = []
        for col, cell in enumerate(row, start=1):
            try:
                v = float(cell)
            except ValueError:
                raise DatasetFormatError(f"{path}:{lineno}, column {col}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise DatasetFormatError(f"{path}:{lineno}, column {col}: non-finite value {cell!r}")
            parsed.append(v)
        values.append(parsed)
    if not values:
        raise DatasetFormatError(f"{path}: no data rows")
    table = np.array(values)
    name = expected if isinstance(expected, str) else path.stem
    ds = Dataset(table[:, :-1], table[:, -1], name=name, source=str(path))
    if expected is not None:
        n_exp, d_exp = MANIFEST[expected][:2] if isinstance(expected, str) else expected
        if (ds.n, ds.d) != (n_exp, d_exp):
            raise DatasetFormatError(f"{path}: shape {ds.n}x{ds.d} does not match expected {n_exp}x{d_exp}")
    return ds


def write_csv(ds: Dataset, path, header=False):
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{i}" for i in range(ds.d)] + ["y"])
        for xi, yi in zip(ds.X, ds.y):
            w.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])


@dataclass(frozen=True)
class Stats:
    """Per-column means and standard deviations of features and target."""

    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float

    @classmethod
    def of(cls, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.shape[0] < 2:
            raise ValueError("standardisation needs at least two rows")
        x_std = X.std(axis=0)
        flat = x_std <= 1e-12 * np.maximum(1.0, np.abs(X.mean(axis=0)))
        if np.any(flat):
            log.warning("constant feature columns %s: std clamped to 1", np.flatnonzero(flat).tolist())
            x_std = np.where(flat, 1.0, x_std)
        y_std = float(y.std())
        if y_std <= 0:
            log.warning("constant target: std clamped to 1")
            y_std = 1.0
        return cls(X.mean(axis=0), x_std, float(y.mean()), y_std)

    def transform_X(self, X):
        return (np.asarray(X, dtype=float) - self.x_mean) / self.x_std

    def transform_y(self, y):
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_std

    def inverse_X(self, Z):
        return np.asarray(Z, dtype=float) * self.x_std + self.x_mean

    def inverse_y(self, z):
        return np.asarray(z, dtype=float) * self.y_std + self.y_mean

    def to_dict(self):
        return {
            "x_mean": self.x_mean.tolist(),
            "x_std": self.x_std.tolist(),
            "y_mean": self.y_mean,
            "y_std": self.y_std,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["x_mean"], dtype=float), np.array(d["x_std"], dtype=float), float(d["y_mean"]), float(d["y_std"]))


def standardize(ds: Dataset, scope="train_stats", train_idx=None):
    """Z-score a dataset.

    ``scope="train_stats"`` takes the statistics from ``train_idx`` rows only,
    ``scope="full_stats"`` from every row. All rows are transformed either way.

    Returns
    -------
    (X, y, Stats)
    """
    if scope == "train_stats":
        if train_idx is None:
            raise ValueError("train_stats scope needs train_idx")
        stats = Stats.of(ds.X[train_idx], ds.y[train_idx])
    elif scope == "full_stats":
        stats = Stats.of(ds.X, ds.y)
    else:
        raise ValueError(f"unknown scope {scope!r}")
    return stats.transform_X(ds.X), stats.transform_y(ds.y), stats


def to_full_scope(values, train_stats: Stats, full_stats: Stats):
    """Re-express train-standardised target values in full-dataset standard units."""
    scale = train_stats.y_std / full_stats.y_std
    shift = (train_stats.y_mean - full_stats.y_mean) / full_stats.y_std
    if hasattr(values, "affine"):
        return values.affine(scale, shift)
    return np.asarray(values, dtype=float) * scale + shift


@dataclass(frozen=True)
class TrialSplit:
    trial: int
    train: np.ndarray
    test: np.ndarray
    seed: int


def _check_fraction(frac):
    if not 0.0 < frac < 1.0:
        raise ValueError("fraction must lie in (0, 1)")


def make_trials(ds_or_n, trial_count=20, test_fraction=0.1, master_seed=0):
    """Independent shuffled train/test partitions, one per trial."""
    n = ds_or_n if isinstance(ds_or_n, (int, np.integer)) else ds_or_n.n
    _check_fraction(test_fraction)
    if trial_count < 1:
        raise ValueError("trial_count must be at least 1")
    n_test = int(round(test_fraction * n))
    if n_test < 1 or n - n_test < 2:
        raise ValueError(f"cannot split {n} rows with test fraction {test_fraction}")
    seeds = np.random.SeedSequence(master_seed).spawn(trial_count)
    splits = []
    for t, ss in enumerate(seeds):
        perm = np.random.default_rng(ss).permutation(n)
        seed = int(ss.generate_state(1)[0])
        splits.append(TrialSplit(t, np.sort(perm[n_test:]), np.sort(perm[:n_test]), seed))
    return splits


def make_validation_folds(train_idx, folds=5, val_fraction=0.1, seed=0):
    """Shuffled (fit, validation) index pairs drawn from a trial's training rows."""
    train_idx = np.asarray(train_idx)
    _check_fraction(val_fraction)
    n = train_idx.size
    n_val = int(round(val_fraction * n))
    if folds < 1 or n_val < 1 or n - n_val < 2:
        raise ValueError(f"cannot cut {folds} validation folds from {n} rows")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(folds):
        perm = rng.permutation(n)
        out.append((np.sort(train_idx[perm[n_val:]]), np.sort(train_idx[perm[:n_val]])))
    return out


@dataclass(frozen=True)
class SinusoidSpec:
    """Generator constants for :func:`synth_sinusoid`."""

    half_width: float = 4.0
    base_noise: float = 0.05
    noise_growth: float = 0.025  # noise std = base + growth * x^2
    sparsity_scale: float = 2.0  # acceptance prob = 1 / (1 + (x / scale)^2)


SINUSOID = SinusoidSpec()


def synth_sinusoid(n, seed=0, spec: SinusoidSpec = SINUSOID):
    """Noisy sinusoid, sparser and noisier away from ``x = 0``.

    ``x`` is drawn uniformly on ``[-half_width, half_width]`` and accepted with
    probability ``1 / (1 + (x / sparsity_scale)^2)``;
    ``y = sin(x) + N(0, (base_noise + noise_growth x^2)^2)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    xs = []
    have = 0
    while have < n:
        cand = rng.uniform(-spec.half_width, spec.half_width, 2 * (n - have) + 16)
        keep = rng.uniform(size=cand.size) < 1.0 / (1.0 + (cand / spec.sparsity_scale) ** 2)
        xs.append(cand[keep])
        have += int(keep.sum())
    x = np.concatenate(xs)[:n]
    noise = spec.base_noise + spec.noise_growth * x * x
    y = np.sin(x) + noise * rng.standard_normal(n)
    return Dataset(x[:, None], y, name="sinusoid", source=f"synth_sinusoid(n={n}, seed={seed})")
