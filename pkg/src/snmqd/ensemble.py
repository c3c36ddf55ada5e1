"""Ensembles of interval networks and the two ways of combining their outputs.

SNM fits a split normal to every member's ``(lower, point, upper)`` triple,
averages the densities and reads the final bounds off the mixture quantiles.
SEM widens the mean member bounds by 1.96 standard deviations (``"paper"``)
or 1.96 standard errors (``"impl"``) of the member bounds.
"""

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .losses import LossParams
from .metrics import IntervalBatch, IntervalPrediction
from .neuralnet import TrainConfig, TrainingFailure, fit_mlp, load_mlp, save_mlp
from .splitnorm import FitConfig, fit_arrays, mixture_quantile_arrays

log = logging.getLogger(__name__)

AGGREGATIONS = ("snm", "sem", "sem-paper", "none")
Z95 = 1.96


class EnsembleTrainingError(RuntimeError):
    """A member kept failing after ``retry_limit`` fresh attempts."""

    def __init__(self, message, attempts):
        super().__init__(message)
        self.attempts = attempts


@dataclass(frozen=True)
class EnsembleConfig:
    m: int = 5
    train: TrainConfig = field(default_factory=TrainConfig)
    retry_limit: int = 5
    aggregation: str = "snm"
    alpha: float = 0.05
    master_seed: int = 0
    fit: FitConfig = field(default_factory=FitConfig)
    workers: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("ensemble size must be at least 1")
        if self.retry_limit < 0:
            raise ValueError("retry_limit must be non-negative")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    def with_(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        tr = dict(d.pop("train"))
        tr["loss_params"] = LossParams(**tr["loss_params"])
        tr["hidden"] = tuple(tr["hidden"])
        return cls(train=TrainConfig(**tr), fit=FitConfig(**d.pop("fit")), **d)

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def member_seed(master_seed, member, attempt=0):
    """Seed for one training attempt of one member.

    A fixed function of ``(master_seed, member, attempt)``, so retries and
    whole ensembles are reproducible.
    """
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFF, int(member), int(attempt)])
    return int(ss.generate_state(1)[0])


@dataclass
class Ensemble:
    models: list
    seeds: list
    attempts: list  # per member: list of (seed, failure reason or None)
    config: EnsembleConfig

    @property
    def m(self):
        return len(self.models)

    @property
    def retries(self):
        """Failed attempts summed over members."""
        return sum(sum(1 for _, why in a if why is not None) for a in self.attempts)


def _train_member(args):
    X, y, tcfg, master_seed, j, retry_limit, loss_fn = args
    attempts = []
    for attempt in range(retry_limit + 1):
        seed = member_seed(master_seed, j, attempt)
        cfg = tcfg.with_(seed=seed)
        try:
            res = fit_mlp(X, y, cfg, loss_fn=loss_fn)
            why = res.failure
        except TrainingFailure as exc:
            res, why = None, str(exc)
        attempts.append((seed, why))
        if why is None:
            return res.model, seed, attempts
        log.info("member %d attempt %d failed: %s", j, attempt, why)
    return None, None, attempts


def train_ensemble(X, y, cfg: EnsembleConfig, loss_fn=None):
    """Train ``cfg.m`` members, retrying each failure with a fresh seed.

    Raises
    ------
    EnsembleTrainingError
        When a member fails ``retry_limit + 1`` times in a row.
    """
    jobs = [(X, y, cfg.train, cfg.master_seed, j, cfg.retry_limit, loss_fn) for j in range(cfg.m)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_train_member, jobs))
    else:
        results = [_train_member(job) for job in jobs]
    all_attempts = [r[2] for r in results]
    for j, (model, _, attempts) in enumerate(results):
        if model is None:
            raise EnsembleTrainingError(f"member {j} failed {len(attempts)} times: {attempts[-1][1]}", all_attempts)
    return Ensemble([r[0] for r in results], [r[1] for r in results], all_attempts, cfg)


@dataclass
class MemberOutputs:
    """Member triples as ``(n, m)`` arrays."""

    lower: np.ndarray
    point: np.ndarray
    upper: np.ndarray

    @property
    def shape(self):
        return self.lower.shape

    def member(self, j):
        return IntervalBatch(self.lower[:, j], self.point[:, j], self.upper[:, j])

    def sample(self, i):
        return [IntervalPrediction(float(a), float(b), float(c)) for a, b, c in zip(self.lower[i], self.point[i], self.upper[i])]

    @classmethod
    def from_triples(cls, triples):
        """From a nested ``[sample][member] -> IntervalPrediction or (l, p, u)`` list."""
        arr = np.array([[tuple(t) if not isinstance(t, IntervalPrediction) else (t.lower, t.point, t.upper) for t in row] for row in triples], dtype=float)
        return cls(arr[..., 0], arr[..., 1], arr[..., 2])


def member_outputs(models, X):
    preds = [m.forward(X) for m in models]
    return MemberOutputs(
        np.stack([p.lower for p in preds], axis=1),
        np.stack([p.point for p in preds], axis=1),
        np.stack([p.upper for p in preds], axis=1),
    )


@dataclass
class SnmResult:
    intervals: IntervalBatch
    skipped_members: np.ndarray  # (n, m) bool: member left out of the mixture
    fallback: np.ndarray  # (n,) bool: no usable member, bounds taken from member extremes
    unconverged: np.ndarray  # (n, m) bool: split normal fit above tolerance


def aggregate_snm_arrays(members: MemberOutputs, alpha=0.05, fit_cfg: FitConfig = FitConfig(), tol=1e-10):
    """Split-normal-mixture aggregation for every sample at once.

    Members whose triple is not strictly ordered are dropped from that
    sample's mixture and the remaining weights renormalised. A sample with no
    ordered member falls back to ``(min lower, mean point, max upper)``.
    The point estimate is always the plain mean of the member points.
    """
    lo, pt, up = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (members.lower, members.point, members.upper))
    n, m = lo.shape
    ok = (lo < pt) & (pt < up)
    point = pt.mean(axis=1)
    if not np.all(ok):
        log.warning("%d member triples violate lower < point < upper; left out of the mixture", int((~ok).sum()))

    sigma1 = np.ones((n, m))
    sigma2 = np.ones((n, m))
    unconverged = np.zeros((n, m), dtype=bool)
    if np.any(ok):
        res = fit_arrays(lo[ok], pt[ok], up[ok], alpha, fit_cfg)
        sigma1[ok] = res["sigma1"]
        sigma2[ok] = res["sigma2"]
        unconverged[ok] = ~res["converged"]
        if np.any(unconverged):
            log.warning("%d split normal fits stopped above tolerance", int(unconverged.sum()))

    usable = ok.any(axis=1)
    lower = np.min(np.minimum(lo, up), axis=1)
    upper = np.max(np.maximum(lo, up), axis=1)
    if np.any(usable):
        mask = ok[usable]
        lower[usable] = mixture_quantile_arrays(alpha / 2.0, pt[usable], sigma1[usable], sigma2[usable], mask, tol)
        upper[usable] = mixture_quantile_arrays(1.0 - alpha / 2.0, pt[usable], sigma1[usable], sigma2[usable], mask, tol)
    if not np.all(usable):
        log.warning("%d samples had no ordered member triple; using member extremes", int((~usable).sum()))
    return SnmResult(IntervalBatch(lower, point, upper), ~ok, ~usable, unconverged)


def aggregate_sem_arrays(members: MemberOutputs, variant="impl", point="mean"):
    """Bound-wise mean +/- 1.96 spread, with spread the std (``"paper"``) or SEM (``"impl"``).

    ``point="mean"`` averages member points after clamping each into its own
    interval; ``point="midpoint"`` uses the centre of the aggregated interval.
    """
    lo, pt, up = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (members.lower, members.point, members.upper))
    m = lo.shape[1]
    if m < 2:
        raise ValueError("SEM aggregation needs at least two members")
    if variant not in ("impl", "paper"):
        raise ValueError(f"unknown SEM variant {variant!r}")
    factor = Z95 / np.sqrt(m) if variant == "impl" else Z95
    lower = lo.mean(axis=1) - factor * lo.std(axis=1, ddof=1)
    upper = up.mean(axis=1) + factor * up.std(axis=1, ddof=1)
    if point == "midpoint":
        est = 0.5 * (lower + upper)
    elif point == "mean":
        est = np.clip(pt, np.minimum(lo, up), np.maximum(lo, up)).mean(axis=1)
    else:
        raise ValueError(f"unknown point rule {point!r}")
    return IntervalBatch(lower, est, upper)


def _sample_members(member_preds):
    return MemberOutputs.from_triples([list(member_preds)])


def aggregate_snm(member_preds, alpha=0.05, fit_cfg: FitConfig = FitConfig()):
    """SNM aggregate of one sample's member triples."""
    return aggregate_snm_arrays(_sample_members(member_preds), alpha, fit_cfg).intervals[0]


def aggregate_sem(member_preds, variant="impl", point="mean"):
    """SEM aggregate of one sample's member triples."""
    return aggregate_sem_arrays(_sample_members(member_preds), variant, point)[0]


def predict(models, X, aggregation="snm", alpha=0.05, fit_cfg: FitConfig = FitConfig(), sem_point="mean"):
    """Final intervals for ``X``.

    ``aggregation="none"`` returns the raw :class:`MemberOutputs`.
    """
    if isinstance(models, Ensemble):
        models = models.models
    members = member_outputs(models, X)
    if aggregation == "none":
        return members
    if aggregation == "snm":
        return aggregate_snm_arrays(members, alpha, fit_cfg).intervals
    if aggregation == "sem":
        return aggregate_sem_arrays(members, "impl", sem_point)
    if aggregation == "sem-paper":
        return aggregate_sem_arrays(members, "paper", sem_point)
    raise ValueError(f"aggregation must be one of {AGGREGATIONS}")


def save_ensemble(ens: Ensemble, directory, extra=None):
    """Write ``member_<j>.npz`` files plus ``manifest.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = []
    for j, model in enumerate(ens.models):
        name = f"member_{j}.npz"
        save_mlp(model, directory / name)
        files.append(name)
    manifest = {
        "format_version": 1,
        "m": ens.m,
        "seeds": ens.seeds,
        "members": files,
        "attempts": ens.attempts,
        "config": ens.config.to_dict(),
        "config_hash": ens.config.digest(),
    }
    if extra:
        manifest.update(extra)
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str))
    return directory


def load_ensemble(directory):
    """Inverse of :func:`save_ensemble`; returns ``(Ensemble, manifest dict)``."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("format_version") != 1:
        raise ValueError("unsupported ensemble manifest version")
    models = [load_mlp(directory / f) for f in manifest["members"]]
    if len(models) != manifest["m"]:
        raise ValueError("manifest member count does not match files")
    cfg = EnsembleConfig.from_dict(manifest["config"])
    if cfg.digest() != manifest["config_hash"]:
        raise ValueError("ensemble config hash mismatch")
    attempts = [[tuple(a) for a in mem] for mem in manifest["attempts"]]
    return Ensemble(models, manifest["seeds"], attempts, cfg), manifest
