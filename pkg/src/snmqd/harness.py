"""Experiment orchestration: trial protocol, random search, sensitivity grid, reports."""

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import MANIFEST, Dataset, Stats, load_csv, make_trials, make_validation_folds, standardize, synth_sinusoid, to_full_scope
from .ensemble import (
    EnsembleConfig,
    EnsembleTrainingError,
    MemberOutputs,
    aggregate_sem_arrays,
    aggregate_snm_arrays,
    member_outputs,
    member_seed,
    train_ensemble,
)
from .metrics import EvalReport, IntervalBatch, evaluate
from .neuralnet import TrainConfig, TrainingFailure, fit_mlp

log = logging.getLogger(__name__)

MODEL_KINDS = {"qd+": "qd_plus", "qd_plus": "qd_plus", "qd": "qd", "mse": "mse", "mse_only": "mse"}
METRICS = ("picp", "mpiw", "nmpiw", "mse")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "sinusoid"
    dataset_path: str = None
    has_header: bool = False
    n_samples: int = 600  # synthetic datasets only
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    trials: int = 5
    test_fraction: float = 0.1
    master_seed: int = 0
    aggregations: tuple = ("snm", "sem")
    non_aggregated: bool = True
    output: str = None

    @property
    def model(self):
        return self.ensemble.train.loss

    def with_(self, **kw):
        return replace(self, **kw)


# key -> (section, field, parser)
_CONFIG_KEYS = {
    "dataset": ("exp", "dataset", str),
    "dataset_path": ("exp", "dataset_path", str),
    "has_header": ("exp", "has_header", lambda s: s.lower() in ("1", "true", "yes")),
    "n_samples": ("exp", "n_samples", int),
    "trials": ("exp", "trials", int),
    "test_fraction": ("exp", "test_fraction", float),
    "seed": ("exp", "master_seed", int),
    "aggregations": ("exp", "aggregations", lambda s: tuple(a.strip() for a in s.split(",") if a.strip())),
    "non_aggregated": ("exp", "non_aggregated", lambda s: s.lower() in ("1", "true", "yes")),
    "output": ("exp", "output", str),
    "m": ("ens", "m", int),
    "retry_limit": ("ens", "retry_limit", int),
    "aggregation": ("ens", "aggregation", str),
    "alpha": ("ens", "alpha", float),
    "workers": ("ens", "workers", int),
    "model": ("train", "loss", lambda s: MODEL_KINDS[s.lower()]),
    "learning_rate": ("train", "learning_rate", float),
    "decay_rate": ("train", "decay_rate", float),
    "epochs": ("train", "epochs", int),
    "batch_size": ("train", "batch_size", int),
    "hidden": ("train", "hidden", lambda s: tuple(int(v) for v in s.split(","))),
    "lambda1": ("loss", "lambda1", float),
    "lambda2": ("loss", "lambda2", float),
    "xi": ("loss", "xi", float),
    "lambda_qd": ("loss", "lambda_qd", float),
    "softness": ("loss", "softness", float),
    "scale_picp": ("loss", "scale_picp", lambda s: s.lower() in ("1", "true", "yes")),
}

CONFIG_SCHEMA = sorted(_CONFIG_KEYS)


def parse_config_text(text):
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are errors."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


def build_config(values, base: ExperimentConfig = None):
    """Apply raw ``{key: str}`` overrides on top of ``base``."""
    base = base or ExperimentConfig()
    sections = {"exp": {}, "ens": {}, "train": {}, "loss": {}}
    for key, raw in values.items():
        section, name, parse = _CONFIG_KEYS[key]
        try:
            sections[section][name] = parse(raw) if isinstance(raw, str) else raw
        except (ValueError, KeyError) as exc:
            raise ValueError(f"bad value for {key}: {raw!r}") from exc
    ens = base.ensemble
    loss = replace(ens.train.loss_params, **sections["loss"])
    train = replace(ens.train, loss_params=loss, **sections["train"])
    ens = replace(ens, train=train, **sections["ens"])
    cfg = replace(base, ensemble=ens, **sections["exp"])
    if cfg.model == "mse" and (sections["loss"] or cfg.aggregations):
        log.info("model mse: interval settings are ignored")
    return cfg


def load_config(path, base: ExperimentConfig = None):
    return build_config(parse_config_text(Path(path).read_text()), base)


def load_dataset(cfg: ExperimentConfig):
    if cfg.dataset == "sinusoid" and not cfg.dataset_path:
        return synth_sinusoid(cfg.n_samples, seed=cfg.master_seed)
    if not cfg.dataset_path:
        raise ValueError(f"dataset {cfg.dataset!r} needs dataset_path")
    expected = cfg.dataset if cfg.dataset in MANIFEST else None
    delimiter = None if str(cfg.dataset_path).endswith(".data") else ","
    return load_csv(cfg.dataset_path, has_header=cfg.has_header, delimiter=delimiter, expected=expected)


# ---------------------------------------------------------------------------
# trial protocol
# ---------------------------------------------------------------------------


def summarize(values):
    """Mean and standard error of the mean; SEM is ``None`` for a single value."""
    v = np.asarray([x for x in values if x is not None and np.isfinite(x)], dtype=float)
    if v.size == 0:
        return (float("nan"), None)
    if v.size == 1:
        return (float(v[0]), None)
    return (float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size)))


@dataclass
class TrialOutcome:
    trial: int
    seed: int
    reports: dict  # aggregation name -> EvalReport
    retries: int = 0
    failed: bool = False
    error: str = None

    def to_dict(self):
        return {
            "trial": self.trial,
            "seed": self.seed,
            "reports": {k: v.to_dict() for k, v in self.reports.items()},
            "retries": self.retries,
            "failed": self.failed,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["trial"], d["seed"], {k: EvalReport(**v) for k, v in d["reports"].items()}, d["retries"], d["failed"], d["error"])


@dataclass
class ExperimentResult:
    name: str
    model: str
    m: int
    trials: list
    extras: dict = field(default_factory=dict)

    @property
    def ok_trials(self):
        return [t for t in self.trials if not t.failed]

    @property
    def retries(self):
        return sum(t.retries for t in self.trials)

    @property
    def aggregations(self):
        names = []
        for t in self.ok_trials:
            for k in t.reports:
                if k not in names:
                    names.append(k)
        return names

    def summary(self):
        """``{aggregation: {metric: (mean, sem)}}`` over successful trials."""
        out = {}
        for agg in self.aggregations:
            reps = [t.reports[agg] for t in self.ok_trials if agg in t.reports]
            out[agg] = {k: summarize([getattr(r, k) for r in reps]) for k in METRICS}
        return out

    def to_dict(self):
        return {
            "name": self.name,
            "model": self.model,
            "m": self.m,
            "trials": [t.to_dict() for t in self.trials],
            "extras": self.extras,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], d["model"], d["m"], [TrialOutcome.from_dict(t) for t in d["trials"]], d.get("extras", {}))

    def __eq__(self, other):
        return isinstance(other, ExperimentResult) and json.dumps(self.to_dict(), sort_keys=True) == json.dumps(
            other.to_dict(), sort_keys=True
        )


def _midpoint_members(members: MemberOutputs):
    return MemberOutputs(members.lower, 0.5 * (members.lower + members.upper), members.upper)


def aggregate_all(members: MemberOutputs, aggregations, model, alpha, fit_cfg):
    """Aggregated intervals for each requested method.

    QD networks have no trained point head; their point estimate is the
    interval midpoint (for SNM this is a non-canonical combination).
    """
    if model == "qd":
        members = _midpoint_members(members)
    out = {}
    for agg in aggregations:
        if agg == "snm":
            out[agg] = aggregate_snm_arrays(members, alpha, fit_cfg).intervals
        elif agg in ("sem", "sem-paper"):
            if members.shape[1] < 2:
                continue
            variant = "impl" if agg == "sem" else "paper"
            out[agg] = aggregate_sem_arrays(members, variant, "midpoint" if model == "qd" else "mean")
        elif agg == "none":
            continue
        else:
            raise ValueError(f"unknown aggregation {agg!r}")
    return out


def _mean_report(reports):
    keys = ("picp", "mpiw", "nmpiw", "mse", "target_range")
    vals = {k: float(np.mean([getattr(r, k) for r in reports])) for k in keys}
    return EvalReport(
        n=reports[0].n,
        crossings=sum(r.crossings for r in reports),
        point_outside=sum(r.point_outside for r in reports),
        **vals,
    )


def run_trial(ds: Dataset, split, cfg: ExperimentConfig, full_stats: Stats = None, loss_fn=None):
    """Train on one split and evaluate on its test rows.

    Predictions are made in train-standardised units and converted to
    full-dataset standard units before any metric is computed.
    """
    full_stats = full_stats or Stats.of(ds.X, ds.y)
    X, y, train_stats = standardize(ds, "train_stats", split.train)
    ens_cfg = cfg.ensemble.with_(master_seed=split.seed)
    try:
        ens = train_ensemble(X[split.train], y[split.train], ens_cfg, loss_fn=loss_fn)
    except EnsembleTrainingError as exc:
        retries = sum(sum(1 for _, why in a if why is not None) for a in exc.attempts)
        return TrialOutcome(split.trial, split.seed, {}, retries, True, str(exc)), None
    y_test = to_full_scope(y[split.test], train_stats, full_stats)
    target_range = float(y_test.max() - y_test.min()) if y_test.size > 1 else 1.0
    members = member_outputs(ens.models, X[split.test])
    members_full = MemberOutputs(*(to_full_scope(a, train_stats, full_stats) for a in (members.lower, members.point, members.upper)))
    reports = {}
    if cfg.model == "mse":
        point = members_full.point.mean(axis=1)
        reports["point"] = evaluate(IntervalBatch(point, point, point), y_test, target_range)
    else:
        aggs = aggregate_all(members_full, cfg.aggregations, cfg.model, ens_cfg.alpha, ens_cfg.fit)
        for name, batch in aggs.items():
            reports[name] = evaluate(batch, y_test, target_range)
        if cfg.non_aggregated or "none" in cfg.aggregations:
            src = _midpoint_members(members_full) if cfg.model == "qd" else members_full
            reports["none"] = _mean_report([evaluate(src.member(j), y_test, target_range) for j in range(src.shape[1])])
    artefacts = {"ensemble": ens, "members": members_full, "y_test": y_test, "X_test": ds.X[split.test]}
    return TrialOutcome(split.trial, split.seed, reports, ens.retries), artefacts


def _trial_job(args):
    ds, split, cfg, full_stats = args
    return run_trial(ds, split, cfg, full_stats)[0]


def run_experiment(cfg: ExperimentConfig, ds: Dataset = None, keep_artefacts=False, loss_fn=None):
    """Run the full trial protocol and collect one :class:`TrialOutcome` per trial."""
    ds = ds if ds is not None else load_dataset(cfg)
    splits = make_trials(ds, cfg.trials, cfg.test_fraction, cfg.master_seed)
    full_stats = Stats.of(ds.X, ds.y)
    artefacts = []
    workers = cfg.ensemble.workers
    if workers > 1 and not keep_artefacts and loss_fn is None:
        inner = cfg.with_(ensemble=cfg.ensemble.with_(workers=1))
        with ProcessPoolExecutor(workers) as pool:
            outcomes = list(pool.map(_trial_job, [(ds, s, inner, full_stats) for s in splits]))
    else:
        outcomes = []
        for split in splits:
            outcome, art = run_trial(ds, split, cfg, full_stats, loss_fn)
            outcomes.append(outcome)
            if keep_artefacts:
                artefacts.append(art)
            log.info("trial %d done%s", split.trial, " (failed)" if outcome.failed else "")
    result = ExperimentResult(ds.name or cfg.dataset, cfg.model, cfg.ensemble.m, outcomes)
    result.extras["target_model_count"] = f"{cfg.ensemble.m} * {cfg.trials}"
    if keep_artefacts:
        return result, artefacts
    return result


# ---------------------------------------------------------------------------
# hyper-parameter search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HpsSpace:
    """Sampling ranges. Rates are drawn log-uniformly, the rest uniformly."""

    learning_rate: tuple = (1e-3, 3e-2)
    decay_rate: tuple = (0.98, 1.0)
    lambda1: tuple = (0.9, 0.999)
    lambda2: tuple = (0.01, 0.5)
    epochs: tuple = (100, 500)
    budget: int = 20

    def __post_init__(self):
        for name in ("learning_rate", "decay_rate", "lambda1", "lambda2", "epochs"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"empty range for {name}")
        if not (self.learning_rate[0] > 0 and self.decay_rate[0] > 0 and self.epochs[0] >= 1):
            raise ValueError("rates must be positive and epochs at least 1")
        if not (0 <= self.lambda1[0] and self.lambda1[1] <= 1 and 0 <= self.lambda2[0] and self.lambda2[1] <= 1):
            raise ValueError("lambda ranges must lie in [0, 1]")
        if not 1 <= self.budget <= 300:
            raise ValueError("budget must lie in [1, 300]")

    def sample(self, rng):
        lr = float(np.exp(rng.uniform(np.log(self.learning_rate[0]), np.log(self.learning_rate[1]))))
        return {
            "learning_rate": lr,
            "decay_rate": float(rng.uniform(*self.decay_rate)),
            "lambda1": float(rng.uniform(*self.lambda1)),
            "lambda2": float(rng.uniform(*self.lambda2)),
            "epochs": int(rng.integers(self.epochs[0], self.epochs[1] + 1)),
        }


@dataclass
class HpsScore:
    index: int
    params: dict
    picp: float = float("nan")
    mpiw: float = float("nan")
    mse: float = float("nan")
    picp_std: float = float("nan")
    failed: bool = False
    error: str = None


def select_best(scores, gamma=0.95, band=0.01):
    """Pick a configuration from scored candidates.

    Among candidates whose mean PICP lies within ``gamma +/- band`` the one
    with the lowest ``(MPIW, MSE)`` wins, ties going to the earlier sample.
    If none lies inside the band, the highest mean PICP wins.
    """
    ok = [s for s in scores if not s.failed]
    if not ok:
        raise RuntimeError("every configuration failed: " + "; ".join(f"#{s.index}: {s.error}" for s in scores))
    inside = [s for s in ok if abs(s.picp - gamma) <= band + 1e-12]
    if inside:
        return min(inside, key=lambda s: (s.mpiw, s.mse, s.index))
    return max(ok, key=lambda s: (s.picp, -s.index))


def apply_params(cfg: EnsembleConfig, params):
    train = cfg.train
    loss = train.loss_params.with_(
        **{k: params[k] for k in ("lambda1", "lambda2", "lambda_qd", "xi") if k in params}
    )
    train = train.with_(loss_params=loss, **{k: params[k] for k in ("learning_rate", "decay_rate", "epochs") if k in params})
    return cfg.with_(train=train)


def score_config(X, y, folds, ens_cfg: EnsembleConfig, aggregation="snm"):
    """Mean validation PICP, MPIW and MSE over folds (train-standardised units)."""
    picps, widths, errs = [], [], []
    for k, (fit_idx, val_idx) in enumerate(folds):
        ens = train_ensemble(X[fit_idx], y[fit_idx], ens_cfg.with_(master_seed=member_seed(ens_cfg.master_seed, 1000 + k)))
        members = member_outputs(ens.models, X[val_idx])
        agg = aggregation if ens_cfg.m > 1 else "snm"
        batch = aggregate_all(members, (agg,), ens_cfg.train.loss, ens_cfg.alpha, ens_cfg.fit)[agg]
        rep = evaluate(batch, y[val_idx], 1.0)
        picps.append(rep.picp)
        widths.append(rep.mpiw)
        errs.append(rep.mse)
    return float(np.mean(picps)), float(np.mean(widths)), float(np.mean(errs)), float(np.std(picps))


def run_hps(space: HpsSpace, ds: Dataset, seed=0, base: EnsembleConfig = None, folds=5, test_fraction=0.1, aggregation="snm"):
    """Random search scored on shuffled 90/10 validation folds of one trial's training rows.

    Returns
    -------
    (list of HpsScore in sample order, selected HpsScore)
    """
    base = base or EnsembleConfig(m=1)
    rng = np.random.default_rng(seed)
    split = make_trials(ds, 1, test_fraction, seed)[0]
    X, y, _ = standardize(ds, "train_stats", split.train)
    folds_idx = make_validation_folds(split.train, folds, 0.1, seed)
    scores = []
    for i in range(space.budget):
        params = space.sample(rng)
        cfg = apply_params(base, params).with_(master_seed=member_seed(seed, i))
        try:
            p, w, e, sd = score_config(X, y, folds_idx, cfg, aggregation)
            scores.append(HpsScore(i, params, p, w, e, sd))
        except (EnsembleTrainingError, TrainingFailure) as exc:
            scores.append(HpsScore(i, params, failed=True, error=str(exc)))
        log.info("hps %d/%d %s", i + 1, space.budget, scores[-1])
    gamma = 1.0 - base.alpha
    return scores, select_best(scores, gamma)


# ---------------------------------------------------------------------------
# sensitivity grid
# ---------------------------------------------------------------------------


@dataclass
class SensitivityCell:
    lambda1: float
    lambda2: float
    xi: float
    picp: float = float("nan")
    nmpiw: float = float("nan")
    mse: float = float("nan")
    failed: bool = False
    reason: str = None
    violations: tuple = None  # (crossings, point_outside) on the test rows


def _cell_seed(seed, l1, l2, xi):
    # derived from the cell's values so the grid order does not matter
    ss = np.random.SeedSequence([int(seed), int(round(l1 * 1e6)), int(round(l2 * 1e6)), int(round(xi * 1e6))])
    return int(ss.generate_state(1)[0])


def run_sensitivity_cell(X_tr, y_tr, X_te, y_te, base: TrainConfig, l1, l2, xi, seed=0, target_range=None):
    cfg = base.with_(loss="qd_plus", loss_params=base.loss_params.with_(lambda1=l1, lambda2=l2, xi=xi), seed=_cell_seed(seed, l1, l2, xi))
    cell = SensitivityCell(l1, l2, xi)
    try:
        res = fit_mlp(X_tr, y_tr, cfg)
    except TrainingFailure as exc:
        cell.failed, cell.reason = True, str(exc)
        return cell
    if res.failure:
        cell.failed, cell.reason = True, res.failure
    pred = res.model.forward(X_te)
    rng_ = target_range or float(y_te.max() - y_te.min())
    if np.all(np.isfinite(pred.lower)) and np.all(np.isfinite(pred.upper)):
        rep = evaluate(pred, y_te, rng_)
        cell.picp, cell.nmpiw, cell.mse = rep.picp, rep.nmpiw, rep.mse
        cell.violations = (rep.crossings, rep.point_outside)
        # a grid cell is stricter than retry accounting: any ordering violation fails it
        if not cell.failed and rep.crossings + rep.point_outside > 0:
            cell.failed = True
            cell.reason = f"test outputs break the ordering: {rep.crossings} crossings, {rep.point_outside} points outside"
    return cell


def run_sensitivity(ds: Dataset, lambda1_grid, lambda2_grid, xi_values=(0.0, 10.0), base: TrainConfig = None, seed=0, test_fraction=0.1):
    """Train one QD+ network per ``(lambda1, lambda2, xi)`` cell.

    A cell fails when training fails (see :func:`~snmqd.neuralnet.diagnose`)
    or when any held-out output breaks ``lower <= point <= upper``.
    Failures are recorded, not raised.
    """
    base = base or TrainConfig()
    for v in list(lambda1_grid) + list(lambda2_grid):
        if not 0.0 <= v <= 1.0:
            raise ValueError("grid values must lie in [0, 1]")
    split = make_trials(ds, 1, test_fraction, seed)[0]
    X, y, _ = standardize(ds, "train_stats", split.train)
    cells = []
    for xi in xi_values:
        for l2 in lambda2_grid:
            for l1 in lambda1_grid:
                cells.append(run_sensitivity_cell(X[split.train], y[split.train], X[split.test], y[split.test], base, l1, l2, xi, seed))
    return cells


def failure_fraction(cells, xi=None):
    sel = [c for c in cells if xi is None or c.xi == xi]
    return sum(c.failed for c in sel) / len(sel) if sel else float("nan")


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(mean, sem, digits=2):
    if mean is None or not np.isfinite(mean):
        return "NA"
    s = "NA" if sem is None else f"{sem:.{digits}f}"
    return f"{mean:.{digits}f}±{s}"


def format_table(results):
    """Table-style text: one row per (experiment, aggregation), mean ± SEM per metric."""
    if not results:
        raise ValueError("no reports to render")
    lines = [f"{'dataset':<12}{'model':<9}{'agg':<11}{'PICP':>12}{'MPIW':>12}{'NMPIW':>12}{'MSE':>12}{'retries':>9}"]
    for res in results:
        for agg, metrics in res.summary().items():
            cells = "".join(f"{_fmt(*metrics[k]):>12}" for k in METRICS)
            lines.append(f"{res.name:<12}{res.model:<9}{agg:<11}{cells}{res.retries:>9}")
    return "\n".join(lines) + "\n"


def format_csv(results):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", "model", "aggregation", "trials"] + [f"{k}_{s}" for k in METRICS for s in ("mean", "sem")] + ["retries"])
    for res in results:
        for agg, metrics in res.summary().items():
            row = [res.name, res.model, agg, len(res.ok_trials)]
            for k in METRICS:
                mean, sem = metrics[k]
                row += [repr(mean), "NA" if sem is None else repr(sem)]
            w.writerow(row + [res.retries])
    return buf.getvalue()


def emit_report(results, fmt="table_text", path=None):
    """Serialise experiment results as ``table_text``, ``json`` or ``csv``.

    Returns the text; also writes it to ``path`` when given.
    """
    if isinstance(results, ExperimentResult):
        results = [results]
    if not results:
        raise ValueError("no reports to render")
    if fmt == "table_text":
        text = format_table(results)
    elif fmt in ("json", "machine_json_like"):
        text = json.dumps([r.to_dict() for r in results], indent=2, sort_keys=True)
    elif fmt == "csv":
        text = format_csv(results)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def read_report_json(text):
    return [ExperimentResult.from_dict(d) for d in json.loads(text)]


def emit_plot_data(inputs, intervals: IntervalBatch, targets, path=None):
    """Tab-separated ``x lower point upper y_true`` rows sorted by ``x``."""
    x = np.asarray(inputs, dtype=float)
    if x.ndim == 2:
        if x.shape[1] != 1:
            raise ValueError("plot data needs a single input feature; project multi-dimensional inputs first")
        x = x[:, 0]
    elif x.ndim != 1:
        raise ValueError("plot data needs a single input feature")
    y = np.asarray(targets, dtype=float).reshape(-1)
    order = np.argsort(x, kind="stable")
    lines = ["x\tlower\tpoint\tupper\ty_true"]
    for i in order:
        row = (x[i], intervals.lower[i], intervals.point[i], intervals.upper[i], y[i])
        lines.append("\t".join(repr(float(v)) for v in row))
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def read_plot_data(text):
    rows = [line.split("\t") for line in text.strip().splitlines()[1:]]
    return np.array(rows, dtype=float)


def outer_inner_widths(x, intervals: IntervalBatch):
    """Mean width on the outer two quartiles of ``x`` and on the inner two."""
    x = np.asarray(x, dtype=float).reshape(-1)
    q1, q3 = np.quantile(x, [0.25, 0.75])
    width = intervals.upper - intervals.lower
    outer = (x < q1) | (x > q3)
    return float(width[outer].mean()), float(width[~outer].mean())
