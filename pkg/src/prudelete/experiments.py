"""Experiment runners behind the command line: timing, L2 distance and FIT grids.

Every trial is a pure function of ``(config, cell, trial)``. Its dataset seed
is derived from the base seed and the cell's ``(d, k, p)``, so the rows do not
depend on grid order or worker scheduling. The outlier scale is left out of
that key on purpose: all scales in an L2 grid reuse one base dataset, which
makes the scale axis a controlled comparison.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from itertools import product
from pathlib import Path

import numpy as np
import yaml
from threadpoolctl import threadpool_limits

from . import _kernels
from ._version import __version__
from .datagen import GenConfig, gen_fit_linear, gen_fit_logistic, gen_linear, gen_logistic, scale_outliers
from .deletion import METHODS
from .errors import GenerationError, NonConvergenceError, UndefinedMetricError
from .linear import DEFAULT_HAT_BUDGET_BYTES, Dataset, check_hat_budget, fit_ridge, precompute
from .lko import DeletionRequest
from .logistic import LOGISTIC_METHODS, fit_logistic, logistic_precompute
from .metrics import fit_metric, l2_metric, mean_stderr, median_iqr

EXPERIMENTS = ("runtime", "l2", "fit", "logistic-l2", "logistic-fit")
LINEAR_ORDER = ("exact", "influence", "pru")
LOGISTIC_ORDER = ("newton", "influence", "pru")
MIN_WARMUPS = 2

# numerical failures inside one trial become NaN rows instead of aborting the grid
_TRIAL_ERRORS = (np.linalg.LinAlgError, UndefinedMetricError, NonConvergenceError, GenerationError)


def _tuple(values, cast):
    if isinstance(values, (str, bytes)):
        values = [v for v in str(values).split(",") if v.strip()]
    elif np.isscalar(values):
        values = [values]
    return tuple(cast(v) for v in values)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    d_list: tuple = (100, 200, 400)
    k_list: tuple = (1, 5, 10, 25)
    p_list: tuple = (0.25, 0.1, 0.05)
    scale_list: tuple = (1.0, 10.0, 100.0)
    trials: int = 5
    ridge_lambda: float = 0.1
    seed: int = 0
    repetitions: int = 5
    warmups: int = MIN_WARMUPS
    n_factor: int = 10
    noise_sigma2: float = 1.0
    w_star: float = 10.0
    workers: int = 1
    budget_bytes: int = DEFAULT_HAT_BUDGET_BYTES
    output_path: str | None = None

    def __post_init__(self):
        set_ = object.__setattr__
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        set_(self, "d_list", _tuple(self.d_list, int))
        set_(self, "k_list", _tuple(self.k_list, int))
        set_(self, "p_list", _tuple(self.p_list, float))
        set_(self, "scale_list", _tuple(self.scale_list, float))
        for name in ("d_list", "k_list", "p_list", "scale_list"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be nonempty")
        if min(self.d_list) < 2 or min(self.k_list) < 1:
            raise ValueError("grid needs d >= 2 and k >= 1")
        if not all(0.0 < p <= 1.0 for p in self.p_list):
            raise ValueError("sparsity values must lie in (0, 1]")
        if not all(s > 0 for s in self.scale_list):
            raise ValueError("outlier scales must be positive")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.warmups < MIN_WARMUPS:
            raise ValueError(f"timing needs at least {MIN_WARMUPS} warm-up calls")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be nonnegative")
        if self.n_factor < 1 or self.workers < 1:
            raise ValueError("n_factor and workers must be >= 1")
        if self.experiment == "logistic-fit" and self.ridge_lambda <= 0:
            raise ValueError("logistic-fit needs ridge_lambda > 0")

    @property
    def is_logistic(self) -> bool:
        return self.experiment.startswith("logistic")

    @classmethod
    def from_mapping(cls, experiment: str, mapping: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)} - {"experiment"}
        aliases = {"d": "d_list", "k": "k_list", "p": "p_list", "scale": "scale_list",
                   "lambda": "ridge_lambda", "out": "output_path"}
        kwargs = {}
        for key, value in mapping.items():
            name = key.replace("-", "_")
            name = aliases.get(name, name)
            if name == "experiment":
                if value != experiment:
                    raise ValueError(f"config is for {value!r}, not {experiment!r}")
                continue
            if name not in known:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[name] = value
        return cls(experiment=experiment, **kwargs)

    def n_for(self, d: int) -> int:
        return self.n_factor * d


def load_config_file(path) -> dict:
    """Read a YAML or JSON mapping (``key: value`` lines, lists as ``[1, 2]`` or ``1,2``)."""
    text = Path(path).read_text()
    data = yaml.safe_load(text) if text.strip() else {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a key/value mapping")
    return data


@dataclass(frozen=True)
class Cell:
    d: int
    k: int
    p: float = 1.0
    outlier_scale: float = 1.0


def grid_cells(cfg: ExperimentConfig) -> list[Cell]:
    if cfg.experiment == "runtime":
        return [Cell(d, k) for d, k in product(cfg.d_list, cfg.k_list)]
    if cfg.experiment == "l2":
        return [Cell(d, k, 1.0, s) for d, k, s in product(cfg.d_list, cfg.k_list, cfg.scale_list)]
    return [Cell(d, k, p) for d, k, p in product(cfg.d_list, cfg.k_list, cfg.p_list)]


def trial_seed(base_seed: int, cell: Cell, trial: int) -> int:
    key = (cell.d, cell.k, int(round(cell.p * 1_000_000)), trial)
    ss = np.random.SeedSequence(int(base_seed), spawn_key=key)
    return int(ss.generate_state(1, np.uint32)[0])


@dataclass(frozen=True)
class Row:
    experiment: str
    method: str
    d: int
    k: int
    p: float
    outlier_scale: float
    trial: int
    metric_name: str
    value: float
    baseline_value: float
    trial_seed: int


ROW_FIELDS = tuple(f.name for f in fields(Row))


@dataclass
class ExperimentReport:
    rows: list
    aggregate: list
    meta: dict = field(default_factory=dict)

    def rows_as_dicts(self) -> list[dict]:
        return [asdict(r) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=ROW_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in self.rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in asdict(r).items()})
        return buf.getvalue()

    def to_json(self) -> str:
        payload = {"meta": self.meta, "aggregate": self.aggregate, "rows": self.rows_as_dicts()}
        return json.dumps(payload, indent=2, default=_json_default)

    def to_markdown(self) -> str:
        logistic = self.meta.get("config", {}).get("experiment", "").startswith("logistic")
        stat = "median [q1, q3]" if logistic else "mean ± se"
        head = ["method", "d", "k", "p", "scale", "metric", stat, "baseline", "n"]
        lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
        for a in self.aggregate:
            if logistic:
                cell = f"{a['median']:.4g} [{a['q1']:.4g}, {a['q3']:.4g}]"
            else:
                cell = f"{a['mean']:.4g} ± {a['stderr']:.2g}"
            lines.append("| " + " | ".join([
                a["method"], str(a["d"]), str(a["k"]), f"{a['p']:g}", f"{a['outlier_scale']:g}",
                a["metric_name"], cell, f"{a['baseline']:.4g}", str(a["count"]),
            ]) + " |")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            return self.to_csv()
        if fmt == "json":
            return self.to_json()
        if fmt == "md":
            return self.to_markdown()
        raise ValueError(f"unknown format {fmt!r}")

    def write(self, path, fmt: str) -> None:
        Path(path).write_text(self.render(fmt))


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def aggregate_rows(rows, logistic: bool) -> list[dict]:
    """Fold rows into per-(method, cell, metric) summaries, in first-seen order."""
    groups: dict = {}
    for r in rows:
        key = (r.experiment, r.method, r.d, r.k, r.p, r.outlier_scale, r.metric_name)
        groups.setdefault(key, []).append(r)
    out = []
    for key, members in groups.items():
        vals = np.array([m.value for m in members], dtype=np.float64)
        base = np.array([m.baseline_value for m in members], dtype=np.float64)
        ok = np.isfinite(vals)
        entry = dict(zip(("experiment", "method", "d", "k", "p", "outlier_scale", "metric_name"), key))
        entry["count"] = int(ok.sum())
        entry["failures"] = int((~ok).sum())
        base = base[np.isfinite(base)]
        if logistic:
            entry["median"], entry["q1"], entry["q3"] = median_iqr(vals[ok])
            entry["baseline"] = median_iqr(base)[0]
        else:
            entry["mean"], entry["stderr"] = mean_stderr(vals[ok])
            entry["baseline"] = mean_stderr(base)[0]
        out.append(entry)
    return out


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need at least two matching (x, y) points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log fit needs positive values")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# ---------------------------------------------------------------------------
# trials
# ---------------------------------------------------------------------------


def _gen_config(cfg, cell, seed):
    return GenConfig(
        d=cell.d, k=cell.k, n=cfg.n_for(cell.d), noise_sigma2=cfg.noise_sigma2,
        sparsity_p=cell.p, w_star=cfg.w_star, ridge_lambda=cfg.ridge_lambda, seed=seed,
    )


def _retained(data: Dataset, idx) -> Dataset:
    keep = np.ones(data.n, dtype=bool)
    keep[idx] = False
    w = None if data.weights is None else data.weights[keep]
    return Dataset(data.features[keep], data.responses[keep], w, data.ridge_lambda)


def _rows(cfg, cell, trial, seed, metric, values: dict, baseline) -> list[Row]:
    return [
        Row(cfg.experiment, m, cell.d, cell.k, cell.p, cell.outlier_scale, trial,
            metric, float(v), float(baseline), seed)
        for m, v in values.items()
    ]


def _nan_rows(cfg, cell, trial, seed, metric, order) -> list[Row]:
    return _rows(cfg, cell, trial, seed, metric, dict.fromkeys(order, math.nan), math.nan)


def _metric_or_nan(fn, *args):
    try:
        return fn(*args)
    except _TRIAL_ERRORS:
        return math.nan


def _deletions(methods, order, model, req):
    out = {}
    for m in order:
        try:
            out[m] = methods[m](model, req).theta
        except _TRIAL_ERRORS:
            out[m] = None
    return out


def _l2_trial(cfg, cell, trial):
    seed = trial_seed(cfg.seed, cell, trial)
    try:
        out = gen_linear(_gen_config(cfg, cell, seed))
        if cell.outlier_scale != 1.0:
            out = scale_outliers(out, cell.outlier_scale)
        model = precompute(out.dataset, cfg.budget_bytes)
        req = DeletionRequest(out.deleted_indices)
        theta_lko = fit_ridge(_retained(out.dataset, req.indices))
    except _TRIAL_ERRORS:
        return _nan_rows(cfg, cell, trial, seed, "l2_ratio", LINEAR_ORDER)
    thetas = _deletions(METHODS, LINEAR_ORDER, model, req)
    values = {m: math.nan if t is None else _metric_or_nan(l2_metric, t, theta_lko, model.theta_full)
              for m, t in thetas.items()}
    baseline = float(np.linalg.norm(model.theta_full - theta_lko))
    return _rows(cfg, cell, trial, seed, "l2_ratio", values, baseline)


def _fit_trial(cfg, cell, trial):
    seed = trial_seed(cfg.seed, cell, trial)
    try:
        out = gen_fit_linear(_gen_config(cfg, cell, seed))
        model = precompute(out.dataset, cfg.budget_bytes)
    except _TRIAL_ERRORS:
        return _nan_rows(cfg, cell, trial, seed, "fit", LINEAR_ORDER)
    req = DeletionRequest(out.deleted_indices)
    w_star = float(model.theta_full[out.injected_index])
    thetas = _deletions(METHODS, LINEAR_ORDER, model, req)
    values = {m: math.nan if t is None else _metric_or_nan(fit_metric, t, out.injected_index, w_star)
              for m, t in thetas.items()}
    return _rows(cfg, cell, trial, seed, "fit", values, w_star)


def _logistic_l2_trial(cfg, cell, trial):
    seed = trial_seed(cfg.seed, cell, trial)
    try:
        out = gen_logistic(_gen_config(cfg, cell, seed))
        X, Y = out.dataset.features, out.dataset.responses
        theta_full = fit_logistic(X, Y, cfg.ridge_lambda)
        model = logistic_precompute(X, Y, theta_full, cfg.ridge_lambda, cfg.budget_bytes)
        req = DeletionRequest(out.deleted_indices)
        kept = _retained(out.dataset, req.indices)
        theta_lko = fit_logistic(kept.features, kept.responses, cfg.ridge_lambda, theta0=theta_full)
    except _TRIAL_ERRORS:
        return _nan_rows(cfg, cell, trial, seed, "l2_ratio", LOGISTIC_ORDER)
    thetas = _deletions(LOGISTIC_METHODS, LOGISTIC_ORDER, model, req)
    values = {m: math.nan if t is None else _metric_or_nan(l2_metric, t, theta_lko, theta_full)
              for m, t in thetas.items()}
    baseline = float(np.linalg.norm(theta_full - theta_lko))
    return _rows(cfg, cell, trial, seed, "l2_ratio", values, baseline)


def _logistic_fit_trial(cfg, cell, trial):
    seed = trial_seed(cfg.seed, cell, trial)
    try:
        out = gen_fit_logistic(_gen_config(cfg, cell, seed))
        X, Y = out.dataset.features, out.dataset.responses
        model = logistic_precompute(X, Y, out.theta_full, cfg.ridge_lambda, cfg.budget_bytes)
    except _TRIAL_ERRORS:
        return _nan_rows(cfg, cell, trial, seed, "fit", LOGISTIC_ORDER)
    req = DeletionRequest(out.deleted_indices)
    w_star = float(out.theta_full[out.injected_index])
    thetas = _deletions(LOGISTIC_METHODS, LOGISTIC_ORDER, model, req)
    values = {m: math.nan if t is None else _metric_or_nan(fit_metric, t, out.injected_index, w_star)
              for m, t in thetas.items()}
    return _rows(cfg, cell, trial, seed, "fit", values, w_star)


def time_method(fn, model, req, warmups: int = MIN_WARMUPS, repetitions: int = 5) -> float:
    """Median ``online_seconds`` over ``repetitions`` calls after ``warmups`` discarded ones."""
    for _ in range(max(warmups, MIN_WARMUPS)):
        fn(model, req)
    return float(np.median([fn(model, req).online_seconds for _ in range(repetitions)]))


def _runtime_trial(cfg, cell, trial):
    seed = trial_seed(cfg.seed, cell, trial)
    out = gen_linear(_gen_config(cfg, cell, seed))
    model = precompute(out.dataset, cfg.budget_bytes)
    req = DeletionRequest(out.deleted_indices)
    secs = {m: time_method(METHODS[m], model, req, cfg.warmups, cfg.repetitions) for m in LINEAR_ORDER}
    exact = secs["exact"]
    rows = _rows(cfg, cell, trial, seed, "seconds", secs, exact)
    rows += _rows(cfg, cell, trial, seed, "fraction_of_exact",
                  {m: s / exact for m, s in secs.items()}, exact)
    return rows


_TRIALS = {
    "runtime": _runtime_trial,
    "l2": _l2_trial,
    "fit": _fit_trial,
    "logistic-l2": _logistic_l2_trial,
    "logistic-fit": _logistic_fit_trial,
}


def _run_task(args):
    cfg, cell, trial = args
    return _TRIALS[cfg.experiment](cfg, cell, trial)


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------


def preflight(cfg: ExperimentConfig) -> list[Cell]:
    """Validate every cell and the hat-matrix budget before any work starts."""
    cells = grid_cells(cfg)
    for d in sorted(set(cfg.d_list)):
        check_hat_budget(cfg.n_for(d), cfg.budget_bytes)
    for cell in cells:
        _gen_config(cfg, cell, 0)
        if cell.k > cfg.n_for(cell.d) - 1:
            raise ValueError(f"k={cell.k} leaves no data at d={cell.d}, n={cfg.n_for(cell.d)}")
    return cells


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    cells = preflight(cfg)
    tasks = [(cfg, cell, t) for cell in cells for t in range(cfg.trials)]
    workers = 1 if cfg.experiment == "runtime" else cfg.workers
    if cfg.experiment == "runtime":
        with threadpool_limits(limits=1):
            results = [_run_task(t) for t in tasks]
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    rows = [r for chunk in results for r in chunk]
    meta = {
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()},
        "seed": cfg.seed,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": __version__,
        "backend": _kernels.ACTIVE.name,
        "workers": workers,
        "failed_rows": sum(1 for r in rows if not math.isfinite(r.value)),
    }
    return ExperimentReport(rows, aggregate_rows(rows, cfg.is_logistic), meta)


def run_runtime(cfg: ExperimentConfig) -> ExperimentReport:
    return run_experiment(_expect(cfg, "runtime"))


def run_l2(cfg: ExperimentConfig) -> ExperimentReport:
    return run_experiment(_expect(cfg, "l2"))


def run_fit(cfg: ExperimentConfig) -> ExperimentReport:
    return run_experiment(_expect(cfg, "fit"))


def run_logistic_l2(cfg: ExperimentConfig) -> ExperimentReport:
    return run_experiment(_expect(cfg, "logistic-l2"))


def run_logistic_fit(cfg: ExperimentConfig) -> ExperimentReport:
    return run_experiment(_expect(cfg, "logistic-fit"))


def _expect(cfg, name):
    if cfg.experiment != name:
        raise ValueError(f"config is for {cfg.experiment!r}, expected {name!r}")
    return cfg
