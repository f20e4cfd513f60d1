"""Monte Carlo comparison of the standard estimator and the X-learner.

For every scenario, every ``(m, n)`` cell and every replication the harness
draws a training set, fits each estimator (timing the fit), draws a fresh
test set and scores the estimate and its sign rule.  Output files:

``records.csv``
    one row per (scenario, cell, replication, estimator)
``summary.csv``
    per-cell means and standard errors
``panel_*.tsv``
    one tab-separated file per metric and scenario, ready for plotting
``failures.csv``
    only written when some replication failed
``run_info.txt``
    the settings and estimator conventions behind the numbers
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .base_learners import LoessConfig
from .meta_learners import CateMethod, FitError, XLearnerConfig, evaluate_cate, fit_estimator
from .policy_eval import EvalGrid, NoOverlapError, ipw_value, misclassification, optimal_rule, sign_rule, emse
from .scenario_gen import (ScenarioSpec, analytic_value, builtin_names, builtin_scenario,
                           generate, load_spec, parse_key_values)
from .seeds import TEST, TRAIN, replication_seed

log = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "HTEITR_OUTPUT_DIR"

RECORD_COLUMNS = ("scenario", "m", "n", "rep", "estimator", "emse", "misclass",
                  "ipw_value", "analytic_value", "regret", "fit_seconds")
METRICS = ("emse", "misclass", "ipw_value", "analytic_value", "regret", "fit_seconds")
# metric -> (left-column letter, right-column letter) of the two-scenario figure
PANELS = {"emse": "AB", "misclass": "CD", "ipw_value": "EF", "fit_seconds": "GH"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one Monte Carlo run.

    ``m_list`` and ``n_list`` are zipped index-wise unless ``cartesian`` is
    set.  ``record_timing=False`` writes ``nan`` for ``fit_seconds`` so that
    ``records.csv`` is byte-reproducible.
    """

    scenarios: tuple = ("scenario1", "scenario2")
    m_list: tuple[int, ...] = (200, 400, 600, 800)
    n_list: tuple[int, ...] = (10, 20, 30, 40)
    test_m: int = 1000
    test_n: int = 50
    replications: int = 1000
    base_seed: int = 0
    estimators: tuple[CateMethod, ...] = (CateMethod.STANDARD, CateMethod.XLEARNER)
    loess_span: float = 0.75
    loess_degree: int = 1
    weight_mode: str | float = "propensity"
    output_dir: str = field(default_factory=lambda: os.environ.get(OUTPUT_DIR_ENV, "results"))
    cartesian: bool = False
    workers: int = 1
    record_timing: bool = True
    noise_sd: float | None = None

    def __post_init__(self):
        specs = tuple(s if isinstance(s, ScenarioSpec) else resolve_scenario(s) for s in self.scenarios)
        if self.noise_sd is not None:
            specs = tuple(replace(s, noise_sd=float(self.noise_sd)) for s in specs)
        object.__setattr__(self, "scenarios", specs)
        object.__setattr__(self, "m_list", tuple(int(v) for v in self.m_list))
        object.__setattr__(self, "n_list", tuple(int(v) for v in self.n_list))
        object.__setattr__(self, "estimators", tuple(
            e if isinstance(e, CateMethod) else CateMethod(str(e).strip().upper()) for e in self.estimators))
        if not specs:
            raise ConfigError("no scenarios configured")
        if len({s.name for s in specs}) != len(specs):
            raise ConfigError(f"scenario names must be unique, got {[s.name for s in specs]}")
        if not self.m_list or not self.n_list:
            raise ConfigError("m_list and n_list must be nonempty")
        if not self.cartesian and len(self.m_list) != len(self.n_list):
            raise ConfigError(
                f"m_list and n_list must have equal length, got {len(self.m_list)} and {len(self.n_list)}")
        if min(self.m_list + self.n_list + (self.test_m, self.test_n)) < 2:
            raise ConfigError("every arm size must be at least 2")
        if self.replications < 1:
            raise ConfigError(f"replications must be at least 1, got {self.replications}")
        if self.base_seed < 0:
            raise ConfigError(f"base_seed must be nonnegative, got {self.base_seed}")
        if not self.estimators or CateMethod.ORACLE in self.estimators:
            raise ConfigError("estimators must be a nonempty subset of STANDARD, XLEARNER")
        if len(set(self.estimators)) != len(self.estimators):
            raise ConfigError("estimators listed twice")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        try:
            self.xlearner_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def cells(self) -> list[tuple[int, int]]:
        if self.cartesian:
            return [(m, n) for m in self.m_list for n in self.n_list]
        return list(zip(self.m_list, self.n_list))

    def xlearner_config(self) -> XLearnerConfig:
        return XLearnerConfig(weight=self.weight_mode, loess=LoessConfig(self.loess_span, self.loess_degree))


def resolve_scenario(entry: str) -> ScenarioSpec:
    entry = str(entry).strip()
    if entry in builtin_names():
        return builtin_scenario(entry)
    if Path(entry).is_file():
        return load_spec(entry)
    raise ConfigError(f"scenario {entry!r} is neither built-in ({builtin_names()}) nor a scenario file")


_INT_LISTS = ("m_list", "n_list")
_INTS = ("test_m", "test_n", "replications", "base_seed", "workers", "loess_degree")
_FLOATS = ("loess_span", "noise_sd")
_BOOLS = ("cartesian", "record_timing")


def _bool(key: str, value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def config_from_mapping(kv: dict[str, str], base_dir: Path | None = None) -> ExperimentConfig:
    """Build a config from string values as found in a ``key = value`` file.

    Scenario file paths are resolved relative to ``base_dir``.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(kv) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    kwargs: dict = {}
    try:
        for key, value in kv.items():
            if key in _INT_LISTS:
                kwargs[key] = tuple(int(v) for v in value.split(",") if v.strip())
            elif key in _INTS:
                kwargs[key] = int(value)
            elif key in _FLOATS:
                kwargs[key] = float(value)
            elif key in _BOOLS:
                kwargs[key] = _bool(key, value)
            elif key == "estimators":
                kwargs[key] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key == "scenarios":
                entries = [v.strip() for v in value.split(",") if v.strip()]
                if base_dir is not None:
                    entries = [e if e in builtin_names() or Path(e).is_absolute() else str(base_dir / e)
                               for e in entries]
                kwargs[key] = tuple(entries)
            else:
                kwargs[key] = value
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    try:
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Read a flat ``key = value`` config file; list values are comma separated."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        kv = parse_key_values(text, str(path))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    kv.update({k: str(v) for k, v in overrides.items() if v is not None})
    return config_from_mapping(kv, path.parent)


@dataclass(frozen=True)
class MetricsRecord:
    scenario: str
    m: int
    n: int
    rep: int
    estimator: str
    emse: float
    misclass: float
    ipw_value: float
    analytic_value: float
    regret: float
    fit_seconds: float

    def __post_init__(self):
        if not self.emse >= 0:
            raise ValueError(f"emse must be nonnegative, got {self.emse}")
        if not 0.0 <= self.misclass <= 1.0:
            raise ValueError(f"misclassification must lie in [0, 1], got {self.misclass}")
        if not self.regret >= -1e-6:
            raise ValueError(f"regret below quadrature tolerance: {self.regret}")

    def row(self) -> list:
        return [getattr(self, c) if not isinstance(getattr(self, c), float) else repr(getattr(self, c))
                for c in RECORD_COLUMNS]


@dataclass(frozen=True)
class Failure:
    scenario: str
    m: int
    n: int
    rep: int
    estimator: str
    error: str


@dataclass
class RunResult:
    config: ExperimentConfig
    records: list[MetricsRecord]
    failures: list[Failure]
    loess_fallbacks: int = 0
    files: list[Path] = field(default_factory=list)


@dataclass(frozen=True)
class _Task:
    scenario_index: int
    spec: ScenarioSpec
    cell_index: int
    m: int
    n: int
    rep: int


def run_replication(cfg: ExperimentConfig, task: _Task) -> tuple[list[MetricsRecord], list[Failure], int]:
    """Fit and score every configured estimator on one replication."""
    spec, m, n, rep = task.spec, task.m, task.n, task.rep
    train = generate(spec, m, n, replication_seed(cfg.base_seed, task.scenario_index, m, n, rep, TRAIN))
    test = generate(spec, cfg.test_m, cfg.test_n,
                    replication_seed(cfg.base_seed, task.scenario_index, m, n, rep, TEST))
    grid = EvalGrid.from_dataset(test)
    propensity = cfg.test_n / (cfg.test_m + cfg.test_n)
    best_value = analytic_value(spec, optimal_rule(spec))
    xcfg = cfg.xlearner_config()

    records, failures, fallbacks = [], [], 0
    for method in cfg.estimators:
        try:
            est = fit_estimator(method, train, xcfg)
            pred, fb = evaluate_cate(est, grid.points, return_fallback=True)
            rule = sign_rule(est)
            value = analytic_value(spec, rule)
            record = MetricsRecord(
                scenario=spec.name, m=m, n=n, rep=rep, estimator=method.value,
                emse=emse(lambda _: pred, spec, grid),
                misclass=misclassification(sign_rule(lambda _: pred), spec, grid),
                ipw_value=ipw_value(rule, test, propensity),
                analytic_value=value,
                regret=best_value - value,
                fit_seconds=est.fit_wall_time if cfg.record_timing else math.nan,
            )
        except (FitError, NoOverlapError, ValueError, ArithmeticError) as exc:
            log.warning("replication %s m=%d n=%d rep=%d %s failed: %s",
                        spec.name, m, n, rep, method.value, exc)
            failures.append(Failure(spec.name, m, n, rep, method.value, f"{type(exc).__name__}: {exc}"))
            continue
        fallbacks += fb + est.fit_fallbacks
        records.append(record)
    return records, failures, fallbacks


def _run_task(args):
    cfg, task = args
    return task, run_replication(cfg, task)


def _tasks(cfg: ExperimentConfig) -> list[_Task]:
    return [
        _Task(si, spec, ci, m, n, rep)
        for si, spec in enumerate(cfg.scenarios)
        for ci, (m, n) in enumerate(cfg.cells())
        for rep in range(cfg.replications)
    ]


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> RunResult:
    """Run every replication of ``cfg`` and, if ``write``, emit the output files.

    Results are ordered by scenario, cell, replication and estimator whatever
    the number of workers.
    """
    tasks = _tasks(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            done = list(pool.map(_run_task, ((cfg, t) for t in tasks), chunksize=8))
    else:
        done = [_run_task((cfg, t)) for t in tasks]
    done.sort(key=lambda item: (item[0].scenario_index, item[0].cell_index, item[0].rep))

    est_order = {e.value: i for i, e in enumerate(cfg.estimators)}
    records, failures, fallbacks = [], [], 0
    for _, (recs, fails, fb) in done:
        records.extend(sorted(recs, key=lambda r: est_order[r.estimator]))
        failures.extend(fails)
        fallbacks += fb
    if fallbacks:
        log.info("%d LOESS queries fell back to a weighted mean", fallbacks)
    result = RunResult(cfg, records, failures, fallbacks)
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.files.append(write_run_info(cfg, out / "run_info.txt"))
        result.files.append(write_records(records, out / "records.csv"))
        result.files.append(write_summary(records, out / "summary.csv"))
        if failures:
            result.files.append(write_failures(failures, out / "failures.csv"))
        if records:
            result.files.extend(emit_plot_data(records, out))
    return result


def write_records(records: Iterable[MetricsRecord], path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow(r.row())
    return path


def write_run_info(cfg: ExperimentConfig, path: Path) -> Path:
    """Record the settings a reader needs to interpret the metric columns."""
    info = {
        "scenarios": ", ".join(s.name for s in cfg.scenarios),
        "noise_sd": ", ".join(repr(s.noise_sd) for s in cfg.scenarios),
        "cells": ", ".join(f"{m}/{n}" for m, n in cfg.cells()),
        "test_m": cfg.test_m,
        "test_n": cfg.test_n,
        "replications": cfg.replications,
        "base_seed": cfg.base_seed,
        "estimators": ", ".join(e.value for e in cfg.estimators),
        "loess_span": cfg.loess_span,
        "loess_degree": cfg.loess_degree,
        "xlearner_weight": cfg.weight_mode,
        "ipw_estimator": "normalized, sum(w * y) / sum(w) with w = 1{rule(x) = a} / p(a)",
        "test_points": "pooled test covariates, regenerated each replication",
        "summary_statistic": "mean with standard error across replications",
        "fit_seconds": "monotonic wall clock" if cfg.record_timing else "not recorded (nan)",
    }
    path.write_text("".join(f"{k} = {v}\n" for k, v in info.items()))
    return path


def write_failures(failures: Iterable[Failure], path: Path) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f.name for f in fields(Failure)])
        for f in failures:
            w.writerow([getattr(f, k.name) for k in fields(Failure)])
    return path


def read_records(path: str | Path) -> list[MetricsRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        MetricsRecord(
            scenario=r["scenario"], m=int(r["m"]), n=int(r["n"]), rep=int(r["rep"]),
            estimator=r["estimator"], emse=float(r["emse"]), misclass=float(r["misclass"]),
            ipw_value=float(r["ipw_value"]), analytic_value=float(r["analytic_value"]),
            regret=float(r["regret"]), fit_seconds=float(r["fit_seconds"]),
        )
        for r in rows
    ]


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(values, dtype=float)
    mean = float(np.mean(a))
    se = float(np.std(a, ddof=1) / np.sqrt(a.size)) if a.size > 1 else math.nan
    return mean, se


def _groups(records: Iterable[MetricsRecord]) -> dict[tuple, list[MetricsRecord]]:
    """Records grouped by (scenario, m, n, estimator), in first-seen order."""
    out: dict[tuple, list[MetricsRecord]] = {}
    for r in records:
        out.setdefault((r.scenario, r.m, r.n, r.estimator), []).append(r)
    return out


def summarize(records: Iterable[MetricsRecord]) -> list[dict]:
    rows = []
    for (scenario, m, n, est), group in _groups(records).items():
        row = {"scenario": scenario, "m": m, "n": n, "estimator": est, "count": len(group)}
        for metric in METRICS:
            row[f"{metric}_mean"], row[f"{metric}_se"] = _mean_se([getattr(r, metric) for r in group])
        rows.append(row)
    return rows


def write_summary(records: Iterable[MetricsRecord], path: Path) -> Path:
    rows = summarize(records)
    header = ["scenario", "m", "n", "estimator", "count"]
    header += [f"{m}_{s}" for m in METRICS for s in ("mean", "se")]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(row[h]) if isinstance(row[h], float) else row[h] for h in header])
    return path


def emit_plot_data(records: Sequence[MetricsRecord], output_dir: str | Path) -> list[Path]:
    """Write one tab-separated panel file per (metric, scenario).

    Rows are the ``(m, n)`` cells in run order, indexed from 0; for each
    estimator there is a mean and a standard-error column.  With at most two
    scenarios the files carry the panel letter of the two-column figure
    layout (scenario 1 on the left).
    """
    if not records:
        raise ValueError("no records to plot")
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    groups = _groups(records)
    scenarios = list(dict.fromkeys(r.scenario for r in records))
    estimators = list(dict.fromkeys(r.estimator for r in records))
    paths = []
    for si, scenario in enumerate(scenarios):
        cells = list(dict.fromkeys((r.m, r.n) for r in records if r.scenario == scenario))
        for metric, letters in PANELS.items():
            prefix = f"panel_{letters[si]}_" if len(scenarios) <= 2 else "panel_"
            path = output_dir / f"{prefix}{metric}_{scenario}.tsv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, delimiter="\t", lineterminator="\n")
                w.writerow(["cell"] + [f"{e}_{s}" for e in estimators for s in ("mean", "se")])
                for ci, (m, n) in enumerate(cells):
                    row = [ci]
                    for e in estimators:
                        group = groups.get((scenario, m, n, e), [])
                        mean, se = _mean_se([getattr(r, metric) for r in group]) if group else (math.nan,) * 2
                        row += [repr(mean), repr(se)]
                    w.writerow(row)
            paths.append(path)
    return paths
