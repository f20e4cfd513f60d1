"""Empirical membership checks for the three estimator-comparison families.

Given two CATE strategies, a scenario and a sample size, the report
estimates by Monte Carlo whether strategy 1 beats strategy 2 on

* expected squared error (S0),
* squared error at every point of a grid (S1),
* expected misclassification of the implied sign rule (S2),

and classifies every grid point into one of the three pointwise cases.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .meta_learners import CateEstimate, FitError, XLearnerConfig, fit_estimator, oracle_estimate
from .policy_eval import EvalGrid, emse, misclassification, sign, sign_rule
from .scenario_gen import ScenarioSpec, TrialDataset, generate, true_cate
from .seeds import replication_seed


class PointwiseCase(str, Enum):
    SAME_ERROR = "SAME_ERROR"
    WORSENED = "WORSENED"
    IMPROVED = "IMPROVED"


def classify_point(tau: float, t1: float, t2: float) -> PointwiseCase:
    """Compare the pointwise 0-1 errors of two sign rules at one covariate."""
    d0 = 1 if tau >= 0 else -1
    ok1 = (1 if t1 >= 0 else -1) == d0
    ok2 = (1 if t2 >= 0 else -1) == d0
    if ok1 == ok2:
        return PointwiseCase.SAME_ERROR
    return PointwiseCase.IMPROVED if ok1 else PointwiseCase.WORSENED


def classify_points(tau: ArrayLike, t1: ArrayLike, t2: ArrayLike) -> NDArray:
    """Vectorized :func:`classify_point`: -1 worsened, 0 same, +1 improved."""
    d0 = sign(tau)
    err1 = sign(t1) != d0
    err2 = sign(t2) != d0
    return err2.astype(np.int64) - err1.astype(np.int64)


def s1_check(est1: Callable, est2: Callable, spec: ScenarioSpec, grid: EvalGrid) -> tuple[bool, int]:
    """Whether ``est1`` has strictly smaller squared error at every grid point.

    Returns ``(holds, violations)`` where ``violations`` counts the grid
    points at which the strict inequality fails.
    """
    tau = true_cate(spec, grid.points)
    e1 = (np.asarray(est1(grid.points)) - tau) ** 2
    e2 = (np.asarray(est2(grid.points)) - tau) ** 2
    violations = int(np.count_nonzero(~(e1 < e2)))
    return violations == 0, violations


Strategy = Union[str, Callable[[TrialDataset, ScenarioSpec], CateEstimate]]


def _resolve(method: Strategy, cfg: XLearnerConfig) -> Callable[[TrialDataset, ScenarioSpec], CateEstimate]:
    if callable(method):
        return method
    name = str(method).upper()
    if name == "ORACLE":
        return lambda data, spec: oracle_estimate(spec)
    return lambda data, spec: fit_estimator(name, data, cfg)


def _name(method: Strategy) -> str:
    return str(method).upper() if not callable(method) else getattr(method, "__name__", "custom")


@dataclass(frozen=True)
class Indicator:
    holds: bool
    gap: float
    se: float


@dataclass
class MembershipReport:
    """Monte Carlo evidence on the three family memberships.

    ``gap`` is strategy 2's mean minus strategy 1's, so positive gaps favour
    strategy 1.  S0 and S2 memberships are declared when the gap exceeds
    ``threshold`` standard errors.  ``s1_fraction`` is the share of
    replications whose grid check held; ``in_s1`` requires all of them.
    """

    method1: str
    method2: str
    scenario: str
    m: int
    n: int
    in_s0: Indicator
    in_s1: bool
    s1_fraction: float
    s1_violations: int
    in_s2: Indicator
    grid_size: int
    replications: int
    failures: int = 0
    threshold: float = 2.0
    case_counts: dict[str, int] = field(default_factory=dict)
    nesting_violations: int = 0
    s2_without_s1: bool = False
    emse1: list[float] = field(default_factory=list, repr=False)
    emse2: list[float] = field(default_factory=list, repr=False)
    s1_holds: list[bool] = field(default_factory=list, repr=False)

    def rows(self) -> list[tuple[str, str]]:
        return [
            ("method1", self.method1),
            ("method2", self.method2),
            ("scenario", self.scenario),
            ("m", str(self.m)),
            ("n", str(self.n)),
            ("replications", str(self.replications)),
            ("failures", str(self.failures)),
            ("grid_size", str(self.grid_size)),
            ("threshold_se", repr(self.threshold)),
            ("in_s0", str(self.in_s0.holds)),
            ("emse_gap", repr(self.in_s0.gap)),
            ("emse_gap_se", repr(self.in_s0.se)),
            ("in_s1", str(self.in_s1)),
            ("s1_fraction", repr(self.s1_fraction)),
            ("s1_violations", str(self.s1_violations)),
            ("in_s2", str(self.in_s2.holds)),
            ("misclass_gap", repr(self.in_s2.gap)),
            ("misclass_gap_se", repr(self.in_s2.se)),
            *((f"cases_{k.lower()}", str(v)) for k, v in self.case_counts.items()),
            ("nesting_violations", str(self.nesting_violations)),
            ("s2_without_s1", str(self.s2_without_s1)),
        ]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["field", "value"])
        w.writerows(self.rows())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_text(self) -> str:
        s0, s2 = self.in_s0, self.in_s2
        lines = [
            f"{self.method1} vs {self.method2} on {self.scenario} (m={self.m}, n={self.n}), "
            f"{self.replications} replications, {self.grid_size}-point grid",
            f"  S0 (mean squared error)   : {'yes' if s0.holds else 'no'}  "
            f"gap {s0.gap:+.6g} (se {s0.se:.3g})",
            f"  S1 (pointwise sq. error)  : {'yes' if self.in_s1 else 'no'}  "
            f"held in {self.s1_fraction:.1%} of replications, {self.s1_violations} point violations",
            f"  S2 (misclassification)    : {'yes' if s2.holds else 'no'}  "
            f"gap {s2.gap:+.6g} (se {s2.se:.3g})",
            "  pointwise cases           : "
            + ", ".join(f"{k.lower()}={v}" for k, v in self.case_counts.items()),
        ]
        if self.failures:
            lines.append(f"  failed replications       : {self.failures}")
        if self.nesting_violations:
            lines.append(f"  S1 held without a smaller squared error in {self.nesting_violations} replications")
        if self.s2_without_s1:
            lines.append("  note: misclassification improved without pointwise squared-error dominance")
        return "\n".join(lines)


def _indicator(gaps: NDArray, threshold: float) -> Indicator:
    gap = float(np.mean(gaps))
    se = float(np.std(gaps, ddof=1) / np.sqrt(gaps.size)) if gaps.size > 1 else float("nan")
    return Indicator(bool(gap > threshold * se), gap, se)


def membership_report(method1: Strategy, method2: Strategy, spec: ScenarioSpec, m: int, n: int,
                      replications: int, seed: int, grid_size: int = 1001,
                      cfg: XLearnerConfig | None = None, threshold: float = 2.0) -> MembershipReport:
    """Estimate family memberships of strategy 1 against strategy 2.

    Each replication draws a training set from ``spec`` with a seed derived
    from ``(seed, m, n, rep)``, fits both strategies on it and scores them on
    a uniform ``grid_size``-point grid.  Strategies are ``"standard"``,
    ``"xlearner"``, ``"oracle"`` or a callable ``(data, spec) -> estimate``.
    """
    if replications < 2:
        raise ValueError(f"membership_report needs at least 2 replications, got {replications}")
    cfg = cfg or XLearnerConfig()
    f1, f2 = _resolve(method1, cfg), _resolve(method2, cfg)
    grid = EvalGrid.uniform(spec, grid_size)
    tau = true_cate(spec, grid.points)
    keep = tau != 0

    emse1, emse2, mis1, mis2, s1_holds = [], [], [], [], []
    s1_violations = 0
    cases = np.zeros(3, dtype=np.int64)
    failures = 0
    for rep in range(replications):
        data = generate(spec, m, n, replication_seed(seed, 0, m, n, rep))
        try:
            e1, e2 = f1(data, spec), f2(data, spec)
        except (FitError, ValueError, ArithmeticError):
            failures += 1
            continue
        p1 = np.asarray(e1(grid.points))
        p2 = np.asarray(e2(grid.points))
        emse1.append(emse(lambda _: p1, spec, grid))
        emse2.append(emse(lambda _: p2, spec, grid))
        mis1.append(misclassification(sign_rule(lambda _: p1), spec, grid))
        mis2.append(misclassification(sign_rule(lambda _: p2), spec, grid))
        holds, violations = s1_check(lambda _: p1, lambda _: p2, spec, grid)
        s1_holds.append(holds)
        s1_violations += violations
        codes = classify_points(tau[keep], p1[keep], p2[keep])
        cases += np.bincount(codes + 1, minlength=3)

    done = len(emse1)
    if done < 2:
        raise RuntimeError(f"only {done} of {replications} replications succeeded")
    emse1, emse2 = np.array(emse1), np.array(emse2)
    in_s0 = _indicator(emse2 - emse1, threshold)
    in_s2 = _indicator(np.array(mis2) - np.array(mis1), threshold)
    in_s1 = all(s1_holds)
    nesting = int(sum(h and not a < b for h, a, b in zip(s1_holds, emse1, emse2)))
    return MembershipReport(
        method1=_name(method1),
        method2=_name(method2),
        scenario=spec.name,
        m=m,
        n=n,
        in_s0=in_s0,
        in_s1=in_s1,
        s1_fraction=float(np.mean(s1_holds)),
        s1_violations=s1_violations,
        in_s2=in_s2,
        grid_size=grid_size,
        replications=done,
        failures=failures,
        threshold=threshold,
        case_counts={
            PointwiseCase.WORSENED.value: int(cases[0]),
            PointwiseCase.SAME_ERROR.value: int(cases[1]),
            PointwiseCase.IMPROVED.value: int(cases[2]),
        },
        nesting_violations=nesting,
        s2_without_s1=in_s2.holds and not in_s1,
        emse1=emse1.tolist(),
        emse2=emse2.tolist(),
        s1_holds=s1_holds,
    )


__all__ = [
    "Indicator",
    "MembershipReport",
    "PointwiseCase",
    "classify_point",
    "classify_points",
    "membership_report",
    "s1_check",
]
