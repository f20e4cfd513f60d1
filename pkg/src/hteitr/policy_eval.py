"""Treatment rules and the metrics that score estimates and rules."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .scenario_gen import TREATED, ScenarioSpec, TrialDataset, analytic_value, true_cate


class RuleSource(str, Enum):
    OPTIMAL = "OPTIMAL"
    FROM_CATE = "FROM_CATE"
    CONSTANT = "CONSTANT"
    CUSTOM = "CUSTOM"


@dataclass(frozen=True)
class TreatmentRule:
    """Map from covariates to arms in ``{-1, +1}``."""

    decide: Callable[[NDArray], NDArray]
    source: RuleSource = RuleSource.CUSTOM

    def __call__(self, x: ArrayLike):
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        d = np.broadcast_to(np.asarray(self.decide(xs)), xs.shape).astype(np.int64)
        return int(d[0]) if scalar else d


def sign(values: ArrayLike) -> NDArray:
    """Sign with ``sign(0) = +1`` so that rules stay total."""
    return np.where(np.asarray(values) < 0, -1, 1)


def sign_rule(tau: Callable[[NDArray], NDArray], source: RuleSource = RuleSource.FROM_CATE) -> TreatmentRule:
    """Treat exactly where ``tau`` is nonnegative."""
    return TreatmentRule(lambda x: sign(tau(x)), source)


def optimal_rule(spec: ScenarioSpec) -> TreatmentRule:
    return sign_rule(lambda x: true_cate(spec, x), RuleSource.OPTIMAL)


def constant_rule(arm: int) -> TreatmentRule:
    if arm not in (-1, 1):
        raise ValueError(f"arm must be -1 or +1, got {arm!r}")
    return TreatmentRule(lambda x: np.full(np.shape(x), arm), RuleSource.CONSTANT)


class GridSource(str, Enum):
    TEST_DATASET = "TEST_DATASET"
    UNIFORM_GRID = "UNIFORM_GRID"


@dataclass(frozen=True)
class EvalGrid:
    points: NDArray
    source: GridSource = GridSource.UNIFORM_GRID

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size == 0:
            raise ValueError("evaluation grid is empty")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, spec: ScenarioSpec, size: int = 1001) -> EvalGrid:
        return cls(np.linspace(spec.x_low, spec.x_high, size), GridSource.UNIFORM_GRID)

    @classmethod
    def from_dataset(cls, data: TrialDataset) -> EvalGrid:
        return cls(np.array(data.x), GridSource.TEST_DATASET)

    def __len__(self) -> int:
        return self.points.size


def emse(est: Callable[[NDArray], NDArray], spec: ScenarioSpec, grid: EvalGrid) -> float:
    """Mean squared error of ``est`` against the true effect over the grid."""
    err = np.asarray(est(grid.points)) - true_cate(spec, grid.points)
    return float(np.mean(err * err))


def misclassification(rule: TreatmentRule, spec: ScenarioSpec, grid: EvalGrid) -> float:
    """Fraction of grid points where ``rule`` disagrees with the optimal rule."""
    best = optimal_rule(spec)(grid.points)
    return float(np.mean(rule(grid.points) != best))


class NoOverlapError(ValueError):
    """No observed assignment agrees with the rule being evaluated."""


def ipw_value(rule: TreatmentRule, data: TrialDataset, propensity: float) -> float:
    """Normalized inverse-propensity estimate of the value of ``rule``.

    ``propensity`` is the known probability of assignment to ``+1``.  The
    estimate is ``sum(w * y) / sum(w)`` with ``w = 1{rule(x) = a} / p(a)``.
    """
    if not 0.0 < propensity < 1.0:
        raise ValueError(f"propensity must lie strictly inside (0, 1), got {propensity}")
    match = rule(data.x) == data.a
    if not match.any():
        raise NoOverlapError(f"rule agrees with none of the {len(data)} observed assignments")
    p = np.where(data.a == TREATED, propensity, 1.0 - propensity)
    w = match / p
    return float(np.dot(w, data.y) / w.sum())


@dataclass(frozen=True)
class RegretReport:
    regret: float
    rmse: float
    ratio: float


def regret_report(rule: TreatmentRule, est: Callable[[NDArray], NDArray],
                  spec: ScenarioSpec, grid: EvalGrid) -> RegretReport:
    """Value lost by ``rule`` next to the estimation error of ``est``.

    ``ratio = regret / rmse`` is a diagnostic only; it is NaN when both are 0
    and infinite when only the rmse is 0.
    """
    regret = analytic_value(spec, optimal_rule(spec)) - analytic_value(spec, rule)
    rmse = float(np.sqrt(emse(est, spec, grid)))
    if rmse > 0:
        ratio = regret / rmse
    else:
        ratio = float("nan") if regret == 0 else float("inf")
    return RegretReport(regret, rmse, ratio)
