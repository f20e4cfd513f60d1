"""CATE estimators built from the base learners.

``fit_standard`` differences two per-arm response fits.  ``fit_xlearner``
imputes individual effects across arms, regresses them per arm and blends
the two effect curves with weight ``g`` on the control-arm curve.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike

from .base_learners import FittedCurve, LoessConfig, Method, evaluate, fit
from .scenario_gen import CONTROL, TREATED, ScenarioSpec, TrialDataset, true_cate


class CateMethod(str, Enum):
    STANDARD = "STANDARD"
    XLEARNER = "XLEARNER"
    ORACLE = "ORACLE"


class FitError(RuntimeError):
    """A base-learner failure, annotated with the arm or stage it came from."""


@dataclass(frozen=True)
class XLearnerConfig:
    """Learner choices for the X-learner.

    ``weight`` is ``"propensity"`` (``g = n / N``) or a fixed float in [0, 1].
    """

    stage1_control: Method = Method.LOESS
    stage1_treated: Method = Method.OLS
    stage2_control: Method = Method.LOESS
    stage2_treated: Method = Method.OLS
    weight: str | float = "propensity"
    loess: LoessConfig = field(default_factory=LoessConfig)

    def __post_init__(self):
        for name in ("stage1_control", "stage1_treated", "stage2_control", "stage2_treated"):
            value = getattr(self, name)
            if not isinstance(value, Method):
                object.__setattr__(self, name, Method(str(value).upper()))
        if isinstance(self.weight, str):
            if self.weight != "propensity":
                object.__setattr__(self, "weight", float(self.weight))
        if not isinstance(self.weight, str) and not 0.0 <= float(self.weight) <= 1.0:
            raise ValueError(f"fixed X-learner weight must lie in [0, 1], got {self.weight}")

    def g(self, data: TrialDataset) -> float:
        if self.weight == "propensity":
            return data.n / (data.m + data.n)
        return float(self.weight)


@dataclass(frozen=True)
class CateEstimate:
    """An evaluable treatment-effect estimate ``tau_hat(x)``.

    ``components`` holds ``mu0`` and ``mu1`` for both fitted methods and
    additionally ``tau0`` and ``tau1`` for the X-learner.  ``fit_fallbacks``
    counts degenerate LOESS queries hit while fitting.
    """

    method: CateMethod
    components: dict[str, FittedCurve] = field(repr=False)
    fit_wall_time: float = 0.0
    g: float | None = None
    fit_fallbacks: int = 0
    truth: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.g is not None and not 0.0 <= self.g <= 1.0:
            raise ValueError(f"X-learner weight g must lie in [0, 1], got {self.g}")

    def __call__(self, x: ArrayLike):
        return evaluate_cate(self, x)


def _fit_arm(label, method, xs, ys, loess):
    try:
        return fit(method, xs, ys, loess)
    except ValueError as exc:
        raise FitError(f"{label}: {exc}") from exc


def fit_standard(data: TrialDataset, loess: LoessConfig | None = None,
                 control: Method = Method.LOESS, treated: Method = Method.OLS) -> CateEstimate:
    """Difference of per-arm fits, LOESS on control and OLS on treated by default."""
    t0 = time.perf_counter()
    x0, y0 = data.arm(CONTROL)
    x1, y1 = data.arm(TREATED)
    mu0 = _fit_arm("control arm", control, x0, y0, loess)
    mu1 = _fit_arm("treated arm", treated, x1, y1, loess)
    elapsed = time.perf_counter() - t0
    return CateEstimate(CateMethod.STANDARD, {"mu0": mu0, "mu1": mu1}, elapsed)


def fit_xlearner(data: TrialDataset, cfg: XLearnerConfig | None = None) -> CateEstimate:
    """Fit the four-stage X-learner; the recorded wall time covers every stage."""
    cfg = cfg or XLearnerConfig()
    t0 = time.perf_counter()
    x0, y0 = data.arm(CONTROL)
    x1, y1 = data.arm(TREATED)
    mu0 = _fit_arm("stage 1, control arm", cfg.stage1_control, x0, y0, cfg.loess)
    mu1 = _fit_arm("stage 1, treated arm", cfg.stage1_treated, x1, y1, cfg.loess)

    mu0_at_treated, fb1 = evaluate(mu0, x1, return_fallback=True)
    mu1_at_control, fb0 = evaluate(mu1, x0, return_fallback=True)
    d1 = y1 - mu0_at_treated
    d0 = mu1_at_control - y0

    tau1 = _fit_arm("stage 2, treated arm", cfg.stage2_treated, x1, d1, cfg.loess)
    tau0 = _fit_arm("stage 2, control arm", cfg.stage2_control, x0, d0, cfg.loess)
    g = cfg.g(data)
    elapsed = time.perf_counter() - t0
    return CateEstimate(
        CateMethod.XLEARNER,
        {"mu0": mu0, "mu1": mu1, "tau0": tau0, "tau1": tau1},
        elapsed,
        g=g,
        fit_fallbacks=int(fb0.sum() + fb1.sum()),
    )


def oracle_estimate(spec: ScenarioSpec) -> CateEstimate:
    """A zero-cost estimate that returns the true effect."""
    return CateEstimate(CateMethod.ORACLE, {}, 0.0, truth=lambda x: true_cate(spec, x))


def evaluate_cate(est: CateEstimate, x: ArrayLike, return_fallback: bool = False):
    """Evaluate ``tau_hat`` at ``x``.

    With ``return_fallback=True`` also returns the number of degenerate
    LOESS queries hit during this evaluation.
    """
    c = est.components
    if est.method is CateMethod.STANDARD:
        a, fa = evaluate(c["mu1"], x, return_fallback=True)
        b, fb = evaluate(c["mu0"], x, return_fallback=True)
        out = a - b
    elif est.method is CateMethod.XLEARNER:
        a, fa = evaluate(c["tau0"], x, return_fallback=True)
        b, fb = evaluate(c["tau1"], x, return_fallback=True)
        out = est.g * a + (1.0 - est.g) * b
    elif est.method is CateMethod.ORACLE:
        out = est.truth(x)
        fa = fb = np.zeros(np.shape(x), dtype=bool)
    else:
        raise ValueError(f"unknown CATE method {est.method!r}")
    if return_fallback:
        return out, int(np.sum(fa) + np.sum(fb))
    return out


ESTIMATORS = {
    CateMethod.STANDARD: lambda data, cfg: fit_standard(data, cfg.loess),
    CateMethod.XLEARNER: lambda data, cfg: fit_xlearner(data, cfg),
}


def fit_estimator(method: CateMethod | str, data: TrialDataset,
                  cfg: XLearnerConfig | None = None) -> CateEstimate:
    """Fit ``method`` on ``data``; ``cfg`` supplies the LOESS setup for both."""
    if not isinstance(method, CateMethod):
        method = CateMethod(method.upper())
    if method not in ESTIMATORS:
        raise ValueError(f"{method.value} cannot be fitted from data")
    return ESTIMATORS[method](data, cfg or XLearnerConfig())
