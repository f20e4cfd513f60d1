"""Univariate regression primitives: ordinary least squares and LOESS.

LOESS is lazy: fitting stores the sorted training data and every
evaluation solves its own tricube-weighted local polynomial problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numba
import numpy as np
from numpy.typing import ArrayLike, NDArray


class Method(str, Enum):
    OLS = "OLS"
    LOESS = "LOESS"


@dataclass(frozen=True)
class LoessConfig:
    span: float = 0.75
    degree: int = 1

    def __post_init__(self):
        if not 0.0 < self.span <= 1.0:
            raise ValueError(f"span must lie in (0, 1], got {self.span}")
        if self.degree not in (0, 1):
            raise ValueError(f"degree must be 0 or 1, got {self.degree}")

    def neighbourhood_size(self, n_points: int) -> int:
        # guard against span * n landing a hair above an integer
        return min(n_points, math.ceil(self.span * n_points - 1e-9))


@dataclass(frozen=True)
class FittedCurve:
    """An evaluable univariate regression estimate.

    For OLS ``params`` holds ``intercept`` and ``slope``; for LOESS it holds
    the sorted training points plus ``span``, ``degree`` and the
    neighbourhood size ``k``.
    """

    method: Method
    params: dict = field(repr=False)
    train_min: float
    train_max: float

    def __call__(self, x: ArrayLike):
        return evaluate(self, x)


class InsufficientDataError(ValueError):
    pass


class SingularDesignError(ValueError):
    pass


def _as_xy(xs: ArrayLike, ys: ArrayLike) -> tuple[NDArray, NDArray]:
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.shape != ys.shape:
        raise ValueError(f"xs and ys differ in length: {xs.size} vs {ys.size}")
    return xs, ys


def fit_ols(xs: ArrayLike, ys: ArrayLike) -> FittedCurve:
    """Least-squares line ``y = intercept + slope * x``."""
    xs, ys = _as_xy(xs, ys)
    if xs.size < 2:
        raise InsufficientDataError(f"OLS needs at least 2 points, got {xs.size}")
    xbar = xs.mean()
    dx = xs - xbar
    sxx = np.dot(dx, dx)
    if sxx == 0.0:
        raise SingularDesignError("OLS design is singular: all x values are identical")
    ybar = ys.mean()
    slope = np.dot(dx, ys - ybar) / sxx
    intercept = ybar - slope * xbar
    return FittedCurve(
        Method.OLS,
        {"intercept": float(intercept), "slope": float(slope)},
        float(xs.min()),
        float(xs.max()),
    )


def fit_loess(xs: ArrayLike, ys: ArrayLike, cfg: LoessConfig | None = None) -> FittedCurve:
    """Store the training data for tricube-weighted local regression.

    Each query uses the ``k = ceil(span * N)`` nearest training points.
    """
    cfg = cfg or LoessConfig()
    xs, ys = _as_xy(xs, ys)
    n_points = xs.size
    k = cfg.neighbourhood_size(n_points)
    if n_points < 4:
        raise InsufficientDataError(f"LOESS needs at least 4 points, got {n_points}")
    if k < cfg.degree + 2:
        raise InsufficientDataError(
            f"LOESS neighbourhood of {k} points (span={cfg.span}, N={n_points}) "
            f"is below degree + 2 = {cfg.degree + 2}"
        )
    order = np.argsort(xs, kind="stable")
    sx = np.ascontiguousarray(xs[order])
    sy = np.ascontiguousarray(ys[order])
    sx.setflags(write=False)
    sy.setflags(write=False)
    return FittedCurve(
        Method.LOESS,
        {"x": sx, "y": sy, "span": cfg.span, "degree": cfg.degree, "k": k},
        float(sx[0]),
        float(sx[-1]),
    )


_RO = numba.types.Array(numba.float64, 1, "C", readonly=True)


@numba.njit(
    numba.types.Tuple((numba.float64[:], numba.boolean[:]))(
        _RO, _RO, numba.float64[::1], numba.int64, numba.int64
    ),
    cache=True,
    nogil=True,
)
def _loess_kernel(sx, sy, q, k, degree):
    n = sx.size
    out = np.empty(q.size)
    fallback = np.zeros(q.size, dtype=np.bool_)
    # midpoint sums decide where the k-window sits: shifting right pays off
    # exactly while sx[i] + sx[i + k] < 2 q
    n_sums = n - k
    sums = np.empty(n_sums)
    for i in range(n_sums):
        sums[i] = sx[i] + sx[i + k]
    for j in range(q.size):
        x0 = q[j]
        lo = np.searchsorted(sums, 2.0 * x0) if n_sums > 0 else 0
        hi = lo + k
        dmax = max(x0 - sx[lo], sx[hi - 1] - x0)
        s0 = s1 = s2 = t0 = t1 = 0.0
        for i in range(lo, hi):
            u = sx[i] - x0
            if dmax > 0.0:
                r = abs(u) / dmax
                if r >= 1.0:
                    continue
                c = 1.0 - r * r * r
                w = c * c * c
            else:
                w = 1.0
            s0 += w
            s1 += w * u
            s2 += w * u * u
            t0 += w * sy[i]
            t1 += w * u * sy[i]
        if s0 <= 0.0:
            # every window point sits exactly at dmax
            acc = 0.0
            for i in range(lo, hi):
                acc += sy[i]
            out[j] = acc / k
            fallback[j] = True
            continue
        if degree == 0:
            out[j] = t0 / s0
            continue
        det = s0 * s2 - s1 * s1
        if det <= 1e-12 * s0 * s2 or det <= 0.0:
            out[j] = t0 / s0
            fallback[j] = True
        else:
            out[j] = (s2 * t0 - s1 * t1) / det
    return out, fallback


def evaluate(curve: FittedCurve, x: ArrayLike, return_fallback: bool = False):
    """Predict at ``x``.

    OLS extends its global line beyond the training range; LOESS clamps
    ``x`` to ``[train_min, train_max]``.  With ``return_fallback=True`` a
    boolean mask marks LOESS queries whose local design was degenerate and
    which fell back to a weighted mean.
    """
    scalar = np.ndim(x) == 0
    xq = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if curve.method is Method.OLS:
        y = curve.params["intercept"] + curve.params["slope"] * xq
        fb = np.zeros(xq.shape, dtype=bool)
    elif curve.method is Method.LOESS:
        p = curve.params
        xq = np.ascontiguousarray(np.clip(xq, curve.train_min, curve.train_max))
        y, fb = _loess_kernel(p["x"], p["y"], xq, p["k"], p["degree"])
    else:
        raise ValueError(f"unknown curve method {curve.method!r}")
    if scalar:
        y, fb = float(y[0]), bool(fb[0])
    else:
        y = y.reshape(np.shape(x))
        fb = fb.reshape(np.shape(x))
    return (y, fb) if return_fallback else y


def fit(method: Method | str, xs: ArrayLike, ys: ArrayLike, loess: LoessConfig | None = None) -> FittedCurve:
    if not isinstance(method, Method):
        method = Method(method.upper())
    if method is Method.OLS:
        return fit_ols(xs, ys)
    return fit_loess(xs, ys, loess)
