"""Piecewise-constant two-arm trial scenarios.

A scenario fixes the response level of each arm on each covariate interval,
the covariate range and the noise scale.  Intervals are half-open
``[lo, hi)`` with the last one closed at ``x_high``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

CONTROL = -1
TREATED = 1

QUADRATURE_POINTS = 10_001


@dataclass(frozen=True)
class ScenarioSpec:
    """Generative description of a randomized two-arm trial.

    Attributes
    ----------
    name : str
        Identifier, e.g. ``"scenario1"``.
    breakpoints : tuple of float
        Strictly increasing cut points inside ``(x_low, x_high)``.
    mu0_levels, mu1_levels : tuple of float
        Control / treated response level for each interval.
    x_low, x_high : float
        Covariate range; covariates are uniform on it.
    noise_sd : float
        Standard deviation of the Gaussian response noise.
    """

    name: str
    breakpoints: tuple[float, ...]
    mu0_levels: tuple[float, ...]
    mu1_levels: tuple[float, ...]
    x_low: float = -1.0
    x_high: float = 1.0
    noise_sd: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(float(b) for b in self.breakpoints))
        object.__setattr__(self, "mu0_levels", tuple(float(v) for v in self.mu0_levels))
        object.__setattr__(self, "mu1_levels", tuple(float(v) for v in self.mu1_levels))
        if not self.x_low < self.x_high:
            raise ValueError(f"x_low must be below x_high, got [{self.x_low}, {self.x_high}]")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be nonnegative, got {self.noise_sd}")
        bps = self.breakpoints
        if any(b >= c for b, c in zip(bps, bps[1:])):
            raise ValueError(f"breakpoints must be strictly increasing: {bps}")
        if bps and not (self.x_low < bps[0] and bps[-1] < self.x_high):
            raise ValueError(f"breakpoints must lie strictly inside ({self.x_low}, {self.x_high})")
        k = len(bps) + 1
        if len(self.mu0_levels) != k or len(self.mu1_levels) != k:
            raise ValueError(
                f"expected {k} levels per arm for {len(bps)} breakpoints, got "
                f"{len(self.mu0_levels)} control and {len(self.mu1_levels)} treated"
            )

    def levels(self, arm: int) -> NDArray:
        if arm == TREATED:
            return np.asarray(self.mu1_levels)
        if arm == CONTROL:
            return np.asarray(self.mu0_levels)
        raise ValueError(f"arm must be -1 or +1, got {arm!r}")

    def interval_probabilities(self) -> NDArray:
        edges = np.array([self.x_low, *self.breakpoints, self.x_high])
        return np.diff(edges) / (self.x_high - self.x_low)


_BUILTIN = {
    "scenario1": ScenarioSpec(
        name="scenario1",
        breakpoints=(-0.4, 0.5),
        mu0_levels=(1.0, 1.5, 1.0),
        mu1_levels=(1.1, 1.6, 1.1),
    ),
    "scenario2": ScenarioSpec(
        name="scenario2",
        breakpoints=(-0.4, 0.5),
        mu0_levels=(1.0, 1.5, 1.0),
        mu1_levels=(1.6, 2.1, 1.6),
    ),
}


def builtin_scenario(name: str) -> ScenarioSpec:
    """Return one of the two built-in scenarios by name."""
    try:
        return _BUILTIN[name]
    except KeyError:
        raise ValueError(
            f"unknown scenario {name!r}; built-in scenarios are {sorted(_BUILTIN)}"
        ) from None


def builtin_names() -> list[str]:
    return sorted(_BUILTIN)


def _check_domain(spec: ScenarioSpec, x: NDArray) -> None:
    if np.any(np.isnan(x)) or np.any(x < spec.x_low) or np.any(x > spec.x_high):
        bad = x[np.isnan(x) | (x < spec.x_low) | (x > spec.x_high)]
        raise ValueError(
            f"covariate {bad.flat[0]!r} outside [{spec.x_low}, {spec.x_high}] for {spec.name}"
        )


def interval_index(spec: ScenarioSpec, x: ArrayLike) -> NDArray:
    x = np.asarray(x, dtype=float)
    _check_domain(spec, x)
    # side="right" puts a breakpoint into the interval on its right
    return np.searchsorted(np.asarray(spec.breakpoints), x, side="right")


def true_mu(spec: ScenarioSpec, arm: int | ArrayLike, x: ArrayLike):
    """Mean response of ``arm`` at covariate ``x``.

    ``arm`` may be a scalar or an array broadcastable against ``x``.
    Returns a float for scalar input, an array otherwise.
    """
    scalar = np.ndim(x) == 0 and np.ndim(arm) == 0
    idx = interval_index(spec, x)
    arm = np.asarray(arm)
    if not np.all(np.isin(arm, (CONTROL, TREATED))):
        raise ValueError(f"arm labels must be -1 or +1, got {np.unique(arm)}")
    out = np.where(arm == TREATED, spec.levels(TREATED)[idx], spec.levels(CONTROL)[idx])
    return float(out) if scalar else out


def true_cate(spec: ScenarioSpec, x: ArrayLike):
    """True conditional average treatment effect ``mu1(x) - mu0(x)``."""
    scalar = np.ndim(x) == 0
    idx = interval_index(spec, x)
    out = spec.levels(TREATED)[idx] - spec.levels(CONTROL)[idx]
    return float(out) if scalar else out


@dataclass(frozen=True)
class TrialDataset:
    """Observed trial triples ``(x, a, y)`` with ``a`` in ``{-1, +1}``."""

    x: NDArray
    a: NDArray
    y: NDArray
    m: int = field(init=False)
    n: int = field(init=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        a = np.asarray(self.a, dtype=np.int64)
        y = np.asarray(self.y, dtype=float)
        if not (x.ndim == a.ndim == y.ndim == 1) or not (len(x) == len(a) == len(y)):
            raise ValueError("x, a and y must be 1-d arrays of equal length")
        if not np.all(np.isin(a, (CONTROL, TREATED))):
            raise ValueError(f"arm labels must be -1 or +1, got {np.unique(a)}")
        m = int(np.sum(a == CONTROL))
        n = int(np.sum(a == TREATED))
        if m < 2 or n < 2:
            raise ValueError(f"need at least 2 units per arm, got m={m} control and n={n} treated")
        for name, arr in (("x", x), ("a", a), ("y", y)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n", n)

    def __len__(self) -> int:
        return len(self.x)

    def arm(self, arm: int) -> tuple[NDArray, NDArray]:
        mask = self.a == arm
        return self.x[mask], self.y[mask]

    def __eq__(self, other):
        if not isinstance(other, TrialDataset):
            return NotImplemented
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.y, other.y)
        )

    __hash__ = None


def generate(spec: ScenarioSpec, m: int, n: int, seed: int | np.random.SeedSequence) -> TrialDataset:
    """Sample ``m`` control and ``n`` treated units.

    Both arms draw their covariates independently from the uniform law on
    the scenario range.  Control units come first in the returned arrays.
    """
    if m < 2 or n < 2:
        raise ValueError(f"need m >= 2 and n >= 2, got m={m}, n={n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    x0 = rng.uniform(spec.x_low, spec.x_high, size=m)
    x1 = rng.uniform(spec.x_low, spec.x_high, size=n)
    x = np.concatenate([x0, x1])
    a = np.concatenate([np.full(m, CONTROL), np.full(n, TREATED)])
    y = true_mu(spec, a, x) + rng.normal(0.0, spec.noise_sd, size=m + n)
    return TrialDataset(x, a, y)


def quadrature_nodes(spec: ScenarioSpec, points: int = QUADRATURE_POINTS) -> NDArray:
    """Cell midpoints of a uniform ``points``-node grid on the covariate range."""
    edges = np.linspace(spec.x_low, spec.x_high, points)
    return 0.5 * (edges[:-1] + edges[1:])


def analytic_value(spec: ScenarioSpec, rule: Callable[[NDArray], NDArray]) -> float:
    """Expected response when treatments are assigned by ``rule``.

    Midpoint quadrature of ``mu_{rule(x)}(x)`` against the uniform covariate
    density on a fixed 10,001-node grid.
    """
    xs = quadrature_nodes(spec)
    d = np.asarray(rule(xs))
    if d.shape == ():
        d = np.full_like(xs, d, dtype=np.int64)
    return float(np.mean(true_mu(spec, d, xs)))


# --- serialization -----------------------------------------------------------

_SPEC_FIELDS = ("name", "breakpoints", "mu0_levels", "mu1_levels", "x_low", "x_high", "noise_sd")


def parse_key_values(text: str, source: str = "<string>") -> dict[str, str]:
    """Parse flat ``key = value`` text; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ValueError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _floats(value: str) -> tuple[float, ...]:
    return tuple(float(v) for v in value.split(",") if v.strip())


def spec_to_text(spec: ScenarioSpec) -> str:
    lines = []
    for key in _SPEC_FIELDS:
        value = getattr(spec, key)
        if isinstance(value, tuple):
            value = ", ".join(repr(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def spec_from_text(text: str, source: str = "<string>") -> ScenarioSpec:
    kv = parse_key_values(text, source)
    unknown = set(kv) - set(_SPEC_FIELDS)
    if unknown:
        raise ValueError(f"{source}: unknown scenario keys {sorted(unknown)}")
    missing = {"name", "breakpoints", "mu0_levels", "mu1_levels"} - set(kv)
    if missing:
        raise ValueError(f"{source}: missing scenario keys {sorted(missing)}")
    kwargs = {
        "name": kv["name"],
        "breakpoints": _floats(kv["breakpoints"]),
        "mu0_levels": _floats(kv["mu0_levels"]),
        "mu1_levels": _floats(kv["mu1_levels"]),
    }
    for key in ("x_low", "x_high", "noise_sd"):
        if key in kv:
            kwargs[key] = float(kv[key])
    return ScenarioSpec(**kwargs)


def load_spec(path: str | Path) -> ScenarioSpec:
    path = Path(path)
    return spec_from_text(path.read_text(), source=str(path))


def save_spec(spec: ScenarioSpec, path: str | Path) -> None:
    Path(path).write_text(spec_to_text(spec))


def write_csv(data: TrialDataset, path: str | Path) -> None:
    """Write ``data`` with header ``x,a,y``; floats use ``repr`` so reads are exact."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "a", "y"])
        for x, a, y in zip(data.x, data.a, data.y):
            w.writerow([repr(float(x)), int(a), repr(float(y))])


def read_csv(path: str | Path) -> TrialDataset:
    """Read and validate an ``x,a,y`` dataset file.

    Errors name the offending line (the header is line 1).
    """
    xs: list[float] = []
    arms: list[int] = []
    ys: list[float] = []
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None or [h.strip() for h in header] != ["x", "a", "y"]:
            raise ValueError(f"{path}: line 1: expected header 'x,a,y', got {header!r}")
        for lineno, row in enumerate(rows, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 3 fields, got {len(row)}")
            try:
                x, a, y = float(row[0]), float(row[1]), float(row[2])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric field in {row!r}") from None
            if a not in (CONTROL, TREATED):
                raise ValueError(f"{path}: line {lineno}: arm label must be -1 or 1, got {row[1]!r}")
            if not (np.isfinite(x) and np.isfinite(y)):
                raise ValueError(f"{path}: line {lineno}: non-finite value in {row!r}")
            xs.append(x)
            arms.append(int(a))
            ys.append(y)
    m = arms.count(CONTROL)
    n = arms.count(TREATED)
    if m < 2 or n < 2:
        raise ValueError(
            f"{path}: insufficient data: need at least 2 units per arm, got m={m}, n={n}"
        )
    return TrialDataset(np.array(xs), np.array(arms), np.array(ys))

