"""ZDT benchmark problems and additive noise models.

All problems are bi-objective minimization. Objective values returned by
``Problem.true_eval`` are exact; ``NoisyProblem`` wraps a problem with an
additive noise model and a global evaluation counter.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Nondominated x1 intervals of the ZDT3 trade-off curve, derived by
# scripts/derive_zdt3_front.py (bisection on the oscillating curve,
# boundary points strictly below the preceding local minimum).
ZDT3_FRONT_INTERVALS = (
    (0.0, 0.08300153492691426),
    (0.1822287280294026, 0.25776236338782743),
    (0.4093136748086569, 0.4538821040888268),
    (0.6183967944392659, 0.652511703804664),
    (0.8233317983266331, 0.8518328654364107),
)

# First objective of ZDT6 attains its minimum where tan(6*pi*x) = 9*pi
# (stationary point of exp(-4x) * sin(6*pi*x)^6 on the first arch).
_ZDT6_X_STAR = math.atan(9.0 * math.pi) / (6.0 * math.pi)
ZDT6_F1_MIN = 1.0 - math.exp(-4.0 * _ZDT6_X_STAR) * math.sin(6.0 * math.pi * _ZDT6_X_STAR) ** 6


@dataclass(frozen=True)
class Problem:
    """A benchmark problem: box-bounded decision space, two objectives."""

    name: str
    n_variables: int
    lower: np.ndarray
    upper: np.ndarray
    _eval: Callable[[np.ndarray], np.ndarray]
    _front: Callable[[int], np.ndarray]

    @property
    def n_objectives(self) -> int:
        return 2

    def true_eval(self, x) -> np.ndarray:
        """Exact objective values; rejects out-of-domain vectors."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_variables,):
            raise ValueError(
                f"domain-violation: {self.name} expects {self.n_variables} variables, "
                f"got shape {x.shape}"
            )
        if np.any(x < self.lower) or np.any(x > self.upper) or not np.all(np.isfinite(x)):
            raise ValueError(f"domain-violation: point outside the box bounds of {self.name}")
        return self._eval(x)

    def true_front(self, count: int) -> np.ndarray:
        """Evenly sampled points on the exact trade-off curve.

        Args:
            count: Number of points, at least 2.

        Returns:
            Array of shape (count, 2), mutually nondominated, sorted by f1.
        """
        if count < 2:
            raise ValueError("front sample needs at least 2 points")
        return self._front(count)


def _zdt1_eval(x: np.ndarray) -> np.ndarray:
    f1 = x[0]
    g = 1.0 + 9.0 * x[1:].sum() / (x.size - 1)
    f2 = g * (1.0 - np.sqrt(f1 / g))
    return np.array([f1, f2])


def _zdt2_eval(x: np.ndarray) -> np.ndarray:
    f1 = x[0]
    g = 1.0 + 9.0 * x[1:].sum() / (x.size - 1)
    f2 = g * (1.0 - (f1 / g) ** 2)
    return np.array([f1, f2])


def _zdt3_eval(x: np.ndarray) -> np.ndarray:
    f1 = x[0]
    g = 1.0 + 9.0 * x[1:].sum() / (x.size - 1)
    ratio = f1 / g
    f2 = g * (1.0 - np.sqrt(ratio) - ratio * np.sin(10.0 * np.pi * f1))
    return np.array([f1, f2])


def _zdt4_eval(x: np.ndarray) -> np.ndarray:
    f1 = x[0]
    tail = x[1:]
    g = 1.0 + 10.0 * tail.size + np.sum(tail**2 - 10.0 * np.cos(4.0 * np.pi * tail))
    f2 = g * (1.0 - np.sqrt(f1 / g))
    return np.array([f1, f2])


def _zdt6_eval(x: np.ndarray) -> np.ndarray:
    f1 = 1.0 - np.exp(-4.0 * x[0]) * np.sin(6.0 * np.pi * x[0]) ** 6
    g = 1.0 + 9.0 * (x[1:].sum() / (x.size - 1)) ** 0.25
    f2 = g * (1.0 - (f1 / g) ** 2)
    return np.array([f1, f2])


def _convex_front(count: int) -> np.ndarray:
    f1 = np.linspace(0.0, 1.0, count)
    return np.column_stack([f1, 1.0 - np.sqrt(f1)])


def _concave_front(count: int) -> np.ndarray:
    f1 = np.linspace(0.0, 1.0, count)
    return np.column_stack([f1, 1.0 - f1**2])


def _zdt3_front(count: int) -> np.ndarray:
    lengths = np.array([b - a for a, b in ZDT3_FRONT_INTERVALS])
    quota = count * lengths / lengths.sum()
    alloc = np.floor(quota).astype(int)
    frac = quota - alloc
    # Largest remainder wins the leftover points; ties go to the lower index.
    for idx in np.argsort(-frac, kind="stable")[: count - alloc.sum()]:
        alloc[idx] += 1
    xs = np.concatenate(
        [np.linspace(a, b, m) for (a, b), m in zip(ZDT3_FRONT_INTERVALS, alloc) if m > 0]
    )
    f2 = 1.0 - np.sqrt(xs) - xs * np.sin(10.0 * np.pi * xs)
    return np.column_stack([xs, f2])


def _zdt6_front(count: int) -> np.ndarray:
    f1 = np.linspace(ZDT6_F1_MIN, 1.0, count)
    return np.column_stack([f1, 1.0 - f1**2])


def _bounds(n: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    return np.full(n, lo), np.full(n, hi)


def make_problem(name: str) -> Problem:
    """Look up a benchmark problem by identifier (zdt1, zdt2, zdt3, zdt4, zdt6)."""
    key = name.lower()
    if key == "zdt1":
        lo, hi = _bounds(30, 0.0, 1.0)
        return Problem("zdt1", 30, lo, hi, _zdt1_eval, _convex_front)
    if key == "zdt2":
        lo, hi = _bounds(30, 0.0, 1.0)
        return Problem("zdt2", 30, lo, hi, _zdt2_eval, _concave_front)
    if key == "zdt3":
        lo, hi = _bounds(30, 0.0, 1.0)
        return Problem("zdt3", 30, lo, hi, _zdt3_eval, _zdt3_front)
    if key == "zdt4":
        lo = np.full(10, -5.0)
        hi = np.full(10, 5.0)
        lo[0], hi[0] = 0.0, 1.0
        return Problem("zdt4", 10, lo, hi, _zdt4_eval, _convex_front)
    if key == "zdt6":
        lo, hi = _bounds(10, 0.0, 1.0)
        return Problem("zdt6", 10, lo, hi, _zdt6_eval, _zdt6_front)
    raise ValueError(f"unknown problem: {name!r}")


PROBLEM_NAMES = ("zdt1", "zdt2", "zdt3", "zdt4", "zdt6")


class NoiseKind:
    NONE = "none"
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"
    GUMBEL = "gumbel"


NOISE_NAMES = (NoiseKind.NONE, NoiseKind.GAUSSIAN, NoiseKind.CAUCHY, NoiseKind.GUMBEL)

# Gumbel location chosen so the noise median is exactly zero:
# median = mu + beta * (-ln(ln 2)) = 0 with beta = 2.
GUMBEL_SCALE = 2.0
GUMBEL_LOCATION = 2.0 * math.log(math.log(2.0))

_REDRAW_CAP = 100


@dataclass(frozen=True)
class NoiseModel:
    """Additive, component-wise noise on the objective vector.

    Draws with any non-finite component are redrawn as a whole vector, up
    to a cap of 100 attempts.
    """

    kind: str

    def draw(self, k: int, rng: np.random.Generator) -> np.ndarray:
        for _ in range(_REDRAW_CAP):
            eps = self._draw_once(k, rng)
            if np.all(np.isfinite(eps)):
                return eps
        raise RuntimeError(f"noise model {self.kind} produced non-finite draws {_REDRAW_CAP} times")

    def _draw_once(self, k: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == NoiseKind.NONE:
            return np.zeros(k)
        if self.kind == NoiseKind.GAUSSIAN:
            return rng.normal(0.0, 0.25, size=k)
        if self.kind == NoiseKind.CAUCHY:
            return 0.25 * rng.standard_cauchy(size=k)
        if self.kind == NoiseKind.GUMBEL:
            return rng.gumbel(GUMBEL_LOCATION, GUMBEL_SCALE, size=k)
        raise ValueError(f"unknown noise model: {self.kind!r}")


def make_noise(name: str) -> NoiseModel:
    key = name.lower()
    if key not in NOISE_NAMES:
        raise ValueError(f"unknown noise model: {name!r}")
    return NoiseModel(key)


class NoisyProblem:
    """A problem observed through additive noise, with an evaluation budget.

    Every call to ``evaluate`` burns one evaluation regardless of the noise
    model. ``max_evaluations=None`` disables the cap.
    """

    def __init__(
        self,
        problem: Problem,
        noise: NoiseModel,
        max_evaluations: int | None = None,
    ) -> None:
        if max_evaluations is not None and max_evaluations < 0:
            raise ValueError("max_evaluations must be non-negative")
        self.problem = problem
        self.noise = noise
        self.max_evaluations = max_evaluations
        self.evaluations = 0

    @property
    def remaining(self) -> int | None:
        if self.max_evaluations is None:
            return None
        return self.max_evaluations - self.evaluations

    def can_afford(self, count: int) -> bool:
        return self.remaining is None or self.remaining >= count

    def evaluate(self, x, rng: np.random.Generator) -> np.ndarray:
        if not self.can_afford(1):
            raise RuntimeError("evaluation budget exhausted")
        value = self.problem.true_eval(x)
        self.evaluations += 1
        return value + self.noise.draw(value.size, rng)
