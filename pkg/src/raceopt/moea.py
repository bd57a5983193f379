"""NSGA-II building blocks: dominance, sorting, crowding, variation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def dominates(a, b) -> bool:
    """Pareto dominance for minimization: a is nowhere worse and somewhere better."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("objective vectors must have equal length")
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_sort(points) -> list[np.ndarray]:
    """Partition points into fronts by repeated removal of nondominated sets.

    Returns a list of index arrays (each ascending); front 0 holds the
    nondominated points of the whole set, front r the points that become
    nondominated once fronts 0..r-1 are removed. Duplicates never dominate
    each other and land in the same front.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a non-empty 2-d array")
    n = pts.shape[0]
    le = np.all(pts[:, None, :] <= pts[None, :, :], axis=-1)
    lt = np.any(pts[:, None, :] < pts[None, :, :], axis=-1)
    dom = le & lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0)
    active = np.ones(n, dtype=bool)
    fronts: list[np.ndarray] = []
    while active.any():
        front = np.flatnonzero(active & (counts == 0))
        fronts.append(front)
        active[front] = False
        counts = counts - dom[front].sum(axis=0)
        counts[~active] = 1  # keep retired points out of later fronts
    return fronts


def crowding_distance(points) -> np.ndarray:
    """Crowding distance of points within one front.

    Boundary points on each objective get infinity; interior points sum the
    normalized gap between their neighbours over all objectives. Objectives
    with zero range contribute nothing. Ties in an objective keep their
    original order (stable sort), so with duplicated points the lowest and
    highest indices act as the boundaries.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a non-empty 2-d array")
    m = pts.shape[0]
    dist = np.zeros(m)
    for j in range(pts.shape[1]):
        order = np.argsort(pts[:, j], kind="stable")
        vals = pts[order, j]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        spread = vals[-1] - vals[0]
        if m > 2 and spread > 0.0:
            dist[order[1:-1]] += (vals[2:] - vals[:-2]) / spread
    return dist


@dataclass(frozen=True)
class SelectionOutcome:
    """Result of environmental selection over a pool of objective points.

    ``selected`` lists the chosen indices in ascending order; ``rank`` and
    ``crowding`` cover the whole pool (rank = front number, crowding
    computed within each front).
    """

    selected: np.ndarray
    rank: np.ndarray
    crowding: np.ndarray


def environmental_select(points, mu: int) -> SelectionOutcome:
    """Pick mu of the given points by (rank, crowding), NSGA-II style.

    Whole fronts are taken while they fit; the splitting front is truncated
    by descending crowding distance, ties broken by lower index.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a non-empty 2-d array")
    n = pts.shape[0]
    if not 1 <= mu <= n:
        raise ValueError(f"mu must be in [1, {n}], got {mu}")
    fronts = nondominated_sort(pts)
    rank = np.empty(n, dtype=int)
    crowding = np.empty(n)
    for r, front in enumerate(fronts):
        rank[front] = r
        crowding[front] = crowding_distance(pts[front])
    chosen: list[np.ndarray] = []
    space = mu
    for front in fronts:
        if front.size <= space:
            chosen.append(front)
            space -= front.size
            if space == 0:
                break
        else:
            order = np.lexsort((front, -crowding[front]))
            chosen.append(front[order[:space]])
            break
    selected = np.sort(np.concatenate(chosen))
    return SelectionOutcome(selected=selected, rank=rank, crowding=crowding)


def binary_tournament(outcome: SelectionOutcome, rng: np.random.Generator) -> int:
    """Pick one index from the pool described by ``outcome``.

    Two distinct contestants are drawn uniformly; lower rank wins, then
    higher crowding, then a coin flip.
    """
    n = outcome.rank.size
    if n == 1:
        return 0
    i = int(rng.integers(n))
    j = int(rng.integers(n - 1))
    if j >= i:
        j += 1
    if outcome.rank[i] != outcome.rank[j]:
        return i if outcome.rank[i] < outcome.rank[j] else j
    if outcome.crowding[i] != outcome.crowding[j]:
        return i if outcome.crowding[i] > outcome.crowding[j] else j
    return i if rng.random() < 0.5 else j


def sbx_crossover(
    parent_a,
    parent_b,
    lower,
    upper,
    eta: float = 20.0,
    crossover_prob: float = 1.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover with per-coordinate exchange gates.

    Each coordinate pair is recombined with probability 0.5 (given the
    pair-level gate fires) using a shared spread factor drawn from the
    polynomial spread distribution with index ``eta``. Recombined
    coordinates are ordered: the first child takes the lower mix and the
    second the upper mix, so one child contracts toward the coordinate-wise
    minimum and the other toward the maximum. Children are clipped to the
    box bounds; before clipping each coordinate pair preserves the
    parents' sum.
    """
    if rng is None:
        raise ValueError("rng is required")
    a = np.asarray(parent_a, dtype=float)
    b = np.asarray(parent_b, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    child_a = a.copy()
    child_b = b.copy()
    if rng.random() >= crossover_prob:
        return child_a, child_b
    n = a.size
    exchange = rng.random(n) <= 0.5
    u = rng.random(n)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** (1.0 / (eta + 1.0)),
        (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (eta + 1.0)),
    )
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    mid = 0.5 * (lo + hi)
    half = 0.5 * beta * (hi - lo)
    child_a = np.where(exchange, mid - half, a)
    child_b = np.where(exchange, mid + half, b)
    np.clip(child_a, lower, upper, out=child_a)
    np.clip(child_b, lower, upper, out=child_b)
    return child_a, child_b


def polynomial_mutation(
    x,
    lower,
    upper,
    eta: float = 20.0,
    mutation_prob: float | None = None,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Bounded polynomial mutation; default rate is 1/n per coordinate."""
    if rng is None:
        raise ValueError("rng is required")
    x = np.asarray(x, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    n = x.size
    if mutation_prob is None:
        mutation_prob = 1.0 / n
    gate = rng.random(n) < mutation_prob
    u = rng.random(n)
    span = upper - lower
    d_lo = (x - lower) / span
    d_hi = (upper - x) / span
    exp = 1.0 / (eta + 1.0)
    low_branch = (2.0 * u + (1.0 - 2.0 * u) * (1.0 - d_lo) ** (eta + 1.0)) ** exp - 1.0
    high_branch = 1.0 - (2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d_hi) ** (eta + 1.0)) ** exp
    delta = np.where(u <= 0.5, low_branch, high_branch)
    mutated = np.clip(x + delta * span, lower, upper)
    return np.where(gate, mutated, x)
