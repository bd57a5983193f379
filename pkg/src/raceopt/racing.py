"""Racing selection: Hoeffding races on survival probability, plus baselines.

Environmental selection under noise is treated as a bandit-style
identification problem. Each iteration re-draws representative objective
values for the whole pool, applies one environmental selection, and feeds
the resulting survive/perish indicators into per-individual confidence
intervals on the probability of being selected. Individuals whose interval
provably places them in the top mu are selected and leave the race;
provable losers are discarded. Static resampling and implicit averaging
are provided as baselines behind the same interface.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import EstimatorKind, Individual, SampleArchive, estimator_value
from .moea import (
    SelectionOutcome,
    binary_tournament,
    environmental_select,
    polynomial_mutation,
    sbx_crossover,
)
from .problems import NoisyProblem


def hoeffding_radius(t: int, delta: float, range_width: float = 1.0) -> float:
    """Half-width of a two-sided Hoeffding confidence interval.

    After t observations of a bounded quantity with range ``range_width``,
    the empirical mean is within this radius of the true mean with
    probability at least 1 - delta.
    """
    if t < 1:
        raise ValueError("t must be at least 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must be in (0, 1)")
    if range_width <= 0.0:
        raise ValueError("range_width must be positive")
    return range_width * math.sqrt(math.log(2.0 / delta) / (2.0 * t))


class Status(enum.IntEnum):
    RACING = 0
    SELECTED = 1
    DISCARDED = 2


class StopReason(enum.Enum):
    QUOTA_SELECTED = "quota_selected"
    QUOTA_DISCARDED = "quota_discarded"
    PROXIMITY = "proximity"
    T_MAX = "t_max"


@dataclass(frozen=True)
class RaceConfig:
    """Parameters of one race.

    ``delta`` is the per-individual error allowance (1 - confidence),
    ``t_max`` the resampling cap, ``proximity_threshold`` the early-stop
    bound on the summed pairwise gaps between racing estimates.
    """

    delta: float
    t_max: int
    proximity_threshold: float = 0.5
    estimator: EstimatorKind = EstimatorKind.LAST
    range_width: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must be in (0, 1)")
        if self.t_max < 1:
            raise ValueError("t_max must be at least 1")
        if self.proximity_threshold < 0.0:
            raise ValueError("proximity_threshold must be non-negative")
        if self.range_width <= 0.0:
            raise ValueError("range_width must be positive")


class SelectionRace:
    """Confidence-interval bookkeeping for one race over ``size`` individuals.

    The race itself only sees boolean selection indicators; drawing the
    representatives and running environmental selection is the caller's
    job. ``record`` ingests one indicator vector, updates the Hoeffding
    intervals of everyone still racing, and applies definite decisions to
    a fixed point.

    A definite decision needs the shrunk quotas: with mu_rem open slots
    and lam_rem racers, an individual is selected once its lower bound
    beats the upper bound of at least lam_rem - mu_rem racing peers, and
    discarded once its upper bound is beaten by the lower bound of at
    least mu_rem racing peers. Decisions are evaluated in population-index
    order and re-applied until nothing changes; nothing is decided while
    lam_rem == mu_rem (a full quota of discards, handled by the caller)
    or mu_rem == 0 (race over).
    """

    def __init__(self, size: int, mu: int, delta: float, range_width: float = 1.0) -> None:
        if size < 2:
            raise ValueError("a race needs at least 2 individuals")
        if not 1 <= mu < size:
            raise ValueError(f"mu must be in [1, {size - 1}], got {mu}")
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must be in (0, 1)")
        self.size = size
        self.mu = mu
        self.delta = delta
        self.range_width = range_width
        self.iteration = 0
        self.status = np.full(size, Status.RACING, dtype=int)
        self.t = np.zeros(size, dtype=int)
        self.s = np.zeros(size, dtype=int)
        self.lower = np.zeros(size)
        self.upper = np.ones(size)

    def racing_indices(self) -> np.ndarray:
        return np.flatnonzero(self.status == Status.RACING)

    def selected_indices(self) -> np.ndarray:
        return np.flatnonzero(self.status == Status.SELECTED)

    def discarded_indices(self) -> np.ndarray:
        return np.flatnonzero(self.status == Status.DISCARDED)

    @property
    def n_selected(self) -> int:
        return int(np.count_nonzero(self.status == Status.SELECTED))

    @property
    def n_discarded(self) -> int:
        return int(np.count_nonzero(self.status == Status.DISCARDED))

    @property
    def mu_remaining(self) -> int:
        return self.mu - self.n_selected

    def p_hat(self) -> np.ndarray:
        """Empirical selection frequencies; zero where nothing was recorded."""
        return np.divide(self.s, self.t, out=np.zeros(self.size), where=self.t > 0)

    def record(self, chosen) -> None:
        """Ingest one selection-indicator vector over the full pool."""
        chosen = np.asarray(chosen, dtype=bool)
        if chosen.shape != (self.size,):
            raise ValueError(f"indicator vector must have shape ({self.size},)")
        racing = self.racing_indices()
        self.iteration += 1
        self.t[racing] += 1
        self.s[racing] += chosen[racing]
        radius = hoeffding_radius(self.iteration, self.delta, self.range_width)
        p = self.s[racing] / self.t[racing]
        self.lower[racing] = np.maximum(0.0, p - radius)
        self.upper[racing] = np.minimum(1.0, p + radius)
        self._decide()

    def _decide(self) -> None:
        changed = True
        while changed:
            changed = False
            for i in range(self.size):
                if self.status[i] != Status.RACING:
                    continue
                racing = self.racing_indices()
                mu_rem = self.mu_remaining
                lam_rem = racing.size
                if mu_rem == 0 or lam_rem == mu_rem:
                    return
                peers = racing[racing != i]
                if np.count_nonzero(self.lower[i] > self.upper[peers]) >= lam_rem - mu_rem:
                    self.status[i] = Status.SELECTED
                    changed = True
                elif np.count_nonzero(self.upper[i] < self.lower[peers]) >= mu_rem:
                    self.status[i] = Status.DISCARDED
                    changed = True

    def proximity_sum(self) -> float:
        """Sum of |p_hat_i - p_hat_j| over all pairs still racing."""
        racing = self.racing_indices()
        if racing.size < 2:
            return 0.0
        p = np.sort(self.s[racing] / self.t[racing])
        r = p.size
        weights = 2.0 * np.arange(r) - (r - 1)
        return float(np.dot(p, weights))

    def quota_selected(self) -> bool:
        return self.n_selected == self.mu

    def quota_discarded(self) -> bool:
        return self.n_discarded == self.size - self.mu

    def select_remaining(self) -> None:
        self.status[self.racing_indices()] = Status.SELECTED


@dataclass(frozen=True)
class RaceResult:
    """What a selection round reports back to the generation loop.

    ``outcome`` is the environmental-selection view of the full pool from
    the final resampling iteration; its ranks and crowding distances drive
    the next round of mating tournaments. Baselines report iterations = 1
    and stop_reason = None.
    """

    selected: np.ndarray
    evaluations_used: int
    iterations: int
    stop_reason: StopReason | None
    outcome: SelectionOutcome


def bootstrap_draw(archive, rng: np.random.Generator) -> np.ndarray:
    """One uniform draw, with replacement, from an individual's archive."""
    rows = archive.as_array()
    return rows[int(rng.integers(rows.shape[0]))].copy()


def _representative(ind: Individual, kind: EstimatorKind, rng: np.random.Generator) -> np.ndarray:
    """Bootstrap representative: estimator over the archive plus one draw.

    Mimics a growing sample without spending evaluations. For LAST the
    representative is the draw itself.
    """
    draw = bootstrap_draw(ind.archive, rng)
    if kind is EstimatorKind.LAST:
        return draw
    return estimator_value(np.vstack([ind.archive.as_array(), draw[None, :]]), kind)


def race_select(
    population: list[Individual],
    mu: int,
    config: RaceConfig,
    noisy: NoisyProblem,
    eval_rng: np.random.Generator,
    boot_rng: np.random.Generator,
) -> RaceResult:
    """Choose mu of the population by racing the selection indicators.

    Per iteration, every modified individual still racing receives one
    fresh evaluation (appended to its archive); unchanged and retired
    individuals contribute bootstrap representatives instead, so the
    diversity-aware selection always sees the whole pool. One
    environmental selection over the representatives yields the indicator
    vector recorded by the race.

    Stops on a filled selection quota, a filled discard quota (remaining
    racers are selected), estimate proximity below the threshold, or
    t_max iterations; the last two fill the remaining slots by
    environmental selection restricted to the racers. If the evaluation
    budget cannot cover an iteration beyond the first, the race truncates
    as if t_max were reached.
    """
    lam = len(population)
    if not 1 <= mu < lam:
        raise ValueError(f"mu must be in [1, {lam - 1}], got {mu}")
    race = SelectionRace(lam, mu, config.delta, config.range_width)
    k = noisy.problem.n_objectives
    reps = np.zeros((lam, k))
    evals_before = noisy.evaluations
    outcome: SelectionOutcome | None = None
    stop: StopReason | None = None
    iterations = 0
    for it in range(1, config.t_max + 1):
        racing_mask = race.status == Status.RACING
        needed = sum(
            1 for i in range(lam) if racing_mask[i] and not population[i].unchanged
        )
        if not noisy.can_afford(needed):
            if outcome is None:
                raise RuntimeError("budget cannot cover the first racing iteration")
            stop = StopReason.T_MAX
            break
        for i, ind in enumerate(population):
            if racing_mask[i] and not ind.unchanged:
                ind.archive.append(noisy.evaluate(ind.genome, eval_rng))
                reps[i] = ind.archive.estimate(config.estimator)
            else:
                reps[i] = _representative(ind, config.estimator, boot_rng)
        outcome = environmental_select(reps, mu)
        chosen = np.zeros(lam, dtype=bool)
        chosen[outcome.selected] = True
        race.record(chosen)
        iterations = it
        if race.quota_selected():
            stop = StopReason.QUOTA_SELECTED
            break
        if race.quota_discarded():
            race.select_remaining()
            stop = StopReason.QUOTA_DISCARDED
            break
        if race.proximity_sum() < config.proximity_threshold:
            stop = StopReason.PROXIMITY
            break
        if it == config.t_max:
            stop = StopReason.T_MAX
            break
    if stop in (StopReason.PROXIMITY, StopReason.T_MAX):
        racing = race.racing_indices()
        mu_rem = race.mu_remaining
        if mu_rem > 0:
            sub = environmental_select(reps[racing], mu_rem)
            race.status[racing[sub.selected]] = Status.SELECTED
    selected = race.selected_indices()
    return RaceResult(
        selected=selected,
        evaluations_used=noisy.evaluations - evals_before,
        iterations=iterations,
        stop_reason=stop,
        outcome=outcome,
    )


def static_select(
    population: list[Individual],
    mu: int,
    n_samples: int,
    estimator: EstimatorKind,
    noisy: NoisyProblem,
    eval_rng: np.random.Generator,
) -> RaceResult:
    """Static resampling: n fresh samples per modified individual, then
    one environmental selection on the estimator values."""
    lam = len(population)
    if not 1 <= mu < lam:
        raise ValueError(f"mu must be in [1, {lam - 1}], got {mu}")
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    evals_before = noisy.evaluations
    needed = n_samples * sum(1 for ind in population if not ind.unchanged)
    if not noisy.can_afford(needed):
        raise RuntimeError("budget cannot cover static resampling")
    reps = np.zeros((lam, noisy.problem.n_objectives))
    for i, ind in enumerate(population):
        if not ind.unchanged:
            for _ in range(n_samples):
                ind.archive.append(noisy.evaluate(ind.genome, eval_rng))
        reps[i] = ind.archive.estimate(estimator)
    outcome = environmental_select(reps, mu)
    return RaceResult(
        selected=outcome.selected,
        evaluations_used=noisy.evaluations - evals_before,
        iterations=1,
        stop_reason=None,
        outcome=outcome,
    )


def implicit_select(
    population: list[Individual],
    mu: int,
    noisy: NoisyProblem,
    eval_rng: np.random.Generator,
) -> RaceResult:
    """Implicit averaging: one fresh sample per modified individual, plain
    NSGA-II selection on the latest values."""
    return static_select(population, mu, 1, EstimatorKind.LAST, noisy, eval_rng)


ALGORITHM_IDS = ("implicit", "static-avg", "static-med", "rsp-i", "rsp-avg", "rsp-med")

_ALGORITHM_ESTIMATOR = {
    "implicit": EstimatorKind.LAST,
    "static-avg": EstimatorKind.MEAN,
    "static-med": EstimatorKind.MEDIAN,
    "rsp-i": EstimatorKind.LAST,
    "rsp-avg": EstimatorKind.MEAN,
    "rsp-med": EstimatorKind.MEDIAN,
}


def algorithm_estimator(algorithm: str) -> EstimatorKind:
    try:
        return _ALGORITHM_ESTIMATOR[algorithm]
    except KeyError:
        raise ValueError(
            f"unknown algorithm: {algorithm!r} (valid: {', '.join(ALGORITHM_IDS)})"
        ) from None


@dataclass(frozen=True)
class Selector:
    """A selection strategy bound to its parameters.

    ``worst_evals_per_offspring`` is the exact per-modified-individual
    worst case, used by the harness to decide whether another generation
    fits the evaluation budget.
    """

    algorithm: str
    estimator: EstimatorKind
    worst_evals_per_offspring: int
    _impl: Callable[..., RaceResult]

    def select(self, population, mu, noisy, eval_rng, boot_rng) -> RaceResult:
        return self._impl(population, mu, noisy, eval_rng, boot_rng)


def make_selector(
    algorithm: str,
    sampling_budget: int | None = None,
    confidence: float | None = None,
    proximity_threshold: float = 0.5,
) -> Selector:
    """Build a selector from an algorithm id.

    The sampling budget doubles as the static sample count and the racing
    iteration cap. Racing variants additionally need a confidence level in
    (0, 1); the race's error allowance is delta = 1 - confidence.
    """
    estimator = algorithm_estimator(algorithm)
    if algorithm == "implicit":
        def impl(pop, mu, noisy, eval_rng, boot_rng):
            return implicit_select(pop, mu, noisy, eval_rng)

        return Selector(algorithm, estimator, 1, impl)
    if sampling_budget is None or sampling_budget < 1:
        raise ValueError(f"{algorithm} requires a sampling budget >= 1")
    if algorithm.startswith("static"):
        def impl(pop, mu, noisy, eval_rng, boot_rng, _n=sampling_budget, _e=estimator):
            return static_select(pop, mu, _n, _e, noisy, eval_rng)

        return Selector(algorithm, estimator, sampling_budget, impl)
    # rsp-* variants
    if confidence is None or not 0.0 < confidence < 1.0:
        raise ValueError(f"{algorithm} requires a confidence in (0, 1)")
    config = RaceConfig(
        delta=1.0 - confidence,
        t_max=sampling_budget,
        proximity_threshold=proximity_threshold,
        estimator=estimator,
    )
    def impl(pop, mu, noisy, eval_rng, boot_rng, _cfg=config):
        return race_select(pop, mu, _cfg, noisy, eval_rng, boot_rng)

    return Selector(algorithm, estimator, sampling_budget, impl)


def _child(genome: np.ndarray, parents: tuple[Individual, Individual]) -> Individual:
    """Wrap an offspring genome; clones of a parent inherit its archive."""
    for parent in parents:
        if np.array_equal(genome, parent.genome):
            return Individual(genome.copy(), parent.archive.copy(), unchanged=True)
    return Individual(genome, SampleArchive(), unchanged=False)


def nsga2_generation(
    parents: list[Individual],
    mating: SelectionOutcome,
    selector: Selector,
    noisy: NoisyProblem,
    variation_rng: np.random.Generator,
    eval_rng: np.random.Generator,
    boot_rng: np.random.Generator,
    sbx_eta: float = 20.0,
    crossover_prob: float = 1.0,
    mutation_eta: float = 20.0,
    mutation_prob: float | None = None,
) -> tuple[list[Individual], SelectionOutcome, RaceResult]:
    """One (mu + mu) NSGA-II generation under the given selection strategy.

    Binary tournaments on the previous selection outcome pick mating
    pairs; SBX plus polynomial mutation produce mu offspring. Parents are
    flagged unchanged (their archives already sample their genomes), the
    combined pool goes through the selector, and the survivors plus their
    ranks and crowding distances come back for the next round of
    tournaments.
    """
    mu_pop = len(parents)
    if mu_pop < 2:
        raise ValueError("need at least 2 parents")
    problem = noisy.problem
    for parent in parents:
        parent.unchanged = True
    offspring: list[Individual] = []
    while len(offspring) < mu_pop:
        ia = binary_tournament(mating, variation_rng)
        ib = binary_tournament(mating, variation_rng)
        ga, gb = parents[ia].genome, parents[ib].genome
        ca, cb = sbx_crossover(
            ga, gb, problem.lower, problem.upper, sbx_eta, crossover_prob, variation_rng
        )
        ca = polynomial_mutation(
            ca, problem.lower, problem.upper, mutation_eta, mutation_prob, variation_rng
        )
        cb = polynomial_mutation(
            cb, problem.lower, problem.upper, mutation_eta, mutation_prob, variation_rng
        )
        pair = (parents[ia], parents[ib])
        offspring.append(_child(ca, pair))
        if len(offspring) < mu_pop:
            offspring.append(_child(cb, pair))
    pool = list(parents) + offspring
    result = selector.select(pool, mu_pop, noisy, eval_rng, boot_rng)
    survivors = [pool[i] for i in result.selected]
    next_mating = SelectionOutcome(
        selected=np.arange(mu_pop),
        rank=result.outcome.rank[result.selected],
        crowding=result.outcome.crowding[result.selected],
    )
    return survivors, next_mating, result
