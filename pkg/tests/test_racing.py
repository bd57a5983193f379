from __future__ import annotations

import math

import numpy as np
import pytest

from raceopt.core import EstimatorKind, Individual, SampleArchive, make_rng
from raceopt.moea import environmental_select
from raceopt.problems import NoisyProblem, Problem, make_noise, make_problem
from raceopt.racing import (
    ALGORITHM_IDS,
    RaceConfig,
    SelectionRace,
    Status,
    StopReason,
    algorithm_estimator,
    bootstrap_draw,
    hoeffding_radius,
    implicit_select,
    make_selector,
    nsga2_generation,
    race_select,
    static_select,
)


def _plane():
    """Two-variable problem whose objectives are the genome itself."""
    return Problem(
        name="plane",
        n_variables=2,
        lower=np.full(2, -100.0),
        upper=np.full(2, 100.0),
        _eval=lambda x: x.copy(),
        _front=lambda count: np.zeros((count, 2)),
    )


def _pop(points):
    return [Individual(np.asarray(p, dtype=float)) for p in points]


# ---------------------------------------------------------------------------
# confidence radius


def test_radius_matches_closed_form():
    assert hoeffding_radius(200, 0.05) == pytest.approx(
        math.sqrt(math.log(40.0) / 400.0), abs=1e-12
    )
    assert hoeffding_radius(50, 0.75) == pytest.approx(
        math.sqrt(math.log(2.0 / 0.75) / 100.0), abs=1e-12
    )


def test_radius_vanishes_for_huge_t():
    assert hoeffding_radius(10**8, 0.05) < 1e-3


def test_radius_scales_with_range_width():
    assert hoeffding_radius(7, 0.1, 2.0) == pytest.approx(
        2.0 * hoeffding_radius(7, 0.1, 1.0)
    )


def test_radius_monotone_in_t_and_delta():
    rng = np.random.default_rng(40)
    for _ in range(1000):
        t = int(rng.integers(1, 10_000))
        delta = float(rng.uniform(0.01, 0.99))
        assert hoeffding_radius(t + 1, delta) < hoeffding_radius(t, delta)
        tighter = delta * 0.5
        assert hoeffding_radius(t, tighter) > hoeffding_radius(t, delta)


def test_radius_input_validation():
    with pytest.raises(ValueError):
        hoeffding_radius(0, 0.05)
    with pytest.raises(ValueError):
        hoeffding_radius(5, 0.0)
    with pytest.raises(ValueError):
        hoeffding_radius(5, 1.0)
    with pytest.raises(ValueError):
        hoeffding_radius(5, 0.05, 0.0)


# ---------------------------------------------------------------------------
# race bookkeeping


def test_race_rejects_bad_shapes_and_quotas():
    with pytest.raises(ValueError):
        SelectionRace(1, 1, 0.1)
    with pytest.raises(ValueError):
        SelectionRace(4, 0, 0.1)
    with pytest.raises(ValueError):
        SelectionRace(4, 4, 0.1)
    race = SelectionRace(4, 2, 0.1)
    with pytest.raises(ValueError):
        race.record([True, False])


def test_race_bounds_stay_valid_and_quotas_never_overshoot():
    rng = np.random.default_rng(41)
    for _ in range(300):
        size = int(rng.integers(3, 10))
        mu = int(rng.integers(1, size))
        race = SelectionRace(size, mu, float(rng.uniform(0.05, 0.5)))
        p = rng.random(size)
        for _t in range(int(rng.integers(1, 40))):
            race.record(rng.random(size) < p)
            racing = race.racing_indices()
            assert np.all(race.lower[racing] >= 0.0)
            assert np.all(race.upper[racing] <= 1.0)
            assert np.all(race.lower[racing] <= race.upper[racing])
            assert race.n_selected <= mu
            assert race.n_discarded <= size - mu
            statuses = race.status
            assert racing.size + race.n_selected + race.n_discarded == size
            assert set(np.unique(statuses)) <= {
                int(Status.RACING),
                int(Status.SELECTED),
                int(Status.DISCARDED),
            }


def test_race_separated_pair_decides_quickly():
    race = SelectionRace(2, 1, 0.5)
    for _ in range(30):
        race.record([True, False])
        if race.quota_selected():
            break
    assert race.selected_indices().tolist() == [0]
    # the loser is left racing; the caller decides what happens to it
    assert race.n_discarded in (0, 1)


def test_race_proximity_sum_is_the_pairwise_gap_total():
    race = SelectionRace(3, 1, 0.1)
    race.record([True, False, False])
    race.record([True, True, False])
    # p_hat = (1, 0.5, 0): pairwise gaps 0.5 + 1.0 + 0.5
    np.testing.assert_allclose(race.p_hat(), [1.0, 0.5, 0.0])
    assert race.proximity_sum() == pytest.approx(2.0)


def test_race_decisions_are_definite_on_synthetic_bernoulli_streams():
    # With a wide gap and a tight allowance, decided statuses must match
    # the true ordering. select_remaining is never called here, so every
    # non-racing status is a definite decision.
    rng = np.random.default_rng(42)
    p = np.array([0.9, 0.85, 0.1, 0.05])
    wrong = 0
    for _ in range(200):
        race = SelectionRace(4, 2, 0.05)
        for _t in range(400):
            race.record(rng.random(4) < p)
            if race.quota_selected() or race.quota_discarded():
                break
        wrong += bool(set(race.selected_indices()) - {0, 1})
        wrong += bool(set(race.discarded_indices()) & {0, 1})
    assert wrong <= 10


# ---------------------------------------------------------------------------
# bootstrap representatives


def test_bootstrap_single_row_archive_is_deterministic():
    arch = SampleArchive([(3.0, 4.0)])
    rng = make_rng(50)
    for _ in range(10):
        np.testing.assert_array_equal(bootstrap_draw(arch, rng), [3.0, 4.0])


def test_bootstrap_draw_frequencies_are_uniform():
    arch = SampleArchive([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)])
    rng = make_rng(51)
    counts = np.zeros(4)
    for _ in range(100_000):
        counts[int(bootstrap_draw(arch, rng)[0])] += 1
    np.testing.assert_allclose(counts / 100_000, 0.25, atol=0.01)


def test_bootstrap_empty_archive_fails():
    with pytest.raises(ValueError, match="empty-archive"):
        bootstrap_draw(SampleArchive(), make_rng(52))


# ---------------------------------------------------------------------------
# race_select end to end


def test_race_two_separated_pairs_stops_early():
    pop = _pop([(0.0, 0.0), (0.1, 0.1), (1.0, 1.0), (1.1, 1.1)])
    noisy = NoisyProblem(_plane(), make_noise("none"))
    cfg = RaceConfig(delta=0.75, t_max=50)
    res = race_select(pop, 2, cfg, noisy, make_rng(1), make_rng(2))
    assert res.selected.tolist() == [0, 1]
    assert res.stop_reason == StopReason.QUOTA_SELECTED
    assert res.iterations < 50
    # every modified racer was sampled once per iteration until the stop
    assert res.evaluations_used == 4 * res.iterations
    for ind in pop:
        assert len(ind.archive) == res.iterations


def test_race_discard_quota_fills_the_selection():
    # Winners sit at the high indices, so the index-ordered decision pass
    # discards both losers first and the race ends on the discard quota.
    pop = _pop([(1.0, 1.0), (1.1, 1.1), (0.0, 0.0), (0.1, 0.1)])
    noisy = NoisyProblem(_plane(), make_noise("none"))
    cfg = RaceConfig(delta=0.75, t_max=50)
    res = race_select(pop, 2, cfg, noisy, make_rng(3), make_rng(4))
    assert res.stop_reason == StopReason.QUOTA_DISCARDED
    assert res.selected.tolist() == [2, 3]


def test_race_huge_proximity_threshold_stops_at_t_one():
    pop = _pop([(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)])
    noisy = NoisyProblem(_plane(), make_noise("none"))
    cfg = RaceConfig(delta=0.25, t_max=50, proximity_threshold=1e9)
    res = race_select(pop, 1, cfg, noisy, make_rng(5), make_rng(6))
    assert res.stop_reason == StopReason.PROXIMITY
    assert res.iterations == 1
    assert res.selected.tolist() == [0]


def test_race_with_t_max_one_matches_implicit_selection():
    points = [(0.3, 0.7), (0.6, 0.4), (0.2, 0.9), (0.8, 0.1)]
    noise = make_noise("gaussian")
    pop_a = _pop(points)
    pop_b = _pop(points)
    cfg = RaceConfig(delta=0.5, t_max=1, proximity_threshold=0.0)
    res_a = race_select(pop_a, 2, cfg, NoisyProblem(_plane(), noise), make_rng(7), make_rng(8))
    res_b = implicit_select(pop_b, 2, NoisyProblem(_plane(), noise), make_rng(7))
    assert res_a.selected.tolist() == res_b.selected.tolist()
    assert res_a.stop_reason == StopReason.T_MAX
    assert res_a.iterations == 1


def test_race_unchanged_individuals_cost_no_evaluations():
    pop = _pop([(0.0, 0.0), (0.1, 0.1), (1.0, 1.0), (1.1, 1.1)])
    pop[2] = Individual(
        np.array([1.0, 1.0]), SampleArchive([(1.0, 1.0)]), unchanged=True
    )
    noisy = NoisyProblem(_plane(), make_noise("none"))
    cfg = RaceConfig(delta=0.75, t_max=50)
    res = race_select(pop, 2, cfg, noisy, make_rng(9), make_rng(10))
    assert len(pop[2].archive) == 1  # untouched by the race
    assert res.evaluations_used == 3 * res.iterations
    assert res.selected.tolist() == [0, 1]


def test_race_truncates_to_t_max_when_budget_runs_out():
    pop = _pop([(0.0, 0.0), (0.1, 0.1), (1.0, 1.0), (1.1, 1.1)])
    noisy = NoisyProblem(_plane(), make_noise("none"), max_evaluations=6)
    cfg = RaceConfig(delta=0.01, t_max=10)  # too tight to decide by t = 1
    res = race_select(pop, 2, cfg, noisy, make_rng(11), make_rng(12))
    assert res.stop_reason == StopReason.T_MAX
    assert res.iterations == 1
    assert res.evaluations_used == 4
    assert res.selected.size == 2
    assert noisy.evaluations == 4


def test_race_unaffordable_first_iteration_raises():
    pop = _pop([(0.0, 0.0), (1.0, 1.0)])
    noisy = NoisyProblem(_plane(), make_noise("none"), max_evaluations=1)
    cfg = RaceConfig(delta=0.25, t_max=5)
    with pytest.raises(RuntimeError, match="first racing iteration"):
        race_select(pop, 1, cfg, noisy, make_rng(13), make_rng(14))


def test_race_result_invariants_under_fuzz():
    rng = np.random.default_rng(43)
    for trial in range(200):
        lam = int(rng.integers(3, 9))
        mu = int(rng.integers(1, lam))
        pts = rng.uniform(-5.0, 5.0, size=(lam, 2))
        pop = _pop(pts)
        cfg = RaceConfig(
            delta=float(rng.uniform(0.05, 0.9)),
            t_max=int(rng.integers(1, 8)),
            proximity_threshold=float(rng.choice([0.0, 0.5])),
        )
        noisy = NoisyProblem(_plane(), make_noise("gaussian"))
        res = race_select(pop, mu, cfg, noisy, make_rng(44, trial), make_rng(45, trial))
        assert res.selected.size == mu
        assert 1 <= res.iterations <= cfg.t_max
        assert res.stop_reason is not None
        assert res.evaluations_used <= lam * cfg.t_max
        assert res.evaluations_used == sum(len(ind.archive) for ind in pop)


# ---------------------------------------------------------------------------
# static baselines


def test_static_sample_count_and_archives():
    pop = _pop([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])
    noisy = NoisyProblem(_plane(), make_noise("gaussian"))
    res = static_select(pop, 1, 5, EstimatorKind.MEAN, noisy, make_rng(15))
    assert res.evaluations_used == 15
    assert res.iterations == 1
    assert res.stop_reason is None
    for ind in pop:
        assert len(ind.archive) == 5


def test_static_skips_unchanged_individuals():
    pop = _pop([(0.0, 0.0), (1.0, 1.0)])
    pop[1] = Individual(
        np.array([1.0, 1.0]), SampleArchive([(9.0, 9.0)]), unchanged=True
    )
    noisy = NoisyProblem(_plane(), make_noise("none"))
    res = static_select(pop, 1, 3, EstimatorKind.MEAN, noisy, make_rng(16))
    assert res.evaluations_used == 3
    assert len(pop[1].archive) == 1
    # the unchanged individual is judged by its archive estimate
    assert res.selected.tolist() == [0]


def test_static_budget_guard():
    pop = _pop([(0.0, 0.0), (1.0, 1.0)])
    noisy = NoisyProblem(_plane(), make_noise("none"), max_evaluations=5)
    with pytest.raises(RuntimeError, match="static resampling"):
        static_select(pop, 1, 3, EstimatorKind.MEAN, noisy, make_rng(17))


def test_implicit_is_static_with_one_last_sample():
    points = [(0.4, 0.6), (0.6, 0.4), (0.1, 0.9)]
    noise = make_noise("gaussian")
    pop_a = _pop(points)
    pop_b = _pop(points)
    res_a = implicit_select(pop_a, 2, NoisyProblem(_plane(), noise), make_rng(18))
    res_b = static_select(
        pop_b, 2, 1, EstimatorKind.LAST, NoisyProblem(_plane(), noise), make_rng(18)
    )
    assert res_a.selected.tolist() == res_b.selected.tolist()
    for a, b in zip(pop_a, pop_b):
        np.testing.assert_array_equal(a.archive.as_array(), b.archive.as_array())


def test_median_resists_cauchy_outliers_better_than_mean():
    # Two individuals, one strictly better. Thirty samples each under
    # heavy-tailed noise: the median estimator should rank them correctly
    # nearly always, the mean noticeably less often.
    noise = make_noise("cauchy")
    correct = {EstimatorKind.MEDIAN: 0, EstimatorKind.MEAN: 0}
    for kind in correct:
        for trial in range(200):
            pop = _pop([(0.0, 0.0), (0.2, 0.2)])
            noisy = NoisyProblem(_plane(), noise)
            res = static_select(pop, 1, 30, kind, noisy, make_rng(19, trial))
            correct[kind] += res.selected.tolist() == [0]
    assert correct[EstimatorKind.MEDIAN] >= 190
    assert correct[EstimatorKind.MEAN] < correct[EstimatorKind.MEDIAN]


# ---------------------------------------------------------------------------
# selector construction


def test_selector_ids_and_estimators():
    assert ALGORITHM_IDS == (
        "implicit",
        "static-avg",
        "static-med",
        "rsp-i",
        "rsp-avg",
        "rsp-med",
    )
    assert algorithm_estimator("implicit") is EstimatorKind.LAST
    assert algorithm_estimator("static-avg") is EstimatorKind.MEAN
    assert algorithm_estimator("static-med") is EstimatorKind.MEDIAN
    assert algorithm_estimator("rsp-i") is EstimatorKind.LAST
    assert algorithm_estimator("rsp-avg") is EstimatorKind.MEAN
    assert algorithm_estimator("rsp-med") is EstimatorKind.MEDIAN
    with pytest.raises(ValueError, match="unknown algorithm"):
        algorithm_estimator("rsp-max")


def test_selector_worst_case_multipliers():
    assert make_selector("implicit").worst_evals_per_offspring == 1
    assert make_selector("static-avg", 7).worst_evals_per_offspring == 7
    assert make_selector("rsp-med", 12, 0.25).worst_evals_per_offspring == 12


def test_selector_parameter_validation():
    with pytest.raises(ValueError):
        make_selector("static-avg")
    with pytest.raises(ValueError):
        make_selector("rsp-i", 5)
    with pytest.raises(ValueError):
        make_selector("rsp-i", 5, 1.0)


# ---------------------------------------------------------------------------
# one full generation


def _fresh_parents(problem, noisy, rng, mu):
    span = problem.upper - problem.lower
    parents = []
    for _ in range(mu):
        genome = problem.lower + rng.random(problem.n_variables) * span
        ind = Individual(genome)
        ind.archive.append(noisy.evaluate(genome, rng))
        parents.append(ind)
    return parents


def test_generation_produces_mu_survivors_with_fresh_metadata():
    problem = make_problem("zdt1")
    noisy = NoisyProblem(problem, make_noise("none"))
    rng = make_rng(60)
    parents = _fresh_parents(problem, noisy, rng, 8)
    reps = np.vstack([p.archive.estimate(EstimatorKind.LAST) for p in parents])
    mating = environmental_select(reps, 8)
    selector = make_selector("implicit")
    survivors, next_mating, result = nsga2_generation(
        parents, mating, selector, noisy, make_rng(61), make_rng(62), make_rng(63)
    )
    assert len(survivors) == 8
    assert next_mating.rank.shape == (8,)
    assert next_mating.crowding.shape == (8,)
    assert result.selected.size == 8
    assert all(p.unchanged for p in parents)


def test_generation_matches_deterministic_selection_oracle():
    # Under zero noise with implicit selection, survivors must be exactly
    # the environmental selection of the pool's true objective values.
    # The pool is reconstructed by replaying the variation stream.
    problem = make_problem("zdt1")
    noise = make_noise("none")
    noisy_a = NoisyProblem(problem, noise)
    parents_a = _fresh_parents(problem, noisy_a, make_rng(65), 6)
    parents_b = [Individual(p.genome.copy(), p.archive.copy()) for p in parents_a]
    reps = np.vstack([p.archive.estimate(EstimatorKind.LAST) for p in parents_a])
    mating = environmental_select(reps, 6)

    survivors, _, result = nsga2_generation(
        parents_a,
        mating,
        make_selector("implicit"),
        noisy_a,
        make_rng(66),
        make_rng(67),
        make_rng(68),
    )

    from raceopt.moea import binary_tournament, polynomial_mutation, sbx_crossover

    replay = make_rng(66)
    offspring = []
    while len(offspring) < 6:
        ia = binary_tournament(mating, replay)
        ib = binary_tournament(mating, replay)
        ca, cb = sbx_crossover(
            parents_b[ia].genome,
            parents_b[ib].genome,
            problem.lower,
            problem.upper,
            20.0,
            1.0,
            replay,
        )
        ca = polynomial_mutation(ca, problem.lower, problem.upper, 20.0, None, replay)
        cb = polynomial_mutation(cb, problem.lower, problem.upper, 20.0, None, replay)
        offspring.append(ca)
        if len(offspring) < 6:
            offspring.append(cb)
    pool_genomes = [p.genome for p in parents_b] + offspring
    true_points = np.vstack([problem.true_eval(g) for g in pool_genomes])
    oracle = environmental_select(true_points, 6)
    assert result.selected.tolist() == oracle.selected.tolist()
    survivor_genomes = [pool_genomes[i] for i in oracle.selected]
    for got, want in zip(survivors, survivor_genomes):
        np.testing.assert_array_equal(got.genome, want)


def test_generation_evaluation_cost_is_bounded_by_the_race_cap():
    problem = make_problem("zdt1")
    noisy = NoisyProblem(problem, make_noise("gaussian"))
    rng = make_rng(70)
    parents = _fresh_parents(problem, noisy, rng, 10)
    reps = np.vstack([p.archive.estimate(EstimatorKind.MEDIAN) for p in parents])
    mating = environmental_select(reps, 10)
    before = noisy.evaluations
    selector = make_selector("rsp-med", sampling_budget=6, confidence=0.25)
    _, _, result = nsga2_generation(
        parents, mating, selector, noisy, make_rng(71), make_rng(72), make_rng(73)
    )
    spent = noisy.evaluations - before
    assert spent == result.evaluations_used
    # only modified offspring are sampled, never more than mu per iteration
    assert spent <= 10 * 6
