"""Derive the per-problem fallback normalization frames.

The batch scorer always builds its frame from the runs it is scoring, but
scoring a single run needs a fixed frame. The constants frozen in
raceopt.metrics.FALLBACK_FRAMES come from the reference batch defined
here: for every problem, algorithms {implicit, static-med, rsp-med} with
sampling budget 15 and confidence 0.25 where applicable, noises
{none, gaussian, cauchy}, seeds {0, 1, 2}, population 40, 20k evaluations.
The ideal is the component-wise minimum of the exact front; the nadir is
the component-wise maximum over the front and every final population the
batch produced.

Run:  python scripts/derive_fallback_frames.py
Prints one dict literal per problem, full float precision.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from raceopt.harness import ExperimentConfig, run_experiment
from raceopt.problems import PROBLEM_NAMES, make_problem

ALGORITHMS = (("implicit", 1, 0.0), ("static-med", 15, 0.0), ("rsp-med", 15, 0.25))
NOISES = ("none", "gaussian", "cauchy")
SEEDS = (0, 1, 2)


def _one(args: tuple[str, str, str, int, float, int]) -> np.ndarray:
    problem, noise, algo, budget, confidence, seed = args
    cfg = ExperimentConfig(
        problem=problem,
        noise=noise,
        algorithm=algo,
        sampling_budget=budget,
        confidence=confidence,
        population_size=40,
        max_evaluations=20000,
    )
    return run_experiment(cfg, seed).final_points


def main() -> None:
    tasks = [
        (problem, noise, algo, budget, confidence, seed)
        for problem in PROBLEM_NAMES
        for noise in NOISES
        for algo, budget, confidence in ALGORITHMS
        for seed in SEEDS
    ]
    with ProcessPoolExecutor() as pool:
        finals = list(pool.map(_one, tasks))

    by_problem: dict[str, list[np.ndarray]] = {name: [] for name in PROBLEM_NAMES}
    for (problem, *_), points in zip(tasks, finals):
        by_problem[problem].append(points)

    for name in PROBLEM_NAMES:
        front = make_problem(name).true_front(1000)
        union = np.vstack([front, *by_problem[name]])
        ideal = front.min(axis=0)
        nadir = union.max(axis=0)
        print(
            f'    "{name}": NormalizationFrame(\n'
            f"        ideal=np.array([{float(ideal[0])!r}, {float(ideal[1])!r}]),\n"
            f"        nadir=np.array([{float(nadir[0])!r}, {float(nadir[1])!r}]),\n"
            f"    ),"
        )


if __name__ == "__main__":
    main()
