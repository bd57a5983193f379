"""Experiment harness: configuration, runs, batches, scoring, CSV output.

A run is one (configuration, seed) pair. Runs are bit-deterministic: the
seed spawns four named substreams (initialization, evaluation noise,
variation, bootstrap), every float is serialized with repr, and batch
outputs are sorted canonically, so sequential and parallel execution
produce byte-identical files.
"""
from __future__ import annotations

import csv
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .core import Individual, make_rng
from .metrics import build_frame, delta_hypervolume, fallback_frame, wilcoxon_signed_rank
from .moea import environmental_select
from .problems import NOISE_NAMES, PROBLEM_NAMES, NoisyProblem, make_noise, make_problem
from .racing import ALGORITHM_IDS, StopReason, algorithm_estimator, make_selector, nsga2_generation


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


DEFAULT_POPULATION = 100
DEFAULT_RUNS = 25
DEFAULT_PROXIMITY = 0.5

# Substream labels under the run seed.
STREAM_INIT = 0
STREAM_EVAL = 1
STREAM_VARIATION = 2
STREAM_BOOTSTRAP = 3


def default_max_evaluations(problem: str) -> int:
    return 500_000 if problem == "zdt6" else 100_000


def default_seeds(master_seed: int = 0, runs: int = DEFAULT_RUNS) -> tuple[int, ...]:
    return tuple(range(master_seed, master_seed + runs))


@dataclass
class ExperimentConfig:
    """One cell of the experiment grid plus its seeds.

    Construction canonicalizes: the estimator is derived from the
    algorithm, implicit averaging pins sampling_budget to 1, and
    non-racing algorithms pin confidence to 0. Canonical form makes
    equality, deduplication, and serialization well defined.
    """

    problem: str
    noise: str
    algorithm: str
    sampling_budget: int = 1
    confidence: float = 0.0
    estimator: str = ""
    proximity_threshold: float = DEFAULT_PROXIMITY
    population_size: int = DEFAULT_POPULATION
    max_evaluations: int | None = None
    seeds: tuple[int, ...] | None = None
    max_generations: int | None = None
    out: str = ""

    def __post_init__(self) -> None:
        self.problem = str(self.problem).lower()
        if self.problem not in PROBLEM_NAMES:
            raise ConfigError(
                f"unknown problem: {self.problem!r} (valid: {', '.join(PROBLEM_NAMES)})"
            )
        self.noise = str(self.noise).lower()
        if self.noise not in NOISE_NAMES:
            raise ConfigError(
                f"unknown noise: {self.noise!r} (valid: {', '.join(NOISE_NAMES)})"
            )
        self.algorithm = str(self.algorithm).lower()
        if self.algorithm not in ALGORITHM_IDS:
            raise ConfigError(
                f"unknown algorithm: {self.algorithm!r} (valid: {', '.join(ALGORITHM_IDS)})"
            )
        derived = algorithm_estimator(self.algorithm).value
        if self.estimator and self.estimator != derived:
            raise ConfigError(
                f"estimator {self.estimator!r} does not match algorithm "
                f"{self.algorithm!r} (expects {derived!r})"
            )
        self.estimator = derived
        self.sampling_budget = int(self.sampling_budget)
        self.confidence = float(self.confidence)
        if self.algorithm == "implicit":
            self.sampling_budget = 1
            self.confidence = 0.0
        elif self.algorithm.startswith("static"):
            if self.sampling_budget < 1:
                raise ConfigError("sampling_budget must be at least 1")
            self.confidence = 0.0
        else:
            if self.sampling_budget < 1:
                raise ConfigError("sampling_budget must be at least 1")
            if not 0.0 < self.confidence < 1.0:
                raise ConfigError("racing algorithms need a confidence in (0, 1)")
        self.proximity_threshold = float(self.proximity_threshold)
        if self.proximity_threshold < 0.0:
            raise ConfigError("proximity_threshold must be non-negative")
        self.population_size = int(self.population_size)
        if self.population_size < 2:
            raise ConfigError("population_size must be at least 2")
        if self.max_evaluations is None:
            self.max_evaluations = default_max_evaluations(self.problem)
        self.max_evaluations = int(self.max_evaluations)
        if self.max_evaluations < self.population_size:
            raise ConfigError("max_evaluations must cover population initialization")
        if self.seeds is None:
            self.seeds = default_seeds()
        self.seeds = tuple(int(s) for s in self.seeds)
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.max_generations is not None:
            self.max_generations = int(self.max_generations)
            if self.max_generations < 0:
                raise ConfigError("max_generations must be non-negative")
        self.out = str(self.out)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "seeds":
                value = ",".join(str(s) for s in value)
            elif value is None:
                value = ""
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        raw: dict[str, str] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"expected key = value, got {line!r}")
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs: dict[str, object] = {}
        for key, value in raw.items():
            if key in ("problem", "noise", "algorithm", "estimator", "out"):
                kwargs[key] = value
            elif key == "seeds":
                kwargs[key] = tuple(int(s) for s in value.split(",")) if value else None
            elif key in ("confidence", "proximity_threshold"):
                kwargs[key] = float(value)
            else:
                kwargs[key] = int(value) if value else None
        try:
            return cls(**kwargs)  # type: ignore[arg-type]
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def variant_key(self) -> tuple[str, int, float]:
        return (self.algorithm, self.sampling_budget, self.confidence)

    def run_filename(self, seed: int) -> str:
        return (
            f"{self.problem}_{self.noise}_{self.algorithm}"
            f"_b{self.sampling_budget}_c{self.confidence!r}_s{seed}.csv"
        )


@dataclass(frozen=True)
class GenRow:
    generation: int
    cumulative_evaluations: int
    stop_reason: str
    race_length: int


@dataclass
class RunRecord:
    """Everything one run produces: trace rows and the final population."""

    config: ExperimentConfig
    seed: int
    gen_rows: list[GenRow]
    final_points: np.ndarray
    evaluations: int


def run_experiment(cfg: ExperimentConfig, seed: int) -> RunRecord:
    """Execute one seeded run of the configured algorithm.

    The initial population is uniform in the box and evaluated once
    (counted against the budget). A generation starts only if its exact
    worst-case evaluation demand still fits, so the cap is never
    exceeded.
    """
    problem = make_problem(cfg.problem)
    noise = make_noise(cfg.noise)
    noisy = NoisyProblem(problem, noise, cfg.max_evaluations)
    selector = make_selector(
        cfg.algorithm,
        cfg.sampling_budget,
        cfg.confidence if cfg.confidence > 0.0 else None,
        cfg.proximity_threshold,
    )
    init_rng = make_rng(seed, STREAM_INIT)
    eval_rng = make_rng(seed, STREAM_EVAL)
    variation_rng = make_rng(seed, STREAM_VARIATION)
    boot_rng = make_rng(seed, STREAM_BOOTSTRAP)

    genomes = init_rng.uniform(
        problem.lower, problem.upper, size=(cfg.population_size, problem.n_variables)
    )
    parents = [Individual(g) for g in genomes]
    for ind in parents:
        ind.archive.append(noisy.evaluate(ind.genome, eval_rng))
    reps = np.vstack([ind.archive.estimate(selector.estimator) for ind in parents])
    mating = environmental_select(reps, cfg.population_size)

    gen_rows: list[GenRow] = []
    generation = 0
    worst_per_generation = cfg.population_size * selector.worst_evals_per_offspring
    while cfg.max_generations is None or generation < cfg.max_generations:
        if not noisy.can_afford(worst_per_generation):
            break
        parents, mating, result = nsga2_generation(
            parents, mating, selector, noisy, variation_rng, eval_rng, boot_rng
        )
        generation += 1
        gen_rows.append(
            GenRow(
                generation=generation,
                cumulative_evaluations=noisy.evaluations,
                stop_reason=result.stop_reason.value if result.stop_reason else "",
                race_length=result.iterations,
            )
        )
    # Assessment scores the true objectives of the surviving genomes: a
    # noisy archive estimate can land below the attainable front (a
    # Cauchy-corrupted mean does this routinely) and would be credited
    # with impossible hypervolume. These evaluations are measurement,
    # not search, so they bypass the noise model and the budget counter.
    final_points = np.vstack([problem.true_eval(ind.genome) for ind in parents])
    return RunRecord(
        config=cfg,
        seed=seed,
        gen_rows=gen_rows,
        final_points=final_points,
        evaluations=noisy.evaluations,
    )


_META_KEYS = (
    "problem",
    "noise",
    "algorithm",
    "estimator",
    "sampling_budget",
    "confidence",
    "proximity_threshold",
    "population_size",
    "max_evaluations",
    "max_generations",
    "seed",
    "generations",
    "evaluations",
)

_STOP_TALLY_ORDER = (
    StopReason.QUOTA_SELECTED.value,
    StopReason.QUOTA_DISCARDED.value,
    StopReason.PROXIMITY.value,
    StopReason.T_MAX.value,
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_run_csv(record: RunRecord, path) -> None:
    """Serialize a run: meta rows, one row per generation, the final
    population's true objective values, and a fallback-frame score."""
    cfg = record.config
    meta_values = {
        "problem": cfg.problem,
        "noise": cfg.noise,
        "algorithm": cfg.algorithm,
        "estimator": cfg.estimator,
        "sampling_budget": cfg.sampling_budget,
        "confidence": cfg.confidence,
        "proximity_threshold": cfg.proximity_threshold,
        "population_size": cfg.population_size,
        "max_evaluations": cfg.max_evaluations,
        "max_generations": cfg.max_generations,
        "seed": record.seed,
        "generations": len(record.gen_rows),
        "evaluations": record.evaluations,
    }
    frame = fallback_frame(cfg.problem)
    report = delta_hypervolume(record.final_points, make_problem(cfg.problem), frame)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        for key in _META_KEYS:
            writer.writerow(["meta", key, _fmt(meta_values[key])])
        for row in record.gen_rows:
            tallies = [1 if row.stop_reason == reason else 0 for reason in _STOP_TALLY_ORDER]
            writer.writerow(
                ["gen", row.generation, row.cumulative_evaluations, *tallies, row.race_length]
            )
        for point in record.final_points:
            writer.writerow(["pop", *(_fmt(float(v)) for v in point)])
        writer.writerow(["score", "hv_front", _fmt(report.hv_front)])
        writer.writerow(["score", "hv_solution", _fmt(report.hv_solution)])
        writer.writerow(["score", "delta_hv", _fmt(report.delta_hv)])
        writer.writerow(["score", "frame", "fallback"])


@dataclass
class RunFileData:
    meta: dict[str, str]
    gen_rows: list[GenRow]
    points: np.ndarray
    score: dict[str, str]


def read_run_csv(path) -> RunFileData:
    meta: dict[str, str] = {}
    gen_rows: list[GenRow] = []
    points: list[list[float]] = []
    score: dict[str, str] = {}
    with Path(path).open(newline="") as handle:
        for row in csv.reader(handle):
            if not row:
                continue
            kind = row[0]
            if kind == "meta":
                meta[row[1]] = row[2]
            elif kind == "gen":
                tallies = [int(v) for v in row[3:7]]
                reason = ""
                for value, name in zip(tallies, _STOP_TALLY_ORDER):
                    if value:
                        reason = name
                gen_rows.append(GenRow(int(row[1]), int(row[2]), reason, int(row[7])))
            elif kind == "pop":
                points.append([float(v) for v in row[1:]])
            elif kind == "score":
                score[row[1]] = row[2]
            else:
                raise ValueError(f"unknown record kind {kind!r} in {path}")
    if not meta:
        raise ValueError(f"{path} is not a run file")
    return RunFileData(
        meta=meta,
        gen_rows=gen_rows,
        points=np.asarray(points, dtype=float),
        score=score,
    )


SUMMARY_COLUMNS = (
    "problem",
    "noise",
    "algorithm",
    "estimator",
    "budget",
    "confidence",
    "seed",
    "delta_hv",
    "evaluations",
)

SIGNIFICANCE_COLUMNS = (
    "problem",
    "noise",
    "algorithm_a",
    "budget_a",
    "confidence_a",
    "algorithm_b",
    "budget_b",
    "confidence_b",
    "n",
    "p_value",
)


@dataclass(frozen=True)
class SummaryRow:
    problem: str
    noise: str
    algorithm: str
    estimator: str
    budget: int
    confidence: float
    seed: int
    delta_hv: float
    evaluations: int

    def sort_key(self):
        return (
            self.problem,
            self.noise,
            self.algorithm,
            self.budget,
            self.confidence,
            self.seed,
        )


def _collect_run_files(source) -> list[Path]:
    root = Path(source)
    if root.is_file():
        return [root]
    if not root.is_dir():
        raise ConfigError(f"no such run source: {source}")
    files = []
    for path in sorted(root.rglob("*.csv")):
        with path.open(newline="") as handle:
            first = handle.readline()
        if first.startswith("meta,"):
            files.append(path)
    if not files:
        raise ConfigError(f"no run files found under {source}")
    return files


def score_runs(source, summary_path, significance_path, front_resolution: int = 1000) -> None:
    """Score run files with batch frames and write summary + significance.

    One normalization frame per (problem, noise) cell, built from the
    exact front sampled at ``front_resolution`` plus every final
    population in the cell. Pairwise two-sided Wilcoxon tests compare
    algorithm variants within a cell, paired by common seeds (at least 5
    required for a row).
    """
    runs = [read_run_csv(path) for path in _collect_run_files(source)]
    by_cell: dict[tuple[str, str], list[RunFileData]] = {}
    for run in runs:
        by_cell.setdefault((run.meta["problem"], run.meta["noise"]), []).append(run)

    summary_rows: list[SummaryRow] = []
    for (problem_name, noise_name), cell_runs in sorted(by_cell.items()):
        problem = make_problem(problem_name)
        front = problem.true_front(front_resolution)
        frame = build_frame(front, *(run.points for run in cell_runs))
        for run in cell_runs:
            report = delta_hypervolume(run.points, problem, frame, front_resolution)
            summary_rows.append(
                SummaryRow(
                    problem=problem_name,
                    noise=noise_name,
                    algorithm=run.meta["algorithm"],
                    estimator=run.meta["estimator"],
                    budget=int(run.meta["sampling_budget"]),
                    confidence=float(run.meta["confidence"]),
                    seed=int(run.meta["seed"]),
                    delta_hv=report.delta_hv,
                    evaluations=int(run.meta["evaluations"]),
                )
            )
    summary_rows.sort(key=SummaryRow.sort_key)

    summary_path = Path(summary_path)
    summary_path.parent.mkdir(parents=True, exist_ok=True)
    with summary_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_COLUMNS)
        for row in summary_rows:
            writer.writerow(
                [
                    row.problem,
                    row.noise,
                    row.algorithm,
                    row.estimator,
                    row.budget,
                    _fmt(row.confidence),
                    row.seed,
                    _fmt(row.delta_hv),
                    row.evaluations,
                ]
            )

    significance_path = Path(significance_path)
    significance_path.parent.mkdir(parents=True, exist_ok=True)
    with significance_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SIGNIFICANCE_COLUMNS)
        cells: dict[tuple[str, str], dict[tuple[str, int, float], dict[int, float]]] = {}
        for row in summary_rows:
            variant = (row.algorithm, row.budget, row.confidence)
            cells.setdefault((row.problem, row.noise), {}).setdefault(variant, {})[
                row.seed
            ] = row.delta_hv
        for (problem_name, noise_name), variants in sorted(cells.items()):
            for va, vb in itertools.combinations(sorted(variants), 2):
                common = sorted(set(variants[va]) & set(variants[vb]))
                if len(common) < 5:
                    continue
                a = [variants[va][s] for s in common]
                b = [variants[vb][s] for s in common]
                p = wilcoxon_signed_rank(a, b)
                writer.writerow(
                    [
                        problem_name,
                        noise_name,
                        va[0],
                        va[1],
                        _fmt(va[2]),
                        vb[0],
                        vb[1],
                        _fmt(vb[2]),
                        len(common),
                        _fmt(p),
                    ]
                )


def _execute_run(cfg_text: str, seed: int, path_str: str) -> tuple[str, str]:
    """Worker: run one (config, seed) pair and write its file."""
    try:
        cfg = ExperimentConfig.from_text(cfg_text)
        record = run_experiment(cfg, seed)
        write_run_csv(record, path_str)
        return (path_str, "")
    except Exception as exc:  # recorded, batch continues
        return (path_str, f"{type(exc).__name__}: {exc}")


def run_batch(configs, out_dir, jobs: int = 1) -> tuple[Path, Path]:
    """Run every (config, seed) pair, then score the batch.

    Run files land in ``out_dir/runs``; the scored summary and the
    pairwise significance table in ``out_dir``. Failed runs are recorded
    in ``out_dir/failures.csv`` and excluded from scoring instead of
    aborting the batch. Returns (summary_path, significance_path).
    """
    configs = list(configs)
    if not configs:
        raise ConfigError("batch needs at least one configuration")
    out_dir = Path(out_dir)
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    tasks: list[tuple[str, int, str]] = []
    seen: set[str] = set()
    for cfg in configs:
        for seed in cfg.seeds:
            name = cfg.run_filename(seed)
            if name in seen:
                continue
            seen.add(name)
            tasks.append((cfg.to_text(), seed, str(runs_dir / name)))
    if jobs > 1:
        texts, seeds, paths = zip(*tasks)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute_run, texts, seeds, paths, chunksize=1))
    else:
        results = [_execute_run(*task) for task in tasks]
    failures = [(path, err) for path, err in results if err]
    if failures:
        with (out_dir / "failures.csv").open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["run_file", "error"])
            for path, err in sorted(failures):
                writer.writerow([Path(path).name, err])
        for path, _ in failures:
            Path(path).unlink(missing_ok=True)
    summary_path = out_dir / "summary.csv"
    significance_path = out_dir / "significance.csv"
    score_runs(runs_dir, summary_path, significance_path)
    return summary_path, significance_path


_GRID_LIST_KEYS = ("problems", "noises", "algorithms", "budgets", "confidences")
_GRID_SCALAR_KEYS = (
    "population",
    "evaluations",
    "proximity",
    "master_seed",
    "runs",
    "jobs",
    "max_generations",
)


def parse_grid(text: str) -> dict:
    """Parse a flat key=value grid file (comments with #, comma lists)."""
    grid: dict[str, object] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key in _GRID_LIST_KEYS:
            grid[key] = [item.strip() for item in value.split(",") if item.strip()]
        elif key in _GRID_SCALAR_KEYS:
            grid[key] = value
        else:
            raise ConfigError(
                f"unknown grid key: {key!r} (valid: "
                f"{', '.join(_GRID_LIST_KEYS + _GRID_SCALAR_KEYS)})"
            )
    return grid


def expand_grid(grid: dict) -> list[ExperimentConfig]:
    """Expand a parsed grid into canonical configs, deduplicated.

    Implicit averaging ignores budget and confidence, static resampling
    ignores confidence; their cells collapse accordingly.
    """
    problems = grid.get("problems") or list(PROBLEM_NAMES)
    noises = grid.get("noises") or list(NOISE_NAMES)
    algorithms = grid.get("algorithms") or list(ALGORITHM_IDS)
    budgets = [int(b) for b in grid.get("budgets", [])]
    confidences = [float(c) for c in grid.get("confidences", [])]
    master_seed = int(grid.get("master_seed", 0))
    runs = int(grid.get("runs", DEFAULT_RUNS))
    seeds = default_seeds(master_seed, runs)
    common = {
        "proximity_threshold": float(grid.get("proximity", DEFAULT_PROXIMITY)),
        "population_size": int(grid.get("population", DEFAULT_POPULATION)),
        "seeds": seeds,
    }
    if grid.get("evaluations"):
        common["max_evaluations"] = int(grid["evaluations"])
    if grid.get("max_generations"):
        common["max_generations"] = int(grid["max_generations"])
    configs: list[ExperimentConfig] = []
    seen: set[str] = set()

    def push(cfg: ExperimentConfig) -> None:
        text = cfg.to_text()
        if text not in seen:
            seen.add(text)
            configs.append(cfg)

    for problem, noise, algorithm in itertools.product(problems, noises, algorithms):
        if algorithm == "implicit":
            push(ExperimentConfig(problem, noise, algorithm, **common))
            continue
        if not budgets:
            raise ConfigError(f"{algorithm} requires a budgets list in the grid")
        for budget in budgets:
            if algorithm.startswith("static"):
                push(
                    ExperimentConfig(
                        problem, noise, algorithm, sampling_budget=budget, **common
                    )
                )
                continue
            if not confidences:
                raise ConfigError(f"{algorithm} requires a confidences list in the grid")
            for confidence in confidences:
                push(
                    ExperimentConfig(
                        problem,
                        noise,
                        algorithm,
                        sampling_budget=budget,
                        confidence=confidence,
                        **common,
                    )
                )
    return configs


BOXPLOT_COLUMNS = (
    "problem",
    "noise",
    "algorithm",
    "budget",
    "confidence",
    "count",
    "min",
    "q1",
    "median",
    "q3",
    "max",
)


def emit_boxplot_data(summary_path, out_path) -> None:
    """Summarize delta_hv per variant as five-number rows.

    Quantiles use numpy's linear interpolation rule, so values 1..5 give
    q1 = 2, median = 3, q3 = 4.
    """
    groups: dict[tuple[str, str, str, int, float], list[float]] = {}
    with Path(summary_path).open(newline="") as handle:
        for row in csv.DictReader(handle):
            key = (
                row["problem"],
                row["noise"],
                row["algorithm"],
                int(row["budget"]),
                float(row["confidence"]),
            )
            groups.setdefault(key, []).append(float(row["delta_hv"]))
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(BOXPLOT_COLUMNS)
        for key in sorted(groups):
            values = np.asarray(groups[key], dtype=float)
            q = np.percentile(values, [0, 25, 50, 75, 100], method="linear")
            writer.writerow(
                [
                    key[0],
                    key[1],
                    key[2],
                    key[3],
                    _fmt(key[4]),
                    values.size,
                    *(_fmt(float(v)) for v in q),
                ]
            )
