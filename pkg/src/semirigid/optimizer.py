"""Elitist binary-coded genetic algorithm over discrete section indices.

Each generation: evaluate, keep the best ``ne`` chromosomes, fill the rest with
one-point crossover children of uniformly drawn parent pairs, flip every child
bit with the mutation rate, then repair out-of-range codes by modulo pool size.

Randomness comes from ``numpy.random.Generator(PCG64(seed))`` and is consumed
only inside the sequential generation step, so evaluation may run in parallel
without changing results.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np

from . import fuzzy
from .constraints import Limits, evaluate_constraints
from .fuzzy import FitnessMode, FuzzyConfig, Shape
from .loading import LoadSettings, design_load_cases
from .model import ConfigError, DesignGroup, Frame, SizedFrame, frame_weight
from .sections import STEEL_UNIT_WEIGHT
from .solver import UnstableStructure, analyze

E_STEEL = 2.059e11  # Pa
NEWTONS_PER_TONNE = 9806.65
HISTORY_HEADER = ("generation", "best_weight_n", "best_lambda", "mean_fitness", "best_so_far_weight_n")


@dataclass(frozen=True)
class GAConfig:
    population_size: int = 30
    elitism_rate: float = 0.1
    mutation_rate: float = 0.005
    max_generations: int = 75
    seed: int = 0
    restarts: int = 1
    selection: str = "uniform"  # or "tournament2"
    pilot_generations: int = 20

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError("population_size must be >= 2")
        if not (0.0 <= self.elitism_rate <= 1.0 and 0.0 <= self.mutation_rate <= 1.0):
            raise ConfigError("rates must lie in [0, 1]")
        if self.max_generations < 1 or self.restarts < 1:
            raise ConfigError("generations and restarts must be >= 1")
        if self.selection not in ("uniform", "tournament2"):
            raise ConfigError(f"unknown selection {self.selection!r}")

    @property
    def n_elite(self) -> int:
        """Number of elites: round(pop * rate), at least 1, lowered so the remainder pairs up."""
        ne = max(1, round(self.population_size * self.elitism_rate))
        ne = min(ne, self.population_size)
        if (self.population_size - ne) % 2:
            ne -= 1
        if ne < 1:
            ne += 2
        return ne

    @property
    def n_crossovers(self) -> int:
        return (self.population_size - self.n_elite) // 2

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any] | None) -> "GAConfig":
        cfg = dict(cfg or {})
        try:
            return cls(int(cfg.get("population", 30)), float(cfg.get("elitism_rate", 0.1)),
                       float(cfg.get("mutation_rate", 0.005)), int(cfg.get("generations", 75)),
                       int(cfg.get("seed", 0)), int(cfg.get("restarts", 1)),
                       str(cfg.get("selection", "uniform")), int(cfg.get("pilot_generations", 20)))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"ga: {exc}") from None


# --------------------------------------------------------------------------- encoding


def bits_for(pool_size: int) -> int:
    return math.ceil(math.log2(pool_size)) if pool_size > 1 else 0


@dataclass(frozen=True)
class Chromosome:
    bits: tuple[int, ...]
    decoded: tuple[int, ...]


class Encoding:
    """Fixed-length binary layout: one most-significant-bit-first field per group."""

    def __init__(self, groups: Sequence[DesignGroup]):
        self.pool_sizes = [len(g.pool) for g in groups]
        self.widths = [bits_for(n) for n in self.pool_sizes]
        self.length = sum(self.widths)

    def encode(self, indices: Sequence[int]) -> np.ndarray:
        out = []
        for idx, width, n in zip(indices, self.widths, self.pool_sizes):
            if not 0 <= idx < n:
                raise ValueError(f"index {idx} outside pool of size {n}")
            out.extend((idx >> (width - 1 - k)) & 1 for k in range(width))
        return np.array(out, dtype=np.uint8)

    def decode(self, bits: Sequence[int]) -> tuple[int, ...]:
        """Pool indices; codes past the pool end wrap modulo the pool size."""
        out, pos = [], 0
        for width, n in zip(self.widths, self.pool_sizes):
            value = 0
            for b in bits[pos:pos + width]:
                value = (value << 1) | int(b)
            pos += width
            out.append(value % n)
        return tuple(out)

    def repair(self, bits: np.ndarray) -> np.ndarray:
        return self.encode(self.decode(bits))

    def chromosome(self, bits: np.ndarray) -> Chromosome:
        return Chromosome(tuple(int(b) for b in bits), self.decode(bits))


def encode(assignment: Sequence[int], groups: Sequence[DesignGroup]) -> Chromosome:
    enc = Encoding(groups)
    return enc.chromosome(enc.encode(assignment))


def decode(chromosome: Chromosome | Sequence[int], groups: Sequence[DesignGroup]) -> tuple[int, ...]:
    bits = chromosome.bits if isinstance(chromosome, Chromosome) else chromosome
    return Encoding(groups).decode(bits)


# --------------------------------------------------------------------------- problem / evaluation


@dataclass(frozen=True)
class Problem:
    frame: Frame
    loads: LoadSettings = LoadSettings()
    limits: Limits = Limits()
    fuzzy: FuzzyConfig = FuzzyConfig()
    E: float = E_STEEL
    unit_weight: float = STEEL_UNIT_WEIGHT
    name: str = "problem"

    def sized(self, indices: Sequence[int]) -> SizedFrame:
        return SizedFrame(self.frame, tuple(g.pool[i] for g, i in zip(self.frame.groups, indices)))


@dataclass(frozen=True)
class FitnessRecord:
    indices: tuple[int, ...]
    weight: float  # N
    lam: float
    fitness: float
    worst: float
    roof_disp: float  # m, max over combinations
    phi: float
    unstable: bool = False

    @property
    def feasible(self) -> bool:
        return not self.unstable and self.worst <= 1.0

    def rank_key(self):
        # higher fitness first; ties go to the smaller violation, then the lighter design
        return (-self.fitness, max(self.worst, 1.0), self.weight, self.indices)


def _memberships(problem: Problem, weight: float, report) -> tuple[float, list, list, list]:
    cfg = problem.fuzzy
    if cfg.calibrated:
        mu_f = fuzzy.objective_membership(weight, cfg.objective_spec())
    elif cfg.shape is Shape.CRISP:
        mu_f = 1.0  # standard GA: objective enters only through the weight tie-break
    else:
        raise ConfigError("objective bounds must be calibrated for fuzzy shapes")
    cs = cfg.constraint_spec
    mu_s = [fuzzy.constraint_membership(r, cs) for r in report.stress_ratios.values()]
    mu_d = [fuzzy.constraint_membership(report.drift_ratio, cs)]
    mu_a = [fuzzy.constraint_membership(r, cs) for r in report.aux_ratios]
    return mu_f, mu_s, mu_d, mu_a


def evaluate_indices(indices: Sequence[int], problem: Problem) -> FitnessRecord:
    indices = tuple(int(i) for i in indices)
    sized = problem.sized(indices)
    weight = frame_weight(sized, problem.unit_weight)
    cfg = problem.fuzzy
    try:
        results = analyze(sized, design_load_cases(sized, problem.loads), problem.E)
    except UnstableStructure:
        n = len(problem.frame.members)
        phi = fuzzy.penalized_phi(0.0, 0.0, [0.0] * n, [0.0], [], cfg.penalty)
        return FitnessRecord(indices, weight, 0.0, fuzzy.fitness(0.0, phi, cfg.mode), math.inf, math.inf, phi, True)
    report = evaluate_constraints(sized, results, problem.E, problem.limits)
    mu_f, mu_s, mu_d, mu_a = _memberships(problem, weight, report)
    lam = fuzzy.aggregate_lambda(mu_f, mu_s + mu_d + mu_a)
    phi = fuzzy.penalized_phi(lam, mu_f, mu_s, mu_d, mu_a, cfg.penalty)
    roof = max(r.roof_drift(sized) for r in results)
    return FitnessRecord(indices, weight, lam, fuzzy.fitness(lam, phi, cfg.mode), report.worst, roof, phi)


def evaluate(chromosome: Chromosome | Sequence[int], problem: Problem) -> FitnessRecord:
    """Decode, analyze every load combination, fuzzify and score one chromosome."""
    indices = decode(chromosome, problem.frame.groups)
    return evaluate_indices(indices, problem)


_worker_problem: Problem | None = None


def _init_worker(problem: Problem) -> None:
    global _worker_problem
    _worker_problem = problem


def _worker_eval(indices):
    return evaluate_indices(indices, _worker_problem)


class Evaluator:
    """Memoizing evaluator; ``jobs > 1`` farms uncached designs out to processes."""

    def __init__(self, problem: Problem, jobs: int = 1):
        self.problem = problem
        self.cache: dict[tuple[int, ...], FitnessRecord] = {}
        self.jobs = jobs
        self._pool = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def __call__(self, population: Sequence[tuple[int, ...]]) -> list[FitnessRecord]:
        todo = list(dict.fromkeys(p for p in population if p not in self.cache))
        if todo:
            if self.jobs > 1 and len(todo) > 1:
                if self._pool is None:
                    self._pool = ProcessPoolExecutor(self.jobs, initializer=_init_worker,
                                                     initargs=(self.problem,))
                records = list(self._pool.map(_worker_eval, todo))
            else:
                records = [evaluate_indices(p, self.problem) for p in todo]
            self.cache.update(zip(todo, records))
        return [self.cache[p] for p in population]


# --------------------------------------------------------------------------- operators


def ranking(records: Sequence[FitnessRecord]) -> list[int]:
    return sorted(range(len(records)), key=lambda k: records[k].rank_key())


def _pick_parents(n: int, config: GAConfig, rng: np.random.Generator, order: Sequence[int]) -> tuple[int, int]:
    if config.selection == "uniform":
        a, b = rng.choice(n, size=2, replace=False)
        return int(a), int(b)
    rank = {k: r for r, k in enumerate(order)}
    picks = []
    for _ in range(2):
        x, y = rng.choice(n, size=2, replace=False)
        picks.append(int(x) if rank[int(x)] < rank[int(y)] else int(y))
    if picks[0] == picks[1]:
        picks[1] = (picks[1] + 1 + int(rng.integers(n - 1))) % n
    return picks[0], picks[1]


def one_point_crossover(a: np.ndarray, b: np.ndarray, cut: int) -> tuple[np.ndarray, np.ndarray]:
    return np.concatenate([a[:cut], b[cut:]]), np.concatenate([b[:cut], a[cut:]])


def crossover_children(population: Sequence[np.ndarray], order: Sequence[int], config: GAConfig,
                       rng: np.random.Generator) -> list[np.ndarray]:
    """2*nc children from uniformly drawn parent pairs (distinct within a pair)."""
    n = len(population)
    length = len(population[0])
    children = []
    for _ in range(config.n_crossovers):
        ia, ib = _pick_parents(n, config, rng, order)
        a, b = population[ia], population[ib]
        if length >= 2:
            cut = int(rng.integers(1, length))
            c, d = one_point_crossover(a, b, cut)
        else:
            c, d = a.copy(), b.copy()
        children.extend((c, d))
    return children


def mutate(children: Sequence[np.ndarray], rate: float, rng: np.random.Generator) -> list[np.ndarray]:
    if not children:
        return []
    block = np.array(children, dtype=np.uint8)
    flips = rng.random(block.shape) < rate
    return list(block ^ flips.astype(np.uint8))


def step_generation(population: Sequence[np.ndarray], records: Sequence[FitnessRecord], config: GAConfig,
                    rng: np.random.Generator, encoding: Encoding) -> list[np.ndarray]:
    order = ranking(records)
    elites = [population[k].copy() for k in order[:config.n_elite]]
    children = mutate(crossover_children(population, order, config, rng), config.mutation_rate, rng)
    return elites + [encoding.repair(c) for c in children]


def initial_population(encoding: Encoding, size: int, rng: np.random.Generator) -> list[np.ndarray]:
    raw = rng.integers(0, 2, size=(size, encoding.length), dtype=np.uint8)
    return [encoding.repair(row) for row in raw]


# --------------------------------------------------------------------------- runs


@dataclass
class GenerationRecord:
    generation: int
    best_weight_n: float
    best_lambda: float
    mean_fitness: float
    best_so_far_weight_n: float


@dataclass
class RestartResult:
    seed: int
    history: list[GenerationRecord]
    best: FitnessRecord  # lightest feasible, else top-ranked
    final_population: list[tuple[int, ...]] = field(default_factory=list)

    def history_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HISTORY_HEADER)
        for h in self.history:
            w.writerow([h.generation, repr(h.best_weight_n), repr(h.best_lambda),
                        repr(h.mean_fitness), repr(h.best_so_far_weight_n)])
        return buf.getvalue()


@dataclass
class OptimizationRun:
    problem_name: str
    config: GAConfig
    fuzzy: FuzzyConfig
    restarts: list[RestartResult]
    best: FitnessRecord
    best_design: dict[str, str]

    @property
    def history(self) -> list[GenerationRecord]:
        return self.restarts[self.best_restart].history

    @property
    def best_restart(self) -> int:
        return next(k for k, r in enumerate(self.restarts) if r.best == self.best)

    def summary(self) -> dict:
        b = self.best
        return {
            "problem": self.problem_name,
            "best_design": self.best_design,
            "weight_n": b.weight,
            "weight_t": b.weight / NEWTONS_PER_TONNE,
            "roof_disp_m": b.roof_disp,
            "lambda": b.lam,
            "worst_ratio": b.worst,
            "feasible": b.feasible,
            "best_restart": self.best_restart,
            "restart_best_weights_n": [r.best.weight for r in self.restarts],
            "ga": asdict(self.config),
            "fuzzy": self.fuzzy.as_dict(),
        }


def _better_final(a: FitnessRecord | None, b: FitnessRecord) -> bool:
    """Whether b should replace a as the reported best design."""
    if a is None:
        return True
    if a.feasible != b.feasible:
        return b.feasible
    if b.feasible:
        return (b.weight, b.indices) < (a.weight, a.indices)
    return b.rank_key() < a.rank_key()


def run_single(problem: Problem, config: GAConfig, seed: int, evaluator: Evaluator | None = None) -> RestartResult:
    evaluator = evaluator or Evaluator(problem)
    encoding = Encoding(problem.frame.groups)
    rng = np.random.Generator(np.random.PCG64(seed))
    population = initial_population(encoding, config.population_size, rng)
    history = []
    best: FitnessRecord | None = None
    best_feasible_weight = math.inf
    for gen in range(1, config.max_generations + 1):
        keys = [encoding.decode(b) for b in population]
        records = evaluator(keys)
        for r in records:
            if _better_final(best, r):
                best = r
            if r.feasible:
                best_feasible_weight = min(best_feasible_weight, r.weight)
        top = records[ranking(records)[0]]
        history.append(GenerationRecord(gen, top.weight, top.lam,
                                        float(np.mean([r.fitness for r in records])), best_feasible_weight))
        if gen < config.max_generations:
            population = step_generation(population, records, config, rng, encoding)
    return RestartResult(seed, history, best, keys)


def calibrate_objective(problem: Problem, config: GAConfig, evaluator: Evaluator | None = None) -> FuzzyConfig:
    """Fill unset objective bounds from a short standard-GA (crisp) pilot run.

    F'' = best pilot weight, F' = 0.6 F'', F_u = 1.5 F''.
    """
    cfg = problem.fuzzy
    if cfg.calibrated or cfg.shape is Shape.CRISP:
        return cfg
    pilot_problem = replace(problem, fuzzy=replace(cfg, shape=Shape.CRISP, f_lower=None, f_upper=None,
                                                   f_max=None, mode=FitnessMode.LAMBDA))
    pilot_cfg = replace(config, max_generations=config.pilot_generations, restarts=1)
    pilot = run_single(pilot_problem, pilot_cfg, config.seed, evaluator or Evaluator(pilot_problem))
    f_upper = cfg.f_upper if cfg.f_upper is not None else pilot.best.weight
    f_lower = cfg.f_lower if cfg.f_lower is not None else 0.6 * f_upper
    f_max = cfg.f_max if cfg.f_max is not None else 1.5 * f_upper
    return replace(cfg, f_lower=f_lower, f_upper=f_upper, f_max=f_max)


def run(problem: Problem, config: GAConfig, jobs: int = 1) -> OptimizationRun:
    """Calibrate (if needed) and execute ``config.restarts`` independent runs with seeds seed+i."""
    fuzzy_cfg = calibrate_objective(problem, config)
    problem = replace(problem, fuzzy=fuzzy_cfg)
    restarts = []
    with Evaluator(problem, jobs) as evaluator:
        for i in range(config.restarts):
            restarts.append(run_single(problem, config, config.seed + i, evaluator))
    best = None
    for r in restarts:
        if _better_final(best, r.best):
            best = r.best
    design = {g.label: g.pool[i].name for g, i in zip(problem.frame.groups, best.indices)}
    return OptimizationRun(problem.name, config, fuzzy_cfg, restarts, best, design)
