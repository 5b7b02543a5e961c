"""Genetic search with offspring selection.

The algorithm keeps a fixed-size population and, each generation, breeds
candidate offspring (binary-tournament parents, crossover, mutation)
until a configured share of the next population consists of
"successful" children: a child is successful when its fitness strictly
beats an interpolation between its parents' fitnesses
(comparison_factor 1 demands beating the better parent, 0 only the
worse). Slots not owed to successful children are filled by the
remaining offspring in creation order. The ratio of offspring created to
population size is the selection pressure; runs stop when it exceeds a
cap, when the evaluation budget runs out, or when a target fitness is
reached. Fitness is minimized throughout.

The engine is exposed in three forms: osga_minimize drives a fitness
callable to completion, offspring_selection_step advances one generation
eagerly, and osga_stream is a generator that yields genomes and receives
fitnesses via send(), which lets a message-passing network evaluate
candidates remotely while sharing this exact code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import substream
from .errors import (
    BudgetTooSmallError,
    InfeasibleBoundsError,
    InvalidConfigError,
    ShapeMismatchError,
)

# ---------------------------------------------------------------------------
# Variation operators

def binary_crossover(a: np.ndarray, b: np.ndarray, kind: str,
                     rng: np.random.Generator) -> np.ndarray:
    """Combine two bit vectors; kind is "uniform" or "single-point"."""
    if a.shape != b.shape:
        raise ShapeMismatchError("parent genomes differ in length")
    if kind == "uniform":
        take_a = rng.random(a.shape[0]) < 0.5
        return np.where(take_a, a, b)
    if kind == "single-point":
        if a.shape[0] < 2:
            return a.copy()
        cut = int(rng.integers(1, a.shape[0]))
        return np.concatenate([a[:cut], b[cut:]])
    raise InvalidConfigError(f"unknown binary crossover kind {kind!r}")


def bitflip_mutation(genome: np.ndarray, rate: float,
                     rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability rate."""
    flips = rng.random(genome.shape[0]) < rate
    return np.where(flips, ~genome, genome)


def real_crossover(a: np.ndarray, b: np.ndarray, kind: str,
                   rng: np.random.Generator, spread: float = 2.0) -> np.ndarray:
    """Combine two real vectors.

    Kinds: "uniform" picks each component from either parent,
    "arithmetic" blends the whole vectors with one random weight,
    "simulated-binary" samples each component from a distribution
    centered on the parents whose width shrinks as they converge
    (larger spread concentrates children closer to the parents).
    """
    if a.shape != b.shape:
        raise ShapeMismatchError("parent genomes differ in length")
    d = a.shape[0]
    if kind == "uniform":
        take_a = rng.random(d) < 0.5
        return np.where(take_a, a, b)
    if kind == "arithmetic":
        u = rng.random()
        return u * a + (1.0 - u) * b
    if kind == "simulated-binary":
        u = rng.random(d)
        exponent = 1.0 / (spread + 1.0)
        beta = np.where(u <= 0.5,
                        (2.0 * u) ** exponent,
                        (1.0 / (2.0 * (1.0 - u))) ** exponent)
        sign = np.where(rng.random(d) < 0.5, 1.0, -1.0)
        return 0.5 * ((a + b) + sign * beta * (b - a))
    raise InvalidConfigError(f"unknown real crossover kind {kind!r}")


def gaussian_mutation(genome: np.ndarray, bounds: np.ndarray, rate: float,
                      sigma_fraction: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Perturb each component with probability rate by Gaussian noise whose
    scale is sigma_fraction of that component's bound width, clipping the
    result back into the bounds."""
    d = genome.shape[0]
    lo = bounds[:, 0]
    hi = bounds[:, 1]
    if np.any(lo > hi) or not (np.all(np.isfinite(lo))
                               and np.all(np.isfinite(hi))):
        raise InfeasibleBoundsError("bounds must be finite with lo <= hi")
    hit = rng.random(d) < rate
    noise = rng.standard_normal(d) * (sigma_fraction * (hi - lo))
    return np.clip(np.where(hit, genome + noise, genome), lo, hi)


# ---------------------------------------------------------------------------
# Genome descriptions

@dataclass(frozen=True)
class BinaryGenomeSpec:
    """Fixed-length bit-vector genome."""

    length: int
    init_one_probability: float = 0.1

    def validate(self) -> None:
        if self.length < 1:
            raise InvalidConfigError("genome length must be at least 1")
        if not 0.0 <= self.init_one_probability <= 1.0:
            raise InvalidConfigError("init_one_probability must lie in [0, 1]")

    @property
    def default_mutation_rate(self) -> float:
        return 1.0 / self.length

    def random(self, rng: np.random.Generator) -> np.ndarray:
        return rng.random(self.length) < self.init_one_probability

    def crossover(self, a, b, kind, rng):
        return binary_crossover(a, b, kind, rng)

    def mutate(self, genome, rate, rng):
        return bitflip_mutation(genome, rate, rng)


@dataclass(frozen=True, eq=False)
class RealGenomeSpec:
    """Real vector genome restricted to a box of per-component bounds."""

    bounds: np.ndarray
    sigma_fraction: float = 0.1
    spread: float = 2.0

    def __post_init__(self):
        b = np.ascontiguousarray(np.asarray(self.bounds, dtype=np.float64))
        if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] < 1:
            raise ShapeMismatchError("bounds must have shape (d, 2)")
        b.flags.writeable = False
        object.__setattr__(self, "bounds", b)

    def validate(self) -> None:
        if np.any(self.bounds[:, 0] > self.bounds[:, 1]) \
                or not np.all(np.isfinite(self.bounds)):
            raise InfeasibleBoundsError("bounds must be finite with lo <= hi")
        if not 0.0 < self.sigma_fraction:
            raise InvalidConfigError("sigma_fraction must be positive")

    @property
    def length(self) -> int:
        return self.bounds.shape[0]

    @property
    def default_mutation_rate(self) -> float:
        return 1.0 / self.bounds.shape[0]

    def random(self, rng: np.random.Generator) -> np.ndarray:
        lo = self.bounds[:, 0]
        hi = self.bounds[:, 1]
        return lo + rng.random(self.length) * (hi - lo)

    def crossover(self, a, b, kind, rng):
        return real_crossover(a, b, kind, rng, spread=self.spread)

    def mutate(self, genome, rate, rng):
        return gaussian_mutation(genome, self.bounds, rate,
                                 self.sigma_fraction, rng)


# ---------------------------------------------------------------------------
# Algorithm state and results

@dataclass(frozen=True, eq=False)
class Individual:
    genome: np.ndarray
    fitness: float
    evaluated: bool = True


@dataclass(eq=False)
class RunResult:
    """Outcome of a full run.

    terminated_by is one of "pressure", "budget", or "target".
    best_history holds the population-best fitness after the initial
    evaluation and after each completed generation; pressure_history
    holds the selection pressure of each completed generation plus, when
    the run stopped mid-generation, the partial generation's pressure.
    """

    best: Individual
    evaluations: int
    generations: int
    terminated_by: str
    best_history: tuple[float, ...]
    pressure_history: tuple[float, ...]
    population: tuple[Individual, ...]


@dataclass
class OsgaParams:
    """Run settings; see the module docstring for the roles they play."""

    population_size: int = 100
    mutation_rate: float | None = None
    comparison_factor: float = 1.0
    success_ratio: float = 0.7
    max_selection_pressure: float = 100.0
    max_evaluations: int = 25000
    crossover_kind: str = "uniform"
    elitism: int = 1
    target_fitness: float | None = None

    def validate(self) -> None:
        if self.population_size < 2:
            raise InvalidConfigError("population_size must be at least 2")
        if self.mutation_rate is not None \
                and not 0.0 <= self.mutation_rate <= 1.0:
            raise InvalidConfigError("mutation_rate must lie in [0, 1]")
        if not 0.0 <= self.comparison_factor <= 1.0:
            raise InvalidConfigError("comparison_factor must lie in [0, 1]")
        if not 0.0 < self.success_ratio <= 1.0:
            raise InvalidConfigError("success_ratio must lie in (0, 1]")
        if self.max_selection_pressure <= 1.0:
            raise InvalidConfigError(
                "max_selection_pressure must exceed 1")
        if self.max_evaluations < 1:
            raise InvalidConfigError("max_evaluations must be at least 1")
        if not 1 <= self.elitism < self.population_size:
            raise InvalidConfigError(
                "elitism must lie in [1, population_size)")


@dataclass
class StepStats:
    """Diagnostics from one generation advance."""

    created: int
    n_successful: int
    pressure: float
    completed: bool
    stop_reason: str | None


# ---------------------------------------------------------------------------
# Core engine

def _tournament(population, rng) -> Individual:
    # binary tournament: two uniform draws, fitter one wins, tie to the
    # first drawn
    a = population[int(rng.integers(len(population)))]
    b = population[int(rng.integers(len(population)))]
    return a if a.fitness <= b.fitness else b


def _generation(population, genome_spec, params, mutation_rate, rng,
                evals_left, best_so_far):
    """Advance one generation as a sub-generator.

    Yields genomes to evaluate and expects their fitness via send().
    Returns (next_population, StepStats); when the run-level budget,
    pressure cap, or target fires mid-generation, next_population is the
    unchanged input population and stats.stop_reason says why.
    """
    pop_n = params.population_size
    order = sorted(range(len(population)),
                   key=lambda i: population[i].fitness)
    elites = [population[i] for i in order[:params.elitism]]
    new_slots = pop_n - params.elitism
    target_success = min(round(params.success_ratio * pop_n), new_slots)

    accepted: list[Individual] = []
    fillers: list[Individual] = []
    created = 0
    evals = 0
    stop: str | None = None
    while (len(accepted) < target_success
           or len(accepted) + len(fillers) < new_slots):
        if evals >= evals_left:
            stop = "budget"
            break
        p1 = _tournament(population, rng)
        p2 = _tournament(population, rng)
        genome = genome_spec.crossover(p1.genome, p2.genome,
                                       params.crossover_kind, rng)
        genome = genome_spec.mutate(genome, mutation_rate, rng)
        fitness = float((yield genome))
        evals += 1
        created += 1
        child = Individual(genome, fitness)
        better = min(p1.fitness, p2.fitness)
        worse = max(p1.fitness, p2.fitness)
        threshold = params.comparison_factor * better \
            + (1.0 - params.comparison_factor) * worse
        if fitness < threshold and len(accepted) < target_success:
            accepted.append(child)
        else:
            fillers.append(child)
        if fitness < best_so_far.fitness:
            best_so_far = child
        if params.target_fitness is not None \
                and fitness <= params.target_fitness:
            stop = "target"
            break
        if created / pop_n > params.max_selection_pressure:
            stop = "pressure"
            break

    pressure = created / pop_n
    if stop is not None:
        return population, StepStats(created, len(accepted), pressure,
                                     False, stop), best_so_far
    next_population = elites + accepted \
        + fillers[:new_slots - len(accepted)]
    return next_population, StepStats(created, len(accepted), pressure,
                                      True, None), best_so_far


def _stream(genome_spec, params, mutation_rate, rng):
    population: list[Individual] = []
    evaluations = 0
    best = None
    stop = None
    for _ in range(params.population_size):
        genome = genome_spec.random(rng)
        fitness = float((yield genome))
        evaluations += 1
        ind = Individual(genome, fitness)
        population.append(ind)
        if best is None or ind.fitness < best.fitness:
            best = ind
        if params.target_fitness is not None \
                and ind.fitness <= params.target_fitness:
            stop = "target"
            break

    best_history = [best.fitness]
    pressure_history: list[float] = []
    generations = 0
    while stop is None:
        if evaluations >= params.max_evaluations:
            stop = "budget"
            break
        next_pop, stats, best = yield from _generation(
            population, genome_spec, params, mutation_rate, rng,
            params.max_evaluations - evaluations, best)
        evaluations += stats.created
        pressure_history.append(stats.pressure)
        if stats.completed:
            generations += 1
            population = next_pop
            best_history.append(
                min(ind.fitness for ind in population))
        else:
            stop = stats.stop_reason

    return RunResult(best, evaluations, generations, stop,
                     tuple(best_history), tuple(pressure_history),
                     tuple(population))


def resolve_mutation_rate(genome_spec, params: OsgaParams) -> float:
    if params.mutation_rate is not None:
        return params.mutation_rate
    return genome_spec.default_mutation_rate


def osga_stream(genome_spec, params: OsgaParams, rng: np.random.Generator):
    """Create the evaluation-request generator for one run.

    The caller pulls a genome with next(), answers with
    send(fitness), and receives the next genome, until StopIteration
    delivers the RunResult as its value.
    """
    params.validate()
    genome_spec.validate()
    if params.max_evaluations < params.population_size:
        raise BudgetTooSmallError(
            f"budget {params.max_evaluations} cannot evaluate the initial "
            f"population of {params.population_size}")
    return _stream(genome_spec, params, resolve_mutation_rate(genome_spec,
                                                              params), rng)


def drive(stream, evaluator) -> RunResult:
    """Run an evaluation stream to completion against a fitness callable."""
    try:
        genome = next(stream)
        while True:
            genome = stream.send(evaluator(genome))
    except StopIteration as fin:
        return fin.value


def osga_minimize(evaluator, genome_spec, params: OsgaParams | None = None,
                  seed: int = 0,
                  rng: np.random.Generator | None = None) -> RunResult:
    """Minimize evaluator(genome) over the genome space.

    evaluator maps a genome array to a float fitness, lower better. All
    randomness comes from one stream derived from the seed, so equal
    seeds give equal runs.
    """
    params = params or OsgaParams()
    if rng is None:
        rng = substream(seed, "osga")
    return drive(osga_stream(genome_spec, params, rng), evaluator)


def offspring_selection_step(population, genome_spec, params: OsgaParams,
                             evaluator, rng: np.random.Generator):
    """Advance an existing population one generation.

    Returns (next_population, StepStats). There is no run-level budget
    here; the pressure cap or a configured target fitness can still cut
    the step short, in which case the input population comes back
    unchanged and stats.stop_reason says why.
    """
    params.validate()
    if len(population) != params.population_size:
        raise InvalidConfigError(
            f"population has {len(population)} members, params say "
            f"{params.population_size}")
    gen = _generation(population, genome_spec, params,
                      resolve_mutation_rate(genome_spec, params), rng,
                      float("inf"),
                      min(population, key=lambda ind: ind.fitness))
    try:
        genome = next(gen)
        while True:
            genome = gen.send(evaluator(genome))
    except StopIteration as fin:
        next_population, stats, _ = fin.value
        return next_population, stats
