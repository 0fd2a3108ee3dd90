"""Complete optimisation loops.

Five algorithms share one cost model: every objective call is counted, a
run stops the moment the global optimum is evaluated (that evaluation is
included) or when the next call would exceed the budget.  Run control is
exception-based: the counting objective raises ``OptimumFound`` or
``BudgetExhausted`` from anywhere, including mid-hypermutation, and the
runner converts that into a ``RunResult``.

For built-in benchmarks the (1+1) loops and the population loop execute in
compiled kernels with identical semantics (different random streams); pass
``force_python=True`` to pin the reference path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .benchmarks import Benchmark
from .core import (
    Bitstring,
    BudgetExhausted,
    CountingObjective,
    EvalCounter,
    OptimumFound,
    RandomSource,
    random_bitstring,
)
from .operators import (
    GEQ,
    GT,
    MutationOutcome,
    MutationPotential,
    ParabolicSchedule,
    _validate_mode,
    phype_bm,
    phype_fcm,
    resolve_gamma,
    rls_k_mutation,
    sbm,
    static_hmp_fcm,
)

OP_PHYPE_FCM = "phype_fcm"
OP_PHYPE_BM = "phype_bm"
OP_STATIC_FCM = "static_fcm"
_OPERATORS = (OP_PHYPE_FCM, OP_PHYPE_BM, OP_STATIC_FCM)


@dataclass(slots=True)
class Individual:
    """A population member: genotype with cached fitness and an age."""

    genotype: Bitstring
    fitness: float
    age: int = 0


@dataclass(frozen=True, slots=True)
class OptIAConfig:
    """Parameters of the population algorithm.

    The death probability of hybrid ageing is always 1 - 1/(mu+1), derived
    from ``mu``.  ``tau`` may be fractional (thresholds are often formulas
    of n); an individual is over-age when age >= tau.  ``mode`` applies to
    the first-constructive-mutation operators only.
    """

    mu: int = 1
    dup: int = 1
    tau: float = 100.0
    operator: str = OP_PHYPE_BM
    gamma_preset: str | float = "inv_ln_n"
    mode: str = GT
    potential: MutationPotential = field(default_factory=MutationPotential)

    def __post_init__(self):
        if self.mu < 1:
            raise ValueError("mu must be >= 1")
        if self.dup < 1:
            raise ValueError("dup must be >= 1")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if self.operator not in _OPERATORS:
            raise ValueError(
                f"operator must be one of {_OPERATORS}, got {self.operator!r}"
            )
        _validate_mode(self.mode)

    @property
    def p_die(self) -> float:
        return 1.0 - 1.0 / (self.mu + 1)


@dataclass(frozen=True, slots=True)
class RunResult:
    """Outcome of one run under the evaluation-count cost model."""

    evaluations: int
    generations: int
    success: bool
    best_fitness: float
    budget: int
    seed: int


def _check_run_args(benchmark: Benchmark, n: int, budget: int, minimum: int = 1):
    if benchmark.n != n:
        raise ValueError(f"benchmark is sized {benchmark.n}, run asked for {n}")
    if budget < minimum:
        raise ValueError(f"budget must be >= {minimum}")


def _kernels_for(benchmark: Benchmark, n: int):
    kid = getattr(benchmark, "kernel_id", None)
    if kid is None:
        return None
    from . import _kernels

    if not _kernels.AVAILABLE:
        return None
    if kid == _kernels.KID_HIDDENPATH and n > 64:
        return None
    return _kernels


def _kernel_seed(rng: RandomSource):
    import numpy as np

    return np.uint64(rng.next_kernel_seed())


def run_one_plus_one_fast_ia(
    benchmark: Benchmark,
    n: int,
    gamma_preset: str | float,
    mode: str,
    budget: int,
    rng: RandomSource,
    *,
    force_python: bool = False,
) -> RunResult:
    """(1+1) loop around the parabolic FCM hypermutation.

    Acceptance is always >= (an equally good offspring replaces the
    parent); the mode parameter only controls what stops the hypermutation.
    """
    _check_run_args(benchmark, n, budget)
    geq = _validate_mode(mode)
    gamma = resolve_gamma(gamma_preset, n)
    schedule = ParabolicSchedule(n, gamma)

    kern = None if force_python else _kernels_for(benchmark, n)
    if kern is not None:
        hazard, next_forced = schedule.numpy_tables()
        dpar, eps, aux = benchmark.kernel_params()
        ev, gens, success, best = kern.run_fast_ia(
            benchmark.kernel_id, n, dpar, eps, aux, float(benchmark.max_value),
            hazard, next_forced, geq, int(budget), _kernel_seed(rng),
        )
        return RunResult(ev, gens, bool(success), float(best), budget, rng.seed)

    counter = EvalCounter()
    obj = CountingObjective(benchmark, counter, budget, benchmark.optimum.word)
    gens = 0
    best = -math.inf
    try:
        x = random_bitstring(n, rng)
        fx = obj(x)
        best = fx
        while True:
            if counter.count >= budget:
                # a generation may evaluate nothing, so an exhausted budget
                # must end the run here, not only inside the objective
                raise BudgetExhausted(budget)
            out = phype_fcm(x, fx, obj, schedule, mode, rng, counter)
            if out.evals_used > 0:
                fy = out.best_eval_fitness
                if fy > best:
                    best = fy
                if fy >= fx:
                    x, fx = out.offspring, fy
            gens += 1
    except OptimumFound as hit:
        return RunResult(counter.count, gens, True, float(hit.fitness), budget, rng.seed)
    except BudgetExhausted:
        return RunResult(counter.count, gens, False, float(best), budget, rng.seed)


def run_one_plus_one_ia_hyp(
    benchmark: Benchmark,
    n: int,
    mode: str,
    budget: int,
    rng: RandomSource,
    potential: MutationPotential = MutationPotential(1.0),
    *,
    force_python: bool = False,
) -> RunResult:
    """(1+1) loop around the static hypermutation (every step evaluated)."""
    _check_run_args(benchmark, n, budget)
    geq = _validate_mode(mode)

    kern = None if force_python else _kernels_for(benchmark, n)
    if kern is not None:
        dpar, eps, aux = benchmark.kernel_params()
        ev, gens, success, best = kern.run_static_ia(
            benchmark.kernel_id, n, potential.steps(n), dpar, eps, aux,
            float(benchmark.max_value), geq, int(budget),
            _kernel_seed(rng),
        )
        return RunResult(ev, gens, bool(success), float(best), budget, rng.seed)

    counter = EvalCounter()
    obj = CountingObjective(benchmark, counter, budget, benchmark.optimum.word)
    gens = 0
    best = -math.inf
    try:
        x = random_bitstring(n, rng)
        fx = obj(x)
        best = fx
        while True:
            out = static_hmp_fcm(x, fx, obj, potential, mode, rng, counter)
            if out.evals_used > 0:
                fy = out.best_eval_fitness
                if fy > best:
                    best = fy
                if fy >= fx:
                    x, fx = out.offspring, fy
            gens += 1
    except OptimumFound as hit:
        return RunResult(counter.count, gens, True, float(hit.fitness), budget, rng.seed)
    except BudgetExhausted:
        return RunResult(counter.count, gens, False, float(best), budget, rng.seed)


def _run_simple_mutation_loop(benchmark, n, budget, rng, mutate, cum_table, force_python):
    """Shared elitist loop of the one-eval-per-generation baselines."""
    kern = None if force_python else _kernels_for(benchmark, n)
    if kern is not None:
        dpar, eps, aux = benchmark.kernel_params()
        ev, gens, success, best = kern.run_mutation_ea(
            benchmark.kernel_id, n, dpar, eps, aux, float(benchmark.max_value),
            cum_table, int(budget), _kernel_seed(rng),
        )
        return RunResult(ev, gens, bool(success), float(best), budget, rng.seed)

    counter = EvalCounter()
    obj = CountingObjective(benchmark, counter, budget, benchmark.optimum.word)
    gens = 0
    best = -math.inf
    try:
        x = random_bitstring(n, rng)
        fx = obj(x)
        best = fx
        while True:
            y = mutate(x)
            fy = obj(y)
            if fy > best:
                best = fy
            if fy >= fx:
                x, fx = y, fy
            gens += 1
    except OptimumFound as hit:
        return RunResult(counter.count, gens, True, float(hit.fitness), budget, rng.seed)
    except BudgetExhausted:
        return RunResult(counter.count, gens, False, float(best), budget, rng.seed)


def _binomial_cum_table(n: int, rate: float):
    import numpy as np
    from scipy.stats import binom

    cum = binom.cdf(np.arange(n + 1), n, rate).astype(np.float64)
    cum[n] = 2.0  # sentinel: the scan never walks past k = n
    return cum


def _point_mass_table(n: int, k: int):
    import numpy as np

    cum = np.zeros(n + 1, dtype=np.float64)
    cum[k:] = 2.0
    return cum


def run_one_plus_one_ea(
    benchmark: Benchmark,
    n: int,
    budget: int,
    rng: RandomSource,
    rate: Optional[float] = None,
    *,
    force_python: bool = False,
) -> RunResult:
    """Elitist (1+1) loop with standard bit mutation (default rate 1/n)."""
    _check_run_args(benchmark, n, budget)
    if rate is None:
        rate = 1.0 / n
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    return _run_simple_mutation_loop(
        benchmark, n, budget, rng,
        lambda x: sbm(x, rate, rng),
        _binomial_cum_table(n, rate),
        force_python,
    )


def run_rls_k(
    benchmark: Benchmark,
    n: int,
    k: int,
    budget: int,
    rng: RandomSource,
    *,
    force_python: bool = False,
) -> RunResult:
    """Elitist (1+1) loop flipping a uniformly random k-subset per step."""
    _check_run_args(benchmark, n, budget)
    if not 1 <= k <= n:
        raise ValueError("k must lie in 1..n")
    return _run_simple_mutation_loop(
        benchmark, n, budget, rng,
        lambda x: rls_k_mutation(x, k, rng),
        _point_mass_table(n, k),
        force_python,
    )


def hybrid_ageing_step(
    population: list[Individual], tau: float, mu: int, rng: RandomSource
) -> list[Individual]:
    """Each individual with age >= tau survives with probability 1/(mu+1)."""
    survive = 1.0 / (mu + 1)
    rnd = rng.py.random
    return [
        ind for ind in population if ind.age < tau or rnd() < survive
    ]


def truncation_selection(
    population: list[Individual], mu: int, rng: RandomSource
) -> list[Individual]:
    """Repeatedly drop a uniformly random lowest-fitness individual until
    mu remain.  Populations of size <= mu are returned unchanged."""
    pop = list(population)
    while len(pop) > mu:
        fmin = min(ind.fitness for ind in pop)
        ties = [i for i, ind in enumerate(pop) if ind.fitness == fmin]
        pop.pop(ties[int(rng.py.random() * len(ties))])
    return pop


def run_fast_opt_ia(
    benchmark: Benchmark,
    config: OptIAConfig,
    n: int,
    budget: int,
    rng: RandomSource,
    *,
    force_python: bool = False,
) -> RunResult:
    """Population loop: ageing, cloning with hypermutation, hybrid ageing,
    random refills and truncation, in that order each generation."""
    _check_run_args(benchmark, n, budget, minimum=config.mu)
    gamma = resolve_gamma(config.gamma_preset, n)
    schedule = ParabolicSchedule(n, gamma)
    mu, dup, tau = config.mu, config.dup, config.tau

    kern = None if force_python else _kernels_for(benchmark, n)
    if kern is not None and config.operator in (OP_PHYPE_FCM, OP_PHYPE_BM):
        hazard, next_forced = schedule.numpy_tables()
        dpar, eps, aux = benchmark.kernel_params()
        ev, gens, success, best = kern.run_opt_ia(
            benchmark.kernel_id, n, dpar, eps, aux, float(benchmark.max_value),
            hazard, next_forced, config.operator == OP_PHYPE_BM,
            config.mode == GEQ, mu, dup, float(tau), int(budget),
            _kernel_seed(rng),
        )
        return RunResult(ev, gens, bool(success), float(best), budget, rng.seed)

    counter = EvalCounter()
    obj = CountingObjective(benchmark, counter, budget, benchmark.optimum.word)

    def mutate(ind: Individual) -> MutationOutcome:
        if config.operator == OP_PHYPE_BM:
            return phype_bm(
                ind.genotype, ind.fitness, obj, schedule, rng, counter,
                force_python=force_python,
            )
        if config.operator == OP_PHYPE_FCM:
            return phype_fcm(
                ind.genotype, ind.fitness, obj, schedule, config.mode, rng, counter
            )
        return static_hmp_fcm(
            ind.genotype, ind.fitness, obj, config.potential, config.mode, rng, counter
        )

    gens = 0
    best = -math.inf
    try:
        pop: list[Individual] = []
        for _ in range(mu):
            x = random_bitstring(n, rng)
            fx = obj(x)
            if fx > best:
                best = fx
            pop.append(Individual(x, fx, 0))
        while True:
            if counter.count >= budget:
                raise BudgetExhausted(budget)  # zero-eval generations exist
            for ind in pop:
                ind.age += 1
            offspring: list[Individual] = []
            for ind in pop:
                for _ in range(dup):
                    out = mutate(ind)
                    if out.evals_used == 0:
                        y, fy = ind.genotype, ind.fitness
                    else:
                        y, fy = out.offspring, out.best_eval_fitness
                        if fy > best:
                            best = fy
                    age = 0 if fy > ind.fitness else ind.age
                    offspring.append(Individual(y, fy, age))
            pop.extend(offspring)
            pop = hybrid_ageing_step(pop, tau, mu, rng)
            while len(pop) < mu:
                x = random_bitstring(n, rng)
                fx = obj(x)
                if fx > best:
                    best = fx
                pop.append(Individual(x, fx, 0))
            pop = truncation_selection(pop, mu, rng)
            gens += 1
    except OptimumFound as hit:
        return RunResult(counter.count, gens, True, float(hit.fitness), budget, rng.seed)
    except BudgetExhausted:
        return RunResult(counter.count, gens, False, float(best), budget, rng.seed)
