"""Fast stochastic-evaluation hypermutation operators, immune-inspired
optimisers, pseudo-Boolean benchmarks, exact small-instance oracles and an
experiment harness.

The package is organised bottom-up:

- ``core``: bitstrings, evaluation counting, seeded randomness
- ``benchmarks``: OneMax, LeadingOnes, Trap, Jump, Cliff, HiddenPath
- ``operators``: parabolic evaluation schedule and the mutation operators
- ``algorithms``: (1+1) loops and the population-based ageing algorithm
- ``oracle``: exact expected-evaluation values on small unitation instances
- ``lab``: trial batches, sweeps, scaling fits, CSV export and the CLI
"""

from .core import (
    Bitstring,
    BudgetExhausted,
    CountingObjective,
    EvalCounter,
    OptimumFound,
    RandomSource,
    derive_seed,
    hamming_distance,
    random_bitstring,
    splitmix64,
)
from .benchmarks import (
    BENCHMARK_NAMES,
    Benchmark,
    Cliff,
    HiddenPath,
    Jump,
    LeadingOnes,
    OneMax,
    Trap,
    make_benchmark,
)
from .operators import (
    GAMMA_PRESETS,
    MutationOutcome,
    MutationPotential,
    ParabolicSchedule,
    eval_probability,
    phype_bm,
    phype_fcm,
    resolve_gamma,
    rls_k_mutation,
    sbm,
    static_hmp_fcm,
)
from .algorithms import (
    Individual,
    OptIAConfig,
    RunResult,
    hybrid_ageing_step,
    run_fast_opt_ia,
    run_one_plus_one_ea,
    run_one_plus_one_fast_ia,
    run_one_plus_one_ia_hyp,
    run_rls_k,
    truncation_selection,
)
from .oracle import (
    ChiSquareResult,
    LevelChain,
    exact_fast_ia_expected_evals,
    exact_rls_expected_evals,
    exact_schedule_sum,
    fast_ia_level_chain,
    prefix_subset_chi_square,
    rls_level_chain,
)

__version__ = "0.1.0"

__all__ = [
    "BENCHMARK_NAMES",
    "Benchmark",
    "Bitstring",
    "BudgetExhausted",
    "ChiSquareResult",
    "Cliff",
    "CountingObjective",
    "EvalCounter",
    "GAMMA_PRESETS",
    "HiddenPath",
    "Individual",
    "Jump",
    "LeadingOnes",
    "LevelChain",
    "MutationOutcome",
    "MutationPotential",
    "OneMax",
    "OptIAConfig",
    "OptimumFound",
    "ParabolicSchedule",
    "RandomSource",
    "RunResult",
    "Trap",
    "derive_seed",
    "eval_probability",
    "exact_fast_ia_expected_evals",
    "exact_rls_expected_evals",
    "exact_schedule_sum",
    "fast_ia_level_chain",
    "hamming_distance",
    "hybrid_ageing_step",
    "make_benchmark",
    "phype_bm",
    "phype_fcm",
    "prefix_subset_chi_square",
    "random_bitstring",
    "resolve_gamma",
    "rls_k_mutation",
    "rls_level_chain",
    "run_fast_opt_ia",
    "run_one_plus_one_ea",
    "run_one_plus_one_fast_ia",
    "run_one_plus_one_ia_hyp",
    "run_rls_k",
    "sbm",
    "splitmix64",
    "static_hmp_fcm",
    "truncation_selection",
]
