"""Independent ground-truth computations used to validate the stochastic code.

Everything here recomputes what it needs from first principles (including
the evaluation probabilities themselves) rather than importing the
operators' tables, so that agreement between Monte Carlo runs and these
numbers genuinely cross-checks two implementations.

The centrepiece is an exact expected-runtime computation for the (1+1)
loop with the parabolic FCM hypermutation on unitation benchmarks: within
one hypermutation the pair (steps taken, zeros flipped so far) is a small
Markov chain under the uniform-permutation flip law, and folding in the
evaluation coins, the stop rule and the acceptance rule yields an exact
per-generation transition kernel between fitness levels.  Solving the
resulting absorbing chain gives the expected number of evaluations to the
first evaluation of the optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .benchmarks import Benchmark, Cliff, Jump, OneMax, Trap, make_benchmark
from .core import RandomSource
from .operators import GEQ, GT

_UNITATION_TYPES = (OneMax, Trap, Jump, Cliff)
_MAX_EXACT_N = 14


def _eval_probabilities(n: int, gamma: float) -> list[float]:
    """Literal parabolic probabilities, recomputed here on purpose."""
    if not 0.0 < gamma <= 2.0:
        raise ValueError("gamma must lie in (0, 2]")
    inv_e = math.exp(-1.0)
    p = [0.0] * (n + 1)
    for i in range(1, n + 1):
        if i == 1 or i == n:
            p[i] = inv_e
        elif 2 * i <= n:
            p[i] = min(1.0, gamma / i)
        else:
            p[i] = min(1.0, gamma / (n - i))
    return p


def exact_schedule_sum(n: int, gamma: float) -> float:
    """Sum of the evaluation probabilities over one full hypermutation."""
    if n < 1:
        raise ValueError("n must be positive")
    return math.fsum(_eval_probabilities(n, gamma)[1:])


def _unitation_profile(benchmark: Benchmark) -> list[float]:
    """Fitness as a function of the number of ones, via one representative
    string per level (valid only for unitation benchmarks)."""
    from .core import Bitstring

    n = benchmark.n
    return [float(benchmark(Bitstring((1 << m) - 1, n))) for m in range(n + 1)]


def _coerce_unitation(benchmark, n: int, d: Optional[int]) -> Benchmark:
    if isinstance(benchmark, str):
        benchmark = make_benchmark(benchmark, n, d=d)
    if not isinstance(benchmark, _UNITATION_TYPES):
        raise ValueError(
            "exact computation requires a unitation benchmark "
            "(onemax, trap, jump, cliff)"
        )
    if benchmark.n != n:
        raise ValueError("benchmark size mismatch")
    return benchmark


@dataclass(frozen=True)
class LevelChain:
    """Per-generation dynamics of a (1+1) loop projected onto fitness levels.

    ``kernel[a, b]`` is the probability that a generation starting with a
    parent of ``a`` ones ends with a parent of ``b`` ones; reaching the
    optimum's level means the optimum was evaluated (absorbing, the row is
    the identity there).  ``evals_per_generation[a]`` is the expected
    number of objective calls one generation makes from level ``a``.
    """

    n: int
    kernel: np.ndarray
    evals_per_generation: np.ndarray
    optimum_level: int

    def expected_evaluations(self) -> float:
        """Expected total evaluations from a uniform random start,
        including the initial evaluation, until the optimum is evaluated."""
        n, o = self.n, self.optimum_level
        transient = [a for a in range(n + 1) if a != o]
        idx = {a: i for i, a in enumerate(transient)}
        # absorption must be reachable from every start the binomial
        # initialisation can produce, else the expectation diverges
        # (e.g. parity-preserving k-flip local search on Jump)
        reaching = {o}
        grew = True
        while grew:
            grew = False
            for a in transient:
                if a in reaching:
                    continue
                if any(self.kernel[a, b] > 0.0 for b in reaching):
                    reaching.add(a)
                    grew = True
        stranded = [a for a in transient if a not in reaching]
        if stranded:
            raise ValueError(
                "expected evaluation count diverges: the optimum is "
                f"unreachable from level(s) {stranded}"
            )
        q = np.zeros((len(transient), len(transient)))
        for a in transient:
            for b in transient:
                q[idx[a], idx[b]] = self.kernel[a, b]
        e = np.array([self.evals_per_generation[a] for a in transient])
        v = np.linalg.solve(np.eye(len(transient)) - q, e)
        total = 1.0  # the initial evaluation
        for a in range(n + 1):
            w = math.comb(self.n, a) / 2.0**self.n
            if a != o:
                total += w * v[idx[a]]
        return float(total)


def fast_ia_level_chain(
    benchmark, n: int, gamma: float, mode: str = GEQ, d: Optional[int] = None
) -> LevelChain:
    """Exact level kernel of the (1+1) parabolic-FCM loop.

    Within one hypermutation from a parent with ``a`` ones, after ``i``
    flips of which ``z`` hit zeros the current string has ``a + 2z - i``
    ones, and the next flip hits a zero with probability (zeros left) /
    (positions left).  The chain below propagates the probability of being
    mid-hypermutation with no constructive evaluation yet; evaluation
    coins contribute expected-evaluation mass, constructive evaluations
    stop the operator (and are accepted; the mode decides what counts as
    constructive), and a pass with only non-constructive evaluations
    returns the last one, which is accepted only if its fitness ties the
    parent's.
    """
    if mode not in (GEQ, GT):
        raise ValueError(f"mode must be {GEQ!r} or {GT!r}")
    if n > _MAX_EXACT_N:
        raise ValueError(f"exact chain limited to n <= {_MAX_EXACT_N}")
    bench = _coerce_unitation(benchmark, n, d)
    fit = _unitation_profile(bench)
    opt_level = bench.optimum.count_ones()
    p = _eval_probabilities(n, gamma)
    geq = mode == GEQ

    # tail[j] = P(no evaluation at steps j+1..n)
    tail = [0.0] * (n + 1)
    tail[n] = 1.0
    for j in range(n - 1, -1, -1):
        tail[j] = tail[j + 1] * (1.0 - p[j + 1])

    kernel = np.zeros((n + 1, n + 1))
    evals = np.zeros(n + 1)
    kernel[opt_level, opt_level] = 1.0

    for a in range(n + 1):
        if a == opt_level:
            continue
        fa = fit[a]
        zeros_total = n - a
        # alive[z]: mass at (i, z) that has not had a constructive
        # evaluation at steps 1..i
        alive = np.zeros(zeros_total + 1)
        alive[0] = 1.0
        e_a = 0.0
        no_eval_mass = tail[0]
        row = np.zeros(n + 1)
        for i in range(1, n + 1):
            nxt = np.zeros(zeros_total + 1)
            remaining = n - (i - 1)
            for z in range(zeros_total + 1):
                m = alive[z]
                if m == 0.0:
                    continue
                ones_left = a - ((i - 1) - z)
                zeros_left = zeros_total - z
                if zeros_left > 0:
                    nxt[z + 1] += m * zeros_left / remaining
                if ones_left > 0:
                    nxt[z] += m * ones_left / remaining
            for z in range(zeros_total + 1):
                m = nxt[z]
                if m == 0.0:
                    continue
                level = a + 2 * z - i
                f = fit[level]
                e_a += m * p[i]
                constructive = (f >= fa) if geq else (f > fa)
                if constructive:
                    # stops the operator and is always accepted
                    row[level] += m * p[i]
                    nxt[z] = m * (1.0 - p[i])
                else:
                    # may end up as the last evaluation of the pass; it is
                    # accepted only on a fitness tie, which on these
                    # benchmarks means the same level
                    target = level if f == fa else a
                    row[target] += m * p[i] * tail[i]
            alive = nxt
        row[a] += no_eval_mass
        kernel[a] = row
        evals[a] = e_a

    return LevelChain(n, kernel, evals, opt_level)


def exact_fast_ia_expected_evals(
    benchmark, n: int, gamma: float, mode: str = GEQ, d: Optional[int] = None
) -> float:
    """Exact expected evaluations of the (1+1) parabolic-FCM loop until the
    optimum is first evaluated, from a uniform random start."""
    return fast_ia_level_chain(benchmark, n, gamma, mode, d).expected_evaluations()


def rls_level_chain(benchmark, n: int, k: int = 1, d: Optional[int] = None) -> LevelChain:
    """Exact level kernel of the elitist loop flipping a uniform k-subset.

    Every generation evaluates exactly one offspring; a proposal at the
    optimum's level is the optimum and absorbs, any other proposal is
    accepted iff at least as fit as the parent.
    """
    if n > _MAX_EXACT_N:
        raise ValueError(f"exact chain limited to n <= {_MAX_EXACT_N}")
    if not 1 <= k <= n:
        raise ValueError("k must lie in 1..n")
    bench = _coerce_unitation(benchmark, n, d)
    fit = _unitation_profile(bench)
    opt_level = bench.optimum.count_ones()

    kernel = np.zeros((n + 1, n + 1))
    evals = np.ones(n + 1)
    kernel[opt_level, opt_level] = 1.0
    evals[opt_level] = 0.0
    denom = math.comb(n, k)
    for a in range(n + 1):
        if a == opt_level:
            continue
        row = np.zeros(n + 1)
        for j in range(k + 1):  # j zeros flipped to ones
            if j > n - a or k - j > a:
                continue
            prob = math.comb(n - a, j) * math.comb(a, k - j) / denom
            b = a + 2 * j - k
            if b == opt_level or fit[b] >= fit[a]:
                row[b] += prob
            else:
                row[a] += prob
        kernel[a] = row
    return LevelChain(n, kernel, evals, opt_level)


def exact_rls_expected_evals(benchmark, n: int, k: int = 1, d: Optional[int] = None) -> float:
    """Exact expected evaluations of the k-flip local search until the
    optimum is first evaluated, from a uniform random start."""
    return rls_level_chain(benchmark, n, k, d).expected_evaluations()


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    critical: float
    passed: bool


def _default_flip_order(n: int, rng: RandomSource) -> list[int]:
    """Partial-free reference sampler: a full uniform permutation."""
    perm = list(range(n))
    rng.py.shuffle(perm)
    return perm


def prefix_subset_chi_square(
    n: int,
    k: int,
    samples: int,
    rng: RandomSource,
    flip_order: Optional[Callable[[int, RandomSource], Sequence[int]]] = None,
    alpha: float = 0.01,
) -> ChiSquareResult:
    """Pearson test of the law 'first k flipped positions form a uniform
    k-subset' over all C(n, k) subsets.

    ``flip_order`` may inject any position sampler (e.g. an operator's own,
    or a deliberately biased one as a negative control); the default is an
    independent full-permutation reference.
    """
    from scipy.stats import chi2

    if not 1 <= k <= n:
        raise ValueError("k must lie in 1..n")
    bins = math.comb(n, k)
    if samples < 5 * bins:
        raise ValueError(
            f"need >= {5 * bins} samples for expected bin counts >= 5"
        )
    if flip_order is None:
        flip_order = _default_flip_order

    counts: dict[int, int] = {}
    for _ in range(samples):
        order = flip_order(n, rng)
        mask = 0
        taken = 0
        for pos in order:
            mask |= 1 << pos
            taken += 1
            if taken == k:
                break
        counts[mask] = counts.get(mask, 0) + 1

    expected = samples / bins
    stat = sum((c - expected) ** 2 for c in counts.values()) / expected
    # subsets never observed contribute their full expectation
    stat += (bins - len(counts)) * expected
    dof = bins - 1
    if dof == 0:
        return ChiSquareResult(0.0, 0, 0.0, True)
    critical = float(chi2.ppf(1.0 - alpha, dof))
    return ChiSquareResult(float(stat), dof, critical, stat <= critical)
