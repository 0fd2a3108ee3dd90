"""Mutation operators.

The hypermutation operators flip up to ``n`` distinct positions of the
parent cumulatively, in uniformly random order, and evaluate the
intermediate string after step ``i`` with a probability ``p(i)`` drawn from
a parabolic schedule: certain evaluation at the first and last steps is
replaced by ``1/e``, and interior steps are evaluated with probability
``min(1, gamma/i)`` falling toward the middle of the string and rising
again symmetrically.  Two variants differ in what they do with the
evaluations: the first-constructive-mutation form stops at the first
evaluated string at least as good (or strictly better, depending on mode)
than the parent, while the best-of-mutation form always performs all ``n``
steps and returns the best string it evaluated.

Evaluation coins are never flipped one at a time here.  The index of the
next evaluated step is sampled directly from the exact first-success law of
the independent coins (inverse-CDF on the cumulative hazard), so a
hypermutation with few evaluations costs time proportional to the flips
actually needed, not to ``n`` coin flips.  Positions are drawn by a partial
Fisher-Yates shuffle, which induces exactly the full-permutation
distribution on any prefix.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Callable, Optional

from .core import Bitstring, CountingObjective, EvalCounter, RandomSource

GEQ = "geq"  # an equally good string counts as constructive
GT = "gt"  # only a strictly better string does

_MODES = (GEQ, GT)


def _validate_mode(mode: str) -> bool:
    """Return True for GEQ, False for GT."""
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    return mode == GEQ


class ParabolicSchedule:
    """Evaluation probabilities p(1..n) for one hypermutation.

    p(1) = p(n) = 1/e; p(i) = min(1, gamma/i) for 1 < i <= n/2 and
    min(1, gamma/(n-i)) for n/2 < i < n.  gamma must lie in (0, 2].
    """

    __slots__ = ("n", "gamma", "_p", "_hazard", "_next_forced", "_np_tables")

    def __init__(self, n: int, gamma: float):
        if n < 1:
            raise ValueError("n must be positive")
        if not 0.0 < gamma <= 2.0:
            raise ValueError("gamma must lie in (0, 2]")
        self.n = n
        self.gamma = gamma

        inv_e = math.exp(-1.0)
        p = [0.0] * (n + 1)  # p[i] for steps 1..n; p[0] unused
        for i in range(1, n + 1):
            if i == 1 or i == n:
                p[i] = inv_e
            elif 2 * i <= n:
                p[i] = min(1.0, gamma / i)
            else:
                p[i] = min(1.0, gamma / (n - i))
        self._p = p

        # Tables for exact skip-sampling of the next evaluated step.
        # hazard[j] = sum over non-forced steps k <= j of -ln(1 - p(k));
        # forced steps (p = 1) contribute nothing and are handled by the
        # next-forced cap, since they always evaluate.
        hazard = [0.0] * (n + 1)
        acc = 0.0
        for i in range(1, n + 1):
            if p[i] < 1.0:
                acc -= math.log1p(-p[i])
            hazard[i] = acc
        self._hazard = hazard

        next_forced = [n + 1] * (n + 2)
        for i in range(n, 0, -1):
            next_forced[i - 1] = i if p[i] >= 1.0 else next_forced[i]
        self._next_forced = next_forced
        self._np_tables = None

    def probability(self, i: int) -> float:
        if not 1 <= i <= self.n:
            raise ValueError(f"step index {i} outside 1..{self.n}")
        return self._p[i]

    def total(self) -> float:
        """Sum of all evaluation probabilities (expected coins per call)."""
        return math.fsum(self._p[1:])

    def next_eval_index(self, i: int, rng: RandomSource) -> int:
        """Smallest step j > i whose evaluation coin comes up heads, or n+1.

        Exact: P(result = j) equals p(j) * prod_{i<k<j} (1 - p(k)).
        """
        u = 1.0 - rng.py.random()  # (0, 1], keeps log finite
        t = self._hazard[i] - math.log(u)
        j = bisect_left(self._hazard, t, lo=i + 1)
        nf = self._next_forced[i]
        return j if j < nf else nf

    def numpy_tables(self):
        """(hazard, next_forced) as arrays for the compiled kernels."""
        if self._np_tables is None:
            import numpy as np

            self._np_tables = (
                np.asarray(self._hazard, dtype=np.float64),
                np.asarray(self._next_forced[: self.n + 1], dtype=np.int64),
            )
        return self._np_tables

    def __repr__(self) -> str:
        return f"ParabolicSchedule(n={self.n}, gamma={self.gamma})"


def eval_probability(schedule: ParabolicSchedule, i: int) -> float:
    """Probability that the string after mutation step ``i`` is evaluated."""
    return schedule.probability(i)


# --- gamma presets ---------------------------------------------------------
#
# Named rules mapping n to gamma, exposed to the experiment harness.  The
# "const(c)" spelling embeds a literal.  All logs are natural.

def _preset_inv_ln_n(n: int) -> float:
    return 1.0 / math.log(n)


def _preset_quarter_inv_ln_n(n: int) -> float:
    return 1.0 / (4.0 * math.log(n))


def _preset_inv_n_log2_sq(n: int) -> float:
    return 1.0 / (n * math.log(n) ** 2)


GAMMA_PRESETS: dict[str, Callable[[int], float]] = {
    "inv_ln_n": _preset_inv_ln_n,
    "quarter_inv_ln_n": _preset_quarter_inv_ln_n,
    "inv_n_log2_sq": _preset_inv_n_log2_sq,
}


def resolve_gamma(preset: str | float, n: int) -> float:
    """Turn a preset name, ``const(c)`` spelling or numeric literal into gamma."""
    if isinstance(preset, (int, float)):
        return float(preset)
    text = preset.strip()
    if text in GAMMA_PRESETS:
        return GAMMA_PRESETS[text](n)
    if text.startswith("const(") and text.endswith(")"):
        return float(text[len("const(") : -1])
    try:
        return float(text)
    except ValueError:
        raise ValueError(
            f"unknown gamma preset {preset!r}; known: "
            f"{sorted(GAMMA_PRESETS)} or const(c) or a number"
        ) from None


@dataclass(frozen=True, slots=True)
class MutationPotential:
    """Flip count of the static hypermutation: M = ceil(c * n)."""

    c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.c <= 1.0:
            raise ValueError("potential coefficient c must lie in (0, 1]")

    def steps(self, n: int) -> int:
        return math.ceil(self.c * n)


@dataclass(frozen=True, slots=True)
class MutationOutcome:
    """What one hypermutation call produced.

    ``best_eval_fitness`` is the fitness of the returned string when at
    least one evaluation happened, else None.  ``stop_step`` is the step at
    which a first-constructive-mutation operator stopped, None otherwise.
    """

    offspring: Bitstring
    evals_used: int
    constructive_found: bool
    best_eval_fitness: Optional[float]
    stop_step: Optional[int]


def _eval_fn(
    f: Callable[[Bitstring], float], counter: EvalCounter
) -> Callable[[Bitstring], float]:
    """Evaluation closure charging exactly one count per call.

    A wrapper that already manages this very counter (a CountingObjective
    built for the run) counts internally; anything else is charged here.
    """
    if getattr(f, "counter", None) is counter:
        return f

    def call(x: Bitstring) -> float:
        counter.count += 1
        return f(x)

    return call


def _kernel_for(f, parent: Bitstring, schedule: ParabolicSchedule):
    """Compiled fast path gate: run-wrapped built-in benchmark, sizes agree."""
    if not isinstance(f, CountingObjective):
        return None
    bench = f.fn
    kid = getattr(bench, "kernel_id", None)
    if kid is None or getattr(bench, "n", None) != parent.n:
        return None
    if schedule.n != parent.n:
        return None
    from . import _kernels

    if not _kernels.AVAILABLE:
        return None
    if kid == _kernels.KID_HIDDENPATH and parent.n > 64:
        return None
    return _kernels


def phype_fcm(
    parent: Bitstring,
    parent_fitness: float,
    f: Callable[[Bitstring], float],
    schedule: ParabolicSchedule,
    mode: str,
    rng: RandomSource,
    counter: EvalCounter,
) -> MutationOutcome:
    """Hypermutation stopping at the first constructive evaluation.

    Flips a uniformly random permutation of positions cumulatively; after
    step i, with probability p(i), evaluates the current string.  The first
    evaluation satisfying the mode's relation against the parent stops the
    operator.  If evaluations happen but none is constructive, the LAST
    evaluated string is returned; with no evaluations at all, the parent.
    """
    geq = _validate_mode(mode)
    n = parent.n
    if schedule.n != n:
        raise ValueError("schedule length does not match parent")
    evalf = _eval_fn(f, counter)
    start = counter.count
    rnd = rng.py.random

    word = parent.word
    perm = list(range(n))
    done = 0  # flips performed so far
    last_word = 0
    last_fit: Optional[float] = None
    constructive = False
    stop_step: Optional[int] = None

    while True:
        j = schedule.next_eval_index(done, rng)
        if j > n:
            break
        # advance the permutation only as far as actually evaluated
        for k in range(done, j):
            r = k + int(rnd() * (n - k))
            perm[k], perm[r] = perm[r], perm[k]
            word ^= 1 << perm[k]
        done = j
        fit = evalf(Bitstring(word, n))
        last_word, last_fit = word, fit
        if (fit >= parent_fitness) if geq else (fit > parent_fitness):
            constructive = True
            stop_step = done
            break

    evals = counter.count - start
    if last_fit is None:
        return MutationOutcome(parent, evals, False, None, None)
    return MutationOutcome(
        Bitstring(last_word, n), evals, constructive, last_fit, stop_step
    )


def phype_bm(
    parent: Bitstring,
    parent_fitness: float,
    f: Callable[[Bitstring], float],
    schedule: ParabolicSchedule,
    rng: RandomSource,
    counter: EvalCounter,
    *,
    force_python: bool = False,
) -> MutationOutcome:
    """Hypermutation returning the best evaluated intermediate string.

    All n flip steps are performed (steps past the last evaluation cannot
    influence the outcome and are elided); ties between equally good
    evaluations break toward the earliest step.  With no evaluations the
    parent is returned.  ``constructive_found`` is true iff the best
    evaluation strictly beats the parent.
    """
    n = parent.n
    if schedule.n != n:
        raise ValueError("schedule length does not match parent")

    kern = None if force_python else _kernel_for(f, parent, schedule)
    if kern is not None:
        return kern.bm_once_dispatch(parent, parent_fitness, f, schedule, rng)

    evalf = _eval_fn(f, counter)
    start = counter.count
    rnd = rng.py.random

    word = parent.word
    perm = list(range(n))
    done = 0
    best_word = 0
    best_fit: Optional[float] = None

    while True:
        j = schedule.next_eval_index(done, rng)
        if j > n:
            break
        for k in range(done, j):
            r = k + int(rnd() * (n - k))
            perm[k], perm[r] = perm[r], perm[k]
            word ^= 1 << perm[k]
        done = j
        fit = evalf(Bitstring(word, n))
        if best_fit is None or fit > best_fit:
            best_word, best_fit = word, fit

    evals = counter.count - start
    if best_fit is None:
        return MutationOutcome(parent, evals, False, None, None)
    return MutationOutcome(
        Bitstring(best_word, n),
        evals,
        best_fit > parent_fitness,
        best_fit,
        None,
    )


def static_hmp_fcm(
    parent: Bitstring,
    parent_fitness: float,
    f: Callable[[Bitstring], float],
    potential: MutationPotential,
    mode: str,
    rng: RandomSource,
    counter: EvalCounter,
) -> MutationOutcome:
    """Static hypermutation: evaluate after every one of M = ceil(c*n) flips.

    Stops at the first constructive evaluation like the parabolic FCM
    operator; otherwise returns the M-th string after M evaluations.
    """
    geq = _validate_mode(mode)
    n = parent.n
    m = potential.steps(n)
    evalf = _eval_fn(f, counter)
    start = counter.count
    rnd = rng.py.random

    word = parent.word
    perm = list(range(n))
    last_fit: Optional[float] = None
    constructive = False
    stop_step: Optional[int] = None

    for k in range(m):
        r = k + int(rnd() * (n - k))
        perm[k], perm[r] = perm[r], perm[k]
        word ^= 1 << perm[k]
        fit = evalf(Bitstring(word, n))
        last_fit = fit
        if (fit >= parent_fitness) if geq else (fit > parent_fitness):
            constructive = True
            stop_step = k + 1
            break

    evals = counter.count - start
    if last_fit is None:  # only possible for m = 0, excluded by validation
        return MutationOutcome(parent, evals, False, None, None)
    return MutationOutcome(
        Bitstring(word, n), evals, constructive, last_fit, stop_step
    )


def sbm(parent: Bitstring, rate: float, rng: RandomSource) -> Bitstring:
    """Standard bit mutation: flip each position independently with ``rate``.

    Sampled by geometric gaps between flipped positions, which is exact and
    costs time proportional to the number of flips.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    n = parent.n
    if rate == 0.0:
        return parent
    if rate == 1.0:
        return Bitstring(~parent.word, n)
    rnd = rng.py.random
    log_keep = math.log1p(-rate)
    mask = 0
    i = 0
    while True:
        u = 1.0 - rnd()
        i += int(math.log(u) / log_keep)
        if i >= n:
            break
        mask |= 1 << i
        i += 1
    return parent.with_flipped_mask(mask)


def rls_k_mutation(parent: Bitstring, k: int, rng: RandomSource) -> Bitstring:
    """Flip a uniformly random k-subset of positions."""
    n = parent.n
    if not 1 <= k <= n:
        raise ValueError("k must lie in 1..n")
    mask = 0
    for pos in rng.py.sample(range(n), k):
        mask |= 1 << pos
    return parent.with_flipped_mask(mask)
