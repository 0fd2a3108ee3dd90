"""Compiled inner loops for the built-in benchmarks.

The reference implementations in ``operators``/``algorithms`` are plain
Python and work for any objective.  For the six built-in benchmark
functions, whole runs (and single best-of-mutation calls) can instead
execute inside numba-jitted kernels: bitstrings become little arrays of
uint64 words, fitness is a switch on a numeric benchmark id, and
randomness comes from a splitmix64 generator embedded here so that
results are reproducible regardless of compiler version.

Semantics are identical to the Python paths (same flip law, same
evaluation-coin law, same acceptance, budget and optimum-stop rules); the
random streams differ, so a given seed produces a different but equally
valid run on each path.  The oracle-equivalence tests exercise the kernels
against exact expectations.

Everything here is internal; the public modules decide when dispatching
is safe (built-in benchmark, matching sizes, hidden-path only up to one
word).
"""

from __future__ import annotations

import math

import numpy as np

from .core import Bitstring

try:
    from numba import njit

    AVAILABLE = True
except Exception:  # pragma: no cover - exercised only without numba
    AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


# Benchmark ids; keep in sync with immuno_opt.benchmarks.
KID_ONEMAX = 0
KID_LEADINGONES = 1
KID_TRAP = 2
KID_JUMP = 3
KID_CLIFF = 4
KID_HIDDENPATH = 5

# Outcome codes of the single-hypermutation inner kernels.
_NO_EVAL = 0
_RETURNED = 1  # at least one evaluation; offspring written to `out`
_CONSTRUCTIVE = 2  # FCM stop; offspring in `out`
_OPTIMUM = 3  # the optimum was evaluated; run must end successfully
_BUDGET = 4  # next evaluation would exceed the budget; run must end

U64 = np.uint64
_GOLDEN = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_M1 = U64(0x5555555555555555)
_M2 = U64(0x3333333333333333)
_M4 = U64(0x0F0F0F0F0F0F0F0F)
_H01 = U64(0x0101010101010101)
_FULL = U64(0xFFFFFFFFFFFFFFFF)
_INV_2_53 = 1.0 / 9007199254740992.0


def pack_word(word: int, n: int) -> np.ndarray:
    """Python int -> little-endian uint64 word array of length ceil(n/64)."""
    nwords = (n + 63) // 64
    return np.frombuffer(word.to_bytes(nwords * 8, "little"), dtype=np.uint64).copy()


def unpack_word(words: np.ndarray) -> int:
    return int.from_bytes(words.tobytes(), "little")


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return z ^ (z >> U64(31))


@njit(inline="always")
def _next_u64(state):
    state = state + _GOLDEN  # wraps mod 2^64
    return state, _mix64(state)


@njit(inline="always")
def _next_double(state):
    # 53-bit uniform in [0, 1)
    state, z = _next_u64(state)
    return state, float(z >> U64(11)) * _INV_2_53


@njit(inline="always")
def _popcount(x):
    x = x - ((x >> U64(1)) & _M1)
    x = (x & _M2) + ((x >> U64(2)) & _M2)
    x = (x + (x >> U64(4))) & _M4
    return int((x * _H01) >> U64(56))


@njit(inline="always")
def _trailing_ones(x):
    if x == _FULL:
        return 64
    return _popcount(x ^ (x + U64(1))) - 1


@njit(inline="always")
def _ones_total(words):
    s = 0
    for w in range(words.shape[0]):
        s += _popcount(words[w])
    return s


@njit(inline="always")
def _fitness(kid, words, n, dpar, eps, aux):
    """Benchmark switch.  dpar: valley width / path-length cap; eps and aux
    (= log2 n) are used by the hidden-path function only.  Arithmetic
    mirrors the Python implementations expression by expression so float
    results compare equal across paths."""
    if kid == 0:  # onemax
        return float(_ones_total(words))
    elif kid == 1:  # leadingones
        total = 0
        for w in range(words.shape[0]):
            t = _trailing_ones(words[w])
            total += t
            if t < 64:
                break
        return float(total)
    elif kid == 2:  # trap
        m = _ones_total(words)
        if m == 0:
            return float(n + 1)
        return float(m)
    elif kid == 3:  # jump
        m = _ones_total(words)
        if m <= n - dpar or m == n:
            return float(dpar + m)
        return float(n - m)
    elif kid == 4:  # cliff
        m = _ones_total(words)
        if m <= n - dpar:
            return float(m)
        return float(m) - dpar + 0.5
    else:  # hiddenpath; dispatch guarantees n <= 64 (single word)
        w0 = words[0]
        z = n - _popcount(w0)
        if z == 5 and w0 != ((U64(1) << U64(n - 5)) - U64(1)):
            tail = 5 - _popcount(w0 >> U64(n - 5))
            return n - eps + tail / n
        if z < 5:
            return 0.0
        if z == n:
            return 0.0
        if z <= dpar and w0 == ((U64(1) << U64(n - z)) - U64(1)):
            return n - eps + eps * z / aux
        if z == n - 1:
            return float(n)
        return float(z)


@njit(inline="always")
def _first_geq(a, lo, t):
    # smallest idx >= lo with a[idx] >= t (a non-decreasing)
    hi = a.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < t:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(inline="always")
def _next_eval_index(state, hazard, next_forced, done, n):
    """Exact first-success index of the remaining evaluation coins."""
    state, u = _next_double(state)
    t = hazard[done] - math.log(1.0 - u)
    j = _first_geq(hazard, done + 1, t)
    nf = next_forced[done]
    if nf < j:
        j = nf
    return state, j


@njit(inline="always")
def _advance_flips(state, scratch, perm, done, j, n):
    """Partial Fisher-Yates steps done..j-1, flipping as we go."""
    for k in range(done, j):
        state, u = _next_double(state)
        r = k + int(u * (n - k))
        if r >= n:  # guard against a pathological rounding at u ~ 1
            r = n - 1
        tmp = perm[k]
        perm[k] = perm[r]
        perm[r] = tmp
        pos = perm[k]
        scratch[pos >> 6] ^= U64(1) << U64(pos & 63)
    return state


@njit(inline="always")
def _copy_words(src, dst):
    for w in range(src.shape[0]):
        dst[w] = src[w]


@njit
def _fcm_inner(
    state,
    cur,
    scratch,
    out,
    perm,
    hazard,
    next_forced,
    n,
    kid,
    dpar,
    eps,
    aux,
    geq,
    parent_fit,
    evals_left,
    opt_value,
):
    """One first-constructive-mutation hypermutation.

    Returns (state, code, fitness, evals_used, stop_step).  On _RETURNED /
    _CONSTRUCTIVE / _OPTIMUM the offspring sits in `out`.
    """
    _copy_words(cur, scratch)
    done = 0
    evals = 0
    last_fit = 0.0
    has_eval = False
    while True:
        state, j = _next_eval_index(state, hazard, next_forced, done, n)
        if j > n:
            break
        state = _advance_flips(state, scratch, perm, done, j, n)
        done = j
        if evals >= evals_left:
            return state, _BUDGET, 0.0, evals, 0
        fit = _fitness(kid, scratch, n, dpar, eps, aux)
        evals += 1
        if fit == opt_value:
            _copy_words(scratch, out)
            return state, _OPTIMUM, fit, evals, done
        constructive = (fit >= parent_fit) if geq else (fit > parent_fit)
        if constructive:
            _copy_words(scratch, out)
            return state, _CONSTRUCTIVE, fit, evals, done
        last_fit = fit
        has_eval = True
        _copy_words(scratch, out)  # FCM returns the LAST evaluated string
    if has_eval:
        return state, _RETURNED, last_fit, evals, 0
    return state, _NO_EVAL, 0.0, evals, 0


@njit
def _bm_inner(
    state,
    cur,
    scratch,
    out,
    perm,
    hazard,
    next_forced,
    n,
    kid,
    dpar,
    eps,
    aux,
    evals_left,
    opt_value,
):
    """One best-of-mutation hypermutation: all steps, best evaluation wins,
    earliest step breaking ties.  Returns (state, code, fitness, evals)."""
    _copy_words(cur, scratch)
    done = 0
    evals = 0
    best_fit = 0.0
    has_eval = False
    while True:
        state, j = _next_eval_index(state, hazard, next_forced, done, n)
        if j > n:
            break
        state = _advance_flips(state, scratch, perm, done, j, n)
        done = j
        if evals >= evals_left:
            return state, _BUDGET, 0.0, evals
        fit = _fitness(kid, scratch, n, dpar, eps, aux)
        evals += 1
        if fit == opt_value:
            _copy_words(scratch, out)
            return state, _OPTIMUM, fit, evals
        if not has_eval or fit > best_fit:
            best_fit = fit
            has_eval = True
            _copy_words(scratch, out)
    if has_eval:
        return state, _RETURNED, best_fit, evals
    return state, _NO_EVAL, 0.0, evals


@njit(inline="always")
def _random_words(state, words, n):
    for w in range(words.shape[0]):
        state, z = _next_u64(state)
        words[w] = z
    rem = n & 63
    if rem != 0:
        words[words.shape[0] - 1] &= (U64(1) << U64(rem)) - U64(1)
    return state


@njit(cache=True, nogil=True)
def run_fast_ia(
    kid, n, dpar, eps, aux, opt_value, hazard, next_forced, geq, budget, seed
):
    """(1+1) loop with the FCM hypermutation; accept when offspring >= parent.

    Returns (evaluations, generations, success, best_fitness).  Generations
    count completed loop iterations; a run ending mid-hypermutation (budget
    or optimum) does not count the unfinished generation.
    """
    nwords = (n + 63) >> 6
    cur = np.zeros(nwords, dtype=np.uint64)
    scratch = np.zeros(nwords, dtype=np.uint64)
    out = np.zeros(nwords, dtype=np.uint64)
    perm = np.arange(n, dtype=np.int32)
    state = U64(seed)

    state = _random_words(state, cur, n)
    evals = 1  # caller guarantees budget >= 1
    gens = 0
    fx = _fitness(kid, cur, n, dpar, eps, aux)
    best = fx
    if fx == opt_value:
        return evals, gens, True, best
    while True:
        if evals >= budget:  # zero-eval generations exist: stop here too
            return evals, gens, False, best
        state, code, fit, used, _ = _fcm_inner(
            state, cur, scratch, out, perm, hazard, next_forced,
            n, kid, dpar, eps, aux, geq, fx, budget - evals, opt_value,
        )
        evals += used
        if code == _BUDGET:
            return evals, gens, False, best
        if code == _OPTIMUM:
            return evals, gens, True, fit
        if code != _NO_EVAL:
            if fit > best:
                best = fit
            if fit >= fx:  # Algorithm's acceptance is always >=
                _copy_words(out, cur)
                fx = fit
        gens += 1


@njit(cache=True, nogil=True)
def run_static_ia(kid, n, m_steps, dpar, eps, aux, opt_value, geq, budget, seed):
    """(1+1) loop with static hypermutation: every step evaluated, stop at
    the first constructive one; accept when offspring >= parent."""
    nwords = (n + 63) >> 6
    cur = np.zeros(nwords, dtype=np.uint64)
    scratch = np.zeros(nwords, dtype=np.uint64)
    perm = np.arange(n, dtype=np.int32)
    state = U64(seed)

    state = _random_words(state, cur, n)
    evals = 1
    gens = 0
    fx = _fitness(kid, cur, n, dpar, eps, aux)
    best = fx
    if fx == opt_value:
        return evals, gens, True, best
    while True:
        _copy_words(cur, scratch)
        fit = fx
        got_eval = False
        for k in range(m_steps):
            if evals >= budget:
                return evals, gens, False, best
            state = _advance_flips(state, scratch, perm, k, k + 1, n)
            fit = _fitness(kid, scratch, n, dpar, eps, aux)
            evals += 1
            got_eval = True
            if fit == opt_value:
                return evals, gens, True, fit
            if (fit >= fx) if geq else (fit > fx):
                break
        if got_eval:
            if fit > best:
                best = fit
            if fit >= fx:
                _copy_words(scratch, cur)
                fx = fit
        gens += 1


@njit(cache=True, nogil=True)
def run_mutation_ea(
    kid, n, dpar, eps, aux, opt_value, cum_flip_count, budget, seed
):
    """Elitist (1+1) loop flipping k positions per generation, k drawn from
    the inverse CDF in cum_flip_count (binomial for standard bit mutation,
    a point mass for k-bit local search).  One evaluation per generation."""
    nwords = (n + 63) >> 6
    cur = np.zeros(nwords, dtype=np.uint64)
    scratch = np.zeros(nwords, dtype=np.uint64)
    perm = np.arange(n, dtype=np.int32)
    state = U64(seed)

    state = _random_words(state, cur, n)
    evals = 1
    gens = 0
    fx = _fitness(kid, cur, n, dpar, eps, aux)
    best = fx
    if fx == opt_value:
        return evals, gens, True, best
    while True:
        if evals >= budget:
            return evals, gens, False, best
        state, u = _next_double(state)
        k = 0
        while u >= cum_flip_count[k]:
            k += 1
        _copy_words(cur, scratch)
        state = _advance_flips(state, scratch, perm, 0, k, n)
        fit = _fitness(kid, scratch, n, dpar, eps, aux)
        evals += 1
        if fit == opt_value:
            return evals, gens, True, fit
        if fit > best:
            best = fit
        if fit >= fx:
            _copy_words(scratch, cur)
            fx = fit
        gens += 1


@njit(cache=True, nogil=True)
def run_opt_ia(
    kid,
    n,
    dpar,
    eps,
    aux,
    opt_value,
    hazard,
    next_forced,
    use_bm,
    geq,
    mu,
    dup,
    tau,
    budget,
    seed,
):
    """Population loop: age, clone+hypermutate, hybrid ageing, refill,
    truncation.  Mirrors the Python implementation line for line.

    Returns (evaluations, generations, success, best_fitness)."""
    nwords = (n + 63) >> 6
    cap = mu * (dup + 1)
    pop = np.zeros((cap, nwords), dtype=np.uint64)
    fits = np.zeros(cap, dtype=np.float64)
    ages = np.zeros(cap, dtype=np.int64)
    scratch = np.zeros(nwords, dtype=np.uint64)
    out = np.zeros(nwords, dtype=np.uint64)
    perm = np.arange(n, dtype=np.int32)
    state = U64(seed)
    p_die = 1.0 - 1.0 / (mu + 1.0)

    evals = 0
    gens = 0
    best = -1.0e300
    size = 0
    for i in range(mu):
        if evals >= budget:
            return evals, gens, False, best
        state = _random_words(state, pop[i], n)
        f = _fitness(kid, pop[i], n, dpar, eps, aux)
        evals += 1
        if f > best:
            best = f
        if f == opt_value:
            return evals, gens, True, best
        fits[i] = f
        ages[i] = 0
        size += 1

    while True:
        if evals >= budget:  # zero-eval generations exist: stop here too
            return evals, gens, False, best
        for i in range(size):
            ages[i] += 1
        parents = size
        for i in range(parents):
            for _ in range(dup):
                if use_bm:
                    state, code, fit, used = _bm_inner(
                        state, pop[i], scratch, out, perm, hazard, next_forced,
                        n, kid, dpar, eps, aux, budget - evals, opt_value,
                    )
                else:
                    state, code, fit, used, _stop = _fcm_inner(
                        state, pop[i], scratch, out, perm, hazard, next_forced,
                        n, kid, dpar, eps, aux, geq, fits[i],
                        budget - evals, opt_value,
                    )
                evals += used
                if code == _BUDGET:
                    return evals, gens, False, best
                if code == _OPTIMUM:
                    return evals, gens, True, fit
                if code == _NO_EVAL:
                    _copy_words(pop[i], out)
                    fit = fits[i]
                if fit > best:
                    best = fit
                _copy_words(out, pop[size])
                fits[size] = fit
                # age 0 only on strict improvement; else inherit the
                # parent's already-incremented age
                if fit > fits[i]:
                    ages[size] = 0
                else:
                    ages[size] = ages[i]
                size += 1
        # hybrid ageing: each individual at or past tau dies independently
        j = 0
        for i in range(size):
            keep = True
            if float(ages[i]) >= tau:
                state, u = _next_double(state)
                if u < p_die:
                    keep = False
            if keep:
                if i != j:
                    _copy_words(pop[i], pop[j])
                    fits[j] = fits[i]
                    ages[j] = ages[i]
                j += 1
        size = j
        # refill with fresh random individuals up to mu
        while size < mu:
            if evals >= budget:
                return evals, gens, False, best
            state = _random_words(state, pop[size], n)
            f = _fitness(kid, pop[size], n, dpar, eps, aux)
            evals += 1
            if f > best:
                best = f
            if f == opt_value:
                return evals, gens, True, best
            fits[size] = f
            ages[size] = 0
            size += 1
        # truncation: repeatedly drop a uniformly random lowest-fitness
        # individual
        while size > mu:
            fmin = fits[0]
            for i in range(1, size):
                if fits[i] < fmin:
                    fmin = fits[i]
            cnt = 0
            for i in range(size):
                if fits[i] == fmin:
                    cnt += 1
            state, u = _next_double(state)
            pick = int(u * cnt)
            if pick >= cnt:
                pick = cnt - 1
            idx = -1
            seen = 0
            for i in range(size):
                if fits[i] == fmin:
                    if seen == pick:
                        idx = i
                        break
                    seen += 1
            size -= 1
            if idx != size:
                _copy_words(pop[size], pop[idx])
                fits[idx] = fits[size]
                ages[idx] = ages[size]
        gens += 1


@njit(cache=True, nogil=True)
def bm_once(
    words_in, out, n, kid, dpar, eps, aux, hazard, next_forced,
    evals_left, opt_value, seed,
):
    """Single best-of-mutation call (operator-level fast path)."""
    nwords = words_in.shape[0]
    scratch = np.zeros(nwords, dtype=np.uint64)
    perm = np.arange(n, dtype=np.int32)
    state = U64(seed)
    state, code, fit, evals = _bm_inner(
        state, words_in, scratch, out, perm, hazard, next_forced,
        n, kid, dpar, eps, aux, evals_left, opt_value,
    )
    return code, fit, evals


def bm_once_dispatch(parent, parent_fitness, f, schedule, rng):
    """Python-side wrapper turning a kernel bm_once call into the operator
    contract (MutationOutcome or the run-control exceptions)."""
    from .core import BudgetExhausted, OptimumFound
    from .operators import MutationOutcome

    bench = f.fn
    counter = f.counter
    n = parent.n
    hazard, next_forced = schedule.numpy_tables()
    dpar, eps, aux = bench.kernel_params()
    remaining = f.budget - counter.count
    if remaining > 2**62:
        remaining = 2**62
    words_in = pack_word(parent.word, n)
    out = np.zeros_like(words_in)
    # optimum checks apply only when the wrapper is armed for them
    opt_value = bench.max_value if f.optimum_word is not None else math.nan
    code, fit, evals = bm_once(
        words_in, out, n, bench.kernel_id, dpar, eps, aux, hazard,
        next_forced, int(remaining), opt_value,
        np.uint64(rng.next_kernel_seed()),
    )
    counter.count += evals
    if code == _BUDGET:
        raise BudgetExhausted(f"budget {f.budget} exhausted")
    if code == _OPTIMUM:
        raise OptimumFound(fit)
    if code == _NO_EVAL:
        return MutationOutcome(parent, 0, False, None, None)
    offspring = Bitstring(unpack_word(out) & ((1 << n) - 1), n)
    return MutationOutcome(offspring, evals, fit > parent_fitness, fit, None)


def warmup():
    """Force-compile every kernel on tiny inputs (cached across runs)."""
    if not AVAILABLE:
        return False
    hazard = np.array([0.0, 0.5, 1.0], dtype=np.float64)
    nf = np.array([3, 3, 3], dtype=np.int64)
    run_fast_ia(KID_ONEMAX, 2, 0, 0.0, 0.0, 2.0, hazard, nf, True, 10, 1)
    run_static_ia(KID_ONEMAX, 2, 2, 0, 0.0, 0.0, 2.0, True, 10, 1)
    cum = np.array([0.5, 0.9, 2.0], dtype=np.float64)
    run_mutation_ea(KID_ONEMAX, 2, 0, 0.0, 0.0, 2.0, cum, 10, 1)
    run_opt_ia(
        KID_ONEMAX, 2, 0, 0.0, 0.0, 2.0, hazard, nf, True, True,
        1, 1, 4.0, 10, 1,
    )
    run_opt_ia(
        KID_ONEMAX, 2, 0, 0.0, 0.0, 2.0, hazard, nf, False, True,
        1, 1, 4.0, 10, 1,
    )
    w = pack_word(0, 2)
    out = np.zeros_like(w)
    bm_once(w, out, 2, KID_ONEMAX, 0, 0.0, 0.0, hazard, nf, 10, 2.0, 1)
    return True
