"""Bit-level primitives shared by benchmarks, mutation operators and optimisers.

Search points are bitstrings of a fixed length ``n``.  They are stored as
plain Python integers (bit ``i`` of the integer is position ``i`` of the
string, counting from 0), which makes Hamming-ball moves XOR masks and lets
the benchmark functions run on word-level bit tricks instead of per-bit
loops.
"""

from __future__ import annotations

import random
from typing import Callable, Iterable, Sequence

MASK64 = (1 << 64) - 1

# Additive constant of the splitmix64 sequence (Steele, Lea & Flood 2014).
GOLDEN64 = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """Finalising mix of splitmix64: a cheap, well-tested 64-bit scrambler."""
    x &= MASK64
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & MASK64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed for stream ``index`` of a family keyed by ``master_seed``.

    A pure function of its arguments, so trial ``i`` of an experiment uses
    the same stream no matter which sweep point, process or batch it runs
    in.  Distinct indices land in distinct, decorrelated states.
    """
    return splitmix64((master_seed + (index + 1) * GOLDEN64) & MASK64)


class Bitstring:
    """Immutable fixed-length bitstring backed by a single Python int."""

    __slots__ = ("word", "n")

    def __init__(self, word: int, n: int):
        if n <= 0:
            raise ValueError("bitstring length must be positive")
        self.word = word & ((1 << n) - 1)
        self.n = n

    @classmethod
    def zeros(cls, n: int) -> "Bitstring":
        return cls(0, n)

    @classmethod
    def ones(cls, n: int) -> "Bitstring":
        return cls((1 << n) - 1, n)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "Bitstring":
        word = 0
        for i, b in enumerate(bits):
            if b:
                word |= 1 << i
        return cls(word, len(bits))

    @classmethod
    def from_text(cls, text: str) -> "Bitstring":
        """Parse ``"0110..."`` with position 0 leftmost."""
        return cls.from_bits([1 if c == "1" else 0 for c in text])

    def bit(self, i: int) -> int:
        """Value of position ``i`` (0-based)."""
        return (self.word >> i) & 1

    def count_ones(self) -> int:
        return self.word.bit_count()

    def count_zeros(self) -> int:
        return self.n - self.word.bit_count()

    def with_flipped(self, positions: Iterable[int]) -> "Bitstring":
        mask = 0
        for i in positions:
            mask ^= 1 << i
        return Bitstring(self.word ^ mask, self.n)

    def with_flipped_mask(self, mask: int) -> "Bitstring":
        return Bitstring(self.word ^ mask, self.n)

    def to01(self) -> str:
        """Render with position 0 leftmost, so all-ones prefixes read ``111...``."""
        return "".join("1" if (self.word >> i) & 1 else "0" for i in range(self.n))

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Bitstring)
            and self.n == other.n
            and self.word == other.word
        )

    def __hash__(self) -> int:
        return hash((self.word, self.n))

    def __repr__(self) -> str:
        if self.n <= 64:
            return f"Bitstring({self.to01()!r})"
        return f"Bitstring(n={self.n}, ones={self.count_ones()})"


def hamming_distance(a: Bitstring, b: Bitstring) -> int:
    if a.n != b.n:
        raise ValueError("length mismatch")
    return (a.word ^ b.word).bit_count()


class EvalCounter:
    """Mutable tally of objective-function evaluations."""

    __slots__ = ("count",)

    def __init__(self, count: int = 0):
        self.count = count

    def __repr__(self) -> str:
        return f"EvalCounter({self.count})"


def counted_eval(
    f: Callable[[Bitstring], float], x: Bitstring, counter: EvalCounter
) -> float:
    """Evaluate ``f(x)`` and charge one evaluation to ``counter``."""
    counter.count += 1
    return f(x)


class BudgetExhausted(Exception):
    """Raised by a counting objective instead of performing the evaluation
    that would exceed the run's budget."""


class OptimumFound(Exception):
    """Raised the moment the global optimum is evaluated.

    Runtimes are measured up to and including the first evaluation of the
    optimum, so the evaluation that triggers this is already counted.
    """

    def __init__(self, fitness: float):
        super().__init__(f"optimum evaluated (fitness {fitness})")
        self.fitness = fitness


class CountingObjective:
    """Objective wrapper that owns a run's evaluation accounting.

    Every call is charged to the shared counter; the call that would exceed
    ``budget`` raises ``BudgetExhausted`` before evaluating (so the counter
    never passes the budget), and evaluating the string whose backing word
    equals ``optimum_word`` raises ``OptimumFound`` immediately, even in the
    middle of a hypermutation.

    Mutation operators recognise this wrapper (via the shared counter) and
    let it do the counting instead of charging the counter themselves.
    """

    __slots__ = ("fn", "counter", "budget", "optimum_word")

    def __init__(
        self,
        fn: Callable[[Bitstring], float],
        counter: EvalCounter,
        budget: float = float("inf"),
        optimum_word: int | None = None,
    ):
        self.fn = fn
        self.counter = counter
        self.budget = budget
        self.optimum_word = optimum_word

    def __call__(self, x: Bitstring) -> float:
        c = self.counter
        if c.count >= self.budget:
            raise BudgetExhausted(f"budget {self.budget} exhausted")
        c.count += 1
        fit = self.fn(x)
        if self.optimum_word is not None and x.word == self.optimum_word:
            raise OptimumFound(fit)
        return fit


class RandomSource:
    """Seeded randomness for one run.

    Two decoupled streams hang off a single 64-bit seed: a
    ``random.Random`` used by the pure-Python code paths, and a sequence of
    derived 64-bit seeds handed to compiled kernels (which embed their own
    splitmix64 generator so results do not depend on the compiler
    version).  Draws from one stream never consume state of the other, so
    mixing fast and reference code paths in one process stays
    reproducible.
    """

    __slots__ = ("seed", "py", "_kernel_state")

    def __init__(self, seed: int):
        seed &= MASK64
        self.seed = seed
        self.py = random.Random(splitmix64(seed ^ 0xC2B2AE3D27D4EB4F))
        self._kernel_state = splitmix64(seed ^ 0x165667B19E3779F9)

    @classmethod
    def for_trial(cls, master_seed: int, trial_index: int) -> "RandomSource":
        return cls(derive_seed(master_seed, trial_index))

    def next_kernel_seed(self) -> int:
        self._kernel_state = (self._kernel_state + GOLDEN64) & MASK64
        return splitmix64(self._kernel_state)

    def spawn(self, tag: int) -> "RandomSource":
        """Independent child source, e.g. one per population member."""
        return RandomSource(splitmix64(self.seed ^ splitmix64(tag)))


def random_bitstring(n: int, rng: RandomSource) -> Bitstring:
    """Uniform random bitstring of length ``n``."""
    return Bitstring(rng.py.getrandbits(n), n)
