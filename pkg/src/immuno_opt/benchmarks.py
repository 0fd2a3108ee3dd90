"""Pseudo-Boolean benchmark functions.

Six maximisation problems on bitstrings of length ``n``, each with a unique
global optimum known in closed form: two unimodal baselines (``OneMax``,
``LeadingOnes``), a deceptive trap, two functions with a fitness valley of
tunable width (``Jump``, ``Cliff``), and ``HiddenPath``, whose optimum sits
at the end of a narrow path of low-Hamming-neighbourhood points that is
invisible to purely elitist search.

All of them evaluate in a handful of word operations on the integer
backing the bitstring; no per-bit Python loops.
"""

from __future__ import annotations

import math

from .core import Bitstring

# Numeric tags used by the compiled kernels' fitness switch.  Keep these in
# sync with immuno_opt._kernels.
KID_ONEMAX = 0
KID_LEADINGONES = 1
KID_TRAP = 2
KID_JUMP = 3
KID_CLIFF = 4
KID_HIDDENPATH = 5


class Benchmark:
    """Base class: a callable objective plus optimum metadata."""

    name: str = "?"
    kernel_id: int | None = None

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be positive")
        self.n = n

    def __call__(self, x: Bitstring) -> float:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def optimum(self) -> Bitstring:
        raise NotImplementedError

    @property
    def max_value(self) -> float:
        raise NotImplementedError

    def is_global_optimum(self, x: Bitstring) -> bool:
        return x == self.optimum

    # Extra scalar parameters handed to the compiled fitness switch.
    def kernel_params(self) -> tuple[int, float, float]:
        return (0, 0.0, 0.0)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n})"


class OneMax(Benchmark):
    """Number of one-bits."""

    name = "onemax"
    kernel_id = KID_ONEMAX

    def __call__(self, x: Bitstring) -> float:
        return x.word.bit_count()

    @property
    def optimum(self) -> Bitstring:
        return Bitstring.ones(self.n)

    @property
    def max_value(self) -> float:
        return self.n


def _leading_ones(word: int) -> int:
    # Length of the all-ones prefix (positions 0,1,2,...).  word ^ (word+1)
    # is a mask of the trailing-ones block plus the bit above it.
    return (word ^ (word + 1)).bit_length() - 1


class LeadingOnes(Benchmark):
    """Length of the longest prefix of ones."""

    name = "leadingones"
    kernel_id = KID_LEADINGONES

    def __call__(self, x: Bitstring) -> float:
        return _leading_ones(x.word)

    @property
    def optimum(self) -> Bitstring:
        return Bitstring.ones(self.n)

    @property
    def max_value(self) -> float:
        return self.n


class Trap(Benchmark):
    """OneMax with the optimum moved to the all-zeros string.

    Hill-climbing the OneMax gradient leads to the all-ones point, whose
    entire Hamming neighbourhood is worse; only an n-bit jump reaches the
    true optimum at ``0^n`` with value ``n + 1``.
    """

    name = "trap"
    kernel_id = KID_TRAP

    def __call__(self, x: Bitstring) -> float:
        if x.word == 0:
            return self.n + 1
        return x.word.bit_count()

    @property
    def optimum(self) -> Bitstring:
        return Bitstring.zeros(self.n)

    @property
    def max_value(self) -> float:
        return self.n + 1


class Jump(Benchmark):
    """OneMax with a deceptive valley of width ``d`` before the optimum.

    Points with ``n - d < |x| < n`` ones score ``n - |x|``, so the gradient
    inside the valley points away from the all-ones optimum (value
    ``n + d``).  Crossing requires flipping exactly the remaining ``d``
    zeros in one mutation.
    """

    name = "jump"
    kernel_id = KID_JUMP

    def __init__(self, n: int, d: int):
        super().__init__(n)
        if not 1 <= d < n:
            raise ValueError("valley width d must satisfy 1 <= d < n")
        self.d = d

    def __call__(self, x: Bitstring) -> float:
        m = x.word.bit_count()
        if m <= self.n - self.d or m == self.n:
            return self.d + m
        return self.n - m

    @property
    def optimum(self) -> Bitstring:
        return Bitstring.ones(self.n)

    @property
    def max_value(self) -> float:
        return self.n + self.d

    def kernel_params(self) -> tuple[int, float, float]:
        return (self.d, 0.0, 0.0)

    def __repr__(self) -> str:
        return f"Jump(n={self.n}, d={self.d})"


class Cliff(Benchmark):
    """OneMax with a fitness drop of nearly ``d`` at ``n - d`` ones.

    Beyond the cliff the slope still points towards the all-ones optimum,
    but any point on the far side is worse than the cliff edge, so an
    elitist hill-climber that steps down is immediately pulled back.  The
    half-unit offset keeps all values distinct from the OneMax part.
    """

    name = "cliff"
    kernel_id = KID_CLIFF

    def __init__(self, n: int, d: int):
        super().__init__(n)
        if not 1 <= d < n:
            raise ValueError("cliff depth d must satisfy 1 <= d < n")
        self.d = d

    def __call__(self, x: Bitstring) -> float:
        m = x.word.bit_count()
        if m <= self.n - self.d:
            return float(m)
        return m - self.d + 0.5

    @property
    def optimum(self) -> Bitstring:
        return Bitstring.ones(self.n)

    @property
    def max_value(self) -> float:
        return self.n - self.d + 0.5

    def kernel_params(self) -> tuple[int, float, float]:
        return (self.d, 0.0, 0.0)

    def __repr__(self) -> str:
        return f"Cliff(n={self.n}, d={self.d})"


class HiddenPath(Benchmark):
    """ZeroMax-like landscape with a hidden shortcut path to the optimum.

    The bulk of the landscape rewards zeros, with a strong local optimum at
    the ``n - 1``-zeros level (value ``n``; the all-zeros point itself is a
    trap valued 0).  Hidden beneath it lies a path of points
    ``1^(n-k) 0^k`` for ``k = 5, ..., floor(log2 n) + 1``, with fitness
    rising along the path; its endpoint is the unique global optimum,
    strictly better than the ``n - 1``-zeros level.  The path is reachable
    from the 5-zeros level, whose off-path points are graded by how many of
    their zeros sit in the last five positions.

    Evaluation order matters: the first matching case below wins.
    """

    name = "hiddenpath"
    kernel_id = KID_HIDDENPATH

    def __init__(self, n: int, epsilon: float = 0.5):
        super().__init__(n)
        if n < 32:
            raise ValueError("hiddenpath requires n >= 32")
        if not 0.0 < epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        self.epsilon = epsilon
        # Path lengths k run from 5 to floor(log2 n) + 1.
        self.k_max = n.bit_length()  # == floor(log2 n) + 1 for n >= 1
        self._log2n = math.log2(n)

    def _path_word(self, k: int) -> int:
        # 1^(n-k) 0^k reading positions 0..n-1 left to right.
        return (1 << (self.n - k)) - 1

    def __call__(self, x: Bitstring) -> float:
        n = self.n
        eps = self.epsilon
        w = x.word
        z = n - w.bit_count()
        if z == 5 and w != self._path_word(5):
            # Graded 5-zeros level: count zeros among the last 5 positions.
            tail_zeros = 5 - (w >> (n - 5)).bit_count()
            return n - eps + tail_zeros / n
        if z < 5:
            return 0.0
        if z == n:
            return 0.0
        if z <= self.k_max and w == self._path_word(z):
            return n - eps + eps * z / self._log2n
        if z == n - 1:
            return float(n)
        return float(z)

    @property
    def optimum(self) -> Bitstring:
        return Bitstring(self._path_word(self.k_max), self.n)

    @property
    def max_value(self) -> float:
        n, eps = self.n, self.epsilon
        return n - eps + eps * self.k_max / self._log2n

    def kernel_params(self) -> tuple[int, float, float]:
        return (self.k_max, self.epsilon, self._log2n)

    def __repr__(self) -> str:
        return f"HiddenPath(n={self.n}, epsilon={self.epsilon})"


BENCHMARK_NAMES = ("onemax", "leadingones", "trap", "jump", "cliff", "hiddenpath")


def make_benchmark(
    name: str, n: int, d: int | None = None, epsilon: float = 0.5
) -> Benchmark:
    """Build a benchmark by name; ``d`` is required for jump and cliff."""
    key = name.strip().lower()
    if key == "onemax":
        return OneMax(n)
    if key == "leadingones":
        return LeadingOnes(n)
    if key == "trap":
        return Trap(n)
    if key == "jump":
        if d is None:
            raise ValueError("jump requires a valley width d")
        return Jump(n, d)
    if key == "cliff":
        if d is None:
            raise ValueError("cliff requires a depth d")
        return Cliff(n, d)
    if key == "hiddenpath":
        return HiddenPath(n, epsilon)
    raise ValueError(f"unknown benchmark {name!r}; choose from {BENCHMARK_NAMES}")
