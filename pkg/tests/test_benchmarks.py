"""Benchmark functions: frozen values, optimum uniqueness, kernel parity."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from immuno_opt import _kernels
from immuno_opt.benchmarks import (
    BENCHMARK_NAMES,
    Cliff,
    HiddenPath,
    Jump,
    LeadingOnes,
    OneMax,
    Trap,
    make_benchmark,
)
from immuno_opt.core import Bitstring


def bs(text: str) -> Bitstring:
    return Bitstring.from_text(text)


class TestFrozenValues:
    def test_onemax(self):
        f = OneMax(8)
        assert f(bs("10110010")) == 4
        assert f(Bitstring.zeros(8)) == 0
        assert f(Bitstring.ones(8)) == 8

    def test_leadingones(self):
        f = LeadingOnes(8)
        assert f(bs("11101111")) == 3
        assert f(bs("01111111")) == 0
        assert f(Bitstring.ones(8)) == 8
        assert f(Bitstring.zeros(8)) == 0

    def test_trap(self):
        f = Trap(6)
        assert f(Bitstring.zeros(6)) == 7
        assert f(Bitstring.ones(6)) == 6
        assert f(bs("000001")) == 1
        assert f(bs("011111")) == 5

    def test_jump(self):
        f = Jump(8, 3)
        assert f(Bitstring.zeros(8)) == 3  # d + 0
        assert f(bs("11111000")) == 8  # d + 5, valley edge
        assert f(bs("11111100")) == 2  # n - 6, inside valley
        assert f(bs("11111110")) == 1
        assert f(Bitstring.ones(8)) == 11  # n + d

    def test_cliff(self):
        f = Cliff(8, 3)
        assert f(Bitstring.zeros(8)) == 0
        assert f(bs("11111000")) == 5  # cliff edge
        assert f(bs("11111100")) == 3.5  # 6 - 3 + 0.5
        assert f(Bitstring.ones(8)) == 5.5

    def test_hiddenpath(self):
        n = 32
        f = HiddenPath(n)
        assert f.k_max == 6
        assert f(Bitstring.zeros(n)) == 0.0  # all zeros is a trap
        assert f(Bitstring.ones(n)) == 0.0  # fewer than 5 zeros
        assert f(bs("1" * 28 + "0000")) == 0.0
        # one one anywhere: the strong local optimum level (n - 1 zeros)
        assert f(bs("1" + "0" * 31)) == 32.0
        assert f(bs("0" * 31 + "1")) == 32.0
        # bulk landscape rewards zeros
        assert f(bs("0" * 12 + "1" * 20)) == 12.0
        # path points 1^(n-k) 0^k, k = 5..6, rising to the optimum
        assert f(bs("1" * 27 + "0" * 5)) == pytest.approx(32.0)
        assert f(bs("1" * 26 + "0" * 6)) == pytest.approx(32.1)
        assert f.optimum == bs("1" * 26 + "0" * 6)
        assert f.max_value == pytest.approx(32.1)
        # graded 5-zeros level: scored by zeros among the last 5 positions
        assert f(bs("0" * 5 + "1" * 27)) == pytest.approx(31.5)
        assert f(bs("0" + "1" * 27 + "0" * 4)) == pytest.approx(31.5 + 4 / 32)

    def test_hiddenpath_path_values_strictly_increase(self):
        f = HiddenPath(64)
        vals = [f(Bitstring((1 << (64 - k)) - 1, 64)) for k in range(5, f.k_max + 1)]
        assert vals == sorted(vals)
        assert len(set(vals)) == len(vals)
        assert vals[0] == pytest.approx(64 - 0.5 + 0.5 * 5 / 6)
        assert vals[-1] == f.max_value


class TestOptimumMetadata:
    @pytest.mark.parametrize(
        "bench",
        [
            OneMax(10),
            LeadingOnes(10),
            Trap(10),
            Jump(10, 3),
            Cliff(10, 3),
            HiddenPath(32),
        ],
        ids=lambda b: b.name,
    )
    def test_optimum_attains_max_value(self, bench):
        assert bench(bench.optimum) == pytest.approx(bench.max_value)
        assert bench.is_global_optimum(bench.optimum)

    @pytest.mark.parametrize(
        "bench",
        [OneMax(10), LeadingOnes(10), Trap(10), Jump(10, 3), Cliff(10, 2)],
        ids=lambda b: b.name,
    )
    def test_optimum_unique_exhaustively(self, bench):
        # float-equality optimum detection in the compiled loops relies on
        # the maximum being attained at exactly one point
        n = bench.n
        opt = bench.optimum.word
        for w in range(1 << n):
            v = bench(Bitstring(w, n))
            if w == opt:
                assert v == bench.max_value
            else:
                assert v < bench.max_value

    def test_hiddenpath_optimum_unique_on_structured_points(self):
        n = 32
        f = HiddenPath(n)
        opt = f.optimum
        # every path point, every single-zero point, and a graded-level scan
        candidates = [Bitstring((1 << (n - k)) - 1, n) for k in range(5, f.k_max + 1)]
        candidates += [Bitstring.ones(n).with_flipped([i]) for i in range(n)]
        for i in range(n - 4):
            candidates.append(
                Bitstring.ones(n).with_flipped([i, n - 1, n - 2, n - 3, n - 4])
            )
        for x in candidates:
            if x == opt:
                assert f(x) == pytest.approx(f.max_value)
            else:
                assert f(x) < f.max_value

    @settings(max_examples=300)
    @given(st.integers(min_value=0, max_value=(1 << 32) - 1))
    def test_hiddenpath_no_point_beats_max(self, word):
        f = HiddenPath(32)
        x = Bitstring(word, 32)
        if x != f.optimum:
            assert f(x) < f.max_value


class TestLandscapeStructure:
    """Relations between the gap functions and plain bit counting."""

    def test_jump_cliff_equal_onemax_off_the_gap(self):
        # below the gap region both functions reduce to OneMax (plus the
        # constant d for jump); exhaustive at n = 10
        n, d = 10, 3
        jump, cliff, onemax = Jump(n, d), Cliff(n, d), OneMax(n)
        for word in range(1 << n):
            x = Bitstring(word, n)
            if bin(word).count("1") <= n - d:
                assert jump(x) == onemax(x) + d
                assert cliff(x) == onemax(x)

    @pytest.mark.parametrize("d", [2, 5])
    def test_cliff_strictly_increasing_on_each_branch(self, d):
        n = 12
        f = Cliff(n, d)
        levels = [f(Bitstring((1 << u) - 1, n)) for u in range(n + 1)]
        below = levels[: n - d + 1]
        above = levels[n - d + 1 :]
        assert all(a < b for a, b in zip(below, below[1:]))
        assert all(a < b for a, b in zip(above, above[1:]))
        # the drop at the cliff edge itself
        assert levels[n - d + 1] < levels[n - d]

    def test_unitation_benchmarks_ignore_bit_positions(self):
        import random

        n = 16
        fns = [OneMax(n), Trap(n), Jump(n, 3), Cliff(n, 3)]
        rng = random.Random(5151)
        for _ in range(25):
            bits = [rng.randint(0, 1) for _ in range(n)]
            base = [f(bs("".join(map(str, bits)))) for f in fns]
            shuffled = bits[:]
            rng.shuffle(shuffled)
            again = [f(bs("".join(map(str, shuffled)))) for f in fns]
            assert again == base

    def test_leadingones_depends_on_positions(self):
        f = LeadingOnes(8)
        assert f(bs("11110000")) != f(bs("00001111"))


class TestMakeBenchmark:
    def test_names_cover_all(self):
        assert set(BENCHMARK_NAMES) == {
            "onemax",
            "leadingones",
            "trap",
            "jump",
            "cliff",
            "hiddenpath",
        }
        for name in ("onemax", "leadingones", "trap"):
            assert make_benchmark(name, 12).name == name
        assert make_benchmark("jump", 12, d=2).d == 2
        assert make_benchmark("cliff", 12, d=2).d == 2
        assert make_benchmark("hiddenpath", 32).name == "hiddenpath"
        assert make_benchmark(" OneMax ", 5).name == "onemax"

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="onemax"):
            make_benchmark("nope", 8)

    def test_jump_cliff_require_d(self):
        with pytest.raises(ValueError):
            make_benchmark("jump", 8)
        with pytest.raises(ValueError):
            make_benchmark("cliff", 8)
        with pytest.raises(ValueError):
            Jump(8, 0)
        with pytest.raises(ValueError):
            Cliff(8, 8)

    def test_hiddenpath_constraints(self):
        with pytest.raises(ValueError):
            HiddenPath(31)
        with pytest.raises(ValueError):
            HiddenPath(32, epsilon=0.0)
        with pytest.raises(ValueError):
            HiddenPath(32, epsilon=1.0)

    def test_positive_length_required(self):
        with pytest.raises(ValueError):
            OneMax(0)


@pytest.mark.skipif(not _kernels.AVAILABLE, reason="numba not installed")
class TestKernelParity:
    """The compiled fitness switch must agree with the Python objects
    bit-for-bit, including the float arithmetic of the hidden-path cases."""

    @pytest.mark.parametrize(
        "bench",
        [
            OneMax(37),
            LeadingOnes(37),
            Trap(37),
            Jump(37, 5),
            Cliff(37, 5),
            HiddenPath(37),
        ],
        ids=lambda b: b.name,
    )
    def test_random_words_agree(self, bench):
        import random

        n = bench.n
        dpar, eps, aux = bench.kernel_params()
        rnd = random.Random(123)
        words = [rnd.getrandbits(n) for _ in range(300)]
        # include the structured points where the branches switch over
        words += [0, (1 << n) - 1]
        words += [(1 << (n - k)) - 1 for k in range(1, 8)]
        for w in words:
            x = Bitstring(w, n)
            packed = _kernels.pack_word(w, n)
            got = _kernels._fitness(bench.kernel_id, packed, n, dpar, eps, aux)
            assert got == bench(x), f"word {w:b}"

    def test_multiword_leadingones(self):
        n = 150
        bench = LeadingOnes(n)
        for ones in (0, 1, 63, 64, 65, 128, 149, 150):
            w = (1 << ones) - 1
            packed = _kernels.pack_word(w, n)
            assert _kernels._fitness(1, packed, n, 0, 0.0, 0.0) == bench(
                Bitstring(w, n)
            )

    def test_pack_unpack_round_trip(self):
        for n in (1, 63, 64, 65, 200):
            w = (1 << n) - 1 if n < 3 else (0x5A5A5A5A5A5A5A5A % (1 << n))
            assert _kernels.unpack_word(_kernels.pack_word(w, n)) == w
