"""Optimisation loops: ageing, selection, budget accounting, determinism."""

import math
import statistics

import pytest

from immuno_opt.algorithms import (
    Individual,
    OptIAConfig,
    hybrid_ageing_step,
    run_fast_opt_ia,
    run_one_plus_one_ea,
    run_one_plus_one_fast_ia,
    run_one_plus_one_ia_hyp,
    run_rls_k,
    truncation_selection,
)
from immuno_opt.benchmarks import Cliff, OneMax, Trap, make_benchmark
from immuno_opt.core import Bitstring, RandomSource
from immuno_opt.operators import MutationPotential
from immuno_opt.oracle import (
    exact_fast_ia_expected_evals,
    exact_rls_expected_evals,
)


def ind(fit, age=0, n=4, word=0):
    return Individual(Bitstring(word, n), fit, age)


class TestHybridAgeing:
    def test_under_age_always_survive(self):
        pop = [ind(1.0, age=a) for a in range(5)]
        out = hybrid_ageing_step(pop, tau=10, mu=1, rng=RandomSource(0))
        assert out == pop

    def test_over_age_survival_rate(self):
        mu, trials = 3, 20_000
        rng = RandomSource(1)
        kept = 0
        for _ in range(trials):
            kept += len(hybrid_ageing_step([ind(0.0, age=7)], tau=7, mu=mu, rng=rng))
        rate = kept / trials
        se = math.sqrt(0.25 * 0.75 / trials)
        assert abs(rate - 1 / (mu + 1)) < 5 * se

    def test_threshold_is_inclusive(self):
        # age == tau counts as over-age: over many draws some must die
        rng = RandomSource(2)
        kept = sum(
            len(hybrid_ageing_step([ind(0.0, age=5)], tau=5, mu=1, rng=rng))
            for _ in range(200)
        )
        assert kept < 200

    def test_mixed_population(self):
        rng = RandomSource(3)
        young, old = ind(1.0, age=0), ind(2.0, age=100)
        survivors = [
            hybrid_ageing_step([young, old], tau=50, mu=1, rng=rng)
            for _ in range(100)
        ]
        assert all(young in s for s in survivors)
        assert any(old not in s for s in survivors)


class TestTruncationSelection:
    def test_keeps_mu_best(self):
        pop = [ind(f) for f in (3.0, 1.0, 2.0, 5.0)]
        out = truncation_selection(pop, 2, RandomSource(0))
        assert sorted(i.fitness for i in out) == [3.0, 5.0]

    def test_small_population_unchanged(self):
        pop = [ind(1.0), ind(2.0)]
        assert truncation_selection(pop, 3, RandomSource(0)) == pop

    def test_ties_broken_randomly(self):
        rng = RandomSource(4)
        dropped = set()
        for _ in range(100):
            a, b, c = ind(1.0, word=1), ind(1.0, word=2), ind(2.0, word=3)
            out = truncation_selection([a, b, c], 2, rng)
            dropped.add(3 - sum(1 for i in out if i.fitness == 1.0) * 0)
            survivors_low = [i.genotype.word for i in out if i.fitness == 1.0]
            dropped.update({1, 2} - set(survivors_low))
        assert dropped >= {1, 2}


class TestOptIAConfig:
    def test_defaults_and_p_die(self):
        cfg = OptIAConfig()
        assert cfg.mu == 1 and cfg.dup == 1
        assert cfg.p_die == pytest.approx(0.5)
        assert OptIAConfig(mu=4).p_die == pytest.approx(0.8)

    def test_validation(self):
        with pytest.raises(ValueError):
            OptIAConfig(mu=0)
        with pytest.raises(ValueError):
            OptIAConfig(dup=0)
        with pytest.raises(ValueError):
            OptIAConfig(tau=0.5)
        with pytest.raises(ValueError):
            OptIAConfig(operator="bogus")


BUDGET = 200_000


def all_runners(n, budget, seed, force_python=False):
    """One deterministic run of every optimiser on OneMax."""
    mk = lambda: make_benchmark("onemax", n)
    rs = lambda: RandomSource(seed)
    fp = {"force_python": force_python}
    return {
        "fast-ia": run_one_plus_one_fast_ia(mk(), n, "inv_ln_n", "geq", budget, rs(), **fp),
        "ia-hyp": run_one_plus_one_ia_hyp(mk(), n, "geq", budget, rs(), **fp),
        "ea": run_one_plus_one_ea(mk(), n, budget, rs(), **fp),
        "rls": run_rls_k(mk(), n, 1, budget, rs(), **fp),
        "opt-ia": run_fast_opt_ia(
            mk(), OptIAConfig(mu=2, dup=1, tau=50.0), n, budget, rs(), **fp
        ),
    }


class TestRunLoops:
    @pytest.mark.parametrize("force_python", [False, True], ids=["kernel", "python"])
    def test_all_solve_onemax(self, force_python):
        for name, res in all_runners(20, BUDGET, 5, force_python).items():
            assert res.success, name
            assert res.best_fitness == 20.0, name
            assert 0 < res.evaluations <= BUDGET, name
            assert res.budget == BUDGET and res.seed == RandomSource(5).seed

    @pytest.mark.parametrize("force_python", [False, True], ids=["kernel", "python"])
    def test_deterministic_per_seed(self, force_python):
        a = all_runners(16, BUDGET, 9, force_python)
        b = all_runners(16, BUDGET, 9, force_python)
        assert a == b
        c = all_runners(16, BUDGET, 10, force_python)
        assert any(a[k] != c[k] for k in a)

    @pytest.mark.parametrize("force_python", [False, True], ids=["kernel", "python"])
    def test_failed_runs_spend_exactly_the_budget(self, force_python):
        # the EA cannot leave the trap's all-ones attractor in 2000 evals
        n, budget = 16, 2000
        res = run_one_plus_one_ea(
            Trap(n), n, budget, RandomSource(3), force_python=force_python
        )
        assert not res.success
        assert res.evaluations == budget
        assert res.best_fitness <= n

        # 2000 evaluations cannot climb the ~n^2 prefix ladder at n=64
        n = 64
        bench = make_benchmark("leadingones", n)
        cfg = OptIAConfig(mu=2, dup=2, tau=1e9, operator="phype_bm")
        res = run_fast_opt_ia(
            bench, cfg, n, budget, RandomSource(3), force_python=force_python
        )
        assert not res.success
        assert res.evaluations == budget

    def test_budget_one_is_just_the_init_evaluation(self):
        res = run_one_plus_one_ea(OneMax(12), 12, 1, RandomSource(0))
        assert res.evaluations == 1
        assert not res.success
        res = run_one_plus_one_fast_ia(
            OneMax(12), 12, "inv_ln_n", "geq", 1, RandomSource(0), force_python=True
        )
        assert res.evaluations == 1

    def test_tiny_gamma_zero_eval_generations_terminate(self):
        # nearly every hypermutation evaluates nothing; the run must still
        # stop at the budget rather than spin forever
        for force_python in (False, True):
            res = run_one_plus_one_fast_ia(
                OneMax(4), 4, 0.001, "geq", 3, RandomSource(1),
                force_python=force_python,
            )
            assert res.evaluations <= 3
            assert not res.success or res.best_fitness == 4.0

    def test_argument_validation(self):
        with pytest.raises(ValueError):
            run_one_plus_one_ea(OneMax(8), 9, 100, RandomSource(0))
        with pytest.raises(ValueError):
            run_one_plus_one_ea(OneMax(8), 8, 0, RandomSource(0))
        with pytest.raises(ValueError):
            run_one_plus_one_ea(OneMax(8), 8, 100, RandomSource(0), rate=1.2)
        with pytest.raises(ValueError):
            run_rls_k(OneMax(8), 8, 0, 100, RandomSource(0))
        with pytest.raises(ValueError):
            run_one_plus_one_fast_ia(OneMax(8), 8, "inv_ln_n", "??", 100,
                                     RandomSource(0))
        with pytest.raises(ValueError):
            run_fast_opt_ia(OneMax(8), OptIAConfig(mu=5), 8, 3, RandomSource(0))

    def test_static_operator_population_loop(self):
        cfg = OptIAConfig(mu=2, dup=1, tau=40.0, operator="static_fcm",
                          mode="geq", potential=MutationPotential(1.0))
        res = run_fast_opt_ia(OneMax(10), cfg, 10, 100_000, RandomSource(6))
        assert res.success

    def test_hiddenpath_smoke(self):
        bench = make_benchmark("hiddenpath", 32)
        cfg = OptIAConfig(mu=5, dup=1, tau=32 * math.log(32) ** 2,
                          gamma_preset="quarter_inv_ln_n", mode="gt")
        res = run_fast_opt_ia(bench, cfg, 32, 10**7, RandomSource(2))
        assert res.success
        assert res.best_fitness == pytest.approx(bench.max_value)


class TestMonteCarloAgainstOracle:
    """Cheap versions of the full oracle-equivalence gate: sample means of
    the evaluation counts must sit on the exact expectations."""

    def mc_mean(self, runs):
        mean = statistics.fmean(runs)
        se = statistics.stdev(runs) / math.sqrt(len(runs))
        return mean, se

    def test_rls_onemax_kernel_path(self):
        n, trials = 8, 4000
        runs = [
            run_rls_k(OneMax(n), n, 1, 10**6, RandomSource.for_trial(100, t)).evaluations
            for t in range(trials)
        ]
        mean, se = self.mc_mean(runs)
        exact = exact_rls_expected_evals("onemax", n, k=1)
        assert abs(mean - exact) < 5 * se

    def test_fast_ia_onemax_both_paths(self):
        n, gamma, trials = 6, 1.0, 1500
        exact = exact_fast_ia_expected_evals("onemax", n, gamma, "geq")
        for force_python in (False, True):
            runs = [
                run_one_plus_one_fast_ia(
                    OneMax(n), n, gamma, "geq", 10**6,
                    RandomSource.for_trial(200, t), force_python=force_python,
                ).evaluations
                for t in range(trials)
            ]
            mean, se = self.mc_mean(runs)
            assert abs(mean - exact) < 5 * se, ("python" if force_python else "kernel")

    def test_rls_single_bit_run_lengths(self):
        # n=1: start at the optimum (1 eval) or one flip away (2 evals)
        runs = [
            run_rls_k(OneMax(1), 1, 1, 100, RandomSource.for_trial(300, t)).evaluations
            for t in range(2000)
        ]
        assert set(runs) <= {1, 2}
        mean, se = self.mc_mean(runs)
        assert abs(mean - 1.5) < 5 * se


class TestAgeingEscape:
    """Expiring at the cliff edge and surviving as the age-inheriting clone
    is what lets the population loop cross a fitness valley; with an
    effectively infinite age threshold the same runs fail."""

    N, D = 64, 16
    BUDGET = 10**6

    def run_once(self, tau, seed):
        cfg = OptIAConfig(mu=1, dup=1, tau=tau, operator="phype_bm",
                          gamma_preset="inv_n_log2_sq", mode="gt")
        return run_fast_opt_ia(
            Cliff(self.N, self.D), cfg, self.N, self.BUDGET,
            RandomSource.for_trial(400, seed),
        )

    def test_ageing_crosses_the_valley(self):
        tau = 2 * self.N * math.log(self.N)
        results = [self.run_once(tau, s) for s in range(3)]
        assert all(r.success for r in results)

    def test_without_ageing_the_valley_holds(self):
        results = [self.run_once(1e15, s) for s in range(3)]
        assert not any(r.success for r in results)
        assert all(r.evaluations == self.BUDGET for r in results)


class TestLoopInvariants:
    """White-box checks on the pure-Python loops: the helpers are looked up
    as module globals, so wrapping them observes every generation of a real
    run without touching the algorithm code."""

    def test_one_plus_one_parent_fitness_never_decreases(self, monkeypatch):
        import immuno_opt.algorithms as alg

        seen = []
        real = alg.phype_fcm

        def spy(parent, parent_fitness, *args, **kwargs):
            seen.append(parent_fitness)
            return real(parent, parent_fitness, *args, **kwargs)

        monkeypatch.setattr(alg, "phype_fcm", spy)
        run_one_plus_one_fast_ia(Cliff(20, 5), 20, "inv_ln_n", "geq", 20_000,
                                 RandomSource(77), force_python=True)
        assert len(seen) > 100
        assert all(a <= b for a, b in zip(seen, seen[1:]))

    def test_population_size_is_mu_after_every_generation(self, monkeypatch):
        import immuno_opt.algorithms as alg

        sizes = []
        real = alg.truncation_selection

        def spy(pop, mu, rng):
            out = real(pop, mu, rng)
            sizes.append(len(out))
            return out

        monkeypatch.setattr(alg, "truncation_selection", spy)
        cfg = OptIAConfig(mu=3, dup=2, tau=30.0, gamma_preset="inv_ln_n")
        res = run_fast_opt_ia(OneMax(16), cfg, 16, 30_000, RandomSource(8),
                              force_python=True)
        # tau = 30 keeps deaths and refills churning the whole run
        assert len(sizes) == res.generations
        assert sizes and set(sizes) == {3}

    def test_offspring_age_is_reset_only_on_strict_improvement(self, monkeypatch):
        import immuno_opt.algorithms as alg

        resets, inherits = 0, 0

        def spy(pop, tau, mu, rng):
            nonlocal resets, inherits
            # mu = dup = 1: the merged population is [parent, clone]
            assert len(pop) == 2
            parent, clone = pop
            if clone.fitness > parent.fitness:
                assert clone.age == 0
                resets += 1
            else:
                assert clone.age == parent.age
                inherits += 1
            return hybrid_ageing_step(pop, tau, mu, rng)

        monkeypatch.setattr(alg, "hybrid_ageing_step", spy)
        cfg = OptIAConfig(mu=1, dup=1, tau=1e15, gamma_preset="inv_ln_n")
        for seed in range(4):
            run_fast_opt_ia(Cliff(16, 4), cfg, 16, 10_000, RandomSource(9 + seed),
                            force_python=True)
        assert resets > 5
        assert inherits > 100

    def test_evaluations_split_into_init_operator_and_refill_parts(self, monkeypatch):
        import immuno_opt.algorithms as alg

        operator_evals = 0
        spawn_calls = 0
        real_op = alg.phype_bm
        real_spawn = alg.random_bitstring

        def op_spy(parent, parent_fitness, f, schedule, rng, counter, **kwargs):
            nonlocal operator_evals
            before = counter.count
            try:
                return real_op(parent, parent_fitness, f, schedule, rng,
                               counter, **kwargs)
            finally:
                # measured on the shared counter so a run cut mid-mutation
                # still books the evaluations it already spent
                operator_evals += counter.count - before

        def spawn_spy(n, rng):
            nonlocal spawn_calls
            spawn_calls += 1
            return real_spawn(n, rng)

        monkeypatch.setattr(alg, "phype_bm", op_spy)
        monkeypatch.setattr(alg, "random_bitstring", spawn_spy)

        # failure run without ageing: every evaluation is init or operator
        cfg = OptIAConfig(mu=3, dup=2, tau=1e15, gamma_preset="inv_ln_n")
        res = run_fast_opt_ia(make_benchmark("leadingones", 64), cfg, 64,
                              2_000, RandomSource(10), force_python=True)
        assert not res.success
        assert spawn_calls == 3
        assert res.evaluations == 3 + operator_evals == 2_000

        # success run with a tight threshold: refills cost one each
        operator_evals, spawn_calls = 0, 0
        cfg = OptIAConfig(mu=4, dup=1, tau=12.0, gamma_preset="inv_ln_n")
        res = run_fast_opt_ia(OneMax(48), cfg, 48, 10**6, RandomSource(11),
                              force_python=True)
        assert res.success
        refills = spawn_calls - 4
        assert refills > 0
        assert res.evaluations == 4 + operator_evals + refills

    def test_successful_valley_crossings_pass_through_lower_fitness(self, monkeypatch):
        import immuno_opt.algorithms as alg

        n, d = 64, 16
        cfg = OptIAConfig(mu=1, dup=1, tau=2 * n * math.log(n),
                          operator="phype_bm", gamma_preset="inv_n_log2_sq",
                          mode="gt")
        real = alg.phype_bm
        witnessed, successes = 0, 0
        for trial in range(6):
            trajectory = []

            def spy(parent, parent_fitness, *args, **kwargs):
                trajectory.append(parent_fitness)
                return real(parent, parent_fitness, *args, **kwargs)

            monkeypatch.setattr(alg, "phype_bm", spy)
            res = run_fast_opt_ia(Cliff(n, d), cfg, n, 10**6,
                                  RandomSource.for_trial(500, trial),
                                  force_python=True)
            if res.success:
                successes += 1
                # mu = 1: the trajectory is the accepted current-best; a
                # strict drop means the run let go of the local optimum
                if any(b < a for a, b in zip(trajectory, trajectory[1:])):
                    witnessed += 1
        assert successes >= 3
        assert witnessed >= successes / 2
