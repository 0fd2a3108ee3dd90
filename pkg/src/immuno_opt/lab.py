"""Experiment harness: seed-controlled trial batches, sweeps over n and
gamma, scaling-law fits, paired baseline comparisons, CSV/JSON export and
the command line interface.

A :class:`ExperimentConfig` plus its master seed fully determines every
result.  Per-trial seeds depend only on (master seed, trial index), so the
same trial index is paired across sweep points and across configs, which
is what makes `compare` a paired design.
"""

from __future__ import annotations

import argparse
import ast
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Sequence

from .benchmarks import BENCHMARK_NAMES, make_benchmark
from .core import RandomSource
from .operators import GAMMA_PRESETS, resolve_gamma
from .algorithms import (
    OptIAConfig,
    run_fast_opt_ia,
    run_one_plus_one_ea,
    run_one_plus_one_fast_ia,
    run_one_plus_one_ia_hyp,
    run_rls_k,
)

ALGORITHMS = ("fast-ia", "opt-ia", "ia-hyp", "ea", "rls")

# algorithms for which a gamma value is meaningful
_GAMMA_ALGOS = frozenset({"fast-ia", "opt-ia"})
_MODE_ALGOS = frozenset({"fast-ia", "opt-ia", "ia-hyp"})

CSV_COLUMNS = (
    "trial", "algo", "operator", "benchmark", "n", "d", "gamma", "mu",
    "dup", "tau", "mode", "seed", "budget", "evaluations", "generations",
    "success", "best_fitness",
)


# --- formulas of n ----------------------------------------------------------

_ALLOWED_CALLS = {
    "ln": math.log,
    "log": math.log,
    "log2": lambda v: math.log2(v),
    "sqrt": math.sqrt,
    "exp": math.exp,
}
_ALLOWED_NAMES = {"e": math.e, "pi": math.pi}


def eval_formula(expr: str | float | int, n: int) -> float:
    """Evaluate a budget/threshold formula at a given n.

    Accepts plain numbers, or expressions in ``n`` built from + - * / ^
    (also **), parentheses, the functions ln/log/log2/sqrt/exp and the
    constants e and pi.  Examples: ``"50*n*ln(n)"``, ``"n*ln(n)^2"``,
    ``"1e6"``.
    """
    if isinstance(expr, (int, float)):
        return float(expr)
    text = expr.replace("^", "**")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse formula {expr!r}: {exc.msg}") from None

    def ev(node: ast.AST) -> float:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id == "n":
                return float(n)
            if node.id in _ALLOWED_NAMES:
                return _ALLOWED_NAMES[node.id]
            raise ValueError(f"unknown name {node.id!r} in formula {expr!r}")
        if isinstance(node, ast.BinOp):
            ops = {
                ast.Add: lambda a, b: a + b,
                ast.Sub: lambda a, b: a - b,
                ast.Mult: lambda a, b: a * b,
                ast.Div: lambda a, b: a / b,
                ast.Pow: lambda a, b: a ** b,
            }
            fn = ops.get(type(node.op))
            if fn is None:
                raise ValueError(f"operator not allowed in formula {expr!r}")
            return fn(ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
            fn = _ALLOWED_CALLS.get(node.func.id)
            if fn is None or node.keywords or len(node.args) != 1:
                raise ValueError(
                    f"only {sorted(_ALLOWED_CALLS)} calls are allowed in formulas"
                )
            return fn(ev(node.args[0]))
        raise ValueError(f"unsupported syntax in formula {expr!r}")

    return ev(tree)


def eval_budget(expr: str | float | int, n: int) -> int:
    value = eval_formula(expr, n)
    budget = int(round(value))
    if budget < 1:
        raise ValueError(f"budget formula {expr!r} gives {value} at n={n}")
    return budget


# --- configuration ----------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a batch of trials.

    ``budget`` and ``tau`` may be formulas of n (see :func:`eval_formula`).
    ``gammas`` is empty for algorithms that take no gamma.
    """

    algo: str
    benchmark: str
    ns: tuple[int, ...]
    gammas: tuple[str | float, ...] = ()
    d: Optional[int] = None
    mode: str = "geq"
    mu: int = 1
    dup: int = 1
    tau: str | float = "2*n*ln(n)"
    operator: str = "phype_bm"
    k: int = 1
    rate: Optional[float] = None
    trials: int = 100
    budget: str | float = "1e9"
    seed: int = 0
    out: Optional[str] = None

    def __post_init__(self):
        # normalise spellings so equality and the hash depend on the
        # configuration, not on whether "1e5" arrived as text or a number
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "gammas", tuple(
            _parse_gamma_token(g) if isinstance(g, str) else float(g)
            for g in self.gammas
        ))
        for key in ("budget", "tau"):
            v = getattr(self, key)
            object.__setattr__(
                self, key, _number_or_text(v) if isinstance(v, str) else float(v)
            )

    def validate(self) -> None:
        """Reject bad combinations with a diagnostic before any run starts."""
        if self.algo not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.algo!r}; choose from {ALGORITHMS}"
            )
        if self.benchmark not in BENCHMARK_NAMES:
            raise ValueError(
                f"unknown benchmark {self.benchmark!r}; choose from {BENCHMARK_NAMES}"
            )
        if not self.ns:
            raise ValueError("at least one n is required")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        needs_gamma = self.algo in _GAMMA_ALGOS
        if needs_gamma and not self.gammas:
            raise ValueError(
                f"algorithm {self.algo!r} requires gamma "
                f"(a number, const(c), or one of {sorted(GAMMA_PRESETS)})"
            )
        if not needs_gamma and self.gammas:
            raise ValueError(f"gamma is not a parameter of algorithm {self.algo!r}")
        for n in self.ns:
            make_benchmark(self.benchmark, n, d=self.d)  # raises on bad n/d
            eval_budget(self.budget, n)
            for g in self.gammas:
                resolve_gamma(g, n)
            if self.algo == "opt-ia":
                tau = eval_formula(self.tau, n)
                OptIAConfig(
                    mu=self.mu, dup=self.dup, tau=tau,
                    operator=self.operator, gamma_preset=self.gammas[0],
                    mode=self.mode,
                )
            if self.algo == "rls" and not 1 <= self.k <= n:
                raise ValueError(f"k={self.k} out of range for n={n}")
            if self.algo == "ea" and self.rate is not None and not 0 < self.rate <= 1:
                raise ValueError(f"mutation rate {self.rate} not in (0, 1]")

    # Flat `key = value` text files; lists are comma separated.
    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        values: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, value = line.split("=", 1)
                values[key.strip()] = value.strip()
        return cls.from_mapping(values, source=path)

    @classmethod
    def from_mapping(cls, values: dict[str, str], source: str = "<config>"):
        known = {f.name for f in fields(cls)} | {"gamma", "n"}
        for key in values:
            if key not in known:
                raise ValueError(
                    f"{source}: unknown key {key!r}; valid keys: {sorted(known)}"
                )
        kw: dict = {}
        if "algo" in values:
            kw["algo"] = values["algo"]
        if "benchmark" in values:
            kw["benchmark"] = values["benchmark"]
        ns_text = values.get("n", values.get("ns"))
        if ns_text is not None:
            kw["ns"] = tuple(int(part) for part in str(ns_text).split(",") if part.strip())
        g_text = values.get("gamma", values.get("gammas"))
        if g_text:
            kw["gammas"] = tuple(
                _parse_gamma_token(tok.strip()) for tok in str(g_text).split(",") if tok.strip()
            )
        for key in ("d", "mu", "dup", "k", "trials", "seed"):
            if key in values and values[key] != "":
                kw[key] = int(values[key])
        for key in ("mode", "operator", "out"):
            if key in values and values[key] != "":
                kw[key] = values[key]
        if "rate" in values and values["rate"] != "":
            kw["rate"] = float(values["rate"])
        for key in ("tau", "budget"):
            if key in values and values[key] != "":
                kw[key] = _number_or_text(values[key])
        missing = {"algo", "benchmark", "ns"} - set(kw)
        if missing:
            raise ValueError(f"{source}: missing required keys {sorted(missing)}")
        return cls(**kw)

    def to_file(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.canonical_text())

    def canonical_text(self) -> str:
        lines = [
            f"algo = {self.algo}",
            f"benchmark = {self.benchmark}",
            "n = " + ",".join(str(n) for n in self.ns),
        ]
        if self.gammas:
            lines.append("gamma = " + ",".join(_format_gamma_token(g) for g in self.gammas))
        if self.d is not None:
            lines.append(f"d = {self.d}")
        if self.algo in _MODE_ALGOS:
            lines.append(f"mode = {self.mode}")
        if self.algo == "opt-ia":
            lines.append(f"mu = {self.mu}")
            lines.append(f"dup = {self.dup}")
            lines.append(f"tau = {self.tau}")
            lines.append(f"operator = {self.operator}")
        if self.algo == "rls":
            lines.append(f"k = {self.k}")
        if self.algo == "ea" and self.rate is not None:
            lines.append(f"rate = {self.rate!r}")
        lines.append(f"trials = {self.trials}")
        lines.append(f"budget = {self.budget}")
        lines.append(f"seed = {self.seed}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def _parse_gamma_token(token: str) -> str | float:
    try:
        return float(token)
    except ValueError:
        return token


def _format_gamma_token(g: str | float) -> str:
    return format(g, ".17g") if isinstance(g, float) else str(g)


def _number_or_text(text: str) -> str | float:
    try:
        return float(text)
    except ValueError:
        return text


# --- trial records ----------------------------------------------------------

@dataclass(frozen=True)
class RunRecord:
    """One trial; mirrors the CSV row format exactly."""

    trial: int
    algo: str
    operator: str
    benchmark: str
    n: int
    d: Optional[int]
    gamma: Optional[float]
    mu: Optional[int]
    dup: Optional[int]
    tau: Optional[float]
    mode: Optional[str]
    seed: int
    budget: int
    evaluations: int
    generations: int
    success: bool
    best_fitness: float


@dataclass
class TrialTable:
    """Rows sorted by (n, gamma, trial) no matter the execution order."""

    rows: list[RunRecord] = field(default_factory=list)
    config_hash: str = ""

    def __len__(self) -> int:
        return len(self.rows)

    def sort(self) -> None:
        self.rows.sort(key=lambda r: (r.n, r.gamma if r.gamma is not None else -1.0, r.trial))

    def points(self) -> list[tuple[int, Optional[float]]]:
        seen: dict[tuple[int, Optional[float]], None] = {}
        for r in self.rows:
            seen.setdefault((r.n, r.gamma), None)
        return list(seen)


def _worker_count() -> int:
    override = os.environ.get("IMMUNO_OPT_THREADS", "").strip()
    if override:
        count = int(override)
        if count < 1:
            raise ValueError("IMMUNO_OPT_THREADS must be >= 1")
        return count
    return os.cpu_count() or 1


def _run_single(config: ExperimentConfig, n: int, gamma: Optional[str | float],
                trial: int) -> RunRecord:
    benchmark = make_benchmark(config.benchmark, n, d=config.d)
    budget = eval_budget(config.budget, n)
    rng = RandomSource.for_trial(config.seed, trial)
    algo = config.algo
    resolved = resolve_gamma(gamma, n) if gamma is not None else None
    mu = dup = None
    tau = None
    mode: Optional[str] = config.mode if algo in _MODE_ALGOS else None
    if algo == "fast-ia":
        operator = "phype_fcm"
        result = run_one_plus_one_fast_ia(benchmark, n, resolved, config.mode, budget, rng)
    elif algo == "ia-hyp":
        operator = "static_fcm"
        result = run_one_plus_one_ia_hyp(benchmark, n, config.mode, budget, rng)
    elif algo == "ea":
        operator = "sbm"
        result = run_one_plus_one_ea(benchmark, n, budget, rng, rate=config.rate)
    elif algo == "rls":
        operator = f"rls_{config.k}"
        result = run_rls_k(benchmark, n, config.k, budget, rng)
    elif algo == "opt-ia":
        operator = config.operator
        mu, dup = config.mu, config.dup
        tau = eval_formula(config.tau, n)
        cfg = OptIAConfig(
            mu=config.mu, dup=config.dup, tau=tau, operator=config.operator,
            gamma_preset=resolved, mode=config.mode,
        )
        result = run_fast_opt_ia(benchmark, cfg, n, budget, rng)
    else:  # pragma: no cover - validate() rejects earlier
        raise ValueError(f"unknown algorithm {algo!r}")
    return RunRecord(
        trial=trial, algo=algo, operator=operator, benchmark=config.benchmark,
        n=n, d=config.d, gamma=resolved, mu=mu, dup=dup, tau=tau, mode=mode,
        seed=result.seed, budget=result.budget, evaluations=result.evaluations,
        generations=result.generations, success=result.success,
        best_fitness=result.best_fitness,
    )


def run_trials(config: ExperimentConfig) -> TrialTable:
    """Execute the full (n, gamma, trial) grid of a config.

    Deterministic for a fixed master seed and identical whether trials run
    serially or on the thread pool: every trial owns its whole state and
    rows are merged by sort order, not completion order.
    """
    config.validate()
    gammas: Sequence[Optional[str | float]] = config.gammas or (None,)
    tasks = [
        (n, g, t)
        for n in config.ns
        for g in gammas
        for t in range(config.trials)
    ]
    workers = _worker_count()
    table = TrialTable(config_hash=config.config_hash())
    if workers == 1 or len(tasks) == 1:
        table.rows = [_run_single(config, n, g, t) for n, g, t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            table.rows = list(
                pool.map(lambda args: _run_single(config, *args), tasks)
            )
    table.sort()
    return table


# --- CSV / JSON export ------------------------------------------------------

def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def export_table_csv(table: TrialTable, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_csv(table, fh)


def _write_csv(table: TrialTable, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in table.rows:
        writer.writerow([_format_cell(getattr(r, col)) for col in CSV_COLUMNS])


def export_table_json(table: TrialTable, path: str) -> None:
    payload = {
        "config_hash": table.config_hash,
        "columns": list(CSV_COLUMNS),
        "rows": [
            {col: getattr(r, col) for col in CSV_COLUMNS} for r in table.rows
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


_CSV_PARSERS = {
    "trial": int, "n": int, "seed": int, "budget": int,
    "evaluations": int, "generations": int,
    "gamma": float, "tau": float, "best_fitness": float,
    "d": int, "mu": int, "dup": int,
}


def import_table(path: str) -> TrialTable:
    """Inverse of CSV export: exact round trip of all typed fields."""
    table = TrialTable()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(CSV_COLUMNS):
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            cells = dict(zip(CSV_COLUMNS, row))
            kw = {}
            for col, text in cells.items():
                if text == "" and col not in ("algo", "operator", "benchmark", "mode"):
                    kw[col] = None
                elif col == "success":
                    kw[col] = text == "true"
                elif col in _CSV_PARSERS:
                    kw[col] = _CSV_PARSERS[col](text)
                else:
                    kw[col] = text if text != "" else None
            table.rows.append(RunRecord(**kw))
    return table


def export(obj, path: str, fmt: str = "csv") -> None:
    """Write a TrialTable or ScalingFit as csv or json."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    if isinstance(obj, TrialTable):
        (export_table_csv if fmt == "csv" else export_table_json)(obj, path)
        return
    if isinstance(obj, ScalingFit):
        if fmt == "csv":
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["n", "median_evaluations", "success_rate", "trials"])
                for p in obj.points:
                    writer.writerow([
                        p.n, _format_cell(p.median), _format_cell(p.success_rate),
                        p.trials,
                    ])
        else:
            payload = {
                "model": obj.model, "log_power": obj.log_power,
                "exponent": obj.exponent, "constant": obj.constant,
                "residual_norm": obj.residual_norm,
                "points": [
                    {"n": p.n, "median_evaluations": p.median,
                     "success_rate": p.success_rate, "trials": p.trials}
                    for p in obj.points
                ],
            }
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                json.dump(payload, fh, indent=1)
                fh.write("\n")
        return
    raise TypeError(f"cannot export object of type {type(obj).__name__}")


# --- scaling fits -----------------------------------------------------------

FIT_MODELS = {"poly": 0, "nlogn": 1, "nlog2n": 2}


@dataclass(frozen=True)
class FitPoint:
    n: int
    median: float
    success_rate: float
    trials: int


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares fit of median evaluations to c * n^a * (ln n)^b.

    The log power b is fixed by the chosen model; a and c are fitted on
    (ln n, ln median - b ln ln n).  Medians are taken over successful
    trials only, and any point with success rate below 90% aborts the fit
    (censored medians would bias the slope).
    """

    model: str
    log_power: int
    exponent: float
    constant: float
    residual_norm: float
    points: tuple[FitPoint, ...]

    def predict(self, n: int) -> float:
        return self.constant * n ** self.exponent * math.log(n) ** self.log_power


def fit_scaling(table: TrialTable, model: str) -> ScalingFit:
    if model not in FIT_MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {sorted(FIT_MODELS)}")
    b = FIT_MODELS[model]
    groups: dict[int, list[RunRecord]] = {}
    for r in table.rows:
        groups.setdefault(r.n, []).append(r)
    if len(groups) < 2:
        raise ValueError("need at least two distinct n values to fit a scaling law")
    points = []
    for n in sorted(groups):
        rows = groups[n]
        successes = [r for r in rows if r.success]
        rate = len(successes) / len(rows)
        if rate < 0.9:
            raise ValueError(
                f"refusing to fit: success rate {rate:.2f} < 0.90 at n={n} "
                f"({len(successes)}/{len(rows)} trials); raise the budget"
            )
        med = _median(sorted(r.evaluations for r in successes))
        points.append(FitPoint(n=n, median=med, success_rate=rate, trials=len(rows)))
    xs = [math.log(p.n) for p in points]
    ys = [math.log(p.median) - b * math.log(math.log(p.n)) for p in points]
    slope, intercept = _least_squares_line(xs, ys)
    resid = math.sqrt(
        sum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys))
    )
    return ScalingFit(
        model=model, log_power=b, exponent=slope,
        constant=math.exp(intercept), residual_norm=resid,
        points=tuple(points),
    )


def _median(sorted_values: Sequence[float]) -> float:
    m = len(sorted_values)
    if m == 0:
        raise ValueError("median of empty sequence")
    mid = m // 2
    if m % 2:
        return float(sorted_values[mid])
    return (sorted_values[mid - 1] + sorted_values[mid]) / 2.0


def _least_squares_line(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    m = len(xs)
    mean_x = sum(xs) / m
    mean_y = sum(ys) / m
    sxx = sum((x - mean_x) ** 2 for x in xs)
    if sxx == 0.0:
        raise ValueError("all n values coincide; cannot fit a slope")
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return slope, mean_y - slope * mean_x


def plot_fit(fit: ScalingFit, path: str) -> None:
    """Log-log scatter of the medians plus the fitted line (static file)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = [p.n for p in fit.points]
    meds = [p.median for p in fit.points]
    grid = [min(ns) * (max(ns) / min(ns)) ** (i / 63) for i in range(64)]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(ns, meds, "o", label="median evaluations")
    ax.loglog(grid, [fit.predict(int(round(g))) for g in grid], "-",
              label=f"{fit.constant:.3g} n^{fit.exponent:.3f} (ln n)^{fit.log_power}")
    ax.set_xlabel("n")
    ax.set_ylabel("evaluations")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


# --- paired comparison ------------------------------------------------------

@dataclass(frozen=True)
class ComparePoint:
    n: int
    trials: int
    median_ratio: float
    baseline_success: float
    candidate_success: float


@dataclass(frozen=True)
class CompareResult:
    points: tuple[ComparePoint, ...]


def compare(baseline: ExperimentConfig, candidate: ExperimentConfig) -> CompareResult:
    """Paired-seed speedup: median over trials of baseline/candidate evals.

    Both configs run with the baseline's master seed so trial i uses the
    same seed on both sides.  Each config must contribute exactly one row
    per (n, trial) pair, hence at most one gamma value.
    """
    if len(baseline.gammas) > 1 or len(candidate.gammas) > 1:
        raise ValueError("compare requires at most one gamma per config")
    candidate = replace(candidate, seed=baseline.seed, trials=baseline.trials)
    if tuple(baseline.ns) != tuple(candidate.ns):
        raise ValueError("compare requires identical n lists")
    table_a = run_trials(baseline)
    table_b = run_trials(candidate)
    by_key_a = {(r.n, r.trial): r for r in table_a.rows}
    by_key_b = {(r.n, r.trial): r for r in table_b.rows}
    points = []
    for n in baseline.ns:
        ratios, succ_a, succ_b = [], 0, 0
        for t in range(baseline.trials):
            ra, rb = by_key_a[(n, t)], by_key_b[(n, t)]
            ratios.append(ra.evaluations / rb.evaluations)
            succ_a += ra.success
            succ_b += rb.success
        points.append(ComparePoint(
            n=n, trials=baseline.trials,
            median_ratio=_median(sorted(ratios)),
            baseline_success=succ_a / baseline.trials,
            candidate_success=succ_b / baseline.trials,
        ))
    return CompareResult(points=tuple(points))


# --- CLI --------------------------------------------------------------------

def _add_experiment_flags(sub: argparse.ArgumentParser, sweep: bool) -> None:
    sub.add_argument("--config", help="key = value config file; flags override it")
    sub.add_argument("--algo", choices=ALGORITHMS)
    sub.add_argument("--benchmark")
    if sweep:
        sub.add_argument("--n", dest="ns", help="comma separated sizes, e.g. 64,128,256")
        sub.add_argument("--gamma", dest="gammas",
                         help="comma separated presets/values, e.g. inv_ln_n,const(0.5)")
    else:
        sub.add_argument("--n", dest="ns", help="problem size")
        sub.add_argument("--gamma", dest="gammas", help="gamma preset or value")
    sub.add_argument("--d", type=int, help="jump/cliff distance parameter")
    sub.add_argument("--mode", choices=("geq", "gt"))
    sub.add_argument("--mu", type=int)
    sub.add_argument("--dup", type=int)
    sub.add_argument("--tau", help="age threshold, number or formula of n")
    sub.add_argument("--operator", choices=("phype_fcm", "phype_bm", "static_fcm"))
    sub.add_argument("--k", type=int, help="bits flipped per step (rls)")
    sub.add_argument("--rate", type=float, help="bit flip rate (ea); default 1/n")
    sub.add_argument("--trials", type=int)
    sub.add_argument("--budget", help="evaluation budget, number or formula of n")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out", help="output CSV path (stdout when omitted)")
    sub.add_argument("--json", action="store_true", help="emit JSON instead of CSV")


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig.from_file(args.config) if args.config else None
    overrides: dict[str, str] = {}
    for key in ("algo", "benchmark", "ns", "gammas", "d", "mode", "mu", "dup",
                "tau", "operator", "k", "rate", "trials", "budget", "seed", "out"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[{"ns": "n", "gammas": "gamma"}.get(key, key)] = str(value)
    if base is None:
        return ExperimentConfig.from_mapping(overrides, source="<command line>")
    merged = {}
    for line in base.canonical_text().splitlines():
        key, value = line.split(" = ", 1)
        merged[key] = value
    if base.out:
        merged["out"] = base.out
    merged.update(overrides)
    return ExperimentConfig.from_mapping(merged, source="<command line>")


def _emit_table(table: TrialTable, out: Optional[str], as_json: bool) -> None:
    if out:
        export(table, out, "json" if as_json else "csv")
    elif as_json:
        json.dump({"config_hash": table.config_hash,
                   "rows": [{c: getattr(r, c) for c in CSV_COLUMNS} for r in table.rows]},
                  sys.stdout, indent=1)
        sys.stdout.write("\n")
    else:
        _write_csv(table, sys.stdout)


def _cmd_run(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    table = run_trials(config)
    _emit_table(table, config.out, args.json)
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    table = import_table(args.infile)
    fit = fit_scaling(table, args.model)
    for p in fit.points:
        print(f"point n={p.n} median={p.median:g} success={p.success_rate:.3f} "
              f"trials={p.trials}")
    print(f"model={fit.model} exponent={fit.exponent:.6f} "
          f"constant={fit.constant:.6g} residual={fit.residual_norm:.6g}")
    if args.out:
        export(fit, args.out, "json" if args.json else "csv")
    if args.plot:
        plot_fit(fit, args.plot)
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    from .oracle import (
        exact_fast_ia_expected_evals,
        exact_rls_expected_evals,
        exact_schedule_sum,
    )

    gamma = resolve_gamma(_parse_gamma_token(args.gamma), args.n) if args.gamma else None
    if args.schedule_sum:
        if gamma is None:
            raise ValueError("--schedule-sum needs --gamma")
        print(f"schedule_sum = {format(exact_schedule_sum(args.n, gamma), '.17g')}")
        return 0
    benchmark = make_benchmark(args.benchmark, args.n, d=args.d)
    if args.rls:
        value = exact_rls_expected_evals(benchmark, args.n, k=args.rls, d=args.d)
        print(f"expected_evaluations = {format(value, '.17g')}")
        return 0
    if gamma is None:
        raise ValueError("--gamma is required (number, const(c) or preset name)")
    value = exact_fast_ia_expected_evals(
        benchmark, args.n, gamma, mode=args.mode, d=args.d
    )
    print(f"expected_evaluations = {format(value, '.17g')}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    baseline = ExperimentConfig.from_file(args.baseline)
    candidate = ExperimentConfig.from_file(args.candidate)
    if args.seed is not None:
        baseline = replace(baseline, seed=args.seed)
    if args.trials is not None:
        baseline = replace(baseline, trials=args.trials)
    result = compare(baseline, candidate)
    lines = ["n,trials,median_ratio,baseline_success,candidate_success"]
    for p in result.points:
        lines.append(
            f"{p.n},{p.trials},{_format_cell(p.median_ratio)},"
            f"{_format_cell(p.baseline_success)},{_format_cell(p.candidate_success)}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="immuno-opt",
        description="Immune-inspired optimisers with stochastic fitness "
                    "evaluation schedules: run experiments, fit scaling laws, "
                    "query exact small-instance values.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one experiment: single n, single gamma")
    _add_experiment_flags(p_run, sweep=False)
    p_run.set_defaults(handler=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid over n list and gamma list")
    _add_experiment_flags(p_sweep, sweep=True)
    p_sweep.set_defaults(handler=_cmd_run)

    p_fit = sub.add_parser("fit", help="fit c*n^a*(ln n)^b to a results CSV")
    p_fit.add_argument("--in", dest="infile", required=True, help="CSV from run/sweep")
    p_fit.add_argument("--model", choices=sorted(FIT_MODELS), required=True)
    p_fit.add_argument("--out", help="write fit points (csv) or full fit (json)")
    p_fit.add_argument("--json", action="store_true")
    p_fit.add_argument("--plot", help="write a log-log plot (svg/png by extension)")
    p_fit.set_defaults(handler=_cmd_fit)

    p_oracle = sub.add_parser("oracle", help="exact expected evaluations, small n")
    p_oracle.add_argument("--benchmark", default="onemax")
    p_oracle.add_argument("--n", type=int, required=True)
    p_oracle.add_argument("--d", type=int)
    p_oracle.add_argument("--gamma")
    p_oracle.add_argument("--mode", choices=("geq", "gt"), default="geq")
    p_oracle.add_argument("--rls", type=int, metavar="K",
                          help="report the k-flip local search chain instead")
    p_oracle.add_argument("--schedule-sum", action="store_true",
                          help="expected evaluations of one mutation only")
    p_oracle.set_defaults(handler=_cmd_oracle)

    p_cmp = sub.add_parser("compare", help="paired-seed evaluation-count ratios")
    p_cmp.add_argument("--baseline", required=True, help="config file (numerator)")
    p_cmp.add_argument("--candidate", required=True, help="config file (denominator)")
    p_cmp.add_argument("--seed", type=int, help="master seed for both sides")
    p_cmp.add_argument("--trials", type=int)
    p_cmp.add_argument("--out")
    p_cmp.set_defaults(handler=_cmd_compare)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
