"""Random model generation, sampling and benchmark runners.

Random models draw a uniformly random causal order and, for the variable at
position ``k``, include every monomial over the ``k - 1`` earlier variables
(the constant included) independently with probability ``p_coef``.  By default
``p_coef`` itself is drawn uniformly from ``[0, 1]`` once per model, and each
noise probability uniformly from ``NOISE_LEVELS``.

All runners are deterministic given ``seed``: trial ``t`` uses the ``t``-th
child of ``numpy.random.SeedSequence(seed)``, so serial and parallel runs
produce the same report.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Sequence

import numpy as np

from .discovery import DEFAULT_ALPHA, discover
from .freq import build_table, completeness
from .model import AnfFunction, BexsamModel, const, true_adjacency, var

__all__ = [
    "NOISE_LEVELS",
    "GeneratorConfig",
    "TrialResult",
    "TrialReport",
    "ConfigurationError",
    "random_model",
    "sample_dataset",
    "er_o",
    "er_s",
    "run_trials",
    "format_report",
    "benchmark_grid",
    "format_grid",
    "noise_sweep",
    "y_structure_model",
    "y_structure_experiment",
    "YStructureCounts",
]

NOISE_LEVELS = (0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9)


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of one benchmark cell.

    ``p_coef`` is a probability or ``"uniform"`` (drawn per model).
    ``noise_probs`` is ``None`` (each variable draws from ``NOISE_LEVELS``),
    a single float shared by all variables, or one float per variable.
    """

    d: int
    n: int
    p_coef: float | str = "uniform"
    noise_probs: float | Sequence[float] | None = None
    seed: int = 0
    trials: int = 100
    alpha: float = DEFAULT_ALPHA
    max_retries: int = 100
    discard_incomplete: bool = True
    allow_unskewed: bool = False

    def __post_init__(self):
        if self.d < 1:
            raise ConfigurationError("d must be at least 1")
        if self.n < 1:
            raise ConfigurationError("n must be at least 1")
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if not 0 < self.alpha < 1:
            raise ConfigurationError("alpha must lie in (0, 1)")
        if self.p_coef != "uniform" and not 0 <= float(self.p_coef) <= 1:
            raise ConfigurationError("p_coef must be 'uniform' or a probability")
        probs = self.noise_list()
        if probs is not None:
            for p in probs:
                if not 0 < p < 1 or (p == 0.5 and not self.allow_unskewed):
                    raise ConfigurationError(f"noise probability {p} is not allowed")

    def noise_list(self):
        if self.noise_probs is None:
            return None
        if isinstance(self.noise_probs, (int, float)):
            return [float(self.noise_probs)] * self.d
        probs = [float(p) for p in self.noise_probs]
        if len(probs) == 1:
            return probs * self.d
        if len(probs) != self.d:
            raise ConfigurationError(f"need 1 or {self.d} noise probabilities, got {len(probs)}")
        return probs


def random_model(config: GeneratorConfig, rng: np.random.Generator) -> BexsamModel:
    d = config.d
    order = [int(v) for v in rng.permutation(d)]
    p_coef = rng.uniform() if config.p_coef == "uniform" else float(config.p_coef)
    functions: list = [None] * d
    for k, v in enumerate(order):
        earlier = sorted(order[:k])
        monomials = [
            subset
            for size in range(k + 1)
            for subset in combinations(earlier, size)
            if rng.uniform() < p_coef
        ]
        functions[v] = AnfFunction(monomials, inputs=earlier)
    probs = config.noise_list()
    if probs is None:
        probs = [float(p) for p in rng.choice(NOISE_LEVELS, size=d)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return BexsamModel(order, functions, probs, allow_unskewed=config.allow_unskewed)


def sample_dataset(model: BexsamModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """``(n, d)`` array of independent observations."""
    if n < 1:
        raise ValueError("n must be at least 1")
    E = (rng.random((n, model.d)) < np.asarray(model.noise_probs)).astype(np.uint8)
    return model.evaluate(E)


def er_o(true_B: np.ndarray, estimated_order: Sequence[int]) -> float:
    """Share of true edges that point backwards in ``estimated_order``."""
    B = np.asarray(true_B)
    d = B.shape[0]
    order = [int(v) for v in estimated_order]
    if sorted(order) != list(range(d)):
        raise ValueError(f"{estimated_order} is not a permutation of 0..{d - 1}")
    total = np.count_nonzero(B)
    if total == 0:
        return 0.0
    P = B[np.ix_(order, order)]
    return float(np.count_nonzero(np.triu(P, 1)) / total)


def er_s(true_B: np.ndarray, estimated_B: np.ndarray) -> float:
    """Share of mismatched adjacency entries, over all ``d**2`` entries."""
    A, B = np.asarray(true_B), np.asarray(estimated_B)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return float(np.count_nonzero(A != B) / A.size)


@dataclass(frozen=True)
class TrialResult:
    trial: int
    er_o: float
    er_s: float
    ct_ms: float
    discarded: bool
    retries: int = 0


@dataclass
class TrialReport:
    config: GeneratorConfig
    trials: list = field(default_factory=list)

    def _kept(self):
        return [t for t in self.trials if not t.discarded]

    @property
    def trials_discarded(self) -> int:
        return sum(t.discarded for t in self.trials)

    def _mean(self, attr):
        kept = self._kept()
        return float(np.mean([getattr(t, attr) for t in kept])) if kept else float("nan")

    @property
    def mean_er_o(self) -> float:
        return self._mean("er_o")

    @property
    def mean_er_s(self) -> float:
        return self._mean("er_s")

    @property
    def mean_ct(self) -> float:
        return self._mean("ct_ms")


def _names(d):
    return [f"x{i + 1}" for i in range(d)]


def _run_one(args):
    config, trial, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    model = random_model(config, rng)
    names = _names(config.d)
    for retry in range(config.max_retries + 1):
        table = build_table(sample_dataset(model, config.n, rng), names)
        if completeness(table).complete or not config.discard_incomplete:
            break
    else:
        return TrialResult(trial, float("nan"), float("nan"), float("nan"), True, retry)

    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        result = discover(table, config.alpha)
    ct = (time.perf_counter() - t0) * 1e3

    pos = {name: i for i, name in enumerate(names)}
    B = true_adjacency(model)
    B_hat = result.adjacency(names)
    order = [pos[v] for v in result.order]
    return TrialResult(trial, er_o(B, order), er_s(B, B_hat), ct, False, retry)


def run_trials(config: GeneratorConfig, workers: int = 1) -> TrialReport:
    """Generate, sample, discover and score ``config.trials`` random models.

    A dataset missing any value pattern is redrawn from the same model up to
    ``config.max_retries`` times; after that the trial is discarded.
    """
    seeds = np.random.SeedSequence(config.seed).spawn(config.trials)
    jobs = [(config, t, s) for t, s in enumerate(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_one(j) for j in jobs]
    report = TrialReport(config, results)
    if report.trials_discarded == config.trials:
        raise ConfigurationError(
            f"every trial was discarded as incomplete; n={config.n} is too small for d={config.d}"
        )
    return report


def _fmt(x) -> str:
    return "nan" if x != x else f"{x:.6g}"


def format_report(report: TrialReport, timings: bool = True, delimiter: str = "\t") -> str:
    """Per-trial table followed by a summary block.

    With ``timings=False`` the output depends only on the configuration and
    seed, so it is byte-identical across reruns.
    """
    cols = ["trial", "er_o", "er_s"] + (["ct_ms"] if timings else []) + ["discarded"]
    lines = [delimiter.join(cols)]
    for t in report.trials:
        row = [str(t.trial), _fmt(t.er_o), _fmt(t.er_s)]
        if timings:
            row.append(_fmt(t.ct_ms))
        row.append(str(int(t.discarded)))
        lines.append(delimiter.join(row))
    c = report.config
    lines += [
        "",
        f"# d={c.d} n={c.n} trials={c.trials} seed={c.seed} alpha={c.alpha}",
        f"# ER_o\t{_fmt(report.mean_er_o)}",
        f"# ER_s\t{_fmt(report.mean_er_s)}",
    ]
    if timings:
        lines.append(f"# CT_ms\t{_fmt(report.mean_ct)}")
    lines.append(f"# discarded\t{report.trials_discarded}")
    return "\n".join(lines) + "\n"


@dataclass
class GridCell:
    d: int
    n: int
    report: TrialReport | None
    skipped: str | None = None


def benchmark_grid(ds, ns, base: GeneratorConfig | None = None, workers: int = 1) -> list:
    """Run every ``(d, n)`` cell; cells with ``n < 2**d`` or no complete trial are skipped."""
    base = base or GeneratorConfig(d=1, n=1)
    cells = []
    for n in ns:
        for d in ds:
            if n < 2**d:
                cells.append(GridCell(d, n, None, f"n < 2^{d}"))
                continue
            config = replace(base, d=d, n=n)
            try:
                cells.append(GridCell(d, n, run_trials(config, workers)))
            except ConfigurationError as exc:
                cells.append(GridCell(d, n, None, str(exc)))
    return cells


def format_grid(cells: list, timings: bool = True) -> str:
    """Table with one row block per ``n`` and one column per ``d``; ``-`` marks skipped cells."""
    ds = sorted({c.d for c in cells})
    ns = sorted({c.n for c in cells})
    lookup = {(c.d, c.n): c for c in cells}
    lines = ["n\\d\tmetric\t" + "\t".join(str(d) for d in ds)]
    metrics = [("ER_o", "mean_er_o"), ("ER_s", "mean_er_s")]
    if timings:
        metrics.append(("CT_ms", "mean_ct"))
    for n in ns:
        for label, attr in metrics:
            row = [str(n), label]
            for d in ds:
                cell = lookup.get((d, n))
                if cell is None or cell.report is None:
                    row.append("-")
                else:
                    row.append(_fmt(getattr(cell.report, attr)))
            lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def noise_sweep(
    p_values: Sequence[float],
    d: int = 4,
    n: int = 1000,
    trials: int = 100,
    seed: int = 0,
    alpha: float = DEFAULT_ALPHA,
    discard_incomplete: bool = False,
    workers: int = 1,
) -> list:
    """One :class:`TrialReport` per shared noise probability in ``p_values``.

    Near 0 or 1 almost every dataset misses some pattern, so by default
    incomplete datasets are analysed rather than discarded.
    """
    reports = []
    for p in p_values:
        config = GeneratorConfig(
            d=d,
            n=n,
            noise_probs=float(p),
            seed=seed,
            trials=trials,
            alpha=alpha,
            discard_incomplete=discard_incomplete,
            allow_unskewed=True,
        )
        reports.append(run_trials(config, workers))
    return reports


def y_structure_model(noise_probs, use_or: bool = False) -> BexsamModel:
    """``x3 = x1 x2 ^ e3`` (or ``(x1 OR x2) ^ e3``), ``x4 = x3 ^ e4``."""
    x1, x2, x3 = var(0), var(1), var(2)
    f3 = (x1 | x2) if use_or else (x1 & x2)
    return BexsamModel((0, 1, 2, 3), (const(0), const(0), f3, x3), noise_probs)


@dataclass
class YStructureCounts:
    """Ordered-pair confusion counts, summed over trials."""

    directed_as_directed: int = 0
    directed_as_no_edge: int = 0
    no_edge_as_directed: int = 0
    no_edge_as_no_edge: int = 0
    trials: int = 0
    discarded: int = 0

    @property
    def directed_total(self) -> int:
        return self.directed_as_directed + self.directed_as_no_edge

    @property
    def no_edge_total(self) -> int:
        return self.no_edge_as_directed + self.no_edge_as_no_edge


def y_structure_experiment(
    n: int = 10000,
    trials: int = 20,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    use_or: bool = False,
    max_retries: int = 100,
) -> YStructureCounts:
    """Tally ``B_hat`` against the Y structure over every ordered pair ``(j, i)``."""
    counts = YStructureCounts()
    names = _names(4)
    for seed_seq in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(seed_seq)
        probs = [float(p) for p in rng.choice(NOISE_LEVELS, size=4)]
        model = y_structure_model(probs, use_or)
        for _ in range(max_retries + 1):
            table = build_table(sample_dataset(model, n, rng), names)
            if completeness(table).complete:
                break
        else:
            counts.discarded += 1
            continue
        counts.trials += 1
        B = true_adjacency(model)
        B_hat = discover(table, alpha).adjacency(names)
        for i in range(4):
            for j in range(4):
                if i == j:
                    continue
                if B[i, j]:
                    if B_hat[i, j]:
                        counts.directed_as_directed += 1
                    else:
                        counts.directed_as_no_edge += 1
                elif B_hat[i, j]:
                    counts.no_edge_as_directed += 1
                else:
                    counts.no_edge_as_no_edge += 1
    return counts
