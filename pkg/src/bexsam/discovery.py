"""Causal order and structure estimation from a frequency table.

The main loop repeatedly

1. scores every live variable by the frequency-weighted variance of its
   conditional entropy across all controls (the assignments of every other
   live variable) and takes the lowest-scoring variable as a sink,
2. tests every other live variable as a parent of that sink with one pooled
   two-proportion z-test per control, combined by Benjamini-Hochberg,
3. sums the sink out of the table.

Sinks are found bottom-up, so the emitted order is the reverse of the
elimination order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .freq import FrequencyTable, completeness, marginalize, split_target

__all__ = [
    "SinkScore",
    "ParentTest",
    "DiscoveryStep",
    "DiscoveryResult",
    "DiscoveryError",
    "ScoreError",
    "IncompleteDataError",
    "entropy",
    "sink_score",
    "sink_scores",
    "find_sink",
    "parent_pvalue",
    "parent_tests",
    "bh_select",
    "find_parent",
    "discover",
    "DEFAULT_ALPHA",
]

DEFAULT_ALPHA = 0.05

# two-sided Gaussian tails beyond this |z| are reported as exactly 0
Z_CLAMP = 8.0


class DiscoveryError(RuntimeError):
    pass


class ScoreError(DiscoveryError):
    pass


class IncompleteDataError(DiscoveryError):
    def __init__(self, missing):
        super().__init__(f"table is incomplete: {len(missing)} patterns have zero count")
        self.missing = missing


def entropy(p, base: float = 2.0):
    """Binary entropy with ``0 log 0 = 0``; works elementwise on arrays."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log(p), 0.0) + np.where(p < 1, (1 - p) * np.log1p(-p), 0.0))
    return h / np.log(base)


@dataclass(frozen=True)
class SinkScore:
    variable: object
    score: float
    controls_used: int
    weight_covered: float


def sink_score(table: FrequencyTable, target, base: float = 2.0) -> SinkScore:
    """Weighted variance of ``H(target | control)`` over the defined controls.

    Each control's weight is its frequency ``FT(control)``.  Controls that
    never occur carry no weight and are dropped.
    """
    if table.total <= 0:
        raise ScoreError("table has no mass")
    c0, c1 = split_target(table, target)
    n = c0 + c1
    defined = n > 0
    if not defined.any():
        raise ScoreError(f"no control of {target!r} has a defined conditional probability")
    n = n[defined]
    h = entropy(c1[defined] / n, base)
    w = n / n.sum()
    mean = np.dot(w, h)
    score = float(np.dot(w, (h - mean) ** 2))
    return SinkScore(
        variable=target,
        score=score,
        controls_used=int(defined.sum()),
        weight_covered=float(n.sum() / table.total),
    )


@lru_cache(maxsize=None)
def _bit_set_indices(d: int, bits: tuple) -> np.ndarray:
    """Pattern indices with every bit in ``bits`` set, ascending.

    Ascending order keeps the remaining bits in bit-packed order, matching
    :func:`bexsam.freq.split_target`.
    """
    idx = np.arange(2**d)
    mask = sum(1 << b for b in bits)
    out = idx[(idx & mask) == mask]
    out.setflags(write=False)
    return out


def sink_scores(table: FrequencyTable, base: float = 2.0) -> list:
    """Scores of all live variables; variables with no defined control are omitted."""
    if table.total <= 0:
        return []
    d = table.d
    counts = np.asarray(table.counts, dtype=float)
    ones = np.stack([_bit_set_indices(d, (b,)) for b in range(d)])
    c1 = counts[ones]
    c0 = counts[ones - (1 << np.arange(d))[:, None]]
    n = c0 + c1
    defined = n > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        h = entropy(np.where(defined, c1 / np.where(defined, n, 1), 0.0), base)
    covered = n.sum(axis=1)
    w = n / np.where(covered > 0, covered, 1)[:, None]
    mean = (w * h).sum(axis=1)
    score = (w * (h - mean[:, None]) ** 2).sum(axis=1)
    used = defined.sum(axis=1)
    return [
        SinkScore(v, float(score[b]), int(used[b]), float(covered[b] / table.total))
        for b, v in enumerate(table.live_vars)
        if used[b]
    ]


def _select(scores: list):
    best = None
    for s in scores:
        # strict comparison keeps the first variable on ties
        if best is None or s.score < best.score:
            best = s
    return best


def find_sink(table: FrequencyTable, base: float = 2.0):
    """Live variable with the smallest sink score (first in ``live_vars`` on ties)."""
    if table.d == 1:
        return table.live_vars[0]
    scores = sink_scores(table, base)
    if not scores:
        raise DiscoveryError("no live variable could be scored; the table is degenerate")
    return _select(scores).variable


def _two_proportion(c1, n1, c0, n0):
    """Pooled two-proportion z-test, vectorized.  Returns ``(dp, sigma, pval)``."""
    c1, n1, c0, n0 = (np.asarray(a, dtype=float) for a in (c1, n1, c0, n0))
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = c1 / n1 - c0 / n0
        pooled = (c1 + c0) / (n1 + n0)
        sigma = np.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n0))
        z = np.abs(dp) / sigma
        pval = np.where(z > Z_CLAMP, 0.0, erfc(z / np.sqrt(2)))
    degenerate = sigma == 0
    pval = np.where(degenerate, np.where(dp == 0, 1.0, 0.0), pval)
    return dp, sigma, np.clip(pval, 0.0, 1.0)


def parent_pvalue(table: FrequencyTable, sink, candidate, control: dict):
    """One control's test of ``p(sink=1 | candidate=1) = p(sink=1 | candidate=0)``.

    Returns ``None`` (skipped) when either arm of the comparison has no data,
    else a dict with ``delta_p``, ``sigma`` and ``p_value``.
    """
    if sink == candidate:
        raise ValueError("sink and candidate must differ")
    rest = [v for v in table.live_vars if v not in (sink, candidate)]
    if set(control) != set(rest) or any(int(b) not in (0, 1) for b in control.values()):
        raise ValueError("control must assign 0/1 to exactly the other live variables")

    def count(cand_bit, sink_bit=None):
        bits = dict(control)
        bits[candidate] = cand_bit
        if sink_bit is not None:
            bits[sink] = sink_bit
            return table.counts[table.pattern_index(bits)]
        return sum(
            table.counts[table.pattern_index({**bits, sink: s})] for s in (0, 1)
        )

    n1, n0 = count(1), count(0)
    if n1 == 0 or n0 == 0:
        return None
    dp, sigma, pval = _two_proportion(count(1, 1), n1, count(0, 1), n0)
    return {"delta_p": float(dp), "sigma": float(sigma), "p_value": float(pval)}


def bh_select(p_values, alpha: float) -> set:
    """Benjamini-Hochberg step-up rule; indices of the rejected hypotheses."""
    p = np.asarray(p_values, dtype=float)
    m = p.size
    if m == 0:
        return set()
    order = np.argsort(p, kind="stable")
    below = p[order] <= alpha * np.arange(1, m + 1) / m
    if not below.any():
        return set()
    r = int(np.flatnonzero(below)[-1]) + 1
    return {int(i) for i in order[:r]}


def _bh_rows(p: np.ndarray, alpha: float) -> np.ndarray:
    """Row-wise :func:`bh_select`; ``NaN`` entries are excluded and never rejected."""
    m = (~np.isnan(p)).sum(axis=1, keepdims=True)
    ps = np.sort(p, axis=1)  # NaN sorts last
    k = np.arange(1, p.shape[1] + 1)
    with np.errstate(invalid="ignore"):
        below = ps <= alpha * k / np.maximum(m, 1)
    r = np.where(below.any(axis=1), p.shape[1] - np.argmax(below[:, ::-1], axis=1), 0)
    cut = np.take_along_axis(ps, np.maximum(r - 1, 0)[:, None], axis=1)
    with np.errstate(invalid="ignore"):
        # ties with the r-th smallest are rejected too, as in the step-up rule
        return (r[:, None] > 0) & (p <= cut)


@dataclass
class ParentTest:
    """Per-control tests of one candidate parent.

    Arrays run over the controls of ``control_vars`` in bit-packed order
    (``control_vars[0]`` is the least significant bit).  Skipped controls have
    ``NaN`` in ``delta_p``, ``sigma`` and ``p_value``.
    """

    candidate: object
    control_vars: tuple
    delta_p: np.ndarray
    sigma: np.ndarray
    p_value: np.ndarray
    rejected: np.ndarray
    is_parent: bool
    undecidable: bool = False

    @property
    def skipped(self) -> np.ndarray:
        return np.isnan(self.p_value)

    @property
    def min_p_value(self) -> float:
        if self.undecidable:
            return float("nan")
        return float(np.nanmin(self.p_value))

    def control(self, index: int) -> dict:
        return {v: (index >> b) & 1 for b, v in enumerate(self.control_vars)}

    @property
    def bh_rejected(self) -> list:
        return [self.control(int(i)) for i in np.flatnonzero(self.rejected)]


def _parent_tests(table: FrequencyTable, sink, candidates, alpha: float) -> list:
    d = table.d
    bs = table.bit(sink)
    counts = np.asarray(table.counts)
    cand_bits = [table.bit(c) for c in candidates]
    i11 = np.stack([_bit_set_indices(d, (bc, bs)) for bc in cand_bits])
    s_bit = 1 << bs
    c_bit = (1 << np.asarray(cand_bits))[:, None]
    n11, n10 = counts[i11], counts[i11 - s_bit]
    n01, n00 = counts[i11 - c_bit], counts[i11 - c_bit - s_bit]
    n1, n0 = n11 + n10, n01 + n00
    dp, sigma, pval = _two_proportion(n11, n1, n01, n0)
    skipped = (n1 == 0) | (n0 == 0)
    dp[skipped] = np.nan
    sigma[skipped] = np.nan
    pval[skipped] = np.nan
    rejected = _bh_rows(pval, alpha)

    tests = []
    for k, c in enumerate(candidates):
        undecidable = bool(skipped[k].all())
        if undecidable:
            warnings.warn(
                f"every control skipped for candidate {c!r} of {sink!r}; treated as non-parent",
                RuntimeWarning,
                stacklevel=3,
            )
        tests.append(
            ParentTest(
                candidate=c,
                control_vars=tuple(v for v in table.live_vars if v not in (sink, c)),
                delta_p=dp[k],
                sigma=sigma[k],
                p_value=pval[k],
                rejected=rejected[k],
                is_parent=bool(rejected[k].any()),
                undecidable=undecidable,
            )
        )
    return tests


def parent_tests(table: FrequencyTable, sink, candidate, alpha: float = DEFAULT_ALPHA) -> ParentTest:
    """Test ``candidate`` against ``sink`` under every control of the remaining variables."""
    if sink == candidate:
        raise ValueError("sink and candidate must differ")
    return _parent_tests(table, sink, [candidate], alpha)[0]


def find_parent(table: FrequencyTable, sink, alpha: float = DEFAULT_ALPHA):
    """Estimated parents of ``sink`` among the live variables, plus the tests."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    table.bit(sink)
    candidates = [c for c in table.live_vars if c != sink]
    tests = _parent_tests(table, sink, candidates, alpha) if candidates else []
    return frozenset(t.candidate for t in tests if t.is_parent), tests


@dataclass
class DiscoveryStep:
    sink: object
    scores: list
    tests: list


@dataclass
class DiscoveryResult:
    """Estimated causal order (top first), parent sets and per-step diagnostics.

    ``steps`` is in elimination order, so ``steps[0]`` found the last variable
    of ``order``.
    """

    order: tuple
    parents: dict
    steps: list = field(default_factory=list)

    def adjacency(self, names=None) -> np.ndarray:
        """``B[i, j] = 1`` iff ``names[j]`` is an estimated parent of ``names[i]``."""
        names = list(names) if names is not None else list(self.order)
        pos = {v: k for k, v in enumerate(names)}
        B = np.zeros((len(names), len(names)), dtype=np.int8)
        for child, ps in self.parents.items():
            for p in ps:
                B[pos[child], pos[p]] = 1
        return B

    def edges(self) -> list:
        """``(parent, child)`` pairs in emitted order."""
        return [(p, c) for c in self.order for p in self.order if p in self.parents[c]]


def discover(
    table: FrequencyTable,
    alpha: float = DEFAULT_ALPHA,
    *,
    strict: bool = False,
    base: float = 2.0,
) -> DiscoveryResult:
    """Estimate the causal order and parent sets of all live variables.

    An incomplete table (some pattern never observed) warns, or raises
    :class:`IncompleteDataError` when ``strict`` is set.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if table.total <= 0:
        raise ValueError("cannot run discovery on an empty table")
    status = completeness(table)
    if not status.complete:
        if strict:
            raise IncompleteDataError(status.missing)
        warnings.warn(
            f"table is incomplete ({len(status.missing)} unobserved patterns)",
            RuntimeWarning,
            stacklevel=2,
        )

    eliminated = []
    parents = {}
    steps = []
    while True:
        if table.d == 1:
            sink, scores = table.live_vars[0], []
        else:
            scores = sink_scores(table, base)
            if not scores:
                raise DiscoveryError(
                    f"no variable among {table.live_vars} could be scored"
                )
            sink = _select(scores).variable
        ps, tests = find_parent(table, sink, alpha)
        parents[sink] = ps
        eliminated.append(sink)
        steps.append(DiscoveryStep(sink, scores, tests))
        if table.d == 1:
            break
        table = marginalize(table, sink)

    order = tuple(reversed(eliminated))
    return DiscoveryResult(order=order, parents=parents, steps=steps)
