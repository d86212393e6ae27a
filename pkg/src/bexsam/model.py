"""Binary exclusive-or skew acyclic models.

A model is a causal order over ``d`` binary variables, one Boolean function per
variable (stored in algebraic normal form) depending only on variables earlier
in the order, and one Bernoulli noise probability per variable::

    x[order[k]] = f[order[k]](x[order[0]], ..., x[order[k-1]]) XOR e[order[k]]

Variables are referred to by 0-based integer index throughout the Python API.
The text model file uses 1-based ids.

The module also contains an exact-probability oracle built by enumerating all
``2**d`` value patterns.  Patterns are bit-packed with bit ``b`` holding the
value of variable ``b`` (variable 0 is the least significant bit), the same
convention used by :mod:`bexsam.freq`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .freq import FrequencyTable

__all__ = [
    "AnfFunction",
    "BexsamModel",
    "JointDistribution",
    "SkewReport",
    "var",
    "const",
    "eval_anf",
    "structural_sample",
    "true_adjacency",
    "exact_joint",
    "exact_conditional",
    "function_marginal",
    "skewness_check",
    "noise_marginals",
    "example_model",
    "format_model",
    "parse_model",
    "load_model",
    "save_model",
    "ModelFormatError",
    "CapacityError",
    "UndefinedConditionalError",
    "MAX_ORACLE_VARS",
]

#: Enumeration guard for the exact oracle (2**20 cells).
MAX_ORACLE_VARS = 20

#: Noise probabilities closer than this to 1/2 trigger a warning.
SKEW_WARN_EPS = 0.02


class ModelFormatError(ValueError):
    """Raised for malformed model files; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CapacityError(ValueError):
    pass


class UndefinedConditionalError(ZeroDivisionError):
    pass


def _monomial(vars_: Iterable[int]) -> frozenset:
    return frozenset(int(v) for v in vars_)


@dataclass(frozen=True, eq=False)
class AnfFunction:
    """Boolean function as a XOR of AND-monomials.

    Parameters
    ----------
    monomials : iterable of iterables of int
        Each monomial is a set of variable indices; the empty monomial is the
        constant 1.  Duplicates cancel in pairs (XOR), so passing the same
        monomial twice removes it.
    inputs : iterable of int, optional
        Declared input variables.  Defaults to the variables that appear in
        the monomials.  Every monomial variable must be declared.

    Functions compose with ``&`` (AND), ``|`` (OR), ``^`` (XOR) and ``~``
    (NOT); results are renormalized to ANF, e.g. ``var(0) | var(2)`` becomes
    ``x1 ^ x3 ^ x1 x3``.
    """

    monomials: frozenset
    inputs: frozenset

    def __init__(self, monomials=(), inputs=None):
        terms: set = set()
        for m in monomials:
            terms ^= {_monomial(m)}
        used = frozenset().union(*terms) if terms else frozenset()
        declared = used if inputs is None else frozenset(int(v) for v in inputs)
        if not used <= declared:
            raise ValueError(
                f"monomial variables {sorted(used - declared)} are not declared inputs"
            )
        object.__setattr__(self, "monomials", frozenset(terms))
        object.__setattr__(self, "inputs", declared)

    @property
    def variables(self) -> frozenset:
        """Variables the function actually depends on."""
        return frozenset().union(*self.monomials) if self.monomials else frozenset()

    @property
    def is_constant(self) -> bool:
        return not self.variables

    def __eq__(self, other):
        # ANF is canonical: equal monomial sets are equal functions
        if not isinstance(other, AnfFunction):
            return NotImplemented
        return self.monomials == other.monomials

    def __hash__(self):
        return hash(self.monomials)

    def __call__(self, assignment) -> int:
        return eval_anf(self, assignment)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Vectorized evaluation over the rows of a ``(n, d)`` 0/1 array."""
        X = np.asarray(X)
        out = np.zeros(X.shape[0], dtype=np.uint8)
        for m in self.monomials:
            if m:
                term = np.ones(X.shape[0], dtype=np.uint8)
                for v in m:
                    term &= X[:, v].astype(np.uint8)
                out ^= term
            else:
                out ^= 1
        return out

    def __xor__(self, other):
        other = _coerce(other)
        return AnfFunction(
            list(self.monomials) + list(other.monomials), self.inputs | other.inputs
        )

    __rxor__ = __xor__

    def __and__(self, other):
        other = _coerce(other)
        terms = [a | b for a in self.monomials for b in other.monomials]
        return AnfFunction(terms, self.inputs | other.inputs)

    __rand__ = __and__

    def __or__(self, other):
        other = _coerce(other)
        return self ^ other ^ (self & other)

    __ror__ = __or__

    def __invert__(self):
        return self ^ const(1)

    def __str__(self):
        if not self.monomials:
            return "0"
        terms = sorted(self.monomials, key=lambda m: (len(m), sorted(m)))
        return " ^ ".join(
            "1" if not m else "".join(f"x{v + 1}" for v in sorted(m)) for m in terms
        )


def _coerce(obj) -> AnfFunction:
    if isinstance(obj, AnfFunction):
        return obj
    if obj in (0, 1, False, True):
        return const(int(obj))
    raise TypeError(f"cannot combine AnfFunction with {obj!r}")


def var(index: int) -> AnfFunction:
    """The projection ``x -> x[index]``."""
    return AnfFunction([[index]])


def const(value: int) -> AnfFunction:
    return AnfFunction([[]] if value else [])


def eval_anf(func: AnfFunction, assignment) -> int:
    """Evaluate ``func`` on a mapping or sequence ``index -> bit``."""
    result = 0
    for m in func.monomials:
        term = 1
        for v in m:
            try:
                bit = assignment[v]
            except (KeyError, IndexError):
                raise ValueError(f"assignment is missing variable x{v + 1}") from None
            term &= int(bit)
        result ^= term
    return result


@dataclass(frozen=True)
class BexsamModel:
    """Causal order, per-variable ANF functions and noise probabilities.

    ``functions[i]`` and ``noise_probs[i]`` belong to variable ``i`` (not to
    position ``i`` of the order).  Construction rejects noise probabilities
    outside ``(0, 1)`` and exactly 1/2; values near 1/2 only warn.  Pass
    ``allow_unskewed=True`` to admit 1/2 for diagnostic runs.
    """

    order: tuple
    functions: tuple
    noise_probs: tuple

    def __init__(self, order, functions, noise_probs, *, allow_unskewed=False):
        order = tuple(int(v) for v in order)
        d = len(order)
        if sorted(order) != list(range(d)):
            raise ValueError(f"order {order} is not a permutation of 0..{d - 1}")
        functions = tuple(functions)
        noise_probs = tuple(float(p) for p in noise_probs)
        if len(functions) != d or len(noise_probs) != d:
            raise ValueError("need one function and one noise probability per variable")

        position = {v: k for k, v in enumerate(order)}
        for i, f in enumerate(functions):
            if not isinstance(f, AnfFunction):
                raise TypeError(f"function for x{i + 1} is not an AnfFunction")
            late = [v for v in f.variables if v not in position or position[v] >= position[i]]
            if late:
                raise ValueError(
                    f"f of x{i + 1} uses {['x%d' % (v + 1) for v in sorted(late)]}, "
                    "which do not precede it in the causal order"
                )
        for i, p in enumerate(noise_probs):
            if not 0.0 < p < 1.0:
                raise ValueError(f"noise probability of x{i + 1} must lie in (0, 1), got {p}")
            if p == 0.5 and not allow_unskewed:
                raise ValueError(f"noise probability of x{i + 1} is exactly 1/2 (not skewed)")
            if abs(p - 0.5) <= SKEW_WARN_EPS:
                warnings.warn(
                    f"noise probability {p} of x{i + 1} is nearly unskewed",
                    RuntimeWarning,
                    stacklevel=2,
                )

        object.__setattr__(self, "order", order)
        object.__setattr__(self, "functions", functions)
        object.__setattr__(self, "noise_probs", noise_probs)

    @property
    def d(self) -> int:
        return len(self.order)

    @property
    def names(self) -> tuple:
        return tuple(f"x{i + 1}" for i in range(self.d))

    def parents(self, i: int) -> frozenset:
        return self.functions[i].variables

    def children(self, i: int) -> frozenset:
        return frozenset(j for j in range(self.d) if i in self.functions[j].variables)

    def sinks(self) -> list:
        """Variables with no children (exogenous isolated variables included)."""
        return [i for i in range(self.d) if not self.children(i)]

    def evaluate(self, E: np.ndarray) -> np.ndarray:
        """Push a ``(n, d)`` array of noise bits through the structural equations."""
        E = np.asarray(E, dtype=np.uint8)
        X = np.zeros_like(E)
        for v in self.order:
            X[:, v] = self.functions[v].evaluate(X) ^ E[:, v]
        return X


def structural_sample(model: BexsamModel, noise: Sequence[int]) -> tuple:
    """Observation generated by one noise pattern ``(e_1, ..., e_d)``."""
    if len(noise) != model.d:
        raise ValueError(f"expected {model.d} noise bits, got {len(noise)}")
    x = [0] * model.d
    for v in model.order:
        x[v] = eval_anf(model.functions[v], x) ^ (int(noise[v]) & 1)
    return tuple(x)


def true_adjacency(model: BexsamModel) -> np.ndarray:
    """``B[i, j] = 1`` iff ``x_j`` occurs in some monomial of ``f_i``."""
    B = np.zeros((model.d, model.d), dtype=np.int8)
    for i, f in enumerate(model.functions):
        for j in f.variables:
            B[i, j] = 1
    return B


@dataclass(frozen=True)
class JointDistribution:
    """Probability of every bit-packed pattern in ``{0,1}**d``."""

    d: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (2**self.d,):
            raise ValueError("probs must hold 2**d entries")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def prob(self, pattern: Sequence[int]) -> float:
        return float(self.probs[_pack(pattern)])

    def marginal(self, i: int) -> float:
        """``p(x_i = 1)``."""
        idx = np.arange(2**self.d)
        return float(self.probs[(idx >> i) & 1 == 1].sum())

    def to_table(self, names=None, scale: float = 1.0) -> FrequencyTable:
        names = names if names is not None else [f"x{i + 1}" for i in range(self.d)]
        return FrequencyTable(names, self.probs * scale)


def _pack(pattern: Sequence[int]) -> int:
    return sum((int(b) & 1) << k for k, b in enumerate(pattern))


def _all_patterns(d: int) -> np.ndarray:
    idx = np.arange(2**d)
    return ((idx[:, None] >> np.arange(d)) & 1).astype(np.uint8)


def exact_joint(model: BexsamModel) -> JointDistribution:
    """Exact distribution of the observations by enumeration.

    The map from noise to observations is a bijection, so each observation
    pattern ``x`` has probability ``prod_i p(e_i = x_i XOR f_i(x))``.
    """
    d = model.d
    if d > MAX_ORACLE_VARS:
        raise CapacityError(f"exact oracle limited to d <= {MAX_ORACLE_VARS}, got {d}")
    X = _all_patterns(d)
    probs = np.ones(2**d)
    for i, f in enumerate(model.functions):
        e = X[:, i] ^ f.evaluate(X)
        p = model.noise_probs[i]
        probs *= np.where(e == 1, p, 1.0 - p)
    # renormalize away rounding so the sum-to-one invariant holds tightly
    return JointDistribution(d, probs / probs.sum())


def exact_conditional(
    model: BexsamModel, target: int, given: Mapping[int, int], joint=None
) -> float:
    """``p(x_target = 1 | given)``, marginalizing unassigned variables."""
    if target in given:
        raise ValueError("target must not be part of the conditioning event")
    joint = joint if joint is not None else exact_joint(model)
    X = _all_patterns(model.d)
    mask = np.ones(len(X), dtype=bool)
    for v, bit in given.items():
        mask &= X[:, v] == bit
    denom = joint.probs[mask].sum()
    if denom == 0:
        raise UndefinedConditionalError("conditioning event has probability 0")
    return float(joint.probs[mask & (X[:, target] == 1)].sum() / denom)


def function_marginal(model: BexsamModel, i: int, joint=None) -> float:
    """``p(f_i = 1)``, obtained by marginalizing the joint over ``f_i``'s inputs."""
    joint = joint if joint is not None else exact_joint(model)
    X = _all_patterns(model.d)
    return float(joint.probs[model.functions[i].evaluate(X) == 1].sum())


@dataclass(frozen=True)
class SkewReport:
    variable: object
    p_hat: float
    skewed: bool
    degenerate: bool


def skewness_check(table: FrequencyTable, tau: float = 0.02) -> list:
    """Flag variables whose empirical ``p(x=1)`` is farther than ``tau`` from 1/2.

    Under the model assumption a flagged variable certifies that both its noise
    and its function are skewed.  An unflagged variable is inconclusive.  A
    variable that is constant in the data is reported as degenerate.
    """
    if table.total <= 0:
        raise ValueError("skewness check needs a nonempty table")
    reports = []
    for v in table.live_vars:
        p_hat = table.marginal(v)
        reports.append(
            SkewReport(
                variable=v,
                p_hat=p_hat,
                skewed=abs(p_hat - 0.5) > tau,
                degenerate=p_hat in (0.0, 1.0),
            )
        )
    return reports


def noise_marginals(p_e: float, p_f: float) -> dict:
    """``p(x=1)`` when noise enters by XOR versus by OR."""
    return {
        "xor_marginal": p_e + p_f - 2 * p_e * p_f,
        "or_marginal": p_e + p_f - p_e * p_f,
    }


def example_model(noise_probs=(0.2, 0.2, 0.2, 0.2)) -> BexsamModel:
    """Four-variable reference model::

        x1 = e1
        x2 = x1 ^ e2
        x3 = x1 x2 ^ e3
        x4 = (x1 OR x3) ^ e4
    """
    x1, x2, x3 = var(0), var(1), var(2)
    return BexsamModel(
        order=(0, 1, 2, 3),
        functions=(const(0), x1, x1 & x2, x1 | x3),
        noise_probs=noise_probs,
    )


# -- text format ---------------------------------------------------------------


def _format_monomial(m) -> str:
    if not m:
        return "1"
    if m == {0}:
        # a bare "1" is the constant; AND is idempotent so "1&1" is x1
        return "1&1"
    return "&".join(str(v + 1) for v in sorted(m))


def format_model(model: BexsamModel) -> str:
    lines = [f"d={model.d}", "order=" + ",".join(str(v + 1) for v in model.order)]
    for i, (f, p) in enumerate(zip(model.functions, model.noise_probs)):
        terms = sorted(f.monomials, key=lambda m: (len(m), sorted(m)))
        anf = ";".join(_format_monomial(m) for m in terms) if terms else "0"
        lines.append(f"var={i + 1} p={p!r} anf={anf}")
    return "\n".join(lines) + "\n"


def _field(token: str, key: str, lineno: int) -> str:
    prefix = key + "="
    if not token.startswith(prefix):
        raise ModelFormatError(f"expected '{prefix}...', got {token!r}", lineno)
    return token[len(prefix):]


def parse_model(text: str, *, allow_unskewed=False) -> BexsamModel:
    lines = [(n, ln.strip()) for n, ln in enumerate(text.splitlines(), 1) if ln.strip()]
    if len(lines) < 2:
        raise ModelFormatError("model file needs 'd=' and 'order=' lines")
    try:
        d = int(_field(lines[0][1], "d", lines[0][0]))
        order = [int(t) - 1 for t in _field(lines[1][1], "order", lines[1][0]).split(",")]
    except ValueError as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(str(exc), lines[0][0]) from None
    if d < 1 or len(order) != d:
        raise ModelFormatError(f"order lists {len(order)} ids but d={d}", lines[1][0])

    functions: dict = {}
    probs: dict = {}
    for lineno, line in lines[2:]:
        tokens = line.split()
        if len(tokens) != 3:
            raise ModelFormatError("expected 'var=<id> p=<float> anf=<...>'", lineno)
        try:
            vid = int(_field(tokens[0], "var", lineno)) - 1
            p = float(_field(tokens[1], "p", lineno))
            anf = _field(tokens[2], "anf", lineno)
            if anf == "0":
                monomials = []
            else:
                monomials = [
                    [] if t == "1" else [int(v) - 1 for v in t.split("&")]
                    for t in anf.split(";")
                ]
        except ModelFormatError:
            raise
        except ValueError as exc:
            raise ModelFormatError(str(exc), lineno) from None
        if not 0 <= vid < d or vid in functions:
            raise ModelFormatError(f"bad or repeated variable id {vid + 1}", lineno)
        if any(not 0 <= v < d for m in monomials for v in m):
            raise ModelFormatError("monomial references unknown variable", lineno)
        functions[vid] = AnfFunction(monomials)
        probs[vid] = p
    if len(functions) != d:
        raise ModelFormatError(f"expected {d} var lines, got {len(functions)}")
    try:
        return BexsamModel(
            order,
            [functions[i] for i in range(d)],
            [probs[i] for i in range(d)],
            allow_unskewed=allow_unskewed,
        )
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None


def load_model(path, **kwargs) -> BexsamModel:
    with open(path) as fh:
        return parse_model(fh.read(), **kwargs)


def save_model(model: BexsamModel, path) -> None:
    with open(path, "w") as fh:
        fh.write(format_model(model))

