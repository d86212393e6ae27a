"""Bit-packed frequency tables over binary value patterns.

A table over live variables ``v_0, ..., v_{m-1}`` stores ``2**m`` counts.  The
count of a pattern lives at index ``sum(bit_b << b)``, so ``v_0`` is the least
significant bit.  Counts are normally integers, but nonnegative real weights
are accepted so that exact probabilities (scaled by a sample size) can stand
in for an infinitely large sample.  Every ratio computed from a table is
invariant to the scale; the two-proportion test in :mod:`bexsam.discovery` is
not, and needs genuine counts (or a meaningful scale) to be calibrated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "FrequencyTable",
    "Completeness",
    "build_table",
    "marginalize",
    "cond_prob",
    "completeness",
    "format_table",
    "parse_table",
    "read_csv",
    "load_input",
    "ParseError",
]


class ParseError(ValueError):
    """Malformed data; ``row`` (0-based data row) or ``line`` (1-based file line)."""

    def __init__(self, message, *, row=None, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        elif row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row
        self.line = line


class FrequencyTable:
    """Immutable counts over all value patterns of ``live_vars``."""

    __slots__ = ("live_vars", "counts", "_index")

    def __init__(self, live_vars: Sequence, counts):
        live_vars = tuple(live_vars)
        if len(set(live_vars)) != len(live_vars):
            raise ValueError("live variables must be distinct")
        counts = np.array(counts)
        if counts.dtype.kind not in "iuf":
            raise ValueError("counts must be numeric")
        if counts.shape != (2 ** len(live_vars),):
            raise ValueError(
                f"{len(live_vars)} variables need {2 ** len(live_vars)} counts, got {counts.shape}"
            )
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "live_vars", live_vars)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "_index", {v: b for b, v in enumerate(live_vars)})

    def __setattr__(self, name, value):
        raise AttributeError("FrequencyTable is immutable")

    def __repr__(self):
        return f"FrequencyTable(live_vars={self.live_vars!r}, total={self.total!r})"

    def __eq__(self, other):
        return (
            isinstance(other, FrequencyTable)
            and self.live_vars == other.live_vars
            and np.array_equal(self.counts, other.counts)
        )

    __hash__ = None

    @property
    def d(self) -> int:
        return len(self.live_vars)

    @property
    def total(self):
        total = self.counts.sum()
        return total.item()

    def bit(self, var) -> int:
        """Bit position of ``var``; raises ``KeyError`` for unknown variables."""
        try:
            return self._index[var]
        except KeyError:
            raise KeyError(f"{var!r} is not a live variable") from None

    def axis(self, var) -> int:
        """Axis of ``var`` in :meth:`cube` (C-order puts the highest bit first)."""
        return self.d - 1 - self.bit(var)

    def cube(self) -> np.ndarray:
        """Counts reshaped to ``(2,) * d``; see :meth:`axis`."""
        return self.counts.reshape((2,) * self.d)

    def pattern_index(self, assignment: Mapping) -> int:
        if set(assignment) != set(self.live_vars):
            raise ValueError("assignment must cover exactly the live variables")
        return sum((int(assignment[v]) & 1) << b for v, b in self._index.items())

    def marginal(self, var) -> float:
        """Empirical ``p(var = 1)``."""
        b = self.bit(var)
        idx = np.arange(self.counts.size)
        return float(self.counts[(idx >> b) & 1 == 1].sum() / self.total)


def build_table(rows, names: Sequence) -> FrequencyTable:
    """Count every pattern among ``rows`` (each a sequence of ``len(names)`` bits)."""
    names = tuple(names)
    d = len(names)
    if isinstance(rows, np.ndarray) and rows.ndim == 2 and rows.shape[1] == d:
        X = rows
    else:
        rows = list(rows)
        for r, row in enumerate(rows):
            if len(row) != d:
                raise ParseError(f"expected {d} values, got {len(row)}", row=r)
        X = np.array(rows, dtype=np.int64).reshape(len(rows), d)
    bad = np.flatnonzero(np.any((X != 0) & (X != 1), axis=1))
    if bad.size:
        raise ParseError(f"non-binary value {X[bad[0]].tolist()}", row=int(bad[0]))
    idx = X.astype(np.int64) @ (np.int64(1) << np.arange(d, dtype=np.int64))
    counts = np.bincount(idx, minlength=2**d).astype(np.int64)
    return FrequencyTable(names, counts)


def marginalize(table: FrequencyTable, var) -> FrequencyTable:
    """Sum ``var`` out of ``table``; the total is preserved."""
    if var not in table.live_vars:
        raise ValueError(f"{var!r} is not a live variable")
    if table.d < 2:
        raise ValueError("cannot marginalize the last remaining variable")
    counts = table.cube().sum(axis=table.axis(var)).reshape(-1)
    return FrequencyTable([v for v in table.live_vars if v != var], counts)


def split_target(table: FrequencyTable, target):
    """Counts with ``target = 0`` and ``target = 1`` for every control.

    Returns two arrays over the other live variables, bit-packed in
    ``live_vars`` order with ``target`` removed.
    """
    cube = table.cube()
    ax = table.axis(target)
    c0 = np.take(cube, 0, axis=ax).reshape(-1)
    c1 = np.take(cube, 1, axis=ax).reshape(-1)
    return c0, c1


def cond_prob(table: FrequencyTable, target, control: Mapping):
    """``FT(target=1, control) / FT(control)``, or ``None`` when ``FT(control) = 0``."""
    others = [v for v in table.live_vars if v != target]
    if target not in table.live_vars:
        raise ValueError(f"{target!r} is not a live variable")
    if set(control) != set(others):
        raise ValueError("control must assign exactly the non-target live variables")
    if any(int(b) not in (0, 1) for b in control.values()):
        raise ValueError("control values must be 0 or 1")
    base = dict(control)
    n0 = table.counts[table.pattern_index({**base, target: 0})]
    n1 = table.counts[table.pattern_index({**base, target: 1})]
    denom = n0 + n1
    if denom == 0:
        return None
    return float(n1 / denom)


@dataclass(frozen=True)
class Completeness:
    complete: bool
    missing: list


def _pattern_string(index: int, d: int) -> str:
    return "".join(str((index >> b) & 1) for b in range(d))


def completeness(table: FrequencyTable) -> Completeness:
    """Missing patterns are written first-variable-leftmost, e.g. ``'01'``."""
    missing = [_pattern_string(int(i), table.d) for i in np.flatnonzero(table.counts <= 0)]
    return Completeness(not missing, missing)


# -- text formats --------------------------------------------------------------


def _format_count(c) -> str:
    c = c.item() if hasattr(c, "item") else c
    if isinstance(c, float) and c.is_integer():
        c = int(c)
    return repr(c)


def format_table(table: FrequencyTable) -> str:
    lines = ["vars=" + ",".join(str(v) for v in table.live_vars)]
    for i in np.flatnonzero(table.counts):
        lines.append(f"{_pattern_string(int(i), table.d)},{_format_count(table.counts[i])}")
    return "\n".join(lines) + "\n"


def parse_table(text: str) -> FrequencyTable:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("vars="):
        raise ParseError("frequency table must start with 'vars='", line=1)
    names = [v.strip() for v in lines[0][len("vars="):].split(",")]
    if not names or any(not v for v in names) or len(set(names)) != len(names):
        raise ParseError("variable names must be nonempty and distinct", line=1)
    d = len(names)
    counts: dict = {}
    is_float = False
    for lineno, line in enumerate(lines[1:], 2):
        line = line.strip()
        if not line:
            continue
        pattern, sep, value = line.partition(",")
        if not sep or len(pattern) != d or set(pattern) - {"0", "1"}:
            raise ParseError(f"expected '<{d} bits>,<count>', got {line!r}", line=lineno)
        try:
            count = int(value)
        except ValueError:
            try:
                count = float(value)
                is_float = True
            except ValueError:
                raise ParseError(f"bad count {value!r}", line=lineno) from None
        if count < 0:
            raise ParseError("counts must be nonnegative", line=lineno)
        index = sum(int(ch) << b for b, ch in enumerate(pattern))
        if index in counts:
            raise ParseError(f"pattern {pattern} repeated", line=lineno)
        counts[index] = count
    arr = np.zeros(2**d, dtype=float if is_float else np.int64)
    for index, count in counts.items():
        arr[index] = count
    return FrequencyTable(names, arr)


def read_csv(text: str):
    """Parse a header-plus-0/1-cells CSV; returns ``(names, rows)``."""
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty CSV", line=1)
    names = [v.strip() for v in lines[0].split(",")]
    if any(not v for v in names) or len(set(names)) != len(names):
        raise ParseError("header names must be nonempty and distinct", line=1)
    rows = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(names):
            raise ParseError(f"expected {len(names)} cells, got {len(cells)}", line=lineno)
        if any(c not in ("0", "1") for c in cells):
            raise ParseError(f"cells must be 0 or 1, got {line!r}", line=lineno)
        rows.append([int(c) for c in cells])
    return names, np.array(rows, dtype=np.int64).reshape(len(rows), len(names))


def load_input(path) -> FrequencyTable:
    """Read a CSV dataset or a frequency-table file, detected by the header."""
    with open(path) as fh:
        text = fh.read()
    if text.startswith("vars="):
        return parse_table(text)
    names, rows = read_csv(text)
    return build_table(rows, names)
