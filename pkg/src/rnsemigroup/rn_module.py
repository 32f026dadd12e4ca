"""Tabulated processes forming the truncated module ``B^2(R+)``.

A process is stored per (atom, time column).  The time grid is split at
``t = 1`` into two Simpson blocks; the node ``t = 1`` appears twice, once
as the last column of the left block (value on the closed interval
``[0, 1]``) and once as the first column of the right block (the right
limit).  That way piecewise-smooth integrands with a jump at ``t = 1`` are
integrated at full Simpson order on both sides.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import GridMismatchError, NonFiniteValueError, SpaceMismatchError
from .measure_space import ProbSpace, RScalar, _check_same


def _simpson_weights(n_intervals: int, h: float) -> np.ndarray:
    w = np.full(n_intervals + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Uniform Simpson grid on ``[0, 1]`` and on ``[1, t_max]``.

    Parameters
    ----------
    t_max : float
        Truncation horizon, must exceed 1.
    n_left, n_right : int
        Even interval counts on ``[0, 1]`` and ``[1, t_max]``.
    """

    t_max: float
    n_left: int
    n_right: int

    def __post_init__(self):
        if not self.t_max > 1.0:
            raise ValueError(f"t_max must exceed 1, got {self.t_max}")
        for n in (self.n_left, self.n_right):
            if n < 2 or n % 2:
                raise ValueError(f"interval counts must be even and >= 2, got {n}")
        left = np.linspace(0.0, 1.0, self.n_left + 1)
        right = np.linspace(1.0, self.t_max, self.n_right + 1)
        t = np.concatenate([left, right])
        unit = np.zeros(t.size, dtype=bool)
        unit[: self.n_left + 1] = True
        w = np.concatenate(
            [
                _simpson_weights(self.n_left, 1.0 / self.n_left),
                _simpson_weights(self.n_right, (self.t_max - 1.0) / self.n_right),
            ]
        )
        for name, arr in (("t", t), ("unit", unit), ("weights", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def uniform(cls, t_max: float = 2.0, intervals: int = 512) -> "TimeGrid":
        """Split ``intervals`` between the two blocks in proportion to their length."""
        n_left = max(2, 2 * round(intervals / t_max / 2))
        n_right = max(2, 2 * round((intervals - n_left) / 2))
        return cls(float(t_max), n_left, n_right)

    @property
    def n_cols(self) -> int:
        return self.t.size

    @property
    def nodes(self) -> np.ndarray:
        """Distinct time nodes, strictly increasing, containing 1.0."""
        return np.concatenate([self.t[: self.n_left + 1], self.t[self.n_left + 2 :]])

    @property
    def h_min(self) -> float:
        return min(1.0 / self.n_left, (self.t_max - 1.0) / self.n_right)

    def same_as(self, other: "TimeGrid") -> bool:
        return self is other or (
            self.t_max == other.t_max
            and self.n_left == other.n_left
            and self.n_right == other.n_right
        )


def _check_grid(a: TimeGrid, b: TimeGrid):
    if not a.same_as(b):
        raise GridMismatchError("operands live on different time grids")


@dataclass(frozen=True, eq=False)
class Process:
    """Element of the discretized ``B^2(R+)``: values per (atom, time column)."""

    space: ProbSpace
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        shape = (self.space.n_atoms, self.grid.n_cols)
        if vals.shape != shape:
            raise ValueError(f"process values must have shape {shape}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise NonFiniteValueError("process values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def _other(self, other: "Process") -> np.ndarray:
        _check_same(self.space, other.space)
        _check_grid(self.grid, other.grid)
        return other.values

    def like(self, values) -> "Process":
        return Process(self.space, self.grid, values)

    def __add__(self, other: "Process") -> "Process":
        return self.like(self.values + self._other(other))

    def __sub__(self, other: "Process") -> "Process":
        return self.like(self.values - self._other(other))

    def __neg__(self) -> "Process":
        return self.like(-self.values)

    def __mul__(self, c) -> "Process":
        if isinstance(c, RScalar):
            return scalar_action(c, self)
        return self.like(self.values * float(c))

    __rmul__ = __mul__

    def __truediv__(self, c) -> "Process":
        if isinstance(c, RScalar):
            return scalar_action(RScalar(c.space, 1.0 / c.values), self)
        return self.like(self.values / float(c))

    def norm(self) -> RScalar:
        return l0_norm(self)

    @classmethod
    def zeros(cls, space: ProbSpace, grid: TimeGrid) -> "Process":
        return cls(space, grid, np.zeros((space.n_atoms, grid.n_cols)))


@dataclass(frozen=True, eq=False)
class GraphElement:
    """Pair ``(z, Az)`` representing ``z`` as an element of ``[D(A)]``."""

    z: Process
    Az: Process

    def __post_init__(self):
        _check_same(self.z.space, self.Az.space)
        _check_grid(self.z.grid, self.Az.grid)


def l0_norm(Y: Process) -> RScalar:
    """Per-atom ``(integral of Y_t^2 dt)^(1/2)`` by composite Simpson.

    Each atom is rescaled by its largest entry before squaring, so tiny
    values do not underflow to a zero norm and large ones do not overflow.
    """
    peak = np.abs(Y.values).max(axis=1)
    safe = np.where(peak > 0, peak, 1.0)
    u = Y.values / safe[:, None]
    # row-wise reduction so each atom is summed identically whatever the atom count
    sq = np.sum(u * u * Y.grid.weights, axis=1)
    return RScalar(Y.space, np.sqrt(np.maximum(sq, 0.0)) * peak)


def scalar_action(xi: RScalar, Y: Process) -> Process:
    """Module action of an L0 scalar on a process."""
    if not xi.space.same_as(Y.space):
        raise SpaceMismatchError("scalar and process live on different spaces")
    return Y.like(xi.values[:, None] * Y.values)


def graph_norm(e: GraphElement) -> RScalar:
    """``||z|| + ||Az||``."""
    return l0_norm(e.z) + l0_norm(e.Az)


# -- catalog -----------------------------------------------------------------

def _one_on_unit(t, unit):
    return np.where(unit, 1.0, 0.0)


def _ramp(t, unit):
    return np.where(unit, t, 0.0)


def _gaussian_bump(t, unit):
    return np.exp(-0.5 * ((t - 0.5) / 0.1) ** 2)


CATALOG: dict[str, Callable] = {
    "one_on_unit": _one_on_unit,
    "ramp": _ramp,
    "gaussian_bump": _gaussian_bump,
}


def catalog_process(name: str, space: ProbSpace, grid: TimeGrid) -> Process:
    """Deterministic (same on every atom) process from the named catalog."""
    try:
        fn = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog process {name!r}; known: {sorted(CATALOG)}") from None
    row = fn(grid.t, grid.unit)
    return Process(space, grid, np.tile(row, (space.n_atoms, 1)))


def process_from_function(space: ProbSpace, grid: TimeGrid, fn) -> Process:
    """Tabulate ``fn(t, unit, atom_index)``; ``unit`` marks columns inside ``[0, 1]``."""
    rows = [np.broadcast_to(fn(grid.t, grid.unit, i), grid.t.shape) for i in range(space.n_atoms)]
    return Process(space, grid, np.array(rows))


def process_from_spec(spec, space: ProbSpace, grid: TimeGrid) -> Process:
    """Catalog name, or ``{"table": [[...], ...]}`` with one row per atom."""
    if isinstance(spec, str):
        return catalog_process(spec, space, grid)
    if isinstance(spec, dict) and "table" in spec:
        return Process(space, grid, np.asarray(spec["table"], dtype=float))
    raise ValueError(f"cannot build a process from {spec!r}")


def process_to_json(Y: Process) -> dict:
    return {"table": Y.values.tolist()}


def process_to_csv(Y: Process) -> str:
    """Rows are time columns (``t = 1`` twice: left then right limit), columns atoms."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", *Y.space.labels])
    for j, t in enumerate(Y.grid.t):
        writer.writerow([repr(float(t)), *(repr(float(v)) for v in Y.values[:, j])])
    return buf.getvalue()


def process_from_csv(text: str, space: ProbSpace, grid: TimeGrid) -> Process:
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    if tuple(header[1:]) != space.labels:
        raise SpaceMismatchError("CSV atom columns do not match the space labels")
    t = np.array([float(r[0]) for r in body])
    if t.shape != grid.t.shape or not np.allclose(t, grid.t, rtol=0, atol=1e-12):
        raise GridMismatchError("CSV time column does not match the grid")
    vals = np.array([[float(v) for v in r[1:]] for r in body]).T
    return Process(space, grid, vals)


def random_process(space: ProbSpace, grid: TimeGrid, rng: np.random.Generator, scale=1.0) -> Process:
    """Smooth-by-parts random process: low-order polynomial per block and atom."""
    coeffs = rng.normal(size=(space.n_atoms, 2, 3)) * scale
    t = grid.t
    left = coeffs[:, 0, 0:1] + coeffs[:, 0, 1:2] * t + coeffs[:, 0, 2:3] * t**2
    right = coeffs[:, 1, 0:1] + coeffs[:, 1, 1:2] * (t - 1) + coeffs[:, 1, 2:3] * (t - 1) ** 2
    return Process(space, grid, np.where(grid.unit, left, right))


def l0_norm_error_order(values_fn, space, t_max=2.0, levels=(16, 32, 64, 128)) -> float:
    """Observed order of the norm quadrature for a process given as ``fn(t, unit)``.

    Uses successive differences between grid levels, so no exact value is needed.
    """
    norms = []
    for n in levels:
        grid = TimeGrid.uniform(t_max, n)
        row = values_fn(grid.t, grid.unit)
        Y = Process(space, grid, np.tile(row, (space.n_atoms, 1)))
        norms.append(l0_norm(Y).values[0])
    diffs = np.abs(np.diff(norms))
    return math.log2(diffs[-2] / diffs[-1])
