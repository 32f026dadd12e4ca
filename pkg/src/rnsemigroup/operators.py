"""Module homomorphisms acting on tabulated processes.

:class:`MultOp` multiplies by a tabulated function ``m(t, omega)``.  When it
was produced by :func:`exp_op` it also remembers its exponent, so that
composing and inverting exponential operators is done by adding and
negating exponents instead of multiplying rounded values.

:class:`ModOp` wraps an arbitrary map ``Process -> Process``; its norm can
only be bounded from below by probing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import (
    EmptyProbeSetError,
    ExponentOverflowError,
    SingularMultiplierError,
)
from .measure_space import ProbSpace, RScalar, _check_same
from .rn_module import Process, TimeGrid, _check_grid, l0_norm

EXP_CAP = 700.0


@dataclass(frozen=True, eq=False)
class MultOp:
    """Multiplication operator ``(TY)_t(omega) = m(t, omega) Y_t(omega)``."""

    space: ProbSpace
    grid: TimeGrid
    multiplier: np.ndarray
    exponent: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        m = np.array(self.multiplier, dtype=float)
        shape = (self.space.n_atoms, self.grid.n_cols)
        if m.shape != shape:
            raise ValueError(f"multiplier must have shape {shape}, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("multiplier entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "multiplier", m)
        if self.exponent is not None:
            e = np.array(self.exponent, dtype=float)
            e.setflags(write=False)
            object.__setattr__(self, "exponent", e)

    def __call__(self, Y: Process) -> Process:
        return apply(self, Y)

    def scaled(self, c: float | RScalar, label: str = "") -> "MultOp":
        c = c.values[:, None] if isinstance(c, RScalar) else float(c)
        return MultOp(self.space, self.grid, c * self.multiplier, label=label)


@dataclass(frozen=True, eq=False)
class ModOp:
    """General module homomorphism given by its action on processes."""

    space: ProbSpace
    grid: TimeGrid
    fn: Callable[[Process], Process]
    norm_bound: RScalar | None = None
    label: str = ""

    def __call__(self, Y: Process) -> Process:
        return apply(self, Y)


Operator = Union[MultOp, ModOp]


def _check_op_input(op: Operator, Y: Process):
    _check_same(op.space, Y.space)
    _check_grid(op.grid, Y.grid)


def apply(op: Operator, Y: Process) -> Process:
    """Act with ``op`` on ``Y``."""
    _check_op_input(op, Y)
    if isinstance(op, MultOp):
        return Y.like(op.multiplier * Y.values)
    out = op.fn(Y)
    _check_op_input(op, out)
    return out


def identity(space: ProbSpace, grid: TimeGrid) -> MultOp:
    shape = (space.n_atoms, grid.n_cols)
    return MultOp(space, grid, np.ones(shape), exponent=np.zeros(shape), label="identity")


def zero_op(space: ProbSpace, grid: TimeGrid) -> MultOp:
    return MultOp(space, grid, np.zeros((space.n_atoms, grid.n_cols)), label="zero")


def mult_from_function(space: ProbSpace, grid: TimeGrid, fn, label: str = "", Z: RScalar | None = None) -> MultOp:
    """Tabulate ``fn(t, unit, z)`` with ``t``/``unit`` as rows and ``z`` as a column."""
    z = np.zeros((space.n_atoms, 1)) if Z is None else Z.values[:, None]
    m = np.broadcast_to(fn(grid.t[None, :], grid.unit[None, :], z), (space.n_atoms, grid.n_cols))
    return MultOp(space, grid, np.array(m), label=label)


def exp_op(op: MultOp, scale: float | RScalar | np.ndarray = 1.0, label: str = "") -> MultOp:
    """``exp(scale * op)``, which for a multiplication operator is pointwise.

    ``scale`` may be a real, an :class:`RScalar`, or a per-atom array.
    Raises :class:`ExponentOverflowError` instead of producing infinities.
    """
    if isinstance(scale, RScalar):
        _check_same(scale.space, op.space)
        s = scale.values[:, None]
    else:
        s = np.asarray(scale, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
    expo = s * op.multiplier
    if np.any(expo > EXP_CAP):
        atom, node = np.unravel_index(np.argmax(expo), expo.shape)
        s_at = float(s) if s.ndim == 0 else float(s.ravel()[atom if s.size > 1 else 0])
        raise ExponentOverflowError(
            f"exponent {expo[atom, node]:.4g} exceeds {EXP_CAP} at atom "
            f"{op.space.labels[atom]!r}, t={op.grid.t[node]:.6g}, scale s={s_at:.6g}",
            atom=int(atom),
            node=int(node),
        )
    return MultOp(op.space, op.grid, np.exp(expo), exponent=expo, label=label)


def compose(op1: Operator, op2: Operator, label: str = "") -> Operator:
    """``op1 o op2`` (apply ``op2`` first)."""
    _check_same(op1.space, op2.space)
    _check_grid(op1.grid, op2.grid)
    if isinstance(op1, MultOp) and isinstance(op2, MultOp):
        if op1.exponent is not None and op2.exponent is not None:
            expo = op1.exponent + op2.exponent
            if np.any(expo > EXP_CAP):
                raise ExponentOverflowError(f"composed exponent exceeds {EXP_CAP}")
            return MultOp(op1.space, op1.grid, np.exp(expo), exponent=expo, label=label)
        return MultOp(op1.space, op1.grid, op1.multiplier * op2.multiplier, label=label)
    n1, n2 = _known_norm(op1), _known_norm(op2)
    norm = n1 * n2 if n1 is not None and n2 is not None else None
    return ModOp(op1.space, op1.grid, lambda Y: apply(op1, apply(op2, Y)), norm, label)


def _known_norm(op: Operator) -> RScalar | None:
    if isinstance(op, MultOp):
        return op_norm_mult(op)
    return op.norm_bound


def invert_mult(op: MultOp) -> tuple[MultOp, RScalar]:
    """Pointwise reciprocal and the per-atom condition ``max|m| * max|1/m|``."""
    m = op.multiplier
    zero = m == 0.0
    if np.any(zero):
        atom, node = np.argwhere(zero)[0]
        raise SingularMultiplierError(
            f"multiplier vanishes at atom {op.space.labels[atom]!r}, t={op.grid.t[node]:.6g}"
        )
    inv = 1.0 / m
    expo = None if op.exponent is None else -op.exponent
    cond = np.abs(m).max(axis=1) * np.abs(inv).max(axis=1)
    label = f"inv({op.label})" if op.label else ""
    return MultOp(op.space, op.grid, inv, exponent=expo, label=label), RScalar(op.space, cond)


def op_norm_mult(op: MultOp) -> RScalar:
    """Exact L0 operator norm of a multiplication operator: per-atom ``max |m|``."""
    return RScalar(op.space, np.abs(op.multiplier).max(axis=1))


def normalize_probe(p: Process) -> Process:
    """Rescale per atom to unit norm; atoms where ``p`` vanishes stay zero."""
    n = l0_norm(p).values
    scale = np.divide(1.0, n, out=np.zeros_like(n), where=n > 0)
    return p.like(p.values * scale[:, None])


def op_norm_probe(op: Operator, probes: Sequence[Process]) -> RScalar:
    """Lower bound for ``||op||`` from a probe set (probes are normalized first)."""
    probes = list(probes)
    if not probes:
        raise EmptyProbeSetError("need at least one probe")
    best = np.zeros(op.space.n_atoms)
    for p in probes:
        best = np.maximum(best, l0_norm(apply(op, normalize_probe(p))).values)
    return RScalar(op.space, best)


def node_bumps(space: ProbSpace, grid: TimeGrid, columns=None) -> list[Process]:
    """Discrete deltas (hat functions of one-node width) at the chosen columns."""
    cols = range(grid.n_cols) if columns is None else columns
    out = []
    for j in cols:
        v = np.zeros((space.n_atoms, grid.n_cols))
        v[:, j] = 1.0
        out.append(Process(space, grid, v))
    return out


def shift_op(space: ProbSpace, grid: TimeGrid, label: str = "shift") -> ModOp:
    """Shift values one column towards ``t = 0`` with zero fill (a non-multiplicative homomorphism)."""

    def fn(Y: Process) -> Process:
        v = np.zeros_like(Y.values)
        v[:, :-1] = Y.values[:, 1:]
        return Y.like(v)

    return ModOp(space, grid, fn, label=label)


def as_modop(op: Operator) -> ModOp:
    if isinstance(op, ModOp):
        return op
    return ModOp(op.space, op.grid, lambda Y: apply(op, Y), op_norm_mult(op), op.label)


def homomorphism_defect(op: Operator, xi: RScalar, x: Process, y: Process) -> RScalar:
    """Relative defect of ``T(xi x + y) = xi T(x) + T(y)`` per atom."""
    tx, ty = apply(op, x) * xi, apply(op, y)
    lhs = apply(op, x * xi + y)
    rhs = tx + ty
    # summand sizes, since xi x + y may cancel
    scale = np.maximum.reduce([l0_norm(v).values for v in (lhs, tx, ty)])
    diff = l0_norm(lhs - rhs).values
    return RScalar(op.space, np.divide(diff, scale, out=np.zeros_like(diff), where=scale > 0))
