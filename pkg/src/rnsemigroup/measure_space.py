"""Finite probability spaces and L0 random scalars.

A :class:`ProbSpace` is a finite list of weighted atoms.  Every event is a
subset of atoms, so the L0 lattice operations (supremum, infimum,
indicators of ``[f > g]``) and convergence in probability reduce to exact
finite computations on one value per atom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateLabelError,
    EmptyFamilyError,
    NonFiniteValueError,
    NonPositiveProbError,
    ProbSumMismatchError,
    SpaceMismatchError,
)

PROB_SUM_TOL = 1e-12


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProbSpace:
    """Discretized probability space ``(Omega, F, P)``.

    Attributes
    ----------
    labels : tuple of str
        Atom labels, unique and in user order.
    probs : ndarray
        Strictly positive atom probabilities summing to one.
    """

    labels: tuple
    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if len(self.labels) != probs.size or probs.ndim != 1:
            raise ValueError("one probability per label required")
        if probs.size == 0:
            raise EmptyFamilyError("a probability space needs at least one atom")
        if not np.all(np.isfinite(probs)) or np.any(probs <= 0.0):
            raise NonPositiveProbError(f"atom probabilities must be > 0, got {probs.tolist()}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ProbSumMismatchError(f"atom probabilities sum to {total!r}, not 1")
        if len(set(self.labels)) != len(self.labels):
            raise DuplicateLabelError(f"duplicate atom labels in {self.labels}")

    @property
    def n_atoms(self) -> int:
        return self.probs.size

    def __len__(self) -> int:
        return self.n_atoms

    def same_as(self, other: "ProbSpace") -> bool:
        return self is other or (
            self.labels == other.labels and np.array_equal(self.probs, other.probs)
        )

    def prob(self, mask) -> float:
        """Probability of the event given as a boolean mask over atoms."""
        mask = np.asarray(mask, dtype=bool)
        return math.fsum(self.probs[mask])

    def scalar(self, values) -> "RScalar":
        return RScalar(self, values)

    def const(self, c: float) -> "RScalar":
        return RScalar(self, np.full(self.n_atoms, float(c)))

    def to_json(self, z: "RScalar | None" = None) -> dict:
        atoms = []
        for i, (label, p) in enumerate(zip(self.labels, self.probs)):
            entry = {"label": label, "prob": float(p)}
            if z is not None:
                entry["Z"] = float(z.values[i])
            atoms.append(entry)
        return {"atoms": atoms}

    @classmethod
    def from_json(cls, doc: dict) -> tuple["ProbSpace", "RScalar | None"]:
        """Inverse of :meth:`to_json`; returns the space and the Z values if present."""
        atoms = doc["atoms"]
        space = make_space([(a["label"], a["prob"]) for a in atoms])
        if all("Z" in a for a in atoms):
            return space, RScalar(space, [a["Z"] for a in atoms])
        return space, None


def make_space(atoms: Iterable[tuple[str, float]]) -> ProbSpace:
    """Build a validated space from ``(label, prob)`` pairs, preserving order."""
    atoms = list(atoms)
    if not atoms:
        raise EmptyFamilyError("a probability space needs at least one atom")
    labels, probs = zip(*atoms)
    return ProbSpace(tuple(labels), np.asarray(probs, dtype=float))


def gauss_hermite_space(n: int) -> tuple[ProbSpace, "RScalar"]:
    """Atomize a standard Gaussian with ``n`` probabilists' Gauss-Hermite nodes.

    The returned scalar ``Z`` carries the nodes; the atom probabilities are
    the normalized weights, so ``E[Z**k]`` is exact for ``k <= 2n - 1``.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"need a positive atom count, got {n!r}")
    n = int(n)
    nodes, weights = np.polynomial.hermite_e.hermegauss(n)
    weights = weights / math.sqrt(2.0 * math.pi)
    # renormalize away the last ulp so the sum check is tight
    weights = weights / math.fsum(weights)
    if n % 2 == 1:
        nodes[n // 2] = 0.0
    labels = [f"w{i + 1}" for i in range(n)]
    space = ProbSpace(tuple(labels), weights)
    return space, RScalar(space, nodes)


@dataclass(frozen=True, eq=False)
class RScalar:
    """Element of ``L0(F, R)``: one finite real value per atom."""

    space: ProbSpace
    values: np.ndarray

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.ndim == 0:
            vals = _frozen(np.full(self.space.n_atoms, float(vals)))
        if vals.shape != (self.space.n_atoms,):
            raise ValueError(
                f"expected {self.space.n_atoms} values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise NonFiniteValueError("random scalars must be finite on every atom")
        object.__setattr__(self, "values", vals)

    def _other(self, other):
        if isinstance(other, RScalar):
            _check_same(self.space, other.space)
            return other.values
        return other

    def __add__(self, other):
        return RScalar(self.space, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return RScalar(self.space, self.values - self._other(other))

    def __rsub__(self, other):
        return RScalar(self.space, self._other(other) - self.values)

    def __mul__(self, other):
        return RScalar(self.space, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return RScalar(self.space, self.values / self._other(other))

    def __neg__(self):
        return RScalar(self.space, -self.values)

    def __abs__(self):
        return RScalar(self.space, np.abs(self.values))

    def exp(self) -> "RScalar":
        return RScalar(self.space, np.exp(self.values))

    def expectation(self) -> float:
        """``integral over Omega of xi dP`` as an exactly ordered finite sum."""
        return math.fsum(self.space.probs * self.values)

    def tolist(self) -> list:
        return [float(v) for v in self.values]

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f"RScalar({np.array2string(self.values, precision=6)})"


def _check_same(a: ProbSpace, b: ProbSpace):
    if not a.same_as(b):
        raise SpaceMismatchError("operands live on different probability spaces")


def _family(xs: Sequence[RScalar]) -> tuple[ProbSpace, np.ndarray]:
    xs = list(xs)
    if not xs:
        raise EmptyFamilyError("lattice operations need a nonempty family")
    space = xs[0].space
    for x in xs[1:]:
        _check_same(space, x.space)
    return space, np.stack([x.values for x in xs])


def rs_sup(xs: Sequence[RScalar]) -> RScalar:
    """Lattice supremum of a finite family (per-atom maximum)."""
    space, stack = _family(xs)
    return RScalar(space, stack.max(axis=0))


def rs_inf(xs: Sequence[RScalar]) -> RScalar:
    """Lattice infimum of a finite family (per-atom minimum)."""
    space, stack = _family(xs)
    return RScalar(space, stack.min(axis=0))


def indicator_gt(f: RScalar, g: RScalar) -> RScalar:
    """``I_[f > g]``."""
    _check_same(f.space, g.space)
    return RScalar(f.space, (f.values > g.values).astype(float))


def indicator_le(f: RScalar, g: RScalar) -> RScalar:
    """``I_[f <= g]``, the complement of :func:`indicator_gt`."""
    _check_same(f.space, g.space)
    return RScalar(f.space, (f.values <= g.values).astype(float))


def converges_in_prob(
    seq: Sequence[RScalar], limit: RScalar, eps: float, lam: float
) -> tuple[bool, int | None]:
    """Test the (eps, lambda) neighbourhood condition along a finite sequence.

    Returns ``(True, i)`` where ``i`` is the smallest index such that every
    term from ``i`` on satisfies ``P{|seq_k - limit| < eps} > lam``, or
    ``(False, None)`` if the last term already fails.
    """
    if eps <= 0 or not 0 < lam < 1:
        raise ValueError("need eps > 0 and 0 < lam < 1")
    ok = []
    for x in seq:
        _check_same(x.space, limit.space)
        ok.append(limit.space.prob(np.abs(x.values - limit.values) < eps) > lam)
    if not ok or not ok[-1]:
        return False, None
    idx = len(ok)
    while idx > 0 and ok[idx - 1]:
        idx -= 1
    return True, idx
