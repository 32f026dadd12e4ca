"""Integration and differentiation of process-valued functions of one real parameter.

Module homomorphisms on an atomized space act atom by atom, so a
:class:`ParamFn` may be evaluated at a *per-atom* parameter (one real per
atom).  The quadrature uses this to give every atom its own Simpson mesh:
the mesh is uniform after the change of variables

    u(v) = a + log(1 + v * expm1(mu * L)) / mu,   mu = rate / 5,

where ``rate`` is the observed exponential growth rate of ``||f(u)||`` on
that atom (measured over the second half of the interval, and only
where the norm grows or decays consistently across both halves).  For
``f ~ exp(rate * u)`` this equidistributes the Simpson error term.  Mild
growth, including every low-degree polynomial, keeps the ordinary uniform
composite rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DomainViolationError,
    NonFiniteSampleError,
    OddPanelCountError,
)
from .measure_space import RScalar
from .rn_module import Process, l0_norm

GRADING_DIVISOR = 5.0
MAX_GRADING = 60.0
# below this log-growth over the interval the uniform rule is used; a degree-4
# polynomial grows by 2^4 over its second half, i.e. rate * L = 5.5
GRADING_THRESHOLD = 6.0


@dataclass(frozen=True)
class ParamFn:
    """Process-valued function on ``[a, b]``.

    ``fn`` receives either a float or an array with one parameter per atom.
    Set ``vectorized=False`` for functions that only accept floats; per-atom
    parameters are then served row by row.
    """

    a: float
    b: float
    fn: Callable
    smoothness: str = "C1"
    vectorized: bool = True

    def __call__(self, u) -> Process:
        if np.ndim(u) == 0 or self.vectorized:
            return self.fn(u)
        u = np.asarray(u, dtype=float)
        uniq, inverse = np.unique(u, return_inverse=True)
        outs = [self.fn(float(x)) for x in uniq]
        rows = np.array([outs[k].values[i] for i, k in enumerate(inverse)])
        return outs[0].like(rows)

    def derivative_fn(self, h0: float | None = None) -> "ParamFn":
        """The numerical derivative as a new ParamFn on the same interval."""
        h = h0 if h0 is not None else default_step(self.a, self.b)
        return ParamFn(self.a, self.b, lambda s: derivative(self, s, h)[0], "continuous", vectorized=False)


def default_step(a: float, b: float) -> float:
    return 1e-3 * max(b - a, 1e-3)


def _check_finite(p: Process, u):
    if not np.all(np.isfinite(p.values)):
        raise NonFiniteSampleError(f"integrand is not finite at u={u}")


def _growth_rate(fa: Process, fm: Process, fb: Process, length: float) -> np.ndarray:
    """Log-growth of ``||f||`` over the second half, where ``f`` looks exponential.

    The second half avoids integrands such as ``u * g(u)`` that vanish at
    ``a``.  Grading is dropped (rate 0) when the growth is mild or when the
    two half-interval rates disagree in sign or the later one is much
    flatter; such a pattern comes from a near-root, not from exponential
    growth, and grading would only cost accuracy.
    """
    na, nm, nb = l0_norm(fa).values, l0_norm(fm).values, l0_norm(fb).values
    rate = np.zeros_like(na)
    half = (nm > 0) & (nb > 0)
    rate[half] = np.log(nb[half] / nm[half]) / (0.5 * length)
    first = np.full_like(na, np.inf)
    both = half & (na > 0)
    first[both] = np.log(nm[both] / na[both]) / (0.5 * length)
    grow = (rate > 0) & ((na == 0) | ((first > 0) & (rate >= 0.5 * first)))
    decay = (rate < 0) & (na > 0) & (first < 0) & (first <= 0.5 * rate)
    rate[~(grow | decay)] = 0.0
    rate[np.abs(rate * length) < GRADING_THRESHOLD] = 0.0
    return rate


def _mesh(v: np.ndarray, a: float, length: float, rate: np.ndarray):
    """Per-atom nodes ``u`` and Jacobians ``du/dv`` for uniform ``v`` in [0, 1].

    Returned arrays have shape (len(v), n_atoms).
    """
    mu = np.clip(rate / GRADING_DIVISOR, -MAX_GRADING / length, MAX_GRADING / length)
    v = v[:, None]
    flat = np.abs(mu * length) < 1e-8
    mu_safe = np.where(flat, 1.0, mu)
    e = np.expm1(mu_safe * length)
    u = np.where(flat, a + v * length, a + np.log1p(v * e) / mu_safe)
    jac = np.where(flat, length, e / (mu_safe * (1.0 + v * e)))
    u[0] = a
    u[-1] = a + length
    return u, jac


def _panels_ok(panels: int):
    if panels < 2 or panels % 2:
        raise OddPanelCountError(f"Simpson needs an even panel count >= 2, got {panels}")


def _simpson_v_weights(n: int) -> np.ndarray:
    w = np.full(n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w / (3.0 * n)


def integral_ladder(
    f: ParamFn, a: float, b: float, panels: Sequence[int], mesh: str = "graded"
) -> list[Process]:
    """Composite Simpson approximations of ``integral_a^b f(u) du`` for nested panel counts.

    The integrand is sampled once on the finest mesh; coarser levels reuse
    every ``k``-th sample, so ``max(panels)`` must be an even multiple of each
    entry.  ``mesh`` is ``"graded"`` (per-atom exponential grading) or
    ``"uniform"``.
    """
    panels = [int(p) for p in panels]
    for p in panels:
        _panels_ok(p)
    top = max(panels)
    for p in panels:
        if top % p:
            raise ValueError(f"panel counts must divide {top}, got {p}")
    if a > b:
        raise DomainViolationError(f"need a <= b, got [{a}, {b}]")
    fa = f(a)
    _check_finite(fa, a)
    if a == b:
        zero = fa.like(np.zeros_like(fa.values))
        return [zero for _ in panels]
    fb = f(b)
    _check_finite(fb, b)
    length = b - a
    if mesh == "graded":
        rate = _growth_rate(fa, f(a + 0.5 * length), fb, length)
    elif mesh == "uniform":
        rate = np.zeros(fa.space.n_atoms)
    else:
        raise ValueError(f"unknown mesh {mesh!r}")
    v = np.linspace(0.0, 1.0, top + 1)
    u, jac = _mesh(v, a, length, rate)
    samples = np.empty((top + 1,) + fa.values.shape)
    samples[0], samples[-1] = fa.values, fb.values
    for j in range(1, top):
        fj = f(u[j])
        _check_finite(fj, u[j])
        samples[j] = fj.values
    out = []
    for p in panels:
        k = top // p
        w = _simpson_v_weights(p)[:, None] * jac[::k]
        out.append(fa.like(np.einsum("ja,jat->at", w, samples[::k])))
    return out


def riemann_integral(f: ParamFn, a: float, b: float, panels: int, mesh: str = "graded") -> Process:
    """Composite Simpson approximation of ``integral_a^b f(u) du``."""
    return integral_ladder(f, a, b, [panels], mesh)[0]


def integrate_norm(f: ParamFn, a: float, b: float, panels: int, mesh: str = "graded") -> RScalar:
    """``integral_a^b ||f(u)|| du`` on the same mesh :func:`riemann_integral` would use."""
    _panels_ok(panels)
    fa = f(a)
    if a == b:
        return RScalar(fa.space, np.zeros(fa.space.n_atoms))
    fb = f(b)
    if mesh == "graded":
        rate = _growth_rate(fa, f(0.5 * (a + b)), fb, b - a)
    else:
        rate = np.zeros(fa.space.n_atoms)
    u, jac = _mesh(np.linspace(0.0, 1.0, panels + 1), a, b - a, rate)
    w = _simpson_v_weights(panels)[:, None] * jac
    norms = np.array([l0_norm(f(u[j]) if 0 < j < panels else (fa if j == 0 else fb)).values
                      for j in range(panels + 1)])
    return RScalar(fa.space, np.einsum("ja,ja->a", w, norms))


def derivative(f: ParamFn, s: float, h0: float) -> tuple[Process, RScalar]:
    """Difference quotient with one Richardson step.

    Central stencils in the interior, second-order one-sided stencils at the
    ends of ``[f.a, f.b]``.  The error estimate is the per-atom norm gap
    between the step-``h0`` and step-``h0/2`` quotients.
    """
    if h0 <= 0:
        raise ValueError("h0 must be positive")
    a, b = f.a, f.b
    if not a <= s <= b:
        raise DomainViolationError(f"s={s} outside [{a}, {b}]")
    if s - h0 >= a and s + h0 <= b:
        def quotient(h):
            return (f(s + h) - f(s - h)) / (2.0 * h)
    elif s + 2 * h0 <= b:
        f0 = f(s)

        def quotient(h):
            return (f(s + h) * 4.0 - f0 * 3.0 - f(s + 2 * h)) / (2.0 * h)
    elif s - 2 * h0 >= a:
        f0 = f(s)

        def quotient(h):
            return (f0 * 3.0 - f(s - h) * 4.0 + f(s - 2 * h)) / (2.0 * h)
    else:
        raise DomainViolationError(f"step {h0} does not fit in [{a}, {b}] around s={s}")
    d1 = quotient(h0)
    d2 = quotient(h0 / 2.0)
    richardson = (d2 * 4.0 - d1) / 3.0
    return richardson, l0_norm(d1 - d2)


def lipschitz_sup(f: ParamFn, a: float, b: float, grid_n: int) -> tuple[RScalar, bool]:
    """Supremum of ``||(f(s1) - f(s2)) / (s1 - s2)||`` over pairs of an ``grid_n``-point grid.

    Any chord quotient is a convex combination of the adjacent quotients it
    spans, so the supremum over all pairs equals the maximum over adjacent
    pairs.  ``stable`` reports whether the value moves by less than 5% when
    the grid is refined to ``2 * grid_n - 1`` points.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be >= 2")
    fine = _adjacent_sup(f, a, b, 2 * grid_n - 1)
    coarse = _adjacent_sup(f, a, b, grid_n)
    scale = np.maximum(fine, coarse)
    change = np.divide(np.abs(fine - coarse), scale, out=np.zeros_like(scale), where=scale > 0)
    space = f(a).space
    return RScalar(space, coarse), bool(np.all(change < 0.05))


def _adjacent_sup(f: ParamFn, a: float, b: float, n: int) -> np.ndarray:
    s = np.linspace(a, b, n)
    prev = f(s[0])
    best = np.zeros(prev.space.n_atoms)
    for k in range(1, n):
        cur = f(s[k])
        q = l0_norm(cur - prev).values / (s[k] - s[k - 1])
        best = np.maximum(best, q)
        prev = cur
    return best


def ftc_check(f: ParamFn, a: float, b: float, panels: int, h0: float | None = None, mesh: str = "graded") -> RScalar:
    """Per-atom ``||integral_a^b f'(u) du - (f(b) - f(a))||``."""
    if a == b:
        return RScalar(f(a).space, np.zeros(f(a).space.n_atoms))
    df = f.derivative_fn(h0)
    integral = riemann_integral(df, a, b, panels, mesh)
    return l0_norm(integral - (f(b) - f(a)))


def fubini_gap(g: Callable[[float], RScalar], a: float, b: float, panels: int) -> float:
    """Relative gap between ``E[integral g du]`` and ``integral E[g] du`` (uniform Simpson)."""
    _panels_ok(panels)
    u = np.linspace(a, b, panels + 1)
    w = _simpson_v_weights(panels) * (b - a)
    vals = np.array([g(x).values for x in u])
    probs = g(a).space.probs
    lhs = math.fsum(probs * np.array([math.fsum(w * vals[:, i]) for i in range(probs.size)]))
    rhs = math.fsum(w * np.array([math.fsum(probs * row) for row in vals]))
    scale = max(abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale if scale > 0 else 0.0


def refinement_slopes(
    x: Sequence[float], residuals: np.ndarray, floor: float = 1e-13, last: int = 2
) -> list[float | None]:
    """Per-atom log-log slope of ``residuals`` (levels x atoms) against ``x``.

    Only levels whose residual exceeds ``floor`` enter; the fit uses the
    finest ``last`` such levels.  ``None`` marks atoms whose residual is
    below ``floor`` on fewer than two levels.
    """
    x = np.log(np.asarray(x, dtype=float))
    r = np.asarray(residuals, dtype=float)
    out = []
    for i in range(r.shape[1]):
        keep = np.nonzero(r[:, i] > floor)[0]
        if keep.size < 2:
            out.append(None)
            continue
        keep = keep[-last:] if last else keep
        if keep.size < 2:
            out.append(None)
            continue
        xs, ys = x[keep], np.log(r[keep, i])
        out.append(float(np.polyfit(xs, ys, 1)[0]))
    return out
