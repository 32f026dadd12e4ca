"""The Gaussian-multiplier C-semigroup on ``B^2(R+)`` and its end-to-end suite.

With ``I`` the indicator of ``[0, 1]`` and ``Z`` a standard Gaussian:

* ``H`` multiplies by ``I(t) t Z``;
* ``C = exp(H)`` multiplies by ``exp(I(t) t Z)``;
* ``A = Z H`` multiplies by ``Z^2 I(t) t``;
* ``V(s) = exp(s A) C`` multiplies by ``exp(Z^2 I(t) t s + Z I(t) t)``.

Every operator carries its exponent, so compositions and ``C^{-1}`` are
computed by exponent arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .cauchy import (
    CauchyProblem,
    audit_points,
    check_differentiability_upgrade,
    check_existence_family,
    check_mild_existence_family,
    check_mild_solution,
    check_strong_solution,
    perturbed_trajectory,
    solve_from_semigroup,
    trajectory_from_function,
    uniqueness_probe,
)
from .measure_space import ProbSpace, RScalar, gauss_hermite_space
from .operators import MultOp, apply, compose, exp_op, mult_from_function, op_norm_mult, shift_op
from .report import INFO, CheckRecord, SuiteReport, status_of
from .rn_module import Process, TimeGrid, catalog_process, l0_norm, process_from_spec
from .semigroup import (
    CSemigroup,
    bound_verdict,
    check_axioms,
    check_cas_bound,
    check_lipschitz_CVz,
    generator_record,
    fit_exponential_bound,
    local_bound,
    rel_residual,
    verify_generator_properties,
)

PROBE_NAMES = ("one_on_unit", "ramp", "gaussian_bump")


@dataclass(frozen=True, eq=False)
class ExampleScenario:
    space: ProbSpace
    Z: RScalar
    grid: TimeGrid
    H: MultOp
    C: MultOp
    A: MultOp
    y: Process
    y_label: str

    def V(self, s) -> MultOp:
        return compose(exp_op(self.A, s), self.C, label="V(s)")

    @property
    def semigroup(self) -> CSemigroup:
        return CSemigroup(self.V, self.C, generator=self.A, label="gaussian multiplier")

    def probes(self) -> list[Process]:
        return [catalog_process(n, self.space, self.grid) for n in PROBE_NAMES]


def build_from_space(space: ProbSpace, Z: RScalar, grid: TimeGrid, y_spec=None) -> ExampleScenario:
    """Build the operators for given atoms and ``Z`` values.

    ``y_spec`` is a catalog name or ``{"table": ...}``; ``None`` selects
    ``y = C y0`` with ``y0`` the indicator of ``[0, 1]``, which lies in
    ``C(D(A))`` by construction.
    """
    H = mult_from_function(space, grid, lambda t, unit, z: np.where(unit, t, 0.0) * z, "H", Z)
    C = exp_op(H, 1.0, label="C=exp(H)")
    A = MultOp(space, grid, Z.values[:, None] * H.multiplier, label="A=Z*H")
    zz = mult_from_function(space, grid, lambda t, unit, z: z * z * np.where(unit, t, 0.0), "", Z)
    # two roundings of a triple product may differ by one ulp each
    if not np.allclose(A.multiplier, zz.multiplier, rtol=4 * np.finfo(float).eps, atol=0.0):
        raise AssertionError("A = Z o H fails as a multiplier identity on this grid")
    if y_spec is None:
        y = apply(C, catalog_process("one_on_unit", space, grid))
        label = "C(one_on_unit)"
    else:
        y = process_from_spec(y_spec, space, grid)
        label = y_spec if isinstance(y_spec, str) else "table"
    return ExampleScenario(space, Z, grid, H, C, A, y, label)


def build_example(n_atoms: int = 16, grid: TimeGrid | None = None, y_spec=None) -> ExampleScenario:
    """Gauss-Hermite atomization of ``Z`` with ``n_atoms`` atoms."""
    space, Z = gauss_hermite_space(n_atoms)
    return build_from_space(space, Z, grid if grid is not None else TimeGrid.uniform(), y_spec)


def closed_form_solution(sc: ExampleScenario, s: float) -> Process:
    """``V(s) C^{-1} y``: multiply ``y`` by ``exp(Z^2 I(t) t s)``."""
    if np.ndim(s) == 0 and s < 0:
        raise ValueError("s must be nonnegative")
    return apply(exp_op(sc.A, s), sc.y)


def norm_oracle(Z: RScalar, s: float) -> np.ndarray:
    """``||V(s)|| = exp(max(0, Z^2 s + Z))``: the exponent is linear in ``t`` on ``[0, 1]``."""
    z = Z.values
    return np.exp(np.maximum(0.0, z * z * s + z))


@dataclass
class SuiteConfig:
    horizon: float = 2.0
    panels: int = 256
    h_seq: list = field(default_factory=lambda: [2.0 ** -k for k in range(3, 11)])
    axiom_grid: list = field(default_factory=lambda: [0.25 * k for k in range(9)])
    cas_levels: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    lipschitz_l: float = 1.0
    lipschitz_n: int = 513
    local_bound_n: int = 65
    deriv_step: float = 2.5e-4
    perturbation: float = 0.05
    tol: dict = field(default_factory=lambda: dict(DEFAULT_TOLS))

    def audit(self) -> list[float]:
        return audit_points(self.horizon)


DEFAULT_TOLS = {
    "axioms": 1e-12,
    "generator": 1e-6,
    "quadrature": 1e-8,
    "derivative": 1e-8,
    "algebraic": 1e-12,
    "cas": 1e-10,
    "solution": 1e-8,
    "solve_match": 1e-12,
    "norm_oracle": 1e-12,
    "commutation": 1e-14,
    "perturbation_min": 1e-3,
    "upgrade_one_sided": 1e-6,
}


def _rec(rep: SuiteReport, name, anchor, ok, residual, tol, **kw) -> CheckRecord:
    return rep.add(CheckRecord(name, anchor, status_of(ok), residual, tol, **kw))


def exp_bound_audit(sc: ExampleScenario, s_grid, tol: float = 1e-12) -> SuiteReport:
    """Norm oracle, the literal constant bound (informational), the corrected bound and a fit."""
    sg = sc.semigroup
    space, Z = sc.space, sc.Z
    rep = SuiteReport("exponential_bound", space.labels)
    worst = np.zeros(space.n_atoms)
    for s in s_grid:
        got = op_norm_mult(sc.V(s)).values
        worst = np.maximum(worst, np.abs(got - norm_oracle(Z, s)) / norm_oracle(Z, s))
    _rec(rep, "bound.norm_oracle", "||V(s)|| = exp(max(0, Z^2 s + Z))", bool(np.all(worst <= tol)),
         RScalar(space, worst), tol)

    W_lit, tau = Z.exp(), Z * Z
    holds = bound_verdict(sg, s_grid, W_lit, tau)
    holds0 = bound_verdict(sg, [0.0], W_lit, tau)
    expected = (Z.values >= 0) == holds
    expected0 = (Z.values >= 0) == holds0
    rep.add(CheckRecord("bound.literal_constant", "||V(s)|| <= e^Z e^{Z^2 s} (stated constant)", INFO,
                        None, None, metric="per-atom verdict",
                        details={"holds": holds, "holds_at_s0": holds0,
                                 "fails_on_atoms": [l for l, h in zip(space.labels, holds) if not h]}))
    _rec(rep, "bound.literal_verdict_pattern",
         "stated constant holds exactly on Z >= 0 and fails at s = 0 on Z < 0",
         bool(np.all(expected) and np.all(expected0)), None, None, metric="per-atom verdict",
         details={"Z": Z.values})
    W_fix = RScalar(space, np.exp(np.maximum(Z.values, 0.0)))
    fixed = bound_verdict(sg, s_grid, W_fix, tau)
    _rec(rep, "bound.corrected", "||V(s)|| <= e^{max(Z,0)} e^{Z^2 s}", bool(np.all(fixed)), None, None,
         metric="per-atom verdict", details={"holds": fixed})
    fit = fit_exponential_bound(sg, s_grid)
    _rec(rep, "bound.fit", "exponentially bounded: ||V(s)|| <= W exp(tau s)", bool(np.all(fit.valid)),
         None, None, metric="fit", details={"W": fit.W, "tau": fit.tau, "valid": fit.valid})
    return rep


def run_example_suite(sc: ExampleScenario, config: SuiteConfig | None = None) -> SuiteReport:
    """Every check of the battery on one scenario, aggregated in a fixed order.

    Records named ``control.*`` are negative controls; they pass when the
    injected defect is detected.
    """
    cfg = config if config is not None else SuiteConfig()
    tol = {**DEFAULT_TOLS, **cfg.tol}
    sg = sc.semigroup
    space = sc.space
    probes = sc.probes()
    nonzero = sc.Z.values != 0
    rep = SuiteReport(f"example[{space.n_atoms} atoms]", space.labels)

    # axioms and the V(0) != C control
    rep.extend(check_axioms(sg, cfg.axiom_grid, probes, tol["axioms"]))
    bad = CSemigroup(lambda s: exp_op(sc.H, s), sc.C, label="exp(sH) with claimed C = e^H")
    bad_rec = check_axioms(bad, [0.0, 0.5], probes[:1], tol["axioms"]).get("axiom.identity_at_zero")
    _rec(rep, "control.identity_at_zero", bad_rec.anchor, space.n_atoms == int(np.sum(~nonzero)) or not bad_rec.passed,
         bad_rec.residual, tol["axioms"], details={"detected": not bad_rec.passed})

    # boundedness
    bound, stable = local_bound(sg, cfg.horizon, cfg.local_bound_n)
    expect = norm_oracle(sc.Z, cfg.horizon)
    rel = np.abs(bound.values - expect) / expect
    _rec(rep, f"bound.local[l={cfg.horizon:g}]", "locally a.s. bounded: sup_{s in [0,l]} ||V(s)|| is in L0+",
         stable and bool(np.all(rel <= tol["norm_oracle"])), RScalar(space, rel), tol["norm_oracle"],
         details={"stable": stable, "value": bound})
    rep.extend(exp_bound_audit(sc, cfg.axiom_grid, tol["norm_oracle"]))

    # generator
    for name, z in zip(PROBE_NAMES, probes):
        rep.add(generator_record(sg, z, cfg.h_seq, tol["generator"], name))

    # bounds along the orbit
    z1 = probes[0]
    for l in cfg.cas_levels:
        rep.extend(check_cas_bound(sg, z1, l, tol=tol["cas"]))
        ctrl = check_cas_bound(sg, z1, l, tol=tol["cas"], cAz_scale=0.1)
        flagged = np.zeros(space.n_atoms, dtype=bool)
        for r in ctrl.records:
            flagged |= np.asarray(r.details["violated_atoms"], dtype=bool)
        _rec(rep, f"control.cas_scaled[l={l:g}]", "CAz scaled by 0.1 violates the bound on every atom with Z != 0",
             bool(np.all(flagged[nonzero])), None, None, metric="per-atom verdict",
             details={"flagged": flagged})
    rep.extend(check_lipschitz_CVz(sg, catalog_process("one_on_unit", space, sc.grid), cfg.lipschitz_l,
                                   cfg.lipschitz_n))

    # generator theorem battery
    rep.extend(verify_generator_properties(
        sg, sc.A, probes, cfg.axiom_grid[1:], cfg.panels, tol["quadrature"], tol["algebraic"],
        h0=cfg.deriv_step, probe_names=PROBE_NAMES))

    # existence families
    s_grid = cfg.axiom_grid[1:]
    rep.extend(check_mild_existence_family(sg.V, sc.A, sc.C, probes, s_grid, cfg.panels, tol["quadrature"],
                                           PROBE_NAMES))
    double = sc.A.scaled(2.0, "2A")
    ctrl = check_mild_existence_family(sg.V, double, sc.C, probes[:1], s_grid, cfg.panels, tol["quadrature"])
    ident = ctrl.find("mild_family.identity")[0]
    _rec(rep, "control.mild_family_2A", ident.anchor, not nonzero.any() or not ident.passed,
         ident.residual, tol["quadrature"], details={"detected": not ident.passed})
    rep.extend(check_existence_family(sg.V, sc.A, sc.C, probes, s_grid, cfg.panels, tol["quadrature"],
                                      tol["commutation"], PROBE_NAMES))
    rep.add(shift_commutation_control())
    for s0, t in ((0.5, tol["derivative"]), (0.0, tol["upgrade_one_sided"])):
        rep.extend(check_differentiability_upgrade(sg.V, sc.A, z1, s0, [cfg.deriv_step, 2 * cfg.deriv_step], t))

    # the Cauchy problem
    prob = CauchyProblem(sc.A, sc.y, cfg.horizon)
    closed = trajectory_from_function(lambda s: closed_form_solution(sc, s), cfg.horizon, 33, "closed_form")
    rep.extend(check_strong_solution(prob, closed, tol["solution"], h0=cfg.deriv_step))
    rep.extend(check_mild_solution(prob, closed, cfg.panels, tol["solution"]))
    solved = solve_from_semigroup(sg, sc.y, "C_of_DA", cfg.horizon)
    checkpoints = sorted(set(cfg.audit()) | set(solved.s_nodes.tolist()))
    match = np.max([rel_residual(solved.at(s), closed_form_solution(sc, s)) for s in checkpoints], axis=0)
    _rec(rep, "solve.matches_closed_form", "unique solution Y = V(s) C^{-1} y", bool(np.all(match <= tol["solve_match"])),
         RScalar(space, match), tol["solve_match"], details={"mode": solved.meta["mode"]})
    rep.extend(check_mild_solution(prob, solved, cfg.panels, tol["solution"]))

    pert = perturbed_trajectory(closed, catalog_process("one_on_unit", space, sc.grid), cfg.perturbation)
    pm = check_mild_solution(prob, pert, cfg.panels, tol["solution"], audit=[0.5])
    worst = pm.records[0].residual.values
    _rec(rep, "control.perturbed_mild", pm.records[0].anchor,
         bool(np.all(worst >= tol["perturbation_min"])), RScalar(space, worst), tol["perturbation_min"],
         metric="relative residual must exceed tol", details={"magnitude": cfg.perturbation})

    rep.extend(uniqueness_probe(prob, sg, closed, tol["solution"], probes=probes, h0=cfg.deriv_step))
    up = uniqueness_probe(prob, sg, pert, tol["solution"], probes=probes[:1], h0=cfg.deriv_step)
    diff = up.get("uniqueness.difference")
    _rec(rep, "control.perturbed_uniqueness", diff.anchor, not diff.passed, diff.residual, diff.tol,
         details={"detected": not diff.passed})
    return rep


def shift_commutation_control() -> CheckRecord:
    """A shift in ``t`` does not commute with the multiplier family on a toy grid."""
    space, Z = gauss_hermite_space(2)
    grid = TimeGrid(2.0, 2, 2)
    sc = build_from_space(space, Z, grid)
    A = compose(shift_op(space, grid), sc.A, label="shift o A")
    y = catalog_process("ramp", space, grid)
    rep = check_existence_family(sc.V, A, sc.C, [y], [0.5], panels=8, tol=1e-8)
    comm = rep.find("family.commutation")[0]
    return CheckRecord("control.noncommuting_shift", comm.anchor, status_of(not comm.passed), comm.residual,
                       comm.tol, metric="relative residual must exceed tol", details={"detected": not comm.passed})
