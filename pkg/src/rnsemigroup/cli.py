"""Batch driver for the verification suites.

Exit status is 0 when every executed check passed, 1 when any failed and 2
on configuration or I/O errors.  Reports are written whether or not checks
pass.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import scenario as scn
from .calculus import ParamFn, integral_ladder, refinement_slopes
from .cauchy import (
    CauchyProblem,
    check_existence_family,
    check_mild_existence_family,
    check_mild_solution,
    check_strong_solution,
    solve_from_semigroup,
    trajectory_from_function,
    uniqueness_probe,
)
from .errors import ConfigError, ExponentOverflowError, RNSemigroupError
from .example_sde import closed_form_solution, exp_bound_audit, run_example_suite
from .measure_space import RScalar
from .operators import apply
from .report import CheckRecord, SuiteReport, convergence_csv, status_of
from .semigroup import (
    check_axioms,
    check_cas_bound,
    check_lipschitz_CVz,
    fit_exponential_bound,
    generator_record,
    local_bound,
    rel_residual,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _common(p: argparse.ArgumentParser, sweep: bool = False):
    p.add_argument("--scenario", help="scenario JSON document")
    p.add_argument("--report", help="write the canonical JSON report here")
    p.add_argument("--csv", help="write tabular output here")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="override a tolerance")
    p.add_argument("--atoms", type=int, help="number of Gauss-Hermite atoms")
    p.add_argument("--time-nodes", type=int, help="time intervals on [0, t_max] (even)")
    if sweep:
        p.add_argument("--panels", default="32,64,128,256", help="comma-separated Simpson panel counts")
    else:
        p.add_argument("--panels", type=int, help="Simpson panels in the evolution parameter")
    p.add_argument("--horizon", type=float, help="evolution horizon")
    p.add_argument("--seed", type=int, default=0, help="seed for random probes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rnsemigroup", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("verify-semigroup", "semigroup axioms, local bound and exponential-bound fit"),
        ("estimate-generator", "difference-quotient generator estimate against the claimed generator"),
        ("check-family", "existence-family identities, orbit bound and Lipschitz certificate"),
        ("solve-cauchy", "semigroup solution of the Cauchy problem and its checks"),
        ("example61", "full suite on the Gaussian-multiplier example"),
    ):
        _common(sub.add_parser(name, help=help_))
    _common(sub.add_parser("sweep", help="panel-refinement study of the integrated-orbit identity"), sweep=True)
    return parser


def _parse_tols(items) -> dict:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--tol {name}: {value!r} is not a number") from None
    return out


def _document(args) -> dict:
    doc = scn.load(args.scenario) if args.scenario else {}
    doc = copy.deepcopy(doc)
    if args.atoms is not None:
        doc["space"] = {"gauss_hermite": args.atoms}
    if args.time_nodes is not None:
        doc.setdefault("grid", {})["time_nodes"] = args.time_nodes
    if isinstance(args.panels, int):
        doc.setdefault("evolution", {})["panels"] = args.panels
    if args.horizon is not None:
        doc.setdefault("evolution", {})["horizon"] = args.horizon
    tols = _parse_tols(args.tol)
    if tols:
        doc.setdefault("tolerances", {}).update(tols)
    return scn.validate(doc)


def records_csv(rep: SuiteReport) -> str:
    """One row per record: name, status, tolerance, worst residual, then per-atom residuals."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "status", "tol", "worst", *rep.atoms])
    for r in rep.records:
        vals = r.residual.values if isinstance(r.residual, RScalar) else [""] * len(rep.atoms)
        worst = r.worst()
        w.writerow([r.name, r.status, "" if r.tol is None else repr(r.tol), "" if worst is None else repr(worst),
                    *(v if v == "" else repr(float(v)) for v in vals)])
    return buf.getvalue()


# -- subcommands -----------------------------------------------------------------

def cmd_verify_semigroup(sc: scn.Scenario, args) -> tuple[SuiteReport, str | None]:
    cfg = sc.config
    rep = check_axioms(sc.sg, cfg.axiom_grid, sc.probes, cfg.tol["axioms"])
    rep.label = "verify-semigroup"
    bound, stable = local_bound(sc.sg, cfg.horizon, cfg.local_bound_n)
    rep.add(CheckRecord(f"bound.local[l={cfg.horizon:g}]", "locally a.s. bounded: sup_{s in [0,l]} ||V(s)|| is in L0+",
                        status_of(stable), bound, None, metric="sup ||V(s)||", details={"stable": stable}))
    fit = fit_exponential_bound(sc.sg, cfg.axiom_grid)
    rep.add(CheckRecord("bound.fit", "exponentially bounded: ||V(s)|| <= W exp(tau s)",
                        status_of(bool(np.all(fit.valid))), None, None, metric="fit",
                        details={"W": fit.W, "tau": fit.tau, "valid": fit.valid}))
    if sc.is_example:
        rep.extend(exp_bound_audit(sc.example, cfg.axiom_grid, cfg.tol["norm_oracle"]))
    return rep, records_csv(rep)


def cmd_estimate_generator(sc: scn.Scenario, args):
    rep = SuiteReport("estimate-generator", sc.space.labels)
    for name, z in zip(sc.probe_names, sc.probes):
        rep.add(generator_record(sc.sg, z, sc.config.h_seq, sc.config.tol["generator"], name))
    return rep, records_csv(rep)


def cmd_check_family(sc: scn.Scenario, args):
    cfg = sc.config
    s_grid = cfg.axiom_grid[1:]
    rep = SuiteReport("check-family", sc.space.labels)
    V, A, C = sc.sg.V, sc.A, sc.sg.C
    rep.extend(check_mild_existence_family(V, A, C, sc.probes, s_grid, cfg.panels, cfg.tol["quadrature"],
                                           sc.probe_names))
    rep.extend(check_existence_family(V, A, C, sc.probes, s_grid, cfg.panels, cfg.tol["quadrature"],
                                      cfg.tol["commutation"], sc.probe_names))
    for l in cfg.cas_levels:
        rep.extend(check_cas_bound(sc.sg, sc.probes[0], l, tol=cfg.tol["cas"]))
    rep.extend(check_lipschitz_CVz(sc.sg, sc.probes[0], min(1.0, cfg.horizon), cfg.lipschitz_n))
    return rep, records_csv(rep)


def cmd_solve_cauchy(sc: scn.Scenario, args):
    cfg = sc.config
    prob = CauchyProblem(sc.A, sc.y, cfg.horizon)
    solved = solve_from_semigroup(sc.sg, sc.y, "C_of_DA", cfg.horizon)
    rep = SuiteReport("solve-cauchy", sc.space.labels)
    rep.extend(check_strong_solution(prob, solved, cfg.tol["solution"], h0=cfg.deriv_step))
    rep.extend(check_mild_solution(prob, solved, cfg.panels, cfg.tol["solution"]))
    candidate = solved
    if sc.is_example:
        candidate = trajectory_from_function(lambda s: closed_form_solution(sc.example, s), cfg.horizon,
                                             solved.s_nodes.size, "closed_form")
        match = np.max([rel_residual(solved.at(s), candidate.at(s)) for s in solved.s_nodes], axis=0)
        rep.add(CheckRecord("solve.matches_closed_form", "unique solution Y = V(s) C^{-1} y",
                            status_of(bool(np.all(match <= cfg.tol["solve_match"]))), RScalar(sc.space, match),
                            cfg.tol["solve_match"]))
    rep.extend(uniqueness_probe(prob, sc.sg, candidate, cfg.tol["solution"], probes=sc.probes, h0=cfg.deriv_step))
    return rep, solved.to_csv()


def cmd_example61(sc: scn.Scenario, args):
    rep = run_example_suite(sc.example, sc.config)
    return rep, records_csv(rep)


def cmd_sweep(sc: scn.Scenario, args):
    try:
        panels = sorted({int(p) for p in str(args.panels).split(",") if p.strip()})
    except ValueError:
        raise ConfigError(f"--panels expects a comma list of integers, got {args.panels!r}") from None
    if len(panels) < 2 or any(p < 2 or p % 2 for p in panels):
        raise ConfigError("--panels needs at least two even counts >= 2")
    cfg = sc.config
    z = sc.probes[0]
    Cz = apply(sc.sg.C, z)
    f = ParamFn(0.0, cfg.horizon, lambda u: apply(sc.sg.V(u), z))
    res = np.zeros((len(panels), sc.space.n_atoms))
    for s in cfg.axiom_grid[1:]:
        rhs = apply(sc.sg.V(s), z) - Cz
        for k, p in enumerate(panels):
            I = integral_ladder(f, 0.0, s, [p])[0]
            res[k] = np.maximum(res[k], rel_residual(apply(sc.A, I), rhs))
    slopes = refinement_slopes(panels, res, 1e-12, last=2)
    monotone = bool(np.all(np.diff(res, axis=0) <= 0.1 * res[:-1] + 1e-15))
    ok_slope = all(s is None or -4.5 <= s <= -3.5 for s in slopes)
    rep = SuiteReport("sweep", sc.space.labels)
    rep.add(CheckRecord("sweep.item2_refinement", "A int_0^s V(u)z du = V(s)z - Cz", status_of(
        monotone and ok_slope and bool(np.all(res[-1] <= cfg.tol["quadrature"]))),
        RScalar(sc.space, res[-1]), cfg.tol["quadrature"], slope=slopes,
        details={"panels": panels, "monotone": monotone, "residuals": res}))
    return rep, convergence_csv(panels, res, sc.space.labels, slopes)


COMMANDS = {
    "verify-semigroup": cmd_verify_semigroup,
    "estimate-generator": cmd_estimate_generator,
    "check-family": cmd_check_family,
    "solve-cauchy": cmd_solve_cauchy,
    "example61": cmd_example61,
    "sweep": cmd_sweep,
}


def _write(path: str | None, text: str):
    if path:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc}") from None


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _document(args)
        sc = scn.build(doc, seed=args.seed)
        rep, table = COMMANDS[args.command](sc, args)
        outputs = doc.get("outputs", {})
        _write(args.report or outputs.get("report"), rep.to_json() + "\n")
        _write(args.csv or outputs.get("csv"), table)
    except ExponentOverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RNSemigroupError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(rep.to_text())
    return EXIT_OK if rep.passed else EXIT_FAIL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
