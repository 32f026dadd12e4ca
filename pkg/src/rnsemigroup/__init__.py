"""C-semigroups on random normed modules over finite probability spaces."""

from .calculus import ParamFn, derivative, integral_ladder, lipschitz_sup, riemann_integral
from .cauchy import (
    CauchyProblem,
    Trajectory,
    check_mild_solution,
    check_strong_solution,
    perturbed_trajectory,
    solve_from_semigroup,
    trajectory_from_function,
    uniqueness_probe,
)
from .example_sde import ExampleScenario, SuiteConfig, build_example, closed_form_solution, run_example_suite
from .measure_space import ProbSpace, RScalar, gauss_hermite_space, make_space
from .operators import ModOp, MultOp, apply, compose, exp_op, invert_mult, op_norm_mult
from .report import CheckRecord, SuiteReport
from .rn_module import Process, TimeGrid, l0_norm
from .semigroup import CSemigroup, check_axioms, estimate_generator, verify_generator_properties

__all__ = [
    "CSemigroup", "CauchyProblem", "CheckRecord", "ExampleScenario", "ModOp", "MultOp", "ParamFn",
    "ProbSpace", "Process", "RScalar", "SuiteConfig", "SuiteReport", "TimeGrid", "Trajectory", "apply",
    "build_example", "check_axioms", "check_mild_solution", "check_strong_solution", "closed_form_solution",
    "compose", "derivative", "estimate_generator", "exp_op", "gauss_hermite_space", "integral_ladder",
    "invert_mult", "l0_norm", "lipschitz_sup", "make_space", "op_norm_mult", "perturbed_trajectory",
    "riemann_integral", "run_example_suite", "solve_from_semigroup", "trajectory_from_function",
    "uniqueness_probe", "verify_generator_properties",
]
