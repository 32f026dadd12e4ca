"""The Cauchy problem dW/ds = A W: closed form, semigroup solution, and a forged candidate.

Run: python demos/04_cauchy_uniqueness.py
"""

from rnsemigroup import (
    CauchyProblem,
    build_example,
    check_mild_solution,
    check_strong_solution,
    closed_form_solution,
    perturbed_trajectory,
    solve_from_semigroup,
    trajectory_from_function,
    uniqueness_probe,
)

sc = build_example(8)
prob = CauchyProblem(sc.A, sc.y, 2.0)

# %% The closed form multiplies y by exp(Z^2 I(t) t s).
closed = trajectory_from_function(lambda s: closed_form_solution(sc, s), 2.0, 33, "closed_form")
print(check_strong_solution(prob, closed).to_text())
print()
print(check_mild_solution(prob, closed).to_text())

# %% The semigroup builds the same trajectory as V(s) C^{-1} y.
solved = solve_from_semigroup(sc.semigroup, sc.y, "C_of_DA", 2.0)
print("\ncondition of C per atom:", [f"{c:.2e}" for c in solved.meta["condition"]])

# %% A 5% bump near s = 0.5 keeps W(0) but breaks the integral equation.
forged = perturbed_trajectory(closed, sc.probes()[0], 0.05)
print()
print(check_mild_solution(prob, forged, audit=[0.5]).to_text())
print()
print(uniqueness_probe(prob, sc.semigroup, forged).to_text())
