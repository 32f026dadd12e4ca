"""Recovering the generator from difference quotients, with and without Richardson.

Run: python demos/02_generator_richardson.py
"""

import numpy as np

from rnsemigroup import apply, build_example, estimate_generator, l0_norm

sc = build_example(4)
z = sc.probes()[1]
exact = apply(sc.A, z)
h = [2.0 ** -k for k in range(3, 11)]

# %% Raw quotients C^{-1}(V(h)z - Cz)/h converge linearly.
est = estimate_generator(sc.semigroup, z, h)
print("order detected:", est.order)
print(f"{'h':>10} " + " ".join(f"{lab:>11}" for lab in sc.space.labels))
Cinv, _ = sc.semigroup.inverse_of_C()
Cz = apply(sc.C, z)
for hk in h:
    q = apply(Cinv, (apply(sc.V(hk), z) - Cz) / hk)
    err = l0_norm(q - exact).values
    print(f"{hk:10.2e} " + " ".join(f"{e:11.3e}" for e in err))

# %% The full tableau removes h, h^2, ... in turn.
err = l0_norm(est.value - exact).values
print("\nafter Richardson:", " ".join(f"{e:.3e}" for e in err))
print("pre slopes: ", np.round([s for s in est.slope_pre if s is not None], 3))
print("post slopes:", np.round([s for s in est.slope_post if s is not None], 3))
