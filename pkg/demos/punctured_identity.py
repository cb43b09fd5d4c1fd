"""The identity map with its values removed at x = 1/k.

The graph's closure is the diagonal, so contingent and adjacent derivatives
at the origin are the identity, while the Dini-type derivative is empty: any
sequence u_n -> 0 can be pushed onto a puncture.

Run: python3 demos/punctured_identity.py
"""
import numpy as np

from tangentcalc.setvalued import (classify_differentiability, default_direction_grid,
                                   derivative_decisions, dini_membership)
from tangentcalc.verify import load_instance, run_suite
from tangentcalc.verify.instance import named_map

F = named_map("example31")
at = ([0.0], [0.0])
for v in (1.0, 1.5):
    d = derivative_decisions(F, at, [1.0], [v])
    print(f"v = {v}:  contingent {d['B'].verdict}, adjacent {d['U'].verdict}")

print("Dini derivative at u = 0:",
      {float(v): str(dini_membership(F, at, [0.0], [v]).verdict) for v in np.linspace(-1, 1, 5)})

c = classify_differentiability(F, at, default_direction_grid(1, 1))
print("proto-differentiable:", c.proto, " semi-differentiable:", c.semi)

# the sum rule F + F still holds, with the subregularity premise estimated numerically
rep = run_suite(load_instance("example31"), "sum_rule")
print(rep.summary_line())
print("  subregularity estimate:", rep.prechecks["subregularity"]["modulus_est"])
