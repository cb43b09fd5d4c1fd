"""Bouligand and Ursescu cones from distance quotients.

Run: python3 demos/tangent_cones.py
"""
import numpy as np

from tangentcalc import Polyhedron, Sequence1D, SequenceSet
from tangentcalc.geometry import polyhedral_tangent_oracle, sphere_grid
from tangentcalc.tangent import tangent_decisions

# the cone {y >= |x|} at its apex: both cones equal the set itself
K = Polyhedron([[1.0, -1.0], [-1.0, -1.0]], [0.0, 0.0])
T = polyhedral_tangent_oracle(K, [0, 0])
print("direction            B    U    exact")
for u in sphere_grid(2, 8):
    d = tangent_decisions(K, [0, 0], u)
    print(f"{np.round(u, 3)!s:20} {d['B'].verdict!s:4} {d['U'].verdict!s:4} {T.contains(u)}")

# {0} u {4^-k}: the gaps are a fixed fraction of t, so the quotient keeps
# returning to 1/2 while dipping to 0 at the terms
D = SequenceSet(Sequence1D("4^(-k)"))
d = tangent_decisions(D, [0.0], [1.0])
print("\ngeometric set at 0, direction +1")
print("  B:", d["B"].verdict, " U:", d["U"].verdict, " tail max:", round(d["U"].limsup_est, 4),
      " oscillation:", d["U"].oscillating)

# {0} u {1/k}: gaps are o(t), so the quotient dies out and U is IN as well
H = SequenceSet(Sequence1D("1/k"))
d = tangent_decisions(H, [0.0], [1.0])
print("harmonic set at 0, direction +1")
print("  B:", d["B"].verdict, " U:", d["U"].verdict, " tail max:", d["U"].limsup_est)
