"""Subregularity moduli and the coderivative condition.

Run: python3 demos/regularity_moduli.py
"""
from tangentcalc import FullSpace, Singleton
from tangentcalc.expr import SmoothMap
from tangentcalc.regularity import coderivative_condition_estimate, subregularity_modulus

for text in ("2*x", "x^2", "x^3 + x"):
    g = SmoothMap(text, ["x"])
    est = subregularity_modulus(g, [0.0], FullSpace(1), solution_set=Singleton([0.0]))
    c = coderivative_condition_estimate(g, FullSpace(1), [0.0], radius=0.01)
    mod = est.modulus_est if est.divergent else f"{est.modulus_est:.4g}"
    trace = ", ".join(f"{v:.3g}" for _, v in est.modulus_trace)
    print(f"g = {text:8}  modulus {mod:10}  c_hat {c.modulus_est:.3g}   trace [{trace}]")
