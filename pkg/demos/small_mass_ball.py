"""Blow-up from arbitrarily small mass.

A uniform ball of mass eps0 and radius ~ 1/K satisfies both blow-up
conditions once K exceeds max(K1, K2).  Smaller masses need tighter balls,
but every positive mass admits one.
"""

from kscrit import ProblemParams, classify_density, example1_density, example1_grid, example1_thresholds

p = ProblemParams(3, 1.25, 1.0)
for eps0 in (10.0, 1.0, 0.1, 0.01):
    e = example1_thresholds(p, eps0)
    rho = example1_density(example1_grid(e), e)
    regime = classify_density(e.params, rho).regime
    print(f"eps0={eps0:<5g} K1={e.K1:.4e} K2={e.K2:.4e} radius={e.radius:.3e} -> {regime.value}")
