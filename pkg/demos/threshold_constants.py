"""Threshold constants across dimensions and exponents.

For each admissible (n, m) the free-energy threshold F* and the critical
norm threshold are printed, together with the sharp HLS constant they are
built from.  Run with ``python3 demos/threshold_constants.py``.
"""

import numpy as np

from kscrit import ProblemParams, compute_constants, critical_exponents, hls_constant

for n in (3, 4, 5, 6):
    lo, hi = critical_exponents(n)
    print(f"n={n}: m in ({lo:.4f}, {hi:.4f}), HLS constant {hls_constant(n):.12f}")
    for m in np.linspace(lo, hi, 6)[1:-1]:
        c = compute_constants(ProblemParams(n, float(m), 1.0))
        print(f"   m={m:.4f}  s*={c.s_star:.6g}  F*={c.f_star:.6g}  norm threshold={c.threshold_norm:.6g}")
