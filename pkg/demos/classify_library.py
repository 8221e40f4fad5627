"""Classify the built-in scenarios at several masses.

Each Gaussian or ball scenario is built so that its regime does not depend
on the mass; the table shows the regime that comes out of the classifier
next to the one the scenario was designed for.
"""

from kscrit import ProblemParams, scenario_library

for M0 in (1.0, 50.0, 1000.0):
    print(f"mass {M0:g}")
    for name, sc in scenario_library(ProblemParams(3, 1.25, M0), cells=1024).items():
        cls = sc.classify()
        print(f"   {name:18s} {cls.regime.value:22s} expected {sc.expected.value}")
