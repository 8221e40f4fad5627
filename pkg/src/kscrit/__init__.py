"""Numerical laboratory for the degenerate Keller-Segel system in n >= 3.

Submodules
----------
criterion   threshold constants and the global-existence / blow-up classifier
radial      radial cell-centred grids, densities and integral functionals
potential   radial Newtonian and regularised potentials, interaction energy
energy      free energy, its split, virial and mass-concentration diagnostics
dynamics    explicit finite-volume time stepping with blow-up detection
scenarios   initial data: the small-mass ball example and a fixture library
cli         command line front end (``python -m kscrit``)
"""

from .criterion import (
    Classification,
    CriterionConstants,
    ProblemParams,
    Regime,
    classify_initial_data,
    compute_constants,
    critical_exponents,
    f_eval,
    hls_constant,
    unit_ball_volume,
)
from .radial import (
    DensityField,
    RadialGrid,
    extremal_profile,
    lp_norm,
    make_grid,
    project_profile,
    read_snapshot,
    second_moment,
    write_snapshot,
)
from .potential import (
    PotentialField,
    interaction_energy,
    regularized_potential,
    solve_poisson_radial,
)
from .energy import (
    EnergyReport,
    dm2dt_formula,
    energy_report,
    energy_split,
    f1_lower_bound_check,
    free_energy,
    mass_lower_bound_check,
)
from .dynamics import (
    BlowUpVerdict,
    RunConfig,
    RunReport,
    RunState,
    VerdictKind,
    adapt_dt,
    entropy_production,
    initial_state,
    run,
    step,
)
from .scenarios import (
    SCENARIO_NAMES,
    Example1Params,
    Scenario,
    classify_density,
    example1_density,
    example1_grid,
    example1_thresholds,
    scenario_library,
)

__version__ = "0.1.0"
