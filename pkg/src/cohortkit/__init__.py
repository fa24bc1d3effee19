"""Direct and reverse cohort-component population projection.

Point estimates, exact probability laws, moments and coefficients of
variation for projecting an age cohort forward or backward in time through a
tabulated survival function, plus Monte Carlo and brute-force Bayes checks.
"""

from ._backend import kernels as _kernels
from .distribution import (
    BackwardPosterior,
    ForwardDistribution,
    backward_moments,
    backward_pgf,
    backward_pmf,
    forward_pmf,
    make_backward_posterior,
    posterior_oracle,
)
from .errors import AcceptanceStarvation, CohortkitError, DomainError, LifeTableError
from .life_table import (
    LifeTable,
    bundled_life_table,
    conditional_survival,
    load_life_table,
    survival,
)
from .projection import (
    AgeStructure,
    CohortState,
    ProjectionEstimate,
    SweepRow,
    cv_sweep,
    project_backward,
    project_forward,
    project_ladder,
    round_trip,
)
from .simulation import (
    EmpiricalComparison,
    SimConfig,
    simulate_backward_bayes,
    simulate_forward,
    total_variation,
)

__version__ = "0.1.0"

#: name of the kernel backend selected at import ("cython" or "python")
BACKEND = _kernels.NAME
