"""First-passage reward densities for Markov chains with random transition rewards."""

from .continuous import (
    QuadratureGrid,
    SampledDensity,
    conv_riemann_left,
    conv_riemann_right,
    conv_romberg,
    conv_trapezoid,
    dvc,
    solve_jacobi_continuous,
    solve_power_continuous,
)
from .direct import solve_ge, solve_lu_approx
from .iterative import (
    IterationConfig,
    bounded_density,
    solve_gauss_seidel,
    solve_jacobi,
    solve_power_approx,
    solve_power_exact,
)
from .model import (
    ReachabilitySystem,
    Smrm,
    SolveReport,
    Termination,
    density_of,
    preprocess,
    reach_probabilities,
    validate,
)
from .rewards import (
    Binomial,
    DiracZero,
    DiscreteGumbel,
    DiscreteWeibull,
    ExplicitLattice,
    Exponential,
    Geometric,
    RewardDist,
    UniformMixture,
    WeibullCont,
)

__version__ = "0.1.0"
