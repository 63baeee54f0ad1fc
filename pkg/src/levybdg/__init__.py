"""Simulation and verification of moment inequalities for jump integrals."""

from .convex import (
    ConjugatePair,
    ConvexFunction,
    c_star,
    check_identities,
    conjugate,
    growth_constant,
    power_phi,
)
from .engine import IntegrandSpec
from .inequalities import (
    BanachModel,
    ConstantsTable,
    InequalityReport,
    compute_m0,
    constants,
    mc_verify_corollary,
    mc_verify_i,
    mc_verify_ii,
    mc_verify_iii,
)
from .integrator import (
    IntegralPath,
    StepIntegrand,
    integrate,
    jump_power_sum,
    nu_power_integral,
    sup_norm,
)
from .prm import (
    LevyTriplet,
    MarkMeasure,
    PRMPath,
    cf_check,
    jumps,
    levy_path,
    poisson_central_moment,
    sample_prm,
    truncate,
)

__version__ = "0.1.0"

__all__ = [
    "BanachModel",
    "ConjugatePair",
    "ConstantsTable",
    "ConvexFunction",
    "InequalityReport",
    "IntegralPath",
    "IntegrandSpec",
    "LevyTriplet",
    "MarkMeasure",
    "PRMPath",
    "StepIntegrand",
    "c_star",
    "cf_check",
    "check_identities",
    "compute_m0",
    "conjugate",
    "constants",
    "growth_constant",
    "integrate",
    "jump_power_sum",
    "jumps",
    "levy_path",
    "mc_verify_corollary",
    "mc_verify_i",
    "mc_verify_ii",
    "mc_verify_iii",
    "nu_power_integral",
    "poisson_central_moment",
    "power_phi",
    "sample_prm",
    "sup_norm",
    "truncate",
]
