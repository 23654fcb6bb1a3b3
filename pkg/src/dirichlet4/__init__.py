"""Numerical laboratory for the fourth moment of Dirichlet L-functions.

Layers, bottom up: arith (factorization, divisor/character sums),
specfun (Gamma-family functions, Hurwitz zeta, contour quadrature),
characters (character groups and orthogonality), lfunc (L-values and
the shifted approximate functional equation), moments (moment averages
against their arithmetic main terms), divisorlab (divisor-sum identities:
Estermann continuation, Voronoi summation, delta-method pieces), cli
(the dirichlet4 command).
"""

__version__ = "0.1.0"

from .arith import (
    Factorization,
    ShiftTuple,
    divisor_sigma,
    divisors,
    euler_phi,
    factorize,
    kl2,
    kloosterman,
    moebius,
    phi_star,
    q0_of,
    radical,
    ramanujan_sum,
    shifted_sigma,
)
from .characters import (
    CharacterGroup,
    DirichletCharacter,
    character_group,
    gauss_sum,
    orthogonality_residual,
)
from .lfunc import (
    GammaKernelSpec,
    LValueRecord,
    afe_residual,
    completed_lambda,
    fe_residual,
    g_factor,
    l_value,
    l_values_vector,
    v_weight,
    x_factor,
    x_factor4,
)
from .divisorlab import (
    QdpInstance,
    RationalPoint,
    SmoothWindow,
    bilinear_kl_sum,
    divisor_afe_residual,
    estermann_fe_residual,
    estermann_hurwitz,
    estermann_series,
    estermann_series_tail,
    lemma31_residual,
    lemma53_residual,
    qdp_bruteforce,
    qdp_error_bound,
    qdp_mainterm,
    ramanujan_expansion_residual,
    varpi,
    voronoi_residual,
)
from .moments import (
    CjFit,
    MomentReport,
    SharpCutoff,
    WeightSpec,
    empirical_moment,
    empirical_moment_integral,
    extract_cj,
    main_term_pointwise,
    main_term_weighted,
    moment_report,
    z_q,
    zero_shift_main_term,
)

__all__ = [
    "__version__",
    "Factorization",
    "ShiftTuple",
    "divisor_sigma",
    "divisors",
    "euler_phi",
    "factorize",
    "kl2",
    "kloosterman",
    "moebius",
    "phi_star",
    "q0_of",
    "radical",
    "ramanujan_sum",
    "shifted_sigma",
    "CharacterGroup",
    "DirichletCharacter",
    "character_group",
    "gauss_sum",
    "orthogonality_residual",
    "GammaKernelSpec",
    "LValueRecord",
    "afe_residual",
    "completed_lambda",
    "fe_residual",
    "g_factor",
    "l_value",
    "l_values_vector",
    "v_weight",
    "x_factor",
    "x_factor4",
    "QdpInstance",
    "RationalPoint",
    "SmoothWindow",
    "bilinear_kl_sum",
    "divisor_afe_residual",
    "estermann_fe_residual",
    "estermann_hurwitz",
    "estermann_series",
    "estermann_series_tail",
    "lemma31_residual",
    "lemma53_residual",
    "qdp_bruteforce",
    "qdp_error_bound",
    "qdp_mainterm",
    "ramanujan_expansion_residual",
    "varpi",
    "voronoi_residual",
    "CjFit",
    "MomentReport",
    "SharpCutoff",
    "WeightSpec",
    "empirical_moment",
    "empirical_moment_integral",
    "extract_cj",
    "main_term_pointwise",
    "main_term_weighted",
    "moment_report",
    "z_q",
    "zero_shift_main_term",
]
