"""Outage probability, rate, and duration of cooperative links with mobile nodes.

Analytical expressions (exact and high-SNR asymptotic) for direct,
amplify-and-forward, decode-and-forward, and selection decode-and-forward
transmission over mobile-to-mobile Rayleigh fading, plus an independent
sum-of-sinusoids Monte Carlo oracle and a CSV-emitting CLI.
"""

from .asym_metrics import AsymMetrics, Table1System, asym, op_to_aod, op_to_aor, table1_symmetric
from .channel import (
    LinkDerived,
    LinkGains,
    MobilityError,
    NodeDopplers,
    Scenario,
    Thresholds,
    derive,
    rayleigh_cdf,
    rayleigh_lcr,
)
from .exact_metrics import (
    OutageMetrics,
    Protocol,
    aor_af,
    aor_df,
    aor_direct,
    aor_sr,
    lcr_u,
    metrics,
    op_af,
    op_df,
    op_direct,
    op_sr,
    prob_u_exceeds,
)
from .mc_sim import (
    EmpiricalMetrics,
    FadingTrace,
    TraceConfig,
    equivalent_gain,
    estimate,
    gen_m2m_rayleigh,
    validate,
)
from .numerics import (
    ConvergenceError,
    QuadratureRule,
    bessel_k0,
    bessel_k1,
    erfc,
    gauss_laguerre,
    gauss_legendre,
    integrate_semi_infinite,
    upper_inc_gamma_3_2,
)

__version__ = "0.1.0"
