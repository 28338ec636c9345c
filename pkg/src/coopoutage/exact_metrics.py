"""Exact outage probability, rate, and duration of the four protocols.

For each transmission scheme (direct, variable-gain amplify-and-forward,
decode-and-forward with repetition coding, and selection decode-and-forward)
the instantaneous capacity outage is a threshold crossing of an equivalent
end-to-end gain process.  This module evaluates the outage probability (OP)
as the CDF of that gain at the threshold, the average outage rate (AOR) as
its downward level-crossing rate via Rice's formula, and the average outage
duration (AOD) as OP / AOR.

The AF expressions involve a one-dimensional integral (OP) and a
two-dimensional integral (AOR) which are evaluated with adaptive
Gauss-Legendre quadrature; everything else is closed form.
"""

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special as _sp

from .channel import MobilityError, Scenario, derive, rayleigh_lcr
from .numerics import (
    ConvergenceError,
    bessel_k1,
    gauss_laguerre,
    gauss_legendre,
    upper_inc_gamma_3_2,
)

__all__ = [
    "Protocol",
    "OutageMetrics",
    "op_direct",
    "aor_direct",
    "op_af",
    "aor_af",
    "prob_u_exceeds",
    "lcr_u",
    "op_df",
    "aor_df",
    "op_sr",
    "aor_sr",
    "sr_switch_probs",
    "metrics",
]

# Equal-parameter detection: the general two-branch formulas develop 0/0
# forms (and catastrophic cancellation) as the parameters approach each
# other, so anywhere inside this relative gap we evaluate the limit branch.
_EQUAL_BRANCH_TOL = 1e-5

# exp(-PSI) ~ 1e-20: integration cutoff for exponentially decaying tails
_PSI = 46.0


class Protocol(Enum):
    """Transmission scheme; the value doubles as the CLI / CSV token."""

    DIRECT = "direct"
    AF = "af"
    DF = "df"
    SR = "sr"

    @property
    def diversity_gain(self) -> int:
        return {Protocol.DIRECT: 1, Protocol.AF: 2, Protocol.DF: 1, Protocol.SR: 2}[self]


@dataclass(frozen=True)
class OutageMetrics:
    """Outage probability, rate (Hz) and mean duration (s) at one operating point.

    aod is None when the rate is zero (no outages, duration undefined);
    otherwise aod * aor == p_out holds by construction.
    """

    p_out: float
    aor: float
    aod: float | None


def _equalish(a: float, b: float) -> bool:
    return abs(a - b) <= _EQUAL_BRANCH_TOL * max(abs(a), abs(b))


def _require_mobility(scenario: Scenario):
    if scenario.dopplers.all_static:
        raise MobilityError("all node Dopplers are zero; outage rate is degenerate")


# ---------------------------------------------------------------------------
# direct transmission


def op_direct(scenario: Scenario) -> float:
    """Outage probability of direct transmission."""
    _, th = derive(scenario)
    return -math.expm1(-th.x0**2 / scenario.gains.omega_x)


def aor_direct(scenario: Scenario) -> float:
    """Average outage rate (Hz) of direct transmission."""
    _require_mobility(scenario)
    ld, th = derive(scenario)
    return rayleigh_lcr(th.x0, scenario.gains.omega_x, ld.sigma2_x)


# ---------------------------------------------------------------------------
# variable-gain AF relaying


def _af_relayed_cdf(a, c1: float, oy: float, oz: float):
    """CDF of the relayed-path power Y^2 Z^2 / (Y^2 + Z^2 + C1) at level a."""
    arg = 2.0 * np.sqrt(a * (a + c1) / (oy * oz))
    cdf = 1.0 - arg * bessel_k1(arg) * np.exp(-a * (1.0 / oy + 1.0 / oz))
    # the closed form is a probability; clip rounding noise at tiny a
    return np.clip(cdf, 0.0, 1.0)


def op_af(scenario: Scenario, tol: float = 1e-8) -> float:
    """Outage probability of variable-gain AF relaying.

    Single integral over the relayed-path power level, evaluated with
    Gauss-Legendre order doubling until successive estimates agree to tol.
    """
    g = scenario.gains
    _, th = derive(scenario)
    g0sq = th.g0**2
    if g0sq == 0.0:
        return 0.0

    def f(a):
        return (
            np.exp(-(g0sq - a) / g.omega_x)
            / g.omega_x
            * _af_relayed_cdf(a, th.c1, g.omega_y, g.omega_z)
        )

    order = 16
    rule = gauss_legendre(order, 0.0, g0sq)
    prev = float(np.sum(rule.weights * f(rule.nodes)))
    while order < 1024:
        order *= 2
        rule = gauss_legendre(order, 0.0, g0sq)
        cur = float(np.sum(rule.weights * f(rule.nodes)))
        if abs(cur - prev) <= tol * max(abs(cur), np.finfo(float).tiny):
            return cur
        prev = cur
    raise ConvergenceError("AF outage probability integral did not converge", (prev, cur))


def _af_rate_integrand(a, t, g0sq, c1, s2x, s2y, s2z, ox, oy, oz):
    """Joint integrand of the AF outage-rate double integral (broadcastable)."""
    at1 = a * t + 1.0
    act1 = at1 + c1 * t
    svar = (
        (g0sq - a) * s2x
        + (a**2 * t**3 * (a + c1) ** 2) / (at1 * act1**2) * s2y
        + a / (at1**2 * act1) * s2z
    )
    kern = at1 * act1 / t**2
    expo = np.exp(
        -a * (1.0 / oy + 1.0 / oz - 1.0 / ox) - (a * t * (a + c1) / oz + 1.0 / (t * oy))
    )
    return np.sqrt(np.maximum(svar, 0.0)) * kern * expo


def aor_af(scenario: Scenario, tol: float = 1e-7, laguerre_check: bool = True) -> float:
    """Average outage rate (Hz) of variable-gain AF relaying.

    The outer integral (over the relayed-path power level a) uses
    Gauss-Legendre on [0, g0^2].  The inner semi-infinite integral spans up
    to ~log10(psi^2 * oy * oz / (a_min * (a_min + c1))) decades of scale, so
    it is evaluated on geometric panels (one Gauss-Legendre rule per decade)
    between the rising exp(-1/(t*oy)) cutoff and the decaying
    exp(-a*t*(a+c1)/oz) cutoff.  Both directions are refined together until
    the result is stable to tol.

    When the two inner scales are close (low SNR) a plain Gauss-Laguerre
    evaluation of the inner integral is computed at the median outer node as
    an independent consistency check; a RuntimeWarning flags gross
    disagreement.  At high SNR the scales separate by many decades and the
    unscaled Laguerre rule is not a meaningful monitor, so the check is
    skipped there.
    """
    _require_mobility(scenario)
    g = scenario.gains
    ld, th = derive(scenario)
    g0sq = th.g0**2
    if g0sq == 0.0:
        return 0.0
    ox, oy, oz = g.omega_x, g.omega_y, g.omega_z
    c1 = th.c1
    args = (g0sq, c1, ld.sigma2_x, ld.sigma2_y, ld.sigma2_z, ox, oy, oz)

    # The integrand carries a*log(a) style behaviour at a -> 0, so the outer
    # variable is paneled geometrically as well; the head [0, a_head] is
    # dropped (the integrand is bounded there, relative weight ~ 1e-10).
    a_head = 1e-10 * g0sq
    t_lo = 1.0 / (_PSI * oy)
    t_hi = _PSI * oz / (a_head * (a_head + c1))

    def panel_rule(lo: float, hi: float, n_pan: int, m: int):
        edges = np.geomspace(lo, hi, n_pan + 1)
        nodes, weights = [], []
        for left, right in zip(edges[:-1], edges[1:]):
            r = gauss_legendre(m, left, right)
            nodes.append(r.nodes)
            weights.append(r.weights)
        return np.concatenate(nodes), np.concatenate(weights)

    n_pan_a = max(1, math.ceil(math.log10(g0sq / a_head)))
    n_pan_t = max(1, math.ceil(math.log10(t_hi / t_lo)))

    def evaluate(m: int) -> float:
        a, wa = panel_rule(a_head, g0sq, n_pan_a, m)
        t, wt = panel_rule(t_lo, t_hi, n_pan_t, m)
        f = _af_rate_integrand(a[:, None], t[None, :], *args)
        return float(wa @ (f @ wt))

    prev = evaluate(8)
    cur = prev
    converged = False
    for m in (16, 32, 64, 96):
        cur = evaluate(m)
        if abs(cur - prev) <= tol * max(abs(cur), np.finfo(float).tiny):
            converged = True
            break
        prev = cur
    if not converged:
        raise ConvergenceError("AF outage rate integral did not converge", (prev, cur))

    if laguerre_check and t_hi / t_lo < 1e4:
        # the unscaled Laguerre rule is only a meaningful monitor when the
        # inner rising/decaying scales overlap (low to moderate SNR)
        a_star = 0.5 * g0sq
        t, wt = panel_rule(t_lo, t_hi, n_pan_t, 64)
        lag = gauss_laguerre(64)
        j_lag = float(
            np.sum(lag.weights * np.exp(lag.nodes) * _af_rate_integrand(a_star, lag.nodes, *args))
        )
        j_pan = float(_af_rate_integrand(a_star, t, *args) @ wt)
        if abs(j_lag - j_pan) > 1e-2 * max(abs(j_pan), np.finfo(float).tiny):
            warnings.warn(
                "Gauss-Laguerre check of the AF rate inner integral disagrees "
                f"({j_lag:.4e} vs {j_pan:.4e})",
                RuntimeWarning,
                stacklevel=2,
            )

    pref = math.sqrt(2.0 / math.pi) / (ox * oy * oz) * math.exp(-g0sq / ox)
    return pref * cur


# ---------------------------------------------------------------------------
# DF relaying


def prob_u_exceeds(g0: float, omega_x: float, omega_z: float) -> float:
    """Pr{sqrt(X^2 + Z^2) > g0} for independent Rayleigh X, Z."""
    if g0 < 0.0:
        raise ValueError("g0 must be nonnegative")
    if g0 == 0.0:
        return 1.0
    g0sq = g0 * g0
    if _equalish(omega_x, omega_z):
        return math.exp(-g0sq / omega_x) * (1.0 + g0sq / omega_x)
    return (
        omega_x * math.exp(-g0sq / omega_x) - omega_z * math.exp(-g0sq / omega_z)
    ) / (omega_x - omega_z)


def _i32_series(w: float, s: float) -> float:
    """sum_k (-w)^k (s^{k+3/2} - 1) / (k! (k+3/2)), the entire-function form of
    w^{-3/2} [Gamma(3/2, w) - Gamma(3/2, s*w)].  Accurate for |w|*max(1,s) <~ 2."""
    total = 0.0
    term_pow = 1.0  # (-w)^k / k!
    s32 = s * math.sqrt(s)
    spow = s32
    for k in range(0, 60):
        contrib = term_pow * (spow - 1.0) / (k + 1.5)
        total += contrib
        if abs(contrib) < 1e-17 * max(abs(total), 1e-300):
            break
        term_pow *= -w / (k + 1.0)
        spow *= s
    return total


def _i32_quadrature(w: float, s: float, log_pref: float) -> float:
    """int_1^s sqrt(t) exp(log_pref + w*(1 - t)) dt by Gauss-Legendre doubling.

    Integrates in the shifted variable tau = +-(t - 1), so the exponent is
    log_pref - w*direction*tau with |w*tau| bounded by the physical
    exponent gap: no cancellation and no overflow for arbitrarily large
    |w|.  The sign of the result carries s < 1.
    """
    span = abs(s - 1.0)
    sign = 1.0 if s >= 1.0 else -1.0

    def f(tau):
        return np.sqrt(1.0 + sign * tau) * np.exp(log_pref - w * sign * tau)

    order = 16
    rule = gauss_legendre(order, 0.0, span)
    prev = float(np.sum(rule.weights * f(rule.nodes)))
    while order < 2048:
        order *= 2
        rule = gauss_legendre(order, 0.0, span)
        cur = float(np.sum(rule.weights * f(rule.nodes)))
        if abs(cur - prev) <= 1e-13 * max(abs(cur), np.finfo(float).tiny):
            return sign * cur
        prev = cur
    raise ConvergenceError("auxiliary crossing-rate integral did not converge", (prev, cur))


def _gamma_3_2_scaled(w: float) -> float:
    """e^w * Gamma(3/2, w) for w >= 0, overflow free.

    Same closed identity as upper_inc_gamma_3_2 with the exponential
    factored out: (sqrt(pi)/2) * erfcx(sqrt(w)) + sqrt(w).
    """
    return 0.5 * math.sqrt(math.pi) * float(_sp.erfcx(math.sqrt(w))) + math.sqrt(w)


def lcr_u(g0: float, omega_x: float, omega_z: float, sigma2_x: float, sigma2_z: float) -> float:
    """Downward level-crossing rate (Hz) of U(t) = sqrt(X^2(t) + Z^2(t)).

    X and Z are independent Rayleigh processes with mean squares omega_x,
    omega_z and gain-derivative variances sigma2_x, sigma2_z.  The general
    closed form uses the upper incomplete gamma function; the removable
    equal-parameter limits are evaluated by their own stable branches.
    """
    if g0 < 0.0:
        raise ValueError("g0 must be nonnegative")
    if g0 == 0.0:
        return 0.0
    g0sq = g0 * g0
    sx = math.sqrt(sigma2_x)
    sz = math.sqrt(sigma2_z)
    omega_equal = _equalish(omega_x, omega_z)
    sigma_equal = _equalish(sigma2_x, sigma2_z)

    if omega_equal and sigma_equal:
        return math.sqrt(2.0 / math.pi) * sx * g0sq * g0 * math.exp(-g0sq / omega_x) / omega_x**2
    if omega_equal:
        # factored (sz^3 - sx^3)/(sz^2 - sx^2); no cancellation
        ratio = (sz * sz + sz * sx + sx * sx) / (sz + sx)
        return (
            4.0
            * g0sq
            * g0
            / (3.0 * math.sqrt(2.0 * math.pi))
            * math.exp(-g0sq / omega_x)
            / omega_x**2
            * ratio
        )
    if sigma_equal:
        # limit sigma_z -> sigma_x of the general form at unequal omegas;
        # note omega_x * omega_z * delta == omega_x - omega_z exactly
        delta = (omega_x - omega_z) / (omega_x * omega_z)
        if abs(g0sq * delta) < 1.0:
            gap = math.exp(-g0sq / omega_x) * (-math.expm1(-g0sq * delta))
        else:
            gap = math.exp(-g0sq / omega_x) - math.exp(-g0sq / omega_z)
        return math.sqrt(2.0 / math.pi) * sx * g0 * gap / (omega_x - omega_z)

    w = g0sq * (omega_x - omega_z) / (omega_x * omega_z) * sigma2_x / (sigma2_z - sigma2_x)
    s = sigma2_z / sigma2_x
    coef = math.sqrt(2.0 / math.pi) * (sx**3 / (sigma2_z - sigma2_x)) / (omega_x * omega_z) * g0sq * g0
    if abs(w) * max(1.0, s) <= 2.0:
        return coef * math.exp(w - g0sq / omega_x) * _i32_series(w, s)
    if 0.0 < w and w * max(1.0, s) <= 200.0:
        i32 = (upper_inc_gamma_3_2(w) - upper_inc_gamma_3_2(s * w)) / w**1.5
        return coef * math.exp(w - g0sq / omega_x) * i32
    if w > 0.0:
        # exponentially rescaled form: e^{-g0^2/ox} e^{(1-s)w} = e^{-g0^2/oz}
        # exactly, so neither factor can overflow for any parameters
        diff = math.exp(-g0sq / omega_x) * _gamma_3_2_scaled(w) - math.exp(
            -g0sq / omega_z
        ) * _gamma_3_2_scaled(s * w)
        return coef * diff / w**1.5
    # w < 0: keep every exponent at or below the physical one
    return coef * _i32_quadrature(w, s, log_pref=-g0sq / omega_x)


def op_df(scenario: Scenario) -> float:
    """Outage probability of DF relaying (repetition coding, full decoding)."""
    g = scenario.gains
    _, th = derive(scenario)
    g0sq = th.g0**2
    return 1.0 - math.exp(-g0sq / g.omega_y) * prob_u_exceeds(th.g0, g.omega_x, g.omega_z)


def aor_df(scenario: Scenario) -> float:
    """Average outage rate (Hz) of DF relaying."""
    _require_mobility(scenario)
    g = scenario.gains
    ld, th = derive(scenario)
    n_y = rayleigh_lcr(th.g0, g.omega_y, ld.sigma2_y)
    n_u = lcr_u(th.g0, g.omega_x, g.omega_z, ld.sigma2_x, ld.sigma2_z)
    p_u = prob_u_exceeds(th.g0, g.omega_x, g.omega_z)
    p_y = math.exp(-th.g0**2 / g.omega_y)
    return n_y * p_u + n_u * p_y


# ---------------------------------------------------------------------------
# selection DF relaying


def sr_switch_probs(g0: float, omega_x: float, omega_z: float) -> tuple[float, float]:
    """Joint probabilities of the two relay-switching crossing events.

    Returns (Pr{sqrt(2) X > g0 and U < g0}, Pr{sqrt(2) X < g0 and U > g0})
    for independent Rayleigh X, Z with U = sqrt(X^2 + Z^2).
    """
    if g0 < 0.0:
        raise ValueError("g0 must be nonnegative")
    if g0 == 0.0:
        return 0.0, 0.0
    g0sq = g0 * g0
    if _equalish(omega_x, omega_z):
        u = g0sq / (2.0 * omega_x)
        # exp(-u) - (1 + u) exp(-2u) rewritten cancellation free
        p3 = math.exp(-2.0 * u) * (math.expm1(u) - u)
        p4 = u * math.exp(-2.0 * u)
        return p3, p4
    e_half = math.exp(-0.5 * g0sq * (1.0 / omega_x + 1.0 / omega_z))
    p3 = (
        math.exp(-g0sq / (2.0 * omega_x))
        - omega_z / (omega_z - omega_x) * e_half
        + omega_x / (omega_z - omega_x) * math.exp(-g0sq / omega_x)
    )
    p4 = omega_z / (omega_x - omega_z) * (e_half - math.exp(-g0sq / omega_z))
    return max(p3, 0.0), max(p4, 0.0)


def op_sr(scenario: Scenario) -> float:
    """Outage probability of selection DF relaying."""
    g = scenario.gains
    _, th = derive(scenario)
    g0sq = th.g0**2
    p_y_le = -math.expm1(-th.y0**2 / g.omega_y)
    p_2x_le = -math.expm1(-g0sq / (2.0 * g.omega_x))
    p_u_le = 1.0 - prob_u_exceeds(th.g0, g.omega_x, g.omega_z)
    return p_2x_le * p_y_le + p_u_le * (1.0 - p_y_le)


def aor_sr(scenario: Scenario) -> float:
    """Average outage rate (Hz) of selection DF relaying.

    Sums the four downward-crossing mechanisms: the combined direct gain
    falling through the threshold while the relay is off, the relayed gain
    falling through while it is on, and the two relay on/off switching
    events that land the equivalent gain below the threshold.
    """
    _require_mobility(scenario)
    g = scenario.gains
    ld, th = derive(scenario)
    p_y_le = -math.expm1(-th.y0**2 / g.omega_y)
    p_y_gt = 1.0 - p_y_le
    n_2x = rayleigh_lcr(th.g0 / math.sqrt(2.0), g.omega_x, ld.sigma2_x)
    n_u = lcr_u(th.g0, g.omega_x, g.omega_z, ld.sigma2_x, ld.sigma2_z)
    n_y = rayleigh_lcr(th.y0, g.omega_y, ld.sigma2_y)
    p3, p4 = sr_switch_probs(th.g0, g.omega_x, g.omega_z)
    return n_2x * p_y_le + n_u * p_y_gt + n_y * (p3 + p4)


# ---------------------------------------------------------------------------
# dispatch


_OP = {
    Protocol.DIRECT: op_direct,
    Protocol.AF: op_af,
    Protocol.DF: op_df,
    Protocol.SR: op_sr,
}
_AOR = {
    Protocol.DIRECT: aor_direct,
    Protocol.AF: aor_af,
    Protocol.DF: aor_df,
    Protocol.SR: aor_sr,
}


def metrics(scenario: Scenario, protocol: Protocol) -> OutageMetrics:
    """Exact OP, AOR and AOD for one protocol at one operating point."""
    p_out = _OP[protocol](scenario)
    aor = _AOR[protocol](scenario)
    aod = p_out / aor if aor > 0.0 else None
    return OutageMetrics(p_out=p_out, aor=aor, aod=aod)
