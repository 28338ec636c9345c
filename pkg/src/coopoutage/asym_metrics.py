"""High-SNR closed forms for outage probability, rate, and duration.

As the transmit SNR grows the outage threshold of every protocol tends to
zero and the exact expressions collapse to simple power laws: the outage
probability decays with log-log slope -d (d the protocol's diversity
gain), the outage rate with slope -(d - 1/2), and the outage duration with
slope -1/2 regardless of d.  This module evaluates those closed forms, the
symmetric-network table of coefficients (including a 1x2 SIMO maximum
ratio combining baseline), and the rate/duration versus outage-probability
power laws obtained by eliminating the SNR.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import MobilityError, Scenario, derive
from .exact_metrics import Protocol

__all__ = [
    "AsymMetrics",
    "Table1System",
    "asym",
    "table1_symmetric",
    "op_to_aor",
    "op_to_aod",
    "fit_loglog_slope",
]

_SQRT_PI = math.sqrt(math.pi)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class AsymMetrics:
    """High-SNR approximations plus the log-log decay slopes they obey."""

    p_out: float
    aor: float
    aod: float
    slope_op: float
    slope_aor: float
    slope_aod: float


class Table1System(Enum):
    """Systems covered by the symmetric-network coefficient table."""

    DIRECT = "direct"
    SIMO_1X2 = "simo-1x2"
    AF = "af"
    DF = "df"
    SR = "sr"

    @property
    def diversity_gain(self) -> int:
        return {
            Table1System.DIRECT: 1,
            Table1System.SIMO_1X2: 2,
            Table1System.AF: 2,
            Table1System.DF: 1,
            Table1System.SR: 2,
        }[self]


def _ratio3(u: float, v: float) -> float:
    """(u^3 - v^3) / (u^2 - v^2) in factored form; limit 3u/2 at u == v."""
    return (u * u + u * v + v * v) / (u + v)


def _coefficients(scenario: Scenario, protocol: Protocol) -> tuple[float, float, int]:
    """(p, n, d) with OP ~ p * thr^(2d) and AOR ~ n * thr^(2d - 1).

    thr is the protocol's outage threshold (x0 for direct, g0 otherwise),
    so both coefficients depend only on the gains and Dopplers.
    """
    if scenario.dopplers.all_static:
        raise MobilityError("all node Dopplers are zero; outage rate is degenerate")
    g = scenario.gains
    ld, _ = derive(scenario)
    sx = math.sqrt(ld.sigma2_x)
    sy = math.sqrt(ld.sigma2_y)
    sz = math.sqrt(ld.sigma2_z)
    ox, oy, oz = g.omega_x, g.omega_y, g.omega_z
    if protocol is Protocol.DIRECT:
        return 1.0 / ox, math.sqrt(2.0 * ld.sigma2_x / math.pi) / ox, 1
    if protocol is Protocol.DF:
        return 1.0 / oy, math.sqrt(2.0 * ld.sigma2_y / math.pi) / oy, 1
    if protocol is Protocol.AF:
        p = (oy + oz) / (2.0 * ox * oy * oz)
        n = 4.0 / (3.0 * _SQRT_2PI) * (_ratio3(sx, sz) / (ox * oz) + _ratio3(sx, sy) / (ox * oy))
        return p, n, 2
    if protocol is Protocol.SR:
        p = (oy + oz) / (2.0 * ox * oy * oz)
        n = ((sx + sy / math.sqrt(2.0)) / (ox * oy) + 2.0 * math.sqrt(2.0) / 3.0 * _ratio3(sz, sx) / (ox * oz)) / _SQRT_PI
        return p, n, 2
    raise ValueError(f"unknown protocol {protocol}")


def asym(scenario: Scenario, protocol: Protocol) -> AsymMetrics:
    """High-SNR OP/AOR/AOD approximations for one protocol.

    Selection relaying is approximated under the usual relay-activation
    policy y0 = g0; an explicit fixed y0 changes the high-SNR behaviour
    and is not covered by these closed forms.
    """
    _, th = derive(scenario)
    thr = th.x0 if protocol is Protocol.DIRECT else th.g0
    p_coef, n_coef, d = _coefficients(scenario, protocol)
    p_out = p_coef * thr ** (2 * d)
    aor = n_coef * thr ** (2 * d - 1)
    return AsymMetrics(
        p_out=p_out,
        aor=aor,
        aod=p_out / aor if aor > 0.0 else math.nan,
        slope_op=-float(d),
        slope_aor=-(d - 0.5),
        slope_aod=-0.5,
    )


def table1_symmetric(gamma_bar: float, r0: float, f_m: float, system: Table1System) -> AsymMetrics:
    """Symmetric-network high-SNR closed forms versus the received SNR.

    All three links share the mean square gain, every node moves with the
    same maximum Doppler f_m, and gamma_bar is the average received SNR
    (mean square gain times transmit SNR).  The direct-transmission row
    uses the single-hop spectral efficiency (2^r0 - 1, full-time channel
    use); the cooperative rows use the half-duplex 2^(2 r0) - 1.
    """
    if gamma_bar <= 0.0:
        raise ValueError("gamma_bar must be positive")
    if f_m <= 0.0:
        raise ValueError("f_m must be positive")
    c2 = 2.0 ** (2.0 * r0) - 1.0
    c1 = 2.0**r0 - 1.0
    if system is Table1System.DIRECT:
        p_out = c1 / gamma_bar
        aor = 2.0 * _SQRT_PI * f_m * math.sqrt(c1 / gamma_bar)
    elif system is Table1System.SIMO_1X2:
        p_out = c2**2 / (2.0 * gamma_bar**2)
        aor = 2.0 * _SQRT_PI * f_m * (c2 / gamma_bar) ** 1.5
    elif system is Table1System.AF:
        p_out = c2**2 / gamma_bar**2
        aor = 4.0 * _SQRT_PI * f_m * (c2 / gamma_bar) ** 1.5
    elif system is Table1System.DF:
        p_out = c2 / gamma_bar
        aor = 2.0 * _SQRT_PI * f_m * math.sqrt(c2 / gamma_bar)
    elif system is Table1System.SR:
        p_out = c2**2 / gamma_bar**2
        aor = (math.sqrt(2.0) + 3.0) * _SQRT_PI * f_m * (c2 / gamma_bar) ** 1.5
    else:
        raise ValueError(f"unknown system {system}")
    d = system.diversity_gain
    return AsymMetrics(
        p_out=p_out,
        aor=aor,
        aod=p_out / aor,
        slope_op=-float(d),
        slope_aor=-(d - 0.5),
        slope_aod=-0.5,
    )


def op_to_aor(p_out: float, scenario: Scenario, protocol: Protocol) -> float:
    """High-SNR outage rate implied by an outage probability.

    Eliminating the SNR between the two power laws gives
    AOR ~ h * P_out^((d + 1) / 4) with h a function of the gains and
    Dopplers only.
    """
    if not 0.0 < p_out < 1.0:
        raise ValueError("p_out must lie in (0, 1)")
    p_coef, n_coef, d = _coefficients(scenario, protocol)
    return n_coef * (p_out / p_coef) ** ((d + 1) / 4.0)


def op_to_aod(p_out: float, scenario: Scenario, protocol: Protocol) -> float:
    """High-SNR outage duration implied by an outage probability.

    The companion law AOD ~ (1/h) * P_out^((3 - d) / 4); the product with
    op_to_aor reproduces p_out exactly.
    """
    return p_out / op_to_aor(p_out, scenario, protocol)


def fit_loglog_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of log10(y) versus log10(x) and its RMS residual."""
    lx = np.log10(np.asarray(x, dtype=float))
    ly = np.log10(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise ValueError("need at least two points to fit a slope")
    coef, res = np.polynomial.polynomial.polyfit(lx, ly, 1, full=True)
    rms = math.sqrt(res[0][0] / lx.size) if len(res[0]) else 0.0
    return float(coef[1]), rms
