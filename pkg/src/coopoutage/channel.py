"""System and channel model for three-node cooperative links.

A source S talks to a destination D directly (link gain X) and through a
relay R (S->R gain Y, R->D gain Z).  All three links fade independently
with Rayleigh envelopes; node mobility makes the gains time varying with
mobile-to-mobile (product-J0) autocorrelation, so each link's gain
derivative is zero-mean Gaussian with variance pi^2 * omega * f_m^2 built
from the two terminal Dopplers of that link.
"""

import math
from dataclasses import dataclass

__all__ = [
    "MobilityError",
    "NodeDopplers",
    "LinkGains",
    "LinkDerived",
    "Scenario",
    "Thresholds",
    "derive",
    "rayleigh_cdf",
    "rayleigh_lcr",
]


class MobilityError(ValueError):
    """All node Dopplers are zero: outage rate and duration are degenerate."""


@dataclass(frozen=True)
class NodeDopplers:
    """Maximum Doppler rate (Hz) introduced by each node's mobility.

    An all-static triple is allowed at construction so that outage
    probability studies remain possible; rate/duration computations reject
    it with MobilityError.
    """

    f_s: float
    f_r: float
    f_d: float

    def __post_init__(self):
        if min(self.f_s, self.f_r, self.f_d) < 0.0:
            raise ValueError("node Dopplers must be nonnegative")

    @property
    def all_static(self) -> bool:
        return self.f_s == 0.0 and self.f_r == 0.0 and self.f_d == 0.0

    @property
    def f_max(self) -> float:
        """Largest node Doppler, used for display normalisations."""
        return max(self.f_s, self.f_r, self.f_d)


@dataclass(frozen=True)
class LinkGains:
    """Mean squared channel gains of the S->D, S->R and R->D links."""

    omega_x: float = 1.0
    omega_y: float = 1.0
    omega_z: float = 1.0

    def __post_init__(self):
        if min(self.omega_x, self.omega_y, self.omega_z) <= 0.0:
            raise ValueError("mean squared gains must be strictly positive")


@dataclass(frozen=True)
class LinkDerived:
    """Per-link composite Dopplers (Hz) and gain-derivative variances.

    Each link combines the Dopplers of its two terminals in quadrature;
    sigma2 = pi^2 * omega * f_link^2 is exact for 2-D isotropic scattering.
    """

    f_x: float
    f_y: float
    f_z: float
    sigma2_x: float
    sigma2_y: float
    sigma2_z: float


@dataclass(frozen=True)
class Scenario:
    """One operating point of the cooperative system.

    gamma0 is the transmit SNR (linear), r0 the target spectral efficiency
    in b/s/Hz.  y0 is the relay-activation threshold of selection
    relaying; None selects the usual choice y0 = g0.
    """

    gamma0: float
    r0: float
    gains: LinkGains = LinkGains()
    dopplers: NodeDopplers = NodeDopplers(1.0, 1.0, 1.0)
    y0: float | None = None

    def __post_init__(self):
        if self.gamma0 <= 0.0:
            raise ValueError("gamma0 must be a positive linear SNR")
        if self.r0 < 0.0:
            raise ValueError("r0 must be nonnegative")
        if self.y0 is not None and self.y0 <= 0.0:
            raise ValueError("explicit y0 must be strictly positive")


@dataclass(frozen=True)
class Thresholds:
    """Outage thresholds and the AF gain constant for one scenario.

    g0 applies to the relayed protocols (equivalent gain below g0 means the
    half-duplex mutual information drops under r0), x0 to direct
    transmission, c1 = 1/gamma0 normalises the variable AF relay gain, and
    y0 is the resolved relay-activation level of selection relaying.
    """

    g0: float
    x0: float
    c1: float
    y0: float


def derive(scenario: Scenario) -> tuple[LinkDerived, Thresholds]:
    """Composite Dopplers, derivative variances and outage thresholds."""
    d, g = scenario.dopplers, scenario.gains
    f_x = math.hypot(d.f_s, d.f_d)
    f_y = math.hypot(d.f_s, d.f_r)
    f_z = math.hypot(d.f_r, d.f_d)
    pi2 = math.pi**2
    derived = LinkDerived(
        f_x=f_x,
        f_y=f_y,
        f_z=f_z,
        sigma2_x=pi2 * g.omega_x * f_x**2,
        sigma2_y=pi2 * g.omega_y * f_y**2,
        sigma2_z=pi2 * g.omega_z * f_z**2,
    )
    g0 = math.sqrt((2.0 ** (2.0 * scenario.r0) - 1.0) / scenario.gamma0)
    x0 = math.sqrt((2.0**scenario.r0 - 1.0) / scenario.gamma0)
    thresholds = Thresholds(
        g0=g0,
        x0=x0,
        c1=1.0 / scenario.gamma0,
        y0=scenario.y0 if scenario.y0 is not None else g0,
    )
    return derived, thresholds


def rayleigh_cdf(x: float, omega: float) -> float:
    """CDF of a Rayleigh envelope with mean square omega, Pr{gain <= x}."""
    if x < 0.0:
        raise ValueError("rayleigh_cdf requires x >= 0")
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    return -math.expm1(-x * x / omega)


def rayleigh_lcr(level: float, omega: float, sigma2: float) -> float:
    """Downward level-crossing rate (Hz) of a Rayleigh envelope.

    Rice's formula for an envelope with mean square omega whose underlying
    quadratures have derivative variance sigma2:
        sqrt(2 * sigma2 / pi) * (level / omega) * exp(-level^2 / omega).
    """
    if level < 0.0:
        raise ValueError("level must be nonnegative")
    if omega <= 0.0:
        raise ValueError("omega must be positive")
    if sigma2 < 0.0:
        raise ValueError("sigma2 must be nonnegative")
    return math.sqrt(2.0 * sigma2 / math.pi) * (level / omega) * math.exp(-level * level / omega)
