"""
Clock parameters of the Salecker-Wigner clock and the accuracy / mass relations.

Internal units: time in units of the accuracy tau, length in units of c*tau,
c = 1. In these units every kinematic quantity of the readout is an exact
rational. SI floats are used only for quantities involving hbar and the mass.
"""
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Optional

from scipy import constants

from swclock.errors import ConfigError
from swclock.utils.rationals import Rational, parse_rational

logger = logging.getLogger(__name__)

C = constants.c  # m/s, exact by SI definition
HBAR = constants.hbar  # J s

# Soft limits for the "much greater / much smaller" conditions
MIN_GOOD_N = 10
MAX_GOOD_BETA = Fraction(1, 10)

# Relative slack for the float comparison at the T = M dx^2 / hbar equality point
EQ5_RTOL = 1e-9


@dataclass(frozen=True)
class ClockConfig:
    """
    Full parameter set of one clock and its recorder.

    Exact fields are in internal units (tau = 1, c = 1). Build instances with
    build_config(), which derives beta and ell from (n, m).
    """

    n: int
    m: int
    T_seconds: float
    beta: Fraction
    ell: Fraction
    phi: Fraction
    recorder_x: Fraction
    M_kg: Optional[float] = None

    def __post_init__(self):
        # tau * n = T holds by construction of the unit system; the rest is checked here
        if self.two_ell != Fraction(self.m, 2) * (1 + self.beta):
            raise ConfigError("Dial length inconsistent with (m, beta)")
        if self.u != self.two_ell / self.T:
            raise ConfigError("Hand speed inconsistent with dial length and running time")
        if not 0 < self.beta < 1:
            raise ConfigError(f"beta = {self.beta} >= 1 unphysical")

    @property
    def tau(self) -> Fraction:
        return Fraction(1)

    @property
    def T(self) -> Fraction:
        """Running time in units of tau."""
        return Fraction(self.n)

    @property
    def u(self) -> Fraction:
        """Hand speed in units of c (equal to beta)."""
        return self.beta

    @property
    def two_ell(self) -> Fraction:
        return 2 * self.ell

    @property
    def four_ell(self) -> Fraction:
        return 4 * self.ell

    @property
    def division(self) -> Fraction:
        """Distance covered by the hand in one tau, 2*ell/n (= dx_h)."""
        return self.two_ell / self.n

    @property
    def q3_spacing(self) -> Fraction:
        """Distance (and arrival-time gap) between consecutive 3-hat quanta."""
        return 1 + self.beta

    @property
    def q2_spacing(self) -> Fraction:
        """Arrival-time gap between consecutive 2-hat quanta."""
        return 1 - self.beta

    @property
    def tau_seconds(self) -> float:
        return self.T_seconds / self.n

    @property
    def two_ell_meters(self) -> float:
        return float(self.two_ell) * C * self.tau_seconds

    @property
    def u_si(self) -> float:
        return float(self.beta) * C

    def to_seconds(self, t: Fraction) -> float:
        return float(t) * self.tau_seconds


def derive_beta(n: int, m: int) -> Fraction:
    """
    Hand speed fixed jointly by u = 2*ell/T and 2*ell = (m/2) c tau (1 + beta).

    Solving the pair gives beta = (m/2) / (n - m/2) = m / (2n - m).
    """
    return Fraction(m, 2 * n - m)


def build_config(
    n: int,
    m: int,
    T: float,
    M: Optional[float] = None,
    phi: Rational = Fraction(1, 2),
    recorder_x: Optional[Rational] = None,
    warn: bool = True,
) -> ClockConfig:
    """
    Build a self-consistent clock configuration.

    Args:
        n: inverse relative accuracy T/tau
        m: dial-length multiplier, 2*ell = (m/2) c tau (1 + beta)
        T: running time in seconds
        M: mass of the bodies in kg (only needed for uncertainty relations)
        phi: phase of the first hand scattering within the first division
        recorder_x: recorder position in units of c*tau; defaults to -2*ell*(n + 2)
        warn: log soft warnings for small n or large beta

    Returns:
        ClockConfig with all derived fields set

    Raises:
        ConfigError: if any parameter violates the clock constraints
    """
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise ConfigError(f"n must be an integer >= 2, got {n!r}")
    if isinstance(m, bool) or not isinstance(m, int) or m <= 0:
        raise ConfigError(f"m must be a positive integer, got {m!r}")
    if m > n:
        raise ConfigError(f"m = {m} exceeds n = {n}")
    if not (isinstance(T, (int, float)) and math.isfinite(T) and T > 0):
        raise ConfigError(f"Running time T must be a positive number of seconds, got {T!r}")
    if M is not None and not (math.isfinite(M) and M > 0):
        raise ConfigError(f"Mass M must be positive, got {M!r}")
    try:
        phi = parse_rational(phi)
    except ValueError as e:
        raise ConfigError(f"Invalid phi: {e}") from None
    if not 0 < phi <= 1:
        raise ConfigError(f"phi must lie in (0, 1], got {phi}")

    beta = derive_beta(n, m)
    if beta >= 1:
        raise ConfigError(f"beta = {beta} >= 1 unphysical (n = {n}, m = {m})")

    ell = Fraction(m, 4) * (1 + beta)

    if recorder_x is None:
        recorder_x = -2 * ell * (n + 2)
    else:
        try:
            recorder_x = parse_rational(recorder_x)
        except ValueError as e:
            raise ConfigError(f"Invalid recorder_x: {e}") from None
        if recorder_x >= -ell:
            raise ConfigError(f"recorder inside dial: recorder_x = {recorder_x} >= -ell = {-ell}")

    cfg = ClockConfig(
        n=n,
        m=m,
        T_seconds=float(T),
        beta=beta,
        ell=ell,
        phi=phi,
        recorder_x=recorder_x,
        M_kg=None if M is None else float(M),
    )
    if warn:
        for warning in config_warnings(cfg):
            logger.warning(warning)
    return cfg


def config_warnings(cfg: ClockConfig) -> List[str]:
    """Soft checks for n >> 1 and beta << 1."""
    warnings = []
    if cfg.n < MIN_GOOD_N:
        warnings.append(f"n = {cfg.n} is small; a good clock needs n >> 1")
    if cfg.beta > MAX_GOOD_BETA:
        warnings.append(f"beta = {cfg.beta} is not small; readout assumes u << c")
    return warnings


def with_recorder(cfg: ClockConfig, recorder_x: Rational) -> ClockConfig:
    """Copy of cfg with the recorder moved to recorder_x."""
    x = parse_rational(recorder_x)
    if x >= -cfg.ell:
        raise ConfigError(f"recorder inside dial: recorder_x = {x} >= -ell = {-cfg.ell}")
    return replace(cfg, recorder_x=x)


def mass_bound_si(T: float, tau: float, two_ell: float) -> float:
    """hbar T^3 / ((2 ell)^2 tau^2) for SI inputs (seconds, seconds, meters)."""
    if T <= 0 or tau <= 0 or two_ell <= 0:
        raise ConfigError("T, tau and 2*ell must all be positive")
    return HBAR * T**3 / (two_ell**2 * tau**2)


def mass_bound(cfg: ClockConfig) -> float:
    """Minimal mass of the hand (kg) for the clock to keep its accuracy over T."""
    return mass_bound_si(cfg.T_seconds, cfg.tau_seconds, cfg.two_ell_meters)


@dataclass(frozen=True)
class UncertaintyReport:
    """Indeterminacies of the hand for a minimal Gaussian packet."""

    dx_h: float  # m
    dp_h: float  # kg m/s
    du: float  # m/s
    u: float  # m/s
    spread_factor: float
    mass_bound: float  # kg
    eq5_holds: bool


def _require_mass(cfg: ClockConfig) -> float:
    if cfg.M_kg is None or cfg.M_kg <= 0:
        raise ConfigError("Mass M is required for uncertainty relations")
    return cfg.M_kg


def uncertainty_report(cfg: ClockConfig) -> UncertaintyReport:
    """
    Evaluate dx_h, dp_h, du and the packet spreading over the running time.

    dx_h = 2*ell/n, dp_h = hbar/dx_h (minimal packet), du = dp_h/M,
    spread = sqrt(1 + (hbar T / (M dx_h^2))^2).
    """
    M = _require_mass(cfg)
    dx_h = cfg.two_ell_meters / cfg.n
    dp_h = HBAR / dx_h
    du = dp_h / M
    growth = HBAR * cfg.T_seconds / (M * dx_h**2)
    spread = math.sqrt(1 + growth**2)
    eq5_holds = cfg.T_seconds <= M * dx_h**2 / HBAR * (1 + EQ5_RTOL)
    return UncertaintyReport(
        dx_h=dx_h,
        dp_h=dp_h,
        du=du,
        u=cfg.u_si,
        spread_factor=spread,
        mass_bound=mass_bound(cfg),
        eq5_holds=eq5_holds,
    )


def spread_factor_at(cfg: ClockConfig, elapsed: Fraction) -> float:
    """
    Width growth factor of the hand packet `elapsed` tau after the start -T/2.
    """
    M = _require_mass(cfg)
    dx_h = cfg.two_ell_meters / cfg.n
    growth = HBAR * float(elapsed) * cfg.tau_seconds / (M * dx_h**2)
    return math.sqrt(1 + growth**2)
