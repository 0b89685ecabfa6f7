"""
Monte-Carlo propagation of the positional indeterminacy of the clock bodies.

Each hand scattering is displaced by an independent Gaussian draw of standard
deviation dx_h = 2*ell/n (the width of the hand's c.m. packet). A body displaced
by delta meets the incoming quantum delta/c later and delta further away, so the
registered arrival moves by 2*delta/c. The readout is then repeated in floats.

Modelling assumptions: draws are independent between scatterings (no
measurement back-action); dial bodies stay sharp unless perturb_dial is set.

Reproducibility: sample s draws from PCG64(SeedSequence(seed, spawn_key=(s,))),
so any split of the sample range over workers reproduces the serial run.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from swclock.clock_model import ClockConfig, spread_factor_at
from swclock.errors import ConfigError, MonteCarloError
from swclock.kinematics import hand_scatter_position, hand_scatter_time
from swclock.oracle import pairings_from_positions
from swclock.recorder import partner_offset
from swclock.schemas import McSummary

logger = logging.getLogger(__name__)

# Agreement required between float readout and exact recomputation, relative to T
PRECISION_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class McRun:
    """
    Outcome of a Monte-Carlo run.

    errors has shape (samples, n): reading minus unperturbed reading, in units of tau.
    """

    seed: int
    sample_start: int
    errors: np.ndarray
    sigma: float
    pairing_flips: int

    @property
    def samples(self) -> int:
        return int(self.errors.shape[0])

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    @property
    def std(self) -> float:
        if self.errors.size < 2:
            return 0.0
        return float(np.std(self.errors, ddof=1))

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.errors)))


@dataclass(frozen=True)
class _Geometry:
    """Unperturbed arrival offsets (relative to 2-hat_1), as floats and exact."""

    a1: List[Fraction]
    a2: List[Fraction]
    a3: List[Fraction]
    offsets: List[int]

    def as_float(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (
            np.array([float(x) for x in self.a1]),
            np.array([float(x) for x in self.a2]),
            np.array([float(x) for x in self.a3]),
        )


def _geometry(cfg: ClockConfig) -> _Geometry:
    a1, a2, a3 = [], [], []
    origin = None
    for k in range(1, cfg.n + 1):
        x_h = hand_scatter_position(cfg, k)
        t_h = hand_scatter_time(cfg, k)
        # Arrival time minus the recorder distance, which cancels in every difference
        q2 = t_h + x_h
        if origin is None:
            origin = q2
        a1.append(t_h - x_h - cfg.two_ell - origin)
        a2.append(q2 - origin)
        a3.append(t_h - x_h + cfg.two_ell - origin)
    offsets = [partner_offset(cfg, k) for k in range(1, cfg.n + 1)]
    return _Geometry(a1=a1, a2=a2, a3=a3, offsets=offsets)


def _sigmas(cfg: ClockConfig, sigma: float, spread_inflation: bool) -> np.ndarray:
    sigmas = np.full(cfg.n, sigma, dtype=float)
    if spread_inflation:
        for k in range(1, cfg.n + 1):
            elapsed = hand_scatter_time(cfg, k) + cfg.T / 2
            sigmas[k - 1] *= spread_factor_at(cfg, elapsed)
    return sigmas


def _sample_draws(
    seed: int, sample: int, n: int, perturb_dial: bool
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(sample,))))
    d2 = rng.standard_normal(n)
    if perturb_dial:
        d1 = rng.standard_normal(n)
        d3 = rng.standard_normal(n)
    else:
        d1 = np.zeros(n)
        d3 = np.zeros(n)
    return d1, d2, d3


def _readout(a1, a2, a3, four_ell, n: int, ratio: bool):
    """
    Clock reading of every triad, paired with its true partner.

    Works on float arrays and on object arrays of Fractions alike.
    """
    half = Fraction(1, 2) if a2.dtype == object else 0.5
    span = (a3 - a1) if ratio else four_ell
    rho = (a3 - a2) / span
    return (rho - half) * n


def run_mc(
    cfg: ClockConfig,
    samples: int,
    seed: int,
    sigma: Optional[float] = None,
    spread_inflation: bool = False,
    perturb_dial: bool = False,
    resolve_serial: bool = False,
    sample_range: Optional[Tuple[int, int]] = None,
) -> McRun:
    """
    Estimate the statistical reading error caused by the hand's indeterminacy.

    Args:
        cfg: clock configuration
        samples: number of replays of the whole triad array
        seed: base seed
        sigma: displacement std in units of c*tau; defaults to dx_h = 2*ell/n
        spread_inflation: grow sigma with the packet width at each scattering (needs M)
        perturb_dial: also displace dial bodies 1 and 3; uses the three-arrival readout
        resolve_serial: recorder knows serial numbers (required for m >= 2)
        sample_range: (start, stop) slice of sample indices for partitioned runs

    Returns:
        McRun with errors in units of tau. Errors compare each reading with its
        unperturbed float value, so sigma = 0 gives exact zeros. Pairing flips count
        readings for which the recorder's pairing rule would pick another 3-hat.

    Raises:
        MonteCarloError: on invalid sample counts or unresolved m >= 2 pairing
    """
    if samples < 1:
        raise MonteCarloError(f"samples must be >= 1, got {samples}")
    if cfg.m >= 2 and not resolve_serial:
        raise MonteCarloError(
            f"m = {cfg.m} readings are {cfg.m}-fold ambiguous without serial resolution"
        )
    if sigma is not None and sigma < 0:
        raise MonteCarloError(f"sigma must be >= 0, got {sigma}")
    try:
        sigmas = _sigmas(cfg, float(cfg.division) if sigma is None else sigma, spread_inflation)
    except ConfigError as e:
        raise MonteCarloError(f"Spread inflation needs the mass M: {e}") from None

    start, stop = sample_range if sample_range is not None else (0, samples)
    if not 0 <= start < stop:
        raise MonteCarloError(f"Invalid sample range {sample_range}")

    geometry = _geometry(cfg)
    a1, a2, a3 = geometry.as_float()
    four_ell = float(cfg.four_ell)
    offsets = geometry.offsets
    baseline = _readout(a1, a2, a3, four_ell, cfg.n, perturb_dial)

    errors = np.empty((stop - start, cfg.n))
    flips = 0
    for row, s in enumerate(range(start, stop)):
        d1, d2, d3 = _sample_draws(seed, s, cfg.n, perturb_dial)
        p1 = a1 + 2 * sigmas * d1
        p2 = a2 + 2 * sigmas * d2
        p3 = a3 + 2 * sigmas * d3
        errors[row] = _readout(p1, p2, p3, four_ell, cfg.n, perturb_dial) - baseline
        # Later arrival = further behind; arrival times stand in for positions
        geometric = pairings_from_positions(p2.tolist(), p3.tolist())
        flips += sum(1 for g, j in zip(geometric, offsets) if g != j)

    run = McRun(
        seed=seed,
        sample_start=start,
        errors=errors,
        sigma=float(sigmas[0]),
        pairing_flips=flips,
    )
    logger.info(
        f"Monte-Carlo n={cfg.n} m={cfg.m} samples={stop - start} seed={seed}: "
        f"std/tau={run.std:.4f}, pairing flips={flips}"
    )
    return run


def merge_runs(parts: Sequence[McRun]) -> McRun:
    """Join partitioned runs back into the equivalent serial run."""
    if not parts:
        raise MonteCarloError("Nothing to merge")
    ordered = sorted(parts, key=lambda part: part.sample_start)
    expected = ordered[0].sample_start
    for part in ordered:
        if part.sample_start != expected or part.seed != ordered[0].seed:
            raise MonteCarloError("Partitions must share a seed and cover a contiguous range")
        expected += part.samples
    return McRun(
        seed=ordered[0].seed,
        sample_start=ordered[0].sample_start,
        errors=np.concatenate([part.errors for part in ordered]),
        sigma=ordered[0].sigma,
        pairing_flips=sum(part.pairing_flips for part in ordered),
    )


def _run_part(args):
    cfg, samples, seed, start, stop, kwargs = args
    return run_mc(cfg, samples, seed, sample_range=(start, stop), **kwargs)


def run_mc_parallel(cfg: ClockConfig, samples: int, seed: int, workers: int = 1, **kwargs) -> McRun:
    """run_mc split over worker processes; identical to the serial result."""
    if workers <= 1 or samples < 2:
        return run_mc(cfg, samples, seed, **kwargs)
    bounds = np.linspace(0, samples, min(workers, samples) + 1).astype(int)
    jobs = [
        (cfg, samples, seed, int(lo), int(hi), kwargs)
        for lo, hi in zip(bounds, bounds[1:])
        if hi > lo
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_part, jobs))
    return merge_runs(parts)


def verify_precision(
    cfg: ClockConfig,
    run: McRun,
    count: int = 1,
    sigma: Optional[float] = None,
    spread_inflation: bool = False,
    perturb_dial: bool = False,
) -> float:
    """
    Recompute the first `count` samples with exact rationals and compare.

    The float draws are converted exactly (Fraction(float)), so the only difference
    is float round-off in the readout.

    Returns:
        largest absolute discrepancy, in units of tau

    Raises:
        MonteCarloError: if any discrepancy exceeds PRECISION_RTOL * T
    """
    sigmas = _sigmas(cfg, float(cfg.division) if sigma is None else sigma, spread_inflation)
    geometry = _geometry(cfg)
    a1 = np.array(geometry.a1, dtype=object)
    a2 = np.array(geometry.a2, dtype=object)
    a3 = np.array(geometry.a3, dtype=object)
    exact_sigmas = np.array([Fraction(float(s)) for s in sigmas], dtype=object)
    baseline = _readout(a1, a2, a3, cfg.four_ell, cfg.n, perturb_dial)

    worst = 0.0
    for row in range(min(count, run.samples)):
        draws = _sample_draws(run.seed, run.sample_start + row, cfg.n, perturb_dial)
        d1, d2, d3 = (np.array([Fraction(float(x)) for x in d], dtype=object) for d in draws)
        exact = _readout(
            a1 + 2 * exact_sigmas * d1,
            a2 + 2 * exact_sigmas * d2,
            a3 + 2 * exact_sigmas * d3,
            cfg.four_ell,
            cfg.n,
            perturb_dial,
        ) - baseline
        for got, want in zip(run.errors[row], exact):
            worst = max(worst, abs(float(Fraction(float(got)) - want)))

    if worst > PRECISION_RTOL * cfg.n:
        raise MonteCarloError(f"Float readout deviates from exact recomputation by {worst} tau")
    return worst


def summary(run: McRun, cfg: ClockConfig) -> McSummary:
    """Summary artifact, errors converted to seconds."""
    return McSummary(
        n=cfg.n,
        m=cfg.m,
        samples=run.samples,
        seed=run.seed,
        err_mean=run.mean * cfg.tau_seconds,
        err_std=run.std * cfg.tau_seconds,
        err_std_over_tau=run.std,
        pairing_flips=run.pairing_flips,
    )
