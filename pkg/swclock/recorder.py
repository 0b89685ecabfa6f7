"""
The recorder: pairs 2-hat quanta with their triad partners and reads the clock.

Pairing convention: a 3-hat "follows" a 2-hat when it arrives strictly later.
A 3-hat arriving together with the 2-hat (the two travel together) is not a
following quantum, so at an exact tie the partner is the next 3-hat. This is
the "less or equal" rule for the partner offset.
"""
import bisect
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import pandas as pd

from swclock.clock_model import ClockConfig
from swclock.errors import ClockError, ConfigError, PairingError
from swclock.kinematics import ArrivalRecord, Quantum, hand_scatter_time, species_arrivals
from swclock.utils.csv_io import write_csv_atomic
from swclock.utils.rationals import format_rational

logger = logging.getLogger(__name__)

READINGS_SCHEMA = "swclock.readings/v1"


@dataclass(frozen=True)
class PairingDecision:
    """Which of the 3-hats following a 2-hat is matched to it."""

    q2_arrival: ArrivalRecord
    partner_offset: Optional[int]
    candidate_offsets: Tuple[int, ...]
    resolved_serial: Optional[int] = None


@dataclass(frozen=True)
class TimeReading:
    """
    A clock reading reconstructed from arrival times (times in units of tau).

    truth_t_c comes from the simulation and is for error accounting only.
    """

    t_c: Fraction
    t_0: Fraction
    rho: Fraction
    pairing: PairingDecision
    truth_t_c: Optional[Fraction] = None
    ambiguity_set: Tuple[Fraction, ...] = field(default_factory=tuple)
    edge_truncated: bool = False
    in_range: bool = True

    @property
    def serial(self) -> Optional[int]:
        return self.pairing.resolved_serial

    @property
    def error(self) -> Optional[Fraction]:
        if self.truth_t_c is None:
            return None
        return self.t_c - self.truth_t_c

    @property
    def best_error(self) -> Optional[Fraction]:
        """Smallest |candidate - truth|; zero when the truth is among the candidates."""
        if self.truth_t_c is None:
            return None
        return min(abs(candidate - self.truth_t_c) for candidate in self.ambiguity_set)

    @property
    def is_ambiguous(self) -> bool:
        return len(self.ambiguity_set) > 1


class _Q3Index:
    """Q3 arrivals of a stream with binary search on arrival time."""

    def __init__(self, stream: Iterable[ArrivalRecord]):
        self.records = species_arrivals(stream, Quantum.Q3)
        self.times = [record.arrival_time for record in self.records]

    def following(self, t: Fraction, count: int) -> List[ArrivalRecord]:
        start = bisect.bisect_right(self.times, t)
        return self.records[start : start + count]


def _require_q2(record: ArrivalRecord) -> None:
    if record.species is not Quantum.Q2:
        raise PairingError(f"Expected a Q2 arrival, got {record.species.name}")


def partner_offset(cfg: ClockConfig, k: int) -> int:
    """
    Closed-form index j of the triad partner among the 3-hats following 2-hat k.

    The partner gap is x3 - x2 = 2 (ell - x_h^(k)) = 4 ell (k - 1 + phi) / n and the
    3-hat spacing is 4 ell / m, so j = ceil(m (k - 1 + phi) / n). An exact tie
    keeps the lower offset.
    """
    if not 1 <= k <= cfg.n:
        raise PairingError(f"Serial {k} outside 1..{cfg.n}")
    p, q = cfg.phi.numerator, cfg.phi.denominator
    return -(-cfg.m * ((k - 1) * q + p) // (cfg.n * q))


def deduce_serial(cfg: ClockConfig, q2: ArrivalRecord, first_q2_arrival: Fraction) -> int:
    """
    Serial number of a 2-hat from its delay after the first 2-hat.

    Consecutive 2-hats arrive tau (1 - beta) apart: the triads are tau (1 + beta)
    apart, and the hand moves u tau toward the recorder between scatterings.
    """
    _require_q2(q2)
    steps = (q2.arrival_time - first_q2_arrival) / cfg.q2_spacing
    if steps.denominator != 1 or not 0 <= steps < cfg.n:
        raise PairingError(
            f"serial deduction failed: delay {q2.arrival_time - first_q2_arrival} "
            f"is not a multiple of {cfg.q2_spacing} within the array"
        )
    return int(steps) + 1


def t0_from_ratio(r: Fraction, cfg: ClockConfig) -> Fraction:
    """t_0 = ((c - v)/v) (ell/c) (2r - 1) with v = -u the signed hand velocity."""
    v = -cfg.u
    return (1 - v) / v * cfg.ell * (2 * r - 1)


def convert_t0(t_c: Fraction, cfg: ClockConfig) -> Fraction:
    """
    Convert clock time t_c to the t_0 convention: t_0 = (1 + beta) t_c.

    The same value is recomputed from the ratio form through r = 1 - rho and
    must agree exactly.
    """
    t_0 = (1 + cfg.beta) * t_c
    rho = t_c / cfg.T + Fraction(1, 2)
    via_ratio = t0_from_ratio(1 - rho, cfg)
    if via_ratio != t_0:
        raise ClockError(f"t_0 conversions disagree: {t_0} != {via_ratio}")
    return t_0


def _in_range(cfg: ClockConfig, t_c: Fraction) -> bool:
    return -cfg.T / 2 <= t_c <= cfg.T / 2


def _t_c_from_gap(cfg: ClockConfig, gap: Fraction) -> Tuple[Fraction, Fraction]:
    rho = gap / cfg.four_ell
    return (Fraction(-1, 2) + rho) * cfg.T, rho


def _truth(cfg: ClockConfig, q2: ArrivalRecord) -> Fraction:
    return hand_scatter_time(cfg, q2.truth_serial)


def _reading(
    cfg: ClockConfig,
    q2: ArrivalRecord,
    partner: ArrivalRecord,
    pairing: PairingDecision,
    candidates: Sequence[Fraction] = (),
    edge_truncated: bool = False,
) -> TimeReading:
    t_c, rho = _t_c_from_gap(cfg, partner.arrival_time - q2.arrival_time)
    in_range = _in_range(cfg, t_c)
    if not in_range:
        logger.warning(f"Reading t_c = {t_c} outside [-T/2, T/2]; likely mis-paired")
    return TimeReading(
        t_c=t_c,
        t_0=convert_t0(t_c, cfg),
        rho=rho,
        pairing=pairing,
        truth_t_c=_truth(cfg, q2),
        ambiguity_set=tuple(candidates) if candidates else (t_c,),
        edge_truncated=edge_truncated,
        in_range=in_range,
    )


def next_q3_after(q2: ArrivalRecord, stream: Iterable[ArrivalRecord]) -> ArrivalRecord:
    """First 3-hat arriving strictly after q2."""
    following = _Q3Index(stream).following(q2.arrival_time, 1)
    if not following:
        raise PairingError("unpaired reading: no Q3 arrives after this Q2")
    return following[0]


def read_time_simple(q2: ArrivalRecord, next_q3: ArrivalRecord, cfg: ClockConfig) -> TimeReading:
    """
    Read the clock from a 2-hat and the first 3-hat after it, without knowing k.

    Only valid for the shortest dial (m = 1), where that 3-hat is always the partner:
    t_c = (-1/2 + c (t3 - t2) / (4 ell)) T.
    """
    if cfg.m != 1:
        raise ConfigError(f"Serial-free readout needs m = 1, got m = {cfg.m}")
    _require_q2(q2)
    if next_q3 is None:
        raise PairingError("unpaired reading: no Q3 arrives after this Q2")
    if next_q3.species is not Quantum.Q3 or next_q3.arrival_time <= q2.arrival_time:
        raise PairingError("next_q3 must be a Q3 arriving strictly after the Q2")
    pairing = PairingDecision(q2_arrival=q2, partner_offset=1, candidate_offsets=(1,))
    return _reading(cfg, q2, next_q3, pairing)


def _read_with_serial(
    q2: ArrivalRecord, index: _Q3Index, first_q2_arrival: Fraction, cfg: ClockConfig
) -> TimeReading:
    k = deduce_serial(cfg, q2, first_q2_arrival)
    j = partner_offset(cfg, k)
    following = index.following(q2.arrival_time, j)
    if len(following) < j:
        raise PairingError(
            f"stream truncated: Q2_{k} needs {j} following Q3, found {len(following)}"
        )
    pairing = PairingDecision(
        q2_arrival=q2,
        partner_offset=j,
        candidate_offsets=(j,),
        resolved_serial=k,
    )
    return _reading(cfg, q2, following[j - 1], pairing)


def read_time_with_serial(
    q2: ArrivalRecord,
    stream: Sequence[ArrivalRecord],
    first_q2_arrival: Fraction,
    cfg: ClockConfig,
) -> TimeReading:
    """
    Read the clock for a longer dial (m >= 2) using the deduced serial number.

    The recorder must have registered the first 2-hat; k follows from the delay
    and the partner is the j-th 3-hat after the 2-hat.
    """
    _require_q2(q2)
    return _read_with_serial(q2, _Q3Index(stream), first_q2_arrival, cfg)


def _enumerate(q2: ArrivalRecord, index: _Q3Index, cfg: ClockConfig) -> TimeReading:
    following = index.following(q2.arrival_time, cfg.m)
    if not following:
        raise PairingError("unpaired reading: no Q3 arrives after this Q2")

    candidates = []
    offsets = []
    for j, q3 in enumerate(following, start=1):
        t_c, _ = _t_c_from_gap(cfg, q3.arrival_time - q2.arrival_time)
        if _in_range(cfg, t_c):
            candidates.append(t_c)
            offsets.append(j)
        else:
            logger.debug(f"Dropping candidate t_c = {t_c} outside the running time")

    edge_truncated = len(following) < cfg.m
    if edge_truncated:
        logger.debug(f"Only {len(following)} of {cfg.m} candidate Q3 arrivals remain in stream")

    pairing = PairingDecision(
        q2_arrival=q2,
        partner_offset=1 if cfg.m == 1 else None,
        candidate_offsets=tuple(offsets),
    )
    return _reading(cfg, q2, following[0], pairing, candidates, edge_truncated)


def enumerate_ambiguity(
    q2: ArrivalRecord, stream: Sequence[ArrivalRecord], cfg: ClockConfig
) -> TimeReading:
    """
    All readings compatible with an unknown serial number.

    Each of the (up to) m following 3-hats may be the partner; neighbouring
    candidates differ by T/m. t_c is the first-following candidate.
    """
    _require_q2(q2)
    return _enumerate(q2, _Q3Index(stream), cfg)


def read_time_ratio(
    q1: ArrivalRecord, q2: ArrivalRecord, q3: ArrivalRecord, cfg: ClockConfig
) -> TimeReading:
    """
    Three-arrival readout rho = (t3 - t2) / (t3 - t1) of one triad.

    Does not rely on the known span 4 ell, so it also holds when the dial bodies
    are displaced.
    """
    if (q1.species, q2.species, q3.species) != (Quantum.Q1, Quantum.Q2, Quantum.Q3):
        raise PairingError("Ratio readout needs one Q1, one Q2 and one Q3")
    span = q3.arrival_time - q1.arrival_time
    if span <= 0:
        raise PairingError("Q3 must arrive after Q1 of the same triad")
    rho = (q3.arrival_time - q2.arrival_time) / span
    t_c = (Fraction(-1, 2) + rho) * cfg.T
    pairing = PairingDecision(
        q2_arrival=q2, partner_offset=None, candidate_offsets=(), resolved_serial=None
    )
    return TimeReading(
        t_c=t_c,
        t_0=convert_t0(t_c, cfg),
        rho=rho,
        pairing=pairing,
        truth_t_c=_truth(cfg, q2),
        ambiguity_set=(t_c,),
        in_range=_in_range(cfg, t_c),
    )


def read_stream(
    cfg: ClockConfig,
    stream: Sequence[ArrivalRecord],
    serial_known: bool = True,
    switch_on_time: Optional[Fraction] = None,
) -> List[TimeReading]:
    """
    Run the recorder over a whole arrival stream.

    Args:
        cfg: clock configuration
        stream: time-ordered arrivals
        serial_known: use serial deduction for m >= 2 (requires the first Q2)
        switch_on_time: recorder switch-on instant; earlier arrivals are not seen

    Returns:
        One reading per registered 2-hat. Quanta whose 2-hat partner was missed
        at switch-on are ignored.
    """
    visible = list(stream)
    if switch_on_time is not None:
        visible = [record for record in visible if record.arrival_time >= switch_on_time]
        missed = len(stream) - len(visible)
        if missed:
            logger.info(f"Recorder switched on late: {missed} arrivals not registered")
        if serial_known and cfg.m >= 2:
            logger.warning("First Q2 may have been missed; falling back to ambiguous pairing")
            serial_known = False

    index = _Q3Index(visible)
    q2s = species_arrivals(visible, Quantum.Q2)
    if not q2s:
        return []

    readings = []
    for q2 in q2s:
        if cfg.m == 1:
            following = index.following(q2.arrival_time, 1)
            if not following:
                raise PairingError("unpaired reading: no Q3 arrives after this Q2")
            readings.append(read_time_simple(q2, following[0], cfg))
        elif serial_known:
            readings.append(_read_with_serial(q2, index, q2s[0].arrival_time, cfg))
        else:
            readings.append(_enumerate(q2, index, cfg))

    out_of_range = sum(1 for reading in readings if not reading.in_range)
    if out_of_range:
        logger.warning(f"{out_of_range} readings fall outside the running time")
    logger.debug(f"Recorder produced {len(readings)} readings (n={cfg.n}, m={cfg.m})")
    return readings


def readings_frame(readings: Iterable[TimeReading], cfg: ClockConfig) -> pd.DataFrame:
    rows = []
    for reading in readings:
        error = reading.error
        rows.append(
            {
                "serial": "unknown" if reading.serial is None else reading.serial,
                "t_c_exact": format_rational(reading.t_c / cfg.T),
                "t_c_float": cfg.to_seconds(reading.t_c),
                "t_0_float": cfg.to_seconds(reading.t_0),
                "error": "" if error is None else format_rational(error / cfg.T),
                "ambiguity_count": len(reading.ambiguity_set),
                "candidates": ";".join(format_rational(c / cfg.T) for c in reading.ambiguity_set),
                "edge_truncated": reading.edge_truncated,
            }
        )
    return pd.DataFrame(
        rows,
        columns=[
            "serial",
            "t_c_exact",
            "t_c_float",
            "t_0_float",
            "error",
            "ambiguity_count",
            "candidates",
            "edge_truncated",
        ],
    )


def write_readings_csv(path: Path, readings: Iterable[TimeReading], cfg: ClockConfig) -> Path:
    """Export readings; exact columns are in units of the running time T."""
    return write_csv_atomic(path, readings_frame(readings, cfg), READINGS_SCHEMA)
