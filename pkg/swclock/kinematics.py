"""
Scattering events, outgoing world lines and the arrival stream at the recorder.

An array of n triads travels toward the clock along +x. In triad k quantum 1
is scattered back by dial body 1 at -ell, quantum 2 by the hand and quantum 3
by dial body 3 at +ell. Scattered quanta travel toward the recorder at -c.
All times and positions are exact rationals in internal units.
"""
import enum
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Union

import pandas as pd

from swclock.clock_model import ClockConfig
from swclock.utils.csv_io import write_csv_atomic
from swclock.utils.rationals import format_rational

logger = logging.getLogger(__name__)

ARRIVALS_SCHEMA = "swclock.arrivals/v1"


class Quantum(enum.Enum):
    """Scattered light quanta as registered by the recorder."""

    Q1 = 1
    Q2 = 2
    Q3 = 3


class Species(enum.Enum):
    """Clock body responsible for a scattering."""

    D1 = 1
    HAND = 2
    D3 = 3

    @property
    def quantum(self) -> Quantum:
        return Quantum(self.value)


# Fraction in internal units, or int in lattice units (see lattice_events)
Coordinate = Union[Fraction, int]


@dataclass(frozen=True)
class ScatterEvent:
    species: Species
    serial: int
    time: Coordinate
    position: Coordinate


@dataclass(frozen=True)
class QuantumTrack:
    """Outgoing world line x(t) = position - c (t - time), valid for t >= time."""

    scatter: ScatterEvent

    @property
    def quantum(self) -> Quantum:
        return self.scatter.species.quantum

    @property
    def serial(self) -> int:
        return self.scatter.serial

    def position_at(self, t: Coordinate) -> Coordinate:
        if t < self.scatter.time:
            raise ValueError(
                f"{self.quantum.name}_{self.serial} does not exist before t = {self.scatter.time}"
            )
        return self.scatter.position - (t - self.scatter.time)

    def arrival_time(self, recorder_x: Fraction) -> Fraction:
        return self.scatter.time + (self.scatter.position - recorder_x)


@dataclass(frozen=True)
class ArrivalRecord:
    """
    One registration at the recorder.

    truth_serial is simulation ground truth; recorder logic never reads it.
    """

    species: Quantum
    arrival_time: Fraction
    truth_serial: int


def hand_position(cfg: ClockConfig, t: Fraction) -> Fraction:
    """Hand coordinate at clock time t: x_h = -u t (it passes 0 at t = 0)."""
    return -cfg.u * t


def hand_scatter_position(cfg: ClockConfig, k: int) -> Fraction:
    """x_h^(k) = ell - (k - 1 + phi) * 2*ell/n."""
    return cfg.ell - (k - 1 + cfg.phi) * cfg.division


def hand_scatter_time(cfg: ClockConfig, k: int) -> Fraction:
    """t^(k) = -x_h^(k) T / (2 ell)."""
    return -hand_scatter_position(cfg, k) * cfg.T / cfg.two_ell


def incoming_world_line(cfg: ClockConfig, k: int):
    """
    World line x(t) of the incoming triad k (all three members travel together at +c).

    Only used to certify the event construction; incoming quanta are not part of the stream.
    """
    t_k = hand_scatter_time(cfg, k)
    x_k = hand_scatter_position(cfg, k)

    def x_of_t(t: Fraction) -> Fraction:
        return x_k + (t - t_k)

    return x_of_t


def lattice_denominator(cfg: ClockConfig) -> int:
    """
    Common denominator D of all event coordinates: 2 (2n - m) q for phi = p/q.

    With beta = m / (2n - m), ell * D = m n q and the hand step 2*ell/n is 2 m q / D.
    """
    return 2 * (2 * cfg.n - cfg.m) * cfg.phi.denominator


def lattice_events(cfg: ClockConfig) -> List[ScatterEvent]:
    """
    All 3n scattering events with coordinates scaled by lattice_denominator(cfg).

    Every time and position is an integer in these units, so geometric checks run
    in plain integer arithmetic. Ordered by serial and then by body.

    Hand scatterings happen every tau; the triad reaches dial body 1 earlier by
    (x_h + ell)/c and dial body 3 later by (ell - x_h)/c.
    """
    p, q = cfg.phi.numerator, cfg.phi.denominator
    width = 2 * cfg.n - cfg.m
    ell = cfg.m * cfg.n * q
    events = []
    for k in range(1, cfg.n + 1):
        elapsed = (k - 1) * q + p  # (k - 1 + phi) q
        x_h = ell - 2 * cfg.m * elapsed
        t_h = 2 * width * elapsed - cfg.n * width * q
        events.append(ScatterEvent(Species.D1, k, t_h - (x_h + ell), -ell))
        events.append(ScatterEvent(Species.HAND, k, t_h, x_h))
        events.append(ScatterEvent(Species.D3, k, t_h + (ell - x_h), ell))
    return events


def generate_events(cfg: ClockConfig) -> List[ScatterEvent]:
    """All 3n scattering events in internal units (exact rationals)."""
    scale = lattice_denominator(cfg)
    events = [
        ScatterEvent(
            event.species,
            event.serial,
            Fraction(event.time, scale),
            Fraction(event.position, scale),
        )
        for event in lattice_events(cfg)
    ]
    logger.debug(f"Generated {len(events)} scattering events for n={cfg.n}, m={cfg.m}")
    return events


def tracks(events: Iterable[ScatterEvent]) -> List[QuantumTrack]:
    return [QuantumTrack(event) for event in events]


def _arrival_sort_key(record: ArrivalRecord):
    # Simultaneous arrivals: Q1 before Q2 before Q3
    return (record.arrival_time, record.species.value, record.truth_serial)


def arrival_stream(cfg: ClockConfig, events: Iterable[ScatterEvent]) -> List[ArrivalRecord]:
    """
    Time-ordered registrations at the recorder.

    Ties are ordered Q2 before Q3. This is presentation order only: the
    recorder decides pairings from arrival times, not stream positions.
    """
    stream = [
        ArrivalRecord(
            species=track.quantum,
            arrival_time=track.arrival_time(cfg.recorder_x),
            truth_serial=track.serial,
        )
        for track in tracks(events)
    ]
    stream.sort(key=_arrival_sort_key)
    return stream


def simulate(cfg: ClockConfig) -> List[ArrivalRecord]:
    """Events and arrival stream in one call."""
    return arrival_stream(cfg, generate_events(cfg))


def species_arrivals(stream: Iterable[ArrivalRecord], quantum: Quantum) -> List[ArrivalRecord]:
    return [record for record in stream if record.species is quantum]


def events_by_serial(events: Iterable[ScatterEvent]) -> Dict[int, Dict[Species, ScatterEvent]]:
    table: Dict[int, Dict[Species, ScatterEvent]] = {}
    for event in events:
        table.setdefault(event.serial, {})[event.species] = event
    return table


def arrivals_frame(stream: Iterable[ArrivalRecord]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "species": record.species.name,
                "arrival_time": format_rational(record.arrival_time),
                "arrival_time_float": float(record.arrival_time),
                "truth_serial": record.truth_serial,
            }
            for record in stream
        ],
        columns=["species", "arrival_time", "arrival_time_float", "truth_serial"],
    )


def write_arrivals_csv(path: Path, stream: Iterable[ArrivalRecord]) -> Path:
    """Export the arrival stream (times in units of tau)."""
    return write_csv_atomic(path, arrivals_frame(stream), ARRIVALS_SCHEMA)
