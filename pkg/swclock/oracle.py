"""
Brute-force verifier for the recorder.

Pairings are reconstructed purely from simultaneous positions of the scattered
quanta in one snapshot, and readings from the scattering events themselves.
Nothing here uses the closed-form pairing rule; it certifies it.
"""
import bisect
import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, TypeVar

import pandas as pd

from swclock.clock_model import ClockConfig
from swclock.kinematics import (
    Quantum,
    ScatterEvent,
    Species,
    generate_events,
    lattice_events,
    tracks,
)
from swclock.utils.csv_io import write_csv_atomic
from swclock.utils.rationals import format_rational

logger = logging.getLogger(__name__)

PAIRING_SCHEMA = "swclock.pairing/v1"

X = TypeVar("X", Fraction, float, int)


@dataclass(frozen=True)
class Snapshot:
    """Positions of all scattered quanta existing at time t."""

    t: Fraction
    positions: Tuple[Tuple[Quantum, int, Fraction], ...]

    def of(self, quantum: Quantum) -> Dict[int, Fraction]:
        return {serial: x for q, serial, x in self.positions if q is quantum}


def take_snapshot(cfg: ClockConfig, t: Optional[Fraction] = None) -> Snapshot:
    """
    Snapshot at t, by default right at the last scattering so all 3n quanta exist.
    """
    return _snapshot(generate_events(cfg), t)


def _snapshot(events: Iterable[ScatterEvent], t=None) -> Snapshot:
    world_lines = tracks(events)
    if t is None:
        t = max(track.scatter.time for track in world_lines)
    positions = tuple(
        (track.quantum, track.serial, track.position_at(t))
        for track in world_lines
        if track.scatter.time <= t
    )
    return Snapshot(t=t, positions=positions)


def pairings_from_positions(q2_xs: Sequence[X], q3_xs: Sequence[X]) -> List[int]:
    """
    Offset of each triad partner among the 3-hats travelling behind its 2-hat.

    All quanta move toward the recorder (-x), so the 3-hats reaching the recorder
    after a 2-hat are those with larger x. A 3-hat at the same x travels with the
    2-hat and does not count.

    Args:
        q2_xs: simultaneous 2-hat positions, indexed by serial - 1
        q3_xs: simultaneous 3-hat positions, indexed by serial - 1

    Returns:
        offsets indexed by serial - 1; 0 when the partner is not behind its 2-hat
        (impossible for an unperturbed clock)
    """
    ordered = sorted(q3_xs)
    offsets = []
    for q2_x, partner_x in zip(q2_xs, q3_xs):
        if partner_x <= q2_x:
            offsets.append(0)
            continue
        # 3-hats with q2_x < x <= partner_x
        behind = bisect.bisect_right(ordered, partner_x) - bisect.bisect_right(ordered, q2_x)
        offsets.append(behind)
    return offsets


def oracle_pairing(cfg: ClockConfig) -> Dict[int, int]:
    """
    Serial -> partner offset, determined geometrically.

    Runs on the integer event lattice. Offsets depend only on the order of
    positions, and scaling by a common positive denominator keeps that order.
    """
    snapshot = _snapshot(lattice_events(cfg))
    q2 = snapshot.of(Quantum.Q2)
    q3 = snapshot.of(Quantum.Q3)
    serials = range(1, cfg.n + 1)
    offsets = pairings_from_positions([q2[k] for k in serials], [q3[k] for k in serials])
    logger.debug(f"Oracle pairing at lattice t = {snapshot.t} for n={cfg.n}, m={cfg.m}")
    return dict(zip(serials, offsets))


def oracle_reading(cfg: ClockConfig) -> Dict[int, Fraction]:
    """Serial -> ground-truth clock time of the hand scattering, t_c = -x_h T / (2 ell)."""
    return {
        event.serial: -event.position * cfg.T / cfg.two_ell
        for event in generate_events(cfg)
        if event.species is Species.HAND
    }


def measured_q3_spacing(snapshot: Snapshot) -> Set[Fraction]:
    """Distinct distances between consecutive 3-hats in a snapshot."""
    xs = sorted(snapshot.of(Quantum.Q3).values())
    return {b - a for a, b in zip(xs, xs[1:])}


def measured_partner_gaps(snapshot: Snapshot) -> Dict[int, Fraction]:
    """Serial -> x3 - x2 of the same triad."""
    q2 = snapshot.of(Quantum.Q2)
    q3 = snapshot.of(Quantum.Q3)
    return {k: q3[k] - q2[k] for k in q2 if k in q3}


def pairing_rows(cfg: ClockConfig, closed_form: Optional[Dict[int, int]] = None) -> List[dict]:
    offsets = oracle_pairing(cfg)
    rows = []
    for k, offset in offsets.items():
        row = {
            "n": cfg.n,
            "m": cfg.m,
            "phi": format_rational(cfg.phi),
            "k": k,
            "offset_oracle": offset,
        }
        if closed_form is not None:
            row["offset_closed_form"] = closed_form[k]
            row["match"] = closed_form[k] == offset
        rows.append(row)
    return rows


def write_pairing_table_csv(path: Path, rows: Iterable[dict]) -> Path:
    frame = pd.DataFrame(list(rows))
    return write_csv_atomic(path, frame, PAIRING_SCHEMA)
