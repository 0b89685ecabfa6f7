from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from swclock.clock_model import build_config
from swclock.kinematics import (
    ARRIVALS_SCHEMA,
    Quantum,
    Species,
    events_by_serial,
    generate_events,
    hand_position,
    hand_scatter_position,
    hand_scatter_time,
    incoming_world_line,
    lattice_denominator,
    lattice_events,
    simulate,
    species_arrivals,
    tracks,
    write_arrivals_csv,
)
from swclock.utils.csv_io import read_csv_artifact

PHASES = st.sampled_from([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)])


def test_hand_time_n4(make_cfg):
    cfg = make_cfg(4)
    assert hand_scatter_position(cfg, 2) == Fraction(1, 14)
    assert hand_scatter_time(cfg, 2) == -cfg.T / 8


def test_event_layout(make_cfg):
    cfg = make_cfg(10, m=2)
    events = generate_events(cfg)
    assert len(events) == 3 * cfg.n
    table = events_by_serial(events)
    assert sorted(table) == list(range(1, cfg.n + 1))
    for k, bodies in table.items():
        assert bodies[Species.D1].position == -cfg.ell
        assert bodies[Species.D3].position == cfg.ell
        assert bodies[Species.D1].time < bodies[Species.HAND].time < bodies[Species.D3].time
        assert bodies[Species.HAND].time == k - 1 + cfg.phi - cfg.T / 2


@given(n=st.integers(2, 60), m=st.integers(1, 8), phi=PHASES)
@settings(max_examples=100, deadline=None)
def test_events_lie_on_incoming_world_lines(n, m, phi):
    assume(m < n)
    cfg = build_config(n=n, m=m, T=1.0, phi=phi, warn=False)
    for k, bodies in events_by_serial(generate_events(cfg)).items():
        world_line = incoming_world_line(cfg, k)
        for event in bodies.values():
            assert world_line(event.time) == event.position
        hand = bodies[Species.HAND]
        assert hand_position(cfg, hand.time) == hand.position
        assert -cfg.ell <= hand.position < cfg.ell


@given(n=st.integers(2, 60), m=st.integers(1, 8), p=st.integers(1, 12), q=st.integers(1, 12))
@settings(max_examples=100, deadline=None)
def test_lattice_events_scale_to_scattering_geometry(n, m, p, q):
    assume(m < n and p <= q)
    cfg = build_config(n=n, m=m, T=1.0, phi=Fraction(p, q), warn=False)
    scale = lattice_denominator(cfg)
    lattice = lattice_events(cfg)
    assert all(type(e.time) is int and type(e.position) is int for e in lattice)
    for k, bodies in events_by_serial(lattice).items():
        hand = bodies[Species.HAND]
        assert Fraction(hand.position, scale) == hand_scatter_position(cfg, k)
        assert Fraction(hand.time, scale) == hand_scatter_time(cfg, k)
        assert Fraction(bodies[Species.D1].position, scale) == -cfg.ell
        assert Fraction(bodies[Species.D3].position, scale) == cfg.ell
    scaled = [
        (e.species, e.serial, e.time * scale, e.position * scale) for e in generate_events(cfg)
    ]
    assert scaled == [(e.species, e.serial, e.time, e.position) for e in lattice]


def test_last_hand_scattering_at_body_one(make_cfg):
    cfg = make_cfg(7, phi=Fraction(1))
    assert hand_scatter_position(cfg, cfg.n) == -cfg.ell
    assert hand_scatter_time(cfg, cfg.n) == cfg.T / 2


@pytest.mark.parametrize("n,m,phi", [(4, 1, "1/2"), (11, 2, "1/4"), (9, 3, "1"), (40, 8, "3/4")])
def test_arrival_spacing(make_cfg, n, m, phi):
    cfg = make_cfg(n, m=m, phi=Fraction(phi))
    stream = simulate(cfg)
    assert len(stream) == 3 * n
    times = [record.arrival_time for record in stream]
    assert times == sorted(times)

    def gaps(quantum):
        arrivals = [r.arrival_time for r in species_arrivals(stream, quantum)]
        return {b - a for a, b in zip(arrivals, arrivals[1:])}

    assert gaps(Quantum.Q1) == {cfg.q3_spacing}
    assert gaps(Quantum.Q2) == {cfg.q2_spacing}
    assert gaps(Quantum.Q3) == {cfg.q3_spacing}


def test_track_before_scattering(make_cfg):
    cfg = make_cfg(4)
    track = tracks(generate_events(cfg))[0]
    assert track.position_at(track.scatter.time) == track.scatter.position
    with pytest.raises(ValueError, match="does not exist"):
        track.position_at(track.scatter.time - 1)


def test_arrival_time_is_distance_to_recorder(make_cfg):
    cfg = make_cfg(10)
    for track in tracks(generate_events(cfg)):
        arrival = track.arrival_time(cfg.recorder_x)
        assert track.position_at(arrival) == cfg.recorder_x


def test_arrivals_csv(tmp_path, make_cfg):
    cfg = make_cfg(4)
    path = write_arrivals_csv(tmp_path / "arrivals.csv", simulate(cfg))
    assert path.read_text().splitlines()[0] == f"# schema: {ARRIVALS_SCHEMA}"
    frame = read_csv_artifact(path)
    assert len(frame) == 12
    assert set(frame["species"]) == {"Q1", "Q2", "Q3"}
    assert all("/" in value or value.lstrip("-").isdigit() for value in frame["arrival_time"])
