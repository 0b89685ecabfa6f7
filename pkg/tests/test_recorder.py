from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from swclock.clock_model import build_config, with_recorder
from swclock.errors import ConfigError, PairingError
from swclock.kinematics import ArrivalRecord, Quantum, hand_scatter_time, simulate, species_arrivals
from swclock.recorder import (
    READINGS_SCHEMA,
    convert_t0,
    deduce_serial,
    enumerate_ambiguity,
    next_q3_after,
    partner_offset,
    read_stream,
    read_time_ratio,
    read_time_simple,
    read_time_with_serial,
    t0_from_ratio,
    write_readings_csv,
)
from swclock.utils.csv_io import read_csv_artifact

PHASES = [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]


def _cfg(n, m=1, phi=Fraction(1, 2)):
    return build_config(n=n, m=m, T=1.0, phi=phi, warn=False)


def test_offsets_m2_n11():
    cfg = _cfg(11, m=2)
    assert [partner_offset(cfg, k) for k in range(1, 12)] == [1] * 6 + [2] * 5


def test_offsets_m3_n9():
    cfg = _cfg(9, m=3)
    assert [partner_offset(cfg, k) for k in range(1, 10)] == [1, 1, 1, 2, 2, 2, 3, 3, 3]


@pytest.mark.parametrize("n", [9, 10, 11, 12, 99, 100])
def test_m2_switch_after_midpoint(n):
    cfg = _cfg(n, m=2)
    for k in range(1, n + 1):
        expected = 1 if k <= Fraction(n + 1, 2) else 2
        assert partner_offset(cfg, k) == expected


@pytest.mark.parametrize("n", [9, 10, 11, 12, 99, 100])
def test_m3_block_bounds(n):
    cfg = _cfg(n, m=3)
    for k in range(1, n + 1):
        if k <= Fraction(n, 3) + Fraction(1, 2):
            expected = 1
        elif k <= Fraction(2 * n, 3) + Fraction(1, 2):
            expected = 2
        else:
            expected = 3
        assert partner_offset(cfg, k) == expected


def test_offset_serial_out_of_range():
    with pytest.raises(PairingError):
        partner_offset(_cfg(5), 6)


def test_simple_readout_n4():
    cfg = _cfg(4)
    stream = simulate(cfg)
    q2s = species_arrivals(stream, Quantum.Q2)
    reading = read_time_simple(q2s[1], next_q3_after(q2s[1], stream), cfg)
    assert reading.t_c == -cfg.T / 8
    assert reading.error == 0
    assert reading.t_0 == (1 + cfg.beta) * reading.t_c
    assert reading.in_range


def test_simple_readout_needs_shortest_dial():
    cfg = _cfg(11, m=2)
    stream = simulate(cfg)
    q2 = species_arrivals(stream, Quantum.Q2)[0]
    with pytest.raises(ConfigError, match="m = 1"):
        read_time_simple(q2, next_q3_after(q2, stream), cfg)


def test_simple_readout_rejects_earlier_q3():
    cfg = _cfg(10)
    stream = simulate(cfg)
    q2 = species_arrivals(stream, Quantum.Q2)[5]
    earlier = species_arrivals(stream, Quantum.Q3)[0]
    with pytest.raises(PairingError, match="strictly after"):
        read_time_simple(q2, earlier, cfg)


def test_mispaired_reading_flagged_out_of_range(caplog):
    cfg = _cfg(10)
    stream = simulate(cfg)
    q2 = species_arrivals(stream, Quantum.Q2)[0]
    fourth_q3 = species_arrivals(stream, Quantum.Q3)[3]
    with caplog.at_level("WARNING", logger="swclock.recorder"):
        reading = read_time_simple(q2, fourth_q3, cfg)
    assert reading.t_c == Fraction(51, 2)
    assert reading.t_c > cfg.T / 2
    assert not reading.in_range
    assert reading.error != 0
    assert "outside" in caplog.text


def test_unpaired_reading():
    cfg = _cfg(10)
    stream = [r for r in simulate(cfg) if r.species is not Quantum.Q3]
    with pytest.raises(PairingError, match="unpaired reading"):
        next_q3_after(stream[-1], stream)


@pytest.mark.parametrize("phi", PHASES)
def test_tie_at_array_end_is_not_following(phi):
    cfg = _cfg(12, phi=phi)
    readings = read_stream(cfg, simulate(cfg))
    assert [r.error for r in readings] == [0] * cfg.n


@given(n=st.integers(2, 30), phi=st.sampled_from(PHASES))
@settings(max_examples=60, deadline=None)
def test_exact_readout_shortest_dial(n, phi):
    cfg = _cfg(n, phi=phi)
    readings = read_stream(cfg, simulate(cfg))
    assert len(readings) == n
    for k, reading in enumerate(readings, start=1):
        assert reading.t_c == hand_scatter_time(cfg, k)
        assert reading.error == 0


@pytest.mark.slow
def test_exact_readout_shortest_dial_full_range():
    for n in range(2, 201):
        for phi in PHASES:
            cfg = _cfg(n, phi=phi)
            assert all(r.error == 0 for r in read_stream(cfg, simulate(cfg)))


@pytest.mark.parametrize("n,m", [(11, 2), (9, 3), (40, 5), (100, 8)])
def test_serial_deduction(n, m):
    cfg = _cfg(n, m=m)
    stream = simulate(cfg)
    q2s = species_arrivals(stream, Quantum.Q2)
    first = q2s[0].arrival_time
    for q2 in q2s:
        assert deduce_serial(cfg, q2, first) == q2.truth_serial
        reading = read_time_with_serial(q2, stream, first, cfg)
        assert reading.serial == q2.truth_serial
        assert reading.error == 0
        assert reading.pairing.partner_offset == partner_offset(cfg, q2.truth_serial)


def test_serial_deduction_fails_off_grid():
    cfg = _cfg(11, m=2)
    first = species_arrivals(simulate(cfg), Quantum.Q2)[0].arrival_time
    stray = ArrivalRecord(Quantum.Q2, first + cfg.q2_spacing / 3, 1)
    with pytest.raises(PairingError, match="serial deduction failed"):
        deduce_serial(cfg, stray, first)


def test_truncated_stream():
    cfg = _cfg(11, m=2)
    stream = simulate(cfg)
    last_q3 = species_arrivals(stream, Quantum.Q3)[-1]
    truncated = [r for r in stream if r is not last_q3]
    q2s = species_arrivals(truncated, Quantum.Q2)
    with pytest.raises(PairingError, match="stream truncated"):
        read_time_with_serial(q2s[-1], truncated, q2s[0].arrival_time, cfg)


def test_two_fold_ambiguity():
    cfg = _cfg(11, m=2)
    readings = read_stream(cfg, simulate(cfg), serial_known=False)
    assert len(readings) == cfg.n
    for reading in readings:
        assert reading.serial is None
        assert len(reading.ambiguity_set) == 2
        low, high = sorted(reading.ambiguity_set)
        assert high - low == cfg.T / 2
        assert reading.truth_t_c in reading.ambiguity_set
        assert reading.best_error == 0


def test_three_fold_ambiguity():
    cfg = _cfg(9, m=3)
    stream = simulate(cfg)
    differences = set()
    for q2 in species_arrivals(stream, Quantum.Q2):
        reading = enumerate_ambiguity(q2, stream, cfg)
        assert reading.truth_t_c in reading.ambiguity_set
        differences |= {abs(a - b) for a, b in combinations(reading.ambiguity_set, 2)}
    assert differences == {cfg.T / 3, 2 * cfg.T / 3}


def test_ambiguity_at_stream_end_is_edge_truncated():
    cfg = _cfg(11, m=3)
    full = simulate(cfg)
    last_q2 = species_arrivals(full, Quantum.Q2)[-1]
    complete = enumerate_ambiguity(last_q2, full, cfg)
    assert not complete.edge_truncated
    assert complete.best_error == 0

    # the recorder stops before the last 3-hat registers
    stream = [r for r in full if not (r.species is Quantum.Q3 and r.truth_serial == cfg.n)]
    reading = enumerate_ambiguity(last_q2, stream, cfg)
    assert reading.edge_truncated
    assert len(reading.ambiguity_set) == 2 < cfg.m
    assert reading.truth_t_c not in reading.ambiguity_set
    assert all(-cfg.T / 2 <= c <= cfg.T / 2 for c in reading.ambiguity_set)
    assert reading.best_error == cfg.T / 3


@given(n=st.integers(3, 80), m=st.integers(2, 8), phi=st.sampled_from(PHASES))
@settings(max_examples=80, deadline=None)
def test_ambiguity_in_multiples_of_T_over_m(n, m, phi):
    assume(m < n)
    cfg = _cfg(n, m=m, phi=phi)
    allowed = {j * cfg.T / m for j in range(1, m)}
    for reading in read_stream(cfg, simulate(cfg), serial_known=False):
        assert 1 <= len(reading.ambiguity_set) <= m
        assert all(-cfg.T / 2 <= c <= cfg.T / 2 for c in reading.ambiguity_set)
        assert reading.truth_t_c in reading.ambiguity_set
        for a, b in combinations(reading.ambiguity_set, 2):
            assert abs(a - b) in allowed


def test_ratio_readout_matches_span_readout():
    cfg = _cfg(20, m=3, phi=Fraction(1, 4))
    stream = simulate(cfg)
    by_serial = {}
    for record in stream:
        by_serial.setdefault(record.truth_serial, {})[record.species] = record
    for k, triad in by_serial.items():
        reading = read_time_ratio(triad[Quantum.Q1], triad[Quantum.Q2], triad[Quantum.Q3], cfg)
        assert reading.t_c == hand_scatter_time(cfg, k)


def test_ratio_readout_rejects_wrong_species():
    cfg = _cfg(10)
    q2 = species_arrivals(simulate(cfg), Quantum.Q2)[0]
    with pytest.raises(PairingError):
        read_time_ratio(q2, q2, q2, cfg)


@given(
    n=st.integers(2, 1000),
    m=st.integers(1, 8),
    num=st.integers(-(10**6), 10**6),
)
@settings(max_examples=1000, deadline=None)
def test_t0_from_ratio_matches_relativistic_factor(n, m, num):
    assume(m < n)
    cfg = _cfg(n, m=m)
    t_c = Fraction(num, 2 * 10**6) * cfg.T
    rho = t_c / cfg.T + Fraction(1, 2)
    assert t0_from_ratio(1 - rho, cfg) == (1 + cfg.beta) * t_c
    assert convert_t0(t_c, cfg) == (1 + cfg.beta) * t_c


def test_late_switch_on_falls_back_to_ambiguity(caplog):
    cfg = _cfg(11, m=2)
    stream = simulate(cfg)
    q2s = species_arrivals(stream, Quantum.Q2)
    with caplog.at_level("WARNING", logger="swclock.recorder"):
        readings = read_stream(cfg, stream, switch_on_time=q2s[3].arrival_time)
    assert "falling back" in caplog.text
    assert len(readings) == cfg.n - 3
    assert all(r.serial is None and r.truth_t_c in r.ambiguity_set for r in readings)


def test_late_switch_on_shortest_dial_stays_exact():
    cfg = _cfg(20)
    stream = simulate(cfg)
    q2s = species_arrivals(stream, Quantum.Q2)
    readings = read_stream(cfg, stream, switch_on_time=q2s[5].arrival_time + Fraction(1, 1000))
    assert len(readings) == cfg.n - 6
    assert all(r.error == 0 for r in readings)


def test_readings_csv(tmp_path):
    cfg = build_config(n=4, m=1, T=4e-8, warn=False)
    readings = read_stream(cfg, simulate(cfg))
    path = write_readings_csv(tmp_path / "readings.csv", readings, cfg)
    assert path.read_text().splitlines()[0] == f"# schema: {READINGS_SCHEMA}"
    frame = read_csv_artifact(path)
    assert list(frame["error"]) == ["0"] * 4
    assert list(frame["t_c_exact"]) == ["-3/8", "-1/8", "1/8", "3/8"]
    assert float(frame["t_c_float"][1]) == pytest.approx(-0.5e-8)



@pytest.mark.parametrize("m", [1, 3])
def test_readings_invariant_under_recorder_translation(m):
    cfg = _cfg(15, m=m, phi=Fraction(3, 4))
    far = with_recorder(cfg, cfg.recorder_x - Fraction(1000, 7))
    near = read_stream(cfg, simulate(cfg))
    moved = read_stream(far, simulate(far))
    assert [r.t_c for r in near] == [r.t_c for r in moved]
    assert [r.serial for r in near] == [r.serial for r in moved]


def test_readings_invariant_under_constant_shift():
    cfg = _cfg(15, m=2)
    stream = simulate(cfg)
    shifted = [
        ArrivalRecord(r.species, r.arrival_time + Fraction(17, 3), r.truth_serial) for r in stream
    ]
    assert [r.t_c for r in read_stream(cfg, stream)] == [
        r.t_c for r in read_stream(cfg, shifted)
    ]
