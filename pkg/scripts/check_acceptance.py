#!/usr/bin/env python3
"""
Desk check of the headline clock results.
Runs each check directly against the library and prints a pass/fail line.
Pass --full for the complete sweep grids (takes a few minutes).
"""
import logging
import random
import sys
import time
from fractions import Fraction
from itertools import combinations
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.append(str(project_root))

from swclock.clock_model import C, build_config, mass_bound_si
from swclock.kinematics import Quantum, simulate, species_arrivals
from swclock.oracle import oracle_pairing
from swclock.recorder import partner_offset, read_stream, t0_from_ratio
from swclock.stochastic import run_mc, summary

logging.basicConfig(
    level=logging.WARNING,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

PHASES = [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]


def _cfg(n, m=1, phi=Fraction(1, 2)):
    return build_config(n=n, m=m, T=1.0, phi=phi, warn=False)


def check_wigner_mass():
    mass = mass_bound_si(T=1e5, tau=1e-8, two_ell=C * 1e-8)
    return 0.5e-4 <= mass <= 2e-4, f"{mass:.3e} kg"


def check_exact_readout(max_n):
    for n in range(2, max_n + 1):
        for phi in PHASES:
            cfg = _cfg(n, phi=phi)
            if any(r.error != 0 for r in read_stream(cfg, simulate(cfg))):
                return False, f"n={n} phi={phi}"
    return True, f"n <= {max_n}"


def check_pairing_law(max_n, max_m):
    checked = 0
    for m in range(1, max_m + 1):
        for n in range(m + 1, max_n + 1):
            for phi in PHASES:
                cfg = _cfg(n, m=m, phi=phi)
                oracle = oracle_pairing(cfg)
                if any(partner_offset(cfg, k) != j for k, j in oracle.items()):
                    return False, f"mismatch at n={n} m={m} phi={phi}"
                checked += 1
    return True, f"{checked} configurations"


def check_thresholds():
    for n in (9, 10, 11, 12, 99, 100):
        two = _cfg(n, m=2)
        three = _cfg(n, m=3)
        for k in range(1, n + 1):
            if partner_offset(two, k) != (1 if k <= Fraction(n + 1, 2) else 2):
                return False, f"m=2 n={n} k={k}"
            expected = 1 + (k > Fraction(n, 3) + Fraction(1, 2)) + (
                k > Fraction(2 * n, 3) + Fraction(1, 2)
            )
            if partner_offset(three, k) != expected:
                return False, f"m=3 n={n} k={k}"
    return True, "n in {9, 10, 11, 12, 99, 100}"


def check_ambiguity():
    seen = {}
    for n, m in ((11, 2), (9, 3)):
        cfg = _cfg(n, m=m)
        diffs = set()
        for reading in read_stream(cfg, simulate(cfg), serial_known=False):
            diffs |= {abs(a - b) / cfg.T for a, b in combinations(reading.ambiguity_set, 2)}
        seen[m] = diffs
    ok = seen[2] == {Fraction(1, 2)} and seen[3] == {Fraction(1, 3), Fraction(2, 3)}
    return ok, f"m=2: {sorted(map(str, seen[2]))}, m=3: {sorted(map(str, seen[3]))}"


def check_spacing(max_n, max_m):
    for m in range(1, max_m + 1):
        for n in range(m + 1, max_n + 1):
            cfg = _cfg(n, m=m)
            stream = simulate(cfg)
            for quantum, spacing in ((Quantum.Q2, cfg.q2_spacing), (Quantum.Q3, cfg.q3_spacing)):
                times = [r.arrival_time for r in species_arrivals(stream, quantum)]
                if any(b - a != spacing for a, b in zip(times, times[1:])):
                    return False, f"{quantum.name} spacing n={n} m={m}"
            if m >= 2 and [r.serial for r in read_stream(cfg, stream)] != list(range(1, n + 1)):
                return False, f"serial deduction n={n} m={m}"
    return True, f"n <= {max_n}, m <= {max_m}"


def check_t0_identity(count=1000):
    rng = random.Random(7)
    for _ in range(count):
        n = rng.randint(2, 1000)
        cfg = _cfg(n, m=rng.randint(1, min(8, n - 1)))
        t_c = Fraction(rng.randint(-(10**6), 10**6), 2 * 10**6) * cfg.T
        rho = t_c / cfg.T + Fraction(1, 2)
        if t0_from_ratio(1 - rho, cfg) != (1 + cfg.beta) * t_c:
            return False, f"n={n} t_c={t_c}"
    return True, f"{count} random readings"


def check_monte_carlo():
    cfg = build_config(n=100, m=1, T=1e-6, warn=False)
    first = summary(run_mc(cfg, samples=1000, seed=42), cfg).model_dump_json()
    second = summary(run_mc(cfg, samples=1000, seed=42), cfg).model_dump_json()
    std = run_mc(cfg, samples=1000, seed=42).std
    return first == second and 0.9 <= std <= 1.1, f"std/tau = {std:.4f}"


def main():
    full = "--full" in sys.argv[1:]
    max_n = 500 if full else 60
    checks = [
        ("Wigner mass example", check_wigner_mass),
        ("Exact readout, shortest dial", lambda: check_exact_readout(200 if full else 40)),
        ("Pairing law vs oracle", lambda: check_pairing_law(max_n, 8)),
        ("Switch thresholds for m = 2, 3", check_thresholds),
        ("Ambiguity magnitudes", check_ambiguity),
        ("Spacing and serial deduction", lambda: check_spacing(max_n, 8)),
        ("t_0 conversion identity", check_t0_identity),
        ("Monte-Carlo accuracy", check_monte_carlo),
    ]

    failures = 0
    for name, check in checks:
        started = time.perf_counter()
        try:
            ok, detail = check()
        except Exception as e:
            logger.error(f"{name} raised", exc_info=True)
            ok, detail = False, str(e)
        elapsed = time.perf_counter() - started
        print(f"{'✅' if ok else '❌'} {name}: {detail} ({elapsed:.1f} s)")
        failures += not ok

    if failures:
        print(f"\n{failures} check(s) failed")
        sys.exit(1)


if __name__ == "__main__":
    main()
