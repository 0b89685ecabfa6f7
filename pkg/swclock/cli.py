"""
Command-line front end.

    swclock simulate --config run.json [--no-serial]
    swclock pairing-table --n 11 --m 2 [--phi 1/2]
    swclock ambiguity --config run.json
    swclock mass-bound --T 1e5 --tau 1e-8 [--two-ell METERS]
    swclock monte-carlo --config run.json --samples 1000 --seed 7
    swclock sweep --max-n 500 --max-m 8

Exit codes: 0 success, 1 certification failure, 2 invalid configuration,
3 I/O failure.
"""
import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from swclock import __version__
from swclock.clock_model import C, ClockConfig, build_config, mass_bound_si
from swclock.config import configure_logging, get_settings
from swclock.errors import ClockError, ConfigError, MonteCarloError, PairingError
from swclock.kinematics import Quantum, simulate, species_arrivals, write_arrivals_csv
from swclock.oracle import oracle_pairing, pairing_rows, write_pairing_table_csv
from swclock.recorder import partner_offset, read_stream, write_readings_csv
from swclock.schemas import ClockConfigRequest, MassBoundResponse, RunManifest
from swclock.stochastic import run_mc_parallel, summary, verify_precision
from swclock.utils.csv_io import write_csv_atomic, write_text_atomic
from swclock.utils.rationals import format_rational, parse_rational

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_CONFIG = 2
EXIT_IO = 3

DEFAULT_OUT = Path("swclock_out")
SWEEP_PHASES = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1))
SWEEP_SCHEMA = "swclock.sweep/v1"


def load_request(path: Path) -> ClockConfigRequest:
    """Read and validate a JSON run configuration."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path} is not UTF-8 text: {e}") from None
    return ClockConfigRequest.model_validate(data)


def output_dir(args: argparse.Namespace) -> Path:
    settings_out = get_settings().out
    if settings_out is not None:
        return Path(settings_out)
    return Path(args.out) if args.out else DEFAULT_OUT


def write_manifest(out: Path, subcommand: str, config: Dict, outputs: List[Path]) -> Path:
    manifest = RunManifest(
        subcommand=subcommand,
        config=config,
        outputs=[path.name for path in outputs],
        tool_version=__version__,
        timestamp=datetime.now(timezone.utc),
    )
    path = out / f"{subcommand.replace('-', '_')}_manifest.json"
    return write_text_atomic(path, manifest.model_dump_json(indent=2) + "\n")


def _max_abs_error(readings) -> Fraction:
    errors = [reading.best_error for reading in readings if reading.best_error is not None]
    return max((abs(e) for e in errors), default=Fraction(0))


def cmd_simulate(args: argparse.Namespace) -> int:
    request = load_request(args.config)
    cfg = request.to_config()
    stream = simulate(cfg)
    readings = read_stream(cfg, stream, serial_known=not args.no_serial)

    out = output_dir(args)
    outputs = [
        write_arrivals_csv(out / "arrivals.csv", stream),
        write_readings_csv(out / "readings.csv", readings, cfg),
    ]
    write_manifest(out, "simulate", request.model_dump(), outputs)

    worst = _max_abs_error(readings)
    print(f"n={cfg.n} m={cfg.m} beta={format_rational(cfg.beta)} max_abs_error={worst}")
    return EXIT_OK


def cmd_ambiguity(args: argparse.Namespace) -> int:
    request = load_request(args.config)
    cfg = request.to_config()
    readings = read_stream(cfg, simulate(cfg), serial_known=False)

    out = output_dir(args)
    outputs = [write_readings_csv(out / "ambiguity.csv", readings, cfg)]
    write_manifest(out, "ambiguity", request.model_dump(), outputs)

    ambiguous = sum(1 for reading in readings if reading.is_ambiguous)
    truncated = sum(1 for reading in readings if reading.edge_truncated)
    print(
        f"n={cfg.n} m={cfg.m} readings={len(readings)} "
        f"ambiguous={ambiguous} edge_truncated={truncated}"
    )
    return EXIT_OK


def cmd_pairing_table(args: argparse.Namespace) -> int:
    try:
        phi = parse_rational(args.phi)
    except ValueError as e:
        raise ConfigError(f"Invalid phi: {e}") from None
    # T only scales the SI outputs; pairing is scale free
    cfg = build_config(n=args.n, m=args.m, T=1.0, phi=phi)
    closed_form = {k: partner_offset(cfg, k) for k in range(1, cfg.n + 1)}
    rows = pairing_rows(cfg, closed_form)
    frame_rows = [
        {key: row[key] for key in ("k", "offset_closed_form", "offset_oracle", "match")}
        for row in rows
    ]

    out = output_dir(args)
    outputs = [write_pairing_table_csv(out / "pairing_table.csv", frame_rows)]
    config = {"n": cfg.n, "m": cfg.m, "phi": format_rational(cfg.phi)}
    write_manifest(out, "pairing-table", config, outputs)

    mismatches = [row["k"] for row in rows if not row["match"]]
    print(f"n={cfg.n} m={cfg.m} phi={cfg.phi} mismatches={len(mismatches)}")
    if mismatches:
        logger.error(f"Closed-form pairing disagrees with oracle at k = {mismatches}")
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_mass_bound(args: argparse.Namespace) -> int:
    two_ell = args.two_ell if args.two_ell is not None else C * args.tau
    response = MassBoundResponse(
        T_seconds=args.T,
        tau_seconds=args.tau,
        two_ell_meters=two_ell,
        mass_bound_kg=mass_bound_si(args.T, args.tau, two_ell),
    )
    print(response.model_dump_json())
    return EXIT_OK


def cmd_monte_carlo(args: argparse.Namespace) -> int:
    request = load_request(args.config)
    cfg = request.to_config()
    seed = args.seed if args.seed is not None else (request.seed or 0)
    options = {
        "sigma": args.sigma,
        "spread_inflation": args.spread_inflation,
        "perturb_dial": args.perturb_dial,
        "resolve_serial": cfg.m >= 2,
    }
    run = run_mc_parallel(cfg, args.samples, seed, workers=get_settings().workers, **options)
    worst = verify_precision(
        cfg,
        run,
        sigma=args.sigma,
        spread_inflation=args.spread_inflation,
        perturb_dial=args.perturb_dial,
    )
    logger.debug(f"Float readout within {worst} tau of exact recomputation")

    out = output_dir(args)
    body = summary(run, cfg).model_dump_json()
    outputs = [write_text_atomic(out / "monte_carlo_summary.json", body + "\n")]
    config = request.model_dump()
    config.update(samples=args.samples, seed=seed, **options)
    write_manifest(out, "monte-carlo", config, outputs)

    print(body)
    return EXIT_OK


def certify(cfg: ClockConfig) -> Dict:
    """Closed form against oracle, spacing identities and exact readout for one config."""
    oracle = oracle_pairing(cfg)
    mismatches = sum(1 for k, j in oracle.items() if partner_offset(cfg, k) != j)

    stream = simulate(cfg)
    q2 = [record.arrival_time for record in species_arrivals(stream, Quantum.Q2)]
    q3 = [record.arrival_time for record in species_arrivals(stream, Quantum.Q3)]
    spacing_ok = all(b - a == cfg.q2_spacing for a, b in zip(q2, q2[1:])) and all(
        b - a == cfg.q3_spacing for a, b in zip(q3, q3[1:])
    )

    readings = read_stream(cfg, stream, serial_known=True)
    readout_exact = all(reading.error == 0 for reading in readings)
    if cfg.m >= 2:
        readout_exact = readout_exact and [r.serial for r in readings] == list(range(1, cfg.n + 1))

    return {
        "n": cfg.n,
        "m": cfg.m,
        "phi": format_rational(cfg.phi),
        "pairing_mismatches": mismatches,
        "spacing_ok": spacing_ok,
        "readout_exact": readout_exact,
    }


def _certify_params(params) -> Dict:
    n, m, phi = params
    return certify(build_config(n=n, m=m, T=1.0, phi=phi, warn=False))


def sweep_params(max_n: int, max_m: int, phases: Sequence[Fraction] = SWEEP_PHASES):
    """(n, m, phi) grid; n starts at m + 1 since n = m makes the hand luminal."""
    return [
        (n, m, phi)
        for m in range(1, max_m + 1)
        for n in range(m + 1, max_n + 1)
        for phi in phases
    ]


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.max_m < 1 or args.max_n < 2:
        raise ConfigError("sweep needs --max-m >= 1 and --max-n >= 2")
    params = sweep_params(args.max_n, args.max_m)
    if not params:
        raise ConfigError(f"empty sweep grid for max_n = {args.max_n}, max_m = {args.max_m}")
    workers = get_settings().workers
    logger.info(f"Certifying {len(params)} configurations with {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_certify_params, params, chunksize=64))
    else:
        rows = [_certify_params(p) for p in params]

    frame = pd.DataFrame(rows)
    out = output_dir(args)
    outputs = [write_csv_atomic(out / "sweep.csv", frame, SWEEP_SCHEMA)]
    write_manifest(out, "sweep", {"max_n": args.max_n, "max_m": args.max_m}, outputs)

    failed = frame[
        (frame["pairing_mismatches"] > 0) | ~frame["spacing_ok"] | ~frame["readout_exact"]
    ]
    print(f"configurations={len(frame)} failures={len(failed)}")
    if len(failed):
        logger.error(f"{len(failed)} configurations failed certification")
        return EXIT_MISMATCH
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swclock",
        description="Salecker-Wigner clock readout simulator",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="Overrides SWCLOCK_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", type=Path, default=None, help="Output directory")

    p = sub.add_parser("simulate", help="Simulate a clock run and read every triad")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--no-serial", action="store_true", help="Recorder ignores serial numbers")
    add_out(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pairing-table", help="Closed-form vs oracle partner offsets")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--phi", default="1/2")
    add_out(p)
    p.set_defaults(func=cmd_pairing_table)

    p = sub.add_parser("ambiguity", help="Candidate readings without serial numbers")
    p.add_argument("--config", type=Path, required=True)
    add_out(p)
    p.set_defaults(func=cmd_ambiguity)

    p = sub.add_parser("mass-bound", help="Minimal clock mass for given T, tau, 2*ell (SI)")
    p.add_argument("--T", type=float, required=True, help="Running time (s)")
    p.add_argument("--tau", type=float, required=True, help="Accuracy (s)")
    p.add_argument("--two-ell", type=float, default=None, help="Dial length (m); default c*tau")
    p.set_defaults(func=cmd_mass_bound)

    p = sub.add_parser("monte-carlo", help="Reading-error statistics from hand indeterminacy")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=None, help="Overrides the config seed")
    p.add_argument("--sigma", type=float, default=None, help="Displacement std in c*tau")
    p.add_argument("--spread-inflation", action="store_true")
    p.add_argument("--perturb-dial", action="store_true")
    add_out(p)
    p.set_defaults(func=cmd_monte_carlo)

    p = sub.add_parser("sweep", help="Certify pairing, spacing and readout over a grid")
    p.add_argument("--max-n", type=int, default=500)
    p.add_argument("--max-m", type=int, default=8)
    add_out(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        configure_logging(args.log_level)
        return args.func(args)
    except (ConfigError, ValidationError, json.JSONDecodeError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG
    except (PairingError, MonteCarloError) as e:
        logger.error(f"Run failed: {e}")
        return EXIT_MISMATCH
    except OSError as e:
        logger.error(f"I/O failure: {e}", exc_info=True)
        return EXIT_IO
    except ClockError as e:
        logger.error(f"Clock error: {e}", exc_info=True)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
