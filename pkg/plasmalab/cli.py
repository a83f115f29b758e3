from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Dict, List, Optional, Sequence

from plasmalab import __version__
from plasmalab.config import RunConfig, parse_config
from plasmalab.diagnostics import (
    format_energy_series,
    lift_ae_solution,
    lift_euler_solution,
)
from plasmalab.eos import EosPair
from plasmalab.errors import ConfigError
from plasmalab.experiments import (
    AnyState,
    SweepSettings,
    run_joint_sweep,
    run_zem_sweep,
    simulate,
    well_prepared_init,
)
from plasmalab.mesh import (
    AdiabaticState,
    Mesh1D,
    PlasmaState,
    format_field_dump,
    primitive_from_conserved,
)
from plasmalab.verification import CHECKS, format_report, run_checks

RATE_WINDOW = (0.7, 1.3)


def build_arg_parser() -> argparse.ArgumentParser:
    """Build and return the argument parser for the plasmalab CLI."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-c",
        "--config",
        help="Config file of 'key = value' lines (default: built-in defaults)",
    )
    common.add_argument(
        "-o",
        "--output-dir",
        help="Directory for CSV output (overrides output_dir)",
    )
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one config key; may be repeated",
    )

    parser = argparse.ArgumentParser(
        prog="plasmalab",
        description="Finite-volume lab for the bipolar Euler-Poisson system "
        "and its zero-electron-mass and quasi-neutral limits.",
        epilog="Examples:\n"
        "  plasmalab run -c bep.cfg\n"
        "  plasmalab run --set system=euler --set amplitude=0 -o out\n"
        "  plasmalab sweep --limit zem -c sweep.cfg\n"
        "  plasmalab verify --check ibp --check mms\n"
        "  plasmalab --version",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Enable verbose output",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"plasmalab {__version__}",
        help="Show version information",
    )

    commands = parser.add_subparsers(dest="command", metavar="{run,sweep,verify}")
    commands.add_parser(
        "run",
        parents=[common],
        help="Simulate one system and write field dumps and energy.csv",
    )
    sweep = commands.add_parser(
        "sweep",
        parents=[common],
        help="Run a limit sweep and write sweep_<limit>.csv",
    )
    sweep.add_argument(
        "--limit",
        choices=("zem", "joint"),
        required=True,
        help="zem: eps -> 0 against the adiabatic-electron reference; "
        "joint: eps = delta -> 0 against the Euler reference",
    )
    verify = commands.add_parser(
        "verify",
        parents=[common],
        help="Run verification suites and print a pass/fail report",
    )
    verify.add_argument(
        "--check",
        dest="checks",
        action="append",
        choices=CHECKS,
        help="Suite to run; may be repeated (default: all)",
    )

    return parser


def parse_args(argv: Optional[List[str]]) -> argparse.Namespace:
    """Parse CLI arguments."""
    parser = build_arg_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.error("a command is required: run, sweep or verify")

    args.override_map = {}
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            parser.error(f"--set expects KEY=VALUE, got '{item}'")
        args.override_map[key.strip()] = value.strip()
    if args.output_dir:
        args.override_map["output_dir"] = args.output_dir

    return args


def load_config(path: Optional[str], overrides: Dict[str, str]) -> RunConfig:
    """Read and validate the config file, applying command-line overrides."""
    text = ""
    if path is not None:
        if not os.path.isfile(path):
            raise FileNotFoundError(f"Config file not found: {path}")
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    return parse_config(text, overrides)


def write_output(text: str, output_path: Optional[str]) -> None:
    """Write text to a file or stdout."""
    if output_path is None:
        sys.stdout.write(text)
        return
    try:
        with open(output_path, "w", encoding="utf-8") as f:
            f.write(text)
    except Exception as e:
        raise RuntimeError(f"Failed to write output file '{output_path}': {e}") from e


def configure_logging(verbose: bool) -> None:
    """Configure logging based on verbosity."""
    level = logging.INFO if verbose else logging.WARNING
    logging.basicConfig(
        level=level, format="%(levelname)s: %(message)s", stream=sys.stderr
    )
    logging.getLogger("plasmalab").setLevel(level)


def format_fields(
    mesh: Mesh1D,
    state: AnyState,
    eos: EosPair,
    floor: float,
    header: Sequence[str] = (),
) -> str:
    """Field dump of any system; limit states are written in lifted form."""
    if isinstance(state, PlasmaState):
        u, _ = primitive_from_conserved(state.ion, floor)
        v, _ = primitive_from_conserved(state.electron, floor)
        return format_field_dump(
            mesh,
            state.ion.density,
            u,
            state.electron.density,
            v,
            state.phi,
            tuple(header),
        )
    if isinstance(state, AdiabaticState):
        ref = lift_ae_solution(mesh, state, eos, floor=floor)
    else:
        ref = lift_euler_solution(mesh, state, eos, floor=floor)
    return format_field_dump(
        mesh, ref.rhobar, ref.ubar, ref.nbar, ref.vbar, ref.phibar, tuple(header)
    )


def _initial_state(config: RunConfig, mesh: Mesh1D) -> AnyState:
    data = well_prepared_init(
        mesh,
        config.eps,
        config.delta,
        config.eos(),
        config.amplitude,
        "euler" if config.system == "euler" else "ae",
        config.scheme(),
        config.kick,
    )
    return data.plasma if config.system == "bep" else data.limit


def run_command(config: RunConfig) -> int:
    mesh = config.mesh()
    eos = config.eos()
    header = config.header_lines()
    os.makedirs(config.output_dir, exist_ok=True)

    def dump(step: int, state: AnyState) -> None:
        path = os.path.join(config.output_dir, f"fields_{step:06d}.csv")
        logging.info(f"Writing field dump: {path}")
        text = format_fields(mesh, state, eos, config.density_floor, header)
        write_output(text, path)

    logging.info(f"Simulating system '{config.system}' on {config.ncells} cells")
    initial = _initial_state(config, mesh)
    dump(0, initial)
    record = simulate(mesh, initial, eos, config.scheme(), on_snapshot=dump)

    path = os.path.join(config.output_dir, "energy.csv")
    logging.info(f"Writing energy history: {path}")
    write_output(format_energy_series(record.times, record.energies, header), path)
    return 0


def sweep_command(config: RunConfig, limit: str) -> int:
    settings = SweepSettings(
        config.L,
        config.ncells,
        config.eos(),
        config.scheme(),
        config.amplitude,
        config.samples,
        config.kick,
    )
    logging.info(f"Running {limit} sweep over eps = {list(config.eps_list)}")
    if limit == "zem":
        result = run_zem_sweep(settings, config.eps_list, config.delta, config.workers)
    else:
        pairs = [(eps, eps) for eps in config.eps_list]
        result = run_joint_sweep(settings, pairs, config.workers)

    os.makedirs(config.output_dir, exist_ok=True)
    path = os.path.join(config.output_dir, f"sweep_{limit}.csv")
    logging.info(f"Writing sweep results: {path}")
    write_output(result.to_csv(config.header_lines()), path)

    summary = result.summary()
    if result.fit is not None:
        low, high = RATE_WINDOW
        inside = low <= result.fit.slope <= high
        summary += f"slope in [{low}, {high}]: {'yes' if inside else 'no'}\n"
    write_output(summary, None)

    if result.error is not None:
        logging.error(f"Sweep aborted: {result.error}")
        return 1
    return 0


def verify_command(config: RunConfig, checks: Optional[List[str]]) -> int:
    results = run_checks(config, checks or CHECKS)
    write_output(format_report(results, config.header_lines()), None)
    return 0 if all(r.passed for r in results) else 1


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point for the plasmalab CLI."""
    try:
        args = parse_args(argv)
        configure_logging(args.verbose)

        config = load_config(args.config, args.override_map)
        logging.info("Configuration validated successfully")

        if args.command == "run":
            return run_command(config)
        if args.command == "sweep":
            return sweep_command(config, args.limit)
        return verify_command(config, args.checks)

    except SystemExit as e:
        # argparse exits with SystemExit on --help, --version, or errors
        return int(e.code) if isinstance(e.code, int) else 1
    except ConfigError as e:
        logging.error(f"Invalid configuration: {e}")
        return 2
    except FileNotFoundError as e:
        logging.error(str(e))
        return 1
    except ValueError as e:
        logging.error(str(e))
        return 1
    except RuntimeError as e:
        logging.error(str(e))
        return 1
    except Exception as e:
        logging.error(f"Unexpected error: {e}")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
