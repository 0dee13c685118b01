"""
Command-line entry point for the bench.

Usage:
    python -m bench fig1 --gamma-grid 0:1:0.02 --out results/fig1.csv
    python -m bench fig2 --alpha-grid 0.05:3:0.05 --gamma 0.32 --gate-error 1 --out results/fig2.csv
    python -m bench nogo --samples 100000 --seed 7 --out results/nogo.txt
    python -m bench plot results/fig1.csv

Options can also come from a KEY=value file passed with --config (GAMMA_GRID, ALPHA_GRID,
GAMMA, GATE_ERROR, CODES, SAMPLES, SEED, OUT, SAMPLING, POINTS, NOGO_KIND); flags win over the file.

Exit codes: 0 success, 1 an invariant was violated, 2 bad input or I/O failure.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError

from bench.sweeps import (
    CHANNEL_KINDS,
    SweepConfig,
    grid_from_range,
    load_config_file,
    read_sweep,
    run_fig1,
    run_fig2,
    run_nogo,
)
from overlap.cache import get_cache_stats
from overlap.config import settings, setup_logging
from overlap.errors import InvalidParameter, OverlapError
from overlap.models import SphereSampling

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INPUT = 2

DEFAULT_OUTPUTS = {
    "fig1": "results/fig1.csv",
    "fig2": "results/fig2.csv",
    "nogo": "results/nogo.txt",
}


def parse_grid(text: str) -> List[float]:
    """Parse 'start:stop:step' (inclusive) or a comma-separated list."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise InvalidParameter(f"Grid '{text}' must be start:stop:step")
            return grid_from_range(*parts)
        values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise InvalidParameter(f"Grid '{text}' is not numeric") from None
    if not values:
        raise InvalidParameter("Grid is empty")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="KEY=value file with defaults")
    common.add_argument("--out", help="Output path")
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    sphere = argparse.ArgumentParser(add_help=False)
    sphere.add_argument("--codes", help="Comma-separated code ids")
    sphere.add_argument("--sampling", choices=["quadrature", "monte_carlo"])
    sphere.add_argument("--points", type=int, help="Number of sphere points")

    parser = argparse.ArgumentParser(
        prog="bench", description="Codeword overlap versus concurrence under amplitude damping"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fig1 = sub.add_parser("fig1", parents=[common, sphere], help="Qubit codes over the loss grid")
    fig1.add_argument("--gamma-grid", help="start:stop:step or comma list in [0, 1]")

    fig2 = sub.add_parser("fig2", parents=[common, sphere], help="Cat codes over the amplitude grid")
    fig2.add_argument("--alpha-grid", help="start:stop:step or comma list, positive")
    fig2.add_argument("--gamma", type=float, help="Fixed loss (default 0.32)")
    fig2.add_argument(
        "--gate-error", type=float, help="Gate error scale for rep<N> codes, 0 to 1 (default 0)"
    )

    nogo = sub.add_parser("nogo", parents=[common], help="Gaussian fidelity no-go check")
    nogo.add_argument("--samples", type=int, help="Number of random (state, state, channel) triples")
    nogo.add_argument("--nogo-kind", choices=list(CHANNEL_KINDS), help="Restrict channel kind")

    plot = sub.add_parser("plot", parents=[common], help="Render SVG plots of a sweep CSV")
    plot.add_argument("csv", type=Path, help="CSV written by fig1 or fig2")

    return parser


def _merge_options(args: argparse.Namespace) -> Dict[str, str]:
    """File values first, then any flag that was given on the command line."""
    options: Dict[str, str] = load_config_file(args.config) if args.config else {}
    for key in ("gamma_grid", "alpha_grid", "gamma", "gate_error", "codes", "samples", "seed",
                "out", "sampling", "points", "nogo_kind"):
        value = getattr(args, key, None)
        if value is not None:
            options[key] = str(value)
    return options


def _sampling(options: Dict[str, str]) -> SphereSampling:
    fields = {}
    if "sampling" in options:
        fields["scheme"] = options["sampling"]
    if "points" in options:
        fields["n_points"] = int(options["points"])
    if "seed" in options:
        fields["seed"] = int(options["seed"])
    return SphereSampling(**fields)


def build_config(command: str, options: Dict[str, str]) -> SweepConfig:
    """Turn merged string options into a validated SweepConfig."""
    experiment = {"fig1": "fig1_gamma", "fig2": "fig2_alpha", "nogo": "gaussian_nogo"}[command]
    fields: Dict[str, object] = {
        "experiment": experiment,
        "output_path": Path(options.get("out", DEFAULT_OUTPUTS[command])),
    }
    grid_key = {"fig1": "gamma_grid", "fig2": "alpha_grid"}.get(command)
    if grid_key and grid_key in options:
        fields["grid"] = parse_grid(options[grid_key])
    if command != "nogo":
        if "codes" in options:
            fields["codes"] = [c for c in options["codes"].split(",") if c.strip()]
        fields["sampling"] = _sampling(options)
    if command == "fig2" and "gamma" in options:
        fields["gamma"] = float(options["gamma"])
    if command == "fig2" and "gate_error" in options:
        fields["gate_error"] = float(options["gate_error"])
    if command == "nogo":
        if "samples" in options:
            fields["samples"] = int(options["samples"])
        if "nogo_kind" in options:
            fields["nogo_kind"] = options["nogo_kind"]
    if "seed" in options:
        fields["seed"] = int(options["seed"])
    return SweepConfig(**fields)


def _run(args: argparse.Namespace) -> int:
    options = _merge_options(args)

    if args.command == "plot":
        from bench.plots import emit_plot

        out = Path(options["out"]) if "out" in options else args.csv.with_suffix(".svg")
        emit_plot(read_sweep(args.csv), out)
        return EXIT_OK

    config = build_config(args.command, options)
    if args.command == "nogo":
        report = run_nogo(config)
        if report.violations:
            logger.error(f"❌ {report.violations} sample(s) decreased the fidelity")
            return EXIT_VIOLATION
        return EXIT_OK

    runner = run_fig1 if args.command == "fig1" else run_fig2
    result = runner(config)
    if result.violations:
        for problem in result.violations:
            logger.error(f"❌ {problem}")
        return EXIT_VIOLATION
    return EXIT_OK


def _log_run_stats() -> None:
    logger.debug(f"Cache stats: {get_cache_stats()}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level, settings.log_file)
    logger.info(f"🚀 {settings.app_name} v{settings.app_version}: {args.command}")

    try:
        return _run(args)
    except ValidationError as e:
        logger.error(f"❌ Invalid options: {e}")
    except (OverlapError, ValueError) as e:
        logger.error(f"❌ {e}")
    except OSError as e:
        logger.error(f"❌ I/O error: {e}")
    finally:
        _log_run_stats()
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
