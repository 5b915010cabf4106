import argparse
from dataclasses import replace
import logging
import os
import sys
from typing import Any, Dict, Optional, Sequence
from dotenv import load_dotenv

from cran_positioning.bounds.loss import quantization_loss
from cran_positioning.errors import CalibrationError, ConfigError, SingularInformationError
from cran_positioning.experiment.config import DITHER_MODES, ConfigLoader, ExperimentConfig
from cran_positioning.experiment.crb_sweep import crb_sweep
from cran_positioning.experiment.harness import calibrate_scenarios, run_experiment
from cran_positioning.experiment.results import ResultWriter
from cran_positioning.fronthaul.quantizer import levels_for_rate

logger = logging.getLogger(__name__)

WORKERS_ENV: str = "CRAN_POSITIONING_WORKERS"
LOG_LEVEL_ENV: str = "CRAN_POSITIONING_LOG_LEVEL"
OUT_DIR_ENV: str = "CRAN_POSITIONING_OUT_DIR"
DEFAULT_OUT_DIR: str = "results"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cran-positioning",
        description="Localization over capacity-limited fronthaul: Monte Carlo RMS, CRB sweeps and quantization loss."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Experiment config (.toml or .json); defaults to the reference setup")
    common.add_argument("--seed", type=int, help="Master seed overriding the config")
    common.add_argument("--out", help=f"Output directory (default ${OUT_DIR_ENV} or '{DEFAULT_OUT_DIR}')")

    subparsers.add_parser("calibrate", parents=[common], help="Calibrate quantizer ranges and write the resolved config")

    simulate = subparsers.add_parser("simulate", parents=[common], help="Run the Monte Carlo RMS sweep")
    simulate.add_argument("--trials", type=int, help="Trials per sweep cell")
    simulate.add_argument("--methods", help="Comma-separated method list, e.g. direct-ideal,indirect")
    simulate.add_argument("--dither", choices=DITHER_MODES, help="Dithering of the direct-dithered method")

    subparsers.add_parser("crb-sweep", parents=[common], help="CRB ratio and L_Q versus SNR")

    lq = subparsers.add_parser("lq", parents=[common], help="Low-SNR quantization loss factor L_Q")
    lq.add_argument("--levels", type=int, help="Quantizer level count L")
    lq.add_argument("--r-max", type=float, help="Quantizer half-range")
    lq.add_argument("--sigma", type=float, help="Noise standard deviation per complex sample")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.reference() if args.config is None else ConfigLoader().load(args.config)
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if getattr(args, "methods", None):
        overrides["methods"] = tuple(method.strip() for method in args.methods.split(",") if method.strip())
    if getattr(args, "dither", None) is not None:
        overrides["dither"] = args.dither
    return replace(config, **overrides) if overrides else config


def run_calibrate(args: argparse.Namespace, writer: ResultWriter) -> None:
    config = load_config(args)
    snr_values = tuple(dict.fromkeys((*config.snr_db_list, *config.crb.snr_db_list)))
    config = calibrate_scenarios(config, snr_values)
    path = writer.emit_config(config)
    print(f"Wrote calibrated config to {path}")


def run_simulate(args: argparse.Namespace, writer: ResultWriter) -> None:
    config = load_config(args)
    workers = int(os.getenv(WORKERS_ENV, "1"))
    result = run_experiment(config, workers=workers)
    writer.emit_results(result.records, result.summaries, result.config, result.dither_selections)
    for summary in result.summaries:
        print(
            f"{summary.method:<18} divisor={summary.dither_divisor:<4g} snr_db={summary.snr_db:<5g} "
            f"b_over_m={summary.b_over_m:<4g} rms={summary.rms:10.2f} se={summary.standard_error:8.2f} "
            f"crb_q={summary.root_crb_quantized:8.2f} crb_uq={summary.root_crb_unquantized:8.2f}"
        )


def run_crb_sweep(args: argparse.Namespace, writer: ResultWriter) -> None:
    config = load_config(args)
    resolved = calibrate_scenarios(config, config.crb.snr_db_list)
    rows = crb_sweep(resolved)
    writer.emit_crb_sweep(rows, resolved)
    for row in rows:
        print(f"snr_db={row.snr_db:<5g} b_over_m={row.b_over_m:<4g} ratio={row.ratio:.4f} lq={row.lq:.4f}")


def run_lq(args: argparse.Namespace) -> None:
    explicit = (args.levels, args.r_max, args.sigma)
    if all(value is not None for value in explicit):
        print(f"{quantization_loss(args.levels, args.r_max, args.sigma):.9f}")
        return
    if any(value is not None for value in explicit):
        raise ConfigError("--levels, --r-max and --sigma must be given together")

    config = load_config(args)
    config = calibrate_scenarios(config, config.crb.snr_db_list)
    settings = config.scenario
    for b_over_m in config.crb.b_over_m_list:
        levels = levels_for_rate(b_over_m * settings.num_antennas, settings.num_antennas)
        for snr_db in config.crb.snr_db_list:
            scenario = config.build_scenario(snr_db, b_over_m)
            sigma = scenario.radio_units[0].noise_power ** 0.5
            calibrated = config.calibration.lookup(snr_db)
            if calibrated is None:
                raise CalibrationError(f"No calibrated range for snr_db={snr_db}")
            r_max = max(calibrated)
            print(f"b_over_m={b_over_m:<4g} snr_db={snr_db:<5g} levels={levels} "
                  f"lq={quantization_loss(levels, r_max, sigma):.6f}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the `cran-positioning` command."""
    load_dotenv()
    logging.basicConfig(
        level=os.getenv(LOG_LEVEL_ENV, "INFO").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    writer = ResultWriter(args.out or os.getenv(OUT_DIR_ENV, DEFAULT_OUT_DIR))
    try:
        if args.command == "calibrate":
            run_calibrate(args, writer)
        elif args.command == "simulate":
            run_simulate(args, writer)
        elif args.command == "crb-sweep":
            run_crb_sweep(args, writer)
        else:
            run_lq(args)
    except (ConfigError, CalibrationError, SingularInformationError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
