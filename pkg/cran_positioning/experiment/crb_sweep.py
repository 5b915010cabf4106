from dataclasses import dataclass
import logging
import math
from typing import List, Sequence

from cran_positioning.bounds.efim import average_crb
from cran_positioning.bounds.loss import quantization_loss
from cran_positioning.errors import CalibrationError
from cran_positioning.experiment.config import ExperimentConfig
from cran_positioning.experiment.harness import calibrate_scenarios, crb_positions

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CrbSweepRow:
    """
    Position-averaged CRBs at one (SNR, B/M) point.

    Attributes:
        levels: Level count of the first RU's quantizer
        r_max: Range of the first RU's quantizer
        crb_quantized: Mean CRB^Q over the usable positions, m^2
        crb_unquantized: Mean CRB^UQ over the usable positions, m^2
        ratio: crb_unquantized / crb_quantized
        lq: Low-SNR loss factor of the first RU's quantizer
        positions_used: Positions whose information matrices were invertible
        positions_skipped: Positions dropped because a matrix was singular
    """
    snr_db: float
    b_over_m: float
    levels: int
    r_max: float
    crb_quantized: float
    crb_unquantized: float
    ratio: float
    lq: float
    positions_used: int
    positions_skipped: int


def crb_sweep(config: ExperimentConfig) -> List[CrbSweepRow]:
    """
    CRB^Q, CRB^UQ, their ratio and L_Q over the configured SNR and B/M points.

    With the "equal" pattern every RU gets the same rate B and the same quantizer,
    whose range is the largest calibrated r_max at that SNR. With "configured" each
    RU keeps its fronthaul multiplier and its own calibrated range. The same seeded
    source positions are used at every point.

    Args:
        config: Experiment configuration; its [crb] section drives the sweep

    Returns:
        One row per (B/M, SNR) point

    Raises:
        SingularInformationError: If no position yields an invertible information matrix
    """
    settings = config.crb
    config = calibrate_scenarios(config, settings.snr_db_list)
    num_units = len(config.scenario.ru_positions)
    equal = settings.pattern == "equal"
    if equal and list(config.fronthaul_pattern) != [1.0] * num_units:
        logger.info("CRB sweep uses equal fronthaul rates; ignoring pattern %s", list(config.fronthaul_pattern))

    rows = []
    for b_over_m in settings.b_over_m_list:
        for snr_db in settings.snr_db_list:
            calibrated = config.calibration.lookup(snr_db)
            if calibrated is None:
                raise CalibrationError(f"No calibrated range for snr_db={snr_db}")
            r_max: Sequence[float] = [max(calibrated)] * num_units if equal else calibrated
            scenario = config.build_scenario(
                snr_db, b_over_m, r_max, fronthaul_pattern=[1.0] * num_units if equal else None
            )
            quantizers = [unit.quantizer for unit in scenario.radio_units if unit.quantizer is not None]
            averaged = average_crb(scenario, crb_positions(config, scenario), quantizers)

            sigma = math.sqrt(scenario.radio_units[0].noise_power)
            rows.append(CrbSweepRow(
                snr_db=snr_db,
                b_over_m=b_over_m,
                levels=quantizers[0].levels,
                r_max=quantizers[0].r_max,
                crb_quantized=averaged.crb_quantized,
                crb_unquantized=averaged.crb_unquantized,
                ratio=averaged.crb_unquantized / averaged.crb_quantized,
                lq=quantization_loss(quantizers[0].levels, quantizers[0].r_max, sigma),
                positions_used=averaged.positions_used,
                positions_skipped=averaged.positions_skipped
            ))
            logger.info(
                "CRB snr_db=%s b_over_m=%s: ratio=%.4f lq=%.4f (%d skipped)",
                snr_db, b_over_m, rows[-1].ratio, rows[-1].lq, averaged.positions_skipped
            )
    return rows
