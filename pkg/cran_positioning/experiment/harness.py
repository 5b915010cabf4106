from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
import logging
import math
import time
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
import numpy as np

from cran_positioning._private._helpers import as_float_list, derive_rng, stable_key, trial_seed
from cran_positioning.bounds.efim import AveragedCrb, average_crb
from cran_positioning.errors import SingularInformationError
from cran_positioning.experiment.config import ExperimentConfig
from cran_positioning.experiment.methods import MethodFactory, MethodPipeline
from cran_positioning.fronthaul.calibration import calibrate_dynamic_range
from cran_positioning.scenario.geometry import Position
from cran_positioning.scenario.signal import Scenario, draw_channel, synthesize_observation

logger = logging.getLogger(__name__)

QUANTIZED_METHODS: Tuple[str, ...] = ("direct-quantized", "direct-dithered")
CALIBRATION_STREAM: int = 1
DRAW_STREAM: int = 2
LINK_STREAM: int = 3
CRB_STREAM: int = 4
PILOT_STREAM: int = 5

CellKey = Tuple[float, float]


@dataclass(frozen=True)
class TrialRecord:
    """
    One Monte Carlo trial of one method; squared_error = ||p_hat - p_true||^2 in m^2.

    `seed` is the per-trial seed derived from (master seed, sweep cell, trial); every
    random stream of the trial is derived from it.
    """
    trial: int
    method: str
    dither_divisor: float
    snr_db: float
    b_over_m: float
    x_true: float
    y_true: float
    x_hat: float
    y_hat: float
    t0_true: float
    t0_hat: float
    squared_error: float
    seed: int


@dataclass(frozen=True)
class RmsSummary:
    """
    RMS error of one method in one sweep cell.

    The standard error of the RMS uses the delta method on the mean squared error,
    se(rms) = std(rho) / (2 rms sqrt(N)), and is NaN for a single trial. The root
    CRBs are the square roots of the position-averaged bounds of the cell (NaN when
    not computed), directly comparable with the RMS.
    """
    method: str
    dither_divisor: float
    snr_db: float
    b_over_m: float
    rms: float
    trials: int
    standard_error: float
    root_crb_quantized: float = math.nan
    root_crb_unquantized: float = math.nan


@dataclass(frozen=True)
class DitherSelection:
    """Divisor picked for one sweep cell and the pilot RMS of every candidate."""
    snr_db: float
    b_over_m: float
    divisor: float
    candidates: Tuple[float, ...]
    pilot_rms: Tuple[float, ...]


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    records: List[TrialRecord]
    summaries: List[RmsSummary]
    config: ExperimentConfig
    dither_selections: List[DitherSelection] = field(default_factory=list)


def cell_key(snr_db: float, b_over_m: float) -> int:
    return stable_key(f"{snr_db:g}/{b_over_m:g}")


def calibrate_scenarios(config: ExperimentConfig, snr_db_list: Optional[Sequence[float]] = None) -> ExperimentConfig:
    """
    Calibrate the quantizer range at every SNR that has none yet.

    Each SNR gets its own seeded stream, so results do not depend on which other
    SNRs are calibrated alongside it.

    Args:
        config: Experiment configuration, possibly with some SNRs already calibrated
        snr_db_list: SNRs to cover; defaults to the simulation SNR list

    Returns:
        Configuration whose calibration section covers every requested SNR

    Raises:
        CalibrationError: If a radio unit calibrates to a degenerate range
    """
    snr_values = config.snr_db_list if snr_db_list is None else tuple(snr_db_list)
    settings = config.calibration
    ranges: Dict[float, Tuple[float, ...]] = {}
    for snr_db in snr_values:
        if settings.lookup(snr_db) is not None or snr_db in ranges:
            continue
        # the received signal does not depend on B, so any rate builds the scenario
        scenario = config.build_scenario(snr_db, config.b_over_m_list[0])
        rng = derive_rng(config.seed, CALIBRATION_STREAM, stable_key(f"{snr_db:g}"))
        ranges[snr_db] = calibrate_dynamic_range(
            scenario, settings.coverage, settings.draws, rng, config.scenario.resolved_t0_max
        )
        logger.info("Calibrated r_max=%s for snr_db=%s", as_float_list(ranges[snr_db]), snr_db)
    return config.with_calibration(ranges) if ranges else config


def crb_positions(config: ExperimentConfig, scenario: Scenario) -> List[Position]:
    """Seeded source positions shared by every CRB average of an experiment."""
    rng = derive_rng(config.seed, CRB_STREAM)
    return [scenario.region.sample_uniform(rng) for _ in range(config.crb.positions)]


def run_trial(
    config: ExperimentConfig,
    scenario: Scenario,
    pipelines: Sequence[MethodPipeline],
    snr_db: float,
    b_over_m: float,
    trial: int,
    pilot: bool = False
) -> List[TrialRecord]:
    """
    One trial of every pipeline on the same channel, position and noise realization.

    Sharing the realization across methods pairs the comparison between them. Pilot
    trials draw from their own streams, disjoint from those of the reported trials.
    """
    keys = (PILOT_STREAM,) if pilot else ()
    seed = trial_seed(config.seed, *keys, cell_key(snr_db, b_over_m), trial)
    draw_rng = derive_rng(seed, DRAW_STREAM)
    draw = draw_channel(scenario, draw_rng, config.scenario.resolved_t0_max)
    observation = synthesize_observation(scenario, draw, draw_rng)

    records = []
    for pipeline in pipelines:
        link_rng = derive_rng(seed, LINK_STREAM, stable_key(pipeline.label))
        received = pipeline.link.transport(scenario, observation, link_rng)
        estimate = pipeline.localizer.localize(scenario, received)
        error = estimate.p_hat.as_array() - draw.p_true.as_array()
        records.append(TrialRecord(
            trial=trial,
            method=pipeline.method,
            dither_divisor=pipeline.dither_divisor,
            snr_db=snr_db,
            b_over_m=b_over_m,
            x_true=draw.p_true.x,
            y_true=draw.p_true.y,
            x_hat=estimate.p_hat.x,
            y_hat=estimate.p_hat.y,
            t0_true=draw.t0,
            t0_hat=estimate.t0_hat,
            squared_error=float(np.sum(error ** 2)),
            seed=seed
        ))
    return records


def select_dither_divisor(
    config: ExperimentConfig,
    factory: MethodFactory,
    scenario: Scenario,
    snr_db: float,
    b_over_m: float,
    executor: Executor,
    method: str = "direct-dithered"
) -> DitherSelection:
    """
    Pick the dither divisor with the lowest RMS over the cell's pilot trials.

    Every candidate of `dither_divisors` sees the same pilot realizations; ties go to
    the earlier candidate.
    """
    candidates = [factory.create(method, divisor) for divisor in config.dither_divisors]
    squared_errors: Dict[str, List[float]] = {pipeline.label: [] for pipeline in candidates}
    slots = executor.map(
        partial(run_trial, config, scenario, candidates, snr_db, b_over_m, pilot=True),
        range(config.dither_pilot_trials)
    )
    for trial_records in slots:
        for pipeline, record in zip(candidates, trial_records):
            squared_errors[pipeline.label].append(record.squared_error)
    pilot_rms = tuple(math.sqrt(float(np.mean(squared_errors[pipeline.label]))) for pipeline in candidates)
    best = int(np.argmin(pilot_rms))
    selection = DitherSelection(
        snr_db=snr_db,
        b_over_m=b_over_m,
        divisor=config.dither_divisors[best],
        candidates=tuple(config.dither_divisors),
        pilot_rms=pilot_rms
    )
    logger.info(
        "Selected dither divisor %g for snr_db=%s b_over_m=%s (pilot rms %s)",
        selection.divisor, snr_db, b_over_m, [round(value, 1) for value in pilot_rms]
    )
    return selection


def cell_bounds(config: ExperimentConfig, scenario: Scenario) -> Optional[AveragedCrb]:
    """
    Position-averaged CRBs of one sweep cell under its own per-RU quantizers.

    The quantized bound is NaN when the scenario carries no quantizers; None is
    returned when every position is singular.
    """
    quantizers = [unit.quantizer for unit in scenario.radio_units if unit.quantizer is not None]
    try:
        return average_crb(
            scenario,
            crb_positions(config, scenario),
            quantizers if len(quantizers) == scenario.num_radio_units else None
        )
    except SingularInformationError as e:
        logger.warning("No bounds for this cell: %s", e)
        return None


def run_experiment(
    config: ExperimentConfig,
    workers: int = 1,
    methods: Optional[Sequence[str]] = None
) -> ExperimentResult:
    """
    Monte Carlo RMS evaluation over every (SNR, B/M) cell.

    Trials of a cell run on a thread pool; results are collected by trial index, so
    the output is identical for any worker count.

    Args:
        config: Experiment configuration
        workers: Thread pool size
        methods: Overrides the configured method list

    Returns:
        ExperimentResult with per-trial records, per-cell summaries, the dither
        selections and the resolved config

    Raises:
        ConfigError: If the method list is empty or unknown
        CalibrationError: If calibration fails
    """
    if workers < 1:
        raise ValueError(f"Number of workers must be at least 1, got {workers}")
    factory = MethodFactory(config)
    pipelines = factory.generate(methods)
    if any(pipeline.method in QUANTIZED_METHODS for pipeline in pipelines):
        config = calibrate_scenarios(config)

    records: List[TrialRecord] = []
    selections: List[DitherSelection] = []
    bounds: Dict[CellKey, AveragedCrb] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        for snr_db in config.snr_db_list:
            r_max = config.calibration.lookup(snr_db)
            for b_over_m in config.b_over_m_list:
                started = time.monotonic()
                scenario = config.build_scenario(snr_db, b_over_m, r_max)
                cell_pipelines = []
                for pipeline in pipelines:
                    if pipeline.selects_divisor:
                        selection = select_dither_divisor(
                            config, factory, scenario, snr_db, b_over_m, executor, pipeline.method
                        )
                        selections.append(selection)
                        pipeline = factory.create(pipeline.method, selection.divisor)
                    cell_pipelines.append(pipeline)

                slots = executor.map(
                    partial(run_trial, config, scenario, cell_pipelines, snr_db, b_over_m),
                    range(config.trials)
                )
                for trial_records in slots:
                    records.extend(trial_records)
                if config.crb.simulate_bounds:
                    averaged = cell_bounds(config, scenario)
                    if averaged is not None:
                        bounds[(snr_db, b_over_m)] = averaged
                logger.info(
                    "Finished snr_db=%s b_over_m=%s: %d trials x %d methods in %.1fs",
                    snr_db, b_over_m, config.trials, len(cell_pipelines), time.monotonic() - started
                )
    return ExperimentResult(
        records=records,
        summaries=summarize(records, bounds),
        config=config,
        dither_selections=selections
    )


def summarize(
    records: Iterable[TrialRecord],
    bounds: Optional[Dict[CellKey, AveragedCrb]] = None
) -> List[RmsSummary]:
    """RMS per (method, dither divisor, SNR, B/M), in order of first appearance."""
    groups: Dict[Tuple[str, str, float, float], List[TrialRecord]] = {}
    for record in records:
        key = (record.method, repr(record.dither_divisor), record.snr_db, record.b_over_m)
        groups.setdefault(key, []).append(record)

    summaries = []
    for group in groups.values():
        errors = np.array([record.squared_error for record in group])
        rms = float(np.sqrt(np.mean(errors)))
        if len(errors) < 2:
            standard_error = math.nan
        elif rms == 0:
            standard_error = 0.0
        else:
            standard_error = float(np.std(errors, ddof=1) / (2.0 * rms * math.sqrt(len(errors))))
        first = group[0]
        averaged = (bounds or {}).get((first.snr_db, first.b_over_m))
        summaries.append(RmsSummary(
            method=first.method,
            dither_divisor=first.dither_divisor,
            snr_db=first.snr_db,
            b_over_m=first.b_over_m,
            rms=rms,
            trials=len(errors),
            standard_error=standard_error,
            root_crb_quantized=math.nan if averaged is None else math.sqrt(averaged.crb_quantized),
            root_crb_unquantized=math.nan if averaged is None else math.sqrt(averaged.crb_unquantized)
        ))
    return summaries


def paired_rms_difference(
    records: Sequence[TrialRecord],
    method: str,
    baseline: str,
    snr_db: float,
    b_over_m: float,
    dither_divisor: Optional[float] = None,
    baseline_divisor: Optional[float] = None
) -> Tuple[float, float]:
    """
    RMS(baseline) - RMS(method) on paired trials of one cell, with its standard error.

    Both methods saw the same realizations, so the error of the difference comes from
    the per-trial differences of squared error (delta method). A divisor restricts the
    records of `method` (or `baseline`) to that dither divisor, which keeps a dither
    sweep from mixing its divisors.

    Returns:
        (difference, standard_error)

    Raises:
        ValueError: If fewer than 2 paired trials match or an RMS is zero
    """
    def errors(name: str, divisor: Optional[float]) -> np.ndarray:
        selected = sorted(
            (record for record in records
             if record.method == name and record.snr_db == snr_db and record.b_over_m == b_over_m
             and (divisor is None or record.dither_divisor == divisor)),
            key=lambda record: record.trial
        )
        return np.array([record.squared_error for record in selected])

    ours, theirs = errors(method, dither_divisor), errors(baseline, baseline_divisor)
    if len(ours) != len(theirs) or len(ours) < 2:
        raise ValueError(f"Need at least 2 paired trials, got {len(ours)} and {len(theirs)}")
    rms_ours, rms_theirs = math.sqrt(float(np.mean(ours))), math.sqrt(float(np.mean(theirs)))
    if rms_ours == 0 or rms_theirs == 0:
        raise ValueError("Paired RMS difference is undefined when an RMS is zero")
    # d(sqrt(a) - sqrt(b)) = da / (2 sqrt(a)) - db / (2 sqrt(b))
    influence = theirs / (2.0 * rms_theirs) - ours / (2.0 * rms_ours)
    return rms_theirs - rms_ours, float(np.std(influence, ddof=1) / math.sqrt(len(ours)))
