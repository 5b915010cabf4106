from pathlib import Path
import math
from unittest.mock import patch
import pandas as pd
import pytest

from cran_positioning.experiment.config import ConfigLoader, ExperimentConfig
from cran_positioning.experiment.crb_sweep import CrbSweepRow
from cran_positioning.experiment.harness import DitherSelection, RmsSummary, TrialRecord
from cran_positioning.experiment.results import ResultWriter

@pytest.fixture
def records() -> list:
    """Fixture for per-trial records of two methods."""
    return [
        TrialRecord(
            trial=trial, method=method, dither_divisor=divisor, snr_db=0.0, b_over_m=2.0,
            x_true=1000.0, y_true=2000.0, x_hat=1010.0, y_hat=2000.0, t0_true=1e-6, t0_hat=1.25e-6,
            squared_error=100.0, seed=2017
        )
        for trial in range(3)
        for method, divisor in (("direct-quantized", math.nan), ("direct-dithered", 2.0))
    ]

@pytest.fixture
def summaries() -> list:
    """Fixture for per-cell summaries."""
    return [RmsSummary("direct-quantized", math.nan, 0.0, 2.0, 10.0, 3, 0.0)]

@pytest.fixture
def writer(tmp_path: Path) -> ResultWriter:
    """Fixture for ResultWriter instance in a fresh directory."""
    return ResultWriter(tmp_path / "out")

def test_emit_results(writer: ResultWriter, records: list, summaries: list) -> None:
    """Test the files written for a simulation and their contents."""
    config = ExperimentConfig.reference().with_calibration({0.0: (0.5, 0.5, 0.5, 0.7)})
    written = writer.emit_results(records, summaries, config)
    assert [path.name for path in written] == [
        "trials.csv", "trials.parquet", "summary.csv", "summary.parquet", "config.json"
    ]
    trials = pd.read_csv(writer.out_dir / "trials.csv")
    assert len(trials) == 6
    assert list(trials.columns) == list(TrialRecord.__dataclass_fields__)
    assert trials["dither_divisor"].isna().sum() == 3
    assert len(pd.read_parquet(writer.out_dir / "summary.parquet")) == 1
    assert ConfigLoader().load(writer.out_dir / "config.json") == config

def test_emit_results_overwrites(writer: ResultWriter, records: list, summaries: list) -> None:
    """Test that a rerun replaces earlier files with identical content."""
    config = ExperimentConfig.reference()
    writer.emit_results(records, summaries, config)
    first = (writer.out_dir / "trials.csv").read_text()
    writer.emit_results(records, summaries, config)
    assert (writer.out_dir / "trials.csv").read_text() == first

def test_emit_empty_table(writer: ResultWriter) -> None:
    """Test that an empty table keeps its header."""
    writer.emit_results([], [], ExperimentConfig.reference())
    assert list(pd.read_csv(writer.out_dir / "summary.csv").columns) == list(RmsSummary.__dataclass_fields__)

def test_emit_dither_selection(writer: ResultWriter, records: list, summaries: list) -> None:
    """Test one selection row per cell and candidate divisor."""
    selection = DitherSelection(0.0, 2.0, 16.0, (2.0, 16.0), (806.0, 624.0))
    written = writer.emit_results(records, summaries, ExperimentConfig.reference(), [selection])
    assert "dither_selection.csv" in [path.name for path in written]
    table = pd.read_csv(writer.out_dir / "dither_selection.csv")
    assert table["divisor"].tolist() == [2.0, 16.0]
    assert table["pilot_rms"].tolist() == [806.0, 624.0]
    assert table["selected"].tolist() == [False, True]

def test_emit_crb_sweep(writer: ResultWriter) -> None:
    """Test the CRB sweep table."""
    row = CrbSweepRow(-10.0, 2.0, 2, 1.5, 40.0, 25.0, 0.625, 0.63, 99, 1)
    written = writer.emit_crb_sweep([row], ExperimentConfig.reference())
    assert [path.name for path in written] == ["crb_sweep.csv", "crb_sweep.parquet", "config.json"]
    table = pd.read_csv(writer.out_dir / "crb_sweep.csv")
    assert table.loc[0, "ratio"] == pytest.approx(0.625)
    assert table.loc[0, "positions_skipped"] == 1

def test_emit_table_failure(writer: ResultWriter, summaries: list, records: list) -> None:
    """Test that a write failure names the file."""
    with patch("pandas.DataFrame.to_csv", side_effect=OSError("disk full")):
        with pytest.raises(OSError) as exc_info:
            writer.emit_results(records, summaries, ExperimentConfig.reference())
    assert "Failed to write" in str(exc_info.value)
    assert "trials.csv: disk full" in str(exc_info.value)
