from dataclasses import asdict
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union
import pandas as pd

from cran_positioning.experiment.config import ConfigLoader, ExperimentConfig
from cran_positioning.experiment.crb_sweep import CrbSweepRow
from cran_positioning.experiment.harness import DitherSelection, RmsSummary, TrialRecord

logger = logging.getLogger(__name__)

TRIALS_TABLE: str = "trials"
SUMMARY_TABLE: str = "summary"
CRB_TABLE: str = "crb_sweep"
SELECTION_TABLE: str = "dither_selection"
CONFIG_FILE: str = "config.json"


class ResultWriter:
    """
    Writes result tables as CSV with a Parquet copy, plus the frozen config.

    Args:
        out_dir: Directory receiving the files; created when missing
    """

    def __init__(self, out_dir: Union[str, Path]) -> None:
        self.out_dir: Path = Path(out_dir)

    def emit_results(
        self,
        records: Sequence[TrialRecord],
        summaries: Sequence[RmsSummary],
        config: ExperimentConfig,
        selections: Sequence[DitherSelection] = ()
    ) -> List[Path]:
        """
        Write per-trial records, per-cell summaries and the resolved configuration.

        Args:
            records: Per-trial records
            summaries: Per-cell RMS summaries
            config: Resolved configuration, including calibrated ranges
            selections: Dither divisor choices; their table is written only when given

        Returns:
            Paths of every file written

        Raises:
            OSError: If a file cannot be written; the message names the path
        """
        written = self.emit_table(TRIALS_TABLE, self._to_frame(records, TrialRecord))
        written += self.emit_table(SUMMARY_TABLE, self._to_frame(summaries, RmsSummary))
        if selections:
            written += self.emit_table(SELECTION_TABLE, self._selection_frame(selections))
        written.append(self.emit_config(config))
        return written

    def emit_crb_sweep(self, rows: Sequence[CrbSweepRow], config: ExperimentConfig) -> List[Path]:
        written = self.emit_table(CRB_TABLE, self._to_frame(rows, CrbSweepRow))
        written.append(self.emit_config(config))
        return written

    def emit_table(self, name: str, data: pd.DataFrame) -> List[Path]:
        """Write `name`.csv and `name`.parquet, overwriting existing files."""
        self._ensure_directory()
        csv_path = self.out_dir / f"{name}.csv"
        parquet_path = self.out_dir / f"{name}.parquet"
        try:
            data.to_csv(csv_path, index=False)
        except OSError as e:
            raise OSError(f"Failed to write {csv_path}: {str(e)}")
        try:
            data.to_parquet(parquet_path, engine="pyarrow", index=False)
        except OSError as e:
            raise OSError(f"Failed to write {parquet_path}: {str(e)}")
        logger.info("Wrote %d rows to %s", len(data), csv_path)
        return [csv_path, parquet_path]

    def emit_config(self, config: ExperimentConfig) -> Path:
        self._ensure_directory()
        return ConfigLoader().dump_json(config, self.out_dir / CONFIG_FILE)

    def _ensure_directory(self) -> None:
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OSError(f"Failed to create {self.out_dir}: {str(e)}")

    def _selection_frame(self, selections: Sequence[DitherSelection]) -> pd.DataFrame:
        """One row per (cell, candidate divisor) with its pilot RMS."""
        return pd.DataFrame(
            [
                {
                    "snr_db": selection.snr_db,
                    "b_over_m": selection.b_over_m,
                    "divisor": divisor,
                    "pilot_rms": rms,
                    "selected": divisor == selection.divisor
                }
                for selection in selections
                for divisor, rms in zip(selection.candidates, selection.pilot_rms)
            ],
            columns=["snr_db", "b_over_m", "divisor", "pilot_rms", "selected"]
        )

    def _to_frame(self, rows: Sequence[Any], row_type: type) -> pd.DataFrame:
        columns = list(row_type.__dataclass_fields__)
        data: List[Dict[str, Any]] = [asdict(row) for row in rows]
        return pd.DataFrame(data, columns=columns)
