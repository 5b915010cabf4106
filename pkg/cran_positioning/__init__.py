"""
cran_positioning - Source localization over capacity-limited C-RAN fronthaul
==========================================================================

This library simulates uplink localization where radio units forward quantized
DFT-domain samples to a control unit, and bounds the achievable accuracy.

Main Components:
---------------
- Scenario: Network geometry, waveform, noise and fronthaul budgets
- QuantizedLink / IdealLink: Fronthaul paths with optional subtractive dither
- DirectLocalizer: Approximate ML position estimate with an FFT search over t0
- IndirectLocalizer: MUSIC TOA/AOA per radio unit fused by maximum likelihood
- position_crb / quantization_loss: CRB and low-SNR loss factor under quantization
- run_experiment / crb_sweep: Monte Carlo RMS and CRB sweeps
"""

from cran_positioning.scenario.geometry import Position, Region
from cran_positioning.scenario.signal import RadioUnit, Scenario
from cran_positioning.fronthaul.quantizer import DitherSpec, UniformQuantizerSpec
from cran_positioning.fronthaul.links import IdealLink, QuantizedLink
from cran_positioning.localization.direct import DirectLocalizer
from cran_positioning.localization.indirect import IndirectLocalizer
from cran_positioning.localization.search_grid import SearchGrid
from cran_positioning.bounds.efim import position_crb
from cran_positioning.bounds.loss import quantization_loss
from cran_positioning.experiment.config import ConfigLoader, ExperimentConfig
from cran_positioning.experiment.harness import run_experiment
from cran_positioning.experiment.crb_sweep import crb_sweep

__version__ = "1.0.0"

__all__ = [
    "Position",
    "Region",
    "RadioUnit",
    "Scenario",
    "DitherSpec",
    "UniformQuantizerSpec",
    "IdealLink",
    "QuantizedLink",
    "DirectLocalizer",
    "IndirectLocalizer",
    "SearchGrid",
    "position_crb",
    "quantization_loss",
    "ConfigLoader",
    "ExperimentConfig",
    "run_experiment",
    "crb_sweep"
]
