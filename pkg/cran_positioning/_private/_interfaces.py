from typing import Protocol
import numpy as np

from cran_positioning.scenario.signal import FreqObservation, Scenario
from cran_positioning.localization.estimate import Estimate


class FronthaulLink(Protocol):
    """Protocol for the path an observation takes from the radio units to the control unit."""
    name: str

    def transport(
        self,
        scenario: Scenario,
        observation: FreqObservation,
        rng: np.random.Generator
    ) -> FreqObservation:
        """
        Return the observation as seen by the control unit.

        Args:
            scenario: Scenario the observation was generated for
            observation: Per-RU DFT-domain samples at the radio units
            rng: Generator for any link-side randomness (dither)

        Returns:
            Observation available at the control unit

        Example:
            >>> link = IdealLink()
            >>> received = link.transport(scenario, observation, rng)
        """
        ...


class Localizer(Protocol):
    """Protocol for estimators mapping control-unit observations to a position estimate."""
    name: str

    def localize(self, scenario: Scenario, observation: FreqObservation) -> Estimate:
        """
        Estimate the source position.

        Args:
            scenario: Scenario the observation belongs to
            observation: Observation available at the control unit

        Returns:
            Estimate holding the position and nuisance estimates
        """
        ...
