from dataclasses import dataclass
import math
from typing import Callable, Optional, Tuple
import numpy as np
import numpy.typing as npt

from cran_positioning.scenario.geometry import Position, Region

LatticeScorer = Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]]


@dataclass(frozen=True, eq=False)
class SearchGrid:
    """
    Position lattice over the search region plus the transmit-time resolution.

    Attributes:
        spacing: Lattice spacing g in meters
        t0_oversampling: FFT oversampling factor q_t0 for the transmit-time search
        zoom_rounds: Number of nested refinements around the incumbent
        zoom_factor: Spacing reduction per refinement round
        refine_t0_oversampling: FFT oversampling factor used while refining
        max_recenters: Extra windows a refinement round may take while its best
            point keeps moving away from the window center
        points: Optional explicit lattice of shape (P, 2) replacing the rectangular one
    """
    spacing: float = 25.0
    t0_oversampling: int = 1
    zoom_rounds: int = 2
    zoom_factor: int = 5
    refine_t0_oversampling: int = 64
    max_recenters: int = 20
    points: Optional[npt.NDArray[np.float64]] = None

    def __post_init__(self) -> None:
        if self.spacing <= 0:
            raise ValueError(f"Grid spacing must be positive, got {self.spacing}")
        if self.t0_oversampling < 1 or self.refine_t0_oversampling < 1:
            raise ValueError(
                f"t0 oversampling factor must be at least 1, got {self.t0_oversampling} "
                f"and {self.refine_t0_oversampling}"
            )
        if self.zoom_rounds < 0 or self.zoom_factor < 2:
            raise ValueError(
                f"Zoom needs rounds >= 0 and factor >= 2, got {self.zoom_rounds} and {self.zoom_factor}"
            )
        if self.max_recenters < 0:
            raise ValueError(f"Recenter count must be non-negative, got {self.max_recenters}")

    @property
    def refines(self) -> bool:
        return self.points is None and self.zoom_rounds > 0

    def lattice(self, region: Region) -> npt.NDArray[np.float64]:
        """
        Lattice points in row-major order (y rows, x columns).

        Example:
            >>> SearchGrid(spacing=1.0).lattice(Region(0, 1, 0, 1)).tolist()
            [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
        """
        if self.points is not None:
            return np.asarray(self.points, dtype=float).reshape(-1, 2)
        xs = _axis(region.x_min, region.x_max, self.spacing)
        ys = _axis(region.y_min, region.y_max, self.spacing)
        grid_x, grid_y = np.meshgrid(xs, ys)
        return np.column_stack((grid_x.ravel(), grid_y.ravel()))

    def zoom_lattice(self, center: Position, spacing: float, region: Region) -> npt.NDArray[np.float64]:
        """Finer lattice of the given spacing spanning one coarser cell around `center`."""
        offsets = np.arange(-self.zoom_factor, self.zoom_factor + 1) * spacing
        grid_x, grid_y = np.meshgrid(center.x + offsets, center.y + offsets)
        points = np.column_stack((grid_x.ravel(), grid_y.ravel()))
        inside = (
            (points[:, 0] >= region.x_min) & (points[:, 0] <= region.x_max)
            & (points[:, 1] >= region.y_min) & (points[:, 1] <= region.y_max)
        )
        return points[inside]

    def search(
        self,
        region: Region,
        scorer: LatticeScorer,
        refine_scorer: Optional[LatticeScorer] = None
    ) -> Tuple[Position, float]:
        """
        Maximize `scorer` over the lattice, then refine around the incumbent.

        Each refinement round scores a finer window with `refine_scorer` (default
        `scorer`; a separate refine scorer first rescores the incumbent) and re-centers
        the window on a strictly better point off its center, at most `max_recenters`
        times, before shrinking the spacing again. Ties go to the smallest lattice
        index; a refinement replaces the incumbent only when it scores strictly higher.

        Raises:
            ValueError: If the lattice holds no points
        """
        points = self.lattice(region)
        if len(points) == 0:
            raise ValueError("Search grid is empty")
        scores = scorer(points)
        best = int(np.argmax(scores))
        incumbent, incumbent_score = Position.from_array(points[best]), float(scores[best])
        if not self.refines:
            return incumbent, incumbent_score

        window_scorer = scorer
        if refine_scorer is not None:
            window_scorer = refine_scorer
            incumbent_score = float(refine_scorer(incumbent.as_array()[None, :])[0])
        spacing = self.spacing
        for _ in range(self.zoom_rounds):
            spacing /= self.zoom_factor
            for _ in range(self.max_recenters + 1):
                center = incumbent
                points = self.zoom_lattice(center, spacing, region)
                scores = window_scorer(points)
                best = int(np.argmax(scores))
                if scores[best] <= incumbent_score:
                    break
                incumbent, incumbent_score = Position.from_array(points[best]), float(scores[best])
                if incumbent == center:
                    break
        return incumbent, incumbent_score


def _axis(start: float, stop: float, spacing: float) -> npt.NDArray[np.float64]:
    count = int(math.floor((stop - start) / spacing + 1e-9)) + 1
    return start + spacing * np.arange(count)
