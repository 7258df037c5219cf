"""
Resettable method of alternating projections.
Sweeps pairwise union constraints with softmax preference weights and a
counter-based reset that bans a direction chosen too often without success.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from floorplanner.config import RmapConfig
from floorplanner.errors import InfeasiblePairError
from floorplanner.models import Instance
from floorplanner.projections import (BoundarySegment, ConstraintCell,
                                      pair_cells, project_cell_coords,
                                      project_segment_coords)

logger = logging.getLogger(__name__)

# Softmax weights below this are dropped so a pair can settle exactly in a cell.
WEIGHT_FLOOR = 1e-12

# A pair revisited at this fraction of its previous distance or more counts
# as failing in its dominant direction.
PROGRESS_RATIO = 0.9

Pair = Tuple[int, int]


@dataclass(frozen=True)
class SweepOrder:
    """Processing order of module pairs for one sweep."""

    pairs: Tuple[Pair, ...]


@dataclass
class PreferenceState:
    """
    Per-pair, per-direction projection counters and the reset threshold.

    entry_distances holds each violated pair's distance to its closest cell at
    its previous visit.
    """

    threshold: float = 10
    counters: Dict[Pair, List[int]] = field(default_factory=dict)
    entry_distances: Dict[Pair, float] = field(default_factory=dict)

    def counters_for(self, pair: Pair) -> List[int]:
        key = (min(pair), max(pair))
        if key not in self.counters:
            self.counters[key] = [0, 0, 0, 0]
        return self.counters[key]

    def record_entry(self, pair: Pair, distance: float) -> bool:
        """
        Store the distance a pair is visited at.

        Returns:
            True when the pair is violated and its distance has not dropped
            below PROGRESS_RATIO times the previous one.
        """
        key = (min(pair), max(pair))
        previous = self.entry_distances.get(key)
        if distance == 0.0:
            self.entry_distances.pop(key, None)
            self.counters_for(key)[:] = [0, 0, 0, 0]
            return False
        self.entry_distances[key] = distance
        return previous is None or distance >= PROGRESS_RATIO * previous


@dataclass(frozen=True)
class PreferenceRatio:
    """Preference ratios eta (L, R, B, A) and the matching cell projections."""

    eta: Tuple[float, float, float, float]
    projections: Tuple[Optional[Tuple[float, float, float, float]], ...]
    distances: Tuple[float, float, float, float]


def position_order(placement: np.ndarray, n_modules: int) -> SweepOrder:
    """
    Pairs ranked by x + y of the module corners, lower first, ties by index.

    Args:
        placement: Coordinate vector of length 2N.
        n_modules: Number of modules N_m.

    Returns:
        SweepOrder with every pair once, lexicographic in rank.
    """
    n = placement.size // 2
    keys = placement[:n_modules] + placement[n:n + n_modules]
    ranked = [int(i) for i in np.argsort(keys, kind="stable")]
    pairs = tuple((ranked[a], ranked[b])
                  for a in range(n_modules) for b in range(a + 1, n_modules))
    return SweepOrder(pairs)


def index_order(n_modules: int) -> SweepOrder:
    return SweepOrder(tuple((i, j) for i in range(n_modules) for j in range(i + 1, n_modules)))


def softmax_weights(eta: Sequence[float], eps_pref: float) -> np.ndarray:
    """
    Numerically stable softmax of eta / eps_pref; -inf entries get weight 0.

    Raises:
        ValueError: Every entry is -inf.
    """
    eta = np.asarray(eta, dtype=float)
    finite = np.isfinite(eta)
    if not finite.any():
        raise ValueError("softmax needs at least one finite preference ratio")
    weights = np.zeros_like(eta)
    top = np.max(eta[finite])
    weights[finite] = np.exp((eta[finite] - top) / eps_pref)
    return weights / weights.sum()


def _pair_coords(placement: np.ndarray, n: int, i: int, j: int) -> Tuple[float, float, float, float]:
    return float(placement[i]), float(placement[j]), float(placement[n + i]), float(placement[n + j])


def _closest_ratios(cells: Sequence[ConstraintCell], coords) -> Tuple[list, list, list]:
    eta, projections, distances = [], [], []
    for cell in cells:
        if cell.is_empty:
            eta.append(-math.inf)
            projections.append(None)
            distances.append(math.inf)
            continue
        p = project_cell_coords(cell, *coords)
        d = math.sqrt(sum((a - b) ** 2 for a, b in zip(p, coords)))
        eta.append(-d)
        projections.append(p)
        distances.append(d)
    return eta, projections, distances


def preference_ratio(cells: Sequence[ConstraintCell], placement: np.ndarray,
                     state: PreferenceState) -> PreferenceRatio:
    """
    Closest-point preference ratios with the resetting rule.

    A direction whose counter exceeds the threshold gets -inf and its counter
    restarts at 0. Empty cells always get -inf. If every direction ends up at
    -inf, the plain closest-point ratios of the non-empty cells are used.
    """
    cell = cells[0]
    n = placement.size // 2
    coords = _pair_coords(placement, n, cell.i, cell.j)
    counters = state.counters_for((cell.i, cell.j))
    eta, projections, distances = _closest_ratios(cells, coords)
    for t, c in enumerate(cells):
        if c.is_empty:
            continue
        if counters[t] > state.threshold:
            counters[t] = 0
            eta[t] = -math.inf
    if not any(math.isfinite(e) for e in eta):
        eta = [-d if math.isfinite(d) else -math.inf for d in distances]
    return PreferenceRatio(tuple(eta), tuple(projections), tuple(distances))


class OscillationDetector:
    """
    Flags a run whose overlap ratio, while above the stop threshold, has gone
    `window` updates without beating its best value by a relative `improvement`.
    Covers overlaps that hold constant as well as ones that cycle.
    """

    def __init__(self, window: int = 50, improvement: float = 0.01, threshold: float = 0.001):
        self.window = window
        self.improvement = improvement
        self.threshold = threshold
        self.best = math.inf
        self.since_best = 0

    def update(self, overlap: float) -> bool:
        if overlap < self.best * (1.0 - self.improvement):
            self.best = overlap
            self.since_best = 0
        else:
            self.since_best += 1
        return overlap > self.threshold and self.since_best >= self.window


class RmapService:
    """Pairwise projection sweeps for one instance."""

    def __init__(self, instance: Instance, config: Optional[RmapConfig] = None,
                 segments: Optional[List[BoundarySegment]] = None):
        """
        Initialize the sweep machinery for an instance.

        Args:
            instance: Problem description.
            config: Preference and reset parameters.
            segments: Boundary segments projected at the end of each sweep
                (I/O assignment only).

        Raises:
            InfeasiblePairError: Some pair has no non-empty cell.
        """
        self.instance = instance
        self.config = config or RmapConfig()
        self.eps_pref = self.config.resolved_eps(instance.die.diagonal)
        self.segments = segments or []
        self.state = PreferenceState(threshold=self.config.threshold)
        self.cells: Dict[Pair, Tuple[ConstraintCell, ...]] = {}
        for i in range(instance.n_modules):
            for j in range(i + 1, instance.n_modules):
                cells = pair_cells(instance, i, j)
                if all(c.is_empty for c in cells):
                    raise InfeasiblePairError(
                        f"modules {instance.modules[i].name or i} and "
                        f"{instance.modules[j].name or j} cannot both fit in the die")
                empty = [c.direction for c in cells if c.is_empty]
                if empty:
                    logger.debug("pair (%d, %d) excludes directions %s", i, j, "".join(empty))
                self.cells[(i, j)] = cells

    def order(self, placement: np.ndarray) -> SweepOrder:
        if self.config.order == "index":
            return index_order(self.instance.n_modules)
        return position_order(placement, self.instance.n_modules)

    def _apply(self, z: np.ndarray, n: int, i: int, j: int, coords) -> None:
        z[i], z[j], z[n + i], z[n + j] = coords

    def _project_segments(self, z: np.ndarray) -> None:
        n = z.size // 2
        n_m = self.instance.n_modules
        for seg in self.segments:
            entity = n_m + seg.pin
            z[entity], z[n + entity] = project_segment_coords(seg, z[entity], z[n + entity])

    def rmap_sweep(self, placement: np.ndarray, order: SweepOrder,
                   state: Optional[PreferenceState] = None) -> np.ndarray:
        """
        One sweep of preference-weighted pair projections.

        Each pair in order is replaced by the weighted average of its four cell
        projections; a pair already inside one of its cells is left untouched.
        A pair met violated without real progress since its last visit adds one
        to its dominant direction's counter; a pair met satisfied has all four
        counters cleared.

        Returns:
            The swept placement (a new array).
        """
        state = state if state is not None else self.state
        z = placement.astype(float, copy=True)
        n = z.size // 2
        for pair in order.pairs:
            i, j = min(pair), max(pair)
            cells = self.cells[(i, j)]
            counters = state.counters_for((i, j))
            ratio = preference_ratio(cells, z, state)
            failing = state.record_entry((i, j), min(ratio.distances))
            if min(ratio.distances) == 0.0:
                continue

            weights = softmax_weights(ratio.eta, self.eps_pref)
            weights[weights < WEIGHT_FLOOR] = 0.0
            weights /= weights.sum()
            new = [0.0, 0.0, 0.0, 0.0]
            for t, weight in enumerate(weights):
                if weight == 0.0:
                    continue
                p = ratio.projections[t]
                for k in range(4):
                    new[k] += weight * p[k]
            self._apply(z, n, i, j, new)
            if failing:
                counters[int(np.argmax(weights))] += 1

        self._project_segments(z)
        return z

    def map_sweep(self, placement: np.ndarray, order: SweepOrder) -> np.ndarray:
        """Classic alternating projection: every pair goes to its closest cell."""
        z = placement.astype(float, copy=True)
        n = z.size // 2
        for pair in order.pairs:
            i, j = min(pair), max(pair)
            cells = self.cells[(i, j)]
            coords = _pair_coords(z, n, i, j)
            _, projections, distances = _closest_ratios(cells, coords)
            best = int(np.argmin(distances))
            if distances[best] > 0.0:
                self._apply(z, n, i, j, projections[best])
        self._project_segments(z)
        return z

    def sweep(self, placement: np.ndarray, kind: str = "rmap") -> np.ndarray:
        """Regenerate the order and run one sweep of the requested kind."""
        order = self.order(placement)
        if kind == "map":
            return self.map_sweep(placement, order)
        return self.rmap_sweep(placement, order)
