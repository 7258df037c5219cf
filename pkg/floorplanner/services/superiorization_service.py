"""
Superiorization service.
Perturbs placements along the negative HPWL subgradient with summable,
decaying step sizes and keeps only perturbations that shorten the wirelength.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from floorplanner.config import SmConfig
from floorplanner.geometry import hpwl_subgradient, hpwl_total
from floorplanner.models import Instance

logger = logging.getLogger(__name__)


def decay_index_start(k: int, previous: int, rng: np.random.Generator) -> int:
    """
    Starting perturbation decay index for iteration k.

    Args:
        k: Outer iteration index.
        previous: Decay index carried over from the previous iteration.
        rng: Random generator.

    Returns:
        A uniform integer in [k, previous] when k < previous, otherwise k.
    """
    if k < previous:
        return int(rng.integers(k, previous, endpoint=True))
    return k


def perturbation_step(ell: int, config: SmConfig) -> float:
    """
    Step length max(lambda_min, lambda_init * Lambda**ell).

    The config must carry absolute step sizes (see SmConfig.resolved).
    """
    return max(config.lambda_min, config.lambda_init * config.lambda_decay ** ell)


@dataclass
class PerturbOutcome:
    """Result of one superiorization call."""

    placement: np.ndarray
    decay_index: int
    hpwl_before: float
    hpwl_after: float
    accepted: List[int] = field(default_factory=list)   # decay index of each accepted step


class SuperiorizationService:
    """HPWL-reducing perturbations with a seeded, reproducible generator."""

    def __init__(self, instance: Instance, config: Optional[SmConfig] = None,
                 movable: Optional[np.ndarray] = None):
        """
        Initialize the perturbation service.

        Args:
            instance: Problem description.
            config: Step-size schedule and seed; scaled step sizes are
                resolved against the die diagonal.
            movable: Boolean mask of the 2N entries allowed to move.
        """
        self.instance = instance
        self.config = (config or SmConfig()).resolved(instance.die.diagonal)
        self.rng = np.random.Generator(np.random.PCG64(self.config.seed))
        if movable is None:
            movable = np.ones(2 * instance.n, dtype=bool)
        self.movable = movable

    def sm_perturb(self, placement: np.ndarray, k: int, previous: int) -> PerturbOutcome:
        """
        Run num_perturb perturbation attempts at outer iteration k.

        Each attempt refreshes the decay index, computes one subgradient and
        tries up to max_trials shrinking steps, accepting the first that
        strictly lowers HPWL. Every rejected trial bumps the decay index.
        """
        z = placement.astype(float, copy=True)
        current = hpwl_total(self.instance, z)
        start = current
        ell = previous
        accepted = []

        for _ in range(self.config.num_perturb):
            ell = decay_index_start(k, ell, self.rng)
            v = hpwl_subgradient(self.instance, z)
            v[~self.movable] = 0.0
            norm = float(np.linalg.norm(v))
            if norm == 0.0:
                continue
            direction = v / norm
            for _ in range(self.config.max_trials):
                step = perturbation_step(ell, self.config)
                candidate = z - step * direction
                value = hpwl_total(self.instance, candidate)
                if value < current:
                    z, current = candidate, value
                    accepted.append(ell)
                    break
                ell += 1

        if accepted:
            logger.debug("iteration %d: %d perturbations accepted, HPWL %.6g -> %.6g",
                         k, len(accepted), start, current)
        return PerturbOutcome(z, ell, start, current, accepted)
