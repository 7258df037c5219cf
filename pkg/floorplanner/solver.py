"""
Solve orchestration: initialization, global floorplanning and post-processing.
"""
import logging
import math
import time
from dataclasses import replace
from typing import Optional

import numpy as np

from floorplanner.config import SolverConfig
from floorplanner.geometry import (check_feasible, hpwl_total, movable_mask,
                                   relative_overlap_area)
from floorplanner.models import Instance, IterationRecord, SolveResult
from floorplanner.projections import boundary_segments
from floorplanner.services.initialization_service import initialization_service
from floorplanner.services.rmap_service import (OscillationDetector, PreferenceState,
                                                RmapService)
from floorplanner.services.superiorization_service import SuperiorizationService

logger = logging.getLogger(__name__)

# Overlap ratio regarded as zero when post-processing.
POST_OVERLAP_TOL = 1e-9

# Relative overlap decrease that counts as a new best for stall detection.
STALL_IMPROVEMENT = 0.01

# Closest-cell polish: sweep cap and sweeps allowed without a new best.
POLISH_SWEEPS = 200
POLISH_PATIENCE = 20


def relaxation(k: int, gamma_init: float, gamma_growth: float) -> float:
    """Projection relaxation min(1, gamma_init * gamma_growth**k)."""
    if k < 0:
        raise ValueError("iteration index must be non-negative")
    # Past this k the product is certainly >= 1; avoids float overflow.
    if k * math.log(gamma_growth) >= -math.log(gamma_init):
        return 1.0
    return min(1.0, gamma_init * gamma_growth ** k)


def post_decay_index(k_total: int, eps_post: float) -> int:
    """Decay index post-processing restarts from: floor(k_total * eps_post)."""
    return int(math.floor(k_total * eps_post))


def feasibility_tolerance(instance: Instance) -> float:
    return 1e-6 * instance.die.diagonal


def overlap_ratio(instance: Instance, z: np.ndarray) -> float:
    """Relative overlap area, zero for instances with fewer than two modules."""
    return relative_overlap_area(instance, z) if instance.n_modules > 1 else 0.0


def _box_clean(instance: Instance, z: np.ndarray, tol: float) -> bool:
    report = check_feasible(instance, z, tol)
    return not any(v.kind in ("box_x", "box_y") for v in report.violations)


class Solver:
    """Runs the phases of one solve, sharing services between them."""

    def __init__(self, instance: Instance, config: Optional[SolverConfig] = None):
        self.instance = instance
        config = config or SolverConfig()
        self.config = replace(config, sm=config.sm.resolved(instance.die.diagonal))
        segments = boundary_segments(instance) if self.config.io_assignment else []
        self.rmap = RmapService(instance, self.config.rmap, segments)
        self.sm = SuperiorizationService(instance, self.config.sm,
                                         movable_mask(instance, self.config.io_assignment))

    def _result(self, z: np.ndarray, iterations: int, trace, converged: bool,
                stalled: bool, decay_index: int) -> SolveResult:
        instance = self.instance
        feasible = check_feasible(instance, z, feasibility_tolerance(instance),
                                  self.config.io_assignment).feasible
        return SolveResult(
            placement=z,
            hpwl=hpwl_total(instance, z),
            overlap=overlap_ratio(instance, z),
            iterations=iterations,
            trace=trace,
            config=self.config.to_dict(),
            seed=self.config.seed,
            feasible=feasible,
            converged=converged,
            stalled=stalled,
            decay_index=decay_index,
            instance_name=instance.name,
        )

    def _iterate(self, z: np.ndarray, k: int, ell: int, gamma: float, sweep: str):
        outcome = self.sm.sm_perturb(z, k, ell)
        started = time.perf_counter()
        swept = self.rmap.sweep(outcome.placement, sweep)
        z = outcome.placement + gamma * (swept - outcome.placement)
        elapsed = time.perf_counter() - started
        overlap = overlap_ratio(self.instance, z)
        record = IterationRecord(k=k, hpwl=hpwl_total(self.instance, z), overlap=overlap,
                                 gamma=gamma, decay_index=outcome.decay_index,
                                 sweep_seconds=elapsed,
                                 hpwl_before_perturb=outcome.hpwl_before,
                                 hpwl_after_perturb=outcome.hpwl_after)
        return z, outcome.decay_index, record

    def per_rmap_solve(self, init: np.ndarray, sweep: str = "rmap") -> SolveResult:
        """
        Global floorplanning: perturb, sweep with growing relaxation, stop on
        small relative overlap.

        Args:
            init: Starting placement.
            sweep: "rmap" for preference-weighted sweeps, "map" for closest-cell
                sweeps with oscillation detection.

        Returns:
            SolveResult; converged=False when the iteration cap was hit or the
            run stalled.
        """
        config = self.config
        z = np.asarray(init, dtype=float).copy()
        ell = 0
        trace = []
        detector = OscillationDetector(config.oscillation_window, STALL_IMPROVEMENT,
                                       config.stop_threshold)
        converged = stalled = False

        for k in range(config.max_iter):
            gamma = relaxation(k, config.gamma_init, config.gamma_growth)
            z, ell, record = self._iterate(z, k, ell, gamma, sweep)
            trace.append(record)
            if k % 100 == 0:
                logger.info("k=%d HPWL=%.6g overlap=%.4g%% gamma=%.4f", k, record.hpwl,
                            100 * record.overlap, gamma)
            if record.overlap < config.stop_threshold:
                converged = True
                break
            if sweep == "map" and detector.update(record.overlap):
                stalled = True
                logger.warning("MAP stalled at overlap %.4g%% after %d iterations",
                               100 * record.overlap, k + 1)
                break

        if not converged and not stalled:
            logger.warning("global floorplanning hit the cap of %d iterations", config.max_iter)
        return self._result(z, len(trace), trace, converged, stalled, ell)

    def post_process(self, result: SolveResult) -> SolveResult:
        """
        Rerun unrelaxed sweeps to close residual overlaps, then polish the best
        placement with closest-cell sweeps; the best placement seen is kept.

        The outer index restarts at 0 and the decay index at
        floor(k_total * eps_post), so the first perturbations draw their decay
        index from [0, floor(k_total * eps_post)]. The sweeps stop once the
        overlap has gone oscillation_window iterations without a new best.
        """
        instance = self.instance
        config = self.config
        tol = feasibility_tolerance(instance)
        z = np.asarray(result.placement, dtype=float).copy()
        k_total = result.iterations

        if result.overlap <= POST_OVERLAP_TOL and _box_clean(instance, z, tol):
            return result

        ell = post_decay_index(k_total, config.eps_post)
        self.rmap.state = PreferenceState(threshold=config.rmap.threshold)
        detector = OscillationDetector(config.oscillation_window, STALL_IMPROVEMENT,
                                       POST_OVERLAP_TOL)
        best = z
        best_key = (result.overlap, result.hpwl)
        trace = list(result.trace)
        clean = False
        steps = 0

        for step in range(config.post_max_iter):
            z, ell, record = self._iterate(z, step, ell, 1.0, "rmap")
            trace.append(record)
            steps += 1
            key = (record.overlap, record.hpwl)
            if key < best_key:
                best, best_key = z, key
            if record.overlap <= POST_OVERLAP_TOL and _box_clean(instance, z, tol):
                best, clean = z, True
                break
            if detector.update(record.overlap):
                logger.info("post-processing stalled at overlap %.4g%% after %d iterations",
                            100 * record.overlap, steps)
                break
        else:
            if config.post_max_iter:
                logger.warning("post-processing hit the cap of %d iterations",
                               config.post_max_iter)

        if not clean and config.post_max_iter:
            best = self._polish(best, best_key, trace, steps, ell)

        final = self._result(best, result.iterations, trace, result.converged,
                             result.stalled, ell)
        final.post_iterations = len(trace) - len(result.trace)
        return final

    def _polish(self, z: np.ndarray, best_key, trace, k: int, ell: int) -> np.ndarray:
        """
        Closest-cell sweeps from z without perturbation until the placement is
        clean or POLISH_PATIENCE sweeps bring no new best. Records go to trace.
        """
        instance = self.instance
        tol = feasibility_tolerance(instance)
        best = z
        since_best = 0
        for _ in range(POLISH_SWEEPS):
            started = time.perf_counter()
            z = self.rmap.sweep(z, "map")
            elapsed = time.perf_counter() - started
            overlap = overlap_ratio(instance, z)
            hpwl = hpwl_total(instance, z)
            trace.append(IterationRecord(k=k, hpwl=hpwl, overlap=overlap, gamma=1.0,
                                         decay_index=ell, sweep_seconds=elapsed,
                                         hpwl_before_perturb=hpwl, hpwl_after_perturb=hpwl))
            k += 1
            if (overlap, hpwl) < best_key:
                best, best_key = z, (overlap, hpwl)
                since_best = 0
            else:
                since_best += 1
            if overlap <= POST_OVERLAP_TOL and _box_clean(instance, z, tol):
                return z
            if since_best >= POLISH_PATIENCE:
                break
        logger.warning("post-processing left overlap %.4g%%", 100 * best_key[0])
        return best

    def solve(self) -> SolveResult:
        """Initialization, global floorplanning and post-processing."""
        initializer = initialization_service(self.instance, self.config)
        started = time.perf_counter()
        init = initializer.initialize()
        init_seconds = time.perf_counter() - started

        started = time.perf_counter()
        global_result = self.per_rmap_solve(init)
        global_seconds = time.perf_counter() - started

        started = time.perf_counter()
        result = self.post_process(global_result)
        post_seconds = time.perf_counter() - started

        result.timings = {"initialization": init_seconds, "global": global_seconds,
                          "post": post_seconds}
        result.anchored_components = initializer.anchored_components
        result.pcg_converged = initializer.pcg_converged
        return result


def per_rmap_solve(instance: Instance, init: np.ndarray,
                   config: Optional[SolverConfig] = None, sweep: str = "rmap") -> SolveResult:
    return Solver(instance, config).per_rmap_solve(init, sweep)


def post_process(instance: Instance, result: SolveResult,
                 config: Optional[SolverConfig] = None) -> SolveResult:
    return Solver(instance, config).post_process(result)


def solve(instance: Instance, config: Optional[SolverConfig] = None) -> SolveResult:
    """
    Solve a floorplanning instance end to end.

    Args:
        instance: Problem description.
        config: Solver configuration; defaults to the basic-mode preset.

    Returns:
        SolveResult with per-phase timings.
    """
    return Solver(instance, config).solve()
