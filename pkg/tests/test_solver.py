#!/usr/bin/env python3
"""
Tests for solve orchestration: relaxation schedule, global phase and
post-processing.
"""
import sys
import os
import math
from dataclasses import replace

# Add the repository root to the Python path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from floorplanner.config import SolverConfig
from floorplanner.formats import parse_instance, write_result
from floorplanner.geometry import check_feasible
from floorplanner.solver import (Solver, overlap_ratio, per_rmap_solve,
                                 post_decay_index, post_process, relaxation,
                                 solve)

# Two 2x2 blocks tethered to nearby pins; the quadratic start overlaps them.
TETHERED_PAIR = """
name tethered_pair
die 10 10
module a 2 2
module b 2 2
io p fixed 4 5
io q fixed 6 5.5
pin pa a 1 1
pin pb b 1 1
pin pp p
pin pq q
net left pp pa
net link pa pb
net right pb pq
"""

SHARP = dict(lambda_init=1.0, lambda_min=0.01, eps_pref=0.01)


def sharp_config(**overrides) -> SolverConfig:
    return SolverConfig.for_mode("basic", **SHARP, **overrides)


def test_relaxation_schedule():
    assert relaxation(0, 0.7804, 1.1) == 0.7804
    assert math.isclose(relaxation(1, 0.7804, 1.1), 0.7804 * 1.1)
    assert relaxation(3, 0.7804, 1.1) == 1.0
    assert relaxation(10 ** 9, 0.7761, 1.0001) == 1.0
    values = [relaxation(k, 0.7761, 1.0001) for k in range(0, 5000, 50)]
    assert values == sorted(values)


def test_relaxation_rejects_negative_index():
    try:
        relaxation(-1, 0.5, 1.1)
    except ValueError:
        return
    assert False, "expected ValueError"


def test_post_decay_index():
    assert post_decay_index(100, 0.35) == 35
    assert post_decay_index(0, 0.35) == 0
    assert post_decay_index(7, 0.35) == 2


def test_feasible_start_is_kept():
    instance = parse_instance("""
        die 10 10
        module a 2 2
        module b 2 2
    """)
    z = np.array([0.0, 5.0, 0.0, 5.0])
    result = per_rmap_solve(instance, z, sharp_config())
    assert result.converged
    assert result.iterations == 1
    assert np.array_equal(result.placement, z)
    assert post_process(instance, result, sharp_config()) is result


def test_global_phase_separates_overlapping_pair():
    instance = parse_instance(TETHERED_PAIR)
    z = np.array([3.0, 3.5, 0.0, 0.0, 4.0, 4.3, 0.0, 0.0])
    result = per_rmap_solve(instance, z, sharp_config())
    assert result.converged
    assert result.iterations < 50
    assert result.overlap < 0.001
    assert result.trace[-1].overlap == result.overlap


def test_solve_is_feasible():
    instance = parse_instance(TETHERED_PAIR)
    result = solve(instance, sharp_config())
    assert result.feasible
    assert result.converged
    assert result.instance_name == "tethered_pair"
    assert set(result.timings) == {"initialization", "global", "post"}
    assert len(result.trace) == result.iterations + result.post_iterations
    tol = 1e-6 * instance.die.diagonal
    assert check_feasible(instance, result.placement, tol).feasible


def test_solve_is_deterministic():
    instance = parse_instance(TETHERED_PAIR)
    first = solve(instance, sharp_config(seed=9))
    second = solve(instance, sharp_config(seed=9))
    assert write_result(first, include_timings=False) == write_result(second, include_timings=False)


def test_trace_invariants():
    instance = parse_instance(TETHERED_PAIR)
    result = solve(instance, sharp_config())
    gammas = [r.gamma for r in result.trace]
    assert gammas == sorted(gammas)
    assert all(0.0 < g <= 1.0 for g in gammas)
    assert all(r.hpwl_after_perturb <= r.hpwl_before_perturb for r in result.trace)
    assert [r.k for r in result.trace[:result.iterations]] == list(range(result.iterations))
    assert [r.k for r in result.trace[result.iterations:]] == list(range(result.post_iterations))


def test_post_process_never_raises_overlap():
    instance = parse_instance(TETHERED_PAIR)
    z = np.array([3.0, 3.5, 0.0, 0.0, 4.0, 4.3, 0.0, 0.0])
    config = sharp_config(max_iter=1)
    solver = Solver(instance, config)
    rough = solver.per_rmap_solve(z)
    assert not rough.converged
    final = solver.post_process(rough)
    assert final.overlap <= rough.overlap
    assert final.post_iterations >= 1
    assert final.iterations == rough.iterations
    assert final.overlap == overlap_ratio(instance, final.placement)


def test_single_module_between_pins():
    instance = parse_instance("""
        die 10 10
        module a 2 2
        io p fixed 0 5
        io q fixed 10 5
        pin pa a 1 1
        pin pp p
        pin pq q
        net n pa pp pq
    """)
    result = solve(instance, sharp_config())
    assert math.isclose(result.hpwl, 10.0, abs_tol=1e-9)
    assert result.overlap == 0.0
    assert result.feasible
    assert result.iterations == 1


def test_map_sweeps_separate_a_single_pair():
    instance = parse_instance(TETHERED_PAIR)
    z = np.array([3.0, 3.5, 0.0, 0.0, 4.0, 4.3, 0.0, 0.0])
    result = Solver(instance, sharp_config()).per_rmap_solve(z, sweep="map")
    assert result.converged
    assert not result.stalled


def test_post_process_restarts_outer_and_decay_indices():
    instance = parse_instance(TETHERED_PAIR)
    z = np.array([3.0, 3.5, 0.0, 0.0, 4.0, 4.3, 0.0, 0.0])
    solver = Solver(instance, sharp_config(max_iter=1))
    rough = replace(solver.per_rmap_solve(z), iterations=100)
    assert rough.overlap > 0.0
    calls = []
    perturb = solver.sm.sm_perturb

    def recording_perturb(placement, k, previous):
        calls.append((k, previous))
        return perturb(placement, k, previous)

    solver.sm.sm_perturb = recording_perturb
    final = solver.post_process(rough)
    assert calls[0] == (0, post_decay_index(100, 0.35))
    assert [k for k, _ in calls] == list(range(len(calls)))
    assert final.iterations == 100


def test_solve_reports_initialization_health():
    loose = parse_instance("""
        die 10 10
        module a 2 2
        module b 3 1
    """)
    result = solve(loose, sharp_config())
    assert result.anchored_components == 2
    assert result.pcg_converged
    assert solve(parse_instance(TETHERED_PAIR), sharp_config()).anchored_components == 0


def main():
    """Run all tests."""
    print("=" * 60)
    print("Solver Tests")
    print("=" * 60)

    tests = [
        test_relaxation_schedule,
        test_relaxation_rejects_negative_index,
        test_post_decay_index,
        test_feasible_start_is_kept,
        test_global_phase_separates_overlapping_pair,
        test_solve_is_feasible,
        test_solve_is_deterministic,
        test_trace_invariants,
        test_post_process_never_raises_overlap,
        test_single_module_between_pins,
        test_map_sweeps_separate_a_single_pair,
        test_post_process_restarts_outer_and_decay_indices,
        test_solve_reports_initialization_health,
    ]
    failed = 0
    for test in tests:
        try:
            test()
            print(f"✓ {test.__name__}")
        except AssertionError as e:
            failed += 1
            print(f"✗ {test.__name__}: {e}")

    print("=" * 60)
    print(f"{'✓ All tests passed!' if not failed else f'✗ {failed} test(s) failed'}")
    print("=" * 60)
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
