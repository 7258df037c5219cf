#!/usr/bin/env python3
"""
Tests for preference weights, resetting and projection sweeps.
"""
import sys
import os
import math

# Add the repository root to the Python path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from floorplanner.config import RmapConfig
from floorplanner.errors import InfeasiblePairError
from floorplanner.formats import parse_instance
from floorplanner.geometry import check_feasible, relative_overlap_area
from floorplanner.projections import boundary_segments, pair_cells
from floorplanner.services.rmap_service import (OscillationDetector,
                                                PreferenceState, RmapService,
                                                index_order, position_order,
                                                preference_ratio,
                                                softmax_weights)
from floorplanner.synthetic import random_tight_instance

PAIR = """
die 10 10
module a 2 2
module b 2 2
"""

THREE = """
die 10 10
module a 2 2
module b 2 2
module c 2 2
"""


def test_softmax_weights_sum_to_one():
    weights = softmax_weights([-1.0, -1.5, -2.0, -math.inf], 0.5)
    assert abs(weights.sum() - 1.0) < 1e-15
    assert weights[3] == 0.0
    assert weights[0] > weights[1] > weights[2]


def test_softmax_weights_are_stable_for_large_ratios():
    weights = softmax_weights([-1000.0, -1001.0, -5000.0, -1000.5], 0.01)
    assert np.all(np.isfinite(weights))
    assert weights[0] == max(weights)


def test_softmax_weights_reject_all_banned():
    try:
        softmax_weights([-math.inf] * 4, 1.0)
    except ValueError:
        return
    assert False, "expected ValueError"


def test_position_order_ranks_by_corner_sum():
    z = np.array([5.0, 0.0, 1.0, 5.0, 0.0, 1.0])
    order = position_order(z, 3)
    assert order.pairs == ((1, 2), (1, 0), (2, 0))


def test_position_order_breaks_ties_by_index():
    order = position_order(np.zeros(6), 3)
    assert order.pairs == index_order(3).pairs == ((0, 1), (0, 2), (1, 2))


def test_preference_ratio_bans_overused_direction():
    instance = parse_instance(PAIR)
    cells = pair_cells(instance, 0, 1)
    state = PreferenceState(threshold=2)
    state.counters_for((0, 1))[:] = [3, 0, 0, 0]
    z = np.array([4.0, 4.5, 4.0, 4.0])
    ratio = preference_ratio(cells, z, state)
    assert ratio.eta[0] == -math.inf
    assert all(math.isfinite(e) for e in ratio.eta[1:])
    assert state.counters[(0, 1)] == [0, 0, 0, 0]


def test_preference_ratio_is_negative_distance():
    instance = parse_instance(PAIR)
    cells = pair_cells(instance, 0, 1)
    z = np.array([4.0, 4.5, 4.0, 4.0])
    ratio = preference_ratio(cells, z, PreferenceState())
    assert math.isclose(ratio.eta[0], -math.sqrt(2 * 0.75 ** 2))
    assert math.isclose(ratio.eta[1], -math.sqrt(2 * 1.25 ** 2))
    assert ratio.eta[0] == max(ratio.eta)


def test_counters_are_keyed_by_unordered_pair():
    state = PreferenceState()
    state.counters_for((2, 1))[0] = 4
    assert state.counters_for((1, 2)) == [4, 0, 0, 0]


def test_sweeps_leave_feasible_placements_untouched():
    instance = parse_instance(THREE)
    service = RmapService(instance)
    z = np.array([0.0, 3.0, 6.0, 0.0, 3.0, 6.0])
    assert np.array_equal(service.sweep(z, "rmap"), z)
    assert np.array_equal(service.sweep(z, "map"), z)
    assert all(c == [0, 0, 0, 0] for c in service.state.counters.values())


def test_map_sweep_separates_a_pair():
    instance = parse_instance(PAIR)
    service = RmapService(instance)
    z = np.array([4.0, 4.5, 4.0, 4.3])
    out = service.map_sweep(z, service.order(z))
    assert relative_overlap_area(instance, out) == 0.0
    assert check_feasible(instance, out).feasible


def test_rmap_sweep_counts_dominant_direction_while_violated():
    instance = parse_instance(PAIR)
    service = RmapService(instance)
    z = np.array([4.0, 4.5, 4.0, 4.3])
    out = service.rmap_sweep(z, service.order(z))
    assert relative_overlap_area(instance, out) < relative_overlap_area(instance, z)
    assert service.state.counters[(0, 1)] == [1, 0, 0, 0]


def test_rmap_sweeps_without_reset_remove_overlap():
    instance = parse_instance(PAIR)
    service = RmapService(instance, RmapConfig(threshold=math.inf))
    z = np.array([4.0, 4.5, 4.0, 4.3])
    for _ in range(50):
        z = service.sweep(z)
    assert relative_overlap_area(instance, z) < 1e-6


def test_sweep_moves_boundary_pins_onto_their_side():
    instance = parse_instance("""
        die 10 10
        module a 1 1
        io q boundary T
        pin pa a
        pin pq q
        net n pa pq
    """)
    service = RmapService(instance, segments=boundary_segments(instance))
    out = service.sweep(np.array([2.0, 12.0, 2.0, 7.0]))
    assert out.tolist() == [2.0, 10.0, 2.0, 10.0]


def test_infeasible_pair_is_rejected():
    instance = parse_instance("""
        die 10 10
        module a 6 6
        module b 6 6
    """)
    try:
        RmapService(instance)
    except InfeasiblePairError:
        return
    assert False, "expected InfeasiblePairError"


def test_oscillation_detector():
    detector = OscillationDetector(window=5, improvement=0.01, threshold=0.001)
    flags = [detector.update(0.05) for _ in range(6)]
    assert flags == [False, False, False, False, False, True]

    settled = OscillationDetector(window=3, improvement=0.01, threshold=0.001)
    assert not any(settled.update(0.0) for _ in range(10))

    shrinking = OscillationDetector(window=3, improvement=0.01, threshold=0.001)
    assert not any(shrinking.update(0.5 * 0.9 ** k) for k in range(30))


def test_oscillation_detector_flags_cycling_overlap():
    detector = OscillationDetector(window=4, improvement=0.01, threshold=0.001)
    flags = [detector.update(0.05 if k % 2 else 0.06) for k in range(8)]
    assert flags.index(True) == 5


def test_reset_counters_follow_repeated_failures():
    instance = parse_instance(PAIR)
    service = RmapService(instance)
    state = PreferenceState(threshold=2)
    stuck = np.array([4.0, 4.5, 4.0, 4.3])
    order = service.order(stuck)
    seen = []
    for _ in range(4):
        service.rmap_sweep(stuck, order, state)
        seen.append(list(state.counters[(0, 1)]))
    # Left is closest until its counter passes 2; then below takes over.
    assert seen == [[1, 0, 0, 0], [2, 0, 0, 0], [3, 0, 0, 0], [0, 0, 1, 0]]


def test_reset_counters_skip_progress_and_clear_when_satisfied():
    instance = parse_instance(PAIR)
    service = RmapService(instance)
    state = PreferenceState(threshold=2)
    first = np.array([4.0, 4.5, 4.0, 4.3])
    closer = np.array([4.0, 5.25, 4.0, 4.3])
    order = service.order(first)
    service.rmap_sweep(first, order, state)
    service.rmap_sweep(closer, order, state)
    assert state.counters[(0, 1)] == [1, 0, 0, 0]
    service.rmap_sweep(np.array([0.0, 5.0, 0.0, 5.0]), order, state)
    assert state.counters[(0, 1)] == [0, 0, 0, 0]
    assert (0, 1) not in state.entry_distances


def test_reset_counters_stay_within_threshold_plus_one():
    instance = random_tight_instance(6, utilization=0.9, seed=4)
    threshold = 3
    service = RmapService(instance, RmapConfig(threshold=threshold))
    rng = np.random.default_rng(6)
    z = np.concatenate((rng.uniform(30.0, 50.0, instance.n), rng.uniform(30.0, 50.0, instance.n)))
    for _ in range(200):
        z = service.sweep(z)
        for counters in service.state.counters.values():
            assert all(0 <= c <= threshold + 1 for c in counters), counters


def test_sharp_rmap_without_reset_matches_map():
    instance = random_tight_instance(6, seed=5)
    service = RmapService(instance, RmapConfig(eps_pref=1e-9, threshold=math.inf))
    rng = np.random.default_rng(11)
    for _ in range(20):
        z = rng.uniform(0.0, 100.0, 2 * instance.n)
        order = service.order(z)
        assert np.array_equal(service.rmap_sweep(z, order, PreferenceState(math.inf)),
                              service.map_sweep(z, order))


def main():
    """Run all tests."""
    print("=" * 60)
    print("Resettable Projection Tests")
    print("=" * 60)

    tests = [
        test_softmax_weights_sum_to_one,
        test_softmax_weights_are_stable_for_large_ratios,
        test_softmax_weights_reject_all_banned,
        test_position_order_ranks_by_corner_sum,
        test_position_order_breaks_ties_by_index,
        test_preference_ratio_bans_overused_direction,
        test_preference_ratio_is_negative_distance,
        test_counters_are_keyed_by_unordered_pair,
        test_sweeps_leave_feasible_placements_untouched,
        test_map_sweep_separates_a_pair,
        test_rmap_sweep_counts_dominant_direction_while_violated,
        test_rmap_sweeps_without_reset_remove_overlap,
        test_sweep_moves_boundary_pins_onto_their_side,
        test_infeasible_pair_is_rejected,
        test_oscillation_detector,
        test_oscillation_detector_flags_cycling_overlap,
        test_reset_counters_follow_repeated_failures,
        test_reset_counters_skip_progress_and_clear_when_satisfied,
        test_reset_counters_stay_within_threshold_plus_one,
        test_sharp_rmap_without_reset_matches_map,
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
