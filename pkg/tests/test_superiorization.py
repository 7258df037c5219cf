#!/usr/bin/env python3
"""
Tests for the wirelength perturbation step.
"""
import sys
import os
import math

# Add the repository root to the Python path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
from scipy.stats import chisquare

from floorplanner.config import SmConfig
from floorplanner.formats import parse_instance
from floorplanner.geometry import hpwl_total, movable_mask
from floorplanner.services.superiorization_service import (SuperiorizationService,
                                                           decay_index_start,
                                                           perturbation_step)
from floorplanner.synthetic import random_tight_instance

TETHERED = """
die 10 10
module a 1 1
io p fixed 0 0
pin pa a
pin pp p
net n pa pp
"""


def test_decay_index_start_without_carry_over():
    rng = np.random.default_rng(0)
    assert decay_index_start(5, 3, rng) == 5
    assert decay_index_start(5, 5, rng) == 5


def test_decay_index_start_draws_between_k_and_previous():
    rng = np.random.default_rng(0)
    draws = {decay_index_start(2, 6, rng) for _ in range(500)}
    assert draws == {2, 3, 4, 5, 6}


def test_decay_index_start_is_uniform():
    rng = np.random.default_rng(12345)
    draws = [decay_index_start(2, 7, rng) for _ in range(10000)]
    counts = np.bincount(draws, minlength=8)[2:]
    assert counts.sum() == 10000
    assert chisquare(counts).pvalue > 0.01


def test_accepted_steps_are_summable():
    instance = random_tight_instance(8, seed=6)
    config = SmConfig(num_perturb=3, lambda_init=20.0, lambda_min=0.1, lambda_decay=0.95, seed=2)
    service = SuperiorizationService(instance, config)
    z = np.random.default_rng(3).uniform(0.0, 100.0, 2 * instance.n)
    ell = 0
    total = 0.0
    for k in range(300):
        outcome = service.sm_perturb(z, k, ell)
        assert all(index >= k for index in outcome.accepted)
        total += sum(config.lambda_init * config.lambda_decay ** index
                     for index in outcome.accepted)
        z, ell = outcome.placement, outcome.decay_index
    assert total <= config.num_perturb * config.lambda_init / (1.0 - config.lambda_decay)


def test_perturbation_step_decays_to_floor():
    config = SmConfig(lambda_init=10.0, lambda_min=1.0, lambda_decay=0.5)
    assert perturbation_step(0, config) == 10.0
    assert perturbation_step(1, config) == 5.0
    assert perturbation_step(10, config) == 1.0


def test_perturbation_moves_toward_pin():
    instance = parse_instance(TETHERED)
    config = SmConfig(num_perturb=1, lambda_init=1.0, lambda_min=0.01, lambda_decay=0.9)
    service = SuperiorizationService(instance, config)
    z = np.array([5.0, 0.0, 5.0, 0.0])
    outcome = service.sm_perturb(z, 0, 0)
    assert outcome.hpwl_before == 10.0
    assert math.isclose(outcome.hpwl_after, 10.0 - math.sqrt(2.0))
    assert outcome.accepted == [0]
    assert outcome.decay_index == 0
    assert z.tolist() == [5.0, 0.0, 5.0, 0.0]


def test_rejected_trials_advance_decay_index():
    instance = parse_instance(TETHERED)
    config = SmConfig(num_perturb=1, lambda_init=100.0, lambda_min=0.01, lambda_decay=0.5)
    service = SuperiorizationService(instance, config)
    outcome = service.sm_perturb(np.array([5.0, 0.0, 5.0, 0.0]), 0, 0)
    # Steps 100, 50 and 25 overshoot the pin; 12.5 is the first improvement.
    assert outcome.accepted == [3]
    assert outcome.decay_index == 3
    assert outcome.hpwl_after < outcome.hpwl_before


def test_zero_subgradient_leaves_placement_alone():
    instance = parse_instance("""
        die 10 10
        module a 1 1
        module b 1 1
    """)
    service = SuperiorizationService(instance, SmConfig(lambda_init=1.0))
    z = np.array([1.0, 5.0, 1.0, 5.0])
    outcome = service.sm_perturb(z, 3, 0)
    assert np.array_equal(outcome.placement, z)
    assert outcome.accepted == []
    assert outcome.decay_index == 3


def test_hpwl_never_increases():
    instance = random_tight_instance(8, seed=3)
    config = SmConfig(lambda_init=20.0, lambda_min=0.1, seed=4)
    service = SuperiorizationService(instance, config)
    rng = np.random.default_rng(5)
    ell = 0
    for k in range(50):
        z = rng.uniform(0.0, 100.0, 2 * instance.n)
        outcome = service.sm_perturb(z, k, ell)
        ell = outcome.decay_index
        assert outcome.hpwl_after <= outcome.hpwl_before
        assert outcome.hpwl_after == hpwl_total(instance, outcome.placement)
        assert ell >= k


def test_equal_seeds_reproduce_perturbations():
    instance = random_tight_instance(8, seed=3)
    config = SmConfig(lambda_init=20.0, lambda_min=0.1, seed=11)
    z = np.random.default_rng(1).uniform(0.0, 100.0, 2 * instance.n)
    first, second = (SuperiorizationService(instance, config) for _ in range(2))
    ell_a = ell_b = 0
    for k in range(20):
        a = first.sm_perturb(z, k, ell_a + 5)
        b = second.sm_perturb(z, k, ell_b + 5)
        assert np.array_equal(a.placement, b.placement)
        assert a.decay_index == b.decay_index
        ell_a, ell_b = a.decay_index, b.decay_index


def test_fixed_entries_are_not_perturbed():
    instance = parse_instance("""
        die 10 10
        module a 1 1
        io q boundary L 0 5
        pin pa a
        pin pq q
        net n pa pq
    """)
    mask = movable_mask(instance, io_assignment=False)
    service = SuperiorizationService(instance, SmConfig(lambda_init=1.0), mask)
    z = np.array([5.0, 0.0, 2.0, 5.0])
    outcome = service.sm_perturb(z, 0, 0)
    assert outcome.placement[1] == 0.0 and outcome.placement[3] == 5.0
    assert outcome.placement[0] < 5.0


def main():
    """Run all tests."""
    print("=" * 60)
    print("Superiorization Tests")
    print("=" * 60)

    tests = [
        test_decay_index_start_without_carry_over,
        test_decay_index_start_draws_between_k_and_previous,
        test_decay_index_start_is_uniform,
        test_accepted_steps_are_summable,
        test_perturbation_step_decays_to_floor,
        test_perturbation_moves_toward_pin,
        test_rejected_trials_advance_decay_index,
        test_zero_subgradient_leaves_placement_alone,
        test_hpwl_never_increases,
        test_equal_seeds_reproduce_perturbations,
        test_fixed_entries_are_not_perturbed,
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
