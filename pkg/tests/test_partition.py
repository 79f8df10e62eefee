import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fbexp.errors import InvalidParameterError
from fbexp.schemes import (
    PartitionMap,
    expected_collision_probability,
    sample_equal_partition,
    sample_partition_batch,
)


def _enumerated_collision(M, b):
    """Exact Pr{0 and 1 share a bin} over all equal partitions (labelled bins)."""
    s = M // b
    hits = total = 0
    for labels in itertools.product(range(b), repeat=M):
        if all(labels.count(j) == s for j in range(b)):
            total += 1
            hits += labels[0] == labels[1]
    return Fraction(hits, total)


@pytest.mark.parametrize("M, b", [(8, 2), (6, 3), (6, 2), (4, 4), (4, 1)])
def test_collision_formula_matches_enumeration(M, b):
    assert expected_collision_probability(M, b) == pytest.approx(float(_enumerated_collision(M, b)))


def test_collision_degenerate_cases():
    assert expected_collision_probability(8, 8) == 0.0
    assert expected_collision_probability(8, 1) == 1.0
    assert expected_collision_probability(8, 2) == pytest.approx(3 / 7)
    with pytest.raises(InvalidParameterError):
        expected_collision_probability(8, 3)
    with pytest.raises(InvalidParameterError):
        expected_collision_probability(1, 1)


@given(st.integers(1, 12), st.integers(1, 8), st.integers(0, 2**32))
def test_partition_bins_equal(b, s, seed):
    p = sample_equal_partition(b * s, b, np.random.default_rng(seed))
    assert np.all(np.bincount(p.assignment, minlength=b) == s)
    assert p.bin_size == s and p.num_messages == b * s
    assert sorted(np.concatenate([p.members(j) for j in range(b)]).tolist()) == list(range(b * s))


def test_partition_is_deterministic():
    a = sample_equal_partition(16, 4, np.random.default_rng(3))
    b = sample_equal_partition(16, 4, np.random.default_rng(3))
    assert np.array_equal(a.assignment, b.assignment)
    assert a(5) == a.assignment[5]


def test_singleton_and_single_bin():
    rng = np.random.default_rng(0)
    p = sample_equal_partition(8, 8, rng)
    assert sorted(p.assignment.tolist()) == list(range(8))
    assert np.all(sample_equal_partition(8, 1, rng).assignment == 0)


def test_partition_map_rejects_unequal_bins():
    with pytest.raises(InvalidParameterError):
        PartitionMap(np.array([0, 0, 0, 1]), 2)
    with pytest.raises(InvalidParameterError):
        sample_equal_partition(10, 3, np.random.default_rng(0))


def test_batch_partitions_equal_and_uniform():
    rng = np.random.default_rng(11)
    parts = sample_partition_batch(100_000, 8, 2, rng)
    assert np.all(np.sort(parts, axis=1) == np.repeat([0, 1], 4))
    same = np.mean(parts[:, 0] == parts[:, 5])
    p = 3 / 7
    assert abs(same - p) <= 3 * math.sqrt(p * (1 - p) / 100_000)
