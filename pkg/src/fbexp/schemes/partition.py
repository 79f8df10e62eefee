"""Random equal-size binning of the message set (compressed feedback)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameterError


def _check_shape(num_messages, num_bins):
    if num_messages < 1 or num_bins < 1 or num_messages % num_bins:
        raise InvalidParameterError(
            f"num_bins={num_bins} must divide num_messages={num_messages}"
        )


@dataclass(frozen=True, eq=False)
class PartitionMap:
    """Total map message -> bin with every bin holding ``num_messages / num_bins`` messages."""

    assignment: np.ndarray
    num_bins: int

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        _check_shape(a.size, self.num_bins)
        if np.any(np.bincount(a, minlength=self.num_bins) != a.size // self.num_bins):
            raise InvalidParameterError("bins of a PartitionMap must have equal sizes")
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @property
    def num_messages(self) -> int:
        return self.assignment.size

    @property
    def bin_size(self) -> int:
        return self.num_messages // self.num_bins

    def __call__(self, m):
        return self.assignment[m]

    def members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == j)


def sample_equal_partition(num_messages: int, num_bins: int, rng: np.random.Generator) -> PartitionMap:
    """Uniformly random equal partition: shuffle, then cut into consecutive bins."""
    _check_shape(num_messages, num_bins)
    order = rng.permutation(num_messages)
    assignment = np.empty(num_messages, dtype=np.int64)
    assignment[order] = np.arange(num_messages) // (num_messages // num_bins)
    return PartitionMap(assignment, num_bins)


def sample_partition_batch(batch: int, num_messages: int, num_bins: int,
                           rng: np.random.Generator) -> np.ndarray:
    """``batch`` independent uniform equal partitions as a ``(batch, |M|)`` assignment array."""
    _check_shape(num_messages, num_bins)
    order = np.argsort(rng.random((batch, num_messages)), axis=1, kind="stable")
    assignment = np.empty((batch, num_messages), dtype=np.int64)
    bins = np.broadcast_to(np.arange(num_messages) // (num_messages // num_bins), (batch, num_messages))
    np.put_along_axis(assignment, order, bins, axis=1)
    return assignment


def expected_collision_probability(num_messages: int, num_bins: int) -> float:
    """Pr{two distinct messages share a bin} = (s - 1) / (|M| - 1), s = |M| / b."""
    _check_shape(num_messages, num_bins)
    if num_messages < 2:
        raise InvalidParameterError("collision probability needs at least two messages")
    s = num_messages // num_bins
    return (s - 1) / (num_messages - 1)
