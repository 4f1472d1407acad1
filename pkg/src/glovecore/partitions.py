"""Streaming enumeration of coalitions and coalition structures.

The partition generator walks restricted-growth strings in lexicographic
order with O(n) state, so callers can consume Bell(n) structures without ever
materializing them. Coalitions are enumerated directly from their binary
representation: masks ``1 .. 2**n - 1``.
"""

from __future__ import annotations

from typing import Iterator

from .game import MAX_PLAYERS, Coalition, CoalitionStructure


def bell_number(n: int) -> int:
    """Number of partitions of an ``n``-set, via the Bell-triangle recurrence."""
    if not 0 <= n <= MAX_PLAYERS:
        raise ValueError(f"n must be in 0..{MAX_PLAYERS}, got {n}")
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def all_partitions(n: int) -> Iterator[CoalitionStructure]:
    """Every coalition structure of ``n`` players, exactly once.

    Yields canonical restricted-growth tuples in lexicographic order: the
    successor bumps the rightmost label that can still grow and zeroes the
    suffix. Emits exactly Bell(n) structures.
    """
    if not 1 <= n <= MAX_PLAYERS:
        raise ValueError(f"n must be in 1..{MAX_PLAYERS}, got {n}")
    labels = [0] * n
    prefix_max = [0] * n  # prefix_max[i] = max(labels[: i + 1])
    while True:
        yield tuple(labels)
        i = n - 1
        while i > 0 and labels[i] > prefix_max[i - 1]:
            i -= 1
        if i == 0:
            return
        labels[i] += 1
        m = prefix_max[i - 1]
        if labels[i] > m:
            m = labels[i]
        prefix_max[i] = m
        for k in range(i + 1, n):
            labels[k] = 0
            prefix_max[k] = m


def all_coalitions(n: int) -> Iterator[Coalition]:
    """Every non-empty coalition mask of ``n`` players: ``1 .. 2**n - 1``."""
    if not 1 <= n <= MAX_PLAYERS:
        raise ValueError(f"n must be in 1..{MAX_PLAYERS}, got {n}")
    return iter(range(1, 1 << n))
