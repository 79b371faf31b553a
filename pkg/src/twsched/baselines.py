"""Comparison policies for homogeneous machines: Random, FIFO and Greedy.

Machines are indexed from 0.  Each function returns the machine chosen for
every task, in arrival order, together with the load it appends per machine.
"""

from __future__ import annotations

import enum
from typing import Optional, Sequence

import numpy as np

from .balancing import Assignment
from .errors import ConfigurationError


class Policy(enum.Enum):
    OURS = "ours"
    RANDOM = "random"
    FIFO = "fifo"
    GREEDY = "greedy"

    @classmethod
    def parse(cls, name: str) -> "Policy":
        try:
            return cls(name.strip().lower())
        except ValueError:
            known = ", ".join(p.value for p in cls)
            raise ConfigurationError(f"unknown policy {name!r} (known: {known})") from None


def _check(m):
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ConfigurationError(f"machine count must be a positive integer, got {m!r}")


def _appended(tasks: Sequence, places: Sequence[int], m: int) -> Assignment:
    loads = [0] * m
    for t, p in zip(tasks, places):
        loads[p] += t
    return Assignment(tuple(int(p) for p in places), tuple(loads))


def assign_random(tasks: Sequence, m: int, rng: np.random.Generator) -> Assignment:
    """Uniform independent machine per task: ``floor(u * m)`` for one uniform draw each."""
    _check(m)
    u = rng.random(len(tasks))
    places = np.minimum((u * m).astype(np.int64), m - 1)
    return _appended(tasks, places.tolist(), m)


def assign_fifo(tasks: Sequence, m: int, cursor: int = 0) -> tuple:
    """Round-robin in arrival order from ``cursor``; returns the assignment and the next cursor."""
    _check(m)
    if not 0 <= cursor < m:
        raise ConfigurationError(f"cursor {cursor} outside 0..{m - 1}")
    places = [(cursor + i) % m for i in range(len(tasks))]
    return _appended(tasks, places, m), (cursor + len(tasks)) % m


def assign_greedy(tasks: Sequence, m: int, queue_lengths: Optional[Sequence[int]] = None) -> tuple:
    """Each task joins the machine with the fewest queued tasks (lowest index on ties).

    Returns the assignment and the updated task counts.
    """
    _check(m)
    counts = [0] * m if queue_lengths is None else list(queue_lengths)
    if len(counts) != m:
        raise ConfigurationError(f"queue_lengths has {len(counts)} entries for {m} machines")
    places = []
    for _ in tasks:
        p = min(range(m), key=counts.__getitem__)
        counts[p] += 1
        places.append(p)
    return _appended(tasks, places, m), tuple(counts)
