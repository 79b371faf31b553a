"""Greedy variance balancing of durations over ``m`` places.

Items are taken largest first and each one is added to a place whose current
load is minimal (lowest index on ties).  Starting loads may be non-zero, which
is how already-queued work on a machine is taken into account.

:func:`brute_force_oracle` enumerates every assignment and is used to check
the greedy rule on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, OracleCapacityError

ORACLE_LIMIT = 10**7
_CHUNK = 1 << 16


@dataclass(frozen=True)
class Assignment:
    place_of: tuple  # place index per input item, in input order
    resulting_loads: tuple

    @property
    def makespan(self):
        return max(self.resulting_loads)


def _check_places(m: int, initial_loads) -> tuple:
    if not isinstance(m, int) or m < 1:
        raise ConfigurationError(f"place count must be a positive integer, got {m!r}")
    if initial_loads is None:
        return (0,) * m
    loads = tuple(initial_loads)
    if len(loads) != m:
        raise ConfigurationError(
            f"initial_loads has {len(loads)} entries but there are {m} places"
        )
    if any(x < 0 for x in loads):
        raise ConfigurationError("initial loads must be non-negative")
    return loads


def balance_allocate(items: Sequence, m: int, initial_loads=None) -> Assignment:
    loads = list(_check_places(m, initial_loads))
    if any(x <= 0 for x in items):
        raise ConfigurationError("items must be positive durations")
    # sorted() is stable, so equal items keep their input order
    order = sorted(range(len(items)), key=lambda i: items[i], reverse=True)
    place_of = [0] * len(items)
    for i in order:
        p = min(range(m), key=loads.__getitem__)
        loads[p] += items[i]
        place_of[i] = p
    return Assignment(tuple(place_of), tuple(loads))


def variance(loads: Sequence) -> Fraction:
    """Population variance (divisor ``m``), exact for rational loads."""
    m = len(loads)
    if m < 1:
        raise ConfigurationError("variance of an empty load vector")
    values = [Fraction(x) for x in loads]
    mu = sum(values) / m
    return sum((x - mu) ** 2 for x in values) / m


def makespan(loads: Sequence):
    return max(loads)


@dataclass(frozen=True)
class OracleResult:
    min_variance: Fraction
    variance_witness: Assignment
    min_makespan: object
    makespan_witness: Assignment


def _assignment(codes_row, items, m, init) -> Assignment:
    loads = list(init)
    for item, p in zip(items, codes_row):
        loads[p] += item
    return Assignment(tuple(int(p) for p in codes_row), tuple(loads))


def brute_force_oracle(items: Sequence, m: int, initial_loads=None) -> OracleResult:
    """Exhaustive minimum variance and minimum makespan over all ``m**n`` assignments."""
    init = _check_places(m, initial_loads)
    n = len(items)
    total = m**n
    if total > ORACLE_LIMIT:
        raise OracleCapacityError(f"{m}**{n} = {total} assignments exceeds {ORACLE_LIMIT}")

    integral = all(isinstance(x, (int, np.integer)) for x in (*items, *init)) or all(
        isinstance(x, Rational) and Fraction(x).denominator == 1 for x in (*items, *init)
    )
    dtype = np.int64 if integral else object
    weights = np.array([int(x) if integral else Fraction(x) for x in items], dtype=dtype)
    base = np.array([int(x) if integral else Fraction(x) for x in init], dtype=dtype)
    powers = m ** np.arange(n, dtype=np.int64)

    best_spread = best_span = None
    best_spread_code = best_span_code = 0
    for lo in range(0, total, _CHUNK):
        codes = np.arange(lo, min(total, lo + _CHUNK), dtype=np.int64)
        digits = (codes[:, None] // powers[None, :]) % m
        loads = np.empty((len(codes), m), dtype=dtype)
        for p in range(m):
            loads[:, p] = base[p] + ((digits == p) * weights[None, :]).sum(axis=1)
        # m * sum(x^2) - (sum x)^2 == m^2 * variance, so it orders assignments exactly
        spread = m * (loads * loads).sum(axis=1) - loads.sum(axis=1) ** 2
        span = loads.max(axis=1)
        i = int(np.argmin(spread))
        if best_spread is None or spread[i] < best_spread:
            best_spread, best_spread_code = spread[i], lo + i
        j = int(np.argmin(span))
        if best_span is None or span[j] < best_span:
            best_span, best_span_code = span[j], lo + j

    def decode(code):
        return [(code // m**k) % m for k in range(n)]

    vw = _assignment(decode(best_spread_code), items, m, init)
    sw = _assignment(decode(best_span_code), items, m, init)
    return OracleResult(variance(vw.resulting_loads), vw, max(sw.resulting_loads), sw)
