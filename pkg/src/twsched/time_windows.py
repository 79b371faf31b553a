"""Time windows and the eight pairwise window relations.

Times are exact: integers, decimals and ratios are stored as
:class:`fractions.Fraction`, and an unbounded deadline is ``math.inf``.
Float inputs are converted through their decimal string so ``2.5`` stays
``5/2`` rather than picking up binary noise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

INF = math.inf

Time = Union[Fraction, float]  # float only ever holds INF


def as_time(value, *, allow_inf: bool = False) -> Time:
    """Normalise ``value`` to an exact time."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity"):
            value = INF
        else:
            value = Fraction(text)
    if isinstance(value, float):
        if math.isinf(value) and value > 0:
            if not allow_inf:
                raise ValueError("unbounded time not allowed here")
            return INF
        if math.isnan(value) or math.isinf(value):
            raise ValueError(f"invalid time {value!r}")
        return Fraction(repr(value))
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a time")


def format_time(t: Time) -> str:
    if t == INF:
        return "inf"
    t = Fraction(t)
    if t.denominator == 1:
        return str(t.numerator)
    return f"{t.numerator}/{t.denominator}"


@dataclass(frozen=True, order=True)
class TimeWindow:
    """Half-open interval ``[start, finish)`` of admissible execution."""

    start: Time
    finish: Time = INF

    def __post_init__(self):
        start = as_time(self.start)
        finish = as_time(self.finish, allow_inf=True)
        if start < 0:
            raise ValueError(f"window start must be >= 0, got {start}")
        if finish < start:
            raise ValueError(f"window finish {finish} precedes start {start}")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "finish", finish)

    @property
    def bounded(self) -> bool:
        return self.finish != INF

    @property
    def length(self) -> Time:
        return self.finish - self.start

    def shifted(self, delta) -> "TimeWindow":
        delta = as_time(delta)
        return TimeWindow(self.start + delta, self.finish + delta)

    def contains(self, other: "TimeWindow") -> bool:
        return self.start <= other.start and other.finish <= self.finish

    def overlaps(self, other: "TimeWindow") -> bool:
        """Interior intersection; touching endpoints do not count."""
        if self.start == self.finish or other.start == other.finish:
            return False
        return self.start < other.finish and other.start < self.finish

    def __str__(self):
        return f"[{format_time(self.start)},{format_time(self.finish)}]"


class RelationKind(enum.Enum):
    BEFORE = "before"
    MEETS = "meets"
    DURING = "during"
    STARTS_WITH = "starts"
    FINISHES_WITH = "finishes"
    EQUALS = "equals"
    OVERLAPS = "overlaps"
    UNCONSTRAINED = "unconstrained"

    @property
    def symmetric(self) -> bool:
        return self in (RelationKind.EQUALS, RelationKind.UNCONSTRAINED)

    @property
    def symbol(self) -> str:
        return _SYMBOLS[self]


_SYMBOLS = {
    RelationKind.BEFORE: "<",
    RelationKind.MEETS: "∧",
    RelationKind.DURING: "⇒",
    RelationKind.STARTS_WITH: "⊢",
    RelationKind.FINISHES_WITH: "⊣",
    RelationKind.EQUALS: "=",
    RelationKind.OVERLAPS: "∨",
    RelationKind.UNCONSTRAINED: "≀",
}


@dataclass(frozen=True)
class OrientedRelation:
    """A relation kind plus the direction in which it holds.

    ``swapped`` is true when the kind holds for ``(w2, w1)`` rather than
    ``(w1, w2)``.  Symmetric kinds are never swapped.
    """

    kind: RelationKind
    swapped: bool = False

    def __post_init__(self):
        if self.kind.symmetric and self.swapped:
            object.__setattr__(self, "swapped", False)

    def converse(self) -> "OrientedRelation":
        return OrientedRelation(self.kind, not self.swapped)

    def __str__(self):
        return ("~" if self.swapped else "") + self.kind.value


UNCONSTRAINED = OrientedRelation(RelationKind.UNCONSTRAINED)


def _before(a1, b1, a2, b2):
    return a2 > b1


def _meets(a1, b1, a2, b2):
    return a2 == b1


def _during(a1, b1, a2, b2):
    return a1 > a2 and b1 < b2


def _starts_with(a1, b1, a2, b2):
    return a1 == a2 and b1 < b2


def _finishes_with(a1, b1, a2, b2):
    return a1 < a2 and b1 == b2


def _equals(a1, b1, a2, b2):
    return a1 == a2 and b1 == b2


def _overlaps(a1, b1, a2, b2):
    return a1 < a2 < b1 < b2


# Equality patterns first: on degenerate windows they coincide with strict
# ones and must win.  STARTS_WITH precedes MEETS so that two windows meeting
# the same predecessor always start together.
PREDICATES = (
    (RelationKind.EQUALS, _equals),
    (RelationKind.STARTS_WITH, _starts_with),
    (RelationKind.FINISHES_WITH, _finishes_with),
    (RelationKind.MEETS, _meets),
    (RelationKind.BEFORE, _before),
    (RelationKind.DURING, _during),
    (RelationKind.OVERLAPS, _overlaps),
)


def holds(kind: RelationKind, w1: TimeWindow, w2: TimeWindow) -> bool:
    """Whether the defining inequalities of ``kind`` hold for ``(w1, w2)``."""
    for k, pred in PREDICATES:
        if k is kind:
            return pred(w1.start, w1.finish, w2.start, w2.finish)
    return False


def classify(w1: TimeWindow, w2: TimeWindow) -> OrientedRelation:
    a1, b1, a2, b2 = w1.start, w1.finish, w2.start, w2.finish
    for kind, pred in PREDICATES:
        if pred(a1, b1, a2, b2):
            return OrientedRelation(kind, False)
        if pred(a2, b2, a1, b1):
            return OrientedRelation(kind, True)
    return UNCONSTRAINED


def relation_partition(reference, tasks: Iterable) -> Mapping[RelationKind, frozenset]:
    """Split ``tasks`` into relation classes with respect to ``reference``.

    Pairs without a declared constraint land in the UNCONSTRAINED class;
    declared pairs are classified geometrically.  Classes are keyed by kind
    only, so a task before the reference and one after it share BEFORE.
    """
    from .task_graph import declared_relation

    classes = {kind: set() for kind in RelationKind}
    for task in tasks:
        if task.id == reference.id:
            continue
        rel = declared_relation(reference, task)
        classes[rel.kind].add(task)
    return {kind: frozenset(members) for kind, members in classes.items()}
