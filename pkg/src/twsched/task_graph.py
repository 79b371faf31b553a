"""Tasks, execution profiles and the relation structure between tasks.

A pair of tasks is related only if one of them declares the other as a
partner; undeclared pairs are unconstrained whatever their windows look like.
A declaration may carry an explicit kind (checked against the windows by
:class:`TaskGraph`) or leave it to :func:`classify`.

Text format, one task per line (``#`` starts a comment)::

    task <id> window=<start>,<finish|inf> exec=<seconds> [offset=<seconds>]
         [exec@<robot>=<seconds>]... [rel=[~]<kind>:<partner>]...

``rel=before:B`` reads "this task is before B"; the ``~`` prefix flips the
direction ("B is before this task").  Kinds are the values of
:class:`RelationKind`.
"""

from __future__ import annotations

import enum
import re
import shlex
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .errors import ConfigurationError, ConsistencyError
from .time_windows import (
    UNCONSTRAINED,
    OrientedRelation,
    RelationKind,
    TimeWindow,
    as_time,
    classify,
    format_time,
)

_ID = re.compile(r"^[A-Za-z0-9_.\-]+$")


@dataclass(frozen=True)
class Task:
    id: str
    window: TimeWindow = field(default_factory=lambda: TimeWindow(0))
    # partner id -> declared relation (self, partner), or None to derive it from windows
    constraints: Mapping[str, Optional[OrientedRelation]] = field(default_factory=dict)

    def __post_init__(self):
        if not _ID.match(self.id):
            raise ConfigurationError(f"invalid task id {self.id!r}")
        object.__setattr__(self, "constraints", dict(self.constraints))

    def __hash__(self):
        return hash(self.id)

    def __eq__(self, other):
        if not isinstance(other, Task):
            return NotImplemented
        return (self.id, self.window, self.constraints) == (
            other.id,
            other.window,
            other.constraints,
        )

    @property
    def partners(self) -> frozenset:
        return frozenset(
            pid
            for pid, rel in self.constraints.items()
            if rel is None or rel.kind is not RelationKind.UNCONSTRAINED
        )


class ParallelSerial(enum.Enum):
    PARALLEL = "parallel"
    SERIAL = "serial"


PARALLEL_KINDS = frozenset(
    {
        RelationKind.EQUALS,
        RelationKind.OVERLAPS,
        RelationKind.FINISHES_WITH,
        RelationKind.STARTS_WITH,
        RelationKind.DURING,
    }
)


class ExecutionProfile:
    """Average completion times ``t_e`` and dispatch offsets ``t_s`` per (task, robot).

    A per-task default applies to every robot unless overridden.  ``None``
    stands for Idle and always takes zero time.
    """

    def __init__(self, default=None, offsets=None, overrides=None):
        self._default = {k: as_time(v) for k, v in (default or {}).items()}
        self._offsets = {k: as_time(v) for k, v in (offsets or {}).items()}
        self._overrides = {k: as_time(v) for k, v in (overrides or {}).items()}
        for v in (*self._default.values(), *self._offsets.values(), *self._overrides.values()):
            if v < 0:
                raise ConfigurationError("execution times and offsets must be >= 0")

    def exec_time(self, task_id, robot_id=None) -> Fraction:
        if task_id is None:
            return Fraction(0)
        if (task_id, robot_id) in self._overrides:
            return self._overrides[task_id, robot_id]
        try:
            return self._default[task_id]
        except KeyError:
            raise ConfigurationError(f"no execution time for task {task_id!r}") from None

    def offset(self, task_id, robot_id=None) -> Fraction:
        if task_id is None:
            return Fraction(0)
        key = (task_id, robot_id)
        if key in self._offsets:
            return self._offsets[key]
        return self._offsets.get(task_id, Fraction(0))

    def mean_exec_time(self, task_id, robot_ids) -> Fraction:
        robot_ids = list(robot_ids) or [None]
        return sum(self.exec_time(task_id, r) for r in robot_ids) / len(robot_ids)

    def set(self, task_id, seconds, robot_id=None):
        t = as_time(seconds)
        if robot_id is None:
            self._default[task_id] = t
        else:
            self._overrides[task_id, robot_id] = t

    def set_offset(self, task_id, seconds, robot_id=None):
        t = as_time(seconds)
        if t < 0:
            raise ConfigurationError("offsets must be >= 0")
        self._offsets[task_id if robot_id is None else (task_id, robot_id)] = t

    def __eq__(self, other):
        if not isinstance(other, ExecutionProfile):
            return NotImplemented
        return (self._default, self._offsets, self._overrides) == (
            other._default,
            other._offsets,
            other._overrides,
        )


def declared_relation(t1: Task, t2: Task) -> OrientedRelation:
    """Relation of ``(t1, t2)``: declared kind, else geometric, else unconstrained."""
    if t2.id in t1.constraints:
        rel = t1.constraints[t2.id]
    elif t1.id in t2.constraints:
        rel = t2.constraints[t1.id]
        if rel is not None:
            rel = rel.converse()
    else:
        return UNCONSTRAINED
    if rel is None:
        return classify(t1.window, t2.window)
    return rel


def kind_parallelism(kind: RelationKind) -> ParallelSerial:
    return ParallelSerial.PARALLEL if kind in PARALLEL_KINDS else ParallelSerial.SERIAL


def parallel_or_serial(t1: Task, t2: Task) -> ParallelSerial:
    return kind_parallelism(declared_relation(t1, t2).kind)


def robot_compatible(robot_stream_count: int, equals_class_size: int) -> bool:
    return robot_stream_count > equals_class_size


def system_compatible(stream_counts: Iterable[int], equals_class_size: int) -> bool:
    return any(robot_compatible(n, equals_class_size) for n in stream_counts)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


@dataclass(frozen=True)
class EqualClasses:
    classes: tuple  # of frozenset of task ids, ordered by smallest member id
    class_index: Mapping[str, int]
    between: Mapping[tuple, OrientedRelation]  # (i, j) with i < j

    def class_of(self, task_id: str) -> frozenset:
        return self.classes[self.class_index[task_id]]

    def relation(self, id1: str, id2: str) -> OrientedRelation:
        i, j = self.class_index[id1], self.class_index[id2]
        if i == j:
            if id1 == id2:
                return OrientedRelation(RelationKind.EQUALS)
            size = len(self.classes[i])
            return OrientedRelation(RelationKind.EQUALS) if size > 1 else UNCONSTRAINED
        if i < j:
            return self.between.get((i, j), UNCONSTRAINED)
        return self.between.get((j, i), UNCONSTRAINED).converse()


def merge_equal_classes(tasks: Iterable[Task]) -> EqualClasses:
    """Merge overlapping Equals-classes and lift one relation per class pair.

    Raises :class:`ConsistencyError` if two cross pairs between the same
    classes carry different relations, or a non-Equals relation is declared
    inside a class.
    """
    tasks = {t.id: t for t in tasks}
    uf = _UnionFind(sorted(tasks))
    pairs = []
    for t in tasks.values():
        for pid in t.constraints:
            if pid not in tasks or pid == t.id:
                continue
            a, b = sorted((t.id, pid))
            pairs.append((a, b))
    pairs = sorted(set(pairs))
    rels = {}
    for a, b in pairs:
        rel = declared_relation(tasks[a], tasks[b])
        if rel.kind is RelationKind.UNCONSTRAINED:
            continue
        rels[a, b] = rel
        if rel.kind is RelationKind.EQUALS:
            uf.union(a, b)

    groups = {}
    for tid in sorted(tasks):
        groups.setdefault(uf.find(tid), []).append(tid)
    classes = tuple(frozenset(g) for g in sorted(groups.values(), key=lambda g: g[0]))
    index = {tid: i for i, cls in enumerate(classes) for tid in cls}

    between = {}
    witness = {}
    for (a, b), rel in rels.items():
        i, j = index[a], index[b]
        if i == j:
            if rel.kind is not RelationKind.EQUALS:
                raise ConsistencyError(
                    f"{a} and {b} are in one Equals-class but declared {rel}"
                )
            continue
        if i > j:
            i, j, rel, a, b = j, i, rel.converse(), b, a
        prev = between.get((i, j))
        if prev is None:
            between[i, j] = rel
            witness[i, j] = (a, b)
        elif prev != rel:
            wa, wb = witness[i, j]
            raise ConsistencyError(
                f"classes of {wa} and {b} are related both as {wa} {prev} {wb} "
                f"and {a} {rel} {b}"
            )
    return EqualClasses(classes, index, between)


class TaskGraph:
    """Validated task set with induced relations between every pair.

    Construction symmetrises declarations, rejects unknown partners (unless
    ``allow_external``), checks declared kinds against the windows and merges
    Equals-classes.
    """

    def __init__(self, tasks: Iterable[Task], *, allow_external: bool = False):
        tasks = list(tasks)
        self.tasks = {}
        for t in tasks:
            if t.id in self.tasks:
                raise ConfigurationError(f"duplicate task id {t.id!r}")
            self.tasks[t.id] = t
        for t in tasks:
            for pid, rel in t.constraints.items():
                if pid == t.id:
                    raise ConsistencyError(f"task {t.id} declares a relation with itself")
                if pid not in self.tasks:
                    if allow_external:
                        continue
                    raise ConsistencyError(f"task {t.id} references unknown task {pid!r}")
                other = self.tasks[pid]
                back = other.constraints.get(t.id, ...)
                if back is not ... and back is not None and rel is not None:
                    if back != rel.converse():
                        raise ConsistencyError(
                            f"{t.id} declares {rel} {pid} but {pid} declares {back} {t.id}"
                        )
                declared = declared_relation(t, other)
                geometric = classify(t.window, other.window)
                if declared.kind is not RelationKind.UNCONSTRAINED and declared != geometric:
                    raise ConsistencyError(
                        f"{t.id} {t.window} and {pid} {other.window} are declared {declared} "
                        f"but their windows give {geometric}"
                    )
        self.classes = merge_equal_classes(tasks)
        self._adj = {tid: set() for tid in self.tasks}
        for t in tasks:
            for pid in t.partners:
                if pid in self.tasks:
                    self._adj[t.id].add(pid)
                    self._adj[pid].add(t.id)

    def __iter__(self):
        return iter(self.tasks.values())

    def __len__(self):
        return len(self.tasks)

    def relation(self, id1: str, id2: str) -> OrientedRelation:
        return self.classes.relation(id1, id2)

    def parallel(self, id1: str, id2: str) -> bool:
        if id1 == id2:
            return False
        return kind_parallelism(self.relation(id1, id2).kind) is ParallelSerial.PARALLEL

    def constrained(self, task_id: str) -> bool:
        """True if the task has any relation, declared or induced."""
        if self._adj[task_id]:
            return True
        return len(self.classes.class_of(task_id)) > 1

    def equal_class(self, task_id: str) -> frozenset:
        return self.classes.class_of(task_id)

    def components(self) -> list:
        """Connected components of the declared relation graph, sorted by earliest window."""
        seen = set()
        comps = []
        for tid in sorted(self.tasks):
            if tid in seen:
                continue
            stack, comp = [tid], []
            seen.add(tid)
            while stack:
                x = stack.pop()
                comp.append(self.tasks[x])
                for y in self._adj[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            comps.append(sorted(comp, key=lambda t: (t.window.start, t.window.finish, t.id)))
        comps.sort(key=lambda c: (c[0].window.start, c[0].window.finish, c[0].id))
        return comps

    def check_remark2(self, stream_counts: Iterable[int]) -> None:
        from .errors import IncompatibleSystemError

        counts = list(stream_counts)
        for cls in self.classes.classes:
            if len(cls) > 1 and not system_compatible(counts, len(cls)):
                raise IncompatibleSystemError(
                    f"system is not compatible to perform the tasks: Equals-class "
                    f"{sorted(cls)} needs a robot with more than {len(cls)} streams"
                )


_KINDS = {k.value: k for k in RelationKind}


def _parse_relation(text: str, lineno: int) -> tuple:
    kind_part, sep, partner = text.partition(":")
    if not sep or not partner:
        raise ConfigurationError(f"line {lineno}: malformed rel={text!r}")
    swapped = kind_part.startswith("~")
    name = kind_part.lstrip("~")
    if name not in _KINDS:
        raise ConfigurationError(f"line {lineno}: unknown relation kind {name!r}")
    return partner, OrientedRelation(_KINDS[name], swapped)


def parse_tasks(text: str) -> tuple:
    """Parse the line format into ``(tasks, profile)``."""
    tasks = []
    profile = ExecutionProfile()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        words = shlex.split(line)
        if words[0] != "task" or len(words) < 2:
            raise ConfigurationError(f"line {lineno}: expected 'task <id> ...'")
        tid = words[1]
        window = TimeWindow(0)
        constraints = {}
        for word in words[2:]:
            key, sep, value = word.partition("=")
            if not sep:
                raise ConfigurationError(f"line {lineno}: expected key=value, got {word!r}")
            try:
                if key == "window":
                    a, b = value.split(",")
                    window = TimeWindow(as_time(a), as_time(b, allow_inf=True))
                elif key == "exec":
                    profile.set(tid, value)
                elif key.startswith("exec@"):
                    profile.set(tid, value, robot_id=key[5:])
                elif key == "offset":
                    profile.set_offset(tid, value)
                elif key == "rel":
                    partner, rel = _parse_relation(value, lineno)
                    constraints[partner] = rel
                else:
                    raise ConfigurationError(f"line {lineno}: unknown field {key!r}")
            except (ValueError, ZeroDivisionError) as exc:
                if isinstance(exc, ConfigurationError):
                    raise
                raise ConfigurationError(f"line {lineno}: bad {key}={value!r}: {exc}") from None
        tasks.append(Task(tid, window, constraints))
    return tasks, profile


def dump_tasks(tasks: Iterable[Task], profile: Optional[ExecutionProfile] = None) -> str:
    tasks = list(tasks)
    windows = {t.id: t.window for t in tasks}
    lines = []
    for t in tasks:
        parts = ["task", t.id, f"window={format_time(t.window.start)},{format_time(t.window.finish)}"]
        if profile is not None:
            if t.id in profile._default:
                parts.append(f"exec={format_time(profile._default[t.id])}")
            for (tid, rid), v in sorted(profile._overrides.items()):
                if tid == t.id:
                    parts.append(f"exec@{rid}={format_time(v)}")
            if t.id in profile._offsets:
                parts.append(f"offset={format_time(profile._offsets[t.id])}")
        for pid, rel in sorted(t.constraints.items()):
            if rel is None:
                rel = classify(t.window, windows[pid])
            parts.append(f"rel={rel}:{pid}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")
