"""Grid of all tasks: rows of task windows that can be laid onto streams.

Each row becomes one stream.  Tasks that must run in parallel sit on
different rows; serial tasks may share a row in window order.  ForcedIdle
slots pad rows and mark holes that later tasks can take over.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from .balancing import variance
from .errors import SystemUnsuitableError
from .task_graph import Task, TaskGraph
from .time_windows import INF, TimeWindow, format_time

log = logging.getLogger(__name__)

_creation = itertools.count()


@dataclass(frozen=True)
class GridSlot:
    window: TimeWindow
    task_id: Optional[str] = None
    # set on ForcedIdle slots that stand in for a masked task
    reserved_for: Optional[str] = None

    @property
    def idle(self) -> bool:
        return self.task_id is None

    @property
    def position_id(self) -> Optional[str]:
        return self.task_id if self.task_id is not None else self.reserved_for

    def __str__(self):
        label = "IDLE" if self.idle else self.task_id
        return f"[{format_time(self.window.start)},{format_time(self.window.finish)}:{label}]"


def _row_deadline(row) -> object:
    return row[-1].window.finish if row else 0


@dataclass(frozen=True)
class Grid:
    rows: tuple
    window: TimeWindow
    creation_index: int

    @property
    def k(self) -> int:
        return len(self.rows)

    def slots(self):
        for r, row in enumerate(self.rows):
            for c, slot in enumerate(row):
                yield r, c, slot

    def task_ids(self) -> list:
        return [s.task_id for _, _, s in self.slots() if not s.idle]

    def position_of(self, task_id: str):
        for r, c, slot in self.slots():
            if slot.position_id == task_id:
                return r, c
        return None

    def row_deadline(self, r: int):
        return _row_deadline(self.rows[r])

    def fill(self, r: int, c: int, task_id: str, window: TimeWindow) -> "Grid":
        """Put ``task_id`` into the idle slot at ``(r, c)``, keeping leftover idle time."""
        slot = self.rows[r][c]
        if not slot.idle or not slot.window.contains(window):
            raise ValueError(f"slot {slot} cannot take {task_id} {window}")
        pieces = []
        if slot.window.start < window.start:
            pieces.append(GridSlot(TimeWindow(slot.window.start, window.start)))
        pieces.append(GridSlot(window, task_id))
        if window.finish < slot.window.finish:
            pieces.append(GridSlot(TimeWindow(window.finish, slot.window.finish)))
        row = self.rows[r][:c] + tuple(pieces) + self.rows[r][c + 1 :]
        rows = self.rows[:r] + (row,) + self.rows[r + 1 :]
        return replace(self, rows=rows)

    def dump(self) -> str:
        return "\n".join(" ".join(str(s) for s in row) for row in self.rows) + "\n"


def grid_window(g: Grid) -> TimeWindow:
    slots = [s for _, _, s in g.slots()]
    if not slots:
        raise ValueError("empty grid has no window")
    return TimeWindow(min(s.window.start for s in slots), max(s.window.finish for s in slots))


def idle_time(g: Grid):
    """Total length of ForcedIdle slots; unbounded idle slots count as infinite."""
    return sum((s.window.length for _, _, s in g.slots() if s.idle), 0)


def compute_mnst(streams: Iterable[Sequence]) -> int:
    """Longest run of scheduled (non-Idle, i.e. not ``None``) entries over all streams."""
    best = 0
    for stream in streams:
        k = 0
        for i, entry in enumerate(stream, 1):
            if entry is not None:
                k = i
        best = max(best, k)
    return best


def divisibility_ok(k: int, nt: int) -> bool:
    if k < 1:
        raise ValueError("a grid has at least one row")
    return nt % k == 0


def mask(g: Grid, task_id: str) -> Grid:
    if g.position_of(task_id) is None:
        raise KeyError(f"task {task_id!r} has no position in the grid")
    rows = []
    for row in g.rows:
        new = []
        for slot in row:
            if slot.task_id is not None and slot.task_id != task_id:
                slot = GridSlot(slot.window, None, slot.task_id)
            new.append(slot)
        rows.append(tuple(new))
    return replace(g, rows=tuple(rows))


def acceptable_slots(g: Grid, t: Task, w: TimeWindow, *, free: bool) -> list:
    """Idle slots of ``g`` that may take ``t`` with window ``w``.

    The slot reserved for ``t`` is the only candidate when there is one.
    ``free`` (the task has no relations) also admits unreserved idle slots.
    """
    pos = g.position_of(t.id)
    if pos is not None:
        slot = g.rows[pos[0]][pos[1]]
        return [pos] if slot.idle and slot.window.contains(w) else []
    if not free:
        return []
    return [
        (r, c)
        for r, c, slot in g.slots()
        if slot.idle and slot.reserved_for is None and slot.window.contains(w)
    ]


def accepts(g: Grid, t: Task, w: TimeWindow) -> bool:
    return bool(acceptable_slots(g, t, w, free=not t.partners))


def _row_load(row, origin):
    return _row_deadline(row) - origin if row else 0


def _spread(loads):
    if any(x == INF for x in loads):
        return INF
    return variance(loads)


class _Builder:
    def __init__(self, graph: TaskGraph, nt: int):
        self.graph = graph
        self.nt = nt
        self.rows = []

    @property
    def origin(self):
        starts = [s.window.start for row in self.rows for s in row]
        return min(starts) if starts else None

    def _fits(self, r, task: Task) -> bool:
        row = self.rows[r]
        if _row_deadline(row) > task.window.start:
            return False
        return not any(
            s.task_id is not None and self.graph.parallel(s.task_id, task.id) for s in row
        )

    def _new_row(self, task: Task):
        if len(self.rows) >= self.nt:
            raise SystemUnsuitableError(
                f"grid needs more than {self.nt} rows; the robotic system is not suitable "
                f"to perform the tasks"
            )
        row = []
        a = self.origin
        if a is not None and a < task.window.start:
            row.append(GridSlot(TimeWindow(a, task.window.start)))
        row.append(GridSlot(task.window, task.id))
        self.rows.append(row)

    def place_group(self, group: Sequence[Task]):
        used = set()
        for task in group:
            order = sorted(range(len(self.rows)), key=lambda r: (_row_deadline(self.rows[r]), r))
            target = next((r for r in order if r not in used and self._fits(r, task)), None)
            if target is None:
                self._new_row(task)
                used.add(len(self.rows) - 1)
            else:
                self.rows[target].append(GridSlot(task.window, task.id))
                used.add(target)

    def place_backlog(self, task: Task):
        origin = self.origin
        w = task.window
        holes = []
        for r, row in enumerate(self.rows):
            for c, slot in enumerate(row):
                if slot.idle and slot.reserved_for is None and slot.window.contains(w):
                    if not any(
                        s.task_id is not None and self.graph.parallel(s.task_id, task.id)
                        for s in row
                    ):
                        holes.append((_row_load(row, origin), r, c))
        if holes:
            _, r, c = min(holes, key=lambda h: (h[0], h[1], h[2]))
            slot = self.rows[r][c]
            pieces = []
            if slot.window.start < w.start:
                pieces.append(GridSlot(TimeWindow(slot.window.start, w.start)))
            pieces.append(GridSlot(w, task.id))
            if w.finish < slot.window.finish:
                pieces.append(GridSlot(TimeWindow(w.finish, slot.window.finish)))
            self.rows[r][c : c + 1] = pieces
            return

        if origin is None:
            self._new_row(task)
            return
        origin = min(origin, w.start)
        loads = [_row_load(row, origin) for row in self.rows]
        new_load = w.finish - origin
        candidates = [r for r in range(len(self.rows)) if self._fits(r, task)]
        best = None
        if candidates:
            # the task goes to the least-loaded row, as in the balancing rule, but a new
            # row is only opened if it beats every existing-row placement on variance
            r = min(candidates, key=lambda r: (loads[r], r))
            lowest = min(_spread(loads[:c] + [new_load] + loads[c + 1 :]) for c in candidates)
            best = (r, lowest)
        if len(self.rows) < self.nt:
            opened = _spread(loads + [new_load])
            if best is None or opened < best[1]:
                self._new_row(task)
                return
        if best is None:
            raise SystemUnsuitableError(
                f"task {task.id} fits no row and the grid already has {self.nt} rows; "
                f"the robotic system is not suitable"
            )
        self.rows[best[0]].append(GridSlot(w, task.id))


def _first_position(row):
    return min(s.window.start for s in row if s.position_id is not None)


def _minimal_first(tasks):
    return sorted(tasks, key=lambda t: (t.window.start, t.window.finish, t.id))


def build_grid(
    batch: Iterable[Task],
    backlog: Iterable[Task] = (),
    nt: int = 1,
    *,
    capacities: Optional[Sequence[int]] = None,
    graph: Optional[TaskGraph] = None,
) -> Grid:
    """Arrange ``batch`` (related tasks) and then ``backlog`` into a grid of at most ``nt`` rows."""
    batch = list(batch)
    backlog = list(backlog)
    if not batch:
        raise ValueError("build_grid needs a non-empty batch")
    if capacities is not None:
        nt = sum(capacities)
    if graph is None:
        graph = TaskGraph(batch + backlog, allow_external=True)
    if capacities is not None:
        graph.check_remark2(capacities)

    builder = _Builder(graph, nt)
    remaining = _minimal_first(batch)
    while remaining:
        head = remaining[0]
        partners = [t for t in remaining[1:] if graph.parallel(head.id, t.id)]
        partners.sort(key=lambda t: (t.window.finish, t.window.start, t.id))
        group = [head] + partners
        builder.place_group(group)
        taken = {t.id for t in group}
        remaining = [t for t in remaining if t.id not in taken]

    def size(t):
        return t.window.length

    for task in sorted(backlog, key=lambda t: (-size(t), t.window.start, t.id)):
        builder.place_backlog(task)

    rows = sorted(
        (tuple(row) for row in builder.rows),
        key=lambda row: (_first_position(row), _row_deadline(row)),
    )
    g = Grid(tuple(rows), TimeWindow(0), next(_creation))
    g = replace(g, window=grid_window(g))
    if not divisibility_ok(g.k, nt):
        log.warning(
            "grid has %d rows but there are %d streams; %d streams are always idle",
            g.k,
            nt,
            nt % g.k,
        )
    return g
