"""Robots, streams and dynamic allocation of new tasks onto streams.

A new task either fills a ForcedIdle hole of an active grid (its own reserved
slot, or any free hole when the task has no relations), or the task's grid is
masked down to that task and laid onto the streams with the smallest
finishing times.  Every row of a laid grid is shifted by one common delay so
the relative timing of related tasks is kept.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from .errors import ConfigurationError, IncompatibleSystemError, SystemUnsuitableError
from .grid import Grid, acceptable_slots, build_grid, compute_mnst, divisibility_ok, mask
from .task_graph import ExecutionProfile, Task, TaskGraph, system_compatible
from .time_windows import TimeWindow, as_time, format_time

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QueueEntry:
    task_id: Optional[str]  # None is a ForcedIdle wait
    duration: Fraction


class Stream:
    def __init__(self, robot_id: str, index: int):
        self.robot_id = robot_id
        self.index = index
        self.queue: list = []

    def frames(self) -> list:
        t = Fraction(0)
        out = []
        for e in self.queue:
            out.append((t, t + e.duration))
            t += e.duration
        return out

    @property
    def finishing_time(self) -> Fraction:
        # trailing waits are never stored, so the last entry is a task
        return sum((e.duration for e in self.queue), Fraction(0))

    def task_ids(self) -> list:
        return [e.task_id for e in self.queue if e.task_id is not None]

    def _slot_for(self, start, duration):
        if start >= self.finishing_time:
            return len(self.queue)
        for i, (entry, (s, f)) in enumerate(zip(self.queue, self.frames())):
            if entry.task_id is None and s <= start and start + duration <= f:
                return i
        return None

    def is_free(self, start, duration) -> bool:
        return self._slot_for(start, duration) is not None

    def insert(self, task_id: str, start, duration):
        start, duration = as_time(start), as_time(duration)
        i = self._slot_for(start, duration)
        if i is None:
            raise ValueError(f"stream {self.robot_id}/{self.index} is busy at {start}")
        if i == len(self.queue):
            gap = start - self.finishing_time
            if gap:
                self.queue.append(QueueEntry(None, gap))
            self.queue.append(QueueEntry(task_id, duration))
            return
        s, f = self.frames()[i]
        pieces = []
        if start > s:
            pieces.append(QueueEntry(None, start - s))
        pieces.append(QueueEntry(task_id, duration))
        if start + duration < f:
            pieces.append(QueueEntry(None, f - start - duration))
        self.queue[i : i + 1] = pieces

    def append_task(self, task_id: str, duration):
        self.insert(task_id, self.finishing_time, duration)


def time_frame(stream: Stream, profile: ExecutionProfile, robot_id=None) -> list:
    """Cumulative ``(start, end)`` per queue entry; waits count their own length."""
    robot_id = stream.robot_id if robot_id is None else robot_id
    t = Fraction(0)
    out = []
    for e in stream.queue:
        d = e.duration if e.task_id is None else profile.exec_time(e.task_id, robot_id)
        if e.task_id is None and d == 0:
            continue
        out.append((t, t + d))
        t += d
    return out


@dataclass
class Robot:
    id: str
    capacity: int
    streams: list = field(default_factory=list)

    def __post_init__(self):
        if self.capacity < 1:
            raise ConfigurationError(f"robot {self.id} needs at least one stream")
        if not self.streams:
            self.streams = [Stream(self.id, j) for j in range(self.capacity)]


@dataclass
class ActiveGrid:
    grid: Grid
    delta: Fraction
    row_streams: list  # (robot index, stream index) per row
    order: int


@dataclass(frozen=True)
class Placement:
    task_id: str
    robot_id: str
    stream_index: int
    start: Fraction
    end: Fraction
    reserved: TimeWindow  # the task's window in its grid, shifted by the grid delay
    grid_order: int
    branch: int


@dataclass(frozen=True)
class AssignmentStep:
    row: int
    stream: tuple  # (robot index, stream index)
    candidates: tuple  # streams the choice was made among
    finishing: dict  # snapshot of finishing times before the allocation


@dataclass(frozen=True)
class PlacementReport:
    placement: Placement
    branch: int
    steps: tuple = ()
    delta: Fraction = Fraction(0)


class ScheduleState:
    def __init__(self, robots, profile: Optional[ExecutionProfile] = None, clock=0):
        self.robots = []
        for r in robots:
            if isinstance(r, Robot):
                self.robots.append(r)
            else:
                rid, cap = r
                self.robots.append(Robot(rid, cap))
        if not self.robots:
            raise ConfigurationError("a schedule needs at least one robot")
        if len({r.id for r in self.robots}) != len(self.robots):
            raise ConfigurationError("duplicate robot ids")
        self.profile = profile if profile is not None else ExecutionProfile()
        self.clock = as_time(clock)
        self.active: list = []
        self.placements: dict = {}
        self.templates: dict = {}
        self._graphs: dict = {}
        self._order = itertools.count()

    @property
    def nt(self) -> int:
        return sum(r.capacity for r in self.robots)

    @property
    def capacities(self) -> list:
        return [r.capacity for r in self.robots]

    def stream(self, key) -> Stream:
        ri, si = key
        return self.robots[ri].streams[si]

    def stream_keys(self) -> list:
        return [(ri, si) for ri, r in enumerate(self.robots) for si in range(r.capacity)]

    def finishing_times(self) -> tuple:
        return tuple(self.stream(k).finishing_time for k in self.stream_keys())

    def advance(self, clock):
        clock = as_time(clock)
        if clock < self.clock:
            raise ValueError("clock cannot move backwards")
        self.clock = clock
        self._retire()

    def _retire(self):
        keep = []
        for ag in self.active:
            has_hole = any(s.idle for _, _, s in ag.grid.slots())
            expired = ag.grid.window.finish + ag.delta <= self.clock
            if has_hole and not expired:
                keep.append(ag)
        self.active = keep

    def _check_exec(self, task: Task):
        for robot in self.robots:
            te = self.profile.exec_time(task.id, robot.id)
            if task.window.bounded and te > task.window.length:
                raise ConfigurationError(
                    f"task {task.id} takes {te}s on {robot.id} but its window {task.window} "
                    f"is shorter"
                )

    def submit(self, tasks: Iterable[Task]) -> list:
        """Allocate a batch: related groups first, then unrelated tasks largest first."""
        tasks = list(tasks)
        for t in tasks:
            if t.id in self.placements:
                raise ConfigurationError(f"task {t.id} is already scheduled")
        graph = TaskGraph(tasks)
        graph.check_remark2(self.capacities)
        for t in tasks:
            self._check_exec(t)
            self._graphs[t.id] = graph
        reports = []
        singles = []
        for comp in graph.components():
            if len(comp) == 1 and not graph.constrained(comp[0].id):
                singles.append(comp[0])
                continue
            template = build_grid(comp, (), self.nt, graph=graph)
            for t in comp:
                self.templates[t.id] = template
            for t in comp:
                reports.append(self.allocate_task(t))
        robot_ids = [r.id for r in self.robots]
        position = {t.id: i for i, t in enumerate(tasks)}
        singles.sort(key=lambda t: (-self.profile.mean_exec_time(t.id, robot_ids), position[t.id]))
        for t in singles:
            reports.append(self.allocate_task(t))
        return reports

    def allocate_task(self, t: Task, window: Optional[TimeWindow] = None) -> PlacementReport:
        if t.id in self.placements:
            raise ConfigurationError(f"task {t.id} is already scheduled")
        if window is not None and window != t.window:
            t = Task(t.id, window, t.constraints)
        graph = self._graphs.get(t.id)
        if graph is None:
            graph = TaskGraph([t], allow_external=True)
            self._graphs[t.id] = graph
            self._check_exec(t)
        cls = graph.equal_class(t.id)
        if len(cls) > 1 and not system_compatible(self.capacities, len(cls)):
            raise IncompatibleSystemError(
                f"system is not compatible to perform the tasks: Equals-class of {t.id} has "
                f"{len(cls)} members"
            )
        report = self._try_fill(t, graph)
        if report is None:
            report = self._lay_masked(t, graph)
        self._retire()
        return report

    def _try_fill(self, t: Task, graph: TaskGraph) -> Optional[PlacementReport]:
        free = not graph.constrained(t.id)
        ranked = sorted(self.active, key=lambda ag: (ag.grid.window.start, ag.grid.creation_index, ag.order))
        for ag in ranked:
            for r, key in enumerate(ag.row_streams):
                robot = self.robots[key[0]]
                w = t.window.shifted(self.profile.offset(t.id, robot.id))
                for rr, c in acceptable_slots(ag.grid, t, w, free=free):
                    if rr != r:
                        continue
                    start = w.start + ag.delta
                    te = self.profile.exec_time(t.id, robot.id)
                    stream = self.stream(key)
                    if start < self.clock or not stream.is_free(start, te):
                        continue
                    ag.grid = ag.grid.fill(r, c, t.id, w)
                    stream.insert(t.id, start, te)
                    placement = Placement(
                        t.id, robot.id, key[1], start, start + te, w.shifted(ag.delta), ag.order, 1
                    )
                    self.placements[t.id] = placement
                    return PlacementReport(placement, 1, (), ag.delta)
        return None

    def _row_groups(self, g: Grid, graph: TaskGraph) -> tuple:
        """Rows that must share a robot because they hold one Equals-class, and the class sizes."""
        parent = list(range(g.k))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        rows_of = {}
        for r, _, slot in g.slots():
            if slot.position_id is not None:
                rows_of[slot.position_id] = r
        need = [1] * g.k
        for tid, r in rows_of.items():
            if tid not in graph.tasks:
                continue
            cls = graph.equal_class(tid)
            if len(cls) < 2:
                continue
            for other in cls:
                if other in rows_of:
                    a, b = find(r), find(rows_of[other])
                    if a != b:
                        parent[max(a, b)] = min(a, b)
        groups = {}
        for r in range(g.k):
            groups.setdefault(find(r), []).append(r)
        for tid, r in rows_of.items():
            if tid in graph.tasks:
                root = find(r)
                need[root] = max(need[root], len(graph.equal_class(tid)))
        return {r: groups[find(r)] for r in range(g.k)}, {r: need[find(r)] for r in range(g.k)}

    def _lay_masked(self, t: Task, graph: TaskGraph) -> PlacementReport:
        template = self.templates.get(t.id)
        if template is None:
            template = build_grid([t], (), self.nt, graph=graph)
            self.templates[t.id] = template
        if template.k > self.nt:
            raise SystemUnsuitableError(f"grid of {t.id} needs {template.k} streams, only {self.nt} exist")
        if not divisibility_ok(template.k, self.nt):
            log.debug("grid of %s: %d rows over %d streams", t.id, template.k, self.nt)
        g = mask(template, t.id)

        def busy(row):
            return sum((s.window.length for s in row if not s.idle), Fraction(0))

        def first(row):
            starts = [s.window.start for s in row if s.position_id is not None]
            return min(starts) if starts else row[0].window.start

        # smallness is judged on the unmasked shape; masking would make every other row look empty
        order = sorted(
            range(g.k), key=lambda r: (first(template.rows[r]), busy(template.rows[r]), r)
        )
        groups, need = self._row_groups(template, graph)
        fin = {k: self.stream(k).finishing_time for k in self.stream_keys()}
        unused = set(fin)
        assigned = {}
        steps = []
        for r in order:
            if r in assigned:
                continue
            group = groups[r]
            if len(group) == 1 and need[r] < 2:
                cands = tuple(sorted(unused))
                key = min(cands, key=lambda k: (fin[k], k))
                assigned[r] = key
                unused.discard(key)
                steps.append(AssignmentStep(r, key, cands, fin))
                continue
            eligible = []
            for ri, robot in enumerate(self.robots):
                free_here = sorted((k for k in unused if k[0] == ri), key=lambda k: (fin[k], k))
                if robot.capacity > need[r] and len(free_here) >= len(group):
                    eligible.append((fin[free_here[0]], ri, free_here))
            if not eligible:
                raise IncompatibleSystemError(
                    f"no robot has {len(group)} free streams and more than {need[r]} streams "
                    f"for the Equals-class rows of {t.id}'s grid"
                )
            _, ri, free_here = min(eligible, key=lambda e: (e[0], e[1]))
            for row in sorted(group, key=order.index):
                cands = tuple(k for k in free_here if k in unused)
                key = min(cands, key=lambda k: (fin[k], k))
                assigned[row] = key
                unused.discard(key)
                steps.append(AssignmentStep(row, key, cands, fin))

        row_start = {r: first(template.rows[r]) for r in range(template.k)}
        pos = g.position_of(t.id)
        robot = self.robots[assigned[pos[0]][0]]
        delta = max(
            [Fraction(0), self.profile.offset(t.id, robot.id), self.clock - min(row_start.values())]
            + [fin[assigned[r]] - row_start[r] for r in range(template.k)]
        )
        slot = g.rows[pos[0]][pos[1]]
        te = self.profile.exec_time(t.id, robot.id)
        start = slot.window.start + delta
        key = assigned[pos[0]]
        self.stream(key).insert(t.id, start, te)
        ag = ActiveGrid(g, delta, [assigned[r] for r in range(g.k)], next(self._order))
        self.active.append(ag)
        placement = Placement(t.id, robot.id, key[1], start, start + te, slot.window.shifted(delta), ag.order, 2)
        self.placements[t.id] = placement
        return PlacementReport(placement, 2, tuple(steps), delta)

    def sts(self) -> dict:
        """Per robot, per stream: scheduled task ids padded with ``None`` (Idle) to MNST."""
        lists = {r.id: [s.task_ids() for s in r.streams] for r in self.robots}
        width = compute_mnst(s for streams in lists.values() for s in streams)
        return {
            rid: [tuple(s) + (None,) * (width - len(s)) for s in streams]
            for rid, streams in lists.items()
        }

    def mnst(self) -> int:
        return compute_mnst(self.stream(k).task_ids() for k in self.stream_keys())

    def dump(self) -> str:
        lines = []
        for r in self.robots:
            for s in r.streams:
                lines.append(
                    f"robot={r.id} stream={s.index} tasks={':'.join(s.task_ids())} "
                    f"finish={format_time(s.finishing_time)}"
                )
        return "\n".join(lines) + "\n"


def finishing_times(state: ScheduleState) -> tuple:
    return state.finishing_times()


def allocate_task(state: ScheduleState, t: Task, window: Optional[TimeWindow] = None) -> PlacementReport:
    return state.allocate_task(t, window)
