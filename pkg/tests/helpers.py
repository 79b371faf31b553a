"""Random consistent task sets and schedule invariant checks shared by tests."""

import random

from twsched.task_graph import ExecutionProfile, Task, TaskGraph
from twsched.time_windows import RelationKind, TimeWindow, classify

ROBOTS = [("r0", 4), ("r1", 3), ("r2", 2), ("r3", 1)]


def random_task_set(rng: random.Random, n_max=8, prefix="t"):
    """Tasks with integer windows; declared pairs carry their geometric relation."""
    n = rng.randint(1, n_max)
    tasks = []
    windows = {}
    for i in range(n):
        tid = f"{prefix}{i}"
        if tasks and rng.random() < 0.25:
            # clone an earlier window to seed Equals-classes
            windows[tid] = windows[rng.choice(list(windows))]
        else:
            a = rng.randint(0, 20)
            windows[tid] = TimeWindow(a, a + rng.randint(1, 8))
    constraints = {tid: {} for tid in windows}
    ids = list(windows)
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            same = windows[a] == windows[b]
            if rng.random() < (0.6 if same else 0.3):
                constraints[a][b] = classify(windows[a], windows[b]) if rng.random() < 0.5 else None
    for tid in ids:
        tasks.append(Task(tid, windows[tid], constraints[tid]))
    profile = ExecutionProfile(
        {tid: rng.randint(1, int(windows[tid].length)) for tid in ids}
    )
    return tasks, profile


def check_schedule(state, tasks, reports):
    """Assert every schedule invariant; returns the validated graph."""
    graph = TaskGraph(tasks)
    placements = state.placements
    assert set(placements) == {t.id for t in tasks}

    # every constrained pair keeps its relation on the reserved windows
    for a in graph.tasks:
        for b in graph.tasks:
            if a >= b:
                continue
            rel = graph.relation(a, b)
            if rel.kind is RelationKind.UNCONSTRAINED:
                continue
            assert classify(placements[a].reserved, placements[b].reserved) == rel, (a, b, rel)
            if graph.parallel(a, b):
                pa, pb = placements[a], placements[b]
                assert (pa.robot_id, pa.stream_index) != (pb.robot_id, pb.stream_index)

    for p in placements.values():
        assert p.start == p.reserved.start
        assert p.end <= p.reserved.finish

    # Equals-classes sit on one robot
    for cls in graph.classes.classes:
        assert len({placements[t].robot_id for t in cls}) == 1

    # queues: waits never trail, Idle padding only as a suffix
    for robot in state.robots:
        for stream in robot.streams:
            if stream.queue:
                assert stream.queue[-1].task_id is not None
            frames = stream.frames()
            for (s1, e1), (s2, e2) in zip(frames, frames[1:]):
                assert e1 == s2
            for entry, (s, e) in zip(stream.queue, frames):
                if entry.task_id is not None:
                    assert placements[entry.task_id].start == s
    for streams in state.sts().values():
        for row in streams:
            seen_idle = False
            for entry in row:
                if entry is None:
                    seen_idle = True
                else:
                    assert not seen_idle

    # every branch-2 step took a stream with minimal finishing time among its candidates
    for rep in reports:
        for step in rep.steps:
            fin = step.finishing
            assert step.stream in step.candidates
            assert fin[step.stream] == min(fin[c] for c in step.candidates)
            assert step.stream == min(step.candidates, key=lambda k: (fin[k], k))
    return graph
