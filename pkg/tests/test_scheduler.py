import random
from fractions import Fraction

import pytest

from twsched.balancing import balance_allocate
from twsched.errors import ConfigurationError, IncompatibleSystemError, SystemUnsuitableError
from twsched.scheduler import (
    QueueEntry,
    ScheduleState,
    Stream,
    allocate_task,
    finishing_times,
    time_frame,
)
from twsched.task_graph import ExecutionProfile, Task
from twsched.time_windows import TimeWindow as W

from helpers import ROBOTS, check_schedule, random_task_set

VALUES = (10, 12, 13, 15, 20, 32, 40)


def single_stream_state(m, profile=None):
    return ScheduleState([(f"m{i}", 1) for i in range(m)], profile or ExecutionProfile())


class TestTimeFrame:
    def test_cumulative(self):
        s = Stream("r", 0)
        s.append_task("a", 10)
        s.append_task("b", 20)
        profile = ExecutionProfile({"a": 10, "b": 20})
        assert time_frame(s, profile) == [(0, 10), (10, 30)]
        assert s.frames() == [(0, 10), (10, 30)]

    def test_empty(self):
        assert time_frame(Stream("r", 0), ExecutionProfile()) == []

    def test_idle_only_collapses(self):
        s = Stream("r", 0)
        s.queue.append(QueueEntry(None, Fraction(0)))
        assert time_frame(s, ExecutionProfile()) == []

    def test_wait_keeps_its_length(self):
        s = Stream("r", 0)
        s.insert("a", 5, 3)
        assert s.queue == [QueueEntry(None, 5), QueueEntry("a", 3)]
        assert time_frame(s, ExecutionProfile({"a": 3})) == [(0, 5), (5, 8)]

    def test_insert_into_wait(self):
        s = Stream("r", 0)
        s.insert("a", 10, 2)
        s.insert("b", 3, 4)
        assert [e.task_id for e in s.queue] == [None, "b", None, "a"]
        assert s.finishing_time == 12
        with pytest.raises(ValueError):
            s.insert("c", 5, 1)


class TestAllocate:
    def test_branch1_fills_padding_hole(self):
        profile = ExecutionProfile({"A": 5, "B": 4, "X": 3})
        state = ScheduleState([("r0", 2)], profile)
        state.submit([Task("A", W(0, 12), {"B": None}), Task("B", W(10, 20))])
        assert len(state.active) == 1
        rep = allocate_task(state, Task("X"), W(2, 8))
        assert rep.branch == 1
        assert len(state.active) == 1
        p = state.placements["X"]
        assert p.stream_index == state.placements["B"].stream_index
        assert (p.start, p.end) == (2, 5)

    def test_branch2_picks_min_finishing_stream(self):
        state = single_stream_state(4, ExecutionProfile({"t": 2}))
        for i, f in enumerate((7, 3, 9, 1)):
            state.robots[i].streams[0].append_task(f"pre{i}", f)
        rep = allocate_task(state, Task("t"), W(0, 5))
        assert rep.branch == 2
        assert rep.placement.robot_id == "m3"
        assert rep.steps[0].stream == (3, 0)
        assert rep.delta == 1 and rep.placement.start == 1

    def test_finishing_time_ties_go_to_lowest_stream(self):
        state = ScheduleState([("a", 2), ("b", 1)], ExecutionProfile({"t": 1}))
        rep = allocate_task(state, Task("t"), W(0))
        assert rep.steps[0].stream == (0, 0)

    def test_equals_pair_needs_larger_robot(self):
        tasks = [Task("A", W(0, 5), {"B": None}), Task("B", W(0, 5))]
        profile = ExecutionProfile({"A": 5, "B": 5})
        with pytest.raises(IncompatibleSystemError, match="not compatible"):
            ScheduleState([("r0", 2)], profile).submit(tasks)
        state = ScheduleState([("r0", 2), ("r1", 3)], profile)
        state.submit(tasks)
        assert {p.robot_id for p in state.placements.values()} == {"r1"}

    def test_too_many_rows(self):
        tasks = [
            Task("A", W(0, 5), {"B": None, "C": None}),
            Task("B", W(1, 6), {"C": None}),
            Task("C", W(2, 7)),
        ]
        state = ScheduleState([("r0", 1), ("r1", 1)], ExecutionProfile({"A": 1, "B": 1, "C": 1}))
        with pytest.raises(SystemUnsuitableError):
            state.submit(tasks)

    def test_exec_longer_than_window(self):
        state = single_stream_state(1, ExecutionProfile({"a": 9}))
        with pytest.raises(ConfigurationError):
            state.submit([Task("a", W(0, 5))])

    def test_duplicate_submission(self):
        state = single_stream_state(1, ExecutionProfile({"a": 1}))
        state.submit([Task("a")])
        with pytest.raises(ConfigurationError):
            state.allocate_task(Task("a"))

    def test_relations_survive_busy_streams(self):
        profile = ExecutionProfile({"A": 3, "B": 3, "pre": 7})
        state = ScheduleState([("r0", 1), ("r1", 1)], profile)
        state.stream((0, 0)).append_task("pre", 7)
        state.submit([Task("A", W(0, 5), {"B": None}), Task("B", W(3, 8))])
        pa, pb = state.placements["A"], state.placements["B"]
        # both rows move by the same delay, so the overlap is kept
        assert pb.start - pa.start == 3
        assert (pa.robot_id, pb.robot_id) == ("r1", "r0")
        assert pb.start >= 7


class TestFinishingTimes:
    def test_fresh(self):
        assert finishing_times(single_stream_state(4)) == (0, 0, 0, 0)

    def test_matches_balancing(self):
        profile = ExecutionProfile({f"t{i}": v for i, v in enumerate(VALUES)})
        state = single_stream_state(4, profile)
        state.submit([Task(f"t{i}") for i in range(len(VALUES))])
        assert finishing_times(state) == (40, 32, 32, 38)
        state.stream((1, 0)).append_task("extra", 5)
        assert finishing_times(state) == (40, 37, 32, 38)

    @pytest.mark.parametrize("seed", range(20))
    def test_unrelated_batches_reduce_to_balancing(self, seed):
        rng = random.Random(seed)
        m = rng.randint(1, 5)
        profile = ExecutionProfile()
        state = single_stream_state(m, profile)
        loads = None
        for batch_no in range(3):
            items = [rng.choice(VALUES) for _ in range(rng.randint(0, 9))]
            tasks = []
            for i, v in enumerate(items):
                tid = f"b{batch_no}_{i}"
                profile.set(tid, v)
                tasks.append(Task(tid))
            state.submit(tasks)
            loads = balance_allocate(items, m, loads).resulting_loads if items else loads
            if loads is not None:
                assert finishing_times(state) == tuple(loads)


def test_dump_golden():
    profile = ExecutionProfile({"a": 10, "b": 12, "c": 13, "d": 15, "e": 20})
    state = ScheduleState([("r0", 2), ("r1", 1)], profile)
    state.submit([Task(x) for x in "abcde"])
    assert state.dump() == (
        "robot=r0 stream=0 tasks=e finish=20\n"
        "robot=r0 stream=1 tasks=d:a finish=25\n"
        "robot=r1 stream=0 tasks=c:b finish=25\n"
    )


def test_sts_idle_suffix():
    profile = ExecutionProfile({"a": 1, "b": 1, "c": 1})
    state = ScheduleState([("r0", 2)], profile)
    state.submit([Task("a"), Task("b"), Task("c")])
    assert state.mnst() == 2
    assert state.sts() == {"r0": [("a", "c"), ("b", None)]}


def test_clock_retires_expired_grids():
    profile = ExecutionProfile({"A": 2, "B": 2})
    state = ScheduleState([("r0", 2)], profile)
    state.submit([Task("A", W(0, 12), {"B": None}), Task("B", W(10, 20))])
    assert state.active
    state.advance(25)
    assert not state.active
    with pytest.raises(ValueError):
        state.advance(3)


@pytest.mark.parametrize("seed", range(60))
def test_randomised_schedules(seed):
    rng = random.Random(seed)
    tasks, profile = random_task_set(rng)
    state = ScheduleState(ROBOTS, profile)
    try:
        reports = state.submit(tasks)
    except (SystemUnsuitableError, IncompatibleSystemError):
        pytest.skip("system cannot take this set")
    check_schedule(state, tasks, reports)
