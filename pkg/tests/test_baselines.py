import numpy as np
import pytest
from hypothesis import given, strategies as st

from twsched.baselines import Policy, assign_fifo, assign_greedy, assign_random
from twsched.errors import ConfigurationError

items_st = st.lists(st.sampled_from([10, 12, 13, 15, 20, 32, 40]), max_size=30)


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


class TestRandom:
    def test_single_machine(self):
        a = assign_random([10, 12, 13], 1, rng())
        assert a.place_of == (0, 0, 0) and a.resulting_loads == (35,)

    @given(items_st, st.integers(1, 6), st.integers(0, 2**32))
    def test_range_and_work(self, items, m, seed):
        a = assign_random(items, m, rng(seed))
        assert all(0 <= p < m for p in a.place_of)
        assert sum(a.resulting_loads) == sum(items)

    def test_seeded(self):
        items = [10] * 50
        assert assign_random(items, 4, rng(7)) == assign_random(items, 4, rng(7))
        assert assign_random(items, 4, rng(7)) != assign_random(items, 4, rng(8))

    def test_roughly_uniform(self):
        a = assign_random([1] * 40000, 4, rng(3))
        assert all(abs(x - 10000) < 400 for x in a.resulting_loads)


class TestFifo:
    def test_cyclic_from_cursor(self):
        # machines 1,2,3,4,1 counted from one
        a, cursor = assign_fifo([10, 12, 13, 15, 20], 4, 0)
        assert a.place_of == (0, 1, 2, 3, 0)
        assert cursor == 1

    def test_empty_keeps_cursor(self):
        a, cursor = assign_fifo([], 4, 2)
        assert a.place_of == () and cursor == 2

    def test_one_each(self):
        a, _ = assign_fifo([10, 12, 13, 15], 4)
        assert a.resulting_loads == (10, 12, 13, 15)

    def test_bad_cursor(self):
        with pytest.raises(ConfigurationError):
            assign_fifo([1], 4, 4)


class TestGreedy:
    def test_one_per_machine(self):
        a, counts = assign_greedy([10, 12, 13, 15], 4)
        assert a.resulting_loads == (10, 12, 13, 15) and counts == (1, 1, 1, 1)

    def test_count_tie_goes_low(self):
        a, _ = assign_greedy([10, 12, 13, 15, 20], 4)
        assert a.resulting_loads == (30, 12, 13, 15)

    def test_single_machine(self):
        a, counts = assign_greedy([3, 4], 1)
        assert a.resulting_loads == (7,) and counts == (2,)

    def test_uses_counts_not_loads(self):
        a, _ = assign_greedy([5], 2, [3, 1])
        assert a.place_of == (1,)

    @given(items_st, st.integers(1, 6))
    def test_balanced_counts(self, items, m):
        a, counts = assign_greedy(items, m)
        assert max(counts) - min(counts) <= 1
        assert sum(a.resulting_loads) == sum(items)

    def test_length_mismatch(self):
        with pytest.raises(ConfigurationError):
            assign_greedy([1], 2, [0])


@pytest.mark.parametrize("m", [0, -1, 1.5])
def test_machine_count_checked(m):
    for call in (
        lambda: assign_random([1], m, rng()),
        lambda: assign_fifo([1], m),
        lambda: assign_greedy([1], m),
    ):
        with pytest.raises(ConfigurationError):
            call()


def test_policy_parse():
    assert Policy.parse(" Greedy") is Policy.GREEDY
    with pytest.raises(ConfigurationError, match="unknown policy"):
        Policy.parse("lottery")
