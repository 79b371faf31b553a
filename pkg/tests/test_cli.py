import os

import pytest

from twsched.cli import build_parser, config_from_args, main
from twsched.baselines import Policy
from twsched.simulator import ALL_POLICIES, FixedArrivals, PoissonArrivals


def cfg(*argv):
    return config_from_args(build_parser().parse_args(list(argv)))


def test_fig123_preset():
    c = cfg("--preset", "fig1-2-3", "--seed", "42")
    assert c.machines == 4 and c.seed == 42
    assert c.arrival == FixedArrivals(tuple(range(1, 21)))
    assert c.policies == ALL_POLICIES and c.replications == 1000


def test_fig4567_preset():
    c = cfg("--preset", "fig4-5-6-7")
    assert c.arrival == PoissonArrivals(7, 101)
    assert (c.replications, c.runs) == (50, 20)


def test_fig8_preset():
    c = cfg("--preset", "fig8")
    assert c.arrival == FixedArrivals(tuple(range(1, 102))) and c.replications == 200


def test_overrides():
    c = cfg("--preset", "custom", "--n-range", "3,5", "--exec-times", "1,2.5", "--policies", "ours,fifo")
    assert c.arrival == FixedArrivals((3, 5))
    assert c.exec_time_values == (1, 2.5)
    assert c.policies == (Policy.OURS, Policy.FIFO)
    c = cfg("--preset", "custom", "--lambda", "3", "--steps", "9", "--runs", "2")
    assert c.arrival == PoissonArrivals(3, 9) and c.runs == 2


def test_env_seed(monkeypatch):
    monkeypatch.setenv("TWSCHED_SEED", "77")
    assert cfg("--preset", "fig8").seed == 77
    assert cfg("--preset", "fig8", "--seed", "5").seed == 5
    monkeypatch.setenv("TWSCHED_SEED", "nope")
    assert main(["--preset", "fig8", "--out-dir", "unused"]) == 2


def test_no_args(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv, flag",
    [
        (["--preset", "fig8", "--bogus"], "unrecognized"),
        (["--preset", "fig8", "--machines", "x"], "--machines"),
        (["--preset", "fig8", "--n-range", "a..b"], "--n-range"),
        (["--preset", "fig8", "--policies", "ours,coin"], "--policies"),
        (["--preset", "fig8", "--exec-times", "1,-2"], "--exec-times"),
        (["--preset", "fig1-2-3", "--lambda", "3"], "--lambda"),
        (["--preset", "fig4-5-6-7", "--n-range", "1..3"], "--n-range"),
    ],
)
def test_bad_values(argv, flag, capsys, tmp_path):
    assert main(argv + ["--out-dir", str(tmp_path / "o")]) == 2
    assert flag in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_empty_policies_write_nothing(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["--preset", "fig1-2-3", "--policies", "", "--out-dir", str(out)]) == 2
    assert "policy" in capsys.readouterr().err
    assert not out.exists()


@pytest.mark.parametrize(
    "preset, extra, plots",
    [
        ("fig1-2-3", ["--reps", "3"], ["fig1_makespan.svg", "fig2_greedy_minus_ours.svg", "fig3_tcd.svg"]),
        (
            "fig4-5-6-7",
            ["--reps", "2", "--runs", "2", "--steps", "5"],
            [
                "fig4_makespan_per_experiment.svg",
                "fig5_run_mean_makespan.svg",
                "fig6_greedy_minus_ours.svg",
                "fig7_run_mean_tcd.svg",
            ],
        ),
        ("fig8", ["--reps", "2", "--n-range", "1..6"], ["fig8_makespan_minus_ours.svg", "fig8_tcd.svg"]),
    ],
)
def test_outputs(preset, extra, plots, tmp_path):
    out = tmp_path / "o"
    assert main(["--preset", preset, "--seed", "1", "--out-dir", str(out)] + extra) == 0
    assert sorted(os.listdir(out)) == sorted(["results.csv", "aggregate.csv"] + plots)
    for name in plots:
        text = (out / name).read_text()
        assert text.startswith("<svg") and "<polyline" in text and "href" not in text


def test_byte_identical_results(tmp_path):
    for d in ("a", "b"):
        assert main(["--preset", "fig1-2-3", "--reps", "5", "--seed", "9", "--out-dir", str(tmp_path / d)]) == 0
    assert (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()


def test_unwritable_dir(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["--preset", "fig8", "--reps", "1", "--n-range", "1", "--out-dir", str(blocker / "sub")]) == 1
    assert str(blocker / "sub") in capsys.readouterr().err
