import pytest

from bindeblur.reconstruction import BandPolicy, BandShape
from bindeblur.trials import (TABLE_COLUMNS, TrialSpec, format_table, run_trial, run_trials,
                              thread_count, trial_seeds)

RECT = BandPolicy(BandShape.FOUR_COEFFICIENT)


def test_trial_seeds_are_stable_and_distinct():
    assert trial_seeds(0, 0) == trial_seeds(0, 0)
    seeds = {trial_seeds(0, i) for i in range(100)}
    assert len(seeds) == 100
    assert trial_seeds(1, 0) != trial_seeds(0, 0)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("BINDEBLUR_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("BINDEBLUR_THREADS", "zero")
    assert thread_count() == 1
    monkeypatch.delenv("BINDEBLUR_THREADS")
    assert thread_count() == 1


def test_spec_validation():
    with pytest.raises(ValueError):
        TrialSpec((3, 5), RECT, 7, 0)
    with pytest.raises(ValueError):
        TrialSpec((3, 5), RECT, 7, 1, noise_variance=-1)
    with pytest.raises(ValueError):
        TrialSpec((7, 11), RECT, 38, 1, oracle=True)


def test_summary_with_oracle():
    summary = run_trials(TrialSpec((3, 5), RECT, 7, 8, seed=4, oracle=True))
    assert summary.success_rate == 100.0 and summary.wrong_matrices == 0
    assert summary.oracle_agreement == 100.0 and not summary.failures()


def test_threads_do_not_change_results():
    spec = TrialSpec((17, 17), BandPolicy(BandShape.SQUARE, 4), 144, 4, seed=2)
    one = run_trials(spec, threads=1)
    many = run_trials(spec, threads=3)
    key = lambda s: [(r.index, r.model_seed, r.status, r.exact) for r in s.results]
    assert key(one) == key(many)


def test_single_trial_is_reproducible():
    spec = TrialSpec((3, 5), RECT, 7, 3, seed=9)
    a, b = run_trial(spec, 1), run_trial(spec, 1)
    assert (a.model_seed, a.status, a.exact) == (b.model_seed, b.status, b.exact)


def test_table_format():
    summary = run_trials(TrialSpec((3, 5), RECT, 7, 2, noise_variance=1e-8))
    text = format_table([summary])
    header, row = text.splitlines()
    assert tuple(header.split("\t")) == TABLE_COLUMNS
    cells = row.split("\t")
    assert cells[:6] == ["3", "5", "rect4", "7", "2", "1e-08"]
    assert cells[-1] == "-"
