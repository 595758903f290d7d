import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acrgnav.metrics import (EpisodeTrace, EvalReport, filter_min_optimal,
                             load_traces, save_traces, spl, success_rate)


def make_trace(success, length, optimal, layout="room_0", target=0):
    actions = [0] * (length - 1) + [5]
    rewards = [-0.01] * (length - 1) + [(5.0 - 0.01) if success else -0.01]
    return EpisodeTrace(layout, target, (1, 1, 0, 1), actions, rewards,
                        success, optimal)


def test_success_rate_direct_formula():
    traces = [make_trace(s, 4, 2) for s in (1, 0, 1, 1)]
    assert success_rate(traces) == 0.75


def test_success_rate_all_failures():
    assert success_rate([make_trace(0, 4, 2)] * 5) == 0.0


def test_success_rate_rejects_empty():
    with pytest.raises(ValueError):
        success_rate([])


def test_spl_worked_example():
    # one success with optimal 4 and realized 8 gives exactly 0.5
    assert spl([make_trace(1, 8, 4)]) == 0.5


def test_spl_optimal_agent_equals_success_rate():
    traces = [make_trace(1, 3, 3), make_trace(1, 7, 7), make_trace(0, 10, 4)]
    assert spl(traces) == pytest.approx(success_rate(traces))


def test_spl_missing_optimal_on_success_rejected():
    bad = make_trace(1, 4, None)
    with pytest.raises(ValueError):
        spl([bad])


def test_filter_keeps_boundary():
    traces = [make_trace(1, 5, o) for o in (3, 5, 9)]
    kept = filter_min_optimal(traces, 5)
    assert [t.optimal_length for t in kept] == [5, 9]


def test_filter_empty_result_allowed():
    assert filter_min_optimal([make_trace(1, 3, 2)], 5) == []


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(1, 50),
                          st.integers(1, 30)), min_size=1, max_size=40))
def test_metric_bounds_and_brute_force(rows):
    traces = [make_trace(s, ln, opt) for s, ln, opt in rows]
    sr = success_rate(traces)
    value = spl(traces)
    # brute force recomputation
    brute = sum(s * opt / max(ln, opt) for s, ln, opt in rows) / len(rows)
    assert abs(value - brute) < 1e-12
    assert 0.0 <= value <= sr <= 1.0
    for s, ln, opt in rows:
        assert s * opt / max(ln, opt) <= s  # per-episode term bounded by S_n


def test_round_trip_through_log_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    traces = [make_trace(int(rng.integers(2)), int(rng.integers(1, 50)),
                         int(rng.integers(1, 20)), layout=f"L{i % 3}",
                         target=int(rng.integers(4)))
              for i in range(50)]
    path = tmp_path / "traces.jsonl"
    save_traces(path, traces)
    loaded = load_traces(path)
    assert success_rate(loaded) == success_rate(traces)
    assert spl(loaded) == spl(traces)
    for a, b in zip(traces, loaded):
        assert a == b


def test_eval_report_aggregates_and_subset():
    traces = [make_trace(1, 6, 6), make_trace(0, 50, 8), make_trace(1, 4, 2)]
    report = EvalReport(traces, excluded_unreachable=1,
                        config_fingerprint="abc", seed=7)
    assert report.success == pytest.approx(2 / 3)
    hard = filter_min_optimal(traces)
    assert report.hard_count == len(hard) == 2
    assert report.hard_success == pytest.approx(0.5)
    s = report.summary()
    assert s["excluded_unreachable"] == 1
    assert s["config_fingerprint"] == "abc"


def test_report_save_and_recompute(tmp_path):
    traces = [make_trace(1, 8, 4), make_trace(0, 50, 12)]
    report = EvalReport(traces, 0, "fp", 3)
    report.save(tmp_path, label="eval")
    loaded = load_traces(tmp_path / "eval_traces.jsonl")
    assert success_rate(loaded) == report.success
    assert spl(loaded) == report.spl_value
