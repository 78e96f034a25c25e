"""Sweep harness: determinism, aggregation, comparison, phase curves."""

from __future__ import annotations

import math
import os

import pytest

from deanon import (
    ExperimentConfig,
    compare_costs,
    expand_cells,
    phase_curve,
    run_experiment,
    trial_seed,
    wilson_interval,
    write_cells_csv,
    write_phase_csv,
    write_trials_csv,
)
from deanon.experiments import _threshold_markers


def tiny_config(**overrides) -> ExperimentConfig:
    base = dict(
        sizes=((3, 3),),
        p_values=(0.4,),
        q_values=(0.1,),
        s_values=(0.7,),
        trials=6,
        matcher="exact",
        variants=("weighted",),
        master_seed=11,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def record_key(r):
    # runtime is wall clock and excluded from reproducibility comparisons
    return (r.cell, r.trial, r.variant, r.seed, r.success, r.fraction_correct, r.tie)


def test_config_validation():
    with pytest.raises(ValueError):
        tiny_config(matcher="quantum")
    with pytest.raises(ValueError):
        tiny_config(variants=("weighted", "mystery"))
    with pytest.raises(ValueError):
        tiny_config(variants=())
    with pytest.raises(ValueError):
        tiny_config(trials=-1)
    with pytest.raises(ValueError):
        tiny_config(sizes=((2, 2, 2),))
    with pytest.raises(ValueError):
        tiny_config(sizes=((2, 2),), q_values=())


def test_config_from_json_defaults():
    cfg = ExperimentConfig.from_json(
        {"sizes": [[4]], "p": [0.3], "s": [0.5], "trials": 3}
    )
    assert cfg.matcher == "exact"
    assert cfg.variants == ("weighted",)
    assert cfg.master_seed == 0
    assert cfg.q_values == ()
    cells = expand_cells(cfg)
    assert len(cells) == 1 and cells[0].q is None
    assert cells[0].params().k == 1


def test_expand_cells_ordering():
    cfg = tiny_config(
        sizes=((4,), (3, 3)), p_values=(0.3, 0.4), q_values=(0.1, 0.2), s_values=(0.5,)
    )
    cells = expand_cells(cfg)
    # single-community rows ignore q entirely
    assert [(c.sizes, c.p, c.q) for c in cells] == [
        ((4,), 0.3, None),
        ((4,), 0.4, None),
        ((3, 3), 0.3, 0.1),
        ((3, 3), 0.3, 0.2),
        ((3, 3), 0.4, 0.1),
        ((3, 3), 0.4, 0.2),
    ]
    assert [c.index for c in cells] == list(range(6))
    assert cells[2].label() == "3+3"


def test_trial_seed_stability():
    assert trial_seed(1, 2, 3) == trial_seed(1, 2, 3)
    assert trial_seed(1, 2, 3) != trial_seed(1, 2, 4)
    assert trial_seed(1, 2, 3) != trial_seed(2, 2, 3)


def test_wilson_interval_frozen_values():
    lo, hi = wilson_interval(8, 10)
    assert lo == pytest.approx(0.4901624715366418, rel=1e-12)
    assert hi == pytest.approx(0.9433178485456248, rel=1e-12)
    lo0, hi0 = wilson_interval(0, 200)
    assert lo0 == 0.0
    assert hi0 == pytest.approx(0.018845326377266575, rel=1e-12)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_run_experiment_is_deterministic(tmp_path):
    cfg = tiny_config()
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert [record_key(r) for r in a.records] == [record_key(r) for r in b.records]
    assert a.cells == b.cells
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trials_csv(a, f1)
    write_trials_csv(b, f2)
    assert f1.read_bytes() == f2.read_bytes()
    c1, c2 = tmp_path / "a.cells.csv", tmp_path / "b.cells.csv"
    write_cells_csv(a, c1)
    write_cells_csv(b, c2)
    assert c1.read_bytes() == c2.read_bytes()
    first = f1.read_text().splitlines()
    assert first[0] == "# schema: deanon/trials/v1"
    assert first[1].startswith("cell,sizes,p,q,s,trial,seed,variant,success")
    assert len(first) == 2 + len(a.records)


def test_parallel_matches_serial(tmp_path):
    cfg = tiny_config(trials=4)
    serial = run_experiment(cfg)
    os.environ["DEANON_THREADS"] = "2"
    try:
        parallel = run_experiment(cfg)
    finally:
        del os.environ["DEANON_THREADS"]
    assert [record_key(r) for r in serial.records] == [
        record_key(r) for r in parallel.records
    ]
    f1, f2 = tmp_path / "s.csv", tmp_path / "p.csv"
    write_trials_csv(serial, f1)
    write_trials_csv(parallel, f2)
    assert f1.read_bytes() == f2.read_bytes()


def test_zero_trials_produces_headers_only(tmp_path):
    cfg = tiny_config(trials=0)
    result = run_experiment(cfg)
    assert result.records == ()
    assert all(c.trials == 0 for c in result.cells)
    out = tmp_path / "trials.csv"
    write_trials_csv(result, out)
    assert len(out.read_text().splitlines()) == 2


def test_bad_cells_are_reported_and_skipped():
    cfg = tiny_config(
        sizes=((3, 3), (30,)),  # second row blows the exact budget
        trials=2,
        max_matchings=10**6,
    )
    result = run_experiment(cfg)
    assert len(result.errors) == 1
    assert result.errors[0].stage == "setup"
    assert "budget" in result.errors[0].message
    good_cells = {r.cell for r in result.records}
    assert good_cells == {0}
    # strict regime violations are also per-cell errors, not crashes
    cfg2 = tiny_config(p_values=(0.4, 0.7), trials=1)
    result2 = run_experiment(cfg2)
    assert len(result2.errors) == 1
    assert {r.cell for r in result2.records} == {0}


def test_relaxed_cells_can_run_generation_only():
    cfg = tiny_config(
        p_values=(0.7,), variants=("unweighted",), allow_relaxed=True, trials=2
    )
    result = run_experiment(cfg)
    assert not result.errors
    assert len(result.records) == 2


def test_aggregate_counts_and_threshold_attachment():
    cfg = tiny_config(trials=5)
    result = run_experiment(cfg)
    (summary,) = result.cells
    assert summary.trials == 5
    assert summary.successes == sum(r.success for r in result.records)
    assert summary.rate == summary.successes / 5
    lo, hi = wilson_interval(summary.successes, 5)
    assert (summary.wilson_low, summary.wilson_high) == (lo, hi)
    assert summary.thresholds is not None
    assert len(summary.thresholds.communities) == 2
    assert summary.tie_rate is not None


def test_compare_costs_single_community_is_exactly_paired():
    # with one community the weighted and unweighted optima coincide, and both
    # runs see identical instances, so every paired difference is zero
    cfg = tiny_config(sizes=((5,),), p_values=(0.3,), q_values=(), trials=8)
    rows, result = compare_costs(cfg)
    assert not result.errors
    (row,) = rows
    assert row.trials == 8
    assert row.mean_diff == 0.0
    assert row.rate_weighted == row.rate_unweighted
    variants = {r.variant for r in result.records}
    assert variants == {"weighted", "unweighted"}


def test_phase_markers_single_community_full_sampling():
    # at s = 1 the signal factor is 1, so the crossing sits at 3 ln(n) / n
    markers = _threshold_markers("p", (1000,), 0.5, None, 1.0)
    assert len(markers) == 2  # both factors collapse to the same point
    for mk in markers:
        assert mk.value == pytest.approx(0.02072326583694641, rel=1e-12)
    # q axis has no meaning for a single community
    assert _threshold_markers("q", (1000,), 0.5, None, 1.0) == []
    s_markers = _threshold_markers("s", (1000,), 0.1, None, 0.9)
    assert len(s_markers) == 2
    sig = lambda s: s * (1 - math.sqrt(1 - s * s))
    for mk in s_markers:
        assert sig(mk.value) * 0.1 == pytest.approx(3 * math.log(1000) / 1000, rel=1e-9)


def test_phase_markers_two_block_ordering():
    markers = _threshold_markers("p", (100, 50), 0.1, 0.02, 0.9)
    by_key = {(m.community, m.factor): m.value for m in markers}
    # stronger cross factor moves the crossing earlier
    assert by_key[(1, 2)] < by_key[(1, 1)]
    assert by_key[(2, 2)] < by_key[(2, 1)]


def test_phase_curve_end_to_end(tmp_path):
    cfg = tiny_config(
        sizes=((4,),),
        p_values=(0.1, 0.45),
        q_values=(),
        s_values=(0.8,),
        trials=3,
    )
    curve = phase_curve(cfg, "p")
    assert curve.axis == "p"
    assert [pt.axis_value for pt in curve.points] == [0.1, 0.45]
    assert all(pt.trials == 3 for pt in curve.points)
    out = tmp_path / "phase.csv"
    write_phase_csv(curve, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "# schema: deanon/phase/v1"
    assert sum(1 for ln in lines if ln.startswith("data")) == 2
    with pytest.raises(ValueError):
        phase_curve(tiny_config(p_values=(0.1, 0.2), s_values=(0.5, 0.6)), "p")
    with pytest.raises(ValueError):
        phase_curve(tiny_config(sizes=((4,),), q_values=()), "q")


def test_phase_curve_markers_only_with_zero_trials():
    # n = 1000 would blow the exact-matching budget, but with zero trials the
    # harness never matches, so the cells must still produce axis points.
    cfg = tiny_config(
        sizes=((1000,),), p_values=(0.45,), q_values=(), s_values=(0.6, 0.9), trials=0
    )
    curve = phase_curve(cfg, "s")
    assert not curve.result.errors
    assert [pt.axis_value for pt in curve.points] == [0.6, 0.9]
    assert all(pt.trials == 0 for pt in curve.points)
    assert curve.markers  # crossings exist for n = 1000, p = 0.45
