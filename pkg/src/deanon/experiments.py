"""Sweep harness: seeded trial grids, success aggregation, CSV emission.

A grid config expands into cells (sizes, p, q, s).  Each cell runs a
fixed number of trials; each trial builds one instance from a seed
derived deterministically from (master seed, cell index, trial index),
runs the configured matcher under each cost variant on that same
instance, and records success against the hidden matching.  Identical
configs therefore produce identical records whether trials run serially
or on a worker pool (DEANON_THREADS), and CSV output is byte-stable:
wall-clock timings are kept in memory but never written to files.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .cost import matching_count, mismatch_weights, unit_weights
from .graphs import ModelParams, validate_params
from .matching import exact_match, local_search_match, score_success
from .sampling import make_instance
from .theory import ThresholdReport, threshold_report, _signal

TRIALS_SCHEMA = "deanon/trials/v1"
CELLS_SCHEMA = "deanon/cells/v1"
COMPARE_SCHEMA = "deanon/compare/v1"
PHASE_SCHEMA = "deanon/phase/v1"

_VARIANTS = ("weighted", "unweighted")


@dataclass(frozen=True)
class ExperimentConfig:
    sizes: tuple[tuple[int, ...], ...]
    p_values: tuple[float, ...]
    q_values: tuple[float, ...]
    s_values: tuple[float, ...]
    trials: int
    matcher: str = "exact"
    restarts: int = 4
    variants: tuple[str, ...] = ("weighted",)
    master_seed: int = 0
    allow_relaxed: bool = False
    max_matchings: int = 10**8

    def __post_init__(self):
        if self.matcher not in ("exact", "local"):
            raise ValueError(f"unknown matcher {self.matcher!r}")
        for v in self.variants:
            if v not in _VARIANTS:
                raise ValueError(f"unknown cost variant {v!r}")
        if not self.variants:
            raise ValueError("at least one cost variant required")
        if self.trials < 0:
            raise ValueError("trials must be >= 0")
        for row in self.sizes:
            if len(row) not in (1, 2):
                raise ValueError("size rows must list one or two community sizes")
        if any(len(row) == 2 for row in self.sizes) and not self.q_values:
            raise ValueError("two-community grids need q values")

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        return cls(
            sizes=tuple(tuple(int(x) for x in row) for row in obj["sizes"]),
            p_values=tuple(float(x) for x in obj["p"]),
            q_values=tuple(float(x) for x in obj.get("q", [])),
            s_values=tuple(float(x) for x in obj["s"]),
            trials=int(obj["trials"]),
            matcher=obj.get("matcher", "exact"),
            restarts=int(obj.get("restarts", 4)),
            variants=tuple(obj.get("variants", ["weighted"])),
            master_seed=int(obj.get("seed", 0)),
            allow_relaxed=bool(obj.get("allow_relaxed", False)),
            max_matchings=int(obj.get("max_matchings", 10**8)),
        )


@dataclass(frozen=True)
class Cell:
    index: int
    sizes: tuple[int, ...]
    p: float
    q: float | None
    s: float

    def params(self) -> ModelParams:
        if len(self.sizes) == 1:
            return ModelParams.single(self.sizes[0], self.p, self.s)
        assert self.q is not None
        return ModelParams.two_block(self.sizes[0], self.sizes[1], self.p, self.q, self.s)

    def label(self) -> str:
        return "+".join(str(x) for x in self.sizes)


def expand_cells(config: ExperimentConfig) -> list[Cell]:
    cells = []
    index = 0
    for sizes in config.sizes:
        qs: Sequence[float | None] = config.q_values if len(sizes) == 2 else [None]
        for p in config.p_values:
            for q in qs:
                for s in config.s_values:
                    cells.append(Cell(index, sizes, p, q, s))
                    index += 1
    return cells


@dataclass(frozen=True)
class TrialRecord:
    cell: int
    sizes: tuple[int, ...]
    p: float
    q: float | None
    s: float
    trial: int
    seed: int
    variant: str
    success: bool
    fraction_correct: float
    tie: bool | None
    runtime_s: float


@dataclass(frozen=True)
class CellError:
    cell: int
    stage: str
    message: str


@dataclass(frozen=True)
class CellSummary:
    cell: int
    sizes: tuple[int, ...]
    p: float
    q: float | None
    s: float
    variant: str
    trials: int
    successes: int
    rate: float
    wilson_low: float
    wilson_high: float
    tie_rate: float | None
    mean_fraction_correct: float
    thresholds: ThresholdReport | None


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: tuple[TrialRecord, ...]
    cells: tuple[CellSummary, ...]
    errors: tuple[CellError, ...]


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    spread = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    return (max(0.0, center - spread), min(1.0, center + spread))


def trial_seed(master_seed: int, cell_index: int, trial: int) -> int:
    """Stable per-trial seed: a SeedSequence keyed by (master, cell, trial)."""
    ss = np.random.SeedSequence((master_seed, cell_index, trial))
    return int(ss.generate_state(1, np.uint64)[0])


def _run_trial(args) -> list[TrialRecord]:
    cell, trial, seed, matcher, restarts, variants, max_matchings = args
    params = cell.params()
    instance = make_instance(params, seed)
    layout = params.community_layout()
    records = []
    for variant in variants:
        weights = mismatch_weights(params) if variant == "weighted" else unit_weights(params.k)
        start = time.perf_counter()
        if matcher == "exact":
            result = exact_match(
                instance.g1, instance.g2, weights, ties="detect", max_matchings=max_matchings
            )
        else:
            result = local_search_match(
                instance.g1, instance.g2, weights, restarts=restarts, seed=seed
            )
        elapsed = time.perf_counter() - start
        report = score_success(result.best, instance.truth, layout)
        records.append(
            TrialRecord(
                cell=cell.index,
                sizes=cell.sizes,
                p=cell.p,
                q=cell.q,
                s=cell.s,
                trial=trial,
                seed=seed,
                variant=variant,
                success=report.perfect,
                fraction_correct=report.fraction_correct,
                tie=result.has_ties,
                runtime_s=elapsed,
            )
        )
    return records


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run the full grid.  Cell-level failures are recorded, not raised,
    so one bad cell cannot take down a sweep."""
    cells = expand_cells(config)
    errors: list[CellError] = []
    reports: dict[int, ThresholdReport | None] = {}
    runnable: list[Cell] = []
    for cell in cells:
        try:
            params = cell.params()
            validate_params(params, mode="generation-only" if config.allow_relaxed else "strict")
            if "weighted" in config.variants:
                mismatch_weights(params)  # fails fast on cells outside the weighted regime
            if config.matcher == "exact" and config.trials > 0:
                space = matching_count(params.sizes)
                if space > config.max_matchings:
                    raise ValueError(
                        f"matching space {space} over budget {config.max_matchings}"
                    )
        except ValueError as exc:
            errors.append(CellError(cell.index, "setup", str(exc)))
            continue
        try:
            reports[cell.index] = threshold_report(params)
        except ValueError:
            reports[cell.index] = None
        runnable.append(cell)

    tasks = [
        (cell, t, trial_seed(config.master_seed, cell.index, t),
         config.matcher, config.restarts, config.variants, config.max_matchings)
        for cell in runnable
        for t in range(config.trials)
    ]
    workers = int(os.environ.get("DEANON_THREADS", "1"))
    records: list[TrialRecord] = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for batch in pool.map(_run_trial, tasks, chunksize=8):
                records.extend(batch)
    else:
        for task in tasks:
            records.extend(_run_trial(task))

    variant_order = {v: i for i, v in enumerate(config.variants)}
    records.sort(key=lambda r: (r.cell, r.trial, variant_order[r.variant]))

    summaries: list[CellSummary] = []
    for cell in runnable:
        for variant in config.variants:
            rows = [r for r in records if r.cell == cell.index and r.variant == variant]
            n = len(rows)
            wins = sum(r.success for r in rows)
            low, high = wilson_interval(wins, n)
            ties = [r.tie for r in rows if r.tie is not None]
            summaries.append(
                CellSummary(
                    cell=cell.index,
                    sizes=cell.sizes,
                    p=cell.p,
                    q=cell.q,
                    s=cell.s,
                    variant=variant,
                    trials=n,
                    successes=wins,
                    rate=wins / n if n else 0.0,
                    wilson_low=low,
                    wilson_high=high,
                    tie_rate=(sum(ties) / len(ties)) if ties else None,
                    mean_fraction_correct=(
                        sum(r.fraction_correct for r in rows) / n if n else 0.0
                    ),
                    thresholds=reports.get(cell.index),
                )
            )
    return ExperimentResult(
        config=config,
        records=tuple(records),
        cells=tuple(summaries),
        errors=tuple(errors),
    )


# --- CSV emission ----------------------------------------------------------
#
# Files open with a schema comment line, then a plain header row.  All
# content is a pure function of the config, so reruns are byte-identical.


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _sizes_str(sizes: tuple[int, ...]) -> str:
    return "+".join(str(x) for x in sizes)


def _slack_fields(report: ThresholdReport | None) -> list:
    out: list = []
    comms = list(report.communities) if report is not None else []
    for idx in range(2):
        if idx < len(comms):
            out.extend([comms[idx].slack_factor1, comms[idx].slack_factor2])
        else:
            out.extend([None, None])
    return out


def write_trials_csv(result: ExperimentResult, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {TRIALS_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["cell", "sizes", "p", "q", "s", "trial", "seed", "variant",
             "success", "fraction_correct", "tie"]
        )
        for r in result.records:
            writer.writerow(
                [_fmt(r.cell), _sizes_str(r.sizes), _fmt(r.p), _fmt(r.q), _fmt(r.s),
                 _fmt(r.trial), _fmt(r.seed), r.variant, _fmt(r.success),
                 _fmt(r.fraction_correct), _fmt(r.tie)]
            )


def write_cells_csv(result: ExperimentResult, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {CELLS_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["cell", "sizes", "p", "q", "s", "variant", "trials", "successes",
             "rate", "wilson_low", "wilson_high", "tie_rate", "mean_fraction_correct",
             "slack_factor1_c1", "slack_factor2_c1", "slack_factor1_c2", "slack_factor2_c2"]
        )
        for c in result.cells:
            writer.writerow(
                [_fmt(c.cell), _sizes_str(c.sizes), _fmt(c.p), _fmt(c.q), _fmt(c.s),
                 c.variant, _fmt(c.trials), _fmt(c.successes), _fmt(c.rate),
                 _fmt(c.wilson_low), _fmt(c.wilson_high), _fmt(c.tie_rate),
                 _fmt(c.mean_fraction_correct)]
                + [_fmt(x) for x in _slack_fields(c.thresholds)]
            )


# --- cost-variant comparison ------------------------------------------------


@dataclass(frozen=True)
class CompareRow:
    cell: int
    sizes: tuple[int, ...]
    p: float
    q: float | None
    s: float
    trials: int
    rate_weighted: float
    rate_unweighted: float
    mean_diff: float
    diff_half_width: float


def compare_costs(config: ExperimentConfig) -> tuple[tuple[CompareRow, ...], ExperimentResult]:
    """Paired weighted vs unweighted comparison on identical instances.

    Both variants run on the same instance inside each trial, so the
    per-trial success difference is a paired statistic; its mean gets a
    95% normal half-width.
    """
    config = ExperimentConfig(
        sizes=config.sizes,
        p_values=config.p_values,
        q_values=config.q_values,
        s_values=config.s_values,
        trials=config.trials,
        matcher=config.matcher,
        restarts=config.restarts,
        variants=("weighted", "unweighted"),
        master_seed=config.master_seed,
        allow_relaxed=config.allow_relaxed,
        max_matchings=config.max_matchings,
    )
    result = run_experiment(config)
    rows = []
    for cell in expand_cells(config):
        per_trial: dict[int, dict[str, bool]] = {}
        for r in result.records:
            if r.cell == cell.index:
                per_trial.setdefault(r.trial, {})[r.variant] = r.success
        if not per_trial:
            continue
        diffs = [
            int(flags["weighted"]) - int(flags["unweighted"])
            for _, flags in sorted(per_trial.items())
        ]
        n = len(diffs)
        mean = sum(diffs) / n
        if n > 1:
            var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
            half = 1.959963984540054 * math.sqrt(var / n)
        else:
            half = math.inf
        rows.append(
            CompareRow(
                cell=cell.index,
                sizes=cell.sizes,
                p=cell.p,
                q=cell.q,
                s=cell.s,
                trials=n,
                rate_weighted=sum(int(f["weighted"]) for f in per_trial.values()) / n,
                rate_unweighted=sum(int(f["unweighted"]) for f in per_trial.values()) / n,
                mean_diff=mean,
                diff_half_width=half,
            )
        )
    return tuple(rows), result


def write_compare_csv(rows: Sequence[CompareRow], path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {COMPARE_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["cell", "sizes", "p", "q", "s", "trials", "rate_weighted",
             "rate_unweighted", "mean_diff", "diff_half_width"]
        )
        for r in rows:
            writer.writerow(
                [_fmt(r.cell), _sizes_str(r.sizes), _fmt(r.p), _fmt(r.q), _fmt(r.s),
                 _fmt(r.trials), _fmt(r.rate_weighted), _fmt(r.rate_unweighted),
                 _fmt(r.mean_diff), _fmt(r.diff_half_width)]
            )


# --- phase curves -----------------------------------------------------------


@dataclass(frozen=True)
class PhaseMarker:
    """Axis location where a community's recovery condition changes sign."""

    axis: str
    value: float
    community: int
    factor: int


@dataclass(frozen=True)
class PhasePoint:
    axis_value: float
    variant: str
    trials: int
    successes: int
    rate: float
    wilson_low: float
    wilson_high: float


@dataclass(frozen=True)
class PhaseCurve:
    axis: str
    points: tuple[PhasePoint, ...]
    markers: tuple[PhaseMarker, ...]
    result: ExperimentResult


def _threshold_markers(
    axis: str, sizes: tuple[int, ...], p: float, q: float | None, s: float
) -> list[PhaseMarker]:
    """Analytic crossing points of the recovery condition along one axis."""
    if len(sizes) == 1:
        geometry = [(1, sizes[0], 0)]
        q = 0.0
    else:
        geometry = [(1, sizes[0], sizes[1]), (2, sizes[1], sizes[0])]
    markers = []
    for community, n_this, n_other in geometry:
        rhs = 3.0 * math.log(n_this) / n_this
        ratio = (n_other / n_this) if n_this else 0.0
        for factor in (1, 2):
            cross = factor * ratio * (q or 0.0)
            if axis == "p":
                value = rhs / _signal(s) - cross
            elif axis == "q":
                if ratio == 0.0:
                    continue
                value = (rhs / _signal(s) - p) / (factor * ratio)
            elif axis == "s":
                base = p + cross
                if base <= 0 or rhs / base > 1.0:
                    continue  # not reachable for any s <= 1
                value = float(brentq(lambda t: _signal(t) * base - rhs, 1e-9, 1.0))
            else:
                raise ValueError(f"unknown axis {axis!r}")
            if 0.0 < value <= 1.0:
                markers.append(PhaseMarker(axis=axis, value=value, community=community, factor=factor))
    return markers


def phase_curve(config: ExperimentConfig, axis: str) -> PhaseCurve:
    """Success rate along one swept parameter, with threshold crossings attached.

    Exactly one of p/q/s may hold multiple values, and it must be the
    requested axis; a single size row is required.  trials = 0 is
    allowed and produces markers only.
    """
    if axis not in ("p", "q", "s"):
        raise ValueError(f"unknown axis {axis!r}")
    if len(config.sizes) != 1:
        raise ValueError("phase curves sweep a single community-size row")
    lengths = {"p": len(config.p_values), "q": len(config.q_values), "s": len(config.s_values)}
    for name, count in lengths.items():
        if name != axis and count > 1:
            raise ValueError(f"{name} holds {count} values but the swept axis is {axis}")
    if lengths[axis] == 0:
        raise ValueError(f"no values on the swept axis {axis}")
    sizes = config.sizes[0]
    if axis == "q" and len(sizes) == 1:
        raise ValueError("q cannot be swept with a single community")

    result = run_experiment(config)
    axis_of = {"p": lambda c: c.p, "q": lambda c: c.q, "s": lambda c: c.s}[axis]
    points = [
        PhasePoint(
            axis_value=axis_of(c),
            variant=c.variant,
            trials=c.trials,
            successes=c.successes,
            rate=c.rate,
            wilson_low=c.wilson_low,
            wilson_high=c.wilson_high,
        )
        for c in result.cells
    ]
    fixed_p = config.p_values[0]
    fixed_q = config.q_values[0] if config.q_values else None
    fixed_s = config.s_values[0]
    markers = _threshold_markers(axis, sizes, fixed_p, fixed_q, fixed_s)
    return PhaseCurve(
        axis=axis, points=tuple(points), markers=tuple(markers), result=result
    )


def write_phase_csv(curve: PhaseCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {PHASE_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["row_type", "axis", "value", "variant", "trials", "successes",
             "rate", "wilson_low", "wilson_high", "community", "factor"]
        )
        for pt in curve.points:
            writer.writerow(
                ["data", curve.axis, _fmt(pt.axis_value), pt.variant, _fmt(pt.trials),
                 _fmt(pt.successes), _fmt(pt.rate), _fmt(pt.wilson_low),
                 _fmt(pt.wilson_high), "", ""]
            )
        for mk in curve.markers:
            writer.writerow(
                ["marker", mk.axis, _fmt(mk.value), "", "", "", "", "", "",
                 _fmt(mk.community), _fmt(mk.factor)]
            )
