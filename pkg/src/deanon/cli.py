"""Command line front end.

Subcommands mirror the library surface: gen / cost / match for single
instances, theory / bounds for closed-form reports, experiment /
compare / phase for seeded sweeps.  All file IO is JSON or schema-
tagged CSV; see the module docstrings for the formats.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .cost import (
    brute_force_posterior,
    matching_cost,
    mismatch_weights,
    posterior_score,
    unit_weights,
)
from .experiments import (
    ExperimentConfig,
    compare_costs,
    phase_curve,
    run_experiment,
    write_cells_csv,
    write_compare_csv,
    write_phase_csv,
    write_trials_csv,
)
from .graphs import dump_json, load_json, params_from_json
from .matching import exact_match, local_search_match, score_success
from .sampling import (
    instance_from_json,
    instance_to_json,
    make_instance,
    matching_from_json,
    matching_to_json,
)
from .theory import threshold_report, union_bound_table, score_step_probs, chernoff_tail_bound, empirical_tail


def _finite(x: float):
    """JSON has no inf; encode infinities as strings."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2))


def _cost_json(breakdown) -> dict:
    return {
        "per_block_mismatch": [[i, j, c] for (i, j), c in breakdown.per_block_mismatch],
        "weighted_total": _finite(breakdown.weighted_total),
        "unweighted_total": breakdown.unweighted_total,
    }


def _cmd_gen(args) -> int:
    params = params_from_json(load_json(args.params))
    inst = make_instance(params, args.seed, identity_truth=args.identity_truth)
    dump_json(instance_to_json(inst), args.out)
    print(
        f"instance written to {args.out}: n={params.n}, "
        f"|E(g)|={len(inst.g.edges)}, |E(g1)|={len(inst.g1.edges)}, |E(g2)|={len(inst.g2.edges)}"
    )
    return 0


def _weights_for(params, unweighted: bool):
    return unit_weights(params.k) if unweighted else mismatch_weights(params)


def _cmd_cost(args) -> int:
    inst = instance_from_json(load_json(args.instance))
    matching = matching_from_json(load_json(args.matching))
    weights = _weights_for(inst.params, args.unweighted)
    breakdown = matching_cost(inst.g1, inst.g2, matching, weights)
    out = _cost_json(breakdown)
    if not args.unweighted:
        score = posterior_score(inst.g1, inst.g2, matching, inst.params)
        out["log_score"] = _finite(score.log_score)
    _print_json(out)
    return 0


def _cmd_match(args) -> int:
    inst = instance_from_json(load_json(args.instance))
    weights = _weights_for(inst.params, args.unweighted)
    if args.mode == "exact":
        result = exact_match(inst.g1, inst.g2, weights, ties=args.ties)
    else:
        result = local_search_match(
            inst.g1, inst.g2, weights, restarts=args.restarts, seed=args.seed
        )
    report = score_success(result.best, inst.truth, inst.params.community_layout())
    out = {
        "mode": result.mode,
        "best": matching_to_json(result.best),
        "cost": _cost_json(result.best_cost),
        "has_ties": result.has_ties,
        "tie_count": len(result.tie_set) if result.ties_exhaustive else None,
        "nodes_explored": result.nodes_explored,
        "success": {
            "perfect": report.perfect,
            "fraction_correct": report.fraction_correct,
            "mismatch_counts": list(report.mismatch_counts),
        },
    }
    if args.out:
        dump_json(out, args.out)
        print(f"match result written to {args.out}")
    else:
        _print_json(out)
    return 0


def _cmd_theory(args) -> int:
    params = params_from_json(load_json(args.params))
    report = threshold_report(params)
    table = union_bound_table(params)
    out = {
        "threshold": {
            "k": report.k,
            "p": report.p,
            "q": report.q,
            "s": report.s,
            "signal": report.signal,
            "q_exceeds_p": report.q_exceeds_p,
            "reduced_form": report.reduced_form,
            "communities": [
                {
                    "community": c.community,
                    "size": c.size,
                    "rhs": c.rhs,
                    "lhs_factor1": c.lhs_factor1,
                    "slack_factor1": c.slack_factor1,
                    "satisfied_factor1": c.satisfied_factor1,
                    "lhs_factor2": c.lhs_factor2,
                    "slack_factor2": c.slack_factor2,
                    "satisfied_factor2": c.satisfied_factor2,
                }
                for c in report.communities
            ],
        },
        "union_bound": {
            "slope1": table.slope1,
            "slope2": table.slope2,
            "log_total": _finite(table.log_total),
            "total": _finite(table.total),
            "total_below_one": table.total_below_one,
            "decaying": table.decaying,
        },
    }
    cells = table.log_terms.size
    if args.full_table or cells <= 10201:
        out["union_bound"]["log_terms"] = [
            [_finite(x) for x in row] for row in table.log_terms.tolist()
        ]
    else:
        out["union_bound"]["log_terms_omitted"] = (
            f"{cells} cells; rerun with --full-table to include them"
        )
    _print_json(out)
    return 0


def _cmd_bounds(args) -> int:
    probs = score_step_probs(args.p, args.q, args.s)
    bound = chernoff_tail_bound(args.n_intra, args.n_inter, probs)
    out = {
        "step_probs": {
            "intra_up": probs.intra_up,
            "intra_stay": probs.intra_stay,
            "intra_down": probs.intra_down,
            "inter_up": probs.inter_up,
            "inter_stay": probs.inter_stay,
            "inter_down": probs.inter_down,
        },
        "chernoff_bound": bound,
    }
    if args.trials > 0:
        est = empirical_tail(args.n_intra, args.n_inter, probs, args.trials, args.seed)
        out["empirical"] = {
            "estimate": est.estimate,
            "half_width_99": est.half_width,
            "trials": est.trials,
        }
    _print_json(out)
    return 0


def _cmd_experiment(args) -> int:
    config = ExperimentConfig.from_json(load_json(args.config))
    result = run_experiment(config)
    write_trials_csv(result, args.out)
    cells_out = args.cells_out or (str(args.out) + ".cells.csv")
    write_cells_csv(result, cells_out)
    print(f"{len(result.records)} trial records -> {args.out}")
    print(f"{len(result.cells)} cell summaries -> {cells_out}")
    for err in result.errors:
        print(f"cell {err.cell} failed during {err.stage}: {err.message}", file=sys.stderr)
    return 1 if result.errors else 0


def _cmd_compare(args) -> int:
    config = ExperimentConfig.from_json(load_json(args.config))
    rows, result = compare_costs(config)
    if args.out:
        write_compare_csv(rows, args.out)
        print(f"{len(rows)} comparison rows -> {args.out}")
    else:
        for r in rows:
            print(
                f"cell {r.cell} sizes={'+'.join(map(str, r.sizes))} p={r.p} q={r.q} s={r.s}: "
                f"weighted {r.rate_weighted:.3f} unweighted {r.rate_unweighted:.3f} "
                f"diff {r.mean_diff:+.3f} (+/- {r.diff_half_width:.3f})"
            )
    for err in result.errors:
        print(f"cell {err.cell} failed during {err.stage}: {err.message}", file=sys.stderr)
    return 1 if result.errors else 0


def _cmd_phase(args) -> int:
    config = ExperimentConfig.from_json(load_json(args.config))
    curve = phase_curve(config, args.axis)
    if args.out:
        write_phase_csv(curve, args.out)
        print(f"{len(curve.points)} points, {len(curve.markers)} markers -> {args.out}")
    else:
        for pt in curve.points:
            print(
                f"{curve.axis}={pt.axis_value} [{pt.variant}] rate={pt.rate:.3f} "
                f"({pt.wilson_low:.3f}, {pt.wilson_high:.3f}) n={pt.trials}"
            )
        for mk in curve.markers:
            print(
                f"marker: community {mk.community} factor {mk.factor} crosses at "
                f"{curve.axis}={mk.value:.6g}"
            )
    for err in curve.result.errors:
        print(f"cell {err.cell} failed during {err.stage}: {err.message}", file=sys.stderr)
    return 1 if curve.result.errors else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deanon",
        description="Graph de-anonymization lab: generate, match, bound, sweep.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded instance bundle")
    g.add_argument("--params", required=True, help="model params JSON file")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, help="instance JSON to write")
    g.add_argument("--identity-truth", action="store_true",
                   help="pin the hidden matching to the identity")
    g.set_defaults(func=_cmd_gen)

    c = sub.add_parser("cost", help="score one matching against an instance")
    c.add_argument("--instance", required=True)
    c.add_argument("--matching", required=True, help="JSON {forward: [...]} or a bare array")
    c.add_argument("--unweighted", action="store_true")
    c.set_defaults(func=_cmd_cost)

    m = sub.add_parser("match", help="recover the matching of an instance")
    m.add_argument("--instance", required=True)
    m.add_argument("--mode", choices=["exact", "local"], default="exact")
    m.add_argument("--ties", choices=["full", "detect", "none"], default="detect")
    m.add_argument("--restarts", type=int, default=4)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--unweighted", action="store_true")
    m.add_argument("--out", default=None)
    m.set_defaults(func=_cmd_match)

    t = sub.add_parser("theory", help="threshold report and union bound for params")
    t.add_argument("--params", required=True)
    t.add_argument("--full-table", action="store_true",
                   help="include the full per-cell log table even when large")
    t.set_defaults(func=_cmd_theory)

    b = sub.add_parser("bounds", help="tail bound vs Monte Carlo for disturbed-pair counts")
    b.add_argument("--n-intra", type=int, required=True)
    b.add_argument("--n-inter", type=int, required=True)
    b.add_argument("--p", type=float, required=True)
    b.add_argument("--q", type=float, required=True)
    b.add_argument("--s", type=float, required=True)
    b.add_argument("--trials", type=int, default=0)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=_cmd_bounds)

    e = sub.add_parser("experiment", help="run a seeded sweep from a config")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True, help="trials CSV to write")
    e.add_argument("--cells-out", default=None, help="cell summary CSV (default <out>.cells.csv)")
    e.set_defaults(func=_cmd_experiment)

    k = sub.add_parser("compare", help="paired weighted vs unweighted comparison")
    k.add_argument("--config", required=True)
    k.add_argument("--out", default=None)
    k.set_defaults(func=_cmd_compare)

    p = sub.add_parser("phase", help="success curve along one axis with threshold markers")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", choices=["p", "q", "s"], required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_phase)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
