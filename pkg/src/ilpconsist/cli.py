"""Command-line entry point.

Exit codes: 0 success, 1 at least one infeasible (or undecodable) instance,
2 input error, 3 oracle mismatch.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import sys
from pathlib import Path

from .fixtures import PRESETS, generate
from .io import InputError, assignments_to_doc, dumps, load_assignments, load_inputs, write_json
from .pipeline import ConfigError, RunConfig, evaluate, run_pipeline, standard_configs
from .report import emit_report, render_table
from .scoring import ScoringConfig, ScoringError, score_instance
from .solver import IlpProblem, SearchSpaceError, SolverConfig, brute_force, solve

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_MISMATCH = 0, 1, 2, 3

log = logging.getLogger("ilpconsist")


def _add_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--predictions", required=True, help="predictions JSON document")
    p.add_argument("--constraints", help="constraint program (one statement per line)")
    p.add_argument("--gold", help="gold JSON document (overrides inline gold)")


def _add_scoring(p: argparse.ArgumentParser) -> None:
    p.add_argument("--factors", default="", help="comma list of prior, entropy, accuracy, or 'all'")
    p.add_argument("--prior-mode", default="uniform", choices=["uniform", "empirical"])
    p.add_argument("--entropy-base", type=float, default=math.e)
    p.add_argument("--entropy-eps", type=float, default=1e-6)
    p.add_argument("--entropy-variant", default="literal", choices=["literal", "inverse-normalized"])
    p.add_argument("--node-limit", type=int, default=10**7)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")


def _scoring(args, factors=None) -> ScoringConfig:
    return ScoringConfig.parse(
        args.factors if factors is None else factors,
        prior_mode=args.prior_mode,
        log_base=args.entropy_base,
        epsilon=args.entropy_eps,
        entropy_variant=args.entropy_variant,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ilpconsist", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="run one inference method")
    _add_inputs(p)
    _add_scoring(p)
    p.add_argument("--method", default="ilp", help="baseline | ilp | sequential:<top_down|bottom_up|two_stage|stepwise>")
    p.add_argument("--output", help="write assignments JSON here (default: stdout)")
    p.add_argument("--report", help="directory for report.json, table.txt and table.tsv")

    p = sub.add_parser("evaluate", help="compare baseline, sequential and ILP variants")
    _add_inputs(p)
    _add_scoring(p)
    p.add_argument("--assignments", help="score this assignments file instead of running methods")
    p.add_argument("--sequential", choices=["top_down", "bottom_up", "two_stage", "stepwise"])
    p.add_argument("--report", help="directory for report.json, table.txt and table.tsv")

    p = sub.add_parser("check", help="validate inputs and probe feasibility")
    _add_inputs(p)
    p.add_argument("--node-limit", type=int, default=10**7)

    p = sub.add_parser("oracle", help="diff the solver against brute force")
    _add_inputs(p)
    _add_scoring(p)
    p.add_argument("--limit", type=int, default=10**6, help="skip instances with a larger search space")

    p = sub.add_parser("generate", help="write a synthetic fixture")
    p.add_argument("--kind", default="animal", choices=sorted(PRESETS))
    p.add_argument("--instances", type=int)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="output directory")
    return parser


def cmd_infer(args) -> int:
    inputs = load_inputs(args.predictions, args.constraints, args.gold)
    config = RunConfig(method=args.method, scoring=_scoring(args), node_limit=args.node_limit, jobs=args.jobs)
    result = run_pipeline(inputs, config)
    doc = assignments_to_doc(inputs.problem, result.assignments, config.label, result.status)
    if args.output:
        write_json(args.output, doc)
    else:
        sys.stdout.write(dumps(doc))
    if args.report:
        emit_report(result.report, args.report)
    for iid in result.failed:
        log.warning("instance %s: %s, fell back to baseline", iid, result.status[iid])
    return EXIT_INFEASIBLE if result.failed else EXIT_OK


def cmd_evaluate(args) -> int:
    inputs = load_inputs(args.predictions, args.constraints, args.gold)
    if args.assignments:
        assignments = load_assignments(args.assignments, inputs.problem)
        reports = [evaluate(inputs, assignments, "file")]
        failed = False
    else:
        scoring_opts = dict(
            prior_mode=args.prior_mode,
            log_base=args.entropy_base,
            epsilon=args.entropy_eps,
            entropy_variant=args.entropy_variant,
        )
        configs = standard_configs(args.sequential, node_limit=args.node_limit, jobs=args.jobs)
        reports = []
        failed = False
        for cfg in configs:
            cfg = dataclasses.replace(cfg, scoring=dataclasses.replace(cfg.scoring, **scoring_opts))
            result = run_pipeline(inputs, cfg)
            failed = failed or bool(result.failed)
            reports.append(result.report)
    sys.stdout.write(render_table(reports))
    if args.report:
        emit_report(reports, args.report)
    return EXIT_INFEASIBLE if failed else EXIT_OK


def cmd_check(args) -> int:
    inputs = load_inputs(args.predictions, args.constraints, args.gold)
    problem = inputs.problem
    bad = []
    for inst in problem.instances:
        weights = score_instance(inst, ScoringConfig(), problem.models)
        ilp = IlpProblem.from_weights([weights[g.id] for g in inst.groups], inputs.linear[inst.id])
        res = solve(ilp, SolverConfig(args.node_limit))
        if not res.optimal:
            bad.append((inst.id, res.status))
    n_constraints = sum(len(v) for v in inputs.grounded.values())
    print(f"{len(problem.instances)} instances, {n_constraints} ground constraints: inputs valid")
    for iid, status in bad:
        print(f"instance {iid}: {status}")
    return EXIT_INFEASIBLE if any(s == "infeasible" for _, s in bad) else EXIT_OK


def cmd_oracle(args) -> int:
    inputs = load_inputs(args.predictions, args.constraints, args.gold)
    problem = inputs.problem
    scoring = _scoring(args)
    compared = skipped = 0
    mismatches = []
    for inst in problem.instances:
        weights = score_instance(inst, scoring, problem.models)
        ilp = IlpProblem.from_weights([weights[g.id] for g in inst.groups], inputs.linear[inst.id])
        try:
            ref = brute_force(ilp, limit=args.limit)
        except SearchSpaceError:
            skipped += 1
            continue
        got = solve(ilp, SolverConfig(args.node_limit))
        compared += 1
        same_status = ref.status == got.status
        same = same_status and (
            ref.status != "optimal"
            or (abs(ref.objective - got.objective) <= 1e-9 and ref.assignment == got.assignment)
        )
        if not same:
            mismatches.append(inst.id)
            print(f"instance {inst.id}: solver {got.status} {got.objective} vs brute force {ref.status} {ref.objective}")
    print(f"compared {compared}, skipped {skipped} (search space > {args.limit}), mismatches {len(mismatches)}")
    return EXIT_MISMATCH if mismatches else EXIT_OK


def cmd_generate(args) -> int:
    spec = PRESETS[args.kind]
    spec = dataclasses.replace(spec, seed=args.seed, **({"instances": args.instances} if args.instances else {}))
    data = generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data.write(out / "predictions.json", out / "constraints.txt")
    print(f"wrote {len(data.problem.instances)} instances to {out}")
    return EXIT_OK


COMMANDS = {
    "infer": cmd_infer,
    "evaluate": cmd_evaluate,
    "check": cmd_check,
    "oracle": cmd_oracle,
    "generate": cmd_generate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (ConfigError, ScoringError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
