"""Command-line front end: ``flowfeat {rank,sweep,audit,synth,report}``.

Exit codes: 0 success, 1 usage error, 2 data error (missing or malformed
plan/profile/dataset), 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .dataset import DataError, Profile, load_profile, load_with_profile, prepare
from .harness import (
    ExperimentPlan,
    SyntheticSpec,
    audit_hidden_labels,
    emit_report,
    generate_synthetic,
    load_plan,
    partitions,
    plan_from_mapping,
    remove_and_rerun,
    run_rankings,
    sweep_subsets,
    write_csv,
    write_manifest,
    write_rankings,
)

log = logging.getLogger("flowfeat")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3
SUBCOMMANDS = ("rank", "sweep", "audit", "synth", "report")

# flag dest -> plan key
_OVERRIDES = {
    "data": "data",
    "profile": "profile",
    "out": "out",
    "seed": "seed",
    "jobs": "jobs",
    "mode": "mode",
    "k": "k",
    "ratio": "ratio",
    "max_subset": "max_subset_size",
    "algorithms": "algorithms",
    "classifiers": "classifiers",
    "remove": "removed_features",
    "delta": "delta",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _formatter(prog):
    # fixed width keeps usage text independent of the terminal
    return argparse.HelpFormatter(prog, width=100, max_help_position=32)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--plan", help="experiment plan file (key = value lines)")
    p.add_argument("--data", help="flow CSV; overrides the plan's data")
    p.add_argument("--profile", help="dataset profile file (label column, attack values, identifiers)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--jobs", type=int, help="parallel jobs; 0 = available cores (default)")
    p.add_argument("--mode", choices=("kfold", "holdout"), help="evaluation protocol")
    p.add_argument("--k", type=int, help="number of folds in kfold mode")
    p.add_argument("--ratio", type=float, help="training fraction in holdout mode")
    p.add_argument("--max-subset", type=int, help="largest top-k subset to evaluate")
    p.add_argument("--algorithms", help="comma list of chi_square,information_gain,correlation")
    p.add_argument("--classifiers", help="comma list of dff,rf")
    p.add_argument("--remove", help="comma list of feature names to drop before running")
    p.add_argument("--delta", type=float, help="hidden-label AUC margin")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="flowfeat",
        description="Feature ranking, top-k subset sweeps and hidden-label audits for flow datasets.",
        formatter_class=_formatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="{" + ",".join(SUBCOMMANDS) + "}", parser_class=_Parser)
    helps = {
        "rank": "rank features with each selection algorithm (rankings/*.csv)",
        "sweep": "evaluate top-1..top-K subsets per algorithm and classifier",
        "audit": "flag features whose single-feature AUC matches the full-set AUC",
        "synth": "write a synthetic flow CSV with an optional planted leak column",
        "report": "run rank, sweep and audit and write every report format",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name], description=helps[name], formatter_class=_formatter)
        if name == "synth":
            p.add_argument("--n", type=int, default=2000, help="rows")
            p.add_argument("--d", type=int, default=10, help="feature columns, leak included")
            p.add_argument("--leak", type=float, default=1.0, help="leak strength in [0, 1]; 0 plants none")
            p.add_argument("--balance", type=float, default=0.5, help="attack fraction")
            p.add_argument("--seed", type=int, default=0, help="generator seed")
            p.add_argument("--out", required=True, help="output CSV path")
            p.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
        else:
            _add_common(p)
        if name == "audit":
            p.add_argument("--classifier", choices=("dff", "rf"), help="audit classifier (default rf)")
        if name in ("sweep", "audit", "report"):
            p.add_argument(
                "--format", choices=("csv", "json", "curves", "all"), default="all", help="report format(s)"
            )
    return parser


def usage_text() -> str:
    """Help for the top level and every subcommand, in a stable layout."""
    parser = build_parser()
    parts = [parser.format_help()]
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name in SUBCOMMANDS:
        parts.append(sub.choices[name].format_help())
    return "\n".join(parts)


def resolve_plan(args: argparse.Namespace) -> ExperimentPlan:
    plan = load_plan(args.plan) if args.plan else ExperimentPlan()
    kv = {}
    for dest, key in _OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            kv[key] = str(value)
    if getattr(args, "classifier", None):
        kv["audit_classifier"] = args.classifier
    plan = plan_from_mapping(kv, base=plan, source="command line")
    if not plan.data:
        raise DataError("no dataset given: set 'data' in the plan or pass --data")
    return plan


def load_data(plan: ExperimentPlan):
    profile = load_profile(plan.profile) if plan.profile else Profile()
    table, y = prepare(load_with_profile(plan.data, profile), profile)
    log.info("loaded %s: %d rows, %d features, %d attacks", plan.data, table.n_rows, table.n_features, y.positive_count)
    return table, y


def _formats(args) -> list[str]:
    fmt = getattr(args, "format", "all")
    return ["csv", "json", "curves"] if fmt == "all" else [fmt]


def _run(args: argparse.Namespace) -> None:
    if args.command == "synth":
        spec = SyntheticSpec(n=args.n, d=args.d, leak_strength=args.leak, positive_fraction=args.balance, seed=args.seed)
        table, y = generate_synthetic(spec)
        write_csv(table, y, args.out)
        print(f"synth: wrote {args.out} ({spec.n} rows, {spec.d} features, leak_strength={spec.leak_strength})")
        return

    plan = resolve_plan(args)
    table, y = load_data(plan)
    if plan.removed_features and args.command in ("rank", "audit"):
        table = table.drop(plan.removed_features)
    out = Path(plan.out)
    parts = partitions(table, y, plan)
    extra = {"dataset": {"path": plan.data, "rows": table.n_rows, "features": list(table.feature_names)}}

    if args.command in ("rank", "sweep", "report"):
        if args.command != "rank" and plan.removed_features:
            sweep = remove_and_rerun(table, y, plan, plan.removed_features)
            rankings = sweep.rankings
        else:
            rankings = run_rankings(table, y, plan, parts)
            sweep = sweep_subsets(table, y, rankings, plan, parts) if args.command != "rank" else None
        paths = write_rankings(rankings, out)
        print(f"rank: {len(rankings.per_fold)} rankings over {table.n_features} features -> {out / 'rankings'}")
        if sweep is not None:
            for fmt in _formats(args):
                paths += emit_report(sweep, fmt, out)
            n_err = sum(1 for c in sweep.cells.values() if c.error)
            print(
                f"sweep: {len(sweep.cells)} subset cells + {len(sweep.baselines)} baselines"
                f" ({n_err} failed) -> {out}"
            )
    if args.command in ("audit", "report"):
        audit_table = table.drop(plan.removed_features) if args.command == "report" and plan.removed_features else table
        audit = audit_hidden_labels(audit_table, y, plan)
        for fmt in _formats(args):
            if fmt != "curves":
                emit_report(audit, fmt, out)
        flagged = ", ".join(audit.flagged) or "none"
        print(f"audit: full AUC {audit.auc_full:.4f}, flagged {len(audit.flagged)}: {flagged} -> {out / 'audit.csv'}")
    write_manifest(plan, out, len(parts), command=args.command, **extra)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("flowfeat: a subcommand is required")
    except UsageError as exc:
        sys.stderr.write(usage_text())
        sys.stderr.write(f"\n{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        _run(args)
    except (FileNotFoundError, DataError) as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except ValueError as exc:
        # bad plan values surface as ValueError from the config dataclasses
        log.error("%s", exc)
        return EXIT_DATA
    except Exception as exc:
        log.exception("run failed: %s", exc)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
