# src/cli.py
"""
Command-line entry point (`cdclverify`).

Subcommands:
- verify    one network / property pair; prints the verdict line
- batch     every task of a manifest CSV; writes a results CSV
- info      NNet dimensions
- generate  a seeded desk-scale suite (NNet files, property files, manifest)

Exit codes for `verify`: 0 HOLDS, 1 VIOLATED, 2 TIMEOUT or STALLED,
3 usage or input error. `batch` exits 0 when every task produced a row.
"""
import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import ValidationError

from src.agents.attack_agent import Found, pgd_prefilter
from src.agents.orchestrator_agent import VerificationReport, audit_regions, verify_report
from src.agents.solver_agent import SearchForest
from src.core.config import PGDConfig, SolverConfig
from src.core.errors import VerifierError
from src.core.log import configure_logging
from src.core.verdict import SolverStats, Violated
from src.database.artifact_store import write_audit, write_dot, write_stats_json
from src.database.results_store import ResultsStore, RunRecord
from src.memory.clause_pool import AuditVerdict, ClausePool, audit_pool
from src.network.generators import conflict_gadget, depth_one_problem, random_suite
from src.network.nnet import read_nnet, write_nnet
from src.properties.parser import load_problem, write_property
from src.properties.problem import VerificationProblem

logger = logging.getLogger(__name__)

EXIT_HOLDS = 0
EXIT_VIOLATED = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3

EXIT_CODES = {"HOLDS": EXIT_HOLDS, "VIOLATED": EXIT_VIOLATED, "TIMEOUT": EXIT_UNKNOWN, "STALLED": EXIT_UNKNOWN}

MANIFEST_COLUMNS = ["net_path", "property_path", "timeout_s"]

INPUT_ERRORS = (VerifierError, OSError, ValidationError, ValueError)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; 2 already means TIMEOUT here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------
# Argument parsing
# ---------------------------------------------------

def _add_solver_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("solver")
    group.add_argument("--timeout", type=float, help="wall-clock budget per task in seconds")
    group.add_argument("--n-solvers", type=int, help="solver threads")
    group.add_argument("--m-analyzers", type=int, help="conflict analyzer threads")
    group.add_argument("--split-threshold", type=int, help="input bisection rounds (2**k regions)")
    group.add_argument("--branch", choices=["widest", "earliest"], help="branching heuristic")
    group.add_argument("--elastic-base", choices=["relaxed", "boxonly"], help="base LP of elastic filtering")
    group.add_argument("--deterministic", action="store_true", help="one solver, inline analysis")
    group.add_argument("--seed", type=int, help="seed for the attack restarts")
    group.add_argument("--pgd-prefilter", action="store_true", help="try a gradient attack before verifying")
    group.add_argument("--pgd-steps", type=int, help="ascent steps per attack restart")
    group.add_argument("--pgd-restarts", type=int, help="attack restarts")
    group.add_argument("--ablate-clauses", action="store_true",
                       help="also run with clause learning off and report its state count")
    group.add_argument("--dump-lp", type=Path, help="directory for LP dumps")
    group.add_argument("--normalize", action="store_true", help="fold NNet input normalization into the network")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdclverify", description="CDCL-style verification of ReLU networks.")
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    commands = parser.add_subparsers(dest="command", required=True)

    verify = commands.add_parser("verify", help="verify one property")
    verify.add_argument("--net", type=Path, required=True, help="NNet file")
    verify.add_argument("--property", type=Path, required=True, help="property file")
    verify.add_argument("--stats-out", type=Path, help="write the stats JSON here")
    verify.add_argument("--tree-out", type=Path, help="write the search forest as DOT here")
    verify.add_argument("--audit", action="store_true", help="re-check every pool clause after the run")
    verify.add_argument("--audit-out", type=Path, help="write the clause pool audit dump here")
    _add_solver_flags(verify)

    batch = commands.add_parser("batch", help="verify every task of a manifest")
    batch.add_argument("manifest", type=Path, help="CSV with columns net_path, property_path, timeout_s")
    batch.add_argument("--results-out", type=Path, default=Path("results.csv"), help="results CSV")
    _add_solver_flags(batch)

    info = commands.add_parser("info", help="print network dimensions")
    info.add_argument("--net", type=Path, required=True, help="NNet file")
    info.add_argument("--normalize", action="store_true")

    generate = commands.add_parser("generate", help="write a seeded suite of networks and properties")
    generate.add_argument("--out", type=Path, required=True, help="output directory")
    generate.add_argument("--count", type=int, default=10, help="random instances")
    generate.add_argument("--seed", type=int, default=0)
    generate.add_argument("--sizes", default="2,8,8,2", help="comma-separated layer widths, input first")
    generate.add_argument("--gadgets", type=int, default=0, help="also write conflict gadgets of size 1..K")
    generate.add_argument("--timeout", type=float, default=60.0, help="timeout_s written to the manifest")
    return parser


def build_config(args: argparse.Namespace, timeout: Optional[float] = None) -> SolverConfig:
    """SolverConfig from Settings with every flag the user passed applied on top."""
    pgd = None
    if args.pgd_steps is not None or args.pgd_restarts is not None:
        pgd = PGDConfig(**{
            key: value for key, value in (("steps", args.pgd_steps), ("restarts", args.pgd_restarts))
            if value is not None
        })
    return SolverConfig.from_settings(
        n_solvers=args.n_solvers,
        m_analyzers=args.m_analyzers,
        input_split_threshold=args.split_threshold,
        timeout=timeout if timeout is not None else args.timeout,
        seed=args.seed,
        deterministic=args.deterministic or None,
        branch_heuristic=args.branch,
        elastic_base=args.elastic_base,
        dump_lp_dir=args.dump_lp,
        pgd=pgd,
    )


# ---------------------------------------------------
# One task
# ---------------------------------------------------

@dataclass
class TaskOutcome:
    report: VerificationReport
    note: str = ""
    states_ablated: Optional[int] = None

    @property
    def label(self) -> str:
        return self.report.label


def _prefiltered(counterexample) -> VerificationReport:
    return VerificationReport(Violated(counterexample), SolverStats(), SearchForest(), ClausePool(), [])


def run_task(problem: VerificationProblem, config: SolverConfig, prefilter: bool = False, ablate: bool = False) -> TaskOutcome:
    """
    Attack (optionally), verify, and (optionally) rerun with learning off.

    A task settled by the attack is not verified and carries the note
    `prefilter`.
    """
    if prefilter:
        attack = pgd_prefilter(problem, config.pgd, seed=config.seed)
        if isinstance(attack, Found):
            return TaskOutcome(_prefiltered(attack.counterexample), note="prefilter")

    report = verify_report(problem, config)
    outcome = TaskOutcome(report)
    if ablate:
        baseline = verify_report(problem, config.ablated())
        outcome.states_ablated = baseline.stats.states_explored
        logger.info(
            "%s: %d states with learning, %d without",
            problem.name, report.stats.states_explored, outcome.states_ablated,
        )
    return outcome


def _print_counterexample(report: VerificationReport):
    cex = report.verdict.counterexample
    print("x = " + json.dumps([float(v) for v in cex.x]))
    print("y = " + json.dumps([float(v) for v in cex.y]))


def _audit(problem: VerificationProblem, report: VerificationReport) -> int:
    verdicts = audit_pool(problem, report.clause_pool, audit_regions(report))
    unsound = verdicts[AuditVerdict.UNSOUND]
    print(
        f"audit: {len(verdicts[AuditVerdict.SOUND])} sound, {len(unsound)} unsound, "
        f"{len(verdicts[AuditVerdict.INCONCLUSIVE])} inconclusive"
    )
    for clause in unsound:
        print(f"unsound clause {clause.id} {clause.origin.value} {clause}", file=sys.stderr)
    return len(unsound)


def run_single(args: argparse.Namespace) -> int:
    """The `verify` command."""
    try:
        config = build_config(args)
        problem = load_problem(args.net, args.property, apply_normalization=args.normalize)
        outcome = run_task(problem, config, prefilter=args.pgd_prefilter, ablate=args.ablate_clauses)
    except INPUT_ERRORS as exc:
        print(f"cdclverify: {exc}", file=sys.stderr)
        return EXIT_USAGE

    report = outcome.report
    print(outcome.label)
    if isinstance(report.verdict, Violated):
        _print_counterexample(report)
    if outcome.states_ablated is not None:
        print(f"states: {report.stats.states_explored} (learning off: {outcome.states_ablated})")

    try:
        if args.stats_out is not None:
            payload = report.stats_payload()
            payload["note"] = outcome.note
            if outcome.states_ablated is not None:
                payload["states_ablated"] = outcome.states_ablated
            write_stats_json(args.stats_out, payload)
        if args.tree_out is not None:
            write_dot(args.tree_out, report.forest, title=problem.name)
        if args.audit_out is not None:
            write_audit(args.audit_out, report.clause_pool)
    except OSError as exc:
        print(f"cdclverify: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.audit:
        _audit(problem, report)
    return EXIT_CODES[outcome.label]


# ---------------------------------------------------
# Batch
# ---------------------------------------------------

def read_manifest(path: Path) -> pd.DataFrame:
    """
    Load a batch manifest.

    Raises:
        ValueError: when a required column is missing.
    """
    frame = pd.read_csv(path, dtype={"net_path": str, "property_path": str})
    missing = [column for column in MANIFEST_COLUMNS[:2] if column not in frame.columns]
    if missing:
        raise ValueError(f"manifest {path} lacks columns {missing}")
    if "timeout_s" not in frame.columns:
        frame["timeout_s"] = np.nan
    return frame[MANIFEST_COLUMNS]


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base / path


def run_batch(args: argparse.Namespace) -> int:
    """The `batch` command; tasks run one after another."""
    try:
        manifest = read_manifest(args.manifest)
        build_config(args)
    except INPUT_ERRORS as exc:
        print(f"cdclverify: {exc}", file=sys.stderr)
        return EXIT_USAGE

    base = args.manifest.parent
    store = ResultsStore(args.results_out)
    for task in manifest.itertuples(index=False):
        net, prop = task.net_path, task.property_path
        timeout = float(task.timeout_s) if pd.notna(task.timeout_s) and task.timeout_s > 0 else None
        try:
            config = build_config(args, timeout=timeout)
            problem = load_problem(_resolve(base, net), _resolve(base, prop), apply_normalization=args.normalize)
            started = time.monotonic()
            outcome = run_task(problem, config, prefilter=args.pgd_prefilter, ablate=args.ablate_clauses)
            elapsed = time.monotonic() - started
        except INPUT_ERRORS as exc:
            logger.error("task %s | %s failed: %s", net, prop, exc)
            store.append(RunRecord.error(net, prop, str(exc)))
            continue
        store.append(RunRecord.from_stats(
            net, prop, outcome.label, outcome.report.stats,
            time_s=0.0 if config.deterministic else round(elapsed, 6),
            note=outcome.note,
            states_ablated=outcome.states_ablated,
        ))

    try:
        store.save()
    except OSError as exc:
        print(f"cdclverify: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{len(store)} of {len(manifest)} tasks recorded in {store.path}")
    return 0 if len(store) == len(manifest) else 1


# ---------------------------------------------------
# Info / generate
# ---------------------------------------------------

def run_info(args: argparse.Namespace) -> int:
    try:
        network = read_nnet(args.net, apply_normalization=args.normalize)
    except INPUT_ERRORS as exc:
        print(f"cdclverify: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for key, value in network.describe().items():
        print(f"{key}: {value}")
    lower, upper = network.default_box()
    print(f"input_box: {json.dumps(lower.tolist())} .. {json.dumps(upper.tolist())}")
    return 0


def generate_suite(
    out: Path,
    count: int,
    seed: int,
    sizes: Sequence[int],
    gadgets: int = 0,
    timeout: float = 60.0,
) -> Path:
    """
    Write a seeded suite and its manifest; returns the manifest path.

    Manifest paths are relative to the manifest's directory.
    """
    problems: List[VerificationProblem] = list(random_suite(seed, count, sizes))
    problems.extend(conflict_gadget(k) for k in range(1, gadgets + 1))
    if gadgets:
        problems.append(depth_one_problem())

    rows = []
    for problem in problems:
        net = Path("nets") / f"{problem.name}.nnet"
        prop = Path("properties") / f"{problem.name}.prop"
        (out / net).parent.mkdir(parents=True, exist_ok=True)
        write_nnet(problem.network, out / net, comment=problem.name)
        write_property(problem, out / prop, comment=problem.name)
        rows.append({"net_path": net.as_posix(), "property_path": prop.as_posix(), "timeout_s": timeout})

    manifest = out / "manifest.csv"
    pd.DataFrame(rows, columns=MANIFEST_COLUMNS).to_csv(manifest, index=False, lineterminator="\n")
    logger.info("wrote %d tasks to %s", len(rows), manifest)
    return manifest


def run_generate(args: argparse.Namespace) -> int:
    try:
        sizes = [int(part) for part in args.sizes.split(",") if part.strip()]
        manifest = generate_suite(args.out, args.count, args.seed, sizes, args.gadgets, args.timeout)
    except INPUT_ERRORS as exc:
        print(f"cdclverify: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(manifest)
    return 0


COMMANDS = {
    "verify": run_single,
    "batch": run_batch,
    "info": run_info,
    "generate": run_generate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
