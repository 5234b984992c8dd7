"""Command-line interface.

Exit codes: 0 success, 1 partial (some inputs invalid or a grasp set is
short of trials), 2 input error, 3 setup discarded, 4 scoring error,
5 geometry error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .errors import BenchError, DisconnectedVertices, ParseError
from .geometry.contact import DEFAULT_CONTACT_TOLERANCE
from .geometry.geodesic import GeodesicMethod, GeodesicSolver
from .mesh import validate_mesh
from .meshio import load_mesh
from .pose import Pose
from .protocol import (
    GraspSet,
    ScoringOptions,
    check_grasp_set,
    load_task,
    load_trial,
    load_trial_bundle,
    score_trial_safe,
    validate_setup,
)
from .reporting.emit import FORMATS, emit_report
from .reporting.stats import QUANTILE_METHOD
from .reporting.summary import (
    GROUP_KEYS,
    build_report,
    check_contact_consistency,
    format_metric_table,
    format_summary_table,
)

EXIT_OK, EXIT_PARTIAL, EXIT_INPUT, EXIT_DISCARD, EXIT_SCORING, EXIT_GEOMETRY = range(6)

DEFAULTS = {
    "contact_tolerance": DEFAULT_CONTACT_TOLERANCE,
    "geodesic_method": GeodesicMethod.EDGE_DIJKSTRA.value,
    "formats": list(FORMATS),
    "output_dir": "report",
    "quantile_method": QUANTILE_METHOD,
    "group_by": "task",
    "jobs": 1,
}

SCHEMA_NOTE = (
    "Task/trial/report schema version: 1. Poses are [x, y, z, qw, qx, qy, qz] in "
    "meters, scalar-first quaternions. Summary CSV columns: label, drops_pct, "
    "err_pos_cm, err_pos_pct, err_or_pct, g_euc_cm, g_geo_cm, g_min_cm, offline_s, "
    "plan_s, exec_s (absent metrics are empty). Exit codes: 0 ok, 1 partial, "
    "2 input error, 3 setup discarded, 4 scoring error, 5 geometry error."
)

log = logging.getLogger("inhand_bench")


class RunConfig:
    """Effective settings: command-line flags over config file over defaults."""

    def __init__(self, args: argparse.Namespace):
        file_cfg = {}
        if getattr(args, "config", None):
            with open(args.config, "r", encoding="utf-8") as fh:
                file_cfg = json.load(fh)
            unknown = set(file_cfg) - set(DEFAULTS)
            if unknown:
                raise ValueError(f"unknown config key(s): {', '.join(sorted(unknown))}")

        def pick(key, flag_value):
            if flag_value is not None:
                return flag_value
            return file_cfg.get(key, DEFAULTS[key])

        self.contact_tolerance = float(pick("contact_tolerance", getattr(args, "contact_tolerance", None)))
        if not self.contact_tolerance >= 0:
            raise ValueError("contact tolerance must be >= 0")
        self.geodesic_method = GeodesicMethod.parse(pick("geodesic_method", getattr(args, "geodesic_method", None)))
        formats = pick("formats", getattr(args, "format", None))
        if isinstance(formats, str):
            formats = [f.strip() for f in formats.split(",") if f.strip()]
        bad = set(f.lower() for f in formats) - set(FORMATS)
        if bad:
            raise ValueError(f"unknown report format(s): {', '.join(sorted(bad))}")
        self.formats = [f.lower() for f in formats]
        self.output_dir = Path(pick("output_dir", getattr(args, "out", None)))
        self.quantile_method = pick("quantile_method", getattr(args, "quantile_method", None))
        if self.quantile_method != QUANTILE_METHOD:
            raise ValueError(f"only quantile method {QUANTILE_METHOD!r} is supported")
        self.group_by = pick("group_by", getattr(args, "group_by", None))
        if self.group_by not in GROUP_KEYS:
            raise ValueError(f"group_by must be one of {sorted(GROUP_KEYS)}")
        self.jobs = max(1, int(pick("jobs", getattr(args, "jobs", None))))

    @property
    def scoring(self) -> ScoringOptions:
        return ScoringOptions(self.contact_tolerance, self.geodesic_method)


# --- subcommands -----------------------------------------------------------


def cmd_validate_mesh(args) -> int:
    statuses = []
    for path in args.paths:
        try:
            mesh = load_mesh(path, format=args.mesh_format, units=args.units)
        except ParseError as exc:
            print(f"{path}: PARSE ERROR: {exc}")
            statuses.append("error")
            continue
        except BenchError as exc:
            print(f"{path}: INVALID: {type(exc).__name__}: {exc}")
            statuses.append("invalid")
            continue
        report = validate_mesh(mesh)
        status = "valid" if report.is_valid else "invalid"
        statuses.append(status)
        print(f"{path}: {status.upper()}")
        for key, value in report.as_dict().items():
            if key == "degenerate_face_indices":
                value = f"{len(value)} {value[:10]}{' ...' if len(value) > 10 else ''}"
            print(f"  {key}: {value}")
    if all(s == "valid" for s in statuses):
        return EXIT_OK
    if all(s == "error" for s in statuses):
        return EXIT_INPUT
    return EXIT_PARTIAL


def cmd_check_setup(args, cfg: RunConfig) -> int:
    try:
        task = load_task(args.task, cfg.contact_tolerance)
        trial = load_trial(args.trial) if args.trial else None
        pose = Pose.from_list(args.pose) if args.pose else (trial.setup_pose if trial else None)
        links = trial.initial_link_placements if trial else None
    except BenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        check = validate_setup(task, pose, links, cfg.contact_tolerance)
    except BenchError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    if check.position_pct is not None:
        print(
            f"{check.status.value}  position {check.position_pct:.3f}%  "
            f"orientation {check.orientation_pct:.3f}%  (threshold 10%)"
        )
    else:
        print(
            f"{check.status.value}  initial contact error {check.contact_error * 100:.3f} cm "
            f"(tolerance {cfg.contact_tolerance * 100:.3f} cm)"
        )
    return EXIT_OK if check.accepted else EXIT_DISCARD


def _load_pairs(items, cfg):
    if len(items) % 2:
        raise ValueError("eval expects TASK BUNDLE pairs")
    pairs = []
    for task_path, bundle in zip(items[::2], items[1::2]):
        task = load_task(task_path, cfg.contact_tolerance)
        trials = load_trial_bundle(bundle)
        foreign = sorted({t.task_id for t in trials} - {task.task_id})
        if foreign:
            raise ValueError(f"{bundle}: trials for other task(s) {foreign} (expected {task.task_id!r})")
        pairs.append((task, trials))
    return pairs


def cmd_eval(args, cfg: RunConfig) -> int:
    try:
        pairs = _load_pairs(args.inputs, cfg)
    except (BenchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    jobs = []
    for task, trials in pairs:
        solver = None
        if task.level.has_contact_goal:
            solver = GeodesicSolver(task.object, cfg.geodesic_method)
        jobs.extend((task, trial, solver) for trial in trials)

    def run(job):
        task, trial, solver = job
        return score_trial_safe(task, trial, cfg.scoring, solver)

    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        scores = list(pool.map(run, jobs))

    code = EXIT_OK
    failed = [s for s in scores if s.error]
    for s in failed:
        print(f"scoring error: task {s.task_id} trial {s.trial_index}: {s.error}", file=sys.stderr)

    compliance = []
    offset = 0
    for task, trials in pairs:
        own = scores[offset: offset + len(trials)]
        offset += len(trials)
        rep = check_grasp_set(GraspSet(task.task_id, trials, own))
        compliance.append(rep)
        if not rep.compliant:
            print(
                f"grasp set {task.task_id}: {rep.n_valid} valid trial(s), "
                f"{rep.shortfall} short of 5 ({rep.n_discarded} discarded)",
                file=sys.stderr,
            )
            code = EXIT_PARTIAL

    for row in check_contact_consistency(scores):
        print(f"warning: G_geo < G_euc for task {row.task_id} trial {row.trial_index}", file=sys.stderr)

    report = build_report(
        scores,
        cfg.contact_tolerance,
        cfg.geodesic_method,
        cfg.group_by,
        {
            "grasp_sets": [
                {
                    "task_id": c.task_id,
                    "n_valid": c.n_valid,
                    "n_discarded": c.n_discarded,
                    "n_dropped": c.n_dropped,
                    "n_failed": c.n_failed,
                    "compliant": c.compliant,
                }
                for c in compliance
            ]
        },
    )
    try:
        emit_report(report, cfg.output_dir, cfg.formats)
    except BenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.table == "metrics":
        print(format_metric_table(report.rows))
    else:
        print(format_summary_table(report.rows))
    if failed:
        return EXIT_SCORING
    return code


def cmd_geodesic(args, cfg: RunConfig) -> int:
    try:
        mesh = load_mesh(args.mesh, units=args.units)
    except BenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    solver = GeodesicSolver(mesh, cfg.geodesic_method)
    try:
        d = solver.distance(args.a, args.b)
    except IndexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DisconnectedVertices as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    print(f"{d!r} m  ({d * 100:.3f} cm)  [{cfg.geodesic_method.value}]")
    return EXIT_OK


# --- parser ----------------------------------------------------------------


def _add_run_options(p, report: bool = False):
    p.add_argument("--config", help="JSON config file; command-line flags override it")
    p.add_argument(
        "--contact-tolerance", type=float, metavar="M",
        help=f"proximity (m) at which surfaces count as touching (default {DEFAULT_CONTACT_TOLERANCE})",
    )
    p.add_argument(
        "--geodesic-method", choices=[m.value for m in GeodesicMethod],
        help="surface distance approximation (default EDGE_DIJKSTRA)",
    )
    if report:
        p.add_argument("--format", help="comma-separated subset of csv,json,svg (default all)")
        p.add_argument("--out", help="output directory (default ./report)")
        p.add_argument(
            "--quantile-method", choices=[QUANTILE_METHOD],
            help="quartile convention recorded in the report (default linear)",
        )
        p.add_argument("--group-by", choices=sorted(GROUP_KEYS), help="summary grouping (default task)")
        p.add_argument("--jobs", type=int, help="trials scored in parallel (default 1)")
        p.add_argument(
            "--table", choices=["summary", "metrics"], default="summary",
            help="stdout layout: one row per group, or metrics as rows (default summary)",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inhand-bench",
        description="Score in-hand manipulation benchmark trials and build reports.",
        epilog=SCHEMA_NOTE,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-mesh", help="check mesh files", epilog=SCHEMA_NOTE)
    p.add_argument("paths", nargs="+", help="OBJ/PLY/STL files")
    p.add_argument("--mesh-format", default="auto", choices=["auto", "obj", "ply", "stl"],
                   help="input format (default: from extension)")
    p.add_argument("--units", type=float, default=1.0, help="meters per file unit (default 1.0)")
    p.set_defaults(func=lambda a, c: cmd_validate_mesh(a), needs_config=False)

    p = sub.add_parser("check-setup", help="accept or discard an initial grasp setup", epilog=SCHEMA_NOTE)
    p.add_argument("task", help="task file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pose", nargs=7, type=float, metavar="V", help="setup pose x y z qw qx qy qz")
    src.add_argument("--trial", help="trial file supplying setup_pose / initial_link_placements")
    _add_run_options(p)
    p.set_defaults(func=cmd_check_setup, needs_config=True)

    p = sub.add_parser("eval", help="score trial bundles and write reports", epilog=SCHEMA_NOTE)
    p.add_argument("inputs", nargs="+", metavar="TASK BUNDLE", help="task file and trial directory, repeatable")
    _add_run_options(p, report=True)
    p.set_defaults(func=cmd_eval, needs_config=True)

    p = sub.add_parser("geodesic", help="surface distance between two mesh vertices", epilog=SCHEMA_NOTE)
    p.add_argument("mesh")
    p.add_argument("a", type=int)
    p.add_argument("b", type=int)
    p.add_argument("--units", type=float, default=1.0, help="meters per file unit (default 1.0)")
    _add_run_options(p)
    p.set_defaults(func=cmd_geodesic, needs_config=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    cfg = None
    if args.needs_config:
        try:
            cfg = RunConfig(args)
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    return args.func(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
