"""Benchmark tasks, trial records, the setup gate and per-trial scoring.

Task and trial files are JSON documents. Mesh references are resolved
relative to the file that names them and carry an explicit ``units`` scale
(meters per file unit).

Task file::

    {
      "schema_version": 1,
      "task_id": "gelatin-box-01",
      "level": "III",
      "object_name": "gelatin box",                     # optional
      "object_mesh": {"path": "object.obj", "units": 1.0},
      "initial_region": {"path": "ci.obj", "units": 1.0},  # Levels II, III
      "desired_region": {"path": "cd.obj", "units": 1.0},  # Levels II, III
      "initial_hand_pose": [x, y, z, qw, qx, qy, qz],      # Levels I, III
      "desired_hand_pose": [x, y, z, qw, qx, qy, qz]       # Levels I, III
    }

Trial file::

    {
      "schema_version": 1,
      "task_id": "gelatin-box-01",
      "trial_index": 1,
      "method": "DMG",                                   # optional label
      "setup_pose": [...],                               # Levels I, III
      "reached_pose": [...] | null,                      # null when dropped
      "link_placements": [{"mesh": {"path": ..., "units": ...}, "pose": [...]}],
      "initial_link_placements": [...],                  # Level II setup check
      "planning_time": 0.02, "offline_time": 10.3, "execution_time": 1.67,
      "outcome": "SUCCESS" | "DROPPED" | "FAILED_OTHER",
      "cause": "",
      "stability_attested": true
    }
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import (
    BenchError,
    DegenerateTask,
    MeshError,
    MeshResolutionError,
    MissingField,
    MissingLinkPlacements,
    SchemaError,
)
from .geometry.contact import (
    DEFAULT_CONTACT_TOLERANCE,
    ContactMetric,
    contact_region_result,
    max_min_distance,
)
from .geometry.geodesic import GeodesicMethod, GeodesicSolver
from .geometry.intersect import intersect
from .mesh import TriangleMesh, g_min, validate_mesh
from .meshio import load_mesh
from .pose import (
    Pose,
    RigidTransform,
    orientation_error_pct,
    position_error,
    position_error_pct,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

#: Setups deviating by more than this percentage are discarded.
SETUP_THRESHOLD_PCT = 10.0

#: Minimum number of executions per grasp set.
TRIALS_PER_GRASP_SET = 5


class Level(str, enum.Enum):
    I = "I"  # noqa: E741
    II = "II"
    III = "III"

    @classmethod
    def parse(cls, value) -> "Level":
        key = str(value).strip().upper()
        aliases = {"1": "I", "2": "II", "3": "III"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise SchemaError(f"level must be one of I, II, III; got {value!r}") from None

    @property
    def has_pose_goal(self) -> bool:
        return self in (Level.I, Level.III)

    @property
    def has_contact_goal(self) -> bool:
        return self in (Level.II, Level.III)


class Outcome(str, enum.Enum):
    SUCCESS = "SUCCESS"
    DROPPED = "DROPPED"
    FAILED_OTHER = "FAILED_OTHER"


class SetupStatus(str, enum.Enum):
    ACCEPT = "ACCEPT"
    DISCARD = "DISCARD"


@dataclass(frozen=True)
class MeshRef:
    path: Path
    units: float = 1.0

    def load(self) -> TriangleMesh:
        try:
            return load_mesh(self.path, units=self.units)
        except (MeshError, OSError) as exc:
            raise MeshResolutionError(f"cannot load mesh {self.path}: {exc}") from exc

    def to_json(self, base: Path) -> dict:
        try:
            rel = self.path.relative_to(base)
        except ValueError:
            rel = self.path
        return {"path": rel.as_posix(), "units": self.units}


def _mesh_ref(value, base: Path, what: str) -> MeshRef:
    if isinstance(value, str):
        value = {"path": value}
    if not isinstance(value, dict) or "path" not in value:
        raise SchemaError(f"{what} must be an object with a 'path' field")
    units = value.get("units", 1.0)
    if not isinstance(units, (int, float)) or not units > 0:
        raise SchemaError(f"{what}.units must be a positive number")
    return MeshRef(base / value["path"], float(units))


@dataclass
class TaskDefinition:
    task_id: str
    level: Level
    object_mesh: MeshRef
    initial_region: Optional[MeshRef] = None
    desired_region: Optional[MeshRef] = None
    initial_hand_pose: Optional[Pose] = None
    desired_hand_pose: Optional[Pose] = None
    object_name: str = ""
    warnings: list = field(default_factory=list)
    # resolved meshes
    object: Optional[TriangleMesh] = field(default=None, repr=False)
    initial_region_mesh: Optional[TriangleMesh] = field(default=None, repr=False)
    desired_region_mesh: Optional[TriangleMesh] = field(default=None, repr=False)

    def check_fields(self) -> None:
        """Raise :class:`MissingField` if a field the level needs is absent."""
        if self.level.has_pose_goal:
            for name in ("initial_hand_pose", "desired_hand_pose"):
                if getattr(self, name) is None:
                    raise MissingField(f"Level {self.level.value} task requires {name}")
        if self.level.has_contact_goal:
            for name in ("initial_region", "desired_region"):
                if getattr(self, name) is None:
                    raise MissingField(f"Level {self.level.value} task requires {name}")

    def resolve(self, tolerance: float = DEFAULT_CONTACT_TOLERANCE) -> None:
        """Load and validate every referenced mesh."""
        self.object = self.object_mesh.load()
        report = validate_mesh(self.object)
        if report.degenerate_face_indices:
            self.warnings.append(
                f"object mesh has {len(report.degenerate_face_indices)} degenerate face(s); "
                "they are ignored by contact queries"
            )
        if self.level is Level.I:
            if self.desired_region is not None:
                self.warnings.append("Level I task: desired_region is ignored")
            return
        if self.initial_region is not None:
            self.initial_region_mesh = self.initial_region.load()
        if self.desired_region is not None:
            self.desired_region_mesh = self.desired_region.load()
            if intersect(self.desired_region_mesh, self.object, tolerance).is_empty:
                self.warnings.append(
                    f"desired region does not meet the object within {tolerance} m; "
                    "contact scoring will fail"
                )


def parse_task(doc: dict, base: Path) -> TaskDefinition:
    if not isinstance(doc, dict):
        raise SchemaError("task document must be a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported or missing schema_version (expected {SCHEMA_VERSION})")
    for key in ("task_id", "level", "object_mesh"):
        if key not in doc:
            raise MissingField(f"task is missing {key!r}")
    level = Level.parse(doc["level"])
    obj = _mesh_ref(doc["object_mesh"], base, "object_mesh")

    def opt_ref(key):
        return _mesh_ref(doc[key], base, key) if doc.get(key) is not None else None

    def opt_pose(key):
        return Pose.from_list(doc[key]) if doc.get(key) is not None else None

    task = TaskDefinition(
        task_id=str(doc["task_id"]),
        level=level,
        object_mesh=obj,
        initial_region=opt_ref("initial_region"),
        desired_region=opt_ref("desired_region"),
        initial_hand_pose=opt_pose("initial_hand_pose"),
        desired_hand_pose=opt_pose("desired_hand_pose"),
        object_name=str(doc.get("object_name") or obj.path.stem),
    )
    task.check_fields()
    return task


def _read_json(path: Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def load_task(path, tolerance: float = DEFAULT_CONTACT_TOLERANCE) -> TaskDefinition:
    path = Path(path)
    task = parse_task(_read_json(path), path.parent)
    task.resolve(tolerance)
    for w in task.warnings:
        logger.warning("%s: %s", path, w)
    return task


def task_to_json(task: TaskDefinition, base: Path) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "task_id": task.task_id,
        "level": task.level.value,
        "object_name": task.object_name,
        "object_mesh": task.object_mesh.to_json(base),
    }
    for key in ("initial_region", "desired_region"):
        ref = getattr(task, key)
        if ref is not None:
            doc[key] = ref.to_json(base)
    for key in ("initial_hand_pose", "desired_hand_pose"):
        pose = getattr(task, key)
        if pose is not None:
            doc[key] = pose.to_list()
    return doc


# --- trials ----------------------------------------------------------------


@dataclass(frozen=True)
class LinkPlacement:
    mesh: MeshRef
    pose: Pose

    def posed_mesh(self) -> TriangleMesh:
        """The link mesh expressed in the object frame."""
        link = self.mesh.load()
        t = RigidTransform.from_pose(self.pose)
        return TriangleMesh(t.apply_points(link.vertices), link.faces, name=link.name)


@dataclass
class TrialRecord:
    task_id: str
    trial_index: int
    outcome: Outcome = Outcome.SUCCESS
    setup_pose: Optional[Pose] = None
    reached_pose: Optional[Pose] = None
    link_placements: list = field(default_factory=list)
    initial_link_placements: list = field(default_factory=list)
    planning_time: Optional[float] = None
    offline_time: Optional[float] = None
    execution_time: Optional[float] = None
    cause: str = ""
    stability_attested: bool = False
    method: str = ""

    def __post_init__(self):
        if self.trial_index < 1:
            raise SchemaError(f"trial_index must be >= 1, got {self.trial_index}")
        if self.outcome is Outcome.SUCCESS and self.reached_pose is None:
            raise MissingField(f"trial {self.trial_index}: SUCCESS requires reached_pose")


def _placements(items, base: Path, what: str) -> list:
    out = []
    for k, item in enumerate(items or []):
        if not isinstance(item, dict) or "mesh" not in item or "pose" not in item:
            raise SchemaError(f"{what}[{k}] needs 'mesh' and 'pose'")
        out.append(LinkPlacement(_mesh_ref(item["mesh"], base, f"{what}[{k}].mesh"), Pose.from_list(item["pose"])))
    return out


def _opt_float(doc, key):
    value = doc.get(key)
    if value is None:
        return None
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise SchemaError(f"{key} must be a number")
    return float(value)


def parse_trial(doc: dict, base: Path) -> TrialRecord:
    if not isinstance(doc, dict):
        raise SchemaError("trial document must be a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(f"unsupported or missing schema_version (expected {SCHEMA_VERSION})")
    for key in ("task_id", "trial_index", "outcome"):
        if key not in doc:
            raise MissingField(f"trial is missing {key!r}")
    try:
        outcome = Outcome(str(doc["outcome"]).upper())
    except ValueError:
        raise SchemaError(f"unknown outcome {doc['outcome']!r}") from None
    return TrialRecord(
        task_id=str(doc["task_id"]),
        trial_index=int(doc["trial_index"]),
        outcome=outcome,
        setup_pose=Pose.from_list(doc["setup_pose"]) if doc.get("setup_pose") is not None else None,
        reached_pose=Pose.from_list(doc["reached_pose"]) if doc.get("reached_pose") is not None else None,
        link_placements=_placements(doc.get("link_placements"), base, "link_placements"),
        initial_link_placements=_placements(doc.get("initial_link_placements"), base, "initial_link_placements"),
        planning_time=_opt_float(doc, "planning_time"),
        offline_time=_opt_float(doc, "offline_time"),
        execution_time=_opt_float(doc, "execution_time"),
        cause=str(doc.get("cause") or ""),
        stability_attested=bool(doc.get("stability_attested", False)),
        method=str(doc.get("method") or ""),
    )


def trial_to_json(trial: TrialRecord, base: Path) -> dict:
    def placements(items):
        return [{"mesh": p.mesh.to_json(base), "pose": p.pose.to_list()} for p in items]

    doc = {
        "schema_version": SCHEMA_VERSION,
        "task_id": trial.task_id,
        "trial_index": trial.trial_index,
        "method": trial.method,
        "setup_pose": trial.setup_pose.to_list() if trial.setup_pose else None,
        "reached_pose": trial.reached_pose.to_list() if trial.reached_pose else None,
        "link_placements": placements(trial.link_placements),
        "planning_time": trial.planning_time,
        "offline_time": trial.offline_time,
        "execution_time": trial.execution_time,
        "outcome": trial.outcome.value,
        "cause": trial.cause,
        "stability_attested": trial.stability_attested,
    }
    if trial.initial_link_placements:
        doc["initial_link_placements"] = placements(trial.initial_link_placements)
    return doc


def load_trial(path) -> TrialRecord:
    path = Path(path)
    try:
        return parse_trial(_read_json(path), path.parent)
    except SchemaError as exc:
        if str(exc).startswith(str(path)):
            raise
        raise type(exc)(f"{path}: {exc}") from exc


def load_trial_bundle(directory) -> list:
    """All trial records (``*.json``) in a bundle directory, by trial index."""
    directory = Path(directory)
    if not directory.is_dir():
        raise SchemaError(f"trial bundle {directory} is not a directory")
    trials = [load_trial(p) for p in sorted(directory.glob("*.json"))]
    if not trials:
        raise SchemaError(f"trial bundle {directory} contains no trial files")
    seen = set()
    for t in trials:
        key = (t.task_id, t.trial_index)
        if key in seen:
            raise SchemaError(f"{directory}: duplicate trial {t.task_id}#{t.trial_index}")
        seen.add(key)
    return sorted(trials, key=lambda t: (t.task_id, t.trial_index))


@dataclass
class GraspSet:
    task_id: str
    trials: list = field(default_factory=list)
    scores: Optional[list] = None


# --- setup gate ------------------------------------------------------------


@dataclass(frozen=True)
class SetupCheck:
    status: SetupStatus
    position_pct: Optional[float] = None
    orientation_pct: Optional[float] = None
    position_error: Optional[float] = None  # m
    contact_error: Optional[float] = None  # m, Level II containment check

    @property
    def accepted(self) -> bool:
        return self.status is SetupStatus.ACCEPT


def validate_setup(
    task: TaskDefinition,
    setup_pose: Optional[Pose] = None,
    initial_links=None,
    tolerance: float = DEFAULT_CONTACT_TOLERANCE,
) -> SetupCheck:
    """Accept or discard a human/robot setup of the initial grasp.

    Levels I and III compare the setup pose with the task's initial pose;
    the experiment is discarded when either percentage exceeds 10 %. The
    position percentage is relative to the initial-to-desired distance.

    Level II tasks define no hand pose, so the check is instead that every
    initial link contact lies within the initial region, i.e. the contact
    region error against ``C_i`` does not exceed ``tolerance``.
    """
    if task.level.has_pose_goal:
        if setup_pose is None:
            raise MissingField("setup pose is required for a pose-level task")
        s_i, s_d = task.initial_hand_pose.s, task.desired_hand_pose.s
        travel = position_error(s_i, s_d)
        if travel == 0.0:
            raise DegenerateTask("initial and desired positions coincide")
        pos_pct = 100.0 * position_error(s_i, setup_pose.s) / travel
        or_pct = orientation_error_pct(setup_pose.q, task.initial_hand_pose.q)
        bad = pos_pct > SETUP_THRESHOLD_PCT or or_pct > SETUP_THRESHOLD_PCT
        return SetupCheck(
            SetupStatus.DISCARD if bad else SetupStatus.ACCEPT,
            position_pct=pos_pct,
            orientation_pct=or_pct,
            position_error=position_error(s_i, setup_pose.s),
        )

    if not initial_links:
        raise MissingLinkPlacements("Level II setup check needs initial link placements")
    if task.object is None or task.initial_region_mesh is None:
        raise MeshResolutionError("task meshes are not resolved; use load_task()")
    links = [p.posed_mesh() if isinstance(p, LinkPlacement) else p for p in initial_links]
    err = contact_region_result(
        task.object, links, task.initial_region_mesh, ContactMetric.EUCLIDEAN, tolerance
    ).max_d
    return SetupCheck(
        SetupStatus.ACCEPT if err <= tolerance else SetupStatus.DISCARD,
        contact_error=err,
    )


# --- scoring ---------------------------------------------------------------


@dataclass(frozen=True)
class ScoringOptions:
    contact_tolerance: float = DEFAULT_CONTACT_TOLERANCE
    geodesic_method: GeodesicMethod = GeodesicMethod.EDGE_DIJKSTRA


@dataclass(frozen=True)
class TrialScore:
    """One per-trial report row. Lengths in meters; absent metrics are None."""

    task_id: str
    trial_index: int
    label: str
    object_name: str
    level: str
    outcome: str
    cause: str = ""
    discarded: bool = False
    setup_status: Optional[str] = None
    setup_err_pos: Optional[float] = None
    setup_err_pos_pct: Optional[float] = None
    setup_err_or_pct: Optional[float] = None
    setup_contact_error: Optional[float] = None
    err_pos: Optional[float] = None
    err_pos_pct: Optional[float] = None
    err_or_pct: Optional[float] = None
    g_euc: Optional[float] = None
    g_geo: Optional[float] = None
    g_min: Optional[float] = None
    planning_time: Optional[float] = None
    offline_time: Optional[float] = None
    execution_time: Optional[float] = None
    error: Optional[str] = None

    @property
    def is_scored_success(self) -> bool:
        return self.outcome == Outcome.SUCCESS.value and not self.discarded and self.error is None


POSE_FIELDS = ("err_pos", "err_pos_pct", "err_or_pct")
CONTACT_FIELDS = ("g_euc", "g_geo", "g_min")


def pose_metrics(task: TaskDefinition, reached: Pose) -> dict:
    s_i, s_d = task.initial_hand_pose.s, task.desired_hand_pose.s
    return {
        "err_pos": position_error(s_d, reached.s),
        "err_pos_pct": position_error_pct(s_i, s_d, reached.s),
        "err_or_pct": orientation_error_pct(task.desired_hand_pose.q, reached.q),
    }


def contact_metrics(
    task: TaskDefinition,
    links,
    options: ScoringOptions = ScoringOptions(),
    solver: Optional[GeodesicSolver] = None,
) -> dict:
    if not links:
        raise MissingLinkPlacements("contact scoring needs reached link placements")
    obj = task.object
    posed = [p.posed_mesh() if isinstance(p, LinkPlacement) else p for p in links]
    euc = contact_region_result(
        obj, posed, task.desired_region_mesh, ContactMetric.EUCLIDEAN, options.contact_tolerance
    )
    if solver is None:
        solver = GeodesicSolver(obj, options.geodesic_method)
    # Same projected vertex sets for both metrics.
    geo, _ = max_min_distance(
        obj, euc.contact_vertices, euc.region_vertices, ContactMetric.GEODESIC, solver
    )
    return {"g_euc": euc.max_d, "g_geo": geo, "g_min": g_min(obj)}


def score_trial(
    task: TaskDefinition,
    trial: TrialRecord,
    obj: Optional[TriangleMesh] = None,
    options: ScoringOptions = ScoringOptions(),
    solver: Optional[GeodesicSolver] = None,
) -> TrialScore:
    """Score one trial. Errors from geometry propagate to the caller.

    Only the metrics of the task's level are filled in; the rest stay None.
    Dropped and failed trials, and trials whose setup was discarded, carry
    no error metrics.
    """
    if obj is not None and task.object is None:
        task.object = obj
    if trial.task_id != task.task_id:
        raise SchemaError(f"trial belongs to task {trial.task_id!r}, not {task.task_id!r}")
    row = TrialScore(
        task_id=task.task_id,
        trial_index=trial.trial_index,
        label=trial.method,
        object_name=task.object_name,
        level=task.level.value,
        outcome=trial.outcome.value,
        cause=trial.cause,
        planning_time=trial.planning_time,
        offline_time=trial.offline_time,
        execution_time=trial.execution_time,
    )

    check = None
    if task.level.has_pose_goal and trial.setup_pose is not None:
        check = validate_setup(task, trial.setup_pose, tolerance=options.contact_tolerance)
    elif task.level is Level.II and trial.initial_link_placements:
        check = validate_setup(task, None, trial.initial_link_placements, options.contact_tolerance)
    if check is not None:
        row = replace(
            row,
            setup_status=check.status.value,
            setup_err_pos=check.position_error,
            setup_err_pos_pct=check.position_pct,
            setup_err_or_pct=check.orientation_pct,
            setup_contact_error=check.contact_error,
            discarded=not check.accepted,
        )
    if row.discarded or trial.outcome is not Outcome.SUCCESS:
        return row

    values = {}
    if task.level.has_pose_goal:
        values.update(pose_metrics(task, trial.reached_pose))
    if task.level.has_contact_goal:
        values.update(contact_metrics(task, trial.link_placements, options, solver))
    return replace(row, **values)


def score_trial_safe(task, trial, options=ScoringOptions(), solver=None) -> TrialScore:
    """Like :func:`score_trial` but records a failure on the row instead of raising."""
    try:
        return score_trial(task, trial, options=options, solver=solver)
    except BenchError as exc:
        return TrialScore(
            task_id=task.task_id,
            trial_index=trial.trial_index,
            label=trial.method,
            object_name=task.object_name,
            level=task.level.value,
            outcome=trial.outcome.value,
            cause=trial.cause,
            planning_time=trial.planning_time,
            offline_time=trial.offline_time,
            execution_time=trial.execution_time,
            error=f"{type(exc).__name__}: {exc}",
        )


@dataclass(frozen=True)
class ComplianceReport:
    task_id: str
    n_trials: int
    n_valid: int
    n_discarded: int
    n_success: int
    n_dropped: int
    n_failed: int
    drops_pct: Optional[float]
    compliant: bool
    shortfall: int


def check_grasp_set(grasp_set: GraspSet) -> ComplianceReport:
    """Check that a grasp set has enough valid executions.

    Trials whose setup was discarded do not count towards the five required
    executions; they are reported separately from drops and failures.
    """
    discarded = set()
    if grasp_set.scores is not None:
        discarded = {s.trial_index for s in grasp_set.scores if s.discarded}
    valid = [t for t in grasp_set.trials if t.trial_index not in discarded]
    dropped = sum(t.outcome is Outcome.DROPPED for t in valid)
    failed = sum(t.outcome is Outcome.FAILED_OTHER for t in valid)
    n_valid = len(valid)
    return ComplianceReport(
        task_id=grasp_set.task_id,
        n_trials=len(grasp_set.trials),
        n_valid=n_valid,
        n_discarded=len(grasp_set.trials) - n_valid,
        n_success=n_valid - dropped - failed,
        n_dropped=dropped,
        n_failed=failed,
        drops_pct=100.0 * dropped / n_valid if n_valid else None,
        compliant=n_valid >= TRIALS_PER_GRASP_SET,
        shortfall=max(0, TRIALS_PER_GRASP_SET - n_valid),
    )
