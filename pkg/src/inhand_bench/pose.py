"""Hand poses, rigid transforms and the pose-error metrics.

Quaternions are scalar-first ``(w, x, y, z)`` throughout. Serialized poses
are seven numbers ``[x, y, z, qw, qx, qy, qz]`` in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTask, NonUnitQuaternion, SchemaError

#: Quaternions whose norm is within this of 1 are silently renormalized.
QUATERNION_NORM_TOLERANCE = 1e-3

_SQRT2 = math.sqrt(2.0)


def normalize_quaternion(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64).reshape(4)
    norm = float(np.linalg.norm(q))
    if not np.isfinite(norm) or abs(norm - 1.0) > QUATERNION_NORM_TOLERANCE:
        raise NonUnitQuaternion(f"quaternion {q.tolist()} has norm {norm:.6g}")
    if abs(norm - 1.0) <= 4 * np.finfo(np.float64).eps:
        return q.copy()  # already unit up to rounding; keep stored values exact
    return q / norm


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conjugate(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]], dtype=np.float64)


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_rotate(q, v) -> np.ndarray:
    qv = np.concatenate([[0.0], np.asarray(v, dtype=np.float64)])
    return quat_multiply(quat_multiply(q, qv), quat_conjugate(q))[1:]


def axis_angle_quaternion(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[math.cos(angle / 2)], math.sin(angle / 2) * axis])


@dataclass(frozen=True, eq=False)
class Pose:
    """Hand pose in the object frame: position ``s`` and orientation ``q``."""

    s: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(s)):
            raise SchemaError(f"non-finite position {s.tolist()}")
        q = normalize_quaternion(self.q)
        s.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "q", q)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def from_list(cls, values) -> "Pose":
        try:
            values = [float(x) for x in values]
        except (TypeError, ValueError):
            raise SchemaError(f"pose must be 7 numbers, got {values!r}") from None
        if len(values) != 7:
            raise SchemaError(f"pose must be 7 numbers [x, y, z, qw, qx, qy, qz], got {len(values)}")
        return cls(values[:3], values[3:])

    def to_list(self) -> list:
        return self.s.tolist() + self.q.tolist()

    @property
    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.q)

    def __eq__(self, other):
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.s, other.s) and np.array_equal(self.q, other.q)

    def __repr__(self):
        return f"Pose(s={self.s.tolist()}, q={self.q.tolist()})"


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """``x -> R(rotation) x + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = normalize_quaternion(self.rotation)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        r.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_pose(cls, pose: Pose) -> "RigidTransform":
        return cls(pose.q, pose.s)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """``self ∘ other``: apply ``other`` first."""
        return RigidTransform(
            quat_multiply(self.rotation, other.rotation),
            quat_rotate(self.rotation, other.translation) + self.translation,
        )

    def inverse(self) -> "RigidTransform":
        inv = quat_conjugate(self.rotation)
        return RigidTransform(inv, -quat_rotate(inv, self.translation))

    def apply_points(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ quat_to_matrix(self.rotation).T + self.translation


def relative_transform(h_i: Pose, h_d: Pose) -> RigidTransform:
    """The transform ``T = H_d H_i^-1`` taking the initial pose to the desired one."""
    return RigidTransform.from_pose(h_d).compose(RigidTransform.from_pose(h_i).inverse())


def apply_transform(t: RigidTransform, h: Pose) -> Pose:
    """``T H``: adapt a pose by a relative transform (e.g. onto a robot's own grasp)."""
    out = t.compose(RigidTransform.from_pose(h))
    return Pose(out.translation, out.rotation)


def _vec(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(3)


def position_error(s_d, s_r) -> float:
    """Euclidean distance (m) between desired and reached hand positions."""
    return float(np.linalg.norm(_vec(s_d) - _vec(s_r)))


def position_error_pct(s_i, s_d, s_r) -> float:
    """Position error as a percentage of the initial-to-desired displacement."""
    travel = float(np.linalg.norm(_vec(s_d) - _vec(s_i)))
    if travel == 0.0:
        raise DegenerateTask("initial and desired positions coincide")
    return 100.0 * position_error(s_d, s_r) / travel


def orientation_error_pct(q_d, q_r) -> float:
    """Orientation error in [0, 100]: 0 for the same rotation, 100 for a half turn.

    Uses the smaller of ``|q_d - q_r|`` and ``|q_d + q_r|`` so that ``q`` and
    ``-q`` score identically.
    """
    q_d = normalize_quaternion(q_d)
    q_r = normalize_quaternion(q_r)
    diff = float(np.linalg.norm(q_d - q_r))
    summ = float(np.linalg.norm(q_d + q_r))
    return 100.0 * min(diff, summ) / _SQRT2
