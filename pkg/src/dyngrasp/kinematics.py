"""Rigid-body poses, serial-arm kinematics and the parallel-jaw gripper model.

Poses are (position, unit quaternion) pairs; quaternions use (w, x, y, z)
order with the sign canonicalized to w >= 0. Joint configurations are plain
float64 numpy arrays of length ``arm.dof``.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import _kincore

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


def _normalize_quat(q):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if not np.isfinite(n) or n < 1e-12:
        raise ValueError("quaternion norm must be positive and finite")
    q = q / n
    if q[0] < 0.0:
        q = -q
    return q


def quat_multiply(a, b):
    """Hamilton product of two (w,x,y,z) quaternions."""
    w0, x0, y0, z0 = a
    w1, x1, y1, z1 = b
    return np.array([
        w0 * w1 - x0 * x1 - y0 * y1 - z0 * z1,
        w0 * x1 + x0 * w1 + y0 * z1 - z0 * y1,
        w0 * y1 - x0 * z1 + y0 * w1 + z0 * x1,
        w0 * z1 + x0 * y1 - y0 * x1 + z0 * w1,
    ])


def quat_conjugate(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q, v):
    """Rotate 3-vector v by quaternion q."""
    return quat_to_matrix(q) @ np.asarray(v, dtype=float)


def quat_to_matrix(q):
    return _kincore.quat_to_mat(np.asarray(q, dtype=float))


def matrix_to_quat(m):
    return _kincore.mat_to_quat(np.ascontiguousarray(m, dtype=float))


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    h = 0.5 * angle
    return _normalize_quat(np.concatenate([[np.cos(h)], np.sin(h) * axis]))


def quat_from_rpy(roll, pitch, yaw):
    """Intrinsic XYZ (roll about x, then pitch about y, then yaw about z)."""
    qr = quat_from_axis_angle([1.0, 0.0, 0.0], roll)
    qp = quat_from_axis_angle([0.0, 1.0, 0.0], pitch)
    qy = quat_from_axis_angle([0.0, 0.0, 1.0], yaw)
    return _normalize_quat(quat_multiply(quat_multiply(qr, qp), qy))


def quat_to_rpy(q):
    """Inverse of quat_from_rpy (intrinsic XYZ convention)."""
    m = quat_to_matrix(q)
    # R = Rx(r) Ry(p) Rz(y)
    pitch = np.arcsin(np.clip(m[0, 2], -1.0, 1.0))
    if abs(m[0, 2]) < 1.0 - 1e-9:
        roll = np.arctan2(-m[1, 2], m[2, 2])
        yaw = np.arctan2(-m[0, 1], m[0, 0])
    else:
        # gimbal lock: fold yaw into roll
        roll = np.arctan2(m[2, 1], m[1, 1])
        yaw = 0.0
    return np.array([roll, pitch, yaw])


def quat_slerp(a, b, t):
    """Spherical interpolation between unit quaternions, shortest arc."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    if dot > 1.0 - 1e-12:
        return _normalize_quat(a + t * (b - a))
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    s = np.sin(theta)
    return _normalize_quat((np.sin((1.0 - t) * theta) / s) * a
                           + (np.sin(t * theta) / s) * b)


class Pose:
    """Rigid pose: position (m) plus unit quaternion (w,x,y,z), w >= 0."""

    __slots__ = ("position", "orientation")

    def __init__(self, position=(0.0, 0.0, 0.0), orientation=IDENTITY_QUAT):
        self.position = np.asarray(position, dtype=float).reshape(3).copy()
        self.orientation = _normalize_quat(orientation)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def from_xyz_rpy(cls, xyz, rpy):
        return cls(xyz, quat_from_rpy(*rpy))

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(m[:3, 3], matrix_to_quat(m[:3, :3]))

    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.orientation)
        m[:3, 3] = self.position
        return m

    def rotation(self):
        return quat_to_matrix(self.orientation)

    def compose(self, other: "Pose") -> "Pose":
        """self o other: the pose of `other` expressed through this frame."""
        return Pose(self.position + quat_rotate(self.orientation, other.position),
                    quat_multiply(self.orientation, other.orientation))

    def inverse(self) -> "Pose":
        qi = quat_conjugate(self.orientation)
        return Pose(-quat_rotate(qi, self.position), qi)

    def transform_point(self, p):
        return self.position + quat_rotate(self.orientation, p)

    def transform_direction(self, d):
        return quat_rotate(self.orientation, d)

    def approx_equal(self, other, tol_pos=1e-9, tol_ang=1e-9):
        return (position_distance(self, other) <= tol_pos
                and quaternion_angle(self, other) <= tol_ang)

    def __repr__(self):
        p = self.position
        q = self.orientation
        return (f"Pose(p=({p[0]:.4f},{p[1]:.4f},{p[2]:.4f}), "
                f"q=({q[0]:.4f},{q[1]:.4f},{q[2]:.4f},{q[3]:.4f}))")


def pose_compose(a: Pose, b: Pose) -> Pose:
    """a o b; associative, identity-neutral."""
    return a.compose(b)


def position_distance(a: Pose, b: Pose) -> float:
    """Euclidean distance between pose positions (the paper's d_p)."""
    return float(np.linalg.norm(a.position - b.position))


def quaternion_angle(a: Pose, b: Pose) -> float:
    """Absolute quaternion distance 2*acos(|<qa,qb>|) in [0, pi] (d_q)."""
    d = abs(float(np.dot(a.orientation, b.orientation)))
    return 2.0 * np.arccos(min(1.0, d))


class IkError(RuntimeError):
    """Raised when no IK solution is found within the restart budget."""


@dataclass(frozen=True)
class GripperModel:
    """Parallel-jaw gripper dimensions.

    span is the maximum jaw opening; back_off is the pregrasp standoff b.
    The gripper frame sits at the closure center: +z is the approach axis,
    +x the closing axis, fingers reach z in [-finger_depth/2, finger_depth/2].
    """

    span: float
    finger_depth: float
    palm_width: float
    back_off: float
    finger_thickness: float = 0.012
    palm_thickness: float = 0.025

    def __post_init__(self):
        for name in ("span", "finger_depth", "palm_width", "back_off",
                     "finger_thickness", "palm_thickness"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"gripper {name} must be positive")

    def volumes(self, ee_pose: Pose, opening: float):
        """Palm plus two finger boxes at the given jaw opening.

        Returns a list of (center_pose, half_extents) oriented boxes in the
        world frame. Raises ValueError when opening is outside [0, span].
        """
        if opening < -1e-12 or opening > self.span + 1e-12:
            raise ValueError(f"opening {opening} outside [0, {self.span}]")
        ft = self.finger_thickness
        fd = self.finger_depth
        half_y = self.palm_width / 2.0
        boxes = []
        # fingers: inner faces at x = +/- opening/2
        fx = opening / 2.0 + ft / 2.0
        for sx in (-1.0, 1.0):
            local = Pose((sx * fx, 0.0, 0.0))
            boxes.append((ee_pose.compose(local),
                          np.array([ft / 2.0, half_y, fd / 2.0])))
        # palm behind the fingers
        palm_hx = self.span / 2.0 + ft
        local = Pose((0.0, 0.0, -fd / 2.0 - self.palm_thickness / 2.0))
        boxes.append((ee_pose.compose(local),
                      np.array([palm_hx, half_y, self.palm_thickness / 2.0])))
        return boxes


@dataclass
class ArmModel:
    """Serial revolute arm: fixed transforms, axes, limits, base and tool."""

    name: str
    joint_transforms: list          # N Pose, fixed transform before each joint
    joint_axes: np.ndarray          # (N, 3) unit local axes
    lower: np.ndarray               # (N,) rad
    upper: np.ndarray               # (N,) rad
    velocity_limits: np.ndarray     # (N,) rad/s
    acceleration_limits: np.ndarray  # (N,) rad/s^2
    base: Pose = field(default_factory=Pose.identity)
    tool: Pose = field(default_factory=Pose.identity)
    link_radius: float = 0.045

    def __post_init__(self):
        n = len(self.joint_transforms)
        self.joint_axes = np.asarray(self.joint_axes, dtype=float).reshape(n, 3)
        norms = np.linalg.norm(self.joint_axes, axis=1)
        self.joint_axes = self.joint_axes / norms[:, None]
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.velocity_limits = np.asarray(self.velocity_limits, dtype=float)
        self.acceleration_limits = np.asarray(self.acceleration_limits, dtype=float)
        if np.any(self.upper <= self.lower):
            raise ValueError("joint limit intervals must be non-empty")
        if np.any(self.velocity_limits <= 0) or np.any(self.acceleration_limits <= 0):
            raise ValueError("velocity/acceleration limits must be positive")
        # packed arrays for the compiled kernels; base folded into slot 0
        rots = np.empty((n + 1, 3, 3))
        trans = np.empty((n + 1, 3))
        for i, tf in enumerate(self.joint_transforms):
            if i == 0:
                tf = self.base.compose(tf)
            rots[i] = tf.rotation()
            trans[i] = tf.position
        rots[n] = self.tool.rotation()
        trans[n] = self.tool.position
        self._rots = rots
        self._trans = trans
        self._max_reach = float(np.sum(np.linalg.norm(trans, axis=1)))

    @property
    def dof(self) -> int:
        return len(self.joint_transforms)

    @property
    def max_reach(self) -> float:
        """Fully-stretched distance from base to tool frame (upper bound)."""
        return self._max_reach

    def _check_config(self, q):
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.shape[0] != self.dof:
            raise ValueError(f"expected {self.dof} joint angles, got {q.shape[0]}")
        return q

    def within_limits(self, q, tol=1e-9) -> bool:
        q = self._check_config(q)
        return bool(np.all(q >= self.lower - tol) and np.all(q <= self.upper + tol))

    def clamp(self, q):
        return np.clip(self._check_config(q), self.lower, self.upper)

    def random_config(self, rng) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)

    def forward_kinematics(self, q) -> Pose:
        q = self._check_config(q)
        pos, rot = _kincore.fk_pose(self._rots, self._trans, self.joint_axes, q)
        return Pose(pos, _kincore.mat_to_quat(rot))

    def link_frames(self, q):
        """Origins of base, every joint frame and the tool, as an (N+2,3) array."""
        q = self._check_config(q)
        n = self.dof
        pos = np.empty((n + 2, 3))
        rot = np.empty((n + 2, 3, 3))
        _kincore.fk_frames(self._rots, self._trans, self.joint_axes, q, pos, rot)
        return pos, rot

    def jacobian(self, q) -> np.ndarray:
        """Geometric Jacobian (6xN), linear rows first."""
        q = self._check_config(q)
        return _kincore.jacobian(self._rots, self._trans, self.joint_axes, q)

    def solve_ik(self, target: Pose, seed=None, tol_pos=1e-3,
                 tol_ang=np.deg2rad(0.5), max_restarts=8, max_iters=200,
                 damping=0.05, step_clamp=0.2, rng_seed=0):
        """Damped-least-squares IK; returns a config or raises IkError.

        The first attempt starts from `seed` when given; further restarts draw
        uniform limit-respecting configurations from a deterministic stream
        keyed by rng_seed. The returned config always satisfies joint limits
        and reproduces the target within (tol_pos, tol_ang).
        """
        if tol_pos <= 0 or tol_ang <= 0:
            raise ValueError("tolerances must be positive")
        has_seed = seed is not None
        q_seed = self._check_config(seed) if has_seed else np.zeros(self.dof)
        q, ok, _ = _kincore.dls_ik(
            self._rots, self._trans, self.joint_axes, self.lower, self.upper,
            np.asarray(target.position, dtype=float),
            target.rotation(), q_seed, has_seed, float(tol_pos), float(tol_ang),
            int(max_iters), int(max_restarts), float(damping), float(step_clamp),
            np.uint64(rng_seed & 0xFFFFFFFFFFFFFFFF))
        if not ok:
            raise IkError(f"no IK solution within {max_restarts} restarts")
        return q

    def try_ik(self, target: Pose, **kwargs):
        """solve_ik returning None instead of raising."""
        try:
            return self.solve_ik(target, **kwargs)
        except IkError:
            return None


def forward_kinematics(arm: ArmModel, q) -> Pose:
    return arm.forward_kinematics(q)


def jacobian(arm: ArmModel, q) -> np.ndarray:
    return arm.jacobian(q)


def solve_ik(arm: ArmModel, target: Pose, seed=None, **kwargs):
    return arm.solve_ik(target, seed=seed, **kwargs)


def gripper_volumes(gripper: GripperModel, ee_pose: Pose, opening: float):
    return gripper.volumes(ee_pose, opening)


def _pose_from_cfg(entry):
    xyz = entry.get("xyz", [0.0, 0.0, 0.0])
    rpy = entry.get("rpy", [0.0, 0.0, 0.0])
    return Pose.from_xyz_rpy(xyz, rpy)


def load_profile(source):
    """Load an (arm, gripper) pair from a profile YAML.

    `source` is a path, an open file, or one of the shipped profile names
    ("wide", "narrow"). See profiles/wide.yaml for the schema.
    """
    if isinstance(source, str) and "/" not in source and not source.endswith(".yaml"):
        ref = importlib.resources.files("dyngrasp.profiles") / f"{source}.yaml"
        text = ref.read_text()
        cfg = yaml.safe_load(text)
    elif hasattr(source, "read"):
        cfg = yaml.safe_load(source)
    else:
        with open(source) as f:
            cfg = yaml.safe_load(f)
    acfg = cfg["arm"]
    joints = acfg["joints"]
    arm = ArmModel(
        name=cfg["name"],
        joint_transforms=[_pose_from_cfg(j) for j in joints],
        joint_axes=np.array([j["axis"] for j in joints], dtype=float),
        lower=np.array([j["lower"] for j in joints], dtype=float),
        upper=np.array([j["upper"] for j in joints], dtype=float),
        velocity_limits=np.array([j["velocity"] for j in joints], dtype=float),
        acceleration_limits=np.array([j["acceleration"] for j in joints], dtype=float),
        base=_pose_from_cfg(acfg.get("base", {})),
        tool=_pose_from_cfg(acfg.get("tool", {})),
        link_radius=float(acfg.get("link_radius", 0.045)),
    )
    g = cfg["gripper"]
    gripper = GripperModel(
        span=float(g["span"]),
        finger_depth=float(g["finger_depth"]),
        palm_width=float(g["palm_width"]),
        back_off=float(g["back_off"]),
        finger_thickness=float(g.get("finger_thickness", 0.012)),
        palm_thickness=float(g.get("palm_thickness", 0.025)),
    )
    return arm, gripper
