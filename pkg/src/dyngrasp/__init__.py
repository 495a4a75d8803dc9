"""Dynamic grasping simulation: reachability- and motion-aware grasp
filtering, target motion prediction, and seeded replanning for a 6-DOF arm
picking objects off randomized conveyor trajectories."""

from .kinematics import (
    ArmModel,
    GripperModel,
    IkError,
    Pose,
    load_profile,
    pose_compose,
    position_distance,
    quaternion_angle,
)

__all__ = [
    "ArmModel",
    "GripperModel",
    "IkError",
    "Pose",
    "load_profile",
    "pose_compose",
    "position_distance",
    "quaternion_angle",
]

__version__ = "0.1.0"
