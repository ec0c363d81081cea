"""Leader-follower convoy driven by QR sightings of the robot ahead.

Detection is geometric: a follower "sees" its predecessor's QR code when the
predecessor is in range, inside the camera's field of view, and showing its
back. Bearings use the image-plane convention, negative to the left of the
optical axis, so a target at bearing -20 deg sits in the left zone. Headings
are the usual counter-clockwise angle from the x axis, which makes TurnLeft a
positive rotation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Sequence


def wrap_angle(a: float) -> float:
    """Map an angle onto (-pi, pi]."""
    a = math.fmod(a, 2 * math.pi)
    if a <= -math.pi:
        a += 2 * math.pi
    elif a > math.pi:
        a -= 2 * math.pi
    return a


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))


@dataclass(frozen=True)
class CameraModel:
    fov: float = math.radians(90)
    max_detect_range: float = 5.0

    def __post_init__(self):
        if not 0 < self.fov < math.pi:
            raise ValueError("fov must lie in (0, pi)")
        if self.max_detect_range <= 0:
            raise ValueError("max_detect_range must be positive")


class Zone(enum.Enum):
    LEFT = "Left"
    CENTER = "Center"
    RIGHT = "Right"


class MovementCommand(enum.Enum):
    FORWARD = "Forward"
    TURN_LEFT = "TurnLeft"
    TURN_RIGHT = "TurnRight"
    STOP = "Stop"


class Detection(NamedTuple):
    zone: Zone
    distance: float
    bearing: float


DEFAULT_ZONE_BOUNDS = (math.radians(-10), math.radians(10))
DEFAULT_D_STOP = 0.5


class AssignmentError(ValueError):
    pass


@dataclass(frozen=True)
class TrackingAssignment:
    """Who follows whom.

    ``predecessor`` maps each follower to the robot whose QR it tracks. The
    map must form one chain hanging off ``master``.
    """

    master: str
    predecessor: Mapping[str, str]
    zone_bounds: tuple[float, float] = DEFAULT_ZONE_BOUNDS
    d_stop: float = DEFAULT_D_STOP
    _order: tuple[str, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        left, right = self.zone_bounds
        if not left < right:
            raise AssignmentError("left zone bound must be below the right one")
        if self.d_stop < 0:
            raise AssignmentError("d_stop must be non-negative")
        if self.master in self.predecessor:
            raise AssignmentError("master cannot follow anyone")
        follower_of = {}
        for f, p in self.predecessor.items():
            if p in follower_of:
                raise AssignmentError(f"{p!r} is followed by both {follower_of[p]!r} and {f!r}")
            follower_of[p] = f
        order = [self.master]
        while order[-1] in follower_of:
            order.append(follower_of[order[-1]])
        if len(order) != len(self.predecessor) + 1:
            raise AssignmentError("assignment is not a single chain rooted at the master")
        object.__setattr__(self, "_order", tuple(order))

    @classmethod
    def chain(cls, ids: Sequence[str], **kw) -> TrackingAssignment:
        """``ids[0]`` leads, every later robot follows the one before it."""
        return cls(ids[0], {b: a for a, b in zip(ids, ids[1:])}, **kw)

    @property
    def order(self) -> tuple[str, ...]:
        return self._order

    def check_camera(self, cam: CameraModel):
        left, right = self.zone_bounds
        if not -cam.fov / 2 < left < right < cam.fov / 2:
            raise AssignmentError("zone bounds must fall strictly inside the field of view")


def bearing_to(follower: Pose, target: Pose) -> float:
    """Angle of ``target`` off the follower's optical axis, positive to the right."""
    los = math.atan2(target.y - follower.y, target.x - follower.x)
    return wrap_angle(follower.heading - los)


def classify_zone(bearing: float, zone_bounds: tuple[float, float] = DEFAULT_ZONE_BOUNDS) -> Zone:
    left, right = zone_bounds
    if bearing < left:
        return Zone.LEFT
    if bearing > right:
        return Zone.RIGHT
    return Zone.CENTER


def detect_qr(
    follower: Pose,
    target: Pose,
    cam: CameraModel,
    zone_bounds: tuple[float, float] = DEFAULT_ZONE_BOUNDS,
) -> Optional[Detection]:
    dx, dy = target.x - follower.x, target.y - follower.y
    distance = math.hypot(dx, dy)
    if distance == 0 or distance > cam.max_detect_range:
        return None
    bearing = bearing_to(follower, target)
    if abs(bearing) > cam.fov / 2:
        return None
    # the QR is on the robot's back: it must face away along the line of sight
    if abs(wrap_angle(target.heading - math.atan2(dy, dx))) >= math.pi / 2:
        return None
    return Detection(classify_zone(bearing, zone_bounds), distance, bearing)


_ZONE_COMMANDS = {
    Zone.LEFT: MovementCommand.TURN_LEFT,
    Zone.CENTER: MovementCommand.FORWARD,
    Zone.RIGHT: MovementCommand.TURN_RIGHT,
}


def follow_step(detection: Optional[Detection], d_stop: float = DEFAULT_D_STOP) -> MovementCommand:
    if detection is None or detection.distance <= d_stop:
        return MovementCommand.STOP
    return _ZONE_COMMANDS[detection.zone]


@dataclass(frozen=True)
class Kinematics:
    """Per-tick motion limits. ``master_v`` defaults to the follower speed ``v``."""

    v: float
    omega: float
    dt: float
    master_v: Optional[float] = None

    @property
    def leader_speed(self) -> float:
        return self.v if self.master_v is None else self.master_v


def integrate(pose: Pose, cmd: MovementCommand, speed: float, omega: float, dt: float) -> Pose:
    if cmd is MovementCommand.FORWARD:
        step = speed * dt
        return Pose(pose.x + step * math.cos(pose.heading), pose.y + step * math.sin(pose.heading), pose.heading)
    if cmd is MovementCommand.TURN_LEFT:
        return Pose(pose.x, pose.y, pose.heading + omega * dt)
    if cmd is MovementCommand.TURN_RIGHT:
        return Pose(pose.x, pose.y, pose.heading - omega * dt)
    return pose


class ConvoyStep(NamedTuple):
    poses: dict[str, Pose]
    commands: dict[str, MovementCommand]
    detections: dict[str, Optional[Detection]]


def convoy_update(
    poses: Mapping[str, Pose],
    assignment: TrackingAssignment,
    cam: CameraModel,
    kin: Kinematics,
    master_command: MovementCommand = MovementCommand.STOP,
) -> ConvoyStep:
    """Advance every robot by one tick.

    All followers decide from the poses at the start of the tick, then
    everyone moves at once. Robots outside the assignment are carried over
    untouched.
    """
    commands = {assignment.master: master_command}
    detections: dict[str, Optional[Detection]] = {}
    for follower in assignment.order[1:]:
        det = detect_qr(poses[follower], poses[assignment.predecessor[follower]], cam, assignment.zone_bounds)
        detections[follower] = det
        commands[follower] = follow_step(det, assignment.d_stop)

    new = dict(poses)
    for rid, cmd in commands.items():
        speed = kin.leader_speed if rid == assignment.master else kin.v
        new[rid] = integrate(poses[rid], cmd, speed, kin.omega, kin.dt)
    return ConvoyStep(new, commands, detections)


def command_at(script: Sequence[tuple[float, MovementCommand]], t: float) -> MovementCommand:
    """Command in force at time ``t`` for a time-sorted ``(start, command)`` script."""
    current = MovementCommand.STOP
    for start, cmd in script:
        if start > t:
            break
        current = cmd
    return current


def run_convoy(
    poses: Mapping[str, Pose],
    assignment: TrackingAssignment,
    cam: CameraModel,
    kin: Kinematics,
    script: Sequence[tuple[float, MovementCommand]],
    duration: float,
) -> list[ConvoyStep]:
    assignment.check_camera(cam)
    steps = []
    current = dict(poses)
    n = round(duration / kin.dt)
    for i in range(n):
        step = convoy_update(current, assignment, cam, kin, command_at(script, i * kin.dt))
        steps.append(step)
        current = step.poses
    return steps


def gaps(poses: Mapping[str, Pose], assignment: TrackingAssignment) -> dict[str, float]:
    """Distance from each follower to its predecessor."""
    out = {}
    for f, p in assignment.predecessor.items():
        a, b = poses[f], poses[p]
        out[f] = math.hypot(a.x - b.x, a.y - b.y)
    return out
