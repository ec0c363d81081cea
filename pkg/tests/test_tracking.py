import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ranet.tracking import (
    AssignmentError,
    CameraModel,
    Detection,
    Kinematics,
    MovementCommand as Cmd,
    Pose,
    TrackingAssignment,
    Zone,
    bearing_to,
    classify_zone,
    command_at,
    convoy_update,
    detect_qr,
    follow_step,
    gaps,
    run_convoy,
    wrap_angle,
)

CAM = CameraModel(math.radians(90), 5.0)
BOUNDS = (math.radians(-10), math.radians(10))


def test_pose_heading_normalised():
    assert Pose(0, 0, 3 * math.pi).heading == pytest.approx(math.pi)
    assert Pose(0, 0, -math.pi).heading == pytest.approx(math.pi)
    assert Pose(0, 0, 2 * math.pi).heading == 0


@given(st.floats(-100, 100))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


def test_camera_validation():
    with pytest.raises(ValueError):
        CameraModel(0, 1)
    with pytest.raises(ValueError):
        CameraModel(math.pi, 1)
    with pytest.raises(ValueError):
        CameraModel(1.0, 0)


def test_target_ahead_facing_away():
    det = detect_qr(Pose(0, 0, 0), Pose(1, 0, 0), CAM, BOUNDS)
    assert det.zone is Zone.CENTER
    assert det.distance == pytest.approx(1.0)


def test_target_behind_not_seen():
    assert detect_qr(Pose(0, 0, 0), Pose(-1, 0, 0), CAM, BOUNDS) is None


def test_target_facing_follower_not_seen():
    assert detect_qr(Pose(0, 0, 0), Pose(1, 0, math.pi), CAM, BOUNDS) is None
    assert detect_qr(Pose(0, 0, 0), Pose(1, 0, math.pi / 2), CAM, BOUNDS) is None


def test_target_out_of_range():
    assert detect_qr(Pose(0, 0, 0), Pose(5.01, 0, 0), CAM, BOUNDS) is None
    assert detect_qr(Pose(0, 0, 0), Pose(0, 0, 0), CAM, BOUNDS) is None


def test_bearing_minus_20_is_left_zone():
    # independent trig: a target 20 deg counter-clockwise of the optical axis
    # lies left of centre in the image, i.e. at bearing -20 deg
    ang = math.radians(20)
    target = Pose(2 * math.cos(ang), 2 * math.sin(ang), ang)
    los = math.atan2(target.y, target.x)
    assert math.degrees(los) == pytest.approx(20)
    assert math.degrees(bearing_to(Pose(0, 0, 0), target)) == pytest.approx(-20)
    det = detect_qr(Pose(0, 0, 0), target, CAM, BOUNDS)
    assert det.zone is Zone.LEFT
    mirrored = Pose(target.x, -target.y, -ang)
    assert detect_qr(Pose(0, 0, 0), mirrored, CAM, BOUNDS).zone is Zone.RIGHT


def test_fov_edge():
    for deg, visible in [(44.9, True), (45.1, False)]:
        ang = math.radians(deg)
        target = Pose(math.cos(ang), math.sin(ang), ang)
        assert (detect_qr(Pose(0, 0, 0), target, CAM, BOUNDS) is not None) is visible


@given(st.floats(-math.pi / 4, math.pi / 4))
def test_zone_classification_total_and_exclusive(b):
    zone = classify_zone(b, BOUNDS)
    memberships = [b < BOUNDS[0], BOUNDS[0] <= b <= BOUNDS[1], b > BOUNDS[1]]
    assert sum(memberships) == 1
    assert zone is [Zone.LEFT, Zone.CENTER, Zone.RIGHT][memberships.index(True)]


def test_follow_step_rules():
    assert follow_step(None, 0.5) is Cmd.STOP
    assert follow_step(Detection(Zone.CENTER, 0.5, 0.0), 0.5) is Cmd.STOP
    assert follow_step(Detection(Zone.CENTER, 0.4, 0.0), 0.5) is Cmd.STOP
    assert follow_step(Detection(Zone.CENTER, 0.6, 0.0), 0.5) is Cmd.FORWARD
    assert follow_step(Detection(Zone.LEFT, 0.6, -0.3), 0.5) is Cmd.TURN_LEFT
    assert follow_step(Detection(Zone.RIGHT, 0.6, 0.3), 0.5) is Cmd.TURN_RIGHT


def test_assignment_validation():
    TrackingAssignment.chain(["m", "a", "b"])
    with pytest.raises(AssignmentError):
        TrackingAssignment("m", {"a": "m", "b": "m"})  # two followers of m
    with pytest.raises(AssignmentError):
        TrackingAssignment("m", {"a": "b", "b": "a"})  # cycle detached from master
    with pytest.raises(AssignmentError):
        TrackingAssignment("m", {"m": "a", "a": "m"})
    with pytest.raises(AssignmentError):
        TrackingAssignment("m", {"a": "m"}, zone_bounds=(0.2, 0.1))
    wide = TrackingAssignment("m", {"a": "m"}, zone_bounds=(math.radians(-50), 0.1))
    with pytest.raises(AssignmentError):
        wide.check_camera(CAM)
    assert TrackingAssignment.chain(["m", "a", "b"]).order == ("m", "a", "b")


def test_stationary_fixed_point():
    assignment = TrackingAssignment.chain(["m", "f1", "f2"], d_stop=0.5)
    poses = {"m": Pose(0, 0, 0), "f1": Pose(-0.4, 0, 0), "f2": Pose(-0.8, 0, 0)}
    kin = Kinematics(0.2, math.radians(45), 0.1)
    step = convoy_update(poses, assignment, CAM, kin, Cmd.STOP)
    assert step.poses == poses
    assert set(step.commands.values()) == {Cmd.STOP}


def _line_gap_oracle(g0, v, dt, d_stop):
    """Closed form for the first follower behind a leader moving at v.

    While the gap is at most d_stop the follower waits and the gap grows by
    v*dt per tick; once it exceeds d_stop both move at v and it freezes.
    """
    g0, step, d_stop = Fraction(g0), Fraction(v) * Fraction(dt), Fraction(d_stop)
    if g0 > d_stop:
        return g0
    waits = (d_stop - g0) // step + 1
    return g0 + waits * step


@pytest.mark.parametrize("g0", ["0.31", "0.1", "0.43", "0.7"])
def test_in_line_pursuit_matches_closed_form(g0):
    v, dt, d_stop = Fraction("0.2"), Fraction("0.1"), Fraction("0.5")
    expected = _line_gap_oracle(Fraction(g0), v, dt, d_stop)
    assignment = TrackingAssignment.chain(["m", "f"], d_stop=float(d_stop))
    poses = {"m": Pose(0, 0, 0), "f": Pose(-float(Fraction(g0)), 0, 0)}
    kin = Kinematics(float(v), 1.0, float(dt))
    steps = run_convoy(poses, assignment, CAM, kin, [(0, Cmd.FORWARD)], 30)
    assert gaps(steps[-1].poses, assignment)["f"] == pytest.approx(float(expected), abs=1e-9)


def test_faster_follower_closes_large_gap_without_overshoot():
    assignment = TrackingAssignment.chain(["m", "f"], d_stop=0.5)
    poses = {"m": Pose(0, 0, 0), "f": Pose(-3.0, 0, 0)}
    kin = Kinematics(v=0.3, omega=1.0, dt=0.1, master_v=0.2)
    steps = run_convoy(poses, assignment, CAM, kin, [(0, Cmd.FORWARD)], 120)
    history = [gaps(s.poses, assignment)["f"] for s in steps]
    assert min(history) > 0
    tail = history[len(history) // 2:]
    assert max(tail) <= 0.5 + 0.3 * 0.1 + 1e-9
    assert min(tail) >= 0.5 - (0.3 - 0.2) * 0.1 - 1e-9


def test_follower_never_moves_when_predecessor_unseen():
    assignment = TrackingAssignment.chain(["m", "f"], d_stop=0.5)
    # master facing the follower: QR on its back is invisible
    poses = {"m": Pose(0, 0, math.pi), "f": Pose(-2, 0, 0)}
    kin = Kinematics(0.2, 1.0, 0.1)
    steps = run_convoy(poses, assignment, CAM, kin, [(0, Cmd.FORWARD)], 5)
    for s in steps:
        assert s.detections["f"] is None
        assert s.commands["f"] is Cmd.STOP
        assert s.poses["f"] == poses["f"]


def test_master_turn_left_follower_turns_with_bearing_sign():
    assignment = TrackingAssignment.chain(["m", "f"], d_stop=0.5)
    poses = {"m": Pose(0, 0, 0), "f": Pose(-0.8, 0, 0)}
    kin = Kinematics(0.2, math.radians(45), 0.1)
    script = [(0, Cmd.FORWARD), (2.0, Cmd.TURN_LEFT), (4.0, Cmd.FORWARD)]
    steps = run_convoy(poses, assignment, CAM, kin, script, 25)
    prev = poses
    seen = set()
    for s in steps:
        cmd = s.commands["f"]
        seen.add(cmd)
        fp, mp = prev["f"], prev["m"]
        # recompute the bearing from raw trig, image convention: positive = right
        los = math.atan2(mp.y - fp.y, mp.x - fp.x)
        b = math.atan2(math.sin(fp.heading - los), math.cos(fp.heading - los))
        if cmd is Cmd.TURN_LEFT:
            assert b < BOUNDS[0]
        elif cmd is Cmd.TURN_RIGHT:
            assert b > BOUNDS[1]
        prev = s.poses
    assert Cmd.TURN_LEFT in seen
    # after the turn the follower ends up heading roughly the master's way
    assert steps[-1].poses["f"].heading == pytest.approx(math.pi / 2, abs=math.radians(20))


def test_command_script_lookup():
    script = [(0, Cmd.FORWARD), (2.0, Cmd.TURN_LEFT), (4.0, Cmd.STOP)]
    assert command_at(script, 0) is Cmd.FORWARD
    assert command_at(script, 1.99) is Cmd.FORWARD
    assert command_at(script, 2.0) is Cmd.TURN_LEFT
    assert command_at(script, 10) is Cmd.STOP
    assert command_at([(1.0, Cmd.FORWARD)], 0.5) is Cmd.STOP


def test_convoy_update_deterministic():
    assignment = TrackingAssignment.chain(["m", "a", "b"])
    poses = {"m": Pose(0, 0, 0.1), "a": Pose(-1, 0.1, 0), "b": Pose(-2, -0.1, 0.2)}
    kin = Kinematics(0.2, 0.5, 0.1)
    assert convoy_update(poses, assignment, CAM, kin, Cmd.FORWARD) == convoy_update(poses, assignment, CAM, kin, Cmd.FORWARD)
