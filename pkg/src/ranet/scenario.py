"""YAML scenario files for the simulator.

A minimal scenario::

    seed: 7
    plan: {distance: 500, range: 100}
    until: 1000
    events:
      - {at: 0, send: {from: node5, to: BS, message: "status ok"}}

Optional top-level keys: ``params`` (``default``, ``wide`` or a mapping
with q/p/g/n), ``config`` (SimConfig fields), ``registry`` and ``join``
(lists of ids; both default to every planned node), ``end_devices`` (a
count), ``tamper`` (relay ids that flip a ciphertext bit in transit) and
``convoy``. Event kinds are ``send``, ``stream`` and ``replay``. Times are
in milliseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import yaml

from .bilinear import GroupParams, default_params, find_subgroup_generator, wide_params
from .planning import plan_chain
from .sim import SendError, SimConfig, SimReport, Simulation
from .tracking import CameraModel, Kinematics, MovementCommand, Pose, TrackingAssignment


class ScenarioError(ValueError):
    pass


_TOP_KEYS = {"seed", "params", "config", "plan", "registry", "join", "end_devices", "tamper", "events", "until", "convoy"}


def _params(spec) -> GroupParams:
    if spec is None or spec == "default":
        return default_params()
    if spec == "wide":
        return wide_params()
    if isinstance(spec, dict):
        q, p = int(spec["q"]), int(spec["p"])
        g = int(spec["g"]) if "g" in spec else find_subgroup_generator(p, q)
        return GroupParams(q=q, p=p, g=g, n=int(spec.get("n", 256)))
    raise ScenarioError(f"unrecognised params {spec!r}")


def _command(name: str) -> MovementCommand:
    try:
        return MovementCommand(name)
    except ValueError:
        raise ScenarioError(f"unknown movement command {name!r}") from None


@dataclass
class Scenario:
    raw: dict[str, Any]
    seed: int = 1
    until: int = 1000
    events: list[dict] = field(default_factory=list)

    @classmethod
    def from_text(cls, text: str) -> Scenario:
        data = yaml.safe_load(text) or {}
        if not isinstance(data, dict):
            raise ScenarioError("scenario must be a mapping")
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
        if "plan" not in data:
            raise ScenarioError("scenario needs a plan: {distance, range}")
        events = sorted(data.get("events") or [], key=lambda e: e.get("at", 0))
        return cls(data, int(data.get("seed", 1)), int(data.get("until", 1000)), events)

    @classmethod
    def load(cls, path: Union[str, Path]) -> Scenario:
        return cls.from_text(Path(path).read_text())

    def build(self, seed: Optional[int] = None) -> Simulation:
        try:
            return self._build(seed)
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError, LookupError, SendError) as exc:
            raise ScenarioError(f"bad scenario: {exc}") from None

    def _build(self, seed: Optional[int]) -> Simulation:
        d = self.raw
        plan = plan_chain(float(d["plan"]["distance"]), float(d["plan"].get("range", 100)))
        cfg = dict(d.get("config") or {})
        cfg["seed"] = self.seed if seed is None else seed
        cfg.setdefault("radio_range", plan.radio_range)
        sim = Simulation(plan, SimConfig(**cfg), registry=d.get("registry"), params=_params(d.get("params")))

        for nid in d.get("join", plan.node_ids):
            sim.join(str(nid))
        for i in range(int(d.get("end_devices", 0))):
            sim.add_end_device(f"device{i + 1}")
        sim.tamper_hops.update(str(t) for t in d.get("tamper") or [])

        for ev in self.events:
            at = int(ev.get("at", 0))
            if "send" in ev:
                s = ev["send"]
                sim.send_message(str(s["from"]), str(s["to"]), str(s["message"]).encode(), at=at)
            elif "stream" in ev:
                s = ev["stream"]
                sim.start_telemetry_stream(str(s["node"]), int(s["period"]), int(s["frame_size"]), start=at, stop=s.get("until"))
            elif "replay" in ev:
                sim.replay(int(ev["replay"]), at=at)
            else:
                raise ScenarioError(f"unknown event {ev!r}")

        if d.get("convoy"):
            self._attach_convoy(sim, d["convoy"])
        return sim

    def _attach_convoy(self, sim: Simulation, c: dict):
        robots = c.get("robots") or []
        if len(robots) < 2:
            raise ScenarioError("convoy needs a master and at least one follower")
        poses = {str(r["id"]): Pose(float(r["x"]), float(r["y"]), math.radians(float(r.get("heading_deg", 0)))) for r in robots}
        cam_spec = c.get("camera") or {}
        cam = CameraModel(math.radians(float(cam_spec.get("fov_deg", 90))), float(cam_spec.get("max_range", 5.0)))
        left, right = c.get("zones_deg", [-10, 10])
        assignment = TrackingAssignment.chain(
            [str(r["id"]) for r in robots],
            zone_bounds=(math.radians(left), math.radians(right)),
            d_stop=float(c.get("d_stop", 0.5)),
        )
        k = c.get("kinematics") or {}
        kin = Kinematics(
            v=float(k.get("v", 0.2)),
            omega=math.radians(float(k.get("omega_deg", 45))),
            dt=sim.config.tick / 1000,
            master_v=float(k["master_v"]) if "master_v" in k else None,
        )
        script = [(float(s["at"]), _command(s["command"])) for s in c.get("script") or []]
        sim.attach_convoy(poses, assignment, cam, kin, script)

    def run(self, seed: Optional[int] = None) -> SimReport:
        return self.build(seed).run(self.until)
