"""Deterministic discrete-event simulation of the robot relay chain.

The base station sits at position 0 and doubles as key generation center
and address server. Robots join by presenting their QR identity; registered
ones receive extracted keys and two interface addresses. Messages are
signcrypted end to end and relayed hop by hop in cleartext envelopes, so a
relay can see who talks to whom but cannot read or forge the payload.

Everything random (keys, nonces, drops, frame payloads) is drawn from
per-purpose generators derived from ``SimConfig.seed``; a scenario and a
seed pin the report down byte for byte.
"""

from __future__ import annotations

import enum
import heapq
import ipaddress
import json
import logging
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Optional

from . import ibsc
from .addressing import AddressKind, AddressPool
from .bilinear import GroupParams, default_params
from .ibsc import IdentityKeyPair, MasterKeyPair, Signcryptext
from .planning import BASE_STATION_ID, ChainPlan, RoutingError, route_next_hop
from .tracking import (
    CameraModel,
    Kinematics,
    MovementCommand,
    Pose,
    TrackingAssignment,
    command_at,
    convoy_update,
)

log = logging.getLogger(__name__)


class SendError(RuntimeError):
    pass


class Role(enum.Enum):
    MASTER = "Master"
    SLAVE = "Slave"


class EventKind(enum.Enum):
    JOIN = "Join"
    SEND = "Send"
    FORWARD = "Forward"
    DELIVER = "Deliver"
    DROP = "Drop"
    TICK = "Tick"


@dataclass
class SimConfig:
    seed: int = 1
    per_hop_latency: int = 10  # ms
    tick: int = 100  # ms
    radio_range: float = 100.0
    drop_probability: float = 0.0
    probe_relays: bool = True

    def __post_init__(self):
        if self.per_hop_latency < 0 or self.tick <= 0:
            raise ValueError("latency must be >= 0 and tick > 0")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop_probability must lie in [0, 1]")


@dataclass
class RobotNode:
    id: str
    position: float = 0.0
    role: Role = Role.SLAVE
    keys: Optional[IdentityKeyPair] = None
    uplink_addr: Optional[ipaddress.IPv4Address] = None
    downlink_addr: Optional[ipaddress.IPv4Address] = None
    inbox: deque = field(default_factory=deque)
    outbox: deque = field(default_factory=deque)

    @property
    def joined(self) -> bool:
        return self.keys is not None


@dataclass(frozen=True)
class JoinOutcome:
    node_id: str
    accepted: bool
    addresses: tuple[ipaddress.IPv4Address, ...] = ()
    reason: str = ""


class BaseStation:
    """Key generation center, identity registry, and address server."""

    def __init__(self, params: GroupParams, rng: random.Random, registry=(), pool: Optional[AddressPool] = None):
        self.master_keys: MasterKeyPair = ibsc.setup(params, rng)
        self.authorized_registry: set[str] = set(registry)
        self.pool = pool or AddressPool()
        self.keys = ibsc.extract(self.master_keys, BASE_STATION_ID)
        self.id = BASE_STATION_ID
        self.inbox: deque = deque()
        self._log: list[dict] = []
        self._q_ids = {self.keys.q_id: BASE_STATION_ID}

    @property
    def log(self) -> tuple[dict, ...]:
        return tuple(self._log)

    def record(self, entry: dict):
        self._log.append(dict(entry))

    @property
    def master_public(self):
        return self.master_keys.public

    def join(self, node: RobotNode) -> JoinOutcome:
        if node.joined:
            return JoinOutcome(node.id, True, (node.uplink_addr, node.downlink_addr), "already joined")
        if node.id not in self.authorized_registry:
            outcome = JoinOutcome(node.id, False, reason="identity not in registry")
            self.record({"event": "Join", "node": node.id, "outcome": "Rejected"})
            log.info("join rejected for %s", node.id)
            return outcome
        # both interfaces are reserved before any state is committed
        up = self.pool.allocate(node.id, AddressKind.NODE_INTERFACE)
        try:
            down = self.pool.allocate(node.id, AddressKind.NODE_INTERFACE)
        except Exception:
            self.pool.release(up)
            raise
        node.keys = ibsc.extract(self.master_keys, node.id)
        node.uplink_addr, node.downlink_addr = up, down
        twin = self._q_ids.get(node.keys.q_id)
        if twin is not None:
            # tiny groups: H1 maps two ids to one point, so they share a secret key
            log.warning("identities %s and %s hash to the same H1 point", twin, node.id)
        self._q_ids.setdefault(node.keys.q_id, node.id)
        self.record({"event": "Join", "node": node.id, "outcome": "Joined"})
        return JoinOutcome(node.id, True, (up, down))


def join_network(station: BaseStation, node: RobotNode) -> JoinOutcome:
    return station.join(node)


@dataclass
class MessageEnvelope:
    envelope_id: int
    sender_id: str
    receiver_id: str
    seq: int
    sigma: Signcryptext
    sent_at: int
    hop_trace: list[str] = field(default_factory=list)
    status: str = "InFlight"
    delivered_at: Optional[int] = None
    forwards: int = 0
    relay_probes: dict[str, bool] = field(default_factory=dict)
    stream_id: Optional[int] = None


@dataclass(order=True)
class SimEvent:
    time: int
    index: int
    kind: EventKind = field(compare=False)
    payload: dict = field(compare=False, default_factory=dict)


@dataclass
class _Stream:
    stream_id: int
    node_id: str
    period: int
    frame_size: int
    stop: Optional[int]
    frames: int = 0
    active: bool = True


@dataclass
class _Convoy:
    poses: dict[str, Pose]
    assignment: TrackingAssignment
    cam: CameraModel
    kin: Kinematics
    script: list[tuple[float, MovementCommand]]


@dataclass
class SimReport:
    records: list[dict]
    delivery_times: dict[int, int]
    hop_traces: dict[int, list[str]]
    verification_failures: int
    drops: int
    relay_leaks: int
    violations: list[str]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in self.records)

    @property
    def deliveries(self) -> int:
        return len(self.delivery_times)


class Simulation:
    """Event loop owning every node, envelope, and random stream.

    Single-threaded by contract: nothing here is safe to touch from two
    threads. Run independent seeds in independent instances instead.
    """

    def __init__(
        self,
        plan: ChainPlan,
        config: Optional[SimConfig] = None,
        registry=None,
        params: Optional[GroupParams] = None,
        pool: Optional[AddressPool] = None,
    ):
        self.config = config or SimConfig()
        self.plan = plan
        self.params = params or default_params()
        seed = self.config.seed
        self._key_rng = random.Random(f"{seed}/keys")
        self._nonce_rng = random.Random(f"{seed}/nonce")
        self._channel_rng = random.Random(f"{seed}/channel")
        self._payload_rng = random.Random(f"{seed}/payload")

        registry = plan.node_ids if registry is None else registry
        self.station = BaseStation(self.params, self._key_rng, registry, pool)
        self.nodes: dict[str, RobotNode] = {
            nid: RobotNode(nid, pos) for nid, pos in zip(plan.node_ids, plan.node_positions)
        }
        if self.nodes:
            self.nodes[plan.node_ids[-1]].role = Role.MASTER
        self.order = [BASE_STATION_ID] + plan.node_ids
        self.now = 0
        self._queue: list[SimEvent] = []
        self._index = 0
        self._records: list[dict] = []
        self.envelopes: dict[int, MessageEnvelope] = {}
        self._seq: Counter = Counter()
        self._last_seen: dict[tuple[str, str], int] = {}
        self._streams: dict[int, _Stream] = {}
        self.tamper_hops: set[str] = set()
        self._convoy: Optional[_Convoy] = None
        self._env_counter = 0
        self.end_devices: dict[str, ipaddress.IPv4Address] = {}

    # -- membership -------------------------------------------------------

    @property
    def joined(self) -> set[str]:
        return {BASE_STATION_ID} | {n.id for n in self.nodes.values() if n.joined}

    def keys_of(self, ident: str) -> IdentityKeyPair:
        if ident == BASE_STATION_ID:
            return self.station.keys
        node = self.nodes.get(ident)
        if node is None or node.keys is None:
            raise SendError(f"{ident!r} has not joined the network")
        return node.keys

    def join(self, node_id: str) -> JoinOutcome:
        """Provision ``node_id`` right now (setup-phase, trusted channel)."""
        node = self.nodes.get(node_id) or RobotNode(node_id)
        outcome = self.station.join(node)
        if outcome.accepted:
            self.nodes.setdefault(node_id, node)
        self._emit(EventKind.JOIN, node_id, BASE_STATION_ID, 0, "Joined" if outcome.accepted else "Rejected")
        return outcome

    def join_all(self) -> list[JoinOutcome]:
        return [self.join(nid) for nid in self.plan.node_ids]

    def add_end_device(self, owner: str) -> ipaddress.IPv4Address:
        addr = self.station.pool.allocate(owner, AddressKind.END_DEVICE)
        self.end_devices[owner] = addr
        return addr

    # -- scheduling -------------------------------------------------------

    def _new_envelope_id(self) -> int:
        self._env_counter += 1
        return self._env_counter - 1

    def schedule(self, time: int, kind: EventKind, **payload) -> SimEvent:
        if time < self.now:
            raise ValueError(f"cannot schedule at {time} before now={self.now}")
        ev = SimEvent(int(time), self._index, kind, payload)
        self._index += 1
        heapq.heappush(self._queue, ev)
        return ev

    def send_message(self, sender_id: str, receiver_id: str, m: bytes, at: Optional[int] = None) -> int:
        """Queue an end-to-end signcrypted message; returns its envelope id."""
        for ident in (sender_id, receiver_id):
            self.keys_of(ident)
        if sender_id == receiver_id:
            raise SendError("sender and receiver must differ")
        if not m:
            raise SendError("message must be non-empty")
        env_id = self._new_envelope_id()
        self.schedule(self.now if at is None else at, EventKind.SEND, env=env_id, sender=sender_id, receiver=receiver_id, m=bytes(m))
        return env_id

    def start_telemetry_stream(self, node_id: str, period: int, frame_size: int, start: Optional[int] = None, stop: Optional[int] = None) -> int:
        """Periodic synthetic frames from ``node_id`` to the base station.

        Frames go out at ``start + k * period`` for as long as that is below
        ``stop`` (or until :meth:`stop_stream`).
        """
        self.keys_of(node_id)
        if period <= 0 or frame_size <= 0:
            raise ValueError("period and frame_size must be positive")
        sid = len(self._streams)
        self._streams[sid] = _Stream(sid, node_id, period, frame_size, stop)
        self.schedule(self.now if start is None else start, EventKind.SEND, stream=sid)
        return sid

    def stop_stream(self, stream_id: int):
        self._streams[stream_id].active = False

    def replay(self, envelope_id: int, at: Optional[int] = None):
        """Re-inject a copy of an earlier envelope as an on-path adversary would."""
        self.schedule(self.now if at is None else at, EventKind.SEND, replay=envelope_id)

    def attach_convoy(
        self,
        poses: dict[str, Pose],
        assignment: TrackingAssignment,
        cam: CameraModel,
        kin: Kinematics,
        script: list[tuple[float, MovementCommand]],
    ):
        """Drive the convoy on every tick; ``script`` times are in ms."""
        assignment.check_camera(cam)
        self._convoy = _Convoy(dict(poses), assignment, cam, kin, sorted(script, key=lambda s: s[0]))
        for rid in assignment.order:
            if rid in self.nodes:
                self.nodes[rid].role = Role.MASTER if rid == assignment.master else Role.SLAVE
        self.schedule(self.now, EventKind.TICK)

    @property
    def convoy_poses(self) -> dict[str, Pose]:
        return dict(self._convoy.poses) if self._convoy else {}

    # -- event loop -------------------------------------------------------

    def run(self, until: int) -> SimReport:
        while self._queue and self._queue[0].time <= until:
            ev = heapq.heappop(self._queue)
            self.now = ev.time
            handler = {
                EventKind.SEND: self._on_send,
                EventKind.FORWARD: self._on_forward,
                EventKind.TICK: self._on_tick,
            }[ev.kind]
            handler(ev)
        return self.report()

    def _emit(self, kind: EventKind, sender: str, receiver: str, hops: int, outcome: str, env: Optional[int] = None, **extra):
        rec: dict[str, Any] = {
            "time": self.now,
            "event": kind.value,
            "sender": sender,
            "receiver": receiver,
            "hops": hops,
            "outcome": outcome,
        }
        if env is not None:
            rec["envelope"] = env
        rec.update(extra)
        self._records.append(rec)

    def _on_send(self, ev: SimEvent):
        p = ev.payload
        if "stream" in p:
            self._stream_frame(self._streams[p["stream"]])
            return
        if "replay" in p:
            orig = self.envelopes[p["replay"]]
            env = MessageEnvelope(self._new_envelope_id(), orig.sender_id, orig.receiver_id, orig.seq, orig.sigma, self.now)
            self.envelopes[env.envelope_id] = env
            self._emit(EventKind.SEND, env.sender_id, env.receiver_id, 0, "Replayed", env.envelope_id)
            self._transmit(env, env.sender_id)
            return
        self._originate(p["env"], p["sender"], p["receiver"], p["m"])

    def _originate(self, env_id: int, sender_id: str, receiver_id: str, m: bytes, stream_id: Optional[int] = None) -> MessageEnvelope:
        sender = self.keys_of(sender_id)
        sigma = ibsc.signcrypt(sender, receiver_id, m, self.station.master_public, self._nonce_rng)
        self._seq[(sender_id, receiver_id)] += 1
        env = MessageEnvelope(env_id, sender_id, receiver_id, self._seq[(sender_id, receiver_id)], sigma, self.now, stream_id=stream_id)
        self.envelopes[env_id] = env
        if sender_id in self.nodes:
            self.nodes[sender_id].outbox.append(env_id)
        self._emit(EventKind.SEND, sender_id, receiver_id, 0, "Sent", env.envelope_id)
        self._transmit(env, sender_id)
        return env

    def _stream_frame(self, stream: _Stream):
        if not stream.active or (stream.stop is not None and self.now >= stream.stop):
            stream.active = False
            return
        header = f"frame:{stream.stream_id}:{stream.frames}:".encode()
        body = self._payload_rng.randbytes(max(0, stream.frame_size - len(header)))
        frame = (header + body)[: stream.frame_size]
        stream.frames += 1
        self._originate(self._new_envelope_id(), stream.node_id, BASE_STATION_ID, frame, stream.stream_id)
        self.schedule(self.now + stream.period, EventKind.SEND, stream=stream.stream_id)

    def _transmit(self, env: MessageEnvelope, frm: str):
        try:
            nxt = route_next_hop(self.order, self.joined, frm, env.receiver_id)
        except RoutingError as exc:
            self._drop(env, "NoRoute")
            log.debug("no route for envelope %d: %s", env.envelope_id, exc)
            return
        if nxt not in self.joined:
            self._drop(env, "NoRoute")
            return
        if frm in self.tamper_hops and frm != env.sender_id:
            env.sigma = _flip_random_bit(env.sigma, self._channel_rng)
        if self.config.drop_probability and self._channel_rng.random() < self.config.drop_probability:
            self._drop(env, "Lost")
            return
        self.schedule(self.now + self.config.per_hop_latency, EventKind.FORWARD, env=env.envelope_id, node=nxt)

    def _drop(self, env: MessageEnvelope, why: str):
        env.status = "Dropped"
        self._emit(EventKind.DROP, env.sender_id, env.receiver_id, len(env.hop_trace), why, env.envelope_id)

    def _on_forward(self, ev: SimEvent):
        env = self.envelopes[ev.payload["env"]]
        node_id = ev.payload["node"]
        env.hop_trace.append(node_id)
        env.forwards += 1
        self._emit(EventKind.FORWARD, env.sender_id, env.receiver_id, len(env.hop_trace), "Forwarded", env.envelope_id, node=node_id)
        if node_id == env.receiver_id:
            self._deliver(env)
            return
        if self.config.probe_relays:
            # an honest-but-curious relay trying to open traffic not meant for it
            attempt = ibsc.unsigncrypt(self.keys_of(node_id), env.sender_id, env.sigma, self.station.master_public)
            env.relay_probes[node_id] = attempt.ok
        self._transmit(env, node_id)

    def _deliver(self, env: MessageEnvelope):
        receiver = self.keys_of(env.receiver_id)
        result = ibsc.unsigncrypt(receiver, env.sender_id, env.sigma, self.station.master_public)
        key = (env.sender_id, env.receiver_id)
        if not result.ok:
            outcome = result.rejection.value
        elif env.seq <= self._last_seen.get(key, 0):
            outcome = "Replay"
        else:
            outcome = "Delivered"
            self._last_seen[key] = env.seq
            env.delivered_at = self.now
            inbox = self.station.inbox if env.receiver_id == BASE_STATION_ID else self.nodes[env.receiver_id].inbox
            inbox.append((env.sender_id, result.plaintext))
        env.status = outcome
        self._emit(EventKind.DELIVER, env.sender_id, env.receiver_id, len(env.hop_trace), outcome, env.envelope_id)
        if env.receiver_id == BASE_STATION_ID:
            self.station.record({"event": "Deliver", "envelope": env.envelope_id, "sender": env.sender_id, "time": self.now, "outcome": outcome})

    def _on_tick(self, ev: SimEvent):
        c = self._convoy
        cmd = command_at(c.script, self.now)
        step = convoy_update(c.poses, c.assignment, c.cam, c.kin, cmd)
        c.poses = step.poses
        for rid in c.assignment.order:
            pose = step.poses[rid]
            det = step.detections.get(rid)
            self._records.append({
                "time": self.now,
                "event": "Pose",
                "robot": rid,
                "x": pose.x,
                "y": pose.y,
                "heading": pose.heading,
                "command": step.commands[rid].value,
                "detected": None if rid == c.assignment.master else det is not None,
            })
        self.schedule(self.now + self.config.tick, EventKind.TICK)

    # -- reporting --------------------------------------------------------

    def report(self) -> SimReport:
        delivered = {e.envelope_id: e.delivered_at for e in self.envelopes.values() if e.delivered_at is not None}
        return SimReport(
            records=list(self._records),
            delivery_times=delivered,
            hop_traces={e.envelope_id: list(e.hop_trace) for e in self.envelopes.values()},
            verification_failures=sum(1 for e in self.envelopes.values() if e.status in ("VerifyFailed", "MalformedSigma")),
            drops=sum(1 for e in self.envelopes.values() if e.status == "Dropped"),
            relay_leaks=sum(sum(e.relay_probes.values()) for e in self.envelopes.values()),
            violations=self.check_invariants(),
        )

    def check_invariants(self) -> list[str]:
        problems = []
        terminal = Counter(r["envelope"] for r in self._records if r["event"] in ("Deliver", "Drop"))
        for env in self.envelopes.values():
            if len(env.hop_trace) != env.forwards:
                problems.append(f"envelope {env.envelope_id}: hop trace {len(env.hop_trace)} != forwards {env.forwards}")
            if terminal[env.envelope_id] > 1:
                problems.append(f"envelope {env.envelope_id}: {terminal[env.envelope_id]} terminal outcomes")
            leaked = sorted(n for n, ok in env.relay_probes.items() if ok)
            if leaked:
                problems.append(f"envelope {env.envelope_id}: relay(s) {leaked} opened it")
        pool = self.station.pool
        if pool.base_station_address in pool.allocations or pool.broadcast_address in pool.allocations:
            problems.append("base-station or broadcast address allocated")
        for node in self.nodes.values():
            if node.joined:
                if node.uplink_addr == node.downlink_addr or not (pool.is_node_address(node.uplink_addr) and pool.is_node_address(node.downlink_addr)):
                    problems.append(f"{node.id}: bad interface addresses")
            elif node.uplink_addr or node.downlink_addr:
                problems.append(f"{node.id}: addresses without keys")
        return problems


def _flip_random_bit(sigma: Signcryptext, rng: random.Random) -> Signcryptext:
    c = bytearray(sigma.c)
    bit = rng.randrange(len(c) * 8)
    c[bit // 8] ^= 1 << (bit % 8)
    return Signcryptext(bytes(c), sigma.t, sigma.u)
