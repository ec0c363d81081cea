"""Identity-based signcryption: setup, extract, signcrypt, unsigncrypt.

Key naming follows the usual IBE convention: the base station's random scalar
``s`` is the master *secret* and ``s*P`` the master *public* key. Every
formula of the scheme is written under that reading::

    Q_id = H1(id)                  S_id = s * Q_id
    T = x*P    r = H2(T || m)      W = x * P_pub     U = r*S_a + W
    k = H3(e(W, Q_b))              c = k XOR m
    receiver: k = H3(e(S_b, T)),   m = k XOR c,      r = H2(T || m)
    accept iff e(U, P) == e(Q_a, P_pub)^r * e(T, P_pub)
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Optional, Union

from .bilinear import (
    DecodeError,
    GElement,
    GroupParams,
    Scalar,
    g_add,
    g_scalar_mul,
    h1,
    h2,
    h3_expand,
    pairing,
    random_scalar,
    v_exp,
    v_mul,
)

Identity = Union[bytes, str]


class InvalidIdentityError(ValueError):
    pass


class InvalidMessageError(ValueError):
    pass


def _id_bytes(identity: Identity) -> bytes:
    return identity.encode() if isinstance(identity, str) else bytes(identity)


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


@dataclass(frozen=True)
class MasterKeyPair:
    secret: Scalar
    public: GElement

    def __post_init__(self):
        if not self.secret.is_nonzero():
            raise ValueError("master secret must lie in Z_q^*")
        if g_scalar_mul(self.secret, self.public.params.generator) != self.public:
            raise ValueError("master public key is not secret * P")

    @property
    def params(self) -> GroupParams:
        return self.public.params


@dataclass(frozen=True)
class IdentityKeyPair:
    id: bytes
    q_id: GElement
    s_id: GElement

    @property
    def params(self) -> GroupParams:
        return self.q_id.params


@dataclass(frozen=True)
class Signcryptext:
    """The tuple (c, T, U).

    ``to_bytes`` yields ``T || U || c`` with T and U at fixed width, so the
    ciphertext needs no length field.
    """

    c: bytes
    t: GElement
    u: GElement

    def to_bytes(self) -> bytes:
        return self.t.to_bytes() + self.u.to_bytes() + self.c

    @classmethod
    def from_bytes(cls, params: GroupParams, data: bytes) -> Signcryptext:
        w = params.scalar_len
        if len(data) < 2 * w + 1:
            raise DecodeError(f"signcryptext too short ({len(data)} bytes)")
        t = GElement.from_bytes(params, data[:w])
        u = GElement.from_bytes(params, data[w:2 * w])
        return cls(c=bytes(data[2 * w:]), t=t, u=u)


def pack_wire(sender_id: Identity, sigma: Signcryptext) -> bytes:
    """Wire encoding: 2-byte big-endian sender-id length, sender id, T, U, c."""
    sid = _id_bytes(sender_id)
    if len(sid) > 0xFFFF:
        raise InvalidIdentityError("sender id longer than 65535 bytes")
    return len(sid).to_bytes(2, "big") + sid + sigma.to_bytes()


def unpack_wire(params: GroupParams, data: bytes) -> tuple[bytes, Signcryptext]:
    if len(data) < 2:
        raise DecodeError("truncated sender-id length")
    n = int.from_bytes(data[:2], "big")
    if len(data) < 2 + n:
        raise DecodeError("truncated sender id")
    return bytes(data[2:2 + n]), Signcryptext.from_bytes(params, data[2 + n:])


class Rejection(enum.Enum):
    VERIFY_FAILED = "VerifyFailed"
    MALFORMED_SIGMA = "MalformedSigma"


@dataclass(frozen=True)
class UnsigncryptOutcome:
    """Either the recovered plaintext or a rejection (the bottom symbol)."""

    plaintext: Optional[bytes] = None
    rejection: Optional[Rejection] = None

    def __post_init__(self):
        if (self.plaintext is None) == (self.rejection is None):
            raise ValueError("exactly one of plaintext/rejection must be set")

    @property
    def ok(self) -> bool:
        return self.plaintext is not None

    def __bool__(self):
        return self.ok


def setup(params: GroupParams, rng: random.Random) -> MasterKeyPair:
    s = random_scalar(params, rng)
    return MasterKeyPair(secret=s, public=g_scalar_mul(s, params.generator))


def extract(master: MasterKeyPair, identity: Identity) -> IdentityKeyPair:
    ident = _id_bytes(identity)
    if not ident:
        raise InvalidIdentityError("identity must be non-empty")
    q_id = h1(master.params, ident)
    return IdentityKeyPair(id=ident, q_id=q_id, s_id=g_scalar_mul(master.secret, q_id))


def signcrypt(
    sender: IdentityKeyPair,
    receiver_id: Identity,
    m: bytes,
    master_public: GElement,
    rng: random.Random,
) -> Signcryptext:
    if not m:
        raise InvalidMessageError("message must be non-empty")
    params = master_public.params
    receiver = _id_bytes(receiver_id)
    if not receiver:
        raise InvalidIdentityError("receiver identity must be non-empty")
    q_b = h1(params, receiver)
    x = random_scalar(params, rng)
    t = g_scalar_mul(x, params.generator)
    r = h2(t, m)
    w = g_scalar_mul(x, master_public)
    u = g_add(g_scalar_mul(r, sender.s_id), w)
    k = h3_expand(pairing(w, q_b), len(m))
    return Signcryptext(c=_xor(k, m), t=t, u=u)


def verification_holds(q_sender: GElement, sigma: Signcryptext, r: Scalar, master_public: GElement) -> bool:
    """e(U, P) == e(Q_sender, P_pub)^r * e(T, P_pub)."""
    p = master_public.params.generator
    lhs = pairing(sigma.u, p)
    rhs = v_mul(v_exp(pairing(q_sender, master_public), r), pairing(sigma.t, master_public))
    return lhs == rhs


def unsigncrypt(
    receiver: IdentityKeyPair,
    sender_id: Identity,
    sigma: Union[Signcryptext, bytes],
    master_public: GElement,
) -> UnsigncryptOutcome:
    """Recover and authenticate a message.

    ``sigma`` may be a :class:`Signcryptext` or its ``T || U || c`` encoding;
    bytes that fail to decode give a ``MalformedSigma`` rejection rather
    than an exception.
    """
    params = master_public.params
    if isinstance(sigma, (bytes, bytearray)):
        try:
            sigma = Signcryptext.from_bytes(params, bytes(sigma))
        except DecodeError:
            return UnsigncryptOutcome(rejection=Rejection.MALFORMED_SIGMA)
    if not sigma.c or sigma.t.params != params or sigma.u.params != params:
        return UnsigncryptOutcome(rejection=Rejection.MALFORMED_SIGMA)
    sender = _id_bytes(sender_id)
    if not sender:
        return UnsigncryptOutcome(rejection=Rejection.MALFORMED_SIGMA)

    q_a = h1(params, sender)
    k = h3_expand(pairing(receiver.s_id, sigma.t), len(sigma.c))
    m = _xor(k, sigma.c)
    r = h2(sigma.t, m)
    if not verification_holds(q_a, sigma, r, master_public):
        return UnsigncryptOutcome(rejection=Rejection.VERIFY_FAILED)
    return UnsigncryptOutcome(plaintext=m)


def pairing_consistency_check(
    master: MasterKeyPair,
    sender: IdentityKeyPair,
    receiver: IdentityKeyPair,
    x: Scalar,
) -> bool:
    """Check that both ends derive the same pairing value for nonce ``x``.

    The sender computes e(x * P_pub, Q_b); the receiver computes e(S_b, x*P).
    ``sender`` is accepted for symmetry with the protocol call sites but does
    not enter the identity.
    """
    if not x.is_nonzero():
        raise ValueError("x must lie in Z_q^*")
    params = master.params
    sent = pairing(g_scalar_mul(x, master.public), receiver.q_id)
    received = pairing(receiver.s_id, g_scalar_mul(x, params.generator))
    return sent == received


@dataclass(frozen=True)
class GoldenVector:
    """One frozen run: seed -> setup, extract(id_a), extract(id_b), signcrypt."""

    seed: int
    id_a: bytes
    id_b: bytes
    m: bytes
    c: bytes
    t: bytes
    u: bytes

    def to_line(self) -> str:
        seed = self.seed.to_bytes(max(1, (self.seed.bit_length() + 7) // 8), "big")
        return " ".join(f.hex() for f in (seed, self.id_a, self.id_b, self.m, self.c, self.t, self.u))

    @classmethod
    def from_line(cls, line: str) -> GoldenVector:
        fields = [bytes.fromhex(f) for f in line.split()]
        if len(fields) != 7:
            raise ValueError(f"expected 7 hex fields, got {len(fields)}")
        seed, id_a, id_b, m, c, t, u = fields
        return cls(int.from_bytes(seed, "big"), id_a, id_b, m, c, t, u)


def make_golden_vector(params: GroupParams, seed: int, id_a: Identity, id_b: Identity, m: bytes) -> GoldenVector:
    rng = random.Random(seed)
    master = setup(params, rng)
    sender = extract(master, id_a)
    sigma = signcrypt(sender, id_b, m, master.public, rng)
    return GoldenVector(seed, _id_bytes(id_a), _id_bytes(id_b), m, sigma.c, sigma.t.to_bytes(), sigma.u.to_bytes())


def read_golden_vectors(text: str) -> list[GoldenVector]:
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(GoldenVector.from_line(line))
    return out
