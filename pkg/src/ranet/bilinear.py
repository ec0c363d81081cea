"""Bilinear group arithmetic over a desk-scale "exponent" backend.

The additive group G is Z_q with each element a*P stored as the exponent a,
the multiplicative group V is the order-q subgroup of Z_p^*, and the pairing
is e(aP, bP) = g^(ab) mod p. This is algebraically faithful and
cryptographically void: discrete logs in G are free. It exists so that every
identity the signcryption scheme relies on can be checked by enumeration.

Operators follow the usual notation::

    a + b, -a, k * a      in G (k a Scalar or int)
    x * y, x ** k         in V
"""

from __future__ import annotations

import enum
import hashlib
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from sympy import isprime

__all__ = [
    "Backend",
    "HashSuite",
    "GroupParams",
    "GElement",
    "VElement",
    "Scalar",
    "ParameterMismatchError",
    "InvalidParamsError",
    "DecodeError",
    "default_params",
    "wide_params",
    "find_subgroup_generator",
    "load_params",
    "g_add",
    "g_scalar_mul",
    "pairing",
    "v_mul",
    "v_exp",
    "h1",
    "h2",
    "h3_expand",
    "random_scalar",
]


class ParameterMismatchError(ValueError):
    """Raised when elements from different group settings are combined."""


class InvalidParamsError(ValueError):
    pass


class DecodeError(ValueError):
    """Raised when bytes do not decode to a valid element of the group."""


class Backend(enum.Enum):
    EXPONENT = "exponent"
    EXTERNAL = "external"


@dataclass(frozen=True)
class HashSuite:
    """Domain-separated hash functions H1, H2, H3 over one 256-bit digest."""

    h1_domain_tag: bytes = b"RANET-H1"
    h2_domain_tag: bytes = b"RANET-H2"
    h3_domain_tag: bytes = b"RANET-H3"
    base_hash: str = "sha256"

    def __post_init__(self):
        tags = {self.h1_domain_tag, self.h2_domain_tag, self.h3_domain_tag}
        if len(tags) != 3:
            raise InvalidParamsError("hash domain tags must be pairwise distinct")
        try:
            size = hashlib.new(self.base_hash).digest_size
        except ValueError as exc:
            raise InvalidParamsError(f"unknown digest {self.base_hash!r}") from exc
        if size != 32:
            raise InvalidParamsError(f"{self.base_hash} is not a 256-bit digest")

    def digest(self, *parts: bytes) -> bytes:
        h = hashlib.new(self.base_hash)
        for part in parts:
            h.update(part)
        return h.digest()


@dataclass(frozen=True)
class GroupParams:
    """The bilinear setting (q, G, V, P, e) plus the message block size n.

    For the exponent backend ``p`` is a prime with ``q | p - 1`` and ``g``
    generates the order-q subgroup of Z_p^*.
    """

    q: int
    p: int
    g: int
    n: int = 256
    backend: Backend = Backend.EXPONENT
    hashes: HashSuite = field(default_factory=HashSuite)

    def __post_init__(self):
        if not isinstance(self.backend, Backend):
            object.__setattr__(self, "backend", Backend(self.backend))
        if self.n < 8:
            raise InvalidParamsError(f"n must be at least 8, got {self.n}")
        if not isprime(self.q):
            raise InvalidParamsError(f"q={self.q} is not prime")
        if self.backend is Backend.EXPONENT:
            if not isprime(self.p):
                raise InvalidParamsError(f"p={self.p} is not prime")
            if (self.p - 1) % self.q:
                raise InvalidParamsError(f"q={self.q} does not divide p-1={self.p - 1}")
            if not 1 < self.g < self.p or pow(self.g, self.q, self.p) != 1:
                raise InvalidParamsError(f"g={self.g} does not generate the order-{self.q} subgroup")

    @property
    def scalar_len(self) -> int:
        return (self.q.bit_length() + 7) // 8

    @property
    def v_len(self) -> int:
        return (self.p.bit_length() + 7) // 8

    @property
    def generator(self) -> GElement:
        return GElement(self, 1)

    @property
    def identity(self) -> GElement:
        return GElement(self, 0)

    @property
    def v_identity(self) -> VElement:
        return VElement(self, 1)

    def _require_exponent(self):
        if self.backend is not Backend.EXPONENT:
            raise NotImplementedError(f"backend {self.backend.value!r} is not available")

    def to_config(self) -> str:
        return (
            f"backend = {self.backend.value}\n"
            f"q = {self.q}\np = {self.p}\ng = {self.g}\nn = {self.n}\n"
        )


def find_subgroup_generator(p: int, q: int) -> int:
    """Smallest h^((p-1)/q) mod p, over h = 2, 3, ..., that is not 1."""
    cofactor = (p - 1) // q
    for h in range(2, p):
        g = pow(h, cofactor, p)
        if g != 1:
            return g
    raise InvalidParamsError(f"no order-{q} element modulo {p}")


def default_params() -> GroupParams:
    """q=101, p=607: the smallest setting that keeps exhaustive checks cheap."""
    return GroupParams(q=101, p=607, g=find_subgroup_generator(607, 101))


def wide_params() -> GroupParams:
    """Exponent backend with the Mersenne prime q = 2^61 - 1 and p = 52q + 1.

    Still insecure, but the soundness error 1/(q-1) of the signcryption
    check becomes negligible, unlike at q = 101 where it is about 1%.
    """
    q = 2**61 - 1
    p = 52 * q + 1
    return GroupParams(q=q, p=p, g=find_subgroup_generator(p, q))


def load_params(source: Union[str, Path]) -> GroupParams:
    """Parse a plain ``key = value`` (or ``key: value``) config.

    Recognised keys are ``q``, ``p``, ``g``, ``n`` and ``backend``; ``g`` is
    derived from (p, q) when omitted. Blank lines and ``#`` comments are
    ignored.
    """
    text = Path(source).read_text() if isinstance(source, Path) else source
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = (s.strip() for s in line.split(sep, 1))
                break
        else:
            raise InvalidParamsError(f"line {lineno}: expected key = value")
        if key not in {"q", "p", "g", "n", "backend"}:
            raise InvalidParamsError(f"line {lineno}: unknown key {key!r}")
        fields[key] = value
    try:
        q, p = int(fields["q"], 0), int(fields["p"], 0)
        backend = Backend(fields.get("backend", "exponent").lower())
        g = int(fields["g"], 0) if "g" in fields else find_subgroup_generator(p, q)
        n = int(fields.get("n", "256"), 0)
    except KeyError as exc:
        raise InvalidParamsError(f"missing required key {exc.args[0]!r}") from None
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidParamsError(str(exc)) from None
    return GroupParams(q=q, p=p, g=g, n=n, backend=backend)


def _check_same(a, b):
    if a.params != b.params:
        raise ParameterMismatchError("elements belong to different group parameters")


@dataclass(frozen=True)
class Scalar:
    params: GroupParams = field(repr=False)
    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.params.q)

    def is_nonzero(self) -> bool:
        return self.value != 0

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(self.params.scalar_len, "big")

    @classmethod
    def from_bytes(cls, params: GroupParams, data: bytes) -> Scalar:
        return cls(params, _decode_int(data, params.scalar_len, params.q))

    def __int__(self):
        return self.value


@dataclass(frozen=True)
class GElement:
    """Element of G; the exponent backend stores a*P as ``a``."""

    params: GroupParams = field(repr=False)
    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.params.q)

    def __add__(self, other: GElement) -> GElement:
        if not isinstance(other, GElement):
            return NotImplemented
        return g_add(self, other)

    def __neg__(self) -> GElement:
        return GElement(self.params, -self.value)

    def __sub__(self, other: GElement) -> GElement:
        if not isinstance(other, GElement):
            return NotImplemented
        return g_add(self, -other)

    def __rmul__(self, k) -> GElement:
        if isinstance(k, int):
            k = Scalar(self.params, k)
        if not isinstance(k, Scalar):
            return NotImplemented
        return g_scalar_mul(k, self)

    def is_identity(self) -> bool:
        return self.value == 0

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(self.params.scalar_len, "big")

    @classmethod
    def from_bytes(cls, params: GroupParams, data: bytes) -> GElement:
        return cls(params, _decode_int(data, params.scalar_len, params.q))


@dataclass(frozen=True)
class VElement:
    """Element of the order-q subgroup of Z_p^*."""

    params: GroupParams = field(repr=False)
    value: int

    def __post_init__(self):
        p = self.params.p
        if not 1 <= self.value < p or pow(self.value, self.params.q, p) != 1:
            raise DecodeError(f"{self.value} is not in the order-{self.params.q} subgroup mod {p}")

    def __mul__(self, other: VElement) -> VElement:
        if not isinstance(other, VElement):
            return NotImplemented
        return v_mul(self, other)

    def __pow__(self, k) -> VElement:
        if isinstance(k, int):
            k = Scalar(self.params, k)
        return v_exp(self, k)

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(self.params.v_len, "big")

    @classmethod
    def from_bytes(cls, params: GroupParams, data: bytes) -> VElement:
        return cls(params, _decode_int(data, params.v_len, params.p))


def _decode_int(data: bytes, width: int, bound: int) -> int:
    if len(data) != width:
        raise DecodeError(f"expected {width} bytes, got {len(data)}")
    value = int.from_bytes(data, "big")
    if value >= bound:
        raise DecodeError(f"encoded value {value} out of range [0, {bound})")
    return value


def g_add(a: GElement, b: GElement) -> GElement:
    _check_same(a, b)
    a.params._require_exponent()
    return GElement(a.params, a.value + b.value)


def g_scalar_mul(k: Scalar, a: GElement) -> GElement:
    _check_same(k, a)
    a.params._require_exponent()
    return GElement(a.params, k.value * a.value)


def pairing(a: GElement, b: GElement) -> VElement:
    _check_same(a, b)
    params = a.params
    params._require_exponent()
    return VElement(params, pow(params.g, a.value * b.value % params.q, params.p))


def v_mul(x: VElement, y: VElement) -> VElement:
    _check_same(x, y)
    return VElement(x.params, x.value * y.value % x.params.p)


def v_exp(x: VElement, k: Scalar) -> VElement:
    _check_same(x, k)
    return VElement(x.params, pow(x.value, k.value, x.params.p))


def _counter(i: int) -> bytes:
    return i.to_bytes(4, "big")


def _nonzero_digest_mod_q(params: GroupParams, *parts: bytes) -> int:
    # first attempt carries no suffix; retries append a 4-byte counter
    suite = params.hashes
    value = int.from_bytes(suite.digest(*parts), "big") % params.q
    ctr = 1
    while value == 0:
        value = int.from_bytes(suite.digest(*parts, _counter(ctr)), "big") % params.q
        ctr += 1
    return value


def h1(params: GroupParams, identity: Union[bytes, str]) -> GElement:
    """Hash an identity onto G \\ {0} as (digest mod q) * P."""
    if isinstance(identity, str):
        identity = identity.encode()
    digest = _nonzero_digest_mod_q(params, params.hashes.h1_domain_tag, identity)
    return g_scalar_mul(Scalar(params, digest), params.generator)


def h2(t: GElement, m: bytes) -> Scalar:
    """Hash the fixed-width encoding of ``t`` followed by ``m`` into Z_q^*."""
    params = t.params
    return Scalar(params, _nonzero_digest_mod_q(params, params.hashes.h2_domain_tag, t.to_bytes(), m))


def h3_expand(y: VElement, length: int | None = None) -> bytes:
    """Counter-mode keystream derived from ``y``.

    ``length`` defaults to the parameter block size n (in bits, rounded up
    to whole bytes).
    """
    params = y.params
    if length is None:
        length = (params.n + 7) // 8
    if length < 1:
        raise ValueError("keystream length must be at least 1")
    suite = params.hashes
    seed = y.to_bytes()
    blocks = []
    produced = 0
    ctr = 0
    while produced < length:
        block = suite.digest(suite.h3_domain_tag, seed, _counter(ctr))
        blocks.append(block)
        produced += len(block)
        ctr += 1
    return b"".join(blocks)[:length]


def random_scalar(params: GroupParams, rng: random.Random) -> Scalar:
    """Uniform draw from Z_q^* using the caller's seeded generator."""
    return Scalar(params, rng.randrange(1, params.q))
