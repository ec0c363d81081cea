"""Exhaustive algebra checks for small exponent-backend groups."""

from __future__ import annotations

import random
from typing import Callable, Iterator

from . import ibsc
from .bilinear import GElement, GroupParams, Scalar, VElement, h1, h2, pairing, v_exp


def _bilinearity(params: GroupParams) -> bool:
    P = params.generator
    base = pairing(P, P)
    return all(
        pairing(GElement(params, a), GElement(params, b)) == v_exp(base, Scalar(params, a * b))
        for a in range(params.q)
        for b in range(params.q)
    )


def _non_degenerate(params: GroupParams) -> bool:
    P = params.generator
    return pairing(P, P) != params.v_identity


def _symmetric(params: GroupParams) -> bool:
    return all(
        pairing(GElement(params, a), GElement(params, b)) == pairing(GElement(params, b), GElement(params, a))
        for a in range(params.q)
        for b in range(a, params.q)
    )


def _g_group_laws(params: GroupParams) -> bool:
    zero = params.identity
    elems = [GElement(params, a) for a in range(params.q)]
    rng = random.Random(0)
    for a in elems:
        if a + zero != a or a + (-a) != zero or params.q * a != zero:
            return False
        b, c = rng.choice(elems), rng.choice(elems)
        if (a + b) + c != a + (b + c):
            return False
    return True


def _v_group_laws(params: GroupParams) -> bool:
    g = VElement(params, params.g)
    one = params.v_identity
    powers = {pow(params.g, k, params.p) for k in range(params.q)}
    return len(powers) == params.q and g ** params.q == one and g * one == g


def _hash_codomains(params: GroupParams) -> bool:
    ids = [f"robot-{i}".encode() for i in range(4 * params.q)]
    if any(h1(params, i).is_identity() for i in ids):
        return False
    t = params.generator
    return all(h2(t, m).is_nonzero() for m in ids)


def _extraction_consistency(params: GroupParams) -> bool:
    master = ibsc.setup(params, random.Random(1))
    a, b = ibsc.extract(master, "A"), ibsc.extract(master, "B")
    return all(ibsc.pairing_consistency_check(master, a, b, Scalar(params, x)) for x in range(1, params.q))


def _round_trip(params: GroupParams) -> bool:
    rng = random.Random(2)
    master = ibsc.setup(params, rng)
    for i in range(200):
        a, b = ibsc.extract(master, f"a{i}"), ibsc.extract(master, f"b{i}")
        m = rng.randbytes(rng.randint(1, 48))
        sigma = ibsc.signcrypt(a, b.id, m, master.public, rng)
        if ibsc.unsigncrypt(b, a.id, sigma, master.public).plaintext != m:
            return False
    return True


CHECKS: list[tuple[str, Callable[[GroupParams], bool]]] = [
    ("bilinearity (all a, b)", _bilinearity),
    ("non-degeneracy", _non_degenerate),
    ("pairing symmetry", _symmetric),
    ("G group laws", _g_group_laws),
    ("V subgroup order", _v_group_laws),
    ("H1/H2 codomains", _hash_codomains),
    ("e(xP_pub, Q_b) == e(S_b, xP) for all x", _extraction_consistency),
    ("signcrypt/unsigncrypt round trip", _round_trip),
]


def run_selftest(params: GroupParams) -> Iterator[tuple[str, bool]]:
    if params.q > 1000:
        raise ValueError("selftest enumerates the whole group; use q <= 1000")
    for name, check in CHECKS:
        yield name, check(params)
