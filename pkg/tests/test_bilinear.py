import hashlib
import random

import pytest
from hypothesis import given, settings, strategies as st

from ranet.bilinear import (
    Backend,
    DecodeError,
    GElement,
    GroupParams,
    HashSuite,
    InvalidParamsError,
    ParameterMismatchError,
    Scalar,
    VElement,
    default_params,
    find_subgroup_generator,
    g_add,
    g_scalar_mul,
    h1,
    h2,
    h3_expand,
    load_params,
    pairing,
    random_scalar,
    v_exp,
    v_mul,
)

Q, P_MOD = 101, 607


def _trial_division_prime(n):
    return n > 1 and all(n % d for d in range(2, int(n**0.5) + 1))


def _brute_force_generator(p, q):
    for h in range(2, p):
        g = 1
        for _ in range((p - 1) // q):
            g = g * h % p
        if g != 1:
            return g


def test_default_params_oracle():
    # primality, q | p - 1 and the subgroup generator, all by brute force
    assert _trial_division_prime(Q) and _trial_division_prime(P_MOD)
    assert (P_MOD - 1) % Q == 0
    g = _brute_force_generator(P_MOD, Q)
    assert g == 64
    params = default_params()
    assert (params.q, params.p, params.g) == (Q, P_MOD, g)
    assert find_subgroup_generator(P_MOD, Q) == g


@pytest.mark.parametrize(
    "kw",
    [
        dict(q=100, p=607, g=64),  # q composite
        dict(q=101, p=605, g=64),  # p composite
        dict(q=101, p=613, g=2),  # q does not divide p-1
        dict(q=101, p=607, g=2),  # 2 has order 606, not 101
        dict(q=101, p=607, g=1),
        dict(q=101, p=607, g=64, n=4),
    ],
)
def test_invalid_params_rejected(kw):
    with pytest.raises(InvalidParamsError):
        GroupParams(**kw)


def test_hash_suite_validation():
    with pytest.raises(InvalidParamsError):
        HashSuite(h1_domain_tag=b"x", h2_domain_tag=b"x")
    with pytest.raises(InvalidParamsError):
        HashSuite(base_hash="sha512")
    assert HashSuite(base_hash="sha3_256").digest(b"a") == hashlib.sha3_256(b"a").digest()


def test_g_add(params):
    x = GElement(params, 42)
    assert g_add(params.identity, x) == x
    assert g_add(params.generator, params.generator) == GElement(params, 2)
    assert g_add(GElement(params, 70), GElement(params, 40)).value == 9


def test_g_scalar_mul(params):
    a = GElement(params, 30)
    assert g_scalar_mul(Scalar(params, 1), a) == a
    assert g_scalar_mul(Scalar(params, 0), a) == params.identity
    assert g_scalar_mul(Scalar(params, 5), a).value == 49
    assert 5 * a == GElement(params, 49)


def test_pairing_examples(params):
    P = params.generator
    assert pairing(P, params.identity) == params.v_identity
    base = pairing(P, P)
    assert pairing(2 * P, 3 * P) == v_exp(base, Scalar(params, 6))
    assert pairing(2 * P, 3 * P).value == 330


def test_v_ops(params):
    x = VElement(params, 330)
    assert v_exp(x, Scalar(params, 0)) == params.v_identity
    assert v_mul(x, params.v_identity) == x
    assert v_exp(VElement(params, params.g), Scalar(params, params.q)) == params.v_identity
    assert x * x == x ** 2


def test_velement_must_lie_in_subgroup(params):
    with pytest.raises(DecodeError):
        VElement(params, 2)
    with pytest.raises(DecodeError):
        VElement(params, 0)


def test_parameter_mismatch(params):
    other = GroupParams(q=101, p=809, g=find_subgroup_generator(809, 101))
    with pytest.raises(ParameterMismatchError):
        g_add(params.generator, other.generator)
    with pytest.raises(ParameterMismatchError):
        pairing(params.generator, other.generator)
    with pytest.raises(ParameterMismatchError):
        g_scalar_mul(Scalar(other, 2), params.generator)


def test_external_backend_slot_not_implemented():
    ext = GroupParams(q=101, p=0, g=0, backend="external")
    assert ext.backend is Backend.EXTERNAL
    with pytest.raises(NotImplementedError):
        pairing(ext.generator, ext.generator)


def test_bilinearity_exhaustive(params):
    base = pairing(params.generator, params.generator)
    for a in range(Q):
        for b in range(Q):
            assert pairing(GElement(params, a), GElement(params, b)) == v_exp(base, Scalar(params, a * b))


def test_non_degenerate_and_symmetric(params):
    assert pairing(params.generator, params.generator) != params.v_identity
    for a in range(Q):
        for b in range(a, Q):
            x, y = GElement(params, a), GElement(params, b)
            assert pairing(x, y) == pairing(y, x)


def test_g_group_laws_exhaustive(params):
    elems = [GElement(params, a) for a in range(Q)]
    for a in elems:
        assert a + params.identity == a
        assert a + (-a) == params.identity
        assert Q * a == params.identity
        for b in elems[::7]:
            assert a + b == b + a
            for c in elems[::13]:
                assert (a + b) + c == a + (b + c)


@settings(max_examples=200)
@given(st.integers(), st.integers(), st.integers())
def test_v_group_laws(a, b, c):
    params = default_params()
    g = VElement(params, params.g)
    x, y, z = g ** a, g ** b, g ** c
    assert (x * y) * z == x * (y * z)
    assert x * v_exp(x, Scalar(params, -1)) == params.v_identity


def test_h1_oracle(params):
    def oracle(ident):
        return int.from_bytes(hashlib.sha256(b"RANET-H1" + ident).digest(), "big") % Q

    assert h1(params, b"robot-A").value == oracle(b"robot-A") == 65
    assert h1(params, b"robot-B").value == oracle(b"robot-B") == 59
    assert h1(params, "robot-A") == h1(params, b"robot-A")
    assert not h1(params, b"robot-A").is_identity()


def test_h1_h2_never_zero(params):
    # over 4000 inputs a digest lands on 0 mod 101 about 40 times, so the re-hash path is exercised
    zero_hits = 0
    for i in range(4000):
        ident = f"id-{i}".encode()
        raw = int.from_bytes(hashlib.sha256(b"RANET-H1" + ident).digest(), "big") % Q
        zero_hits += raw == 0
        assert not h1(params, ident).is_identity()
        assert h2(params.generator, ident).is_nonzero()
    assert zero_hits > 0


def test_h1_rehash_follows_counter(params):
    ident = next(
        f"id-{i}".encode()
        for i in range(10_000)
        if int.from_bytes(hashlib.sha256(b"RANET-H1" + f"id-{i}".encode()).digest(), "big") % Q == 0
    )
    ctr = 1
    while True:
        v = int.from_bytes(hashlib.sha256(b"RANET-H1" + ident + ctr.to_bytes(4, "big")).digest(), "big") % Q
        if v:
            break
        ctr += 1
    assert h1(params, ident).value == v


def test_h2_oracle(params):
    t = GElement(params, 17)
    expected = int.from_bytes(hashlib.sha256(b"RANET-H2" + bytes([17]) + b"hello").digest(), "big") % Q
    assert expected != 0
    assert h2(t, b"hello").value == expected
    assert h2(t, b"hello") == h2(t, b"hello")
    assert h2(t, b"hello") != h2(t, b"hellp")


def test_h3_expand(params):
    y = VElement(params, 330)
    ks = h3_expand(y, 100)
    assert len(ks) == 100
    assert ks == h3_expand(y, 100)
    assert h3_expand(y, 32)[:16] == h3_expand(y, 16)
    block0 = hashlib.sha256(b"RANET-H3" + (330).to_bytes(2, "big") + (0).to_bytes(4, "big")).digest()
    block1 = hashlib.sha256(b"RANET-H3" + (330).to_bytes(2, "big") + (1).to_bytes(4, "big")).digest()
    assert ks[:64] == block0 + block1
    assert len(h3_expand(y)) == params.n // 8
    with pytest.raises(ValueError):
        h3_expand(y, 0)


def test_h3_first_blocks_distinct_over_subgroup(params):
    ys = {pow(params.g, k, params.p) for k in range(Q)}
    blocks = {h3_expand(VElement(params, y), 32) for y in ys}
    assert len(blocks) == Q


def test_random_scalar(params):
    a = [random_scalar(params, random.Random(9)).value for _ in range(3)]
    r1, r2 = random.Random(9), random.Random(9)
    assert [random_scalar(params, r1) for _ in range(50)] == [random_scalar(params, r2) for _ in range(50)]
    rng = random.Random(11)
    draws = [random_scalar(params, rng).value for _ in range(10 * Q)]
    assert all(1 <= d < Q for d in draws)
    assert set(draws) == set(range(1, Q))
    assert len(set(a)) == 1


@given(st.integers(min_value=0, max_value=Q - 1))
def test_serialization_round_trip(v):
    params = default_params()
    for cls in (GElement, Scalar):
        x = cls(params, v)
        data = x.to_bytes()
        assert len(data) == 1
        assert cls.from_bytes(params, data) == x
    y = VElement(params, pow(params.g, v, params.p))
    assert len(y.to_bytes()) == 2
    assert VElement.from_bytes(params, y.to_bytes()) == y


def test_decode_errors(params):
    with pytest.raises(DecodeError):
        GElement.from_bytes(params, b"\x65")  # 101 is out of range
    with pytest.raises(DecodeError):
        GElement.from_bytes(params, b"\x01\x02")
    with pytest.raises(DecodeError):
        VElement.from_bytes(params, (2).to_bytes(2, "big"))


def test_wide_params_serialization(wide):
    assert wide.scalar_len == 8
    assert wide.v_len == 9
    x = GElement(wide, 2**60 + 5)
    assert GElement.from_bytes(wide, x.to_bytes()) == x


def test_load_params_round_trip(params):
    assert load_params(params.to_config()) == params
    text = "# desk scale\nq: 101\np = 607\nbackend = exponent\n"
    assert load_params(text) == params
    with pytest.raises(InvalidParamsError):
        load_params("q = 101\n")
    with pytest.raises(InvalidParamsError):
        load_params("q = 101\np = 607\ncolour = blue\n")
    with pytest.raises(InvalidParamsError):
        load_params("q = 101\np = 607\nbackend = quantum\n")


def test_load_params_from_file(tmp_path, params):
    path = tmp_path / "group.conf"
    path.write_text(params.to_config())
    assert load_params(path) == params
