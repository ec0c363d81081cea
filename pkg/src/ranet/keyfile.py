"""Line-oriented hex key files.

The first line names the file type; ``#`` lines are comments. Every other
line is ``name value`` with integers and byte strings in hex. Group
parameters travel with the key so a file is usable on its own::

    RANET-IDENTITY-KEY v1
    # WARNING: ...
    backend exponent
    q 65
    ...
"""

from __future__ import annotations

from pathlib import Path

from .bilinear import Backend, GElement, GroupParams, Scalar
from .ibsc import IdentityKeyPair, MasterKeyPair

MASTER_TAG = "RANET-MASTER-KEY v1"
IDENTITY_TAG = "RANET-IDENTITY-KEY v1"
WARNING = "# WARNING: secret key material. Hand over out of band only; never commit or transmit in clear."


class KeyFileError(ValueError):
    pass


def _param_lines(params: GroupParams) -> list[str]:
    return [
        f"backend {params.backend.value}",
        f"q {params.q:x}",
        f"p {params.p:x}",
        f"g {params.g:x}",
        f"n {params.n:x}",
    ]


def _parse(text: str, tag: str) -> dict[str, str]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != tag:
        raise KeyFileError(f"expected header {tag!r}")
    fields = {}
    for line in lines[1:]:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, value = line.partition(" ")
        fields[name] = value.strip()
    return fields


def _params_from(fields: dict[str, str]) -> GroupParams:
    try:
        return GroupParams(
            q=int(fields["q"], 16),
            p=int(fields["p"], 16),
            g=int(fields["g"], 16),
            n=int(fields["n"], 16),
            backend=Backend(fields["backend"]),
        )
    except (KeyError, ValueError) as exc:
        raise KeyFileError(f"bad group parameters: {exc}") from None


def dump_master(master: MasterKeyPair) -> str:
    lines = [MASTER_TAG, WARNING, *_param_lines(master.params),
             f"secret {master.secret.value:x}", f"public {master.public.value:x}"]
    return "\n".join(lines) + "\n"


def load_master(text: str) -> MasterKeyPair:
    f = _parse(text, MASTER_TAG)
    params = _params_from(f)
    try:
        return MasterKeyPair(Scalar(params, int(f["secret"], 16)), GElement(params, int(f["public"], 16)))
    except (KeyError, ValueError) as exc:
        raise KeyFileError(f"bad master key: {exc}") from None


def dump_identity(keys: IdentityKeyPair, master_public: GElement) -> str:
    lines = [IDENTITY_TAG, WARNING, *_param_lines(keys.params),
             f"master_public {master_public.value:x}",
             f"id {keys.id.hex()}", f"q_id {keys.q_id.value:x}", f"s_id {keys.s_id.value:x}"]
    return "\n".join(lines) + "\n"


def load_identity(text: str) -> tuple[IdentityKeyPair, GElement]:
    f = _parse(text, IDENTITY_TAG)
    params = _params_from(f)
    try:
        keys = IdentityKeyPair(
            id=bytes.fromhex(f["id"]),
            q_id=GElement(params, int(f["q_id"], 16)),
            s_id=GElement(params, int(f["s_id"], 16)),
        )
        return keys, GElement(params, int(f["master_public"], 16))
    except (KeyError, ValueError) as exc:
        raise KeyFileError(f"bad identity key: {exc}") from None


def read(path) -> str:
    return Path(path).read_text()
