"""Class-B address pool with a reserved block for robot interfaces.

Offsets are relative to the network base. Offset 0 belongs to the base
station and the top offset is broadcast; the 65534 offsets in between are
allocatable. Robot interfaces draw first-fit from the reserved block just
above the base station, end devices from everything after it.
"""

from __future__ import annotations

import enum
import heapq
import ipaddress
from typing import Hashable, Union

DEFAULT_NETWORK = "172.16.0.0/16"
DEFAULT_RESERVED_NODE_ADDRESSES = 512


class PoolExhaustedError(RuntimeError):
    pass


class AddressKind(enum.Enum):
    NODE_INTERFACE = "NodeInterface"
    END_DEVICE = "EndDevice"


class _Range:
    """First-fit allocator over ``[lo, hi]`` that reuses released offsets."""

    def __init__(self, lo: int, hi: int):
        self.lo, self.hi = lo, hi
        self._next = lo
        self._freed: list[int] = []

    def take(self) -> int | None:
        if self._freed:
            return heapq.heappop(self._freed)
        if self._next > self.hi:
            return None
        self._next += 1
        return self._next - 1

    def give_back(self, offset: int):
        heapq.heappush(self._freed, offset)

    def __contains__(self, offset: int) -> bool:
        return self.lo <= offset <= self.hi

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1


class AddressPool:
    def __init__(
        self,
        network: Union[str, ipaddress.IPv4Network] = DEFAULT_NETWORK,
        reserved_nodes: int = DEFAULT_RESERVED_NODE_ADDRESSES,
    ):
        net = ipaddress.IPv4Network(network)
        if net.prefixlen != 16:
            raise ValueError(f"{net} is not a /16 network")
        if not 128 <= int(net.network_address) >> 24 <= 191:
            raise ValueError(f"{net} is outside the class-B range 128.0.0.0-191.255.0.0")
        self.network = net
        top = net.num_addresses - 1
        if not 0 < reserved_nodes < top - 1:
            raise ValueError("reserved node block must leave room for end devices")
        self._nodes = _Range(1, reserved_nodes)
        self._devices = _Range(reserved_nodes + 1, top - 1)
        self.allocations: dict[ipaddress.IPv4Address, Hashable] = {}

    @property
    def base_station_address(self) -> ipaddress.IPv4Address:
        return self.network.network_address

    @property
    def broadcast_address(self) -> ipaddress.IPv4Address:
        return self.network.broadcast_address

    @property
    def capacity(self) -> int:
        return self._nodes.size + self._devices.size

    @property
    def reserved_node_range(self) -> tuple[ipaddress.IPv4Address, ipaddress.IPv4Address]:
        base = self.network.network_address
        return base + self._nodes.lo, base + self._nodes.hi

    def __len__(self):
        return len(self.allocations)

    def allocate(self, owner: Hashable, kind: AddressKind) -> ipaddress.IPv4Address:
        block = self._nodes if kind is AddressKind.NODE_INTERFACE else self._devices
        offset = block.take()
        if offset is None:
            raise PoolExhaustedError(f"no free {kind.value} addresses in {self.network}")
        addr = self.network.network_address + offset
        assert addr not in self.allocations
        self.allocations[addr] = owner
        return addr

    def release(self, addr: ipaddress.IPv4Address):
        owner = self.allocations.pop(addr)  # KeyError on unknown address is intended
        offset = int(addr) - int(self.network.network_address)
        (self._nodes if offset in self._nodes else self._devices).give_back(offset)
        return owner

    def is_node_address(self, addr: ipaddress.IPv4Address) -> bool:
        return (int(addr) - int(self.network.network_address)) in self._nodes


def allocate_address(pool: AddressPool, owner: Hashable, kind: AddressKind) -> ipaddress.IPv4Address:
    return pool.allocate(owner, kind)
