"""Chain sizing and next-hop routing for a base-station-rooted robot chain."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Collection, Sequence

BASE_STATION_ID = "BS"
DEFAULT_RADIO_RANGE = 100.0


class InvalidPlanError(ValueError):
    pass


class RoutingError(LookupError):
    pass


def _exact(x) -> Fraction:
    # str() round-trips floats by their shortest repr, so 0.3 stays 3/10
    return Fraction(str(x)) if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True)
class ChainPlan:
    target_distance: float
    radio_range: float
    node_count: int
    node_positions: tuple[float, ...]

    def __post_init__(self):
        if self.node_count != len(self.node_positions):
            raise InvalidPlanError("node_count does not match positions")
        prev = 0.0
        for pos in self.node_positions:
            if pos <= prev:
                raise InvalidPlanError("positions must be strictly increasing")
            gap = pos - prev
            if gap > self.radio_range and not math.isclose(gap, self.radio_range, rel_tol=1e-12):
                raise InvalidPlanError(f"gap {gap} exceeds radio range {self.radio_range}")
            prev = pos

    @property
    def node_ids(self) -> list[str]:
        return [f"node{i}" for i in range(1, self.node_count + 1)]


def plan_chain(distance: float, radio_range: float = DEFAULT_RADIO_RANGE) -> ChainPlan:
    """Number and placement of relay robots needed to reach ``distance``.

    One node per radio range, the last one parked at the target:

    >>> plan_chain(500, 100).node_count
    5
    >>> plan_chain(250, 100).node_positions
    (100.0, 200.0, 250.0)
    """
    if not distance > 0 or not radio_range > 0:
        raise InvalidPlanError(f"distance and range must be positive (got {distance}, {radio_range})")
    count = math.ceil(_exact(distance) / _exact(radio_range))
    positions = tuple(float(min(i * _exact(radio_range), _exact(distance))) for i in range(1, count + 1))
    return ChainPlan(float(distance), float(radio_range), count, positions)


def route_next_hop(order: Sequence[str], joined: Collection[str], src: str, dst: str) -> str:
    """One step along ``order`` (base station first) from ``src`` toward ``dst``."""
    for end in (src, dst):
        if end not in joined:
            raise RoutingError(f"{end!r} has not joined the network")
    try:
        i, j = order.index(src), order.index(dst)
    except ValueError as exc:
        raise RoutingError(str(exc)) from None
    if i == j:
        raise RoutingError(f"{src!r} is already the destination")
    return order[i + 1] if j > i else order[i - 1]
