"""Electrical arithmetic for the robot's serial link."""

from __future__ import annotations

RPI_RX_MAX_VOLTS = 3.3


class UndefinedDividerError(ValueError):
    pass


def voltage_divider(v_in: float, r1: float, r2: float) -> float:
    """Output of a resistive divider: ``r2 / (r1 + r2) * v_in``."""
    if r1 < 0 or r2 < 0:
        raise ValueError("resistances must be non-negative")
    if r1 + r2 == 0:
        raise UndefinedDividerError("r1 + r2 must be positive")
    # multiply first: 5 V at a 0.66 ratio must land on 3.3 exactly, not 3.3000000000000003
    return v_in * r2 / (r1 + r2)


def rx_level_ok(v_out: float, limit: float = RPI_RX_MAX_VOLTS) -> bool:
    """Strict audit against the receive-pin ceiling; no rounding slack."""
    return v_out <= limit
