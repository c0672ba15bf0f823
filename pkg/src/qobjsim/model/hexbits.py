"""Memory-slot bit lists to and from the hex strings used in counts and memory."""

from __future__ import annotations


def encode_hex(bits) -> str:
    """Slot 0 is the least-significant bit; output is unpadded uppercase hex."""
    if len(bits) < 1:
        raise ValueError("need at least one slot")
    value = 0
    for i, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError(f"slot {i} holds {b!r}, not a bit")
        value |= b << i
    return f"0x{value:X}"


def decode_hex(text: str, n_slots: int) -> list[int]:
    """Inverse of :func:`encode_hex`; accepts any width and case."""
    value = int(text, 16)
    if value >> n_slots:
        raise ValueError(f"{text} does not fit in {n_slots} slots")
    return [(value >> i) & 1 for i in range(n_slots)]


def hex_value(text: str) -> int:
    return int(text, 16)
