"""Bit-exact codec for the ICMP-style price notification and response frames.

Frame layout (20 bytes, all multi-byte fields big-endian):
    0     type (always 1)
    1     code (0 = price notification, 1 = bandwidth response)
    2-3   internet checksum over the whole frame
    4-5   identifier
    6-7   sequence number
    8-11  timestamp, unsigned milliseconds
    12-19 payload, IEEE-754 binary64 (link price or bandwidth request)
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

MSG_TYPE = 1
CODE_PRICE = 0
CODE_RESPONSE = 1
FRAME_LEN = 20

_STRUCT = struct.Struct(">BBHHHId")


class CodecError(ValueError):
    """Malformed frame: bad length, checksum, type or code."""


@dataclass(frozen=True)
class PriceMessage:
    code: int
    identifier: int
    sequence: int
    timestamp: int
    payload: float
    msg_type: int = MSG_TYPE


def checksum(data: bytes) -> int:
    """Standard internet checksum: ones' complement of the folded
    ones'-complement sum of 16-bit big-endian words. Odd-length input is
    padded with a zero byte."""
    if len(data) % 2:
        data = data + b"\x00"
    total = 0
    for i in range(0, len(data), 2):
        total += (data[i] << 8) | data[i + 1]
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def encode(msg: PriceMessage) -> bytes:
    """Serialize a message to its 20-byte frame, checksum filled in."""
    if msg.msg_type != MSG_TYPE:
        raise CodecError(f"type must be {MSG_TYPE}")
    if msg.code not in (CODE_PRICE, CODE_RESPONSE):
        raise CodecError(f"code must be 0 or 1, got {msg.code}")
    if not 0 <= msg.identifier <= 0xFFFF or not 0 <= msg.sequence <= 0xFFFF:
        raise CodecError("identifier and sequence must fit 16 bits")
    if not 0 <= msg.timestamp <= 0xFFFFFFFF:
        raise CodecError("timestamp must fit 32 bits")
    if not math.isfinite(msg.payload):
        raise CodecError("payload must be finite")
    frame = _STRUCT.pack(msg.msg_type, msg.code, 0, msg.identifier,
                         msg.sequence, msg.timestamp, msg.payload)
    cks = checksum(frame)
    return frame[:2] + struct.pack(">H", cks) + frame[4:]


def decode(data: bytes) -> PriceMessage:
    """Parse and verify a 20-byte frame."""
    if len(data) != FRAME_LEN:
        raise CodecError(f"frame must be {FRAME_LEN} bytes, got {len(data)}")
    msg_type, code, cks, ident, seq, ts, payload = _STRUCT.unpack(data)
    zeroed = data[:2] + b"\x00\x00" + data[4:]
    if checksum(zeroed) != cks:
        raise CodecError("checksum mismatch")
    if msg_type != MSG_TYPE:
        raise CodecError(f"unexpected type {msg_type}")
    if code not in (CODE_PRICE, CODE_RESPONSE):
        raise CodecError(f"unexpected code {code}")
    return PriceMessage(code=code, identifier=ident, sequence=seq,
                        timestamp=ts, payload=payload)


def hex_dump(frame: bytes) -> str:
    """Canonical lowercase hex rendering of a frame."""
    return frame.hex()
