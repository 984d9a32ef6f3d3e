import math
import random
import struct

import pytest

from numsim.wire_codec import (CODE_PRICE, CODE_RESPONSE, FRAME_LEN, MSG_TYPE,
                               CodecError, PriceMessage, checksum, decode,
                               encode, hex_dump)


def random_message(rng):
    return PriceMessage(
        code=rng.choice((CODE_PRICE, CODE_RESPONSE)),
        identifier=rng.randrange(0x10000),
        sequence=rng.randrange(0x10000),
        timestamp=rng.randrange(0x100000000),
        payload=rng.uniform(-1e6, 1e6))


def test_checksum_all_zero_frame():
    assert checksum(bytes(20)) == 0xFFFF


def test_checksum_known_vector():
    # frozen oracle for the 8-byte sequence 00 01 f2 03 f4 f5 f6 f7
    data = bytes.fromhex("0001f203f4f5f6f7")
    assert checksum(data) == 0x220D


def test_checksum_odd_length_padding():
    assert checksum(b"\x00\x01\x02") == checksum(b"\x00\x01\x02\x00")


def test_checksum_self_consistency():
    # summing a frame over its embedded checksum yields all ones
    frame = encode(PriceMessage(CODE_PRICE, 7, 3, 1000, 0.125))
    total = 0
    for i in range(0, FRAME_LEN, 2):
        total += (frame[i] << 8) | frame[i + 1]
        total = (total & 0xFFFF) + (total >> 16)
    assert total == 0xFFFF


def test_encode_layout():
    frame = encode(PriceMessage(CODE_PRICE, 0x0102, 0x0304, 0x05060708, 1.5))
    assert len(frame) == FRAME_LEN
    assert frame[0] == MSG_TYPE
    assert frame[1] == CODE_PRICE
    assert frame[4:6] == b"\x01\x02"
    assert frame[6:8] == b"\x03\x04"
    assert frame[8:12] == b"\x05\x06\x07\x08"
    assert frame[12:] == struct.pack(">d", 1.5)
    response = encode(PriceMessage(CODE_RESPONSE, 0, 0, 0, 0.0))
    assert response[1] == CODE_RESPONSE


def test_roundtrip_identity():
    rng = random.Random(11)
    for _ in range(2000):
        msg = random_message(rng)
        assert decode(encode(msg)) == msg


def test_roundtrip_payload_bit_exact():
    for payload in (0.0, -0.0, 1e-300, -1e300, math.pi, 5.0e-324):
        frame = encode(PriceMessage(CODE_PRICE, 1, 2, 3, payload))
        out = decode(frame).payload
        assert struct.pack(">d", out) == struct.pack(">d", payload)


def test_encode_validation():
    with pytest.raises(CodecError):
        encode(PriceMessage(2, 0, 0, 0, 0.0))
    with pytest.raises(CodecError):
        encode(PriceMessage(CODE_PRICE, -1, 0, 0, 0.0))
    with pytest.raises(CodecError):
        encode(PriceMessage(CODE_PRICE, 0x10000, 0, 0, 0.0))
    with pytest.raises(CodecError):
        encode(PriceMessage(CODE_PRICE, 0, 0x10000, 0, 0.0))
    with pytest.raises(CodecError):
        encode(PriceMessage(CODE_PRICE, 0, 0, -5, 0.0))
    with pytest.raises(CodecError):
        encode(PriceMessage(CODE_PRICE, 0, 0, 0x100000000, 0.0))
    with pytest.raises(CodecError):
        encode(PriceMessage(CODE_PRICE, 0, 0, 0, math.nan))
    with pytest.raises(CodecError):
        encode(PriceMessage(CODE_PRICE, 0, 0, 0, math.inf))
    with pytest.raises(CodecError):
        encode(PriceMessage(CODE_PRICE, 0, 0, 0, 0.0, msg_type=3))


def test_decode_wrong_length():
    with pytest.raises(CodecError, match="20 bytes"):
        decode(bytes(19))
    with pytest.raises(CodecError, match="20 bytes"):
        decode(bytes(21))


def test_decode_checksum_mismatch():
    frame = bytearray(encode(PriceMessage(CODE_PRICE, 1, 2, 3, 4.0)))
    frame[2] ^= 0x01
    with pytest.raises(CodecError, match="checksum"):
        decode(bytes(frame))


def _frame_with_fields(msg_type, code):
    # build a frame with a valid checksum but arbitrary type/code bytes
    body = struct.pack(">BBHHHId", msg_type, code, 0, 1, 2, 3, 4.0)
    cks = checksum(body)
    return body[:2] + struct.pack(">H", cks) + body[4:]


def test_decode_rejects_bad_type_and_code():
    with pytest.raises(CodecError, match="unexpected type"):
        decode(_frame_with_fields(2, CODE_PRICE))
    with pytest.raises(CodecError, match="unexpected code"):
        decode(_frame_with_fields(MSG_TYPE, 2))


def test_single_byte_corruption_detected():
    rng = random.Random(13)
    frame = encode(PriceMessage(CODE_RESPONSE, 77, 88, 99, 3.25))
    for pos in range(FRAME_LEN):
        corrupted = bytearray(frame)
        corrupted[pos] ^= rng.randrange(1, 256)
        with pytest.raises(CodecError):
            decode(bytes(corrupted))


def test_hex_dump():
    frame = encode(PriceMessage(CODE_PRICE, 1, 2, 3, 4.0))
    text = hex_dump(frame)
    assert len(text) == 2 * FRAME_LEN
    assert text == frame.hex()
    assert text == text.lower()
