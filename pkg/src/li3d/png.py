"""Minimal PNG encoding: 8-bit RGBA, no interlace, filter 0 on every scanline.

Byte-deterministic for a given pixel buffer; no external imaging dependency.
"""
from __future__ import annotations

import struct
import zlib

_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(tag: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def encode_rgba(width: int, height: int, pixels: bytes) -> bytes:
    """Encode a row-major RGBA8 buffer (len == width * height * 4) as PNG bytes."""
    if len(pixels) != width * height * 4:
        raise ValueError(f"pixel buffer is {len(pixels)} bytes, expected {width * height * 4}")
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 6, 0, 0, 0)
    stride = width * 4
    raw = bytearray()
    for y in range(height):
        raw.append(0)
        raw += pixels[y * stride:(y + 1) * stride]
    idat = zlib.compress(bytes(raw), 9)
    return _SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")
